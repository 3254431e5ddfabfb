"""Expansion of the fixed macro forms into invariant clauses.

* a ``timed`` type gains ``closed(self) ==> time.timed[self]``;
* ``approves(owner, f)`` becomes an approval clause, evaluated by the kernel
  against the acting thread or the owning object's invariant;
* ``on_unwrap P`` is kept as a clause that only fires on closed->open edges;
* ``unchanged(e)`` is rewritten to ``old(e) == e`` everywhere.
"""
from __future__ import annotations

from dataclasses import fields, is_dataclass, replace

from . import ast as A
from . import diagnostics as dg
from . import printer

TIMED_TEXT = "closed(self) ==> time.timed[self]"
TIMED_EXPR = A.Binary("==>", A.Closed(A.SelfRef()),
                      A.Index(A.Field(A.Name("time"), "timed"), A.SelfRef()))


def desugar(e: A.Expr) -> A.Expr:
    if isinstance(e, A.Unchanged):
        inner = desugar(e.expr)
        return A.Binary("==", A.Old(inner), inner, pos=e.pos)
    if not is_dataclass(e):
        return e
    changes = {}
    for f in fields(e):
        v = getattr(e, f.name)
        if is_dataclass(v) and not isinstance(v, type):
            nv = desugar(v)
            if nv is not v:
                changes[f.name] = nv
    return replace(e, **changes) if changes else e


def expand_macros(decl: A.TypeDecl) -> A.TypeDecl:
    """Return ``decl`` with its ``clauses`` populated."""
    clauses = []
    if decl.timed:
        clauses.append(A.Clause("timed", TIMED_TEXT, TIMED_EXPR))
    for e in decl.invariants:
        clauses.append(A.Clause("user", printer.expr(e), desugar(e)))
    for f in decl.approvals:
        fd = decl.field_decl(f)
        if fd is None or not fd.volatile:
            line, col = fd.pos if fd else decl.pos
            raise dg.ModelError([dg.Diagnostic(
                dg.APPROVAL, line, col, f"approval on nonvolatile field {f!r}")])
        clauses.append(A.Clause("approval", f"approves(owner, {f})", field=f))
    for e in decl.on_unwrap:
        clauses.append(A.Clause("on_unwrap", f"on_unwrap {printer.expr(e)}", desugar(e)))
    dyn = tuple((f, desugar(e)) for f, e in decl.dynamics)
    return replace(decl, dynamics=dyn, clauses=tuple(clauses))
