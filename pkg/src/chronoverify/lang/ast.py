"""Syntax tree for the ``.tvk`` model language.

Nodes are frozen dataclasses. Source positions are carried in ``pos`` but
excluded from equality, so a pretty-printed and re-parsed document compares
equal to the original.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Tuple, Union

Pos = Tuple[int, int]
NOPOS: Pos = (0, 0)


def _pos():
    return field(default=NOPOS, compare=False, repr=False)


# -- expressions -------------------------------------------------------------

@dataclass(frozen=True)
class IntLit:
    value: int
    pos: Pos = _pos()


@dataclass(frozen=True)
class BoolLit:
    value: bool
    pos: Pos = _pos()


@dataclass(frozen=True)
class NullLit:
    pos: Pos = _pos()


@dataclass(frozen=True)
class Name:
    """A bare identifier: a field of ``self``, an object, or a bound variable."""
    ident: str
    pos: Pos = _pos()


@dataclass(frozen=True)
class SelfRef:
    pos: Pos = _pos()


@dataclass(frozen=True)
class Field:
    base: "Expr"
    name: str
    pos: Pos = _pos()


@dataclass(frozen=True)
class Index:
    base: "Expr"
    index: "Expr"
    pos: Pos = _pos()


@dataclass(frozen=True)
class Old:
    expr: "Expr"
    pos: Pos = _pos()


@dataclass(frozen=True)
class Unchanged:
    expr: "Expr"
    pos: Pos = _pos()


@dataclass(frozen=True)
class Inv2:
    expr: "Expr"
    pos: Pos = _pos()


@dataclass(frozen=True)
class Mine:
    expr: "Expr"
    pos: Pos = _pos()


@dataclass(frozen=True)
class Closed:
    expr: "Expr"
    pos: Pos = _pos()


@dataclass(frozen=True)
class Elapsed:
    """``elapsed(name)``: current time minus a recorded timer stamp."""
    name: str
    pos: Pos = _pos()


@dataclass(frozen=True)
class Now:
    pos: Pos = _pos()


@dataclass(frozen=True)
class Delta:
    pos: Pos = _pos()


@dataclass(frozen=True)
class Unary:
    op: str
    expr: "Expr"
    pos: Pos = _pos()


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"
    pos: Pos = _pos()


@dataclass(frozen=True)
class Cond:
    test: "Expr"
    then: "Expr"
    other: "Expr"
    pos: Pos = _pos()


@dataclass(frozen=True)
class Forall:
    var: str
    body: "Expr"
    pos: Pos = _pos()


Expr = Union[IntLit, BoolLit, NullLit, Name, SelfRef, Field, Index, Old, Unchanged,
             Inv2, Mine, Closed, Elapsed, Now, Delta, Unary, Binary, Cond, Forall]


def children(e: Expr) -> Tuple[Expr, ...]:
    if isinstance(e, (Field, Old, Unchanged, Inv2, Mine, Closed)):
        return ((e.base,) if isinstance(e, Field) else (e.expr,))
    if isinstance(e, Index):
        return (e.base, e.index)
    if isinstance(e, Unary):
        return (e.expr,)
    if isinstance(e, Binary):
        return (e.left, e.right)
    if isinstance(e, Cond):
        return (e.test, e.then, e.other)
    if isinstance(e, Forall):
        return (e.body,)
    return ()


def walk(e: Expr):
    yield e
    for c in children(e):
        yield from walk(c)


def conjuncts(e: Expr):
    if isinstance(e, Binary) and e.op == "&&":
        yield from conjuncts(e.left)
        yield from conjuncts(e.right)
    else:
        yield e


def conjoin(parts) -> Optional[Expr]:
    parts = list(parts)
    if not parts:
        return None
    out = parts[0]
    for p in parts[1:]:
        out = Binary("&&", out, p)
    return out


# -- statements --------------------------------------------------------------

@dataclass(frozen=True)
class Atomic:
    body: Tuple["Stmt", ...]
    pos: Pos = _pos()


@dataclass(frozen=True)
class Assign:
    target: Field
    expr: Expr
    pos: Pos = _pos()


@dataclass(frozen=True)
class Wrap:
    obj: str
    pos: Pos = _pos()


@dataclass(frozen=True)
class Unwrap:
    obj: str
    pos: Pos = _pos()


@dataclass(frozen=True)
class Own:
    """``own(owner, child)``: hand ``child`` over to the open object ``owner``."""
    owner: str
    child: str
    pos: Pos = _pos()


@dataclass(frozen=True)
class Assume:
    expr: Expr
    pos: Pos = _pos()


@dataclass(frozen=True)
class Assert:
    expr: Expr
    pos: Pos = _pos()


@dataclass(frozen=True)
class Loop:
    bound: int
    invariant: Optional[Expr]
    writes: Tuple[str, ...]
    body: Tuple["Stmt", ...]
    pos: Pos = _pos()


PRIMITIVES = ("deadline_new", "deadline_reset", "deadline_destroy",
              "timer_new", "timer_reset", "timer_destroy")


@dataclass(frozen=True)
class Primitive:
    op: str
    target: str
    delta: Optional[int] = None
    pos: Pos = _pos()


@dataclass(frozen=True)
class Record:
    name: str
    pos: Pos = _pos()


@dataclass(frozen=True)
class Bump:
    """``bump_volatile_version``; a framing annotation with no effect here."""
    obj: str
    pos: Pos = _pos()


Stmt = Union[Atomic, Assign, Wrap, Unwrap, Own, Assume, Assert, Loop, Primitive,
             Record, Bump]


# -- declarations ------------------------------------------------------------

SORTS = ("int", "bool", "objref", "objset", "instant")


@dataclass(frozen=True)
class FieldDecl:
    name: str
    sort: str
    volatile: bool = False
    ghost: bool = False
    lo: Optional[int] = None
    hi: Optional[int] = None
    ref_type: Optional[str] = None
    pos: Pos = _pos()


@dataclass(frozen=True)
class Clause:
    """One conjunct of an expanded two-state invariant."""
    kind: str  # user | timed | approval | on_unwrap
    text: str
    expr: Optional[Expr] = None
    field: Optional[str] = None


@dataclass(frozen=True)
class TypeDecl:
    name: str
    timed: bool = False
    fields: Tuple[FieldDecl, ...] = ()
    invariants: Tuple[Expr, ...] = ()
    approvals: Tuple[str, ...] = ()
    on_unwrap: Tuple[Expr, ...] = ()
    dynamics: Tuple[Tuple[str, Expr], ...] = ()
    clauses: Tuple[Clause, ...] = field(default=(), compare=False, repr=False)
    pos: Pos = _pos()

    def field_decl(self, name: str) -> Optional[FieldDecl]:
        for f in self.fields:
            if f.name == name:
                return f
        return None


@dataclass(frozen=True)
class Init:
    """Initial value of a field: ``f = lit``, ``f in lo..hi`` or ``f = any``."""
    field: str
    kind: str  # value | range | any
    value: object = None
    lo: Optional[int] = None
    hi: Optional[int] = None
    pos: Pos = _pos()


@dataclass(frozen=True)
class ObjectDecl:
    name: str
    type: str
    inits: Tuple[Init, ...] = ()
    pos: Pos = _pos()


@dataclass(frozen=True)
class ThreadDecl:
    name: str
    body: Tuple[Stmt, ...] = ()
    pos: Pos = _pos()


@dataclass(frozen=True)
class UniverseDecl:
    """A small closed world used for brute-force admissibility checks."""
    name: str
    objects: Tuple[ObjectDecl, ...] = ()
    threads: Tuple[str, ...] = ()
    pos: Pos = _pos()


@dataclass(frozen=True)
class Document:
    types: Tuple[TypeDecl, ...] = ()
    objects: Tuple[ObjectDecl, ...] = ()
    threads: Tuple[ThreadDecl, ...] = ()
    universes: Tuple[UniverseDecl, ...] = ()
