"""Pretty printer; ``parse(pretty(doc)) == doc`` for every document."""
from __future__ import annotations

from typing import List

from . import ast as A

# binding strength, higher binds tighter
_PREC = {"?": 1, "==>": 2, "||": 3, "&&": 4,
         "==": 5, "!=": 5, "<": 5, "<=": 5, ">": 5, ">=": 5,
         "+": 6, "-": 6, "*": 7}
_UNARY = 8
_ATOM = 9


def _prec(e: A.Expr) -> int:
    if isinstance(e, A.Forall):
        return 0
    if isinstance(e, A.Cond):
        return 1
    if isinstance(e, A.Binary):
        return _PREC[e.op]
    if isinstance(e, A.Unary):
        return _UNARY
    return _ATOM


def expr(e: A.Expr) -> str:
    if isinstance(e, A.IntLit):
        return str(e.value)
    if isinstance(e, A.BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, A.NullLit):
        return "null"
    if isinstance(e, A.Name):
        return e.ident
    if isinstance(e, A.SelfRef):
        return "self"
    if isinstance(e, A.Now):
        return "T"
    if isinstance(e, A.Delta):
        return "dT"
    if isinstance(e, A.Elapsed):
        return f"elapsed({e.name})"
    if isinstance(e, A.Field):
        return f"{_wrap(e.base, _ATOM)}.{e.name}"
    if isinstance(e, A.Index):
        return f"{_wrap(e.base, _ATOM)}[{expr(e.index)}]"
    if isinstance(e, (A.Old, A.Unchanged, A.Inv2, A.Mine, A.Closed)):
        kw = type(e).__name__.lower()
        return f"{kw}({expr(e.expr)})"
    if isinstance(e, A.Unary):
        return f"{e.op}{_wrap(e.expr, _UNARY)}"
    if isinstance(e, A.Binary):
        p = _PREC[e.op]
        if e.op == "==>":
            # right associative
            return f"{_wrap(e.left, p + 1)} ==> {_wrap(e.right, p)}"
        if p == 5:
            return f"{_wrap(e.left, p + 1)} {e.op} {_wrap(e.right, p + 1)}"
        return f"{_wrap(e.left, p)} {e.op} {_wrap(e.right, p + 1)}"
    if isinstance(e, A.Cond):
        return f"{_wrap(e.test, 2)} ? {expr(e.then)} : {expr(e.other)}"
    if isinstance(e, A.Forall):
        return f"forall {e.var}: {expr(e.body)}"
    raise TypeError(f"not an expression: {e!r}")


def _wrap(e: A.Expr, need: int) -> str:
    s = expr(e)
    return f"({s})" if _prec(e) < need else s


def _field(f: A.FieldDecl) -> str:
    parts = []
    if f.volatile:
        parts.append("volatile")
    if f.ghost:
        parts.append("ghost")
    parts.append(f"objref<{f.ref_type}>" if f.ref_type else f.sort)
    parts.append(f.name)
    s = " ".join(parts)
    if f.lo is not None:
        s += f" in {f.lo}..{f.hi}"
    return s + ";"


def type_decl(t: A.TypeDecl) -> List[str]:
    head = f"type {t.name}" + (" timed" if t.timed else "") + " {"
    lines = [head]
    lines += [f"  {_field(f)}" for f in t.fields]
    lines += [f"  invariant {expr(e)};" for e in t.invariants]
    lines += [f"  approves(owner, {a});" for a in t.approvals]
    lines += [f"  on_unwrap {expr(e)};" for e in t.on_unwrap]
    lines += [f"  dynamics {f} = {expr(e)};" for f, e in t.dynamics]
    lines.append("}")
    return lines


def _literal(v) -> str:
    if v is None:
        return "null"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, A.Name):
        return v.ident
    return str(v)


def object_decl(o: A.ObjectDecl, indent: str = "") -> List[str]:
    lines = [f"{indent}object {o.name}: {o.type} {{"]
    for i in o.inits:
        if i.kind == "range":
            lines.append(f"{indent}  {i.field} in {i.lo}..{i.hi};")
        elif i.kind == "any":
            lines.append(f"{indent}  {i.field} = any;")
        else:
            lines.append(f"{indent}  {i.field} = {_literal(i.value)};")
    lines.append(f"{indent}}}")
    return lines


def stmts(body, indent: str) -> List[str]:
    out: List[str] = []
    for s in body:
        out += stmt(s, indent)
    return out


def stmt(s: A.Stmt, indent: str) -> List[str]:
    if isinstance(s, A.Atomic):
        return [f"{indent}atomic {{", *stmts(s.body, indent + "  "), f"{indent}}}"]
    if isinstance(s, A.Assign):
        return [f"{indent}{expr(s.target)} := {expr(s.expr)};"]
    if isinstance(s, A.Wrap):
        return [f"{indent}wrap {s.obj};"]
    if isinstance(s, A.Unwrap):
        return [f"{indent}unwrap {s.obj};"]
    if isinstance(s, A.Bump):
        return [f"{indent}bump_volatile_version {s.obj};"]
    if isinstance(s, A.Own):
        return [f"{indent}own({s.owner}, {s.child});"]
    if isinstance(s, A.Assume):
        return [f"{indent}assume {expr(s.expr)};"]
    if isinstance(s, A.Assert):
        return [f"{indent}assert {expr(s.expr)};"]
    if isinstance(s, A.Record):
        return [f"{indent}timer_record {s.name};"]
    if isinstance(s, A.Primitive):
        args = s.target if s.delta is None else f"{s.target}, {s.delta}"
        return [f"{indent}{s.op}({args});"]
    if isinstance(s, A.Loop):
        head = f"{indent}loop {s.bound}"
        if s.invariant is not None:
            head += f" invariant {expr(s.invariant)}"
        if s.writes:
            head += " writes " + ", ".join(s.writes)
        return [head + " {", *stmts(s.body, indent + "  "), f"{indent}}}"]
    raise TypeError(f"not a statement: {s!r}")


def document(doc: A.Document) -> str:
    lines: List[str] = []
    for t in doc.types:
        lines += type_decl(t) + [""]
    for o in doc.objects:
        lines += object_decl(o) + [""]
    for th in doc.threads:
        lines += [f"thread {th.name} {{", *stmts(th.body, "  "), "}", ""]
    for u in doc.universes:
        lines.append(f"universe {u.name} {{")
        lines += [f"  thread {t};" for t in u.threads]
        for o in u.objects:
            lines += object_decl(o, "  ")
        lines += ["}", ""]
    return "\n".join(lines)
