"""Name resolution and sort checking.

The checker works on a Document that already contains the built-in types
and the ``time`` object. It reports every problem it can find (capped by
``MAX_DIAGNOSTICS``) and never returns a partially checked model.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Set, Tuple

from . import ast as A
from . import diagnostics as dg

Sort = Tuple[str, Optional[str]]  # (sort, referenced type for objrefs)
INT: Sort = ("int", None)
BOOL: Sort = ("bool", None)
OBJSET: Sort = ("objset", None)
BUILTIN_TYPES = ("Time", "Deadline", "Timer")
PRIMITIVE_TYPE = {"deadline": "Deadline", "timer": "Timer"}


def field_sort(f: A.FieldDecl) -> Sort:
    if f.sort == "instant":
        return INT
    if f.sort == "objref":
        return ("objref", f.ref_type)
    return (f.sort, None)


@dataclass
class _Scope:
    self_type: Optional[A.TypeDecl] = None
    bound: Tuple[str, ...] = ()
    in_old: bool = False
    allow_old: bool = True
    thread: Optional[str] = None


class Checker:
    def __init__(self, doc: A.Document):
        self.doc = doc
        self.errors: List[dg.Diagnostic] = []
        self.types: Dict[str, A.TypeDecl] = {}
        self.objects: Dict[str, A.ObjectDecl] = {}
        self.threads: Dict[str, A.ThreadDecl] = {}
        self.recorded: Set[str] = set()

    def err(self, code: str, pos, message: str):
        line, col = pos
        self.errors.append(dg.Diagnostic(code, line, col, message))

    # -- entry -------------------------------------------------------------

    def run(self):
        doc = self.doc
        for t in doc.types:
            if t.name in self.types:
                self.err(dg.DUPLICATE, t.pos, f"duplicate type {t.name!r}")
            else:
                self.types[t.name] = t
        for th in doc.threads:
            if th.name in self.threads:
                self.err(dg.DUPLICATE, th.pos, f"duplicate thread {th.name!r}")
            else:
                self.threads[th.name] = th
        for o in doc.objects:
            if o.name in self.objects or o.name in self.threads:
                self.err(dg.DUPLICATE, o.pos, f"duplicate object {o.name!r}")
            elif o.type not in self.types:
                self.err(dg.UNKNOWN_TYPE, o.pos, f"unknown type {o.type!r}")
            else:
                self.objects[o.name] = o
        for t in self.types.values():
            self.check_type(t)
        for o in doc.objects:
            if self.objects.get(o.name) is o:
                self.check_inits(o, self.objects, set(self.threads))
        for th in self.threads.values():
            self.check_thread(th)
        seen = set()
        for u in doc.universes:
            if u.name in seen:
                self.err(dg.DUPLICATE, u.pos, f"duplicate universe {u.name!r}")
            seen.add(u.name)
            self.check_universe(u)
        self.errors.sort(key=lambda d: (d.line, d.col))
        if self.errors:
            raise dg.ModelError(self.errors)

    # -- declarations --------------------------------------------------------

    def check_type(self, t: A.TypeDecl):
        names: Set[str] = set()
        for f in t.fields:
            if f.name in names or f.name in ("valid", "closed", "owner"):
                self.err(dg.DUPLICATE, f.pos, f"duplicate field {f.name!r} in {t.name}")
            names.add(f.name)
            if f.ref_type and f.ref_type not in self.types:
                self.err(dg.UNKNOWN_TYPE, f.pos, f"unknown type {f.ref_type!r}")
            if f.lo is not None and (f.sort not in ("int", "instant") or f.lo > f.hi):
                self.err(dg.SORT, f.pos, f"bad range on field {f.name!r}")
        scope = _Scope(self_type=t)
        for e in t.invariants:
            self.expect_sort(e, BOOL, scope)
        for e in t.on_unwrap:
            self.expect_sort(e, BOOL, scope)
        for a in t.approvals:
            fd = t.field_decl(a)
            if fd is None:
                self.err(dg.UNKNOWN_FIELD, t.pos, f"approval names unknown field {a!r}")
            elif not fd.volatile:
                self.err(dg.APPROVAL, fd.pos,
                         f"approval on nonvolatile field {a!r} of {t.name}")
        for fname, e in t.dynamics:
            fd = t.field_decl(fname)
            pos = getattr(e, "pos", t.pos)
            if not t.timed:
                self.err(dg.DYNAMICS, pos, f"dynamics on untimed type {t.name}")
            if fd is None:
                self.err(dg.UNKNOWN_FIELD, pos, f"dynamics for unknown field {fname!r}")
                continue
            if not fd.volatile:
                self.err(dg.DYNAMICS, pos, f"dynamics on nonvolatile field {fname!r}")
            self.expect_sort(e, field_sort(fd), scope)

    def check_inits(self, o: A.ObjectDecl, objects, threads):
        t = self.types[o.type]
        seen = set()
        for i in o.inits:
            if i.field in seen:
                self.err(dg.DUPLICATE, i.pos, f"field {i.field!r} initialised twice")
            seen.add(i.field)
            if i.field == "closed":
                if i.kind == "value" and not isinstance(i.value, bool):
                    self.err(dg.INIT, i.pos, "closed must be true or false")
                if i.kind == "range":
                    self.err(dg.INIT, i.pos, "closed takes a boolean")
                continue
            if i.field == "owner":
                if i.kind != "value" or not isinstance(i.value, A.Name):
                    self.err(dg.INIT, i.pos, "owner must name a thread or object")
                elif i.value.ident not in objects and i.value.ident not in threads:
                    self.err(dg.UNKNOWN_IDENT, i.value.pos,
                             f"unknown owner {i.value.ident!r}")
                continue
            fd = t.field_decl(i.field)
            if fd is None:
                self.err(dg.UNKNOWN_FIELD, i.pos, f"unknown field {i.field!r} of {t.name}")
                continue
            sort = field_sort(fd)
            if i.kind == "range":
                if sort != INT or i.lo > i.hi:
                    self.err(dg.INIT, i.pos, f"bad initial range for {i.field!r}")
            elif i.kind == "value":
                v = i.value
                ok = ((sort == INT and isinstance(v, int) and not isinstance(v, bool))
                      or (sort == BOOL and isinstance(v, bool))
                      or (sort[0] == "objref" and (v is None or isinstance(v, A.Name))))
                if not ok:
                    self.err(dg.SORT, i.pos, f"initial value of {i.field!r} has wrong sort")
                elif isinstance(v, A.Name):
                    if v.ident not in objects:
                        self.err(dg.UNKNOWN_IDENT, v.pos, f"unknown object {v.ident!r}")
                    elif sort[1] and objects[v.ident].type != sort[1]:
                        self.err(dg.SORT, v.pos,
                                 f"{v.ident!r} is not a {sort[1]}")
            elif i.kind == "any" and sort[0] not in ("int", "bool", "objset"):
                self.err(dg.INIT, i.pos, f"'any' needs a finite sort for {i.field!r}")
            elif i.kind == "any" and sort == INT and fd.lo is None:
                self.err(dg.INIT, i.pos, f"'any' on unbounded field {i.field!r}")

    def check_universe(self, u: A.UniverseDecl):
        objects: Dict[str, A.ObjectDecl] = {}
        for o in u.objects:
            if o.name in objects or o.name in u.threads:
                self.err(dg.DUPLICATE, o.pos, f"duplicate object {o.name!r}")
            elif o.type not in self.types:
                self.err(dg.UNKNOWN_TYPE, o.pos, f"unknown type {o.type!r}")
            else:
                objects[o.name] = o
        for o in objects.values():
            self.check_inits(o, objects, set(u.threads))

    # -- threads -----------------------------------------------------------

    def check_thread(self, th: A.ThreadDecl):
        recorded = set()
        self._collect_records(th.body, recorded)
        self.recorded = recorded
        scope = _Scope(allow_old=False, thread=th.name)
        self.check_body(th.body, scope, in_atomic=False)

    def _collect_records(self, body, out):
        for s in body:
            if isinstance(s, A.Record):
                out.add(s.name)
            elif isinstance(s, (A.Atomic, A.Loop)):
                self._collect_records(s.body, out)

    def obj_ref(self, name: str, pos, what="object"):
        if name not in self.objects:
            self.err(dg.UNKNOWN_IDENT, pos, f"unknown {what} {name!r}")
            return None
        return self.objects[name]

    def check_body(self, body, scope: _Scope, in_atomic: bool):
        for s in body:
            self.check_stmt(s, scope, in_atomic)

    def check_stmt(self, s: A.Stmt, scope: _Scope, in_atomic: bool):
        if isinstance(s, A.Atomic):
            if in_atomic:
                self.err(dg.PLACEMENT, s.pos, "atomic blocks do not nest")
            self.check_body(s.body, scope, True)
        elif isinstance(s, A.Assign):
            target = self.sort_of(s.target, scope)
            if target is not None:
                self.expect_sort(s.expr, target, scope)
        elif isinstance(s, (A.Wrap, A.Unwrap)):
            if in_atomic:
                self.err(dg.PLACEMENT, s.pos, "wrap/unwrap outside atomic blocks only")
            if s.obj == "time":
                self.err(dg.ETERNAL, s.pos, "the time object is eternal and stays closed")
            else:
                self.obj_ref(s.obj, s.pos)
        elif isinstance(s, A.Bump):
            self.obj_ref(s.obj, s.pos)
        elif isinstance(s, A.Own):
            if in_atomic:
                self.err(dg.PLACEMENT, s.pos, "ownership transfer outside atomic blocks only")
            if "time" in (s.owner, s.child):
                self.err(dg.ETERNAL, s.pos, "the time object cannot change owner")
            else:
                self.obj_ref(s.owner, s.pos)
                self.obj_ref(s.child, s.pos)
        elif isinstance(s, (A.Assume, A.Assert)):
            self.expect_sort(s.expr, BOOL, scope)
        elif isinstance(s, A.Record):
            pass
        elif isinstance(s, A.Loop):
            if in_atomic:
                self.err(dg.PLACEMENT, s.pos, "loops are not allowed inside atomic blocks")
            if s.invariant is not None:
                self.expect_sort(s.invariant, BOOL, scope)
            for w in s.writes:
                self.obj_ref(w, s.pos)
            self.check_body(s.body, scope, False)
        elif isinstance(s, A.Primitive):
            kind, action = s.op.split("_")
            if action == "reset" and not in_atomic:
                self.err(dg.PLACEMENT, s.pos, f"{s.op} must appear inside an atomic block")
            if action != "reset" and in_atomic:
                self.err(dg.PLACEMENT, s.pos, f"{s.op} must appear outside atomic blocks")
            o = self.obj_ref(s.target, s.pos)
            if o is not None and o.type != PRIMITIVE_TYPE[kind]:
                self.err(dg.SORT, s.pos, f"{s.target!r} is not a {PRIMITIVE_TYPE[kind]}")

    # -- expressions -------------------------------------------------------

    def expect_sort(self, e: A.Expr, want: Sort, scope: _Scope):
        got = self.sort_of(e, scope)
        if got is not None and not _compatible(got, want):
            self.err(dg.SORT, e.pos, f"expected {want[0]}, found {got[0]}")

    def field_of(self, base_sort: Sort, name: str, pos) -> Optional[Sort]:
        if name == "owner":
            return ("objref", None)
        if base_sort[1] is not None:
            t = self.types.get(base_sort[1])
            fd = t.field_decl(name) if t else None
            if fd is None:
                self.err(dg.UNKNOWN_FIELD, pos, f"unknown field {name!r} of {base_sort[1]}")
                return None
            return field_sort(fd)
        sorts = {field_sort(fd) for t in self.types.values()
                 for fd in t.fields if fd.name == name}
        if not sorts:
            self.err(dg.UNKNOWN_FIELD, pos, f"unknown field {name!r}")
            return None
        kinds = {s[0] for s in sorts}
        if len(kinds) > 1:
            self.err(dg.SORT, pos, f"field {name!r} has different sorts in different types")
            return None
        return sorts.pop() if len(sorts) == 1 else (kinds.pop(), None)

    def sort_of(self, e: A.Expr, scope: _Scope) -> Optional[Sort]:
        if isinstance(e, A.IntLit):
            return INT
        if isinstance(e, A.BoolLit):
            return BOOL
        if isinstance(e, A.NullLit):
            return ("objref", None)
        if isinstance(e, (A.Now, A.Delta)):
            return INT
        if isinstance(e, A.Elapsed):
            if scope.thread is None:
                self.err(dg.PLACEMENT, e.pos, "elapsed() is only meaningful in thread code")
            elif e.name not in self.recorded:
                self.err(dg.UNKNOWN_IDENT, e.pos, f"timer {e.name!r} is never recorded")
            return INT
        if isinstance(e, A.SelfRef):
            if scope.self_type is None:
                self.err(dg.UNKNOWN_IDENT, e.pos, "self outside a type declaration")
                return None
            return ("objref", scope.self_type.name)
        if isinstance(e, A.Name):
            return self.resolve(e, scope)
        if isinstance(e, A.Field):
            base = self.sort_of(e.base, scope)
            if base is None:
                return None
            if base[0] != "objref":
                self.err(dg.SORT, e.pos, f"field access on a {base[0]}")
                return None
            return self.field_of(base, e.name, e.pos)
        if isinstance(e, A.Index):
            base = self.sort_of(e.base, scope)
            if base is not None and base[0] != "objset":
                self.err(dg.SORT, e.pos, f"indexing a {base[0]}")
            idx = self.sort_of(e.index, scope)
            if idx is not None and idx[0] != "objref":
                self.err(dg.SORT, e.index.pos, "map index must be an object reference")
            return BOOL
        if isinstance(e, (A.Old, A.Unchanged)):
            if not scope.allow_old:
                self.err(dg.PLACEMENT, e.pos, "old()/unchanged() only in invariants")
                return None
            if scope.in_old:
                self.err(dg.NESTED_OLD, e.pos, "old() does not nest")
                return None
            inner = replace(scope, in_old=True)
            s = self.sort_of(e.expr, inner)
            return s if isinstance(e, A.Old) else (BOOL if s is not None else None)
        if isinstance(e, (A.Inv2, A.Mine, A.Closed)):
            s = self.sort_of(e.expr, scope)
            if s is not None and s[0] != "objref":
                self.err(dg.SORT, e.expr.pos, "expected an object reference")
            return BOOL
        if isinstance(e, A.Unary):
            want = INT if e.op == "-" else BOOL
            self.expect_sort(e.expr, want, scope)
            return want
        if isinstance(e, A.Binary):
            op = e.op
            if op in ("+", "-", "*"):
                self.expect_sort(e.left, INT, scope)
                self.expect_sort(e.right, INT, scope)
                return INT
            if op in ("<", "<=", ">", ">="):
                self.expect_sort(e.left, INT, scope)
                self.expect_sort(e.right, INT, scope)
                return BOOL
            if op in ("&&", "||", "==>"):
                self.expect_sort(e.left, BOOL, scope)
                self.expect_sort(e.right, BOOL, scope)
                return BOOL
            left = self.sort_of(e.left, scope)
            right = self.sort_of(e.right, scope)
            if left is not None and right is not None and left[0] != right[0]:
                self.err(dg.SORT, e.pos, f"cannot compare {left[0]} with {right[0]}")
            return BOOL
        if isinstance(e, A.Cond):
            self.expect_sort(e.test, BOOL, scope)
            a = self.sort_of(e.then, scope)
            b = self.sort_of(e.other, scope)
            if a is not None and b is not None and a[0] != b[0]:
                self.err(dg.SORT, e.pos, f"branches differ: {a[0]} vs {b[0]}")
                return None
            return a if a is not None else b
        if isinstance(e, A.Forall):
            inner = replace(scope, bound=scope.bound + (e.var,))
            self.expect_sort(e.body, BOOL, inner)
            return BOOL
        raise TypeError(f"unexpected node {e!r}")

    def resolve(self, e: A.Name, scope: _Scope) -> Optional[Sort]:
        name = e.ident
        if name in scope.bound:
            return ("objref", None)
        if scope.self_type is not None:
            fd = scope.self_type.field_decl(name)
            if fd is not None:
                return field_sort(fd)
        if name in self.objects:
            return ("objref", self.objects[name].type)
        if scope.self_type is not None:
            self.err(dg.UNKNOWN_FIELD, e.pos,
                     f"unknown field {name!r} of {scope.self_type.name}")
        else:
            self.err(dg.UNKNOWN_IDENT, e.pos, f"unknown identifier {name!r}")
        return None


def _compatible(got: Sort, want: Sort) -> bool:
    if got[0] != want[0]:
        return False
    return got[1] is None or want[1] is None or got[1] == want[1]


def check(doc: A.Document):
    c = Checker(doc)
    c.run()
    return c
