"""Deadline elimination: the program without its Deadlines behaves the same.

A Deadline only ever removes behaviour by stopping time. If every Deadline
is destroyed before it expires, erasing the Deadline objects, the
statements that manage them and the clauses that mention them leaves a
program whose reachable states, seen without the Deadlines, are exactly the
original ones.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import FrozenSet, List, Optional, Set, Tuple

from .config import Configuration
from .explorer import Bounds, Report, explore
from .lang import ast as A
from .loader import build_model
from .model import DEADLINE, Model
from .program import Runtime
from .timecore import now


@dataclass
class EliminationVerdict:
    passed: bool
    original: int = 0
    erased: int = 0
    only_original: List[tuple] = field(default_factory=list)
    only_erased: List[tuple] = field(default_factory=list)
    reports: Tuple[Optional[Report], Optional[Report]] = (None, None)


# -- erasure ------------------------------------------------------------------

class _Eraser:
    def __init__(self, doc: A.Document):
        self.dead = {o.name for o in doc.objects if o.type == DEADLINE}
        self.ref_fields = {t.name: {f.name for f in t.fields if f.ref_type == DEADLINE}
                           for t in doc.types}
        self.all_refs = set().union(*self.ref_fields.values()) if self.ref_fields else set()

    def mentions(self, e: A.Expr, self_type: Optional[str] = None) -> bool:
        own = self.ref_fields.get(self_type, set())
        for n in A.walk(e):
            if isinstance(n, A.Name) and (n.ident in self.dead or n.ident in own):
                return True
            if isinstance(n, A.Field) and n.name in self.all_refs:
                return True
        return False

    def keep(self, e: Optional[A.Expr], self_type=None) -> Optional[A.Expr]:
        if e is None:
            return None
        return A.conjoin([c for c in A.conjuncts(e) if not self.mentions(c, self_type)])

    def type_decl(self, t: A.TypeDecl) -> A.TypeDecl:
        gone = self.ref_fields.get(t.name, set())
        return replace(
            t,
            fields=tuple(f for f in t.fields if f.name not in gone),
            invariants=tuple(e for e in t.invariants if not self.mentions(e, t.name)),
            approvals=tuple(a for a in t.approvals if a not in gone),
            on_unwrap=tuple(e for e in t.on_unwrap if not self.mentions(e, t.name)),
            dynamics=tuple((f, e) for f, e in t.dynamics
                           if f not in gone and not self.mentions(e, t.name)))

    def object_decl(self, o: A.ObjectDecl, types) -> A.ObjectDecl:
        gone = self.ref_fields.get(o.type, set())
        inits = tuple(i for i in o.inits if i.field not in gone and not (
            isinstance(i.value, A.Name) and i.value.ident in self.dead))
        return replace(o, inits=inits)

    def stmts(self, body) -> Tuple[A.Stmt, ...]:
        out = []
        for s in body:
            s = self.stmt(s)
            if s is not None:
                out.append(s)
        return tuple(out)

    def stmt(self, s) -> Optional[A.Stmt]:
        if isinstance(s, A.Primitive):
            return None if s.target in self.dead else s
        if isinstance(s, A.Assign):
            if self.mentions(s.target) or self.mentions(s.expr):
                return None
            return s
        if isinstance(s, A.Own):
            return None if s.owner in self.dead or s.child in self.dead else s
        if isinstance(s, (A.Wrap, A.Unwrap, A.Bump)):
            return None if s.obj in self.dead else s
        if isinstance(s, (A.Assume, A.Assert)):
            e = self.keep(s.expr)
            return None if e is None else replace(s, expr=e)
        if isinstance(s, A.Atomic):
            # an emptied atomic stays: it is still a point where time may pass
            return replace(s, body=self.stmts(s.body))
        if isinstance(s, A.Loop):
            return replace(s, invariant=self.keep(s.invariant),
                           writes=tuple(w for w in s.writes if w not in self.dead),
                           body=self.stmts(s.body))
        return s

    def document(self, doc: A.Document) -> A.Document:
        out = A.Document(
            types=tuple(self.type_decl(t) for t in doc.types),
            objects=tuple(self.object_decl(o, doc.types) for o in doc.objects
                          if o.name not in self.dead),
            threads=tuple(replace(th, body=self.stmts(th.body)) for th in doc.threads),
            universes=())
        return _drop_dead_ghosts(out)


def _reads(body):
    """Field names read by thread code (assignment targets excluded)."""
    for s in body:
        if isinstance(s, (A.Atomic, A.Loop)):
            if isinstance(s, A.Loop) and s.invariant is not None:
                yield from A.walk(s.invariant)
            yield from _reads(s.body)
        elif isinstance(s, A.Assign):
            yield from A.walk(s.target.base)
            yield from A.walk(s.expr)
        elif isinstance(s, (A.Assume, A.Assert)):
            yield from A.walk(s.expr)


def _drop_dead_ghosts(doc: A.Document) -> A.Document:
    """Remove ghost fields nothing reads any more, with their writes.

    Erasure can leave a ghost shadow of a Deadline's expiration behind; it
    would keep a stale time value alive and only slow the search down.
    """
    used = set()
    for t in doc.types:
        for e in t.invariants + t.on_unwrap + tuple(e for _, e in t.dynamics):
            for n in A.walk(e):
                if isinstance(n, A.Field):
                    used.add((None, n.name))
                elif isinstance(n, A.Name):
                    used.add((t.name, n.ident))
    for th in doc.threads:
        for n in _reads(th.body):
            if isinstance(n, A.Field):
                used.add((None, n.name))
    dead = {(t.name, f.name) for t in doc.types for f in t.fields
            if f.ghost and (None, f.name) not in used and (t.name, f.name) not in used}
    if not dead:
        return doc
    obj_type = {o.name: o.type for o in doc.objects}

    def gone(target: A.Field) -> bool:
        return (isinstance(target.base, A.Name)
                and (obj_type.get(target.base.ident), target.name) in dead)

    def strip(body):
        out = []
        for s in body:
            if isinstance(s, A.Assign) and gone(s.target):
                continue
            if isinstance(s, (A.Atomic, A.Loop)):
                s = replace(s, body=strip(s.body))
            out.append(s)
        return tuple(out)

    types = tuple(replace(t, fields=tuple(f for f in t.fields if (t.name, f.name) not in dead),
                          approvals=tuple(a for a in t.approvals if (t.name, a) not in dead))
                  for t in doc.types)
    objects = tuple(replace(o, inits=tuple(i for i in o.inits
                                           if (o.type, i.field) not in dead))
                    for o in doc.objects)
    threads = tuple(replace(th, body=strip(th.body)) for th in doc.threads)
    return replace(doc, types=types, objects=objects, threads=threads)


def erase_deadlines(model: Model) -> Model:
    """The model with every Deadline and everything that mentions one removed."""
    return build_model(_Eraser(model.source).document(model.source))


# -- projection ---------------------------------------------------------------

def _label_map(rt: Runtime, keep: Set[str]) -> List[List[str]]:
    """Per thread, the label of the first surviving instruction from each pc."""
    out = []
    for prog in rt.programs:
        labels = [prog.label(pc) for pc in range(len(prog.code) + 1)]
        mapped = list(labels)
        nxt = "end"
        for pc in range(len(labels) - 1, -1, -1):
            if labels[pc] in keep or labels[pc] == "end":
                nxt = labels[pc]
            mapped[pc] = nxt
        out.append(mapped)
    return out


def project(model: Model, cfg: Configuration, labels: List[List[str]]) -> tuple:
    """Non-Deadline, non-ghost view of a configuration, times made relative."""
    s = cfg.state
    t = now(s)
    stamps = [v for loc in cfg.locals for k, v in loc if k[0] == "@"]
    base = min([t] + stamps)
    objs = []
    for o in model.order:
        if model.objects[o].type == DEADLINE:
            continue
        tdecl = model.type_of(o)
        vals = [s.get(o, "closed"), s.get(o, "owner")]
        vals += [s.get(o, f.name) for f in tdecl.fields if not f.ghost]
        objs.append((o, tuple(vals)))
    threads = tuple(
        (labels[ti][pc], tuple((k, t - v if k[0] == "@" else v) for k, v in cfg.locals[ti]))
        for ti, pc in enumerate(cfg.pcs))
    return (t - base, threads, tuple(objs))


def value_projection(model: Model, report: Report, obj: str,
                     fields: Tuple[str, ...]) -> FrozenSet[tuple]:
    """Relative time plus selected fields of one object, over all configurations."""
    out = set()
    for c in report.configs:
        t = now(c.state)
        stamps = [v for loc in c.locals for k, v in loc if k[0] == "@"]
        out.add((t - min([t] + stamps),) + tuple(c.state.get(obj, f) for f in fields))
    return frozenset(out)


def projected_set(model: Model, report: Report, labels) -> FrozenSet[tuple]:
    return frozenset(project(model, c, labels) for c in report.configs)


def deadline_elimination_check(model: Model, bounds: Optional[Bounds] = None,
                               original: Optional[Report] = None) -> EliminationVerdict:
    bounds = bounds or Bounds()
    erased = erase_deadlines(model)
    if original is None or not original.configs:
        original = explore(model, bounds, keep=True)
    after = explore(erased, bounds, keep=True)
    keep = {lab for p in Runtime(erased, bounds.loop_bound).programs
            for lab in (p.label(pc) for pc in range(len(p.code)))}
    lab_orig = _label_map(Runtime(model, bounds.loop_bound), keep)
    lab_erased = _label_map(Runtime(erased, bounds.loop_bound), keep)
    a = projected_set(model, original, lab_orig)
    b = projected_set(erased, after, lab_erased)
    return EliminationVerdict(a == b, len(a), len(b), sorted(a - b, key=repr)[:20],
                              sorted(b - a, key=repr)[:20], (original, after))
