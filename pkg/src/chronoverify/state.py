"""Program states, transitions and the object-invariant judgments.

A state maps every (object, field) pair of the universe to a value, with
the meta-fields ``valid``, ``closed`` and ``owner`` stored like ordinary
fields. States are immutable; every update builds a new snapshot.

User-written clauses of an object apply only while it is closed:

* closed in both states: all clauses on the transition, plus the implicit
  rule that nonvolatile fields do not change;
* open -> closed (wrap): the clauses on the stutter of the poststate;
* closed -> open (unwrap): only the ``on_unwrap`` clauses;
* open in both: nothing.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Tuple

from .lang import ast as A
from .lang.evaluator import Ctx, compile_expr
from .model import ENV, META, Model


class State:
    __slots__ = ("objs", "lay", "_hash")

    def __init__(self, objs: Dict[str, tuple], lay: Mapping[str, Mapping[str, int]]):
        self.objs = objs
        self.lay = lay
        self._hash = None

    @classmethod
    def build(cls, model: Model, values: Mapping[Tuple[str, str], object]) -> "State":
        """Build a state from a total (object, field) -> value mapping."""
        lay = object_layout(model)
        objs = {}
        for o in model.order:
            names = lay[o]
            row = [None] * len(names)
            for f, i in names.items():
                row[i] = values[(o, f)]
            objs[o] = tuple(row)
        return cls(objs, lay)

    def get(self, obj: str, field: str):
        return self.objs[obj][self.lay[obj][field]]

    def row(self, obj: str) -> tuple:
        return self.objs[obj]

    def fields(self, obj: str) -> Iterable[str]:
        return self.lay[obj].keys()

    def set(self, updates: Mapping[Tuple[str, str], object]) -> "State":
        if not updates:
            return self
        objs = dict(self.objs)
        rows: Dict[str, list] = {}
        for (o, f), v in updates.items():
            if o not in rows:
                rows[o] = list(objs[o])
            rows[o][self.lay[o][f]] = v
        for o, r in rows.items():
            objs[o] = tuple(r)
        return State(objs, self.lay)

    def as_dict(self) -> Dict[Tuple[str, str], object]:
        return {(o, f): row[i] for o, row in self.objs.items()
                for f, i in self.lay[o].items()}

    def __eq__(self, other):
        return isinstance(other, State) and self.objs == other.objs

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(tuple(self.objs.values()))
        return self._hash

    def __repr__(self):
        parts = []
        for o in self.objs:
            inner = ", ".join(f"{f}={self.get(o, f)!r}" for f in self.lay[o]
                              if f != "valid")
            parts.append(f"{o}({inner})")
        return "State(" + "; ".join(parts) + ")"


def object_layout(model: Model) -> Dict[str, Dict[str, int]]:
    return model.compiled("object_layout", lambda: {
        o: model.layout[model.objects[o].type] for o in model.order})


@dataclass(frozen=True)
class Transition:
    pre: State
    post: State
    actor: str = ENV

    @property
    def stutter(self) -> bool:
        return self.pre == self.post


@dataclass(frozen=True)
class Failure:
    """The first clause of ``obj`` that a transition violates."""
    obj: str
    clause: str
    kind: str = "user"

    def __str__(self):
        return f"{self.obj}: {self.clause}"


@dataclass(frozen=True)
class Legality:
    legal: bool
    witness: Optional[Failure] = None

    def __bool__(self):
        return self.legal


LEGAL = Legality(True)


def updated_objects(tr: Transition) -> FrozenSet[str]:
    pre, post = tr.pre.objs, tr.post.objs
    if pre is post:
        return frozenset()
    return frozenset(o for o, row in pre.items() if post[o] != row)


# -- clause evaluation -----------------------------------------------------

def _clauses(model: Model, tname: str):
    def build():
        t = model.types[tname]
        out = []
        for cl in t.clauses:
            fn = compile_expr(cl.expr, model, tname) if cl.expr is not None else None
            out.append((cl, fn))
        nonvolatile = tuple(f.name for f in t.fields if not f.volatile)
        return out, nonvolatile
    return model.compiled(("clauses", tname), build)


def first_failure(model: Model, tr: Transition, o: str,
                  active: FrozenSet[str] = frozenset()) -> Optional[Failure]:
    """First violated clause of ``o``'s two-state invariant on ``tr``, if any."""
    pre, post = tr.pre, tr.post
    pre_c = pre.get(o, "closed")
    post_c = post.get(o, "closed")
    if not pre_c and not post_c:
        return None
    clauses, nonvolatile = _clauses(model, model.objects[o].type)
    active = active | {o}
    if pre_c and post_c:
        for f in nonvolatile:
            if pre.get(o, f) != post.get(o, f):
                return Failure(o, f"nonvolatile field {f} unchanged while closed", "builtin")
        ctx = _ctx(model, tr, o, active)
        for cl, fn in clauses:
            if cl.kind == "on_unwrap":
                continue
            if cl.kind == "approval":
                if not _approved(model, tr, o, cl.field, active):
                    return Failure(o, cl.text, cl.kind)
            elif not fn(ctx):
                return Failure(o, cl.text, cl.kind)
        return None
    if post_c:
        st = Transition(post, post, tr.actor)
        ctx = _ctx(model, st, o, active)
        for cl, fn in clauses:
            if cl.kind in ("user", "timed") and not fn(ctx):
                return Failure(o, cl.text, cl.kind)
        return None
    ctx = _ctx(model, tr, o, active)
    for cl, fn in clauses:
        if cl.kind == "on_unwrap" and not fn(ctx):
            return Failure(o, cl.text, cl.kind)
    return None


def _ctx(model, tr, o, active) -> Ctx:
    ctx = Ctx(tr.pre, tr.post, o, tr.actor)
    ctx.inv2 = lambda other: other in active or first_failure(model, tr, other, active) is None
    return ctx


def _approved(model: Model, tr: Transition, o: str, field: str, active) -> bool:
    if tr.pre.get(o, field) == tr.post.get(o, field):
        return True
    owner = tr.pre.get(o, "owner")
    if owner is None or owner not in model.objects:
        # a thread (or the environment) approves only its own actions
        return owner is not None and tr.actor == owner
    return owner in active or first_failure(model, tr, owner, active) is None


def object_inv2(model: Model, tr: Transition, o: str) -> bool:
    return first_failure(model, tr, o) is None


def state_failure(model: Model, s: State) -> Optional[Failure]:
    st = Transition(s, s)
    for o in model.order:
        if s.get(o, "valid"):
            f = first_failure(model, st, o)
            if f is not None:
                return f
    return None


def is_good_state(model: Model, s: State) -> bool:
    cache = model.compiled("good_states", dict)
    try:
        return cache[s]
    except KeyError:
        v = cache[s] = state_failure(model, s) is None
        return v


def transition_failure(model: Model, tr: Transition) -> Optional[Failure]:
    for o in model.order:
        f = first_failure(model, tr, o)
        if f is not None:
            return f
    return None


def is_good_transition(model: Model, tr: Transition) -> bool:
    return transition_failure(model, tr) is None


def is_legal_transition(model: Model, tr: Transition) -> Legality:
    if not is_good_state(model, tr.pre):
        return LEGAL
    for o in model.order:
        if tr.pre.objs[o] != tr.post.objs[o]:
            f = first_failure(model, tr, o)
            if f is not None:
                return Legality(False, f)
    return LEGAL


def root_cause(model: Model, tr: Transition, f: Failure) -> Failure:
    """Follow failed approvals to the owner's own violated clause."""
    seen = set()
    while f.kind == "approval" and f.obj not in seen:
        seen.add(f.obj)
        owner = tr.pre.get(f.obj, "owner")
        if owner not in model.objects:
            break
        g = first_failure(model, tr, owner)
        if g is None:
            break
        f = g
    return f
