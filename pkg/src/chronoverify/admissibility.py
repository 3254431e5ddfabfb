"""Brute-force admissibility of a type over a small universe.

A type is admissible when its invariant cannot be broken from outside:

1. every legal transition from a good state satisfies the invariant of each
   subject object, and
2. the poststate of every good transition from a good state satisfies the
   subject's invariant read as a one-state check (its stutter).

For (1) only transitions that leave the subject's row untouched need to be
enumerated: if the subject is updated, legality already demands its
invariant. Both checks quantify over all transitions the universe allows,
not only over transitions some program could perform.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple, Union

from .lang import ast as A
from .model import ENV, TIME, TIME_TYPE, Model
from .state import (Failure, State, Transition, first_failure, is_good_state,
                    is_good_transition, is_legal_transition, transition_failure)

DEFAULT_CAP = 10 ** 7
DEFAULT_TIME = A.ObjectDecl(TIME, TIME_TYPE, (A.Init("cur", "range", lo=0, hi=3),))


class AdmissibilityError(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code
        self.message = message


@dataclass(frozen=True)
class Counterexample:
    transition: Transition
    condition: int  # 1 or 2
    witness: str
    clause: str


@dataclass
class AdmissibilityVerdict:
    type_name: str
    result: str  # admissible | inadmissible
    counterexample: Optional[Counterexample] = None
    stats: Dict[str, int] = field(default_factory=dict)

    @property
    def admissible(self) -> bool:
        return self.result == "admissible"


# -- the universe -------------------------------------------------------------

def universe_model(model: Model, universe: A.UniverseDecl) -> Model:
    objs = list(universe.objects)
    if not any(o.name == TIME for o in objs):
        objs.insert(0, DEFAULT_TIME)
    else:
        objs.sort(key=lambda o: o.name != TIME)
    return model.with_universe(objs, universe.threads)


def _inits(o: A.ObjectDecl) -> Dict[str, A.Init]:
    return {i.field: i for i in o.inits}


def domains(um: Model) -> List[Tuple[Tuple[str, str], list]]:
    """Enumeration domain of every (object, field) slot of the universe."""
    out = []
    others = [o for o in um.order if o != TIME]
    timed = [o for o in um.order if o != TIME and um.type_of(o).timed]
    for name in um.order:
        decl = um.objects[name]
        t = um.type_of(name)
        inits = _inits(decl)

        def pinned(f):
            i = inits.get(f)
            if i is None:
                return None
            if i.kind == "value":
                v = i.value
                return [v.ident if isinstance(v, A.Name) else v]
            if i.kind == "range":
                return list(range(i.lo, i.hi + 1))
            return "any"

        out.append(((name, "valid"), [True]))
        c = pinned("closed")
        if name == TIME:
            c = [True]
        out.append(((name, "closed"), [False, True] if c in (None, "any") else c))
        ow = pinned("owner")
        if name == TIME:
            ow = [ENV]
        if ow in (None, "any"):
            ow = list(um.thread_objects) + [o for o in others if o != name] or [None]
        out.append(((name, "owner"), ow))
        for fd in t.fields:
            vals = pinned(fd.name)
            if vals in (None, "any"):
                vals = _sort_domain(um, name, fd, timed)
            out.append(((name, fd.name), vals))
    return out


def _sort_domain(um: Model, obj: str, fd: A.FieldDecl, timed) -> list:
    if fd.sort == "bool":
        return [False, True]
    if fd.sort == "objref":
        objs = [o for o in um.order if fd.ref_type is None or um.objects[o].type == fd.ref_type]
        return [None] + objs
    if fd.sort == "objset":
        pool = timed if obj == TIME and fd.name == "timed" else [o for o in um.order]
        return [frozenset(c) for r in range(len(pool) + 1)
                for c in itertools.combinations(pool, r)]
    if fd.lo is None:
        raise AdmissibilityError("E_UNBOUNDED", f"{obj}.{fd.name} has no finite range")
    return list(range(fd.lo, fd.hi + 1))


def enumerate_states(um: Model, cap: int = DEFAULT_CAP) -> List[State]:
    doms = domains(um)
    n = 1
    for _, vals in doms:
        n *= len(vals)
    if n * n > cap:
        raise AdmissibilityError("E_TOO_LARGE",
                                 f"{n} states give {n * n} pairs, above the cap of {cap}")
    keys = [k for k, _ in doms]
    return [State.build(um, dict(zip(keys, combo)))
            for combo in itertools.product(*(v for _, v in doms))]


# -- time shift ---------------------------------------------------------------

def _instant_slots(um: Model):
    return [(TIME, "cur")] + [(o, f) for o in um.order for f in um.instant_fields(o)]


def _shift_exact(um: Model) -> bool:
    """True when every time-valued domain is a contiguous range from 0."""
    doms = dict(domains(um))
    for slot in _instant_slots(um):
        vals = doms[slot]
        if sorted(vals) != list(range(0, len(vals))):
            return False
    return True


def _min_instant(um: Model, s: State) -> int:
    return min(s.get(o, f) for o, f in _instant_slots(um))


# -- the check ----------------------------------------------------------------

def _deltas(tr: Transition) -> int:
    n = 0
    for o, row in tr.pre.objs.items():
        prow = tr.post.objs[o]
        n += sum(1 for a, b in zip(row, prow) if a != b)
    return n


def check_admissibility(model: Model, type_name: str,
                        universe: Union[str, A.UniverseDecl, None] = None,
                        cap: int = DEFAULT_CAP) -> AdmissibilityVerdict:
    if type_name not in model.types:
        raise AdmissibilityError("E_UNKNOWN_TYPE", f"no type named {type_name!r}")
    u = _resolve(model, type_name, universe)
    um = universe_model(model, u)
    subjects = um.objects_of_type(type_name)
    if not subjects:
        raise AdmissibilityError("E_NO_SUBJECT",
                                 f"universe {u.name!r} has no object of type {type_name}")
    states = enumerate_states(um, cap)
    goods = [s for s in states if is_good_state(um, s)]
    actors = [ENV] + list(um.thread_objects)
    shift = _shift_exact(um)
    mins = {s: _min_instant(um, s) for s in states} if shift else {}
    best: Optional[Tuple[tuple, Counterexample]] = None
    checked = 0

    def offer(rank, cx):
        nonlocal best
        if best is None or rank < best[0]:
            best = (rank, cx)

    for o in subjects:
        by_row: Dict[tuple, List[State]] = {}
        for i, s in enumerate(states):
            by_row.setdefault(s.row(o), []).append((i, s))
        broken = [(i, s) for i, s in enumerate(states)
                  if first_failure(um, Transition(s, s), o) is not None]
        for pi, pre in enumerate(goods):
            # condition 1: the subject is left alone
            for qi, post in by_row[pre.row(o)]:
                if post == pre or (shift and min(mins[pre], mins[post]) > 0):
                    continue
                for a in actors:
                    tr = Transition(pre, post, a)
                    checked += 1
                    if not is_legal_transition(um, tr):
                        continue
                    f = first_failure(um, tr, o)
                    if f is not None:
                        offer((1, _deltas(tr), pi, qi, actors.index(a)),
                              Counterexample(tr, 1, o, f.clause))
            # condition 2: the poststate, read on its own
            for qi, post in broken:
                if shift and min(mins[pre], mins[post]) > 0:
                    continue
                for a in actors:
                    tr = Transition(pre, post, a)
                    checked += 1
                    if is_good_transition(um, tr):
                        f = first_failure(um, Transition(post, post), o)
                        offer((2, _deltas(tr), pi, qi, actors.index(a)),
                              Counterexample(tr, 2, o, f.clause))
    stats = {"states": len(states), "good_states": len(goods), "transitions": checked}
    if best is None:
        return AdmissibilityVerdict(type_name, "admissible", None, stats)
    return AdmissibilityVerdict(type_name, "inadmissible", best[1], stats)


def _resolve(model: Model, type_name: str, universe) -> A.UniverseDecl:
    if isinstance(universe, A.UniverseDecl):
        return universe
    if universe is not None:
        if universe not in model.universes:
            raise AdmissibilityError("E_UNKNOWN_UNIVERSE", f"no universe named {universe!r}")
        return model.universes[universe]
    for u in model.universes.values():
        if any(o.type == type_name for o in u.objects):
            return u
    raise AdmissibilityError("E_NO_UNIVERSE", f"no universe declares an object of type {type_name}")


def replay(model: Model, verdict: AdmissibilityVerdict, universe=None) -> bool:
    """Re-check a counterexample against the kernel judgments it claims."""
    cx = verdict.counterexample
    if cx is None:
        return True
    um = universe_model(model, _resolve(model, verdict.type_name, universe))
    tr = Transition(_rebuild(um, cx.transition.pre), _rebuild(um, cx.transition.post),
                    cx.transition.actor)
    if not is_good_state(um, tr.pre):
        return False
    if cx.condition == 1:
        return bool(is_legal_transition(um, tr)) and first_failure(um, tr, cx.witness) is not None
    return (transition_failure(um, tr) is None
            and first_failure(um, Transition(tr.post, tr.post), cx.witness) is not None)


def _rebuild(um: Model, s: State) -> State:
    return State.build(um, s.as_dict())


def verdict_dict(v: AdmissibilityVerdict) -> dict:
    from .explorer import field_deltas, state_dict
    out = {"type": v.type_name, "result": v.result, "stats": dict(sorted(v.stats.items()))}
    cx = v.counterexample
    if cx is not None:
        tr = cx.transition
        out["counterexample"] = {
            "condition": cx.condition,
            "witness": cx.witness,
            "clause": cx.clause,
            "actor": tr.actor,
            "pre": state_dict(tr.pre),
            "deltas": [[o, f, _plain(a), _plain(b)] for o, f, a, b in field_deltas(tr)],
        }
    return out


def _plain(v):
    return sorted(v) if isinstance(v, frozenset) else v
