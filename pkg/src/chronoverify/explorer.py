"""Bounded exhaustive exploration and seeded simulation.

Configurations are deduplicated in canonical form: every time-valued
quantity (``time.cur``, instant fields, timer stamps) is shifted so that the
least one that matters is 0. All clauses only compare times with each other,
so the shift is invisible to every judgment and the clock stays finite.

The environment moves only in front of an atomic block. A successor for an
atomic is a chain of 0..env_moves time advances composed with the block
itself; when the block's assumes reject the chain's end state the whole
branch is discarded, intermediate states included.
"""
from __future__ import annotations

import json
import random
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Dict, Iterator, List, Optional, Tuple

from .config import Configuration
from .lang import ast as A
from .lang.evaluator import Ctx, compile_expr
from .loader import initial_states
from .model import DEADLINE, TIME, Model
from .program import (Finding, Instr, Outcome, Runtime, domain_failure,
                      run_atomic, thread_step)
from .state import State, Transition, is_legal_transition, state_failure
from .timecore import now


class BoundsError(ValueError):
    pass


@dataclass(frozen=True)
class Bounds:
    max_dt: int = 4
    env_moves: int = 8
    max_configs: int = 2_000_000
    loop_bound: Optional[int] = 100

    def __post_init__(self):
        for name in ("max_dt", "env_moves", "max_configs"):
            if getattr(self, name) < 1:
                raise BoundsError(f"E_BOUNDS: {name} must be positive")
        if self.loop_bound is not None and self.loop_bound < 1:
            raise BoundsError("E_BOUNDS: loop_bound must be positive")


@dataclass
class Report:
    verdict: str  # pass | fail | inconclusive
    findings: List[Finding] = field(default_factory=list)
    warnings: List[Finding] = field(default_factory=list)
    stats: Dict[str, int] = field(default_factory=dict)
    initial: Optional[State] = None
    # filled only when exploring with keep=True
    configs: List[Configuration] = field(default_factory=list, repr=False)
    atomic_entries: List[Tuple[int, State]] = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "findings": [finding_dict(f) for f in self.findings],
            "warnings": [finding_dict(w) for w in self.warnings],
            "stats": dict(sorted(self.stats.items())),
        }

    def to_structured(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_human(self) -> str:
        lines = [f"verdict: {self.verdict}"]
        for k, v in sorted(self.stats.items()):
            lines.append(f"  {k}: {v}")
        for f in self.findings:
            lines.append(f"finding {f.kind}: {f.culprit}")
            if f.message:
                lines.append(f"  {f.message}")
            where = f"thread {f.thread} at {f.label}" if f.thread else f.label
            if where:
                lines.append(f"  at: {where}")
            lines.append(f"  trace: {len(f.trace)} transition(s)")
            for i, tr in enumerate(f.trace):
                ch = ", ".join(f"{o}.{k}: {_plain(a)} -> {_plain(b)}"
                               for o, k, a, b in field_deltas(tr))
                lines.append(f"    {i:3d} [{tr.actor}] {ch or 'stutter'}")
        for w in self.warnings:
            lines.append(f"warning {w.kind}: {w.culprit} {w.message}".rstrip())
        return "\n".join(lines) + "\n"


def _plain(v):
    if isinstance(v, frozenset):
        return sorted(v)
    return v


def field_deltas(tr: Transition) -> List[Tuple[str, str, object, object]]:
    out = []
    for o, row in tr.pre.objs.items():
        prow = tr.post.objs[o]
        if prow == row:
            continue
        for f, i in tr.pre.lay[o].items():
            if row[i] != prow[i]:
                out.append((o, f, row[i], prow[i]))
    return out


def state_dict(s: State) -> dict:
    return {o: {f: _plain(s.get(o, f)) for f in s.fields(o)} for o in s.objs}


def finding_dict(f: Finding) -> dict:
    return {
        "kind": f.kind,
        "culprit": f.culprit,
        "message": f.message,
        "thread": f.thread,
        "label": f.label,
        "trace": [{"actor": tr.actor,
                   "deltas": [[o, k, _plain(a), _plain(b)] for o, k, a, b in field_deltas(tr)]}
                  for tr in f.trace],
    }


# -- environment moves --------------------------------------------------------

def _dynamics(model: Model):
    def build():
        out = []
        for o in model.order:
            t = model.type_of(o)
            for fname, e in t.dynamics:
                out.append((o, fname, compile_expr(e, model, t.name)))
        return tuple(out)
    return model.compiled("dynamics", build)


def enabled_env_moves(model: Model, state: State, bounds: Bounds) -> List[Transition]:
    """Legal time advances by 1..max_dt, with dynamics applied."""
    dyn = _dynamics(model)
    cur = now(state)
    out = []
    for d in range(1, bounds.max_dt + 1):
        partial = state.set({(TIME, "cur"): cur + d})
        ups = {}
        for o, fname, fn in dyn:
            if state.get(o, "closed"):
                ups[(o, fname)] = fn(Ctx(state, partial, o, "env"))
        post = partial.set(ups)
        tr = Transition(state, post, "env")
        if domain_failure(model, tr) is None and is_legal_transition(model, tr):
            out.append(tr)
    return out


def frozen_deadline(model: Model, s: State) -> Optional[str]:
    """A closed Deadline whose expiration has been reached, if any."""
    t = now(s)
    for d in model.objects_of_type(DEADLINE):
        if s.get(d, "closed") and t >= s.get(d, "t"):
            return d
    return None


def _bad(model: Model, s: State) -> Optional[Tuple[str, str]]:
    f = state_failure(model, s)
    if f is not None:
        return ("invariant-violation", str(f))
    d = frozen_deadline(model, s)
    if d is not None:
        return ("time-frozen", f"{d}: T == t, time can no longer advance")
    return None


# -- canonical form -----------------------------------------------------------

def _instant_slots(model: Model):
    return model.compiled("instant_slots", lambda: tuple(
        (o, f) for o in model.order for f in model.instant_fields(o)))


def time_values(model: Model, cfg: Configuration) -> List[int]:
    """The time values that matter: now, closed objects' instants, stamps."""
    s = cfg.state
    vals = [now(s)]
    for o, f in _instant_slots(model):
        if s.get(o, "closed"):
            vals.append(s.get(o, f))
    for loc in cfg.locals:
        vals.extend(v for k, v in loc if k[0] == "@")
    return vals


def shift_state(model: Model, s: State, k: int) -> State:
    if k == 0:
        return s
    ups = {(TIME, "cur"): now(s) + k}
    for o, f in _instant_slots(model):
        ups[(o, f)] = s.get(o, f) + k
    return s.set(ups)


def shift_config(model: Model, cfg: Configuration, k: int) -> Configuration:
    if k == 0:
        return cfg
    locs = tuple(tuple((n, v + k if n[0] == "@" else v) for n, v in loc)
                 for loc in cfg.locals)
    return Configuration(shift_state(model, cfg.state, k), cfg.pcs, locs, cfg.obligations)


def shift_transition(model: Model, tr: Transition, k: int) -> Transition:
    if k == 0:
        return tr
    return Transition(shift_state(model, tr.pre, k), shift_state(model, tr.post, k), tr.actor)


def canonicalize(model: Model, cfg: Configuration) -> Tuple[Configuration, int]:
    """Canonical representative and the shift m with cfg = canon + m."""
    m = min(time_values(model, cfg))
    return shift_config(model, cfg, -m), m


# -- successors ---------------------------------------------------------------

@dataclass
class Step:
    thread: int
    transitions: Tuple[Transition, ...]
    cfg: Optional[Configuration]
    finding: Optional[Finding] = None
    entry: Optional[State] = None  # state in which an atomic block ran


class Stepper:
    """Successor generation shared by explore and simulate."""

    def __init__(self, model: Model, bounds: Bounds):
        self.model = model
        self.bounds = bounds
        self.rt = Runtime(model, bounds.loop_bound)
        self._closure: Dict[State, list] = {}
        self.env_generated = 0
        self.pruned = 0
        self.assume_reached: Dict[str, int] = {}
        self.assume_passed: Dict[str, int] = {}
        self.warnings: Dict[Tuple[str, str], Finding] = {}

    def env_closure(self, s: State):
        """States reachable by 0..env_moves advances: (state, path, bad)."""
        hit = self._closure.get(s)
        if hit is not None:
            return hit
        out = [(s, (), None)]
        seen = {s}
        frontier = [(s, ())]
        for _ in range(self.bounds.env_moves):
            nxt = []
            for cur, path in frontier:
                for tr in enabled_env_moves(self.model, cur, self.bounds):
                    self.env_generated += 1
                    if tr.post in seen:
                        continue
                    seen.add(tr.post)
                    p = path + (tr,)
                    bad = _bad(self.model, tr.post)
                    out.append((tr.post, p, bad))
                    if bad is None:
                        nxt.append((tr.post, p))
            frontier = nxt
        self._closure[s] = out
        return out

    def successors(self, cfg: Configuration) -> Iterator[Step]:
        rt = self.rt
        for ti in range(len(rt.threads)):
            if rt.terminated(cfg, ti):
                continue
            ins = rt.programs[ti].code[cfg.pcs[ti]]
            has_assume = isinstance(ins, Instr) and _has_assume(ins.stmt)
            if has_assume:
                self.assume_reached[ins.label] = self.assume_reached.get(ins.label, 0) + 1
            if rt.next_is_atomic(cfg, ti):
                yield from self._atomic(cfg, ti, ins, has_assume)
                continue
            out = thread_step(rt, cfg, ti)
            if out.pruned:
                self.pruned += 1
                continue
            if has_assume:
                self.assume_passed[ins.label] = self.assume_passed.get(ins.label, 0) + 1
            yield self._step(ti, out, (), None)

    def _atomic(self, cfg, ti, ins, has_assume) -> Iterator[Step]:
        for s2, path, bad in self.env_closure(cfg.state):
            out = run_atomic(self.rt, cfg.with_state(s2), ti)
            if out.pruned:
                self.pruned += 1
                continue
            if has_assume:
                self.assume_passed[ins.label] = self.assume_passed.get(ins.label, 0) + 1
            if bad is not None:
                kind, culprit = bad
                yield Step(ti, path[:-1], None,
                           Finding(kind, culprit, "reached by environment moves",
                                   "env", ins.label, step=path[-1]))
                continue
            yield self._step(ti, out, path, s2)

    def _step(self, ti: int, out: Outcome, path, entry) -> Step:
        for w in out.warnings:
            self.warnings.setdefault((w.kind, w.culprit), w)
        if out.findings:
            f = out.findings[0]
            return Step(ti, tuple(path), None, f, entry)
        trs = tuple(path) + out.transitions
        if out.transitions:
            bad = _bad(self.model, out.cfg.state)
            if bad is not None and bad[0] == "time-frozen":
                return Step(ti, trs[:-1], None,
                            Finding(bad[0], bad[1], "reached by a thread step",
                                    self.rt.threads[ti], "", step=trs[-1]), entry)
        return Step(ti, trs, out.cfg, None, entry)

    def vacuous(self) -> List[Finding]:
        return [Finding("vacuous-assume", label, "assumption never satisfied when reached")
                for label in sorted(self.assume_reached) if label not in self.assume_passed]


def _has_assume(stmt) -> bool:
    if isinstance(stmt, A.Assume):
        return True
    return isinstance(stmt, A.Atomic) and any(isinstance(a, A.Assume) for a in stmt.body)


# -- exploration --------------------------------------------------------------

def explore(model: Model, bounds: Optional[Bounds] = None, keep: bool = False) -> Report:
    """Breadth-first search over canonical configurations."""
    bounds = bounds or Bounds()
    st = Stepper(model, bounds)
    rt = st.rt
    findings: Dict[Tuple[str, str], Finding] = {}
    parent: Dict[Configuration, Tuple[Optional[Configuration], Tuple[Transition, ...], int]] = {}
    offset: Dict[Configuration, int] = {}
    queue = deque()
    report = Report("pass")
    max_t = 0

    def trace_to(key: Configuration) -> List[Transition]:
        chain = []
        while key is not None:
            p, seg, _ = parent[key]
            if p is not None:
                chain.append((seg, offset[p]))
            key = p
        out = []
        for seg, k in reversed(chain):
            out.extend(shift_transition(model, tr, k) for tr in seg)
        return out

    inits = initial_states(model)
    report.initial = inits[0] if inits else None
    for s in inits:
        cfg = rt.initial(s)
        bad = state_failure(model, s)
        if bad is not None:
            findings.setdefault(("invariant-violation", str(bad)), Finding(
                "invariant-violation", str(bad), "initial state is not good"))
            continue
        key, m = canonicalize(model, cfg)
        if key not in parent:
            parent[key] = (None, (), m)
            offset[key] = m
            queue.append(key)

    inconclusive = False
    while queue:
        cfg = queue.popleft()
        base = offset[cfg]
        max_t = max(max_t, base + now(cfg.state))
        if keep:
            report.configs.append(cfg)
        for step in st.successors(cfg):
            if step.entry is not None and keep:
                report.atomic_entries.append((step.thread, step.entry))
            if step.finding is not None:
                f = step.finding
                k = (f.kind, f.culprit)
                if k not in findings:
                    trace = trace_to(cfg) + [shift_transition(model, tr, base)
                                             for tr in step.transitions]
                    if f.step is not None:
                        trace.append(shift_transition(model, f.step, base))
                    findings[k] = replace(f, trace=tuple(trace), step=None)
                continue
            key, m = canonicalize(model, step.cfg)
            if key in parent:
                continue
            if len(parent) >= bounds.max_configs:
                inconclusive = True
                continue
            parent[key] = (cfg, step.transitions, m)
            offset[key] = base + m
            queue.append(key)

    report.findings = list(findings.values())
    report.warnings = list(st.warnings.values()) + st.vacuous()
    report.stats = {
        "configs": len(parent),
        "env_moves": st.env_generated,
        "pruned": st.pruned,
        "max_T": max_t,
    }
    if report.findings:
        report.verdict = "fail"
    elif inconclusive:
        report.verdict = "inconclusive"
    return report


# -- simulation ---------------------------------------------------------------

SIM_RESTARTS = 100


def simulate(model: Model, seed: int, steps: int,
             bounds: Optional[Bounds] = None) -> Tuple[List[Transition], Report]:
    """Seeded random walk, uniform over enabled successors."""
    bounds = bounds or Bounds()
    rng = random.Random(seed)
    # the walk runs on canonical configurations so that environment closures
    # are shared between steps and between walks; `off` maps back to real time
    st = model.compiled(("stepper", bounds), lambda: Stepper(model, bounds))
    cache = model.compiled(("successors", bounds), dict)
    report = Report("pass")
    inits = [s for s in initial_states(model)]
    if not inits:
        return [], report
    threads = range(len(model.thread_objects))
    for _ in range(SIM_RESTARTS):
        s0 = rng.choice(inits)
        report.initial = s0
        bad = state_failure(model, s0)
        if bad is not None:
            report.verdict = "fail"
            report.findings = [Finding("invariant-violation", str(bad),
                                       "initial state is not good")]
            return [], report
        cfg, off = canonicalize(model, st.rt.initial(s0))
        trace: List[Transition] = []
        dead_end = False
        while len(trace) < steps:
            options = cache.get(cfg)
            if options is None:
                options = cache[cfg] = list(st.successors(cfg))
            if not options:
                # every branch was cut by an assume; the start was infeasible
                dead_end = not all(st.rt.terminated(cfg, i) for i in threads)
                break
            step = rng.choice(options)
            trace.extend(shift_transition(model, tr, off) for tr in step.transitions)
            if step.finding is not None:
                f = step.finding
                if f.step is not None:
                    trace.append(shift_transition(model, f.step, off))
                report.findings = [replace(f, trace=tuple(trace), step=None)]
                report.verdict = "fail"
                break
            cfg, m = canonicalize(model, step.cfg)
            off += m
        if not dead_end:
            break
    if report.verdict == "pass":
        trace = trace[:steps]
    report.stats = {"transitions": len(trace),
                    "max_T": now(trace[-1].post) if trace else now(s0)}
    return trace, report
