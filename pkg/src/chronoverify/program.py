"""Thread programs: flattening, access rules and small-step execution.

Each thread body is flattened into a list of instructions addressed by a
program counter. Loops become a head/end pair with a bounded counter kept
in the thread's locals. The environment only moves time immediately before
an atomic block, so everything else a thread does is a single step with no
interleaving; the explorer composes environment moves with atomics.

Problems found while stepping are returned as findings, never raised.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from .config import Configuration
from .lang import ast as A
from .lang.evaluator import Ctx, EvalError, UnknownStamp, compile_expr
from .model import DEADLINE, TIME, Model
from .primitives import PrimitiveError, create, destroy, reset_updates
from .state import (Failure, root_cause, State, Transition, is_legal_transition, object_inv2,
                    state_failure)
from .timecore import check_time_clauses, now

# -- findings ------------------------------------------------------------------

KINDS = ("invariant-violation", "illegal-transition", "assertion-failure",
         "access-violation", "deadline-expired", "obligation-leak", "time-frozen",
         "vacuous-assume")

_PRIMITIVE_KIND = {
    "E_DEADLINE_EXPIRED": "deadline-expired",
    "E_FROZEN": "illegal-transition",
    "E_ILLEGAL": "illegal-transition",
    "E_APPROVAL": "illegal-transition",
}


@dataclass(frozen=True)
class Finding:
    kind: str
    culprit: str
    message: str = ""
    thread: Optional[str] = None
    label: str = ""
    trace: Tuple[Transition, ...] = ()
    step: Optional[Transition] = None  # the offending transition, if there is one


class AccessError(Exception):
    pass


# -- instructions -----------------------------------------------------------

@dataclass(frozen=True)
class Instr:
    stmt: object
    label: str


@dataclass(frozen=True)
class LoopHead:
    loop_id: int
    bound: int
    invariant: Optional[A.Expr]
    exit_pc: int
    label: str


@dataclass(frozen=True)
class LoopEnd:
    loop_id: int
    head_pc: int
    stamps: Tuple[str, ...]
    label: str


def _label(pos, prefix=""):
    return f"{prefix}{pos[0]}:{pos[1]}"


@dataclass
class Program:
    thread: str
    code: List[object] = field(default_factory=list)
    scopes: Dict[int, int] = field(default_factory=dict)  # pc -> enclosing loop id

    def label(self, pc: int) -> str:
        return "end" if pc >= len(self.code) else self.code[pc].label


def flatten(thread: A.ThreadDecl, loop_bound: Optional[int] = None) -> Program:
    prog = Program(thread.name)
    counter = [0]

    def emit(body, scope):
        for s in body:
            if isinstance(s, A.Loop):
                counter[0] += 1
                lid = counter[0]
                bound = s.bound if loop_bound is None else min(s.bound, loop_bound)
                head = len(prog.code)
                prog.code.append(None)
                prog.scopes[head] = scope
                emit(s.body, lid)
                stamps = tuple(sorted({r.name for r in _records(s.body)}))
                prog.scopes[len(prog.code)] = lid
                prog.code.append(LoopEnd(lid, head, stamps, _label(s.pos, "end@")))
                prog.code[head] = LoopHead(lid, bound, s.invariant, len(prog.code),
                                           _label(s.pos))
            else:
                prog.scopes[len(prog.code)] = scope
                prog.code.append(Instr(s, _label(s.pos)))

    emit(thread.body, 0)
    return prog


def _records(body):
    for s in body:
        if isinstance(s, A.Record):
            yield s
        elif isinstance(s, (A.Atomic, A.Loop)):
            yield from _records(s.body)


# -- evaluation helpers -----------------------------------------------------

class Runtime:
    """Per-model compiled programs and expressions."""

    def __init__(self, model: Model, loop_bound: Optional[int] = None):
        self.model = model
        self.threads = list(model.threads)
        self.programs = [flatten(model.threads[t], loop_bound) for t in self.threads]
        self._fns: Dict[int, object] = {}

    def fn(self, e: A.Expr):
        key = id(e)
        f = self._fns.get(key)
        if f is None:
            f = self._fns[key] = (compile_expr(e, self.model), e)
        return f[0]

    def eval(self, e: A.Expr, cfg: Configuration, ti: int, state: Optional[State] = None):
        s = cfg.state if state is None else state
        tr = Transition(s, s, self.threads[ti])
        ctx = Ctx(s, s, None, self.threads[ti], stamps=cfg.stamps(ti))
        ctx.inv2 = lambda o: object_inv2(self.model, tr, o)
        return self.fn(e)(ctx)

    def initial(self, state: State) -> Configuration:
        n = len(self.threads)
        return Configuration(state, (0,) * n, ((),) * n, ((),) * n)

    def terminated(self, cfg: Configuration, ti: int) -> bool:
        return cfg.pcs[ti] >= len(self.programs[ti].code)

    def next_is_atomic(self, cfg: Configuration, ti: int) -> bool:
        if self.terminated(cfg, ti):
            return False
        ins = self.programs[ti].code[cfg.pcs[ti]]
        return isinstance(ins, Instr) and isinstance(ins.stmt, A.Atomic)


# -- access rules -------------------------------------------------------------

def access_check(model: Model, thread: str, obj: str, fname: str, state: State,
                 write: bool, in_atomic: bool) -> None:
    """Raise AccessError unless ``thread`` may touch ``obj.fname`` here."""
    if obj is None:
        raise AccessError(f"null dereference of .{fname}")
    if obj == TIME and not write:
        return
    fd = model.type_of(obj).field_decl(fname) if fname not in ("owner", "closed") else None
    closed = state.get(obj, "closed")
    owner = state.get(obj, "owner")
    if not closed:
        if owner != thread:
            raise AccessError(f"{obj} is open and owned by {owner}, not {thread}")
        return
    volatile = fd is not None and fd.volatile
    if write:
        if not volatile:
            raise AccessError(f"write to nonvolatile field {obj}.{fname} of a closed object")
        if not in_atomic:
            raise AccessError(f"write to volatile field {obj}.{fname} outside an atomic block")
        return
    if volatile and not in_atomic and not (fd is not None and fd.ghost):
        raise AccessError(f"read of volatile field {obj}.{fname} outside an atomic block")


def _field_reads(e: A.Expr):
    for n in A.walk(e):
        if isinstance(n, A.Field):
            yield n


def _concrete(model: Model, obj, fname) -> bool:
    if obj is None or obj == TIME or obj not in model.objects:
        return False
    fd = model.type_of(obj).field_decl(fname)
    return fd is not None and not fd.ghost


# -- stepping -----------------------------------------------------------------

@dataclass
class Outcome:
    cfg: Optional[Configuration]
    transitions: Tuple[Transition, ...] = ()
    findings: Tuple[Finding, ...] = ()
    pruned: bool = False
    warnings: Tuple[Finding, ...] = ()


def _finding(kind, culprit, message, thread, label, step=None) -> Finding:
    return Finding(kind, culprit, message, thread, label, step=step)


def domain_failure(model: Model, tr: Transition) -> Optional[Failure]:
    """A declared field range broken by an object the transition updates."""
    for o in model.order:
        row = tr.post.objs[o]
        if row == tr.pre.objs[o]:
            continue
        for f, lo, hi in _ranges(model, o):
            v = tr.post.get(o, f)
            if not lo <= v <= hi:
                return Failure(o, f"{f} in {lo}..{hi}", "range")
    return None


def _ranges(model: Model, o: str):
    tname = model.objects[o].type
    return model.compiled(("ranges", tname), lambda: tuple(
        (f.name, f.lo, f.hi) for f in model.types[tname].fields if f.lo is not None))


def _check_transition(rt: Runtime, tr: Transition, thread: str, label: str,
                      kind_if_illegal="illegal-transition") -> Optional[Finding]:
    bad = domain_failure(rt.model, tr)
    if bad is not None:
        return _finding("invariant-violation", str(bad), f"value out of range: {bad}",
                        thread, label, tr)
    verdict = is_legal_transition(rt.model, tr)
    if not verdict:
        w = verdict.witness
        if w.obj == TIME:
            w = check_time_clauses(rt.model, tr) or w
        w = root_cause(rt.model, tr, w)
        return _finding(kind_if_illegal, str(w), f"transition violates {w}",
                        thread, label, tr)
    bad = state_failure(rt.model, tr.post)
    if bad is not None:
        return _finding("invariant-violation", str(bad),
                        f"poststate breaks {bad}", thread, label, tr)
    return None


def thread_step(rt: Runtime, cfg: Configuration, ti: int) -> Outcome:
    """Execute the next statement of thread ``ti`` (no environment moves)."""
    prog = rt.programs[ti]
    pc = cfg.pcs[ti]
    thread = rt.threads[ti]
    ins = prog.code[pc]
    label = ins.label
    try:
        if isinstance(ins, LoopHead):
            return _loop_head(rt, cfg, ti, ins)
        if isinstance(ins, LoopEnd):
            return _loop_end(rt, cfg, ti, ins)
        s = ins.stmt
        if isinstance(s, A.Atomic):
            return run_atomic(rt, cfg, ti)
        return _sequential(rt, cfg, ti, s, label)
    except AccessError as exc:
        return Outcome(None, findings=(_finding("access-violation", label, str(exc),
                                                thread, label),))
    except UnknownStamp as exc:
        return Outcome(None, findings=(_finding("access-violation", label, str(exc),
                                                thread, label),))
    except EvalError as exc:
        return Outcome(None, findings=(_finding("assertion-failure", label,
                                                f"evaluation error: {exc}", thread, label),))


def _advance(rt: Runtime, cfg: Configuration, ti: int, pc: int,
             transitions=(), findings=()) -> Outcome:
    cfg = cfg.with_thread(ti, pc=pc)
    findings = list(findings)
    if pc >= len(rt.programs[ti].code) and cfg.obligations[ti]:
        live = ", ".join(o for o, _ in cfg.obligations[ti])
        findings.append(_finding("obligation-leak", live,
                                 f"thread ends with live Deadline(s) {live}",
                                 rt.threads[ti], "end"))
    return Outcome(cfg, tuple(transitions), tuple(findings))


def _apply(rt: Runtime, cfg: Configuration, ti: int, label: str,
           updates, kind_if_illegal="illegal-transition") -> Outcome:
    thread = rt.threads[ti]
    post = cfg.state.set(updates)
    tr = Transition(cfg.state, post, thread)
    bad = _check_transition(rt, tr, thread, label, kind_if_illegal)
    if bad is not None:
        return Outcome(None, (), (bad,))
    return _advance(rt, cfg.with_state(post), ti, cfg.pcs[ti] + 1, (tr,))


def _sequential(rt: Runtime, cfg: Configuration, ti: int, s, label: str) -> Outcome:
    model = rt.model
    thread = rt.threads[ti]
    state = cfg.state
    pc = cfg.pcs[ti]
    if isinstance(s, A.Bump):
        return _advance(rt, cfg, ti, pc + 1)
    if isinstance(s, A.Record):
        loc = cfg.local(ti)
        loc["@" + s.name] = now(state)
        return _advance(rt, cfg.with_thread(ti, local=loc), ti, pc + 1)
    if isinstance(s, A.Assume):
        if rt.eval(s.expr, cfg, ti):
            return _advance(rt, cfg, ti, pc + 1)
        return Outcome(None, pruned=True)
    if isinstance(s, A.Assert):
        if rt.eval(s.expr, cfg, ti):
            return _advance(rt, cfg, ti, pc + 1)
        return Outcome(None, findings=(_finding(
            "assertion-failure", f"assert {_text(s.expr)}", "assertion does not hold",
            thread, label),))
    if isinstance(s, A.Assign):
        obj = rt.eval(s.target.base, cfg, ti)
        access_check(model, thread, obj, s.target.name, state, True, False)
        for r in _field_reads(s.expr):
            access_check(model, thread, rt.eval(r.base, cfg, ti), r.name, state, False, False)
        value = rt.eval(s.expr, cfg, ti)
        return _apply(rt, cfg, ti, label, {(obj, s.target.name): value})
    if isinstance(s, A.Wrap):
        o = s.obj
        if state.get(o, "closed") or state.get(o, "owner") != thread:
            raise AccessError(f"wrap {o}: not open and owned by {thread}")
        ups = {(o, "closed"): True}
        if model.type_of(o).timed:
            ups[(TIME, "timed")] = state.get(TIME, "timed") | {o}
        return _apply(rt, cfg, ti, label, ups, "invariant-violation")
    if isinstance(s, A.Unwrap):
        o = s.obj
        if not state.get(o, "closed") or state.get(o, "owner") != thread:
            raise AccessError(f"unwrap {o}: not wrapped by {thread}")
        ups = {(o, "closed"): False}
        if model.type_of(o).timed:
            ups[(TIME, "timed")] = state.get(TIME, "timed") - {o}
        for c in model.order:
            if state.get(c, "owner") == o:
                ups[(c, "owner")] = thread
        return _apply(rt, cfg, ti, label, ups)
    if isinstance(s, A.Own):
        owner, child = s.owner, s.child
        if state.get(owner, "closed") or state.get(owner, "owner") != thread:
            raise AccessError(f"own: {owner} is not open and owned by {thread}")
        if not state.get(child, "closed") or state.get(child, "owner") != thread:
            raise AccessError(f"own: {child} is not wrapped by {thread}")
        return _apply(rt, cfg, ti, label, {(child, "owner"): owner})
    if isinstance(s, A.Primitive):
        kind, action = s.op.split("_")
        tname = "Deadline" if kind == "deadline" else "Timer"
        try:
            if action == "new":
                scope = rt.programs[ti].scopes.get(pc, 0)
                new = create(model, cfg, thread, s.target, s.delta, tname, scope)
            else:
                new = destroy(model, cfg, thread, s.target, tname)
        except PrimitiveError as exc:
            kind_ = _PRIMITIVE_KIND.get(exc.code, "access-violation")
            culprit = str(exc.failure) if exc.failure else f"{s.target}: {exc.code}"
            return Outcome(None, findings=(_finding(kind_, culprit, exc.message, thread,
                                                    label, exc.transition),))
        tr = Transition(cfg.state, new.state, thread)
        bad = state_failure(model, new.state)
        if bad is not None:
            return Outcome(None, findings=(_finding("invariant-violation", str(bad),
                                                    "poststate not good", thread, label, tr),))
        return _advance(rt, new, ti, pc + 1, (tr,))
    raise TypeError(f"unexpected statement {s!r}")


def _loop_head(rt: Runtime, cfg: Configuration, ti: int, ins: LoopHead) -> Outcome:
    thread = rt.threads[ti]
    if ins.invariant is not None and not rt.eval(ins.invariant, cfg, ti):
        return Outcome(None, findings=(_finding(
            "assertion-failure", f"loop invariant {_text(ins.invariant)}",
            "loop invariant does not hold at the loop head", thread, ins.label),))
    loc = cfg.local(ti)
    key = f"#{ins.loop_id}"
    count = loc.get(key, 0)
    if count >= ins.bound:
        loc.pop(key, None)
        return _advance(rt, cfg.with_thread(ti, local=loc), ti, ins.exit_pc)
    loc[key] = count + 1
    return _advance(rt, cfg.with_thread(ti, local=loc), ti, cfg.pcs[ti] + 1)


def _loop_end(rt: Runtime, cfg: Configuration, ti: int, ins: LoopEnd) -> Outcome:
    leaked = [o for o, scope in cfg.obligations[ti] if scope == ins.loop_id]
    if leaked:
        return Outcome(None, findings=(_finding(
            "obligation-leak", ", ".join(leaked),
            "loop body ends with a live Deadline created in it",
            rt.threads[ti], ins.label),))
    loc = cfg.local(ti)
    for name in ins.stamps:
        loc.pop("@" + name, None)
    return _advance(rt, cfg.with_thread(ti, local=loc), ti, ins.head_pc)


def run_atomic(rt: Runtime, cfg: Configuration, ti: int) -> Outcome:
    """Run the atomic block at thread ``ti``'s pc as one transition."""
    model = rt.model
    thread = rt.threads[ti]
    ins = rt.programs[ti].code[cfg.pcs[ti]]
    label = ins.label
    pre = cfg.state
    work = pre
    loc = None
    physical = set()
    try:
        for a in ins.stmt.body:
            wcfg = cfg if loc is None else cfg.with_thread(ti, local=loc)
            if isinstance(a, A.Assume):
                if not rt.eval(a.expr, wcfg, ti, work):
                    return Outcome(None, pruned=True)
            elif isinstance(a, A.Assert):
                if not rt.eval(a.expr, wcfg, ti, work):
                    return Outcome(None, findings=(_finding(
                        "assertion-failure", f"assert {_text(a.expr)}",
                        "assertion does not hold", thread, label),))
            elif isinstance(a, A.Assign):
                obj = rt.eval(a.target.base, wcfg, ti, work)
                access_check(model, thread, obj, a.target.name, work, True, True)
                if _concrete(model, obj, a.target.name):
                    physical.add((obj, a.target.name))
                for r in _field_reads(a.expr):
                    ro = rt.eval(r.base, wcfg, ti, work)
                    access_check(model, thread, ro, r.name, work, False, True)
                    if _concrete(model, ro, r.name):
                        physical.add((ro, r.name))
                work = work.set({(obj, a.target.name): rt.eval(a.expr, wcfg, ti, work)})
            elif isinstance(a, A.Primitive):
                frozen = a.op.startswith("deadline")
                work = work.set(reset_updates(work, a.target, a.delta, frozen))
            elif isinstance(a, A.Record):
                loc = cfg.local(ti) if loc is None else loc
                loc["@" + a.name] = now(work)
            elif isinstance(a, A.Bump):
                pass
            else:
                raise TypeError(f"unexpected atomic action {a!r}")
    except PrimitiveError as exc:
        tr = Transition(pre, work, thread)
        culprit = str(exc.failure) if exc.failure else exc.code
        return Outcome(None, findings=(_finding(_PRIMITIVE_KIND.get(exc.code, "illegal-transition"),
                                                culprit, exc.message, thread, label, tr),))
    tr = Transition(pre, work, thread)
    bad = _check_transition(rt, tr, thread, label)
    if bad is not None:
        return Outcome(None, findings=(bad,))
    out = cfg.with_state(work)
    if loc is not None:
        out = out.with_thread(ti, local=loc)
    res = _advance(rt, out, ti, cfg.pcs[ti] + 1, (tr,))
    if len(physical) > 1:
        res.warnings = (_finding("multiple-physical-accesses", label,
                                 f"multiple physical accesses in one atomic: "
                                 f"{sorted(physical)}", thread, label),)
    return res


def _text(e: A.Expr) -> str:
    from .lang.printer import expr
    return expr(e)


def successors_without_env(rt: Runtime, cfg: Configuration) -> List[Tuple[int, Outcome]]:
    return [(ti, thread_step(rt, cfg, ti)) for ti in range(len(rt.threads))
            if not rt.terminated(cfg, ti)]
