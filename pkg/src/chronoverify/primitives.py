"""Deadline and Timer objects, and the inline timer-stamp pattern.

A Timer stops time at its expiration and is an *assumption*: nothing checks
that it is ever reset. A Deadline adds two freeze clauses, so that once time
reaches its expiration neither the expiration nor the Deadline itself can
ever change again; the kernel then demands that every Deadline is destroyed
strictly before it expires.

The operations here are pure: they take a Configuration and return a new
one, raising PrimitiveError when the operation is not allowed.
"""
from __future__ import annotations

from typing import Optional, Tuple

from .config import Configuration
from .lang import ast as A
from .lang.evaluator import Ctx, UnknownStamp, compile_expr
from .model import DEADLINE, TIME, TIMER, Model
from .state import Failure, root_cause, Transition, is_legal_transition, object_inv2
from .timecore import now

PRIMITIVES_PRELUDE = """
type Deadline timed {
  volatile ghost instant t;
  approves(owner, t);
  invariant T <= t;
  invariant unchanged(t) || old(T < t);
  on_unwrap old(T < t);
}

type Timer timed {
  volatile ghost instant t;
  approves(owner, t);
  invariant T <= t;
}
"""

FREEZE_TEXT = "unchanged(t) || old(T < t)"


class PrimitiveError(Exception):
    def __init__(self, code: str, message: str, failure: Optional[Failure] = None,
                 transition: Optional[Transition] = None):
        super().__init__(f"{code}: {message}")
        self.code = code
        self.message = message
        self.failure = failure
        self.transition = transition


def prelude_types() -> Tuple[A.TypeDecl, ...]:
    from .lang.parser import parse_document
    return parse_document(PRIMITIVES_PRELUDE).types


def _ti(model: Model, thread: str) -> int:
    return list(model.threads).index(thread)


def _expect_type(model: Model, obj: str, tname: str):
    if obj not in model.objects or model.objects[obj].type != tname:
        raise PrimitiveError("E_TYPE", f"{obj!r} is not a {tname}")


def _checked(model: Model, tr: Transition) -> None:
    verdict = is_legal_transition(model, tr)
    if not verdict:
        w = verdict.witness
        code = "E_APPROVAL" if w.kind == "approval" else "E_ILLEGAL"
        w = root_cause(model, tr, w)
        raise PrimitiveError(code, str(w), w, tr)


# -- creation and destruction ------------------------------------------------

def create(model: Model, cfg: Configuration, thread: str, obj: str, delta: int,
           tname: str, scope: int = 0) -> Configuration:
    _expect_type(model, obj, tname)
    if delta < 0:
        raise PrimitiveError("E_NEGATIVE_DELTA", f"delta must be nonnegative, got {delta}")
    s = cfg.state
    if s.get(obj, "closed"):
        raise PrimitiveError("E_ALREADY_CLOSED", f"{obj} is already closed")
    if s.get(obj, "owner") != thread:
        raise PrimitiveError("E_NOT_OWNED", f"{obj} is not owned by {thread}")
    post = s.set({
        (obj, "t"): now(s) + delta,
        (TIME, "timed"): s.get(TIME, "timed") | {obj},
        (obj, "closed"): True,
    })
    tr = Transition(s, post, thread)
    _checked(model, tr)
    ti = _ti(model, thread)
    out = cfg.with_state(post)
    if tname == DEADLINE:
        out = out.with_thread(ti, obligations=cfg.obligations[ti] + ((obj, scope),))
    return out


def destroy(model: Model, cfg: Configuration, thread: str, obj: str,
            tname: str) -> Configuration:
    _expect_type(model, obj, tname)
    s = cfg.state
    if not s.get(obj, "closed"):
        raise PrimitiveError("E_NOT_CLOSED", f"{obj} is not closed")
    if s.get(obj, "owner") != thread:
        raise PrimitiveError("E_NOT_OWNED", f"{obj} is owned by {s.get(obj, 'owner')}, not {thread}")
    if tname == DEADLINE and now(s) >= s.get(obj, "t"):
        raise PrimitiveError("E_DEADLINE_EXPIRED",
                             f"{obj} expired: T={now(s)} >= t={s.get(obj, 't')}")
    post = s.set({
        (obj, "closed"): False,
        (TIME, "timed"): s.get(TIME, "timed") - {obj},
    })
    tr = Transition(s, post, thread)
    _checked(model, tr)
    ti = _ti(model, thread)
    out = cfg.with_state(post)
    obls = tuple(ob for ob in cfg.obligations[ti] if ob[0] != obj)
    return out.with_thread(ti, obligations=obls)


def reset_updates(state, obj: str, delta: int, frozen_check: bool):
    """Field updates of a reset; raises E_FROZEN for an expired Deadline."""
    if frozen_check and now(state) >= state.get(obj, "t"):
        raise PrimitiveError("E_FROZEN", f"{obj} is frozen at t={state.get(obj, 't')}",
                             Failure(obj, FREEZE_TEXT))
    if delta < 0:
        raise PrimitiveError("E_NEGATIVE_DELTA", f"delta must be nonnegative, got {delta}")
    return {(obj, "t"): now(state) + delta}


def reset(model: Model, cfg: Configuration, thread: str, obj: str, delta: int,
          tname: str, extra=None) -> Configuration:
    """Reset as a one-action atomic block; ``extra`` adds same-step updates."""
    _expect_type(model, obj, tname)
    s = cfg.state
    ups = reset_updates(s, obj, delta, tname == DEADLINE)
    ups.update(extra or {})
    post = s.set(ups)
    _checked(model, Transition(s, post, thread))
    return cfg.with_state(post)


def deadline_new(model, cfg, thread, d, delta, scope=0):
    return create(model, cfg, thread, d, delta, DEADLINE, scope)


def deadline_reset(model, cfg, thread, d, delta, extra=None):
    return reset(model, cfg, thread, d, delta, DEADLINE, extra)


def deadline_destroy(model, cfg, thread, d):
    return destroy(model, cfg, thread, d, DEADLINE)


def timer_new(model, cfg, thread, tm, delta):
    return create(model, cfg, thread, tm, delta, TIMER)


def timer_reset(model, cfg, thread, tm, delta, extra=None):
    return reset(model, cfg, thread, tm, delta, TIMER, extra)


def timer_destroy(model, cfg, thread, tm):
    return destroy(model, cfg, thread, tm, TIMER)


# -- inline timer stamps -----------------------------------------------------

def timer_record(model: Model, cfg: Configuration, thread: str, name: str) -> Configuration:
    ti = _ti(model, thread)
    loc = cfg.local(ti)
    loc["@" + name] = now(cfg.state)
    return cfg.with_thread(ti, local=loc)


def timer_elapsed(model: Model, cfg: Configuration, thread: str, name: str) -> int:
    stamps = cfg.stamps(_ti(model, thread))
    if name not in stamps:
        raise PrimitiveError("E_UNKNOWN_STAMP", f"timer {name!r} has not been recorded")
    return now(cfg.state) - stamps[name]


def assume_stmt(model: Model, cfg: Configuration, thread: str, expr: A.Expr) -> bool:
    """True to continue, False when the branch is pruned."""
    fn = compile_expr(expr, model)
    s = cfg.state
    tr = Transition(s, s, thread)
    ctx = Ctx(s, s, None, thread, stamps=cfg.stamps(_ti(model, thread)))
    ctx.inv2 = lambda o: object_inv2(model, tr, o)
    try:
        return bool(fn(ctx))
    except UnknownStamp as exc:
        raise PrimitiveError("E_UNKNOWN_STAMP", str(exc)) from None
