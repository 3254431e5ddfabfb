"""The built-in Time type and the ``time`` singleton.

Time is an ordinary type with three invariants; nothing in the kernel treats
it specially beyond installing it and keeping it closed forever.
"""
from __future__ import annotations

from dataclasses import replace
from typing import Optional

from .lang import ast as A
from .lang import diagnostics as dg
from .model import ENV, TIME, TIME_TYPE, Model
from .state import Failure, State, Transition, first_failure

TIME_PRELUDE = """
type Time {
  volatile ghost instant cur;
  volatile ghost objset timed;
  invariant old(cur) <= cur;
  invariant forall o: old(timed[o]) ==> timed[o] || inv2(o);
  invariant forall o: timed[o] && closed(o) ==> unchanged(cur) || inv2(o);
}
"""

MONOTONE = "old(cur) <= cur"
STABLE = "forall o: old(timed[o]) ==> timed[o] || inv2(o)"
RESPECTS = "forall o: timed[o] && closed(o) ==> unchanged(cur) || inv2(o)"


def _prelude_type() -> A.TypeDecl:
    from .lang.parser import parse_document
    return parse_document(TIME_PRELUDE).types[0]


def install_time(doc: A.Document, cur: int = 0) -> A.Document:
    """Add the Time type and the eternal ``time`` object to ``doc``."""
    for t in doc.types:
        if t.name == TIME_TYPE:
            line, col = t.pos
            raise dg.ModelError([dg.Diagnostic(
                dg.TIME_DECLARED, line, col, "type Time is built in and cannot be redeclared")])
    for o in doc.objects:
        if o.name == TIME:
            line, col = o.pos
            raise dg.ModelError([dg.Diagnostic(
                dg.DUPLICATE, line, col, "object 'time' is built in")])
    time_obj = A.ObjectDecl(TIME, TIME_TYPE, (
        A.Init("cur", "value", value=cur),
        A.Init("closed", "value", value=True),
    ))
    return replace(doc, types=(_prelude_type(),) + doc.types,
                   objects=(time_obj,) + doc.objects)


def now(s: State) -> int:
    return s.get(TIME, "cur")


def delta(tr: Transition) -> int:
    return now(tr.post) - now(tr.pre)


def check_time_clauses(model: Model, tr: Transition) -> Optional[Failure]:
    """Evaluate Time's three invariants, naming a witness for quantified ones."""
    pre, post = tr.pre, tr.post
    if now(pre) > now(post):
        return Failure(TIME, MONOTONE)
    was, is_ = pre.get(TIME, "timed"), post.get(TIME, "timed")
    for o in model.order:
        if o in was and o not in is_ and first_failure(model, tr, o) is not None:
            return Failure(TIME, f"{STABLE} [witness {o}]")
    if now(pre) != now(post):
        for o in model.order:
            if o in is_ and post.get(o, "closed") and first_failure(model, tr, o) is not None:
                return Failure(TIME, f"{RESPECTS} [witness {o}]")
    return None
