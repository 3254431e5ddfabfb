"""Compile expressions to Python closures over an evaluation context.

Non-``old`` subexpressions read the poststate, ``old(...)`` reads the
prestate. ``T`` is the time in the state being read and ``dT`` the advance
of the transition. ``inv2(o)`` is delegated back to the kernel through the
context so the evaluator stays independent of it.
"""
from __future__ import annotations

from typing import Callable, Dict, Optional, Tuple

from . import ast as A

TIME = "time"


class EvalError(Exception):
    pass


class UnknownStamp(EvalError):
    pass


class Ctx:
    __slots__ = ("pre", "post", "self_obj", "actor", "env", "inv2", "stamps")

    def __init__(self, pre, post, self_obj=None, actor=None, inv2=None, stamps=None):
        self.pre = pre
        self.post = post
        self.self_obj = self_obj
        self.actor = actor
        self.env: Dict[str, object] = {}
        self.inv2 = inv2
        self.stamps = stamps or {}


Fn = Callable[[Ctx], object]


def compile_expr(e: A.Expr, model, self_type: Optional[str] = None,
                 bound: Tuple[str, ...] = ()) -> Fn:
    return _Compiler(model, self_type).c(e, bound, False)


class _Compiler:
    def __init__(self, model, self_type):
        self.model = model
        self.self_fields = set()
        if self_type is not None:
            self.self_fields = {f.name for f in model.types[self_type].fields}

    def c(self, e: A.Expr, bound, old: bool) -> Fn:
        side = "pre" if old else "post"

        if isinstance(e, (A.IntLit, A.BoolLit)):
            v = e.value
            return lambda ctx: v
        if isinstance(e, A.NullLit):
            return lambda ctx: None
        if isinstance(e, A.SelfRef):
            return lambda ctx: ctx.self_obj
        if isinstance(e, A.Name):
            name = e.ident
            if name in bound:
                return lambda ctx: ctx.env[name]
            if name in self.self_fields:
                if old:
                    return lambda ctx: ctx.pre.get(ctx.self_obj, name)
                return lambda ctx: ctx.post.get(ctx.self_obj, name)
            return lambda ctx: name
        if isinstance(e, A.Now):
            if old:
                return lambda ctx: ctx.pre.get(TIME, "cur")
            return lambda ctx: ctx.post.get(TIME, "cur")
        if isinstance(e, A.Delta):
            if old:
                return lambda ctx: 0
            return lambda ctx: ctx.post.get(TIME, "cur") - ctx.pre.get(TIME, "cur")
        if isinstance(e, A.Elapsed):
            name = e.name

            def elapsed(ctx):
                try:
                    stamp = ctx.stamps[name]
                except KeyError:
                    raise UnknownStamp(f"E_UNKNOWN_STAMP: timer {name!r} not recorded") from None
                return getattr(ctx, side).get(TIME, "cur") - stamp
            return elapsed
        if isinstance(e, A.Field):
            base = self.c(e.base, bound, old)
            fname = e.name

            def read(ctx):
                o = base(ctx)
                if o is None:
                    raise EvalError(f"null dereference reading .{fname}")
                try:
                    return getattr(ctx, side).get(o, fname)
                except KeyError:
                    raise EvalError(f"object {o!r} has no field {fname!r}") from None
            return read
        if isinstance(e, A.Index):
            base = self.c(e.base, bound, old)
            idx = self.c(e.index, bound, old)
            return lambda ctx: idx(ctx) in base(ctx)
        if isinstance(e, A.Old):
            return self.c(e.expr, bound, True)
        if isinstance(e, A.Unchanged):
            a = self.c(e.expr, bound, True)
            b = self.c(e.expr, bound, old)
            return lambda ctx: a(ctx) == b(ctx)
        if isinstance(e, A.Closed):
            o = self.c(e.expr, bound, old)
            return lambda ctx: _meta(getattr(ctx, side), o(ctx), "closed")
        if isinstance(e, A.Mine):
            o = self.c(e.expr, bound, old)

            def mine(ctx):
                s = getattr(ctx, side)
                obj = o(ctx)
                return (_meta(s, obj, "owner") == ctx.self_obj
                        and _meta(s, obj, "closed"))
            return mine
        if isinstance(e, A.Inv2):
            o = self.c(e.expr, bound, old)
            return lambda ctx: ctx.inv2(o(ctx))
        if isinstance(e, A.Unary):
            a = self.c(e.expr, bound, old)
            if e.op == "-":
                return lambda ctx: -a(ctx)
            return lambda ctx: not a(ctx)
        if isinstance(e, A.Binary):
            a = self.c(e.left, bound, old)
            b = self.c(e.right, bound, old)
            return _BINARY[e.op](a, b)
        if isinstance(e, A.Cond):
            t = self.c(e.test, bound, old)
            a = self.c(e.then, bound, old)
            b = self.c(e.other, bound, old)
            return lambda ctx: a(ctx) if t(ctx) else b(ctx)
        if isinstance(e, A.Forall):
            var = e.var
            body = self.c(e.body, bound + (var,), old)
            universe = tuple(self.model.order)

            def forall(ctx):
                saved = ctx.env.get(var, _MISSING)
                try:
                    for o in universe:
                        ctx.env[var] = o
                        if not body(ctx):
                            return False
                    return True
                finally:
                    if saved is _MISSING:
                        ctx.env.pop(var, None)
                    else:
                        ctx.env[var] = saved
            return forall
        raise TypeError(f"cannot compile {e!r}")


_MISSING = object()


def _meta(state, obj, name):
    if obj is None:
        raise EvalError(f"null dereference reading {name}")
    try:
        return state.get(obj, name)
    except KeyError:
        # threads and unknown names are never closed and own nothing
        return False if name == "closed" else None


_BINARY = {
    "+": lambda a, b: lambda ctx: a(ctx) + b(ctx),
    "-": lambda a, b: lambda ctx: a(ctx) - b(ctx),
    "*": lambda a, b: lambda ctx: a(ctx) * b(ctx),
    "<": lambda a, b: lambda ctx: a(ctx) < b(ctx),
    "<=": lambda a, b: lambda ctx: a(ctx) <= b(ctx),
    ">": lambda a, b: lambda ctx: a(ctx) > b(ctx),
    ">=": lambda a, b: lambda ctx: a(ctx) >= b(ctx),
    "==": lambda a, b: lambda ctx: a(ctx) == b(ctx),
    "!=": lambda a, b: lambda ctx: a(ctx) != b(ctx),
    "&&": lambda a, b: lambda ctx: bool(a(ctx)) and bool(b(ctx)),
    "||": lambda a, b: lambda ctx: bool(a(ctx)) or bool(b(ctx)),
    "==>": lambda a, b: lambda ctx: (not a(ctx)) or bool(b(ctx)),
}


def eval_expr(model, e: A.Expr, tr, self_obj: Optional[str] = None, stamps=None):
    """Evaluate ``e`` on transition ``tr`` with ``self`` bound to ``self_obj``."""
    from ..state import object_inv2  # kernel judgments live one level up

    self_type = model.objects[self_obj].type if self_obj in model.objects else None
    fn = compile_expr(e, model, self_type)
    ctx = Ctx(tr.pre, tr.post, self_obj, tr.actor, stamps=stamps)
    ctx.inv2 = lambda o: object_inv2(model, tr, o)
    return fn(ctx)
