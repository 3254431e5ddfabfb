"""Recursive-descent parser for ``.tvk`` model files.

Syntax errors are collected rather than raised one at a time: after an error
the parser skips to the next top-level declaration and carries on, so a file
with several broken declarations reports each of them.
"""
from __future__ import annotations

from typing import List, Optional

from . import ast as A
from . import diagnostics as dg
from .lexer import Token, tokenize

TOP_LEVEL = {"type", "object", "thread", "universe"}
META_FIELDS = {"closed", "owner"}


class _Bail(Exception):
    pass


class Parser:
    def __init__(self, text: str):
        self.tokens, self.errors = tokenize(text)
        self.i = 0

    # -- token helpers ---------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.tokens[min(self.i + k, len(self.tokens) - 1)]

    def at(self, *texts: str) -> bool:
        t = self.tok
        return t.kind in ("op", "kw") and t.text in texts

    def advance(self) -> Token:
        t = self.tok
        if t.kind != "eof":
            self.i += 1
        return t

    def error(self, message: str, tok: Optional[Token] = None, code: str = dg.SYNTAX):
        tok = tok or self.tok
        self.errors.append(dg.Diagnostic(code, tok.line, tok.col, message))
        raise _Bail()

    def expect(self, text: str) -> Token:
        if not self.at(text):
            found = self.tok.text or "end of input"
            self.error(f"expected {text!r}, found {found!r}")
        return self.advance()

    def ident(self, what: str = "identifier") -> Token:
        if self.tok.kind != "ident":
            found = self.tok.text or "end of input"
            self.error(f"expected {what}, found {found!r}")
        return self.advance()

    def integer(self, allow_negative: bool = False) -> int:
        neg = False
        if allow_negative and self.at("-"):
            self.advance()
            neg = True
        if self.tok.kind != "int":
            self.error(f"expected integer, found {self.tok.text or 'end of input'!r}")
        v = int(self.advance().text)
        return -v if neg else v

    # -- top level -------------------------------------------------------

    def parse_document(self) -> A.Document:
        types, objects, threads, universes = [], [], [], []
        while self.tok.kind != "eof":
            start = self.i
            try:
                if self.at("type"):
                    types.append(self.type_decl())
                elif self.at("object"):
                    objects.append(self.object_decl())
                elif self.at("thread"):
                    threads.append(self.thread_decl())
                elif self.at("universe"):
                    universes.append(self.universe_decl())
                else:
                    self.error(f"expected declaration, found {self.tok.text!r}")
            except _Bail:
                self.recover(start)
        return A.Document(tuple(types), tuple(objects), tuple(threads), tuple(universes))

    def recover(self, start: int):
        if self.i == start:
            self.advance()
        depth = 0
        while self.tok.kind != "eof":
            if self.at("{"):
                depth += 1
            elif self.at("}"):
                depth -= 1
            elif depth <= 0 and self.tok.kind == "kw" and self.tok.text in TOP_LEVEL:
                # only a keyword at line start counts as a fresh declaration
                if self.tok.col == 1 or depth < 0:
                    return
            self.advance()

    def type_decl(self) -> A.TypeDecl:
        start = self.expect("type")
        name = self.ident("type name").text
        timed = False
        if self.tok.kind == "ident" and self.tok.text == "timed":  # contextual
            self.advance()
            timed = True
        self.expect("{")
        fields, invs, approvals, unwraps, dyn = [], [], [], [], []
        while not self.at("}"):
            if self.at("invariant"):
                self.advance()
                invs.append(self.expr())
                self.expect(";")
            elif self.at("approves"):
                self.advance()
                self.expect("(")
                self.expect("owner")
                self.expect(",")
                approvals.append(self.ident("field name").text)
                self.expect(")")
                self.expect(";")
            elif self.at("on_unwrap"):
                self.advance()
                unwraps.append(self.expr())
                self.expect(";")
            elif self.at("dynamics"):
                self.advance()
                f = self.ident("field name").text
                self.expect("=")
                dyn.append((f, self.expr()))
                self.expect(";")
            else:
                fields.append(self.field_decl())
        self.expect("}")
        return A.TypeDecl(name, timed, tuple(fields), tuple(invs), tuple(approvals),
                          tuple(unwraps), tuple(dyn), pos=start.pos)

    def field_decl(self) -> A.FieldDecl:
        start = self.tok
        volatile = ghost = False
        if self.at("volatile"):
            self.advance()
            volatile = True
        if self.at("ghost"):
            self.advance()
            ghost = True
        if not self.at(*A.SORTS):
            self.error(f"expected member declaration, found {self.tok.text or 'end of input'!r}")
        sort = self.advance().text
        ref_type = None
        if sort == "objref" and self.at("<"):
            self.advance()
            ref_type = self.ident("type name").text
            self.expect(">")
        name = self.ident("field name").text
        lo = hi = None
        if self.at("in"):
            self.advance()
            lo = self.integer(allow_negative=True)
            self.expect("..")
            hi = self.integer(allow_negative=True)
        self.expect(";")
        return A.FieldDecl(name, sort, volatile, ghost, lo, hi, ref_type, pos=start.pos)

    def object_decl(self) -> A.ObjectDecl:
        start = self.expect("object")
        name = self.ident("object name").text
        self.expect(":")
        tname = self.ident("type name").text
        self.expect("{")
        inits = []
        while not self.at("}"):
            inits.append(self.init())
        self.expect("}")
        return A.ObjectDecl(name, tname, tuple(inits), pos=start.pos)

    def init(self) -> A.Init:
        t = self.tok
        if t.kind == "ident" or (t.kind == "kw" and t.text in META_FIELDS):
            self.advance()
        else:
            self.error(f"expected field name, found {t.text or 'end of input'!r}")
        if self.at("in"):
            self.advance()
            lo = self.integer(allow_negative=True)
            self.expect("..")
            hi = self.integer(allow_negative=True)
            self.expect(";")
            return A.Init(t.text, "range", lo=lo, hi=hi, pos=t.pos)
        self.expect("=")
        if self.at("any"):
            self.advance()
            self.expect(";")
            return A.Init(t.text, "any", pos=t.pos)
        value = self.literal()
        self.expect(";")
        return A.Init(t.text, "value", value=value, pos=t.pos)

    def literal(self):
        t = self.tok
        if t.kind == "int" or self.at("-"):
            return self.integer(allow_negative=True)
        if self.at("true", "false"):
            self.advance()
            return t.text == "true"
        if self.at("null"):
            self.advance()
            return None
        if t.kind == "ident":
            self.advance()
            return A.Name(t.text, pos=t.pos)
        self.error(f"expected literal, found {t.text or 'end of input'!r}")

    def thread_decl(self) -> A.ThreadDecl:
        start = self.expect("thread")
        name = self.ident("thread name").text
        body = self.block()
        return A.ThreadDecl(name, body, pos=start.pos)

    def universe_decl(self) -> A.UniverseDecl:
        start = self.expect("universe")
        name = self.ident("universe name").text
        self.expect("{")
        objects, threads = [], []
        while not self.at("}"):
            if self.at("thread"):
                self.advance()
                threads.append(self.ident("thread name").text)
                self.expect(";")
            else:
                objects.append(self.object_decl())
        self.expect("}")
        return A.UniverseDecl(name, tuple(objects), tuple(threads), pos=start.pos)

    # -- statements --------------------------------------------------------

    def block(self):
        self.expect("{")
        body = []
        while not self.at("}"):
            if self.tok.kind == "eof":
                self.error("unterminated block")
            body.append(self.stmt())
        self.expect("}")
        return tuple(body)

    def stmt(self) -> A.Stmt:
        t = self.tok
        if self.at("atomic"):
            self.advance()
            return A.Atomic(self.block(), pos=t.pos)
        if self.at("assume", "assert"):
            self.advance()
            e = self.expr()
            self.expect(";")
            return (A.Assume if t.text == "assume" else A.Assert)(e, pos=t.pos)
        if self.at("wrap", "unwrap", "bump_volatile_version"):
            self.advance()
            obj = self.ident("object name").text
            self.expect(";")
            cls = {"wrap": A.Wrap, "unwrap": A.Unwrap, "bump_volatile_version": A.Bump}[t.text]
            return cls(obj, pos=t.pos)
        if self.at("own"):
            self.advance()
            self.expect("(")
            owner = self.ident("object name").text
            self.expect(",")
            child = self.ident("object name").text
            self.expect(")")
            self.expect(";")
            return A.Own(owner, child, pos=t.pos)
        if self.at("timer_record"):
            self.advance()
            name = self.ident("timer name").text
            self.expect(";")
            return A.Record(name, pos=t.pos)
        if self.at("loop"):
            return self.loop()
        if self.at(*A.PRIMITIVES):
            self.advance()
            self.expect("(")
            target = self.ident("object name").text
            delta = None
            if not t.text.endswith("destroy"):
                self.expect(",")
                neg_tok = self.tok
                delta = self.integer(allow_negative=True)
                if delta < 0:
                    self.errors.append(dg.Diagnostic(
                        dg.NEGATIVE_DELTA, neg_tok.line, neg_tok.col,
                        f"{t.text} needs a nonnegative delta, got {delta}"))
            self.expect(")")
            self.expect(";")
            return A.Primitive(t.text, target, delta, pos=t.pos)
        target = self.postfix()
        if not isinstance(target, A.Field):
            self.error("expected statement", t)
        self.expect(":=")
        e = self.expr()
        self.expect(";")
        return A.Assign(target, e, pos=t.pos)

    def loop(self) -> A.Loop:
        t = self.expect("loop")
        bound_tok = self.tok
        bound = self.integer()
        if bound <= 0:
            self.error("loop bound must be positive", bound_tok)
        inv = None
        writes = []
        if self.at("invariant"):
            self.advance()
            inv = self.expr()
        if self.at("writes"):
            self.advance()
            writes.append(self.ident("object name").text)
            while self.at(","):
                self.advance()
                writes.append(self.ident("object name").text)
        body = self.block()
        return A.Loop(bound, inv, tuple(writes), body, pos=t.pos)

    # -- expressions -------------------------------------------------------

    def expr(self) -> A.Expr:
        if self.at("forall"):
            t = self.advance()
            var = self.ident("variable").text
            self.expect(":")
            return A.Forall(var, self.expr(), pos=t.pos)
        test = self.implies()
        if self.at("?"):
            t = self.advance()
            then = self.expr()
            self.expect(":")
            other = self.expr()
            return A.Cond(test, then, other, pos=t.pos)
        return test

    def implies(self) -> A.Expr:
        left = self.disj()
        if self.at("==>"):
            t = self.advance()
            right = self.implies_rhs()
            return A.Binary("==>", left, right, pos=t.pos)
        return left

    def implies_rhs(self) -> A.Expr:
        if self.at("forall"):
            return self.expr()
        return self.implies()

    def disj(self) -> A.Expr:
        left = self.conj()
        while self.at("||"):
            t = self.advance()
            left = A.Binary("||", left, self.conj(), pos=t.pos)
        return left

    def conj(self) -> A.Expr:
        left = self.comparison()
        while self.at("&&"):
            t = self.advance()
            left = A.Binary("&&", left, self.comparison(), pos=t.pos)
        return left

    def comparison(self) -> A.Expr:
        left = self.additive()
        if self.at("==", "!=", "<", "<=", ">", ">="):
            t = self.advance()
            left = A.Binary(t.text, left, self.additive(), pos=t.pos)
            if self.at("==", "!=", "<", "<=", ">", ">="):
                self.error("comparisons do not chain; add parentheses")
        return left

    def additive(self) -> A.Expr:
        left = self.multiplicative()
        while self.at("+", "-"):
            t = self.advance()
            left = A.Binary(t.text, left, self.multiplicative(), pos=t.pos)
        return left

    def multiplicative(self) -> A.Expr:
        left = self.unary()
        while self.at("*"):
            t = self.advance()
            left = A.Binary("*", left, self.unary(), pos=t.pos)
        return left

    def unary(self) -> A.Expr:
        if self.at("-", "!"):
            t = self.advance()
            return A.Unary(t.text, self.unary(), pos=t.pos)
        return self.postfix()

    def postfix(self) -> A.Expr:
        e = self.primary()
        while self.at(".", "["):
            t = self.advance()
            if t.text == ".":
                nt = self.tok
                if nt.kind == "ident" or (nt.kind == "kw" and nt.text == "owner"):
                    self.advance()
                else:
                    self.error(f"expected field name, found {nt.text or 'end of input'!r}")
                e = A.Field(e, nt.text, pos=nt.pos)
            else:
                idx = self.expr()
                self.expect("]")
                e = A.Index(e, idx, pos=t.pos)
        return e

    _WRAPPERS = {"old": A.Old, "unchanged": A.Unchanged, "inv2": A.Inv2,
                 "mine": A.Mine, "closed": A.Closed}

    def primary(self) -> A.Expr:
        t = self.tok
        if t.kind == "int":
            self.advance()
            return A.IntLit(int(t.text), pos=t.pos)
        if t.kind == "ident":
            self.advance()
            return A.Name(t.text, pos=t.pos)
        if self.at("true", "false"):
            self.advance()
            return A.BoolLit(t.text == "true", pos=t.pos)
        if self.at("null"):
            self.advance()
            return A.NullLit(pos=t.pos)
        if self.at("self"):
            self.advance()
            return A.SelfRef(pos=t.pos)
        if self.at("T"):
            self.advance()
            return A.Now(pos=t.pos)
        if self.at("dT"):
            self.advance()
            return A.Delta(pos=t.pos)
        if self.at("("):
            self.advance()
            e = self.expr()
            self.expect(")")
            return e
        if t.kind == "kw" and t.text in self._WRAPPERS:
            self.advance()
            self.expect("(")
            e = self.expr()
            self.expect(")")
            return self._WRAPPERS[t.text](e, pos=t.pos)
        if self.at("elapsed"):
            self.advance()
            self.expect("(")
            name = self.ident("timer name").text
            self.expect(")")
            return A.Elapsed(name, pos=t.pos)
        if self.at("forall"):
            return self.expr()
        self.error(f"expected expression, found {t.text or 'end of input'!r}")


def parse_document(text: str) -> A.Document:
    """Parse ``text`` into a syntax tree; raises ModelError on syntax errors."""
    p = Parser(text)
    doc = p.parse_document()
    if p.errors:
        errs = sorted(p.errors, key=lambda d: (d.line, d.col))
        raise dg.ModelError(errs)
    return doc


def parse_expr(text: str) -> A.Expr:
    p = Parser(text)
    try:
        e = p.expr()
        if p.tok.kind != "eof":
            p.error(f"unexpected {p.tok.text!r} after expression")
    except _Bail:
        pass
    if p.errors:
        raise dg.ModelError(p.errors)
    return e
