from __future__ import annotations

import re
from dataclasses import dataclass
from typing import List, Tuple

from . import diagnostics as dg

KEYWORDS = {
    "type", "volatile", "ghost", "int", "bool", "objref", "objset",
    "instant", "in", "invariant", "approves", "owner", "on_unwrap", "dynamics",
    "object", "thread", "universe", "true", "false", "null", "any", "T", "dT",
    "old", "unchanged", "inv2", "mine", "closed", "forall", "self", "elapsed",
    "atomic", "assume", "assert", "loop", "writes", "wrap", "unwrap", "own",
    "timer_record", "bump_volatile_version",
    "deadline_new", "deadline_reset", "deadline_destroy",
    "timer_new", "timer_reset", "timer_destroy",
}

_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>//[^\n]*)
  | (?P<int>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>==>|\.\.|:=|==|!=|<=|>=|&&|\|\||[-+*<>!?:;,.(){}\[\]=])
""", re.VERBOSE)


@dataclass(frozen=True)
class Token:
    kind: str  # int | ident | kw | op | eof
    text: str
    line: int
    col: int

    @property
    def pos(self) -> Tuple[int, int]:
        return (self.line, self.col)


def tokenize(text: str) -> Tuple[List[Token], List[dg.Diagnostic]]:
    tokens: List[Token] = []
    errors: List[dg.Diagnostic] = []
    line, line_start, i = 1, 0, 0
    while i < len(text):
        m = _TOKEN.match(text, i)
        col = i - line_start + 1
        if m is None:
            errors.append(dg.Diagnostic(dg.LEX, line, col,
                                        f"unexpected character {text[i]!r}"))
            i += 1
            continue
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind == "int":
            tokens.append(Token("int", m.group(), line, col))
        elif kind == "ident":
            word = m.group()
            tokens.append(Token("kw" if word in KEYWORDS else "ident", word, line, col))
        elif kind == "op":
            tokens.append(Token("op", m.group(), line, col))
        i = m.end()
    tokens.append(Token("eof", "", line, i - line_start + 1))
    return tokens, errors
