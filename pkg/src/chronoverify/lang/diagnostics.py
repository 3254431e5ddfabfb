from __future__ import annotations

from dataclasses import dataclass
from typing import List

MAX_DIAGNOSTICS = 20

# codes
LEX = "E_LEX"
SYNTAX = "E_SYNTAX"
UNKNOWN_IDENT = "E_UNKNOWN_IDENT"
UNKNOWN_FIELD = "E_UNKNOWN_FIELD"
UNKNOWN_TYPE = "E_UNKNOWN_TYPE"
DUPLICATE = "E_DUPLICATE"
SORT = "E_SORT"
NESTED_OLD = "E_NESTED_OLD"
APPROVAL = "E_APPROVAL_NONVOLATILE"
DYNAMICS = "E_DYNAMICS"
TIME_DECLARED = "E_TIME_DECLARED"
ETERNAL = "E_ETERNAL_TIME"
NEGATIVE_DELTA = "E_NEGATIVE_DELTA"
PLACEMENT = "E_PLACEMENT"
INIT = "E_INIT"


@dataclass(frozen=True)
class Diagnostic:
    code: str
    line: int
    col: int
    message: str

    def __str__(self):
        return f"{self.line}:{self.col}: {self.code}: {self.message}"


class ModelError(Exception):
    """Raised when a model text cannot be turned into a Model."""

    def __init__(self, diagnostics: List[Diagnostic]):
        self.diagnostics = list(diagnostics)[:MAX_DIAGNOSTICS]
        super().__init__("\n".join(str(d) for d in self.diagnostics))
