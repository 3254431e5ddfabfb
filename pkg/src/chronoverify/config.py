from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Dict, Tuple

from .state import State

Locals = Tuple[Tuple[str, int], ...]


@dataclass(frozen=True)
class Configuration:
    """Global state plus per-thread control points, locals and obligations.

    ``locals`` hold timer stamps (``"@name"``) and loop counters
    (``"#loop-id"``); ``obligations`` hold ``(deadline, scope)`` pairs for
    live Deadlines the thread has created and not yet destroyed.
    """
    state: State
    pcs: Tuple[int, ...]
    locals: Tuple[Locals, ...]
    obligations: Tuple[Tuple[Tuple[str, int], ...], ...]

    def local(self, ti: int) -> Dict[str, int]:
        return dict(self.locals[ti])

    def stamps(self, ti: int) -> Dict[str, int]:
        return {k[1:]: v for k, v in self.locals[ti] if k[0] == "@"}

    def with_state(self, state: State) -> "Configuration":
        return replace(self, state=state)

    def with_thread(self, ti: int, pc=None, local=None, obligations=None) -> "Configuration":
        pcs, locs, obls = self.pcs, self.locals, self.obligations
        if pc is not None:
            pcs = pcs[:ti] + (pc,) + pcs[ti + 1:]
        if local is not None:
            locs = locs[:ti] + (tuple(sorted(local.items())),) + locs[ti + 1:]
        if obligations is not None:
            obls = obls[:ti] + (tuple(sorted(obligations)),) + obls[ti + 1:]
        return Configuration(self.state, pcs, locs, obls)
