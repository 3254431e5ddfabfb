"""Resolved model: type table, object universe and thread programs."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Tuple

from .lang import ast as A

TIME = "time"
TIME_TYPE = "Time"
DEADLINE = "Deadline"
TIMER = "Timer"
ENV = "env"  # owner of the time object and actor of environment moves

META = ("valid", "closed", "owner")


@dataclass
class Model:
    types: Dict[str, A.TypeDecl]
    objects: Dict[str, A.ObjectDecl]
    threads: Dict[str, A.ThreadDecl] = field(default_factory=dict)
    universes: Dict[str, A.UniverseDecl] = field(default_factory=dict)
    source: Optional[A.Document] = None
    thread_objects: Tuple[str, ...] = ()

    def __post_init__(self):
        if not self.thread_objects:
            self.thread_objects = tuple(self.threads)
        self.order: Tuple[str, ...] = tuple(self.objects)
        self.layout: Dict[str, Dict[str, int]] = {}
        for tname, t in self.types.items():
            names = list(META) + [f.name for f in t.fields]
            self.layout[tname] = {n: i for i, n in enumerate(names)}
        self._compiled: Dict[str, object] = {}

    # -- lookups -----------------------------------------------------------

    def type_of(self, obj: str) -> A.TypeDecl:
        return self.types[self.objects[obj].type]

    def is_thread(self, obj) -> bool:
        return obj in self.thread_objects

    def kind(self, obj: str) -> str:
        if obj == TIME:
            return "time-singleton"
        if self.is_thread(obj):
            return "thread"
        return "plain-object"

    def objects_of_type(self, tname: str) -> List[str]:
        return [o for o, d in self.objects.items() if d.type == tname]

    def timed_objects(self) -> List[str]:
        return [o for o in self.order if self.type_of(o).timed]

    def field_index(self, obj: str, fname: str) -> int:
        return self.layout[self.objects[obj].type][fname]

    def instant_fields(self, obj: str) -> List[str]:
        return [f.name for f in self.type_of(obj).fields if f.sort == "instant"]

    def with_universe(self, objects: Iterable[A.ObjectDecl],
                      threads: Iterable[str]) -> "Model":
        """Same types over a different object universe (no thread programs)."""
        objs = {o.name: o for o in objects}
        return Model(dict(self.types), objs, {}, dict(self.universes),
                     self.source, tuple(threads))

    def compiled(self, key, build):
        """Memo slot for compiled clauses and expressions."""
        try:
            return self._compiled[key]
        except KeyError:
            v = self._compiled[key] = build()
            return v

    def __hash__(self):
        return id(self)

    def __eq__(self, other):
        return self is other
