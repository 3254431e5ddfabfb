"""Text -> checked Model, and the initial states of a model."""
from __future__ import annotations

import itertools
from dataclasses import replace
from pathlib import Path
from typing import Dict, List, Tuple

from .lang import ast as A
from .lang.checker import check
from .lang.macros import expand_macros
from .lang.parser import parse_document
from .model import ENV, TIME, Model
from .primitives import prelude_types
from .state import State
from .timecore import install_time


def build_model(doc: A.Document) -> Model:
    full = install_time(doc)
    full = replace(full, types=full.types[:1] + prelude_types() + full.types[1:])
    checker = check(full)
    types = {name: expand_macros(t) for name, t in checker.types.items()}
    return Model(types, dict(checker.objects), dict(checker.threads),
                 {u.name: u for u in full.universes}, source=doc)


def parse_model(text: str) -> Model:
    """Parse and check model text; raises ModelError with diagnostics."""
    return build_model(parse_document(text))


def load_model(path) -> Model:
    return parse_model(Path(path).read_text())


def default_value(fd: A.FieldDecl):
    if fd.sort == "bool":
        return False
    if fd.sort == "objref":
        return None
    if fd.sort == "objset":
        return frozenset()
    return fd.lo if fd.lo is not None and fd.lo > 0 else 0


def init_choices(model: Model, o: A.ObjectDecl) -> Dict[str, list]:
    """Candidate initial values per field (singletons unless nondeterministic)."""
    t = model.types[o.type]
    choices: Dict[str, list] = {"valid": [True], "closed": [False],
                                "owner": [ENV if o.name == TIME else None]}
    for fd in t.fields:
        choices[fd.name] = [default_value(fd)]
    for i in o.inits:
        fd = t.field_decl(i.field)
        if i.kind == "range":
            choices[i.field] = list(range(i.lo, i.hi + 1))
        elif i.kind == "any":
            if i.field == "closed" or (fd is not None and fd.sort == "bool"):
                choices[i.field] = [False, True]
            elif fd.sort == "objset":
                objs = list(model.order)
                choices[i.field] = [frozenset(c) for r in range(len(objs) + 1)
                                    for c in itertools.combinations(objs, r)]
            else:
                choices[i.field] = list(range(fd.lo, fd.hi + 1))
        else:
            v = i.value
            choices[i.field] = [v.ident if isinstance(v, A.Name) else v]
    return choices


def initial_states(model: Model) -> List[State]:
    keys: List[Tuple[str, str]] = []
    options: List[list] = []
    for name in model.order:
        for f, vals in init_choices(model, model.objects[name]).items():
            keys.append((name, f))
            options.append(vals)
    out = []
    for combo in itertools.product(*options):
        values = dict(zip(keys, combo))
        values[(TIME, "timed")] = frozenset(
            o for o in model.timed_objects() if o != TIME and values[(o, "closed")])
        out.append(State.build(model, values))
    return list(dict.fromkeys(out))
