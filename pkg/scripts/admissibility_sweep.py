"""Admissibility of the controller type as the boiler's level window widens.

Counterexamples should persist once found: widening a universe never turns
an inadmissible type admissible.
"""
import argparse
import time
from dataclasses import replace

from chronoverify.admissibility import AdmissibilityError, check_admissibility
from chronoverify.cli import corpus_dir
from chronoverify.loader import load_model


def widened(universe, lo, hi):
    objs = []
    for o in universe.objects:
        if o.name == "boiler":
            o = replace(o, inits=tuple(replace(i, lo=lo, hi=hi) if i.field == "level" else i
                                       for i in o.inits))
        objs.append(o)
    return replace(universe, name=f"{universe.name}_{lo}_{hi}", objects=tuple(objs))


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--cap", type=int, default=10 ** 8)
    args = ap.parse_args()
    windows = [(69, 71), (68, 72), (67, 72), (66, 72)]
    for fixture in ("boiler_deadline.tvk", "mutants/missing_coupling.tvk"):
        m = load_model(corpus_dir() / fixture)
        base = m.universes["ctrl_u"]
        for lo, hi in windows:
            t0 = time.perf_counter()
            try:
                v = check_admissibility(m, "BoilerCtrl", widened(base, lo, hi), cap=args.cap)
            except AdmissibilityError as exc:
                print(f"{fixture:30} level {lo}..{hi}: {exc.code}")
                continue
            cx = v.counterexample
            why = f" (condition {cx.condition}: {cx.clause})" if cx else ""
            print(f"{fixture:30} level {lo}..{hi}: {v.result:12} "
                  f"{v.stats.get('states', 0):>6} states {time.perf_counter() - t0:5.1f}s{why}")


if __name__ == "__main__":
    main()
