"""Explore every bundled fixture and print verdict, size and runtime."""
import argparse
import time

from chronoverify.cli import corpus_dir
from chronoverify.elimination import deadline_elimination_check
from chronoverify.explorer import Bounds, explore
from chronoverify.loader import load_model
from chronoverify.model import DEADLINE


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--max-dt", type=int, default=4)
    ap.add_argument("--env-moves", type=int, default=8)
    args = ap.parse_args()
    bounds = Bounds(max_dt=args.max_dt, env_moves=args.env_moves)
    base = corpus_dir()
    print(f"{'model':32} {'verdict':8} {'configs':>8} {'secs':>6}  finding / elimination")
    for path in sorted(base.rglob("*.tvk")):
        m = load_model(path)
        t0 = time.perf_counter()
        r = explore(m, bounds, keep=True)
        secs = time.perf_counter() - t0
        note = ""
        if r.findings:
            f = r.findings[0]
            note = f"{f.kind}: {f.culprit} (trace {len(f.trace)})"
        elif m.objects_of_type(DEADLINE):
            el = deadline_elimination_check(m, bounds, original=r)
            note = f"elimination {'pass' if el.passed else 'fail'} ({el.original}/{el.erased})"
        name = str(path.relative_to(base))
        print(f"{name:32} {r.verdict:8} {r.stats.get('configs', 0):>8} {secs:>6.1f}  {note}")


if __name__ == "__main__":
    main()
