"""Seeded random walks with replay validation and a level histogram."""
import argparse
from collections import Counter

from chronoverify.cli import corpus_dir
from chronoverify.explorer import simulate
from chronoverify.loader import load_model
from chronoverify.state import is_legal_transition


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("model", nargs="?", default=str(corpus_dir() / "boiler_deadline.tvk"))
    ap.add_argument("--walks", type=int, default=1000)
    ap.add_argument("--steps", type=int, default=50)
    args = ap.parse_args()
    m = load_model(args.model)
    levels, verdicts, illegal, backwards = Counter(), Counter(), 0, 0
    for seed in range(args.walks):
        trace, r = simulate(m, seed, args.steps)
        verdicts[r.verdict] += 1
        for tr in trace:
            illegal += not is_legal_transition(m, tr)
            backwards += tr.post.get("time", "cur") < tr.pre.get("time", "cur")
            if "boiler" in tr.post.objs:
                levels[tr.post.get("boiler", "level")] += 1
    print(f"walks: {args.walks}, verdicts: {dict(verdicts)}")
    print(f"illegal transitions on replay: {illegal}, backward time steps: {backwards}")
    for level in sorted(levels):
        print(f"  level {level:3}: {levels[level]}")


if __name__ == "__main__":
    main()
