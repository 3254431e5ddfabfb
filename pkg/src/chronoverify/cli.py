"""Command-line entry point.

Exit status: 0 pass/admissible, 1 findings/inadmissible, 2 usage or model
error, 3 inconclusive (bounds exhausted).
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import List, Optional

from .admissibility import AdmissibilityError, check_admissibility, verdict_dict
from .elimination import deadline_elimination_check
from .explorer import Bounds, BoundsError, Report, explore, simulate
from .lang.diagnostics import ModelError
from .loader import load_model
from .model import DEADLINE

EXIT_PASS, EXIT_FAIL, EXIT_USAGE, EXIT_INCONCLUSIVE = 0, 1, 2, 3
VERDICT_EXIT = {"pass": EXIT_PASS, "fail": EXIT_FAIL, "inconclusive": EXIT_INCONCLUSIVE}
COMMANDS = ("check", "explore", "admissible", "simulate", "corpus")


@dataclass(frozen=True)
class RunConfig:
    command: str
    model: Optional[str] = None
    max_dt: int = 4
    max_configs: int = 2_000_000
    loop_bound: int = 100
    env_moves: int = 8
    seed: int = 0
    steps: int = 50
    format: str = "human"
    out: Optional[str] = None
    type: Optional[str] = None
    universe: Optional[str] = None
    eliminate: bool = True

    @property
    def bounds(self) -> Bounds:
        return Bounds(self.max_dt, self.env_moves, self.max_configs, self.loop_bound)


def corpus_dir() -> Path:
    return Path(str(resources.files("chronoverify") / "corpus"))


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="chronoverify",
                                description="Explicit-time verification of timed object invariants.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("model", nargs="?", help="model file (.tvk)")
    p.add_argument("--max-dt", type=int, default=4)
    p.add_argument("--max-configs", type=int, default=2_000_000)
    p.add_argument("--loop-bound", type=int, default=100)
    p.add_argument("--env-moves", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--steps", type=int, default=50)
    p.add_argument("--format", choices=("human", "structured"), default="human")
    p.add_argument("--out")
    p.add_argument("--type", help="type to check (admissible)")
    p.add_argument("--universe", help="universe block to enumerate (admissible)")
    p.add_argument("--no-eliminate", dest="eliminate", action="store_false",
                   help="skip the Deadline elimination check after a passing explore")
    return p


def parse_args(argv: Optional[List[str]] = None) -> RunConfig:
    ns = _parser().parse_args(argv)
    return RunConfig(**vars(ns))


class _Usage(Exception):
    pass


def _emit(cfg: RunConfig, human: str, data: dict) -> None:
    text = human if cfg.format == "human" else json.dumps(data, indent=2, sort_keys=True) + "\n"
    if cfg.out:
        Path(cfg.out).write_text(text)
    else:
        sys.stdout.write(text)


def _diagnostics(path: str, err: ModelError) -> None:
    for d in err.diagnostics:
        print(f"{path}:{d.line}:{d.col}: {d.code}: {d.message}", file=sys.stderr)


def _load(cfg: RunConfig):
    if not cfg.model:
        raise _Usage(f"{cfg.command} needs a model file")
    try:
        return load_model(cfg.model)
    except OSError as exc:
        raise _Usage(f"cannot read {cfg.model}: {exc.strerror}") from None


def cmd_check(cfg: RunConfig) -> int:
    m = _load(cfg)
    data = {"model": cfg.model, "types": sorted(m.types), "objects": list(m.order),
            "threads": list(m.threads), "universes": sorted(m.universes)}
    _emit(cfg, f"{cfg.model}: ok ({len(m.types)} types, {len(m.order)} objects, "
               f"{len(m.threads)} threads)\n", data)
    return EXIT_PASS


def cmd_explore(cfg: RunConfig) -> int:
    m = _load(cfg)
    bounds = cfg.bounds
    has_deadlines = bool(m.objects_of_type(DEADLINE))
    report = explore(m, bounds, keep=cfg.eliminate and has_deadlines)
    data = report.to_dict()
    human = report.to_human()
    code = VERDICT_EXIT[report.verdict]
    if report.verdict == "pass" and cfg.eliminate and has_deadlines:
        el = deadline_elimination_check(m, bounds, original=report)
        data["elimination"] = {"passed": el.passed, "original": el.original,
                               "erased": el.erased,
                               "only_original": [repr(x) for x in el.only_original],
                               "only_erased": [repr(x) for x in el.only_erased]}
        human += (f"deadline elimination: {'pass' if el.passed else 'fail'} "
                  f"({el.original} vs {el.erased} projected states)\n")
        if not el.passed:
            data["verdict"] = "fail"
            code = EXIT_FAIL
    report.configs = []
    _emit(cfg, human, data)
    return code


def cmd_admissible(cfg: RunConfig) -> int:
    m = _load(cfg)
    if not cfg.type:
        raise _Usage("admissible needs --type")
    try:
        v = check_admissibility(m, cfg.type, cfg.universe)
    except AdmissibilityError as exc:
        print(f"{cfg.model}: {exc.code}: {exc.message}", file=sys.stderr)
        return EXIT_USAGE
    lines = [f"{v.type_name}: {v.result}"]
    lines += [f"  {k}: {n}" for k, n in sorted(v.stats.items())]
    cx = v.counterexample
    if cx is not None:
        from .explorer import field_deltas
        lines.append(f"  condition {cx.condition} fails for {cx.witness}: {cx.clause}")
        lines.append(f"  actor {cx.transition.actor}: " + ", ".join(
            f"{o}.{f}: {a} -> {b}" for o, f, a, b in field_deltas(cx.transition)))
    _emit(cfg, "\n".join(lines) + "\n", verdict_dict(v))
    return EXIT_PASS if v.admissible else EXIT_FAIL


def cmd_simulate(cfg: RunConfig) -> int:
    m = _load(cfg)
    trace, report = simulate(m, cfg.seed, cfg.steps, cfg.bounds)
    data = report.to_dict()
    from .explorer import field_deltas
    data["trace"] = [{"actor": tr.actor,
                      "deltas": [[o, f, _plain(a), _plain(b)] for o, f, a, b in field_deltas(tr)]}
                     for tr in trace]
    _emit(cfg, report.to_human() + f"simulated {len(trace)} transition(s)\n", data)
    return EXIT_PASS if report.verdict == "pass" else EXIT_FAIL


def _plain(v):
    return sorted(v) if isinstance(v, frozenset) else v


def expected_verdicts() -> List[dict]:
    return json.loads((corpus_dir() / "expected.json").read_text())


def run_corpus_entry(entry: dict, base: Path, bounds: Bounds) -> tuple:
    """Run one corpus entry; returns (ok, observed description)."""
    m = load_model(base / entry["model"])
    if entry["command"] == "admissible":
        v = check_admissibility(m, entry["type"], entry.get("universe"))
        got = 0 if v.admissible else 1
        return got == entry["exit"], v.result
    report = explore(m, bounds)
    got = VERDICT_EXIT[report.verdict]
    ok = got == entry["exit"]
    if "kind" in entry:
        ok = ok and any(f.kind == entry["kind"] for f in report.findings)
    if "clause" in entry:
        ok = ok and any(entry["clause"] in f.culprit for f in report.findings)
    kinds = sorted({f"{f.kind}: {f.culprit}" for f in report.findings})
    return ok, report.verdict + (f" [{'; '.join(kinds)}]" if kinds else "")


def cmd_corpus(cfg: RunConfig) -> int:
    base = corpus_dir()
    rows, failed = [], 0
    for entry in expected_verdicts():
        ok, observed = run_corpus_entry(entry, base, cfg.bounds)
        failed += not ok
        what = entry["command"] + " " + entry["model"] + (
            f" --type {entry['type']}" if "type" in entry else "")
        rows.append({"entry": what, "ok": ok, "observed": observed})
    human = "".join(f"{'ok  ' if r['ok'] else 'DRIFT'} {r['entry']}: {r['observed']}\n"
                    for r in rows)
    _emit(cfg, human, {"entries": rows, "drifted": failed})
    return EXIT_FAIL if failed else EXIT_PASS


HANDLERS = {"check": cmd_check, "explore": cmd_explore, "admissible": cmd_admissible,
            "simulate": cmd_simulate, "corpus": cmd_corpus}


def run(cfg: RunConfig) -> int:
    try:
        return HANDLERS[cfg.command](cfg)
    except ModelError as exc:
        _diagnostics(cfg.model or "<input>", exc)
        return EXIT_USAGE
    except (_Usage, BoundsError) as exc:
        print(f"chronoverify: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main(argv: Optional[List[str]] = None) -> int:
    try:
        cfg = parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_PASS
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
