import json
import subprocess
import sys

from chronoverify.cli import main, parse_args

from conftest import corpus


def run(args, capsys):
    code = main(args)
    out, err = capsys.readouterr()
    return code, out, err


def test_defaults():
    cfg = parse_args(["explore", "m.tvk"])
    assert (cfg.max_dt, cfg.max_configs, cfg.loop_bound, cfg.env_moves, cfg.format) == \
        (4, 2_000_000, 100, 8, "human")


def test_check_ok(capsys):
    code, out, _ = run(["check", str(corpus("boiler_deadline.tvk"))], capsys)
    assert code == 0


def test_check_malformed(tmp_path, capsys):
    bad = tmp_path / "bad.tvk"
    bad.write_text("type B {\n  int level;\n  invariant levl > 0;\n}\n")
    code, _, err = run(["check", str(bad)], capsys)
    assert code == 2
    assert f"{bad}:3:13: E_UNKNOWN_FIELD" in err


def test_missing_file_is_usage_error(capsys):
    code, _, err = run(["check", "/nonexistent.tvk"], capsys)
    assert code == 2 and err


def test_bad_bounds_are_usage_errors(capsys):
    code, _, err = run(["explore", str(corpus("boiler_deadline.tvk")), "--max-dt", "0"], capsys)
    assert code == 2 and "E_BOUNDS" in err


def test_explore_pass_and_structured_output(tmp_path, capsys):
    out1, out2 = tmp_path / "a.json", tmp_path / "b.json"
    args = ["explore", str(corpus("boiler_deadline.tvk")), "--format", "structured",
            "--loop-bound", "5"]
    assert main(args + ["--out", str(out1)]) == 0
    assert main(args + ["--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()
    data = json.loads(out1.read_text())
    assert data["verdict"] == "pass"


def test_explore_mutant_fails(capsys):
    code, out, _ = run(["explore", str(corpus("mutants/threshold_80.tvk")),
                        "--format", "structured"], capsys)
    assert code == 1
    f = json.loads(out)["findings"][0]
    assert f["kind"] == "illegal-transition" and "b.level + d.t - T <= 70" in f["culprit"]
    assert f["trace"]


def test_inconclusive_exit(capsys):
    code, _, _ = run(["explore", str(corpus("boiler_deadline.tvk")), "--max-configs", "20"],
                     capsys)
    assert code == 3


def test_admissible(capsys):
    ok = run(["admissible", str(corpus("boiler_deadline.tvk")), "--type", "Deadline"], capsys)
    assert ok[0] == 0
    bad = run(["admissible", str(corpus("mutants/missing_coupling.tvk")), "--type",
               "BoilerCtrl", "--universe", "ctrl_u", "--format", "structured"], capsys)
    assert bad[0] == 1
    assert json.loads(bad[1])["result"] == "inadmissible"


def test_admissible_needs_type(capsys):
    code, _, _ = run(["admissible", str(corpus("boiler_deadline.tvk"))], capsys)
    assert code == 2


def test_simulate(capsys):
    code, out, _ = run(["simulate", str(corpus("boiler_deadline.tvk")), "--seed", "1",
                        "--steps", "20", "--format", "structured"], capsys)
    assert code == 0
    assert json.loads(out)["verdict"] == "pass"


def test_module_entry_point():
    p = subprocess.run([sys.executable, "-m", "chronoverify", "check",
                        str(corpus("boiler_timer.tvk"))], capture_output=True, text=True)
    assert p.returncode == 0


def test_corpus_command(capsys):
    code, out, _ = run(["corpus"], capsys)
    assert code == 0, out
