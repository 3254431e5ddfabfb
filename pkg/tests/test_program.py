import pytest

from chronoverify import parse_model
from chronoverify.loader import initial_states
from chronoverify.program import (AccessError, LoopEnd, LoopHead, Runtime, access_check,
                                  flatten, run_atomic, thread_step)
from chronoverify.state import is_legal_transition

BASE = """
type Boiler timed {
  volatile int level in 0..100;
  volatile bool on;
  invariant level == old(level) + (old(on) ? dT : 0 - dT);
  approves(owner, on);
}
type Box { int n; volatile int v; }
object boiler: Boiler { level = 50; on = true; closed = true; owner = main; }
object box: Box { owner = main; }
"""


def run_all(model, steps=50):
    """Run thread 0 deterministically; return (configs, outcome of the last step)."""
    rt = Runtime(model)
    cfg = rt.initial(initial_states(model)[0])
    seen = [cfg]
    out = None
    for _ in range(steps):
        if rt.terminated(cfg, 0):
            break
        out = thread_step(rt, cfg, 0)
        if out.cfg is None:
            break
        cfg = out.cfg
        seen.append(cfg)
    return seen, out


def test_access_rules():
    m = parse_model(BASE + "thread main { }")
    s = initial_states(m)[0]
    access_check(m, "main", "boiler", "level", s, False, True)
    with pytest.raises(AccessError):
        access_check(m, "main", "boiler", "level", s, False, False)
    closed_box = s.set({("box", "closed"): True})
    with pytest.raises(AccessError):
        access_check(m, "main", "box", "n", closed_box, True, True)
    access_check(m, "main", "box", "n", closed_box, False, False)
    access_check(m, "main", "box", "n", s, True, False)
    with pytest.raises(AccessError):
        access_check(m, "other", "box", "n", s, True, False)


def test_sequential_volatile_read_is_a_finding():
    m = parse_model(BASE + "thread main { box.n := boiler.level; }")
    _, out = run_all(m)
    assert out.findings[0].kind == "access-violation"


def test_atomic_step_is_one_legal_transition(boiler_model):
    rt = Runtime(boiler_model)
    cfg = rt.initial(initial_states(boiler_model)[0])
    while not rt.next_is_atomic(cfg, 0):
        out = thread_step(rt, cfg, 0)
        assert not out.findings
        if out.cfg is None:  # the initial assume rejected this start state
            cfg = rt.initial(initial_states(boiler_model)[1])
            continue
        cfg = out.cfg
    out = run_atomic(rt, cfg, 0)
    assert not out.findings and len(out.transitions) == 1
    tr = out.transitions[0]
    assert is_legal_transition(boiler_model, tr)
    assert tr.post.get("ctrlDeadline", "t") == tr.post.get("time", "cur") + 15
    # loop head check right after the atomic: expiration - T = 15 > 10
    head = thread_step(rt, thread_step(rt, out.cfg, 0).cfg, 0)
    assert not head.findings


def test_wrap_checks_the_invariant():
    m = parse_model("""
type Boiler { volatile int level in 0..100; }
type Ctrl { ghost objref<Boiler> b; invariant b.level <= 70 && b.level >= 30; }
object boiler: Boiler { level = 80; closed = true; owner = main; }
object ctrl: Ctrl { b = boiler; owner = main; }
thread main { own(ctrl, boiler); wrap ctrl; }
""")
    _, out = run_all(m)
    f = out.findings[0]
    assert f.kind == "invariant-violation"
    assert f.culprit == "ctrl: b.level <= 70 && b.level >= 30"


def test_loop_invariant_failure():
    m = parse_model(BASE + "thread main { loop 3 invariant box.n < 2 writes box { box.n := box.n + 1; } }")
    _, out = run_all(m)
    assert out.findings[0].kind == "assertion-failure"


def test_loop_bound_and_flattening():
    m = parse_model(BASE + "thread main { loop 3 invariant true writes box { box.n := box.n + 1; } }")
    prog = flatten(m.threads["main"])
    assert isinstance(prog.code[0], LoopHead) and isinstance(prog.code[2], LoopEnd)
    seen, _ = run_all(m)
    assert seen[-1].state.get("box", "n") == 3
    capped = flatten(m.threads["main"], loop_bound=2)
    assert capped.code[0].bound == 2


def test_assert_and_assume():
    m = parse_model(BASE + "thread main { assert box.n == 1; }")
    _, out = run_all(m)
    assert out.findings[0].kind == "assertion-failure"
    m = parse_model(BASE + "thread main { assume box.n == 1; }")
    _, out = run_all(m)
    assert out.pruned


def test_leaked_deadline_at_exit():
    m = parse_model(BASE + "object d: Deadline { owner = main; }\nthread main { deadline_new(d, 5); }")
    _, out = run_all(m)
    assert out.findings[0].kind == "obligation-leak"


def test_leaked_deadline_in_loop_body():
    m = parse_model(BASE + "object d: Deadline { owner = main; }\n"
                    "thread main { loop 2 invariant true writes box { deadline_new(d, 5); } }")
    _, out = run_all(m)
    assert out.findings[0].kind == "obligation-leak"


def test_multiple_physical_accesses_warn():
    m = parse_model(BASE + "thread main { atomic { boiler.on := boiler.level < 50; } }")
    _, out = run_all(m)
    assert not out.findings
    assert out.warnings[0].kind == "multiple-physical-accesses"


def test_range_is_enforced():
    m = parse_model(BASE + "thread main { atomic { boiler.level := 101; } }")
    _, out = run_all(m)
    assert out.findings[0].culprit == "boiler: level in 0..100"
