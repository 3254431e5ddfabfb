from hypothesis import given, settings
from hypothesis import strategies as st

from chronoverify import parse_model
from chronoverify.config import Configuration
from chronoverify.elimination import deadline_elimination_check, erase_deadlines
from chronoverify.explorer import (Bounds, canonicalize, enabled_env_moves, explore,
                                   frozen_deadline, shift_config, shift_state, simulate)
from chronoverify.loader import load_model
from chronoverify.model import DEADLINE
from chronoverify.state import is_legal_transition

from conftest import corpus, state_of


def boiler_with_deadline(small, cur, t, level=50, on=True):
    return state_of(small, {("time", "cur"): cur, ("d", "closed"): True, ("d", "t"): t,
                            ("boiler", "level"): level, ("boiler", "on"): on})


def test_env_moves_follow_dynamics(small):
    moves = enabled_env_moves(small, boiler_with_deadline(small, 0, 15), Bounds())
    assert [m.post.get("time", "cur") for m in moves] == [1, 2, 3, 4]
    assert [m.post.get("boiler", "level") for m in moves] == [51, 52, 53, 54]
    off = enabled_env_moves(small, boiler_with_deadline(small, 0, 15, on=False), Bounds())
    assert [m.post.get("boiler", "level") for m in off] == [49, 48, 47, 46]


def test_env_moves_capped_by_deadline(small):
    moves = enabled_env_moves(small, boiler_with_deadline(small, 14, 15), Bounds())
    assert [m.post.get("time", "cur") for m in moves] == [15]
    s = boiler_with_deadline(small, 15, 15)
    assert enabled_env_moves(small, s, Bounds()) == []
    assert frozen_deadline(small, s) == "d"


def test_env_moves_are_legal(small):
    for m in enabled_env_moves(small, boiler_with_deadline(small, 3, 15), Bounds(max_dt=6)):
        assert is_legal_transition(small, m)


@settings(max_examples=40, deadline=None)
@given(cur=st.integers(0, 12), gap=st.integers(0, 6), k=st.integers(-5, 20),
       stamp=st.integers(0, 12))
def test_canonical_form_is_shift_invariant(small, cur, gap, k, stamp):
    s = boiler_with_deadline(small, cur, cur + gap)
    cfg = Configuration(s, (0,), ((("@a", min(stamp, cur)),),), ((),))
    moved = shift_config(small, cfg, k)
    c1, m1 = canonicalize(small, cfg)
    c2, m2 = canonicalize(small, moved)
    assert c1 == c2 and m2 == m1 + k
    assert min(min(v for v in [c1.state.get("time", "cur"), c1.state.get("d", "t")]),
               c1.locals[0][0][1]) == 0
    # successors correspond one to one under the shift
    a = enabled_env_moves(small, s, Bounds())
    b = enabled_env_moves(small, shift_state(small, s, k), Bounds())
    assert [shift_state(small, t.post, k) for t in a] == [t.post for t in b]


def test_explore_is_deterministic(boiler_model):
    b = Bounds(loop_bound=5)
    assert explore(boiler_model, b).to_structured() == explore(boiler_model, b).to_structured()


def test_small_bounds_are_inconclusive(boiler_model):
    r = explore(boiler_model, Bounds(max_configs=50))
    assert r.verdict == "inconclusive"


def test_simulation(boiler_model):
    trace, report = simulate(boiler_model, seed=1, steps=50)
    assert report.verdict == "pass" and len(trace) == 50
    assert all(is_legal_transition(boiler_model, tr) for tr in trace)
    again, _ = simulate(boiler_model, seed=1, steps=50)
    assert again == trace


def test_simulation_halts_on_frozen_mutant():
    m = load_model(corpus("mutants/no_reset.tvk"))
    for seed in range(20):
        trace, report = simulate(m, seed=seed, steps=2000)
        if report.findings:
            assert report.findings[0].kind in ("time-frozen", "deadline-expired")
            return
    raise AssertionError("no seed reached the frozen configuration")


def test_elimination_on_empty_program():
    m = parse_model("thread main { }")
    assert deadline_elimination_check(m).passed


def test_elimination_detects_pruning_deadline():
    m = parse_model("""
object d: Deadline { owner = main; }
thread main {
  timer_record s0;
  deadline_new(d, 3);
  loop 3 invariant true writes d { atomic { } }
}
""")
    v = deadline_elimination_check(m, Bounds(env_moves=2))
    assert not v.passed
    assert v.only_erased and not v.only_original


def test_erasure_removes_every_deadline(boiler_model):
    e = erase_deadlines(boiler_model)
    assert not e.objects_of_type(DEADLINE)
    assert [f.name for f in e.types["BoilerCtrl"].fields] == ["b"]
