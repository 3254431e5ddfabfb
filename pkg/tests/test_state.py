from hypothesis import given, settings
from hypothesis import strategies as st

from chronoverify.state import (Transition, first_failure, is_good_state, is_good_transition,
                                is_legal_transition, object_inv2, updated_objects)
from chronoverify.timecore import check_time_clauses

from conftest import state_of


def closed_deadline(small, cur, t):
    return state_of(small, {("time", "cur"): cur, ("d", "closed"): True, ("d", "t"): t})


def test_updated_objects(small):
    s = state_of(small)
    assert updated_objects(Transition(s, s)) == frozenset()
    s2 = s.set({("boiler", "level"): 55})
    assert updated_objects(Transition(s, s2)) == {"boiler"}
    s3 = s2.set({("time", "cur"): 5})
    assert updated_objects(Transition(s, s3)) == {"time", "boiler"}


def test_meta_fields_count_as_updates(small):
    s = state_of(small)
    assert updated_objects(Transition(s, s.set({("d", "owner"): "boiler"}))) == {"d"}


def test_deadline_inv2_time_advance(small):
    pre = closed_deadline(small, 10, 15)
    assert object_inv2(small, Transition(pre, pre.set({("time", "cur"): 12})), "d")
    pre = closed_deadline(small, 14, 15)
    assert not object_inv2(small, Transition(pre, pre.set({("time", "cur"): 16})), "d")


def test_open_deadline_is_unconstrained(small):
    pre = state_of(small, {("time", "cur"): 14, ("d", "t"): 15})
    assert object_inv2(small, Transition(pre, pre.set({("time", "cur"): 16})), "d")


def test_good_state(small):
    assert is_good_state(small, closed_deadline(small, 10, 15))
    assert not is_good_state(small, closed_deadline(small, 16, 15))
    assert is_good_state(small, state_of(small, {("time", "cur"): 16, ("d", "t"): 15}))


def test_good_transition_boiler_dynamics(small):
    pre = state_of(small)
    assert is_good_transition(small, Transition(pre, pre))
    moved = pre.set({("time", "cur"): 3, ("boiler", "level"): 53})
    assert is_good_transition(small, Transition(pre, moved))
    frozen = pre.set({("time", "cur"): 3})
    assert not is_good_transition(small, Transition(pre, frozen))


def test_legal_vacuous_on_bad_prestate(small):
    bad = closed_deadline(small, 16, 15)
    assert is_legal_transition(small, Transition(bad, bad.set({("d", "t"): 0})))


def test_level_change_without_time_is_illegal(small):
    pre = state_of(small)
    v = is_legal_transition(small, Transition(pre, pre.set({("boiler", "level"): 55})))
    assert not v
    assert v.witness.obj == "boiler"


def test_approval_requires_owner(small):
    pre = closed_deadline(small, 0, 15)
    post = pre.set({("d", "t"): 20})
    v = is_legal_transition(small, Transition(pre, post, "other"))
    assert not v and v.witness.kind == "approval"
    assert is_legal_transition(small, Transition(pre, post, "main"))


def test_approval_through_owning_object(small):
    # boiler.on is owned by thread main; the environment may not flip it
    pre = state_of(small)
    post = pre.set({("boiler", "on"): False})
    assert not is_legal_transition(small, Transition(pre, post, "env"))
    assert is_legal_transition(small, Transition(pre, post, "main"))


def test_nonvolatile_fields_frozen_while_closed():
    from chronoverify import parse_model
    m = parse_model("type P { int x; }\nobject p: P { closed = true; owner = th; }\nthread th { }\n")
    pre = state_of(m)
    f = first_failure(m, Transition(pre, pre.set({("p", "x"): 1})), "p")
    assert f is not None and f.kind == "builtin"


def test_on_unwrap_clause(small):
    pre = closed_deadline(small, 15, 15)
    post = pre.set({("d", "closed"): False, ("time", "timed"): frozenset({"boiler"})})
    f = first_failure(small, Transition(pre, post, "main"), "d")
    assert f is not None and f.kind == "on_unwrap"
    ok = closed_deadline(small, 14, 15)
    post = ok.set({("d", "closed"): False, ("time", "timed"): frozenset({"boiler"})})
    assert first_failure(small, Transition(ok, post, "main"), "d") is None


def test_time_clauses(small):
    pre = state_of(small, {("time", "cur"): 5})
    f = check_time_clauses(small, Transition(pre, pre.set({("time", "cur"): 4})))
    assert f.clause.startswith("old(cur) <= cur")
    drop = pre.set({("time", "timed"): frozenset(), ("boiler", "level"): 0})
    f = check_time_clauses(small, Transition(pre, drop))
    assert "witness boiler" in f.clause
    ok = pre.set({("time", "cur"): 10, ("boiler", "level"): 55})
    assert check_time_clauses(small, Transition(pre, ok)) is None


@settings(max_examples=60, deadline=None)
@given(cur=st.integers(0, 20), t=st.integers(0, 20), closed=st.booleans(),
       level=st.integers(0, 100), on=st.booleans(), dcur=st.integers(0, 5),
       dlevel=st.integers(-5, 5), actor=st.sampled_from(["env", "main", "x"]))
def test_kernel_properties(small, cur, t, closed, level, on, dcur, dlevel, actor):
    pre = state_of(small, {("time", "cur"): cur, ("d", "t"): t, ("d", "closed"): closed,
                           ("boiler", "level"): level, ("boiler", "on"): on})
    post = pre.set({("time", "cur"): cur + dcur,
                    ("boiler", "level"): min(100, max(0, level + dlevel))})
    tr = Transition(pre, post, actor)
    assert is_legal_transition(small, Transition(pre, pre, actor))
    if is_good_transition(small, tr):
        assert is_legal_transition(small, tr)
    assert is_good_state(small, pre) == is_good_transition(small, Transition(pre, pre))
