import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chronoverify import ModelError, parse_model
from chronoverify.lang import ast as A
from chronoverify.lang import printer
from chronoverify.lang.evaluator import eval_expr
from chronoverify.lang.macros import expand_macros
from chronoverify.lang.parser import parse_document, parse_expr
from chronoverify.state import Transition

from conftest import CORPUS, state_of

BOILER = """
type Boiler timed {
  volatile int level in 0..100;
  volatile bool on;
  invariant level == old(level) + (old(on) ? dT : 0 - dT);
}
"""


def codes(text):
    with pytest.raises(ModelError) as exc:
        parse_model(text)
    return [d.code for d in exc.value.diagnostics], exc.value.diagnostics


def test_minimal_boiler():
    m = parse_model(BOILER)
    t = m.types["Boiler"]
    assert t.timed
    assert [(f.name, f.volatile) for f in t.fields] == [("level", True), ("on", True)]


def test_unknown_field_position():
    cs, ds = codes("type B {\n  int level;\n  invariant levl > 0;\n}\n")
    assert cs == ["E_UNKNOWN_FIELD"]
    assert (ds[0].line, ds[0].col) == (3, 13)


def test_duplicate_type():
    cs, _ = codes(BOILER + BOILER)
    assert "E_DUPLICATE" in cs


def test_time_cannot_be_declared():
    cs, _ = codes("type Time { int cur; }")
    assert cs == ["E_TIME_DECLARED"]


def test_unwrap_time_rejected():
    cs, _ = codes("thread x { unwrap time; }")
    assert cs == ["E_ETERNAL_TIME"]


def test_negative_delta_rejected():
    cs, _ = codes("object d: Deadline { owner = x; }\nthread x { deadline_new(d, -1); }")
    assert cs == ["E_NEGATIVE_DELTA"]


def test_nested_old_rejected():
    cs, _ = codes("type P { volatile int x; invariant old(old(x)) == x; }")
    assert cs == ["E_NESTED_OLD"]


def test_sort_mismatch():
    cs, _ = codes("type P { int x; invariant x && true; }")
    assert cs == ["E_SORT"]


def test_approval_on_nonvolatile():
    cs, _ = codes("type P { int x; approves(owner, x); }")
    assert cs == ["E_APPROVAL_NONVOLATILE"]


def test_dynamics_needs_timed_type():
    cs, _ = codes("type P { volatile int x; dynamics x = old(x) + dT; }")
    assert cs == ["E_DYNAMICS"]


def test_several_diagnostics_in_source_order():
    _, ds = codes("type A { int x; invariant y; }\ntype B { int z; invariant w > 0; }")
    assert [(d.line, d.code) for d in ds] == [(1, "E_UNKNOWN_FIELD"), (2, "E_UNKNOWN_FIELD")]


def test_macro_expansion(small):
    d = small.types["Deadline"]
    kinds = [c.kind for c in d.clauses]
    assert kinds[0] == "timed" and d.clauses[0].text == "closed(self) ==> time.timed[self]"
    assert "approval" in kinds and "on_unwrap" in kinds
    unch = [c for c in d.clauses if c.text == "unchanged(t) || old(T < t)"][0]
    assert "Unchanged" not in repr(unch.expr)


def test_timer_is_deadline_minus_freeze(small):
    dl = {c.text for c in small.types["Deadline"].clauses}
    tm = {c.text for c in small.types["Timer"].clauses}
    assert dl - tm == {"unchanged(t) || old(T < t)", "on_unwrap old(T < t)"}
    assert tm <= dl


def test_expand_macros_is_idempotent(small):
    d = small.types["Boiler"]
    assert expand_macros(d).clauses == d.clauses


# -- evaluation -----------------------------------------------------------------

def time_tr(small, a, b):
    pre = state_of(small, {("time", "cur"): a})
    return Transition(pre, pre.set({("time", "cur"): b}))


def test_eval_time_expressions(small):
    tr = time_tr(small, 3, 5)
    assert eval_expr(small, parse_expr("old(time.cur) <= time.cur"), tr) is True
    assert eval_expr(small, parse_expr("dT"), tr) == 2
    assert eval_expr(small, parse_expr("T"), tr) == 5
    assert eval_expr(small, parse_expr("old(T)"), tr) == 3


def test_eval_unchanged_and_on_unwrap(small):
    pre = state_of(small, {("d", "t"): 15})
    tr = Transition(pre, pre)
    assert eval_expr(small, parse_document("type Q { invariant unchanged(d.t); }")
                     .types[0].invariants[0], tr) is True


# -- round trips -----------------------------------------------------------------

@pytest.mark.parametrize("path", sorted(p.name if p.parent == CORPUS else f"mutants/{p.name}"
                                        for p in CORPUS.rglob("*.tvk")))
def test_corpus_round_trip(path):
    doc = parse_document((CORPUS / path).read_text())
    again = parse_document(printer.document(doc))
    assert again == doc
    assert printer.document(again) == printer.document(doc)


INT_ATOMS = st.sampled_from(["x", "y", "T", "dT", "3", "0", "old(x)", "self.y"])
BOOL_ATOMS = st.sampled_from(["b", "true", "false", "old(b)", "closed(self)"])


def int_exprs():
    return st.recursive(
        INT_ATOMS,
        lambda inner: st.one_of(
            st.tuples(inner, st.sampled_from(["+", "-", "*"]), inner).map(
                lambda t: f"({t[0]} {t[1]} {t[2]})"),
            inner.map(lambda e: f"-{e}"),
            st.tuples(bool_exprs_base(), inner, inner).map(
                lambda t: f"({t[0]} ? {t[1]} : {t[2]})"),
        ), max_leaves=8)


def bool_exprs_base():
    return BOOL_ATOMS


def bool_exprs():
    ints = int_exprs()
    return st.recursive(
        st.one_of(BOOL_ATOMS,
                  st.tuples(ints, st.sampled_from(["<", "<=", "==", "!=", ">", ">="]), ints)
                  .map(lambda t: f"{t[0]} {t[1]} {t[2]}")),
        lambda inner: st.one_of(
            st.tuples(inner, st.sampled_from(["&&", "||", "==>"]), inner).map(
                lambda t: f"({t[0]} {t[1]} {t[2]})"),
            inner.map(lambda e: f"!({e})"),
        ), max_leaves=6)


P_TYPE = "type P timed {{ volatile int x; volatile int y; volatile bool b; invariant {}; }}"


@settings(max_examples=150, deadline=None)
@given(bool_exprs())
def test_expression_round_trip(text):
    e = parse_expr(text)
    assert parse_expr(printer.expr(e)) == e


@settings(max_examples=150, deadline=None)
@given(bool_exprs(), st.integers(-5, 5), st.integers(-5, 5), st.booleans(),
       st.integers(0, 4), st.integers(0, 4))
def test_evaluation_is_total_on_checked_input(text, x, y, b, c0, dc):
    m = parse_model(P_TYPE.format(text) + "\nobject p: P { }\n")
    pre = state_of(m, {("p", "x"): x, ("p", "y"): y, ("p", "b"): b, ("time", "cur"): c0})
    post = pre.set({("p", "x"): y, ("time", "cur"): c0 + dc})
    e = m.types["P"].clauses[1].expr
    v = eval_expr(m, e, Transition(pre, post), self_obj="p")
    assert isinstance(v, bool)
    # on a stutter, old(e) == e for every subexpression
    same = Transition(post, post)
    assert eval_expr(m, A.Binary("==", A.Old(e), e), same, self_obj="p") is True
