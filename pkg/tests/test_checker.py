import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vgoalmc.checker import (
    QUALITATIVE_PAIRS,
    CheckError,
    builtin_props,
    check_ctl,
    check_pctl,
    eval_builtin_props,
    holds_ctl,
)
from vgoalmc.logic import TRUE, Not, Prop, Temporal, parse_ctl, to_text

import support


# ---------------------------------------------------------------------- CTL


def test_self_loop_safe_state():
    ts = support.make_ts(1, [(0, 0)], [["safe"]])
    assert holds_ctl(ts, "AG safe")


def test_chain_to_absorbing_goal():
    ts = support.make_ts(2, [(0, 1), (1, 1)], [[], ["goal"]])
    assert holds_ctl(ts, "EF goal") and holds_ctl(ts, "AF goal")


def test_eg_holds_via_one_branch_only():
    ts = support.make_ts(3, [(0, 1), (0, 2), (1, 1), (2, 2)], [["a"], ["a"], ["a", "b"]])
    f = "EG (a -> EF b)"
    assert check_ctl(ts, f) == {0, 2}
    assert not holds_ctl(ts, "AG (a -> EF b)")


def test_universal_until_against_duality():
    ts = support.make_ts(4, [(0, 1), (0, 2), (1, 3), (2, 2), (3, 3)], [["a"], ["a"], ["a"], ["b"]])
    assert check_ctl(ts, "A [a U b]") == {1, 3}
    assert check_ctl(ts, "E [a U b]") == {0, 1, 3}


def test_unknown_ap_is_named():
    ts = support.make_ts(1, [(0, 0)], [["safe"]])
    with pytest.raises(CheckError, match="'nope'"):
        check_ctl(ts, "AG nope")


def test_sanitized_alias_accepted():
    ts = support.make_ts(1, [(0, 0)], [["A1.at(6)"]])
    assert holds_ctl(ts, "AG A1_at_6")


def test_env_sets_override_labels():
    ts = support.make_ts(2, [(0, 1), (1, 1)], [[], []])
    assert holds_ctl(ts, "AF target", env={"target": frozenset({1})})


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2**32))
def test_ctl_matches_lasso_oracle(seed):
    rng = random.Random(seed)
    ts = support.random_ts(rng)
    for _ in range(5):
        f = support.random_ctl(rng)
        assert check_ctl(ts, f) == support.oracle_ctl(ts, f), to_text(f)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32))
def test_ag_is_dual_of_ef(seed):
    rng = random.Random(seed)
    ts = support.random_ts(rng)
    phi = support.random_ctl(rng, depth=2)
    all_states = frozenset(range(ts.n))
    assert check_ctl(ts, Temporal("AG", phi)) == all_states - check_ctl(ts, Temporal("EF", Not(phi)))


# --------------------------------------------------------------------- PCTL


def test_probability_one_chain():
    d = support.make_dtmc(2, [(0, 1, 1), (1, 1, 1)], [[], ["goal"]])
    assert check_pctl(d, "P=? [F goal]").probability == {0: Fraction(1)}


def test_one_step_branch():
    d = support.make_dtmc(3, [(0, 1, "9/10"), (0, 2, "1/10"), (1, 1, 1), (2, 2, 1)], [[], ["goal"], []])
    assert check_pctl(d, "P=? [F goal]").probability == {0: Fraction(9, 10)}
    assert check_pctl(d, "P>=0.9 [F goal]").verdict is True
    assert check_pctl(d, "P>0.9 [F goal]").verdict is False


def test_geometric_retry():
    d = support.make_dtmc(2, [(0, 0, "1/2"), (0, 1, "1/2"), (1, 1, 1)], [[], ["goal"]])
    res = check_pctl(d, "P=? [F goal]")
    assert res.probability == {0: Fraction(1)}
    assert isinstance(res.probability[0], Fraction)


def test_globally_is_complement():
    d = support.make_dtmc(3, [(0, 1, "1/4"), (0, 2, "3/4"), (1, 1, 1), (2, 2, 1)], [["s"], [], ["s"]])
    assert check_pctl(d, "P=? [G s]").probability == {0: Fraction(3, 4)}
    assert check_pctl(d, "P=? [F !s]").probability == {0: Fraction(1, 4)}


def test_next_operator():
    d = support.make_dtmc(3, [(0, 1, "1/3"), (0, 2, "2/3"), (1, 1, 1), (2, 2, 1)], [[], ["a"], []])
    assert check_pctl(d, "P=? [X a]").probability == {0: Fraction(1, 3)}


def test_nested_probability_operator():
    d = support.make_dtmc(3, [(0, 1, "1/2"), (0, 2, "1/2"), (1, 1, 1), (2, 0, 1)], [[], ["goal"], []])
    # every state reaches goal with probability one
    assert check_pctl(d, "P>=1 [G P>=1 [F goal]]").verdict is True


def test_unknown_method():
    d = support.make_dtmc(1, [(0, 0, 1)], [["a"]])
    with pytest.raises(ValueError):
        check_pctl(d, "P>0 [F a]", method="magic")


def random_dtmc(rng, n_max=6):
    n = rng.randint(1, n_max)
    edges = []
    for s in range(n):
        targets = rng.sample(range(n), rng.randint(1, min(3, n)))
        weights = [rng.randint(1, 5) for _ in targets]
        total = sum(weights)
        edges += [(s, t, Fraction(w, total)) for t, w in zip(targets, weights)]
    labels = [{a for a in ("a", "b") if rng.random() < 0.5} for _ in range(n)]
    labels[-1] |= {"a", "b"}
    return support.make_dtmc(n, edges, labels)


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 2**32), st.sampled_from(["P=? [a U b]", "P=? [F b]", "P=? [G a]", "P=? [X b]"]))
def test_exact_and_iterative_agree(seed, query):
    d = random_dtmc(random.Random(seed))
    exact = check_pctl(d, query).probability
    approx = check_pctl(d, query, method="iterative").probability
    for s in exact:
        assert abs(float(exact[s]) - approx[s]) < 1e-8
        assert 0 <= exact[s] <= 1


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 2**32))
def test_qualitative_verdicts_match_graph_analysis(seed):
    d = random_dtmc(random.Random(seed))
    ts = support.make_ts(d.n, [(s, t) for s, t, _, _ in d.edges], d.labels)
    sat_pos = check_pctl(d, "P>0 [F b]").states
    assert sat_pos == check_ctl(ts, "EF b")
    sat_one = check_pctl(d, "P>=1 [G a]").states
    assert sat_one == check_ctl(ts, "AG a")


# ----------------------------------------------------------------- builtins


def test_builtin_safety_conjunction():
    macros = eval_builtin_props(support.ts("warehouse_g1"))
    text = to_text(macros["safety"])
    assert text.startswith("A1.safe1 & A1.safe2")


def test_no_error_aps_means_true_with_warning():
    ts = support.make_ts(1, [(0, 0)], [["ok"]])
    macros, warnings = builtin_props(ts)
    assert macros["non-errors"] == TRUE
    assert len(warnings) == 2


def test_liveness_on_final_initial_state():
    ts = support.make_ts(1, [(0, 0)], [["final"]])
    ts.final = [0]
    assert holds_ctl(ts, "liveness")


def test_error_predicates_configurable():
    ts = support.make_ts(2, [(0, 1), (1, 1)], [[], ["A1.crash_x"]])
    assert not holds_ctl(ts, "AG non-errors")
    assert holds_ctl(ts, "AG non-errors", error_predicates=("err",))


@pytest.mark.parametrize("name", support.SMALL_FIXTURES)
def test_qualitative_pairs_agree_on_fixtures(name):
    ts, d = support.ts(name), support.dtmc(name)
    for ctl, pctl in QUALITATIVE_PAIRS:
        assert holds_ctl(ts, ctl) == check_pctl(d, pctl).verdict


def test_ctl_accepts_parsed_formula():
    ts = support.make_ts(1, [(0, 0)], [["p"]])
    assert check_ctl(ts, parse_ctl("AG p")) == check_ctl(ts, Temporal("AG", Prop("p")))
