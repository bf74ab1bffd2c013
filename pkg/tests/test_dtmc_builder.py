from fractions import Fraction

import pytest

from vgoalmc.dtmc_builder import (
    Dtmc,
    DtmcError,
    build_dtmc,
    check_stochastic,
    decimal_str,
    joint_probability,
    load_dtmc,
    save_dtmc,
)
from vgoalmc.ts_builder import build_ts, dumps

import support


def test_joint_probability_is_a_product():
    prob = {"move_ok": Fraction(9, 10), "pick_ok": Fraction(4, 5)}
    assert joint_probability("A1:move(6,3)/move_ok;A2:pick(3)/pick_ok", prob) == Fraction(18, 25)


def test_missing_labels_count_as_one():
    assert joint_probability("A1:move(6,3)/move_ok;R:idle", {}) == 1
    assert joint_probability("stutter", {"move_ok": Fraction(1, 2)}) == 1
    assert joint_probability("A1:skip;A2:skip", {"skip": Fraction(1, 2)}) == 1


def test_single_error_label():
    assert joint_probability("A1:move(6,3)/move_base_err", {"move_base_err": Fraction(1, 50)}) == Fraction(1, 50)


def test_rows_are_normalized():
    ts = support.make_ts(3, [(0, 1), (0, 2), (1, 1), (2, 2)], [[], [], []])
    ts.transitions = [(0, "A:go/left", 1), (0, "A:go/right", 2), (1, "stutter", 1), (2, "stutter", 2)]
    d = build_dtmc(ts, prob={"left": Fraction(45, 100), "right": Fraction(45, 100)})
    assert d.rows()[0] == [(1, Fraction(1, 2)), (2, Fraction(1, 2))]


def test_deterministic_model_gets_probability_one():
    ts = support.make_ts(3, [(0, 1), (1, 2), (2, 2)], [[], [], []])
    d = build_dtmc(ts)
    assert [p for _, _, p, _ in d.edges] == [1, 1, 1]


def test_requires_completed_ts():
    with pytest.raises(DtmcError, match="self-loop"):
        build_dtmc(build_ts(support.spec("mini_move")))


def test_zero_weight_row_is_an_error():
    ts = support.make_ts(2, [(0, 1), (1, 1)], [[], []])
    ts.transitions = [(0, "A:go/bad", 1), (1, "stutter", 1)]
    with pytest.raises(DtmcError, match="state 0"):
        build_dtmc(ts, prob={"bad": Fraction(0)})


@pytest.mark.parametrize("name", support.SMALL_FIXTURES)
def test_fixture_rows_sum_to_one_exactly(name):
    d = support.dtmc(name)
    assert check_stochastic(d) == []
    assert all(total == 1 for total in d.row_sums())
    assert sum(d.initial.values()) == 1


@pytest.mark.parametrize("name", support.SMALL_FIXTURES)
def test_support_graph_equals_ts_graph(name):
    ts, d = support.ts(name), support.dtmc(name)
    assert {(s, t) for s, t, _, _ in d.edges} == ts.edge_set()
    assert d.labels == ts.labels
    assert d.initial == {ts.initial[0]: 1}


def test_parallel_edges_are_merged():
    ts = support.make_ts(2, [(0, 1), (1, 1)], [[], []])
    ts.transitions = [(0, "A:go/x", 1), (0, "A:go/y", 1), (1, "stutter", 1)]
    d = build_dtmc(ts, prob={"x": Fraction(1, 4), "y": Fraction(1, 4)})
    assert d.edges[0] == (0, 1, Fraction(1), ("A:go/x", "A:go/y"))


def test_mini_cancel_probabilities():
    d = support.dtmc("mini_cancel")
    row0 = d.rows()[0]
    # the supervisor prepares deterministically while the worker steps or slips
    assert sorted(p for _, p in row0) == [Fraction(1, 2), Fraction(1, 2)]


def test_decimal_rendering():
    assert decimal_str(Fraction(1)) == "1"
    assert decimal_str(Fraction(9, 10)) == "0.9"
    assert decimal_str(Fraction(1, 3)).startswith("0.3333")


def test_json_round_trip_is_exact(tmp_path):
    d = support.dtmc("mini_cancel")
    path = tmp_path / "d.json"
    save_dtmc(d, path)
    back = load_dtmc(path)
    assert back.edges == d.edges
    assert dumps(back) == dumps(d)
    assert isinstance(back, Dtmc)
