import json

import pytest

from vgoalmc.quick_detect import (
    AGENT_GOAL,
    TUPLE_GOAL,
    ErrorEntry,
    ErrorReport,
    dedup_goals,
    detect_errors,
    goal_combinations,
    project_single_agent,
    reduce_goals,
)
from vgoalmc.spec_model import parse_spec

import support


def test_dedup_keeps_first_occurrences():
    assert dedup_goals(["g1", "g2", "g1"]) == ["g1", "g2"]
    assert dedup_goals(["g1", "g1", "g2", "g2", "g1"]) == ["g1", "g2"]
    assert dedup_goals(["g1"]) == ["g1"]


def test_dedup_rejects_empty():
    with pytest.raises(ValueError):
        dedup_goals([])


def test_projection_keeps_service_agents():
    spec = support.spec("warehouse_g1g2g1")
    warnings = []
    sub = project_single_agent(spec, "A2", warnings)
    assert [a.id for a in sub.agents] == ["A2", "R"]
    assert [aid for aid, _ in sub.safety] == ["A2"]
    assert warnings and "A1" in warnings[0] and "A3" in warnings[0]


def test_projection_unknown_agent():
    with pytest.raises(KeyError):
        project_single_agent(support.spec("warehouse_g1"), "A9")


def test_goal_combinations_count():
    spec = support.spec("warehouse_multi")
    combos = goal_combinations(spec)
    assert len(combos) == 8  # two distinct goals for each of three agents
    assert all([aid for aid, _ in c] == ["A1", "A2", "A3"] for c in combos)


def test_goal_free_agents_warned_in_combinations():
    warnings = []
    goal_combinations(support.spec("warehouse_g1"), warnings)
    assert any("R" in w for w in warnings)


def test_reduce_goals():
    spec = support.spec("warehouse_A1_g1g1g2g2g1")
    (a1,) = [a for a in reduce_goals(spec).agents if a.id == "A1"]
    assert len(a1.goals) == 2


def test_report_set_semantics_and_json():
    r = ErrorReport()
    r.entries.add(ErrorEntry(AGENT_GOAL, "A1", "x"))
    r.entries.add(ErrorEntry(AGENT_GOAL, "A1", "x"))
    assert len(r.entries) == 1 and bool(r)
    doc = json.loads(json.dumps(r.to_json()))
    assert doc["errors"] == [{"kind": AGENT_GOAL, "subject": "A1", "detail": "x"}]
    assert "no errors" in ErrorReport().table()


def test_unreachable_goal_detected():
    report = detect_errors(support.spec("warehouse_err_unreachable"))
    assert {AGENT_GOAL, TUPLE_GOAL} <= report.kinds()
    subjects = {e.subject for e in report.entries if e.kind == AGENT_GOAL}
    assert subjects
    assert all(a.states > 0 for a in report.analyses)


def test_joint_deadlock_detected():
    report = detect_errors(support.spec("warehouse_err_deadlock"))
    assert TUPLE_GOAL in report.kinds()
    assert AGENT_GOAL not in report.kinds()


def test_single_agent_sound_spec_is_clean():
    report = detect_errors(support.spec("warehouse_g1"))
    assert not report
    assert [a.kind for a in report.analyses] == ["agent", "tuple"]


def test_state_cap_gives_incomplete_entry():
    report = detect_errors(support.spec("warehouse_g1"), state_cap=5)
    assert report.kinds() == {"incomplete"}


@pytest.mark.parametrize("mode", ["EF", "AF"])
def test_diamond_modes(mode):
    report = detect_errors(support.spec("mini_move"), diamond_mode=mode)
    assert not report


def test_unknown_diamond_mode():
    with pytest.raises(ValueError):
        detect_errors(support.spec("mini_move"), diamond_mode="sometimes")


def test_goal_free_spec_has_nothing_to_analyse():
    report = detect_errors(parse_spec("agents:\n  agent A beliefs {} goals [].\n"))
    assert report.analyses == [] and not report
