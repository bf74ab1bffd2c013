import itertools
import math

from hypothesis import given, settings
from hypothesis import strategies as st

from vgoalmc.semantics import (
    IDLE,
    SKIP,
    AgentState,
    Engine,
    agent_options,
    initial_state,
    interpret_goals,
    is_terminal,
    joint_successors,
    minimal_model,
    serialize_state,
)
from vgoalmc.spec_model import Atom, parse_spec

import support


def atoms(*texts):
    out = set()
    for t in texts:
        pred, _, rest = t.partition("(")
        args = tuple(x.strip() for x in rest.rstrip(")").split(",")) if rest else ()
        out.add(Atom(pred, args))
    return frozenset(out)


TWO_AGENTS = """
agents:
  goal gx = {donex}.
  goal gy = {doney}.
  agent X beliefs {} goals [gx].
  agent Y beliefs {} goals [gy].
actions:
  goal(donex) implies do tryx.
  goal(doney) implies do tryy.
effects:
  action tryx
    outcome x_ok: add donex
    outcome x_fail.
  action tryy
    outcome y_ok: add doney
    outcome y_slow
    outcome y_fail.
"""


# ------------------------------------------------------------ minimal models


def test_minimal_model_adds_derived_fact():
    rules = parse_spec("knowledge:\n  battery(1) implies safe1.\n").knowledge
    assert minimal_model(atoms("battery(1)"), rules) == atoms("battery(1)", "safe1")


def test_minimal_model_without_rules_is_beliefs():
    b = atoms("at(6)", "idle(2)")
    assert minimal_model(b, ()) == b


def test_existential_rule_with_negation():
    spec = parse_spec("knowledge:\n  exists p. at(p) and not at(9) implies safe2.\ndomains:\n  loc = {3, 9}.\n  p in loc.\n")
    rules, dom, sorts = spec.knowledge, spec.domain_map, spec.sort_of
    assert Atom("safe2", ()) in minimal_model(atoms("at(3)"), rules, dom, sorts)
    assert Atom("safe2", ()) not in minimal_model(atoms("at(9)"), rules, dom, sorts)


POSITIVE = parse_spec(
    "knowledge:\n  a implies b.\n  b and c implies d.\n  d implies e.\n  a and e implies f.\n"
).knowledge
BASE = sorted(atoms("a", "b", "c", "d", "e", "f"), key=str)


@settings(max_examples=80, deadline=None)
@given(st.sets(st.sampled_from(BASE)), st.sets(st.sampled_from(BASE)))
def test_minimal_model_monotone_and_idempotent(small, extra):
    small = frozenset(small)
    big = small | frozenset(extra)
    m_small, m_big = minimal_model(small, POSITIVE), minimal_model(big, POSITIVE)
    assert small <= m_small
    assert m_small <= m_big
    assert minimal_model(m_small, POSITIVE) == m_small


# ------------------------------------------------------------- goal handling


def test_interpret_goals():
    g1, g2 = atoms("g1"), atoms("g2")
    assert interpret_goals((g1, g1, g2)) == g1
    assert interpret_goals(()) == frozenset()
    assert interpret_goals((atoms("a", "b"),)) == atoms("a", "b")


def test_is_terminal():
    g1 = atoms("g1")
    done = (AgentState("A", frozenset(), ()), AgentState("B", frozenset(), ()))
    assert is_terminal(done)
    assert not is_terminal((AgentState("A", frozenset(), (g1,)),))
    assert not is_terminal((AgentState("A", frozenset(), (g1,)), AgentState("B", frozenset(), ())))


def test_goal_free_agent_has_no_options():
    spec = parse_spec(TWO_AGENTS)
    assert agent_options(AgentState("X", frozenset(), ()), spec) == ()


def test_all_terminal_state_has_no_successors():
    spec = parse_spec(TWO_AGENTS)
    state = (AgentState("X", frozenset(), ()), AgentState("Y", frozenset(), ()))
    assert joint_successors(state, spec) == []


def test_options_multiply_into_joint_successors():
    spec = parse_spec(TWO_AGENTS)
    s0 = initial_state(spec)
    counts = [len(agent_options(a, spec)) for a in s0]
    assert counts == [2, 3]
    assert len(joint_successors(s0, spec)) == 6


def test_warehouse_initial_successors_are_the_product():
    spec = support.spec("warehouse_g1g2g1")
    s0 = initial_state(spec)
    counts = [max(1, len(agent_options(a, spec))) for a in s0]
    assert len(joint_successors(s0, spec)) == math.prod(counts)


def test_move_with_two_outcomes_gives_two_options():
    spec = support.spec("warehouse_g1")
    engine = Engine(spec)
    state = initial_state(spec)
    # walk forward until A1 has a move option; each move has a success and a failure outcome
    seen = set()
    frontier = [state]
    while frontier:
        s = frontier.pop()
        for a in s:
            opts = engine.options(a)
            moves = [o for o in opts if o.action.startswith("move(")]
            if moves:
                by_action = {}
                for o in moves:
                    by_action.setdefault(o.action, []).append(o.outcome)
                assert all(len(v) >= 2 for v in by_action.values())
                return
        for _, nxt in engine.joint_successors(s):
            key = serialize_state(nxt)
            if key not in seen:
                seen.add(key)
                frontier.append(nxt)
    raise AssertionError("no move option found")


def test_blocked_agent_skips():
    spec = parse_spec(TWO_AGENTS.replace("goal(doney) implies do tryy.", ""))
    (opt,) = agent_options(AgentState("Y", frozenset(), (atoms("doney"),)), spec)
    assert opt.action == SKIP and opt.next.goals == (atoms("doney"),)


def test_achieved_focus_is_popped_before_options():
    spec = parse_spec(TWO_AGENTS)
    gx, gy = atoms("donex"), atoms("doney")
    engine = Engine(spec)
    with_done = AgentState("X", atoms("donex"), (gx, gy))
    popped = AgentState("X", atoms("donex"), (gy,))
    a, b = engine.options(with_done), engine.options(popped)
    assert [(o.action, o.outcome, o.next) for o in a] == [(o.action, o.outcome, o.next) for o in b]
    assert a[0].pops == 1 and b[0].pops == 0


def test_last_goal_achieved_gives_idle_step_to_terminal():
    spec = parse_spec(TWO_AGENTS)
    (opt,) = agent_options(AgentState("X", atoms("donex"), (atoms("donex"),)), spec)
    assert opt.action == IDLE and opt.next.goals == ()


# ------------------------------------------------------------------ messages


def test_messages_routed_exactly_once():
    spec = support.spec("mini_cancel")
    engine = Engine(spec)
    seen, frontier, checked = set(), [initial_state(spec)], 0
    while frontier:
        s = frontier.pop()
        per_agent = [engine.options(a) or (None,) for a in s]
        for combo in itertools.product(*per_agent):
            if None in combo:
                continue
            sent = [m for o in combo for m in o.messages]
            _, nxt = engine.compose(s, combo)
            inboxes = [m for a in nxt for m in a.inbox]
            assert sorted(sent, key=str) == sorted(inboxes, key=str)
            for a in nxt:
                assert all(m.recipient == a.id for m in a.inbox)
            checked += len(sent)
        for _, nxt in engine.joint_successors(s):
            key = serialize_state(nxt)
            if key not in seen:
                seen.add(key)
                frontier.append(nxt)
    assert checked > 0


def test_cancel_message_drops_goal():
    spec = support.spec("mini_cancel")
    engine = Engine(spec)
    s0 = initial_state(spec)
    w = s0[1]
    cancel = None
    # find a step where W receives the cancel message and check its goal list shrinks
    seen, frontier = set(), [s0]
    while frontier and cancel is None:
        s = frontier.pop(0)
        if s[1].inbox:
            cancel = s
            break
        for _, nxt in engine.joint_successors(s):
            key = serialize_state(nxt)
            if key not in seen:
                seen.add(key)
                frontier.append(nxt)
    assert cancel is not None and w.goals
    h = atoms("at(3)", "rested")
    assert h in cancel[1].goals
    for opt in engine.options(cancel[1]):
        assert h not in opt.next.goals


# --------------------------------------------------------------- determinism


def test_joint_successors_deterministic():
    spec = support.spec("warehouse_g1_g2")
    s0 = initial_state(spec)
    first = [(tuple(map(str, j)), serialize_state(n)) for j, n in joint_successors(s0, spec)]
    fresh = Engine(spec, cache=False).joint_successors(s0)
    assert first == [(tuple(map(str, j)), serialize_state(n)) for j, n in fresh]
