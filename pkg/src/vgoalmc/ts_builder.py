"""Breadth-first generation of the transition system of a specification.

`build_ts` keeps a table of the successors computed in the previous BFS layer,
keyed by a goal-erased view of the state (beliefs, inbox and focused goal of
every agent).  A state whose key was seen in that layer replays the recorded
successors, adjusting only the goal sequences.  `build_ts_naive` runs the full
reasoning cycle everywhere and serves as the oracle.
"""

from __future__ import annotations

import itertools
import json
import time
from dataclasses import dataclass, field

from .semantics import (
    IDLE,
    AgentState,
    Engine,
    Option,
    action_label,
    is_terminal,
    serialize_state,
)
from .spec_model import Specification

FORMAT_VERSION = 1
STUTTER = "stutter"
FINAL_AP = "final"
DEFAULT_STATE_CAP = 1_000_000


class StateCapExceeded(RuntimeError):
    """Exploration stopped because the state budget was exhausted."""

    def __init__(self, cap, explored):
        super().__init__(f"state cap {cap} exceeded after {explored} states; the model is partial")
        self.cap = cap
        self.explored = explored


@dataclass
class TransitionSystem:
    """Explicit state graph with numbered states.

    `states` holds canonical serializations; `system_states` keeps the runtime
    tuples when the model was built in this process (it is not persisted).
    """

    states: list
    transitions: list  # (src, action label, dst), sorted
    initial: list
    final: list
    labels: list  # per state: frozenset of AP names
    safety: dict = field(default_factory=dict)  # agent id -> safety atom names
    goals: dict = field(default_factory=dict)  # agent id -> goal bases, each a tuple of atom strings
    completed: bool = False
    system_states: list | None = None
    stats: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return len(self.states)

    @property
    def ap(self) -> list:
        return sorted(set().union(*self.labels)) if self.labels else []

    def successors(self) -> list:
        out = [[] for _ in range(self.n)]
        for s, _, t in self.transitions:
            out[s].append(t)
        return out

    def edge_set(self) -> set:
        return {(s, t) for s, _, t in self.transitions}

    def to_json(self) -> dict:
        return {
            "format": "vgoalmc-ts",
            "version": FORMAT_VERSION,
            "states": list(self.states),
            "transitions": [[s, a, t] for s, a, t in self.transitions],
            "initial": list(self.initial),
            "final": list(self.final),
            "labels": [sorted(l) for l in self.labels],
            "safety": {k: list(v) for k, v in self.safety.items()},
            "goals": {k: [list(g) for g in v] for k, v in self.goals.items()},
            "completed": self.completed,
        }

    @classmethod
    def from_json(cls, doc: dict) -> TransitionSystem:
        if doc.get("version") != FORMAT_VERSION:
            raise ValueError(f"unsupported TS format version {doc.get('version')!r}")
        return cls(
            states=list(doc["states"]),
            transitions=[(int(s), a, int(t)) for s, a, t in doc["transitions"]],
            initial=[int(i) for i in doc["initial"]],
            final=[int(i) for i in doc["final"]],
            labels=[frozenset(l) for l in doc["labels"]],
            safety={k: tuple(v) for k, v in doc.get("safety", {}).items()},
            goals={k: tuple(tuple(g) for g in v) for k, v in doc.get("goals", {}).items()},
            completed=bool(doc.get("completed", False)),
        )


def dumps(model) -> str:
    """Deterministic JSON text (sorted keys, fixed separators, trailing newline)."""
    return json.dumps(model.to_json(), sort_keys=True, indent=1, separators=(",", ": ")) + "\n"


def save_ts(ts: TransitionSystem, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(ts))


def load_ts(path) -> TransitionSystem:
    with open(path, encoding="utf-8") as fh:
        return TransitionSystem.from_json(json.load(fh))


# ---------------------------------------------------------------- exploration


def _memo_key(state) -> tuple:
    return tuple((a.id, a.beliefs, a.inbox, a.goals[0] if a.goals else None) for a in state)


def _replay_goals(engine: Engine, agent: AgentState, rec) -> tuple | None:
    """Goal sequence of `agent` after the recorded pops and goal operations.

    Returns None when the recorded cycle does not apply to this tail (the pop
    count or resulting focus would differ), in which case the caller expands
    the state from scratch.
    """
    pops, goal_ops, focus = rec
    goals = list(agent.goals)
    mm = engine.belief_model(agent.beliefs)
    if len(goals) < pops or any(not g <= mm for g in goals[:pops]):
        return None
    if len(goals) > pops and goals[pops] <= mm:
        return None
    goals = goals[pops:]
    for op, base in goal_ops:
        if op == "adopt":
            if base not in goals:
                goals.append(base)
        else:
            goals = [g for g in goals if g != base]
    if (goals[0] if goals else None) != focus:
        return None
    return tuple(goals)


def _expand(engine: Engine, state) -> list:
    """Fresh successors plus the per-agent records needed to replay them.

    A record is None for a passive agent (no options, identity step).
    """
    per_agent = [engine.options(a) for a in state]
    if not any(per_agent):
        return []
    choices = [opts or (Option(IDLE, IDLE, a, frozenset()),) for a, opts in zip(state, per_agent)]
    out = []
    for combo in itertools.product(*choices):
        steps, nxt = engine.compose(state, combo)
        recs = tuple(
            (opt.pops, opt.goal_ops, opt.focus) if opts else None for opts, opt in zip(per_agent, combo)
        )
        out.append((action_label(steps), nxt, recs))
    return out


def _replay(engine: Engine, state, recorded) -> list | None:
    out = []
    for label, nxt, recs in recorded:
        agents = []
        for a, b, rec in zip(state, nxt, recs):
            if rec is None:  # passive agent, identity step
                agents.append(AgentState(a.id, a.beliefs, a.goals, b.inbox))
                continue
            goals = _replay_goals(engine, a, rec)
            if goals is None:
                return None
            agents.append(AgentState(b.id, b.beliefs, goals, b.inbox))
        out.append((label, tuple(agents), recs))
    return out


def _explore(spec: Specification, memo: bool, state_cap: int) -> TransitionSystem:
    t0 = time.perf_counter()
    engine = Engine(spec, cache=False)
    s0 = engine.initial_state()
    index = {s0: 0}
    order = [s0]
    edges = []
    frontier = [s0]
    table = {}
    hits = misses = 0
    while frontier:
        new_table = {}
        discovered = {}
        for s in frontier:
            if is_terminal(s):
                continue
            succ = None
            key = _memo_key(s) if memo else None
            if memo and key in table:
                succ = _replay(engine, s, table[key])
                hits += succ is not None
            if succ is None:
                succ = _expand(engine, s)
                misses += 1
            if memo:
                new_table[key] = succ
            for label, nxt, _ in succ:
                edges.append((s, label, nxt))
                if nxt not in index and nxt not in discovered:
                    discovered[nxt] = serialize_state(nxt)
        frontier = sorted(discovered, key=discovered.__getitem__)
        for s in frontier:
            index[s] = len(order)
            order.append(s)
        if len(order) > state_cap:
            raise StateCapExceeded(state_cap, len(order))
        table = new_table  # only the previous layer is kept
    transitions = sorted({(index[s], a, index[t]) for s, a, t in edges})
    labels = [frozenset(engine.label(s)) for s in order]
    ts = TransitionSystem(
        states=[serialize_state(s) for s in order],
        transitions=transitions,
        initial=[0],
        final=[i for i, s in enumerate(order) if is_terminal(s)],
        labels=labels,
        safety={aid: tuple(str(x) for x in atoms) for aid, atoms in spec.safety},
        goals={a.id: tuple(tuple(sorted(str(x) for x in g)) for g in a.goals) for a in spec.agents},
        system_states=order,
    )
    ts.stats = {
        "states": ts.n,
        "transitions": len(transitions),
        "seconds": time.perf_counter() - t0,
        "memo_hits": hits,
        "expansions": misses,
    }
    return ts


def _goal_str(base) -> str:
    return "{" + ",".join(sorted(str(a) for a in base)) + "}"


def build_ts(spec: Specification, state_cap: int = DEFAULT_STATE_CAP) -> TransitionSystem:
    """Transition system of `spec`, replaying memoized successors where possible."""
    return _explore(spec, True, state_cap)


def build_ts_naive(spec: Specification, state_cap: int = DEFAULT_STATE_CAP) -> TransitionSystem:
    """Reference exploration: every state runs the full reasoning cycle."""
    return _explore(spec, False, state_cap)


def complete_self_loops(ts: TransitionSystem) -> TransitionSystem:
    """Make the relation total with `stutter` self-loops and expose F as AP `final`."""
    has_out = {s for s, _, _ in ts.transitions}
    loops = [(s, STUTTER, s) for s in range(ts.n) if s not in has_out]
    finals = set(ts.final)
    labels = [l | {FINAL_AP} if i in finals else l for i, l in enumerate(ts.labels)]
    return TransitionSystem(
        states=list(ts.states),
        transitions=sorted(ts.transitions + loops),
        initial=list(ts.initial),
        final=list(ts.final),
        labels=labels,
        safety=dict(ts.safety),
        goals=dict(ts.goals),
        completed=True,
        system_states=ts.system_states,
        stats=dict(ts.stats, stutter_loops=len(loops)),
    )


def deadlocks(ts: TransitionSystem) -> list:
    """Non-final states without outgoing transitions."""
    has_out = {s for s, a, _ in ts.transitions if a != STUTTER}
    finals = set(ts.final)
    return [s for s in range(ts.n) if s not in has_out and s not in finals]


def agent_views(ts: TransitionSystem, spec: Specification) -> set:
    """Observable states: per agent the id, minimal model of B and focused goal base.

    Goal tails and pending inboxes are dropped, so two specifications that only
    differ in repeated goals can be compared state by state.
    """
    if ts.system_states is None:
        raise ValueError("agent views need a model built in this process")
    engine = Engine(spec)
    views = set()
    for state in ts.system_states:
        parts = []
        for a in state:
            mm = ",".join(sorted(str(x) for x in engine.belief_model(a.beliefs)))
            focus = _goal_str(a.goals[0]) if a.goals else "{}"
            parts.append(f"{a.id}:({mm}):{focus}")
        views.add("|".join(parts))
    return views
