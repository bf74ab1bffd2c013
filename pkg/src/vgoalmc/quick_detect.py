"""Compositional error detection for multi-agent, multi-goal specifications.

Instead of exploring the product of every agent's full goal list, the
specification is decomposed into

* one analysis per goal-bearing agent, with the other goal-bearing agents
  removed and the agent's goal list reduced to its distinct goals, checking
  safety and the reachability of each goal;
* one analysis per combination of single goals (one distinct goal per agent),
  checking safety and joint achievement.

Every violation becomes an entry of the :class:`ErrorReport`.
"""

from __future__ import annotations

import dataclasses
import itertools
import logging
import time
from dataclasses import dataclass, field

from .checker import DEFAULT_ERROR_PREDICATES, Evaluator
from .logic import Prop, Temporal, Until, to_text
from .spec_model import Specification
from .ts_builder import DEFAULT_STATE_CAP, StateCapExceeded, build_ts, complete_self_loops

log = logging.getLogger(__name__)

DIAMONDS = ("EU-nonerr", "EF", "AF")

AGENT_SAFETY = "agent-safety"
AGENT_GOAL = "agent-goal"
TUPLE_SAFETY = "tuple-safety"
TUPLE_GOAL = "tuple-goal"
INCOMPLETE = "incomplete"


def dedup_goals(goals) -> list:
    """First occurrences of each goal base, in their original order."""
    goals = list(goals)
    if not goals:
        raise ValueError("cannot reduce an empty goal sequence")
    out = []
    for g in goals:
        if g not in out:
            out.append(g)
    return out


def goal_text(base) -> str:
    return "{" + ", ".join(sorted(str(a) for a in base)) + "}"


def _goal_name(spec: Specification, base) -> str:
    for name, b in spec.goal_names:
        if b == base:
            return name
    return goal_text(base)


def project_single_agent(spec: Specification, agent_id: str, warnings: list | None = None) -> Specification:
    """Keep `agent_id` plus the goal-free (service) agents; drop the other goal-bearing agents.

    Shared rule sections are kept unchanged.  Messages addressed to a removed
    agent are discarded at run time; a warning lists the removed recipients
    that send rules can address.
    """
    spec.agent(agent_id)  # raises on an unknown id
    kept = tuple(a for a in spec.agents if a.id == agent_id or not a.goals)
    removed = [a.id for a in spec.agents if a not in kept]
    if removed and warnings is not None:
        warnings.append(f"projection on {agent_id}: messages to {', '.join(removed)} will be dropped")
    kept_ids = {a.id for a in kept}
    safety = tuple((aid, atoms) for aid, atoms in spec.safety if aid in kept_ids)
    if len(kept) == len(spec.agents):
        return spec
    return spec.replace(agents=kept, safety=safety)


def goal_bearing(spec: Specification) -> list:
    return [a for a in spec.agents if a.goals]


def goal_combinations(spec: Specification, warnings: list | None = None) -> list:
    """Cartesian product of the distinct goals of every goal-bearing agent.

    Each element is a tuple of (agent id, goal base) pairs in declaration order.
    Agents without goals are left out of the product (with a warning).
    """
    per_agent = []
    for a in spec.agents:
        if not a.goals:
            if warnings is not None:
                warnings.append(f"agent {a.id} has no goals and is excluded from goal combinations")
            continue
        per_agent.append([(a.id, g) for g in dedup_goals(a.goals)])
    if not per_agent:
        return []
    return list(itertools.product(*per_agent))


def reduce_goals(spec: Specification) -> Specification:
    """Every agent's goal list replaced by its distinct goals."""
    agents = tuple(dataclasses.replace(a, goals=tuple(dedup_goals(a.goals))) if a.goals else a for a in spec.agents)
    return spec.replace(agents=agents)


def single_goal_spec(spec: Specification, combo) -> Specification:
    goals = dict(combo)
    agents = tuple(dataclasses.replace(a, goals=(goals[a.id],)) if a.id in goals else a for a in spec.agents)
    return spec.replace(agents=agents)


# --------------------------------------------------------------------- report


@dataclass(frozen=True, order=True)
class ErrorEntry:
    """One violation.

    kind is one of agent-safety, agent-goal, tuple-safety, tuple-goal or
    incomplete; subject is an agent id or a goal tuple rendered as text.
    """

    kind: str
    subject: str
    detail: str

    def to_json(self) -> dict:
        return {"kind": self.kind, "subject": self.subject, "detail": self.detail}


@dataclass
class Analysis:
    name: str
    kind: str  # "agent" or "tuple"
    states: int = 0
    transitions: int = 0
    generation_seconds: float = 0.0
    check_seconds: float = 0.0
    status: str = "ok"

    def to_json(self) -> dict:
        return dataclasses.asdict(self)


@dataclass
class ErrorReport:
    entries: set = field(default_factory=set)
    analyses: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    def __bool__(self):
        return bool(self.entries)

    def kinds(self) -> set:
        return {e.kind for e in self.entries}

    @property
    def total_states(self) -> int:
        return sum(a.states for a in self.analyses)

    @property
    def total_check_seconds(self) -> float:
        return sum(a.check_seconds for a in self.analyses)

    def to_json(self) -> dict:
        return {
            "errors": [e.to_json() for e in sorted(self.entries)],
            "analyses": [a.to_json() for a in self.analyses],
            "warnings": list(self.warnings),
            "total_states": self.total_states,
        }

    def table(self) -> str:
        """Human-readable summary: one row per analysis, then the errors."""
        rows = [("scenario", "states", "generation s", "check s", "status")]
        for a in self.analyses:
            rows.append((a.name, str(a.states), f"{a.generation_seconds:.3f}", f"{a.check_seconds:.3f}", a.status))
        widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
        lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in rows]
        lines.append(f"total states: {self.total_states}")
        if self.entries:
            lines.append("errors:")
            lines.extend(f"  [{e.kind}] {e.subject}: {e.detail}" for e in sorted(self.entries))
        else:
            lines.append("no errors found")
        return "\n".join(lines) + "\n"


# ------------------------------------------------------------------ analyses


def _achieved(ts, agent_id, base, done_counts: bool) -> frozenset:
    """States where `agent_id` has `base` in its minimal model (or, optionally, no goals left)."""
    need = {f"{agent_id}.{a}" for a in base}
    out = set()
    idx = None
    for s, label in enumerate(ts.labels):
        if need <= label:
            out.add(s)
        elif done_counts:
            if idx is None:
                idx = [a.id for a in ts.system_states[0]].index(agent_id)
            if not ts.system_states[s][idx].goals:
                out.add(s)
    return frozenset(out)


def diamond(target, mode: str):
    """The reachability formula used for goal checks."""
    if mode == "EU-nonerr":
        return Until("E", Prop("non-errors"), target)
    if mode == "EF":
        return Temporal("EF", target)
    if mode == "AF":
        return Temporal("AF", target)
    raise ValueError(f"unknown diamond mode {mode!r}; expected one of {', '.join(DIAMONDS)}")


SAFETY = Temporal("AG", Prop("safety"))


def _run(spec, name, kind, state_cap, report):
    analysis = Analysis(name, kind)
    report.analyses.append(analysis)
    t0 = time.perf_counter()
    try:
        ts = complete_self_loops(build_ts(spec, state_cap=state_cap))
    except StateCapExceeded as exc:
        analysis.status = f"state cap {exc.cap} exceeded"
        analysis.generation_seconds = time.perf_counter() - t0
        report.entries.add(ErrorEntry(INCOMPLETE, name, str(exc)))
        return analysis, None
    analysis.generation_seconds = time.perf_counter() - t0
    analysis.states = ts.n
    analysis.transitions = len(ts.transitions)
    return analysis, ts


def detect_errors(
    spec: Specification,
    diamond_mode: str = "EU-nonerr",
    error_predicates=DEFAULT_ERROR_PREDICATES,
    state_cap: int = DEFAULT_STATE_CAP,
) -> ErrorReport:
    """Decomposed safety and liveness analysis of `spec`."""
    if diamond_mode not in DIAMONDS:
        raise ValueError(f"unknown diamond mode {diamond_mode!r}")
    report = ErrorReport()
    safety_text = to_text(SAFETY)

    # phase 1: one goal-bearing agent at a time, goals reduced to distinct ones
    for agent in goal_bearing(spec):
        sub = reduce_goals(project_single_agent(spec, agent.id, report.warnings))
        analysis, ts = _run(sub, agent.id, "agent", state_cap, report)
        if ts is None:
            continue
        t0 = time.perf_counter()
        env = {}
        goals = dedup_goals(agent.goals)
        for k, base in enumerate(goals):
            env[f"__goal{k}"] = _achieved(ts, agent.id, base, done_counts=False)
        ev = Evaluator(ts, env, error_predicates)
        if not all(s in ev.sat(SAFETY) for s in ts.initial):
            report.entries.add(ErrorEntry(AGENT_SAFETY, agent.id, safety_text))
        for k, base in enumerate(goals):
            f = diamond(Prop(f"__goal{k}"), diamond_mode)
            if not all(s in ev.sat(f) for s in ts.initial):
                report.entries.add(ErrorEntry(AGENT_GOAL, agent.id, f"goal {_goal_name(spec, base)} unreachable"))
        analysis.check_seconds = time.perf_counter() - t0

    # phase 2: every combination of single goals, all agents together
    for combo in goal_combinations(spec, report.warnings):
        name = "(" + ", ".join(f"{aid}:{_goal_name(spec, g)}" for aid, g in combo) + ")"
        analysis, ts = _run(single_goal_spec(spec, combo), name, "tuple", state_cap, report)
        if ts is None:
            continue
        t0 = time.perf_counter()
        joint = frozenset(range(ts.n))
        for aid, base in combo:
            joint &= _achieved(ts, aid, base, done_counts=True)
        ev = Evaluator(ts, {"__joint": joint}, error_predicates)
        if not all(s in ev.sat(SAFETY) for s in ts.initial):
            report.entries.add(ErrorEntry(TUPLE_SAFETY, name, safety_text))
        if not all(s in ev.sat(diamond(Prop("__joint"), diamond_mode)) for s in ts.initial):
            report.entries.add(ErrorEntry(TUPLE_GOAL, name, "joint achievement of the goals is unreachable"))
        analysis.check_seconds = time.perf_counter() - t0
    return report


def monolithic_analysis(
    spec: Specification,
    diamond_mode: str = "EU-nonerr",
    error_predicates=DEFAULT_ERROR_PREDICATES,
    state_cap: int = DEFAULT_STATE_CAP,
) -> Analysis:
    """Baseline for comparison: the same property family checked on the full model."""
    report = ErrorReport()
    analysis, ts = _run(spec, "monolithic", "full", state_cap, report)
    if ts is None:
        return analysis
    t0 = time.perf_counter()
    env = {}
    for agent in goal_bearing(spec):
        for k, base in enumerate(dedup_goals(agent.goals)):
            env[f"__{agent.id}_{k}"] = _achieved(ts, agent.id, base, done_counts=False)
    ev = Evaluator(ts, env, error_predicates)
    ev.sat(SAFETY)
    for name in env:
        ev.sat(diamond(Prop(name), diamond_mode))
    ev.sat(diamond(Prop("liveness"), diamond_mode))
    analysis.check_seconds = time.perf_counter() - t0
    return analysis


__all__ = [
    "dedup_goals",
    "project_single_agent",
    "goal_combinations",
    "detect_errors",
    "monolithic_analysis",
    "ErrorReport",
    "ErrorEntry",
]
