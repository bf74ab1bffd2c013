"""Turn a (self-loop completed) transition system into a DTMC.

Each joint action is weighted by the product of the probabilities of its
outcome labels; rows are then normalized.  All arithmetic uses Fractions so row
sums are exactly one.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction

from .logic import exact_decimal
from .semantics import IDLE, SKIP, parse_action_label
from .spec_model import Specification
from .ts_builder import FORMAT_VERSION, STUTTER, TransitionSystem, dumps

NEUTRAL = {SKIP, IDLE, STUTTER}


class DtmcError(ValueError):
    pass


@dataclass
class Dtmc:
    """States, exact transition probabilities and labels.

    `edges` is a sorted list of (src, dst, probability, action labels); parallel
    TS transitions into the same successor are merged and their labels kept.
    """

    states: list
    edges: list
    initial: dict  # state -> probability (a point mass in practice)
    labels: list
    final: list = field(default_factory=list)
    safety: dict = field(default_factory=dict)
    goals: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return len(self.states)

    @property
    def ap(self) -> list:
        return sorted(set().union(*self.labels)) if self.labels else []

    @property
    def initial_states(self) -> list:
        return sorted(s for s, p in self.initial.items() if p > 0)

    def rows(self) -> list:
        """Per state: list of (successor, probability)."""
        out = [[] for _ in range(self.n)]
        for s, t, p, _ in self.edges:
            out[s].append((t, p))
        return out

    def row_sums(self) -> list:
        sums = [Fraction(0)] * self.n
        for s, _, p, _ in self.edges:
            sums[s] += p
        return sums

    def to_json(self) -> dict:
        return {
            "format": "vgoalmc-dtmc",
            "version": FORMAT_VERSION,
            "states": list(self.states),
            "edges": [[s, t, decimal_str(p), str(p), list(acts)] for s, t, p, acts in self.edges],
            "initial": {str(s): str(p) for s, p in sorted(self.initial.items())},
            "final": list(self.final),
            "labels": [sorted(l) for l in self.labels],
            "safety": {k: list(v) for k, v in self.safety.items()},
            "goals": {k: [list(g) for g in v] for k, v in self.goals.items()},
        }

    @classmethod
    def from_json(cls, doc: dict) -> Dtmc:
        if doc.get("version") != FORMAT_VERSION:
            raise ValueError(f"unsupported DTMC format version {doc.get('version')!r}")
        return cls(
            states=list(doc["states"]),
            edges=[(int(e[0]), int(e[1]), Fraction(e[3]), tuple(e[4])) for e in doc["edges"]],
            initial={int(s): Fraction(p) for s, p in doc["initial"].items()},
            labels=[frozenset(l) for l in doc["labels"]],
            final=[int(i) for i in doc.get("final", [])],
            safety={k: tuple(v) for k, v in doc.get("safety", {}).items()},
            goals={k: tuple(tuple(g) for g in v) for k, v in doc.get("goals", {}).items()},
        )


def decimal_str(p: Fraction, digits: int = 17) -> str:
    """Decimal rendering of a probability, exact when the expansion terminates."""
    text = exact_decimal(p)
    return text if "/" not in text else f"{float(p):.{digits}g}"


def joint_probability(action: str, prob: dict) -> Fraction:
    """Product of the probabilities of the outcome labels in a joint action label.

    Labels absent from `prob`, and the neutral labels skip/idle/stutter,
    contribute a factor of one.
    """
    result = Fraction(1)
    if action in NEUTRAL:
        return result
    for _, act, outcome in parse_action_label(action):
        if outcome in NEUTRAL:
            continue
        p = prob.get(outcome)
        if p is not None:
            result *= Fraction(p)
    return result


def build_dtmc(ts: TransitionSystem, spec: Specification | None = None, prob: dict | None = None) -> Dtmc:
    """DTMC over the states of `ts` with normalized joint-outcome probabilities."""
    if not ts.completed:
        raise DtmcError("transition system must be self-loop completed first")
    if prob is None:
        prob = spec.prob_map if spec is not None else {}
    weights = {}
    actions = {}
    for s, a, t in ts.transitions:
        w = joint_probability(a, prob)
        weights[(s, t)] = weights.get((s, t), Fraction(0)) + w
        actions.setdefault((s, t), []).append(a)
    totals = [Fraction(0)] * ts.n
    for (s, _), w in weights.items():
        totals[s] += w
    edges = []
    for (s, t), w in sorted(weights.items()):
        if totals[s] == 0:
            raise DtmcError(f"state {s} has zero outgoing weight and cannot be normalized")
        if w == 0:  # outcome declared with probability 0: not part of the support
            continue
        edges.append((s, t, w / totals[s], tuple(sorted(actions[(s, t)]))))
    if len(ts.initial) != 1:
        raise DtmcError(f"expected exactly one initial state, got {len(ts.initial)}")
    return Dtmc(
        states=list(ts.states),
        edges=edges,
        initial={ts.initial[0]: Fraction(1)},
        labels=list(ts.labels),
        final=list(ts.final),
        safety=dict(ts.safety),
        goals=dict(ts.goals),
    )


def check_stochastic(d: Dtmc) -> list:
    """States whose outgoing probabilities do not sum to exactly one."""
    return [s for s, total in enumerate(d.row_sums()) if total != 1]


def save_dtmc(d: Dtmc, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(d))


def load_dtmc(path) -> Dtmc:
    with open(path, encoding="utf-8") as fh:
        return Dtmc.from_json(json.load(fh))
