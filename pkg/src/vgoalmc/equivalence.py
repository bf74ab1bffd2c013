"""Strong bisimulation for transition systems and probabilistic bisimulation for DTMCs.

Both use signature-based partition refinement on the disjoint union of the two
models: start from the partition by label, then repeatedly split blocks by the
blocks their successors fall into (for DTMCs: by the exact probability mass sent
into each block) until the partition is stable.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .dtmc_builder import Dtmc, DtmcError, check_stochastic
from .ts_builder import TransitionSystem


class AlphabetError(ValueError):
    pass


@dataclass(frozen=True)
class BisimResult:
    """Outcome of an equivalence check; truthy iff the models are equivalent.

    On failure `witness` is a pair of initial states (index in the first model,
    index in the second) that are not equivalent, and `reason` says why.
    """

    equivalent: bool
    witness: tuple | None = None
    reason: str = ""
    blocks: int = 0

    def __bool__(self):
        return self.equivalent

    def to_json(self) -> dict:
        return {
            "equivalent": self.equivalent,
            "witness": list(self.witness) if self.witness else None,
            "reason": self.reason,
            "blocks": self.blocks,
        }


def _vocabulary(model) -> set:
    names = set()
    for aid, atoms in model.safety.items():
        names.update(f"{aid}.{a}" for a in atoms)
    for aid, bases in model.goals.items():
        for base in bases:
            names.update(f"{aid}.{a}" for a in base)
    return names


def _check_alphabets(m1, m2) -> None:
    v1, v2 = _vocabulary(m1), _vocabulary(m2)
    if v1 != v2:
        diff = sorted(v1 ^ v2)
        raise AlphabetError(f"models declare different atomic propositions: {', '.join(diff[:5])}")


def _refine(labels, signature) -> list:
    """Coarsest stable partition: block index per state."""
    ids = {}
    block = [ids.setdefault(l, len(ids)) for l in labels]
    count = len(ids)
    while True:
        ids = {}
        new = [ids.setdefault((block[s], signature(s, block)), len(ids)) for s in range(len(labels))]
        if len(ids) == count:
            return new
        block, count = new, len(ids)


def ts_partition(ts: TransitionSystem) -> list:
    """Block index per state of the coarsest bisimulation on one TS."""
    succ = [sorted(set(x)) for x in ts.successors()]
    return _refine(list(ts.labels), lambda s, b: frozenset(b[t] for t in succ[s]))


def bisimilar_ts(ts1: TransitionSystem, ts2: TransitionSystem) -> BisimResult:
    """Strong bisimilarity of two transition systems (initial states matched both ways)."""
    _check_alphabets(ts1, ts2)
    off = ts1.n
    succ = [sorted(set(x)) for x in ts1.successors()]
    succ += [sorted({t + off for t in x}) for x in ts2.successors()]
    labels = list(ts1.labels) + list(ts2.labels)
    block = _refine(labels, lambda s, b: frozenset(b[t] for t in succ[s]))
    init1 = list(ts1.initial)
    init2 = [i + off for i in ts2.initial]
    return _match_initial(block, init1, init2, off, labels)


def _match_initial(block, init1, init2, off, labels) -> BisimResult:
    nblocks = len(set(block))
    b2 = {block[j] for j in init2}
    b1 = {block[i] for i in init1}
    for i in init1:
        if block[i] not in b2:
            return _failure(i, init2[0] if init2 else None, off, labels, nblocks)
    for j in init2:
        if block[j] not in b1:
            return _failure(init1[0] if init1 else None, j, off, labels, nblocks)
    return BisimResult(True, blocks=nblocks)


def _failure(i, j, off, labels, nblocks) -> BisimResult:
    if i is None or j is None:
        return BisimResult(False, None, "one model has no initial state", nblocks)
    reason = "labels differ" if labels[i] != labels[j] else "successor behaviour differs"
    return BisimResult(False, (i, j - off), reason, nblocks)


def _check_dtmc(d: Dtmc) -> None:
    bad = check_stochastic(d)
    if bad:
        raise DtmcError(f"DTMC is not stochastic at state {bad[0]}")


def dtmc_partition(d: Dtmc) -> list:
    _check_dtmc(d)
    rows = d.rows()
    return _refine(list(d.labels), lambda s, b: _mass(rows[s], b))


def _mass(row, block) -> frozenset:
    acc = {}
    for t, p in row:
        acc[block[t]] = acc.get(block[t], Fraction(0)) + p
    return frozenset(acc.items())


def prob_bisimilar(d1: Dtmc, d2: Dtmc) -> BisimResult:
    """Probabilistic bisimilarity: equal initial mass on every block of the coarsest partition."""
    _check_dtmc(d1)
    _check_dtmc(d2)
    _check_alphabets(d1, d2)
    off = d1.n
    rows = d1.rows() + [[(t + off, p) for t, p in row] for row in d2.rows()]
    labels = list(d1.labels) + list(d2.labels)
    block = _refine(labels, lambda s, b: _mass(rows[s], b))
    nblocks = len(set(block))
    mass1, mass2 = {}, {}
    for s, p in d1.initial.items():
        mass1[block[s]] = mass1.get(block[s], Fraction(0)) + p
    for s, p in d2.initial.items():
        mass2[block[s + off]] = mass2.get(block[s + off], Fraction(0)) + p
    mass1 = {k: v for k, v in mass1.items() if v}
    mass2 = {k: v for k, v in mass2.items() if v}
    if mass1 == mass2:
        return BisimResult(True, blocks=nblocks)
    i = min(d1.initial_states, default=None)
    j = min(d2.initial_states, default=None)
    return _failure(i, None if j is None else j + off, off, labels, nblocks)


def quotient_ts(ts: TransitionSystem) -> TransitionSystem:
    """The bisimulation quotient; blocks are numbered by their smallest member."""
    block = ts_partition(ts)
    rep = {}
    for s, b in enumerate(block):
        rep.setdefault(b, s)
    order = sorted(rep.values())
    index = {block[s]: k for k, s in enumerate(order)}
    transitions = sorted({(index[block[s]], a, index[block[t]]) for s, a, t in ts.transitions})
    finals = sorted({index[block[s]] for s in ts.final})
    return TransitionSystem(
        states=[ts.states[s] for s in order],
        transitions=transitions,
        initial=sorted({index[block[s]] for s in ts.initial}),
        final=finals,
        labels=[ts.labels[s] for s in order],
        safety=dict(ts.safety),
        goals=dict(ts.goals),
        completed=ts.completed,
    )


def quotient_dtmc(d: Dtmc) -> Dtmc:
    """The probabilistic bisimulation quotient, blocks numbered by smallest member."""
    block = dtmc_partition(d)
    rep = {}
    for s, b in enumerate(block):
        rep.setdefault(b, s)
    order = sorted(rep.values())
    index = {block[s]: k for k, s in enumerate(order)}
    edges = {}
    rows = d.rows()
    for k, s in enumerate(order):
        for t, p in rows[s]:
            key = (k, index[block[t]])
            edges[key] = edges.get(key, Fraction(0)) + p
    initial = {}
    for s, p in d.initial.items():
        initial[index[block[s]]] = initial.get(index[block[s]], Fraction(0)) + p
    return Dtmc(
        states=[d.states[s] for s in order],
        edges=[(s, t, p, ()) for (s, t), p in sorted(edges.items())],
        initial=initial,
        labels=[d.labels[s] for s in order],
        final=sorted({index[block[s]] for s in d.final}),
        safety=dict(d.safety),
        goals=dict(d.goals),
    )
