"""Shared helpers for the test-suite: fixture access, cached builds and oracles."""

from __future__ import annotations

import functools
import random
from fractions import Fraction
from pathlib import Path

from vgoalmc.dtmc_builder import Dtmc, build_dtmc
from vgoalmc.logic import And, Const, Implies, Not, Or, Prop, Temporal, Until
from vgoalmc.spec_model import load_spec
from vgoalmc.ts_builder import TransitionSystem, build_ts, build_ts_naive, complete_self_loops

FIXTURES = Path(__file__).resolve().parents[1] / "src" / "vgoalmc" / "fixtures"
GOLDEN = Path(__file__).resolve().parent / "golden"

ALL_FIXTURES = sorted(p.stem for p in FIXTURES.glob("*.vg"))
WAREHOUSE = [n for n in ALL_FIXTURES if n.startswith("warehouse_")]
# acceptance criterion number -> "PASS"/"FAIL", reported at the end of the session
CRITERIA = {}

SMALL_FIXTURES = [n for n in ALL_FIXTURES if n not in ("warehouse_multi", "warehouse_sound", "warehouse_err_safety")]


def fixture_path(name: str) -> Path:
    return FIXTURES / f"{name}.vg"


@functools.lru_cache(maxsize=None)
def spec(name):
    return load_spec(fixture_path(name))


@functools.lru_cache(maxsize=None)
def ts(name, naive=False) -> TransitionSystem:
    """Self-loop completed TS of a fixture (built once per session)."""
    builder = build_ts_naive if naive else build_ts
    return complete_self_loops(builder(spec(name)))


@functools.lru_cache(maxsize=None)
def dtmc(name, naive=False) -> Dtmc:
    return build_dtmc(ts(name, naive), spec(name))


# ------------------------------------------------------------ small models


def make_ts(n, edges, labels, initial=(0,)) -> TransitionSystem:
    """Hand-written TS; `edges` are (src, dst) pairs and every label an iterable of AP names."""
    return TransitionSystem(
        states=[f"s{i}" for i in range(n)],
        transitions=sorted((s, "a", t) for s, t in set(edges)),
        initial=list(initial),
        final=[],
        labels=[frozenset(l) for l in labels],
        completed=True,
    )


def make_dtmc(n, edges, labels, initial=0) -> Dtmc:
    """Hand-written DTMC; `edges` are (src, dst, probability) triples."""
    return Dtmc(
        states=[f"s{i}" for i in range(n)],
        edges=[(s, t, Fraction(p), ()) for s, t, p in edges],
        initial={initial: Fraction(1)},
        labels=[frozenset(l) for l in labels],
    )


def random_ts(rng: random.Random, max_states=6, aps=("p", "q")) -> TransitionSystem:
    n = rng.randint(1, max_states)
    edges = set()
    for s in range(n):
        for t in rng.sample(range(n), rng.randint(1, min(3, n))):
            edges.add((s, t))
    labels = [{a for a in aps if rng.random() < 0.5} for _ in range(n)]
    for a in aps:  # an AP that labels no state would be undeclared
        if not any(a in l for l in labels):
            labels[rng.randrange(n)].add(a)
    return make_ts(n, edges, labels)


def random_ctl(rng: random.Random, depth=3, aps=("p", "q")):
    if depth == 0 or rng.random() < 0.25:
        r = rng.random()
        if r < 0.1:
            return Const(rng.random() < 0.5)
        return Prop(rng.choice(aps))
    kind = rng.choice(["not", "and", "or", "implies", "EX", "EF", "EG", "AX", "AF", "AG", "EU", "AU"])
    sub = functools.partial(random_ctl, rng, depth - 1, aps)
    if kind == "not":
        return Not(sub())
    if kind == "and":
        return And((sub(), sub()))
    if kind == "or":
        return Or((sub(), sub()))
    if kind == "implies":
        return Implies(sub(), sub())
    if kind in ("EU", "AU"):
        return Until(kind[0], sub(), sub())
    return Temporal(kind, sub())


# ------------------------------------------------------------ CTL oracle


def lassos(ts: TransitionSystem, start: int):
    """All lasso paths from `start`: a simple path plus the index its last edge loops back to.

    Every CTL path property used here has a lasso witness whenever it has any
    witness, so quantifying over these finitely many paths is exact.
    """
    succ = [sorted(set(x)) for x in ts.successors()]
    out = []

    def walk(path, on_path):
        for t in succ[path[-1]]:
            if t in on_path:
                out.append((tuple(path), path.index(t)))
            else:
                path.append(t)
                on_path.add(t)
                walk(path, on_path)
                on_path.discard(t)
                path.pop()

    walk([start], {start})
    return out


def _path_holds(kind, lasso, sat1, sat2):
    path, loop = lasso
    seq = list(path)  # every state of the infinite path occurs in this prefix
    if kind == "X":
        nxt = path[1] if len(path) > 1 else path[loop]
        return nxt in sat1
    if kind == "F":
        return any(s in sat1 for s in seq)
    if kind == "G":
        return all(s in sat1 for s in seq)
    if kind == "U":
        for s in seq:
            if s in sat2:
                return True
            if s not in sat1:
                return False
        return False
    raise ValueError(kind)


def oracle_ctl(ts: TransitionSystem, f) -> frozenset:
    """Satisfying states of `f` computed by enumerating lasso paths (no fixpoints)."""
    n = ts.n
    if isinstance(f, Const):
        return frozenset(range(n)) if f.value else frozenset()
    if isinstance(f, Prop):
        return frozenset(s for s in range(n) if f.name in ts.labels[s])
    if isinstance(f, Not):
        return frozenset(range(n)) - oracle_ctl(ts, f.arg)
    if isinstance(f, And):
        out = frozenset(range(n))
        for a in f.args:
            out &= oracle_ctl(ts, a)
        return out
    if isinstance(f, Or):
        out = frozenset()
        for a in f.args:
            out |= oracle_ctl(ts, a)
        return out
    if isinstance(f, Implies):
        return (frozenset(range(n)) - oracle_ctl(ts, f.left)) | oracle_ctl(ts, f.right)
    if isinstance(f, Temporal):
        quant, kind = f.op[0], f.op[1]
        sat1, sat2 = oracle_ctl(ts, f.arg), frozenset()
    elif isinstance(f, Until):
        quant, kind = f.quant, "U"
        sat1, sat2 = oracle_ctl(ts, f.left), oracle_ctl(ts, f.right)
    else:
        raise TypeError(f)
    agg = any if quant == "E" else all
    return frozenset(s for s in range(n) if agg(_path_holds(kind, l, sat1, sat2) for l in lassos(ts, s)))
