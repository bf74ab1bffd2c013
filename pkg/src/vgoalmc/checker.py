"""Explicit-state CTL and PCTL model checking.

CTL uses the usual fixpoint labeling: backward search for EU, a counting
greatest fixpoint for EG, and dualities for the A operators.  PCTL until
probabilities are split into probability-0 and probability-1 states by graph
analysis; the remaining states are solved exactly over the rationals, one
strongly connected component at a time in reverse topological order.  A
floating-point value iteration is available for large models.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction

from .logic import (
    And,
    Const,
    Implies,
    Not,
    Or,
    PathOp,
    Prob,
    Prop,
    Temporal,
    Until,
    conj,
    parse_ctl,
    parse_pctl,
    sanitize_ap,
)

log = logging.getLogger(__name__)

FINAL_AP = "final"
DEFAULT_ERROR_PREDICATES = ("err", "crash")
BUILTIN_NAMES = ("non-errors", "liveness", "safety")
VI_TOLERANCE = 1e-10
VI_MAX_SWEEPS = 10**6


class CheckError(ValueError):
    pass


@dataclass(frozen=True)
class PctlResult:
    """Verdict over the initial states plus the probability of the top-level path formula.

    For a query `P=? [...]` the verdict is None.  `probability` maps each
    initial state to its value (Fraction when exact, float when iterative).
    """

    verdict: bool | None
    probability: dict
    states: frozenset


def _pred_name(ap: str) -> str:
    """Predicate part of an agent-qualified label name: `A1.err_base` -> `err_base`."""
    local = ap.split(".", 1)[1] if "." in ap else ap
    return local.split("(", 1)[0]


def error_aps(model, error_predicates=DEFAULT_ERROR_PREDICATES) -> list:
    return [ap for ap in model.ap if any(e in _pred_name(ap) for e in error_predicates)]


def builtin_props(model, error_predicates=DEFAULT_ERROR_PREDICATES) -> tuple[dict, list]:
    """Named formulas `non-errors`, `liveness` and `safety` for a labeled model.

    Returns (macros, warnings).  A configured error predicate that matches no
    label of the model produces a warning and contributes nothing.
    """
    warnings = []
    errs = error_aps(model, error_predicates)
    for e in error_predicates:
        if not any(e in _pred_name(ap) for ap in errs):
            warnings.append(f"error predicate {e!r} matches no atomic proposition")
    macros = {
        "non-errors": conj(Not(Prop(ap)) for ap in errs),
        "liveness": Prop(FINAL_AP),
        "safety": conj(Prop(f"{aid}.{atom}") for aid, atoms in sorted(model.safety.items()) for atom in atoms),
    }
    return macros, warnings


def declared_aps(model) -> set:
    """Names that may be referenced even when they label no state."""
    names = set(model.ap) | {FINAL_AP}
    for aid, atoms in model.safety.items():
        names.update(f"{aid}.{a}" for a in atoms)
    for aid, bases in getattr(model, "goals", {}).items():
        for base in bases:
            names.update(f"{aid}.{a}" for a in base)
    return names


def expand(f, model, env=None, error_predicates=DEFAULT_ERROR_PREDICATES):
    """Replace builtin and user macros by their definitions (used by the encoders)."""
    macros, _ = builtin_props(model, error_predicates)
    macros.update({k: v for k, v in (env or {}).items() if not isinstance(v, (set, frozenset))})

    def go(g):
        if isinstance(g, Prop) and g.name in macros:
            return go(macros[g.name])
        if isinstance(g, Not):
            return Not(go(g.arg))
        if isinstance(g, And):
            return And(tuple(go(a) for a in g.args))
        if isinstance(g, Or):
            return Or(tuple(go(a) for a in g.args))
        if isinstance(g, Implies):
            return Implies(go(g.left), go(g.right))
        if isinstance(g, Temporal):
            return Temporal(g.op, go(g.arg))
        if isinstance(g, PathOp):
            return PathOp(g.op, go(g.arg))
        if isinstance(g, Until):
            return Until(g.quant, go(g.left), go(g.right))
        if isinstance(g, Prob):
            return Prob(g.cmp, g.bound, go(g.path))
        return g

    return go(f)


class Evaluator:
    """Shared state-formula evaluation over a TS or a DTMC."""

    def __init__(self, model, env=None, error_predicates=DEFAULT_ERROR_PREDICATES, method="exact"):
        self.model = model
        self.n = model.n
        self.method = method
        if hasattr(model, "rows"):
            self.rows = model.rows()
            self.succ = [sorted({t for t, _ in row}) for row in self.rows]
        else:
            self.rows = None
            self.succ = [sorted(set(x)) for x in model.successors()]
        missing = [s for s in range(self.n) if not self.succ[s]]
        if missing:
            raise CheckError(f"transition relation is not total (state {missing[0]} has no successor)")
        self.pred = [[] for _ in range(self.n)]
        for s, ts in enumerate(self.succ):
            for t in ts:
                self.pred[t].append(s)
        self.by_ap = {}  # filled on demand; most models carry many more APs than a formula uses
        self.declared = declared_aps(model)
        self.aliases = {}
        for ap in sorted(self.declared):
            self.aliases.setdefault(sanitize_ap(ap), ap)
        self.macros, self.warnings = builtin_props(model, error_predicates)
        self.env = dict(env or {})
        self.all = frozenset(range(self.n))
        self.cache = {}

    # ------------------------------------------------------------ state sets

    def prop(self, name) -> frozenset:
        if name in self.env:
            v = self.env[name]
            return frozenset(v) if isinstance(v, (set, frozenset)) else self.sat(v)
        if name in self.declared:
            return self._states_with(name)
        if name in self.aliases:
            return self._states_with(self.aliases[name])
        if name in self.macros:
            return self.sat(self.macros[name])
        raise CheckError(f"unknown atomic proposition {name!r}")

    def _states_with(self, ap) -> frozenset:
        hit = self.by_ap.get(ap)
        if hit is None:
            hit = self.by_ap[ap] = frozenset(s for s, label in enumerate(self.model.labels) if ap in label)
        return hit

    def sat(self, f) -> frozenset:
        hit = self.cache.get(f)
        if hit is None:
            hit = self._sat(f)
            self.cache[f] = hit
        return hit

    def _sat(self, f) -> frozenset:
        if isinstance(f, Const):
            return self.all if f.value else frozenset()
        if isinstance(f, Prop):
            return self.prop(f.name)
        if isinstance(f, Not):
            return self.all - self.sat(f.arg)
        if isinstance(f, And):
            out = self.all
            for a in f.args:
                out = out & self.sat(a)
            return out
        if isinstance(f, Or):
            out = frozenset()
            for a in f.args:
                out = out | self.sat(a)
            return out
        if isinstance(f, Implies):
            return (self.all - self.sat(f.left)) | self.sat(f.right)
        if isinstance(f, Temporal):
            return self.temporal(f.op, self.sat(f.arg))
        if isinstance(f, Until) and f.quant is not None:
            a, b = self.sat(f.left), self.sat(f.right)
            if f.quant == "E":
                return self.eu(a, b)
            # A[a U b] = !(E[!b U (!a & !b)] | EG !b)
            nb = self.all - b
            return self.all - (self.eu(nb, nb - a) | self.eg(nb))
        if isinstance(f, Prob):
            probs = self.path_probs(f.path)
            if f.bound is None:
                raise CheckError("a P=? query is only allowed at the top level")
            return frozenset(s for s in range(self.n) if _compare(probs[s], f.cmp, f.bound))
        raise CheckError(f"not a state formula: {f!r}")

    def temporal(self, op, a) -> frozenset:
        if op == "EX":
            return self.ex(a)
        if op == "EF":
            return self.eu(self.all, a)
        if op == "EG":
            return self.eg(a)
        na = self.all - a
        if op == "AX":
            return self.all - self.ex(na)
        if op == "AF":
            return self.all - self.eg(na)
        if op == "AG":
            return self.all - self.eu(self.all, na)
        raise CheckError(f"unknown temporal operator {op}")

    def ex(self, a) -> frozenset:
        return frozenset(p for s in a for p in self.pred[s])

    def eu(self, a, b) -> frozenset:
        """Least fixpoint: states with a path through `a` reaching `b`."""
        seen = set(b)
        stack = list(b)
        while stack:
            s = stack.pop()
            for p in self.pred[s]:
                if p not in seen and p in a:
                    seen.add(p)
                    stack.append(p)
        return frozenset(seen)

    def eg(self, a) -> frozenset:
        """Greatest fixpoint: states with an infinite path staying in `a`."""
        alive = set(a)
        count = {s: sum(1 for t in self.succ[s] if t in alive) for s in alive}
        stack = [s for s, c in count.items() if c == 0]
        while stack:
            s = stack.pop()
            if s not in alive:
                continue
            alive.discard(s)
            for p in self.pred[s]:
                if p in alive:
                    count[p] -= 1
                    if count[p] == 0:
                        stack.append(p)
        return frozenset(alive)

    # ---------------------------------------------------------- probabilities

    def path_probs(self, path) -> list:
        if self.rows is None:
            raise CheckError("probabilistic operators need a DTMC")
        one = Fraction(1) if self.method == "exact" else 1.0
        zero = one - one
        if isinstance(path, PathOp):
            a = self.sat(path.arg)
            if path.op == "X":
                return [sum((p for t, p in self.rows[s] if t in a), zero) for s in range(self.n)]
            if path.op == "F":
                return self.until(self.all, a)
            if path.op == "G":
                return [one - p for p in self.until(self.all, self.all - a)]
        if isinstance(path, Until) and path.quant is None:
            return self.until(self.sat(path.left), self.sat(path.right))
        raise CheckError(f"not a path formula: {path!r}")

    def until(self, a, b) -> list:
        no = self.all - self.eu(a, b)
        # prob-1 states: those that cannot reach `no` while staying in a \ b
        bad = set(no)
        stack = list(no)
        ab = a - b
        while stack:
            s = stack.pop()
            for p in self.pred[s]:
                if p not in bad and p in ab:
                    bad.add(p)
                    stack.append(p)
        yes = self.all - bad
        maybe = sorted(bad - no)
        if self.method == "exact":
            x = [Fraction(1) if s in yes else Fraction(0) for s in range(self.n)]
            _solve_exact(self.rows, maybe, x)
        else:
            x = [1.0 if s in yes else 0.0 for s in range(self.n)]
            _solve_iterative(self.rows, maybe, x)
        return x


def _compare(value, cmp, bound) -> bool:
    if isinstance(value, float):
        bound = float(bound)
    if cmp == ">=":
        return value >= bound
    if cmp == ">":
        return value > bound
    if cmp == "<=":
        return value <= bound
    if cmp == "<":
        return value < bound
    return value == bound


def _sccs(nodes, rows):
    """Tarjan's algorithm (iterative) restricted to `nodes`; sinks come first."""
    inside = set(nodes)
    index, low, on_stack = {}, {}, set()
    stack, out = [], []
    counter = 0
    for root in nodes:
        if root in index:
            continue
        work = [(root, iter([t for t, _ in rows[root] if t in inside]))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter([t for t, _ in rows[w] if t in inside])))
                    advanced = True
                    break
                if w in on_stack:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                u = work[-1][0]
                low[u] = min(low[u], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                out.append(sorted(comp))
    return out


def _solve_exact(rows, maybe, x) -> None:
    """Fill x[s] for s in `maybe` with the exact solution of x = P x."""
    for comp in _sccs(maybe, rows):
        members = set(comp)
        # equations: x_s - sum_{t in comp} P(s,t) x_t = sum_{t not in comp} P(s,t) x_t
        eqs = {}
        for s in comp:
            coeffs = {s: Fraction(1)}
            rhs = Fraction(0)
            for t, p in rows[s]:
                if t in members:
                    coeffs[t] = coeffs.get(t, Fraction(0)) - p
                else:
                    rhs += p * x[t]
            eqs[s] = (coeffs, rhs)
        if len(comp) == 1:
            (s,) = comp
            coeffs, rhs = eqs[s]
            x[s] = rhs / coeffs[s]
            continue
        for s, v in _gauss(eqs).items():
            x[s] = v


def _gauss(eqs: dict) -> dict:
    """Sparse Gauss-Jordan elimination over Fractions; eqs maps var -> (coeffs, rhs)."""
    rows = {var: (dict(c), r) for var, (c, r) in eqs.items()}
    solved = {}
    order = sorted(rows)
    pivots = []
    for var in order:
        coeffs, rhs = rows.pop(var)
        # substitute earlier pivots
        for pv, (pc, pr) in pivots:
            f = coeffs.pop(pv, None)
            if f:
                for k, c in pc.items():
                    coeffs[k] = coeffs.get(k, Fraction(0)) - f * c
                rhs -= f * pr
        piv = coeffs.pop(var, Fraction(0))
        if piv == 0:
            raise CheckError("singular linear system in until computation")
        coeffs = {k: c / piv for k, c in coeffs.items() if c}
        rhs = rhs / piv
        # express var in terms of later variables; update earlier pivots
        new_pivots = []
        for pv, (pc, pr) in pivots:
            f = pc.pop(var, None)
            if f:
                for k, c in coeffs.items():
                    pc[k] = pc.get(k, Fraction(0)) - f * c
                pr -= f * rhs
                pc = {k: c for k, c in pc.items() if c}
            new_pivots.append((pv, (pc, pr)))
        pivots = new_pivots + [(var, (coeffs, rhs))]
    for pv, (pc, pr) in pivots:
        if pc:
            raise CheckError("elimination left free variables")
        solved[pv] = pr
    return solved


def _solve_iterative(rows, maybe, x) -> None:
    """Gauss-Seidel value iteration on the `maybe` states."""
    for _ in range(VI_MAX_SWEEPS):
        delta = 0.0
        for s in maybe:
            v = sum(float(p) * x[t] for t, p in rows[s])
            delta = max(delta, abs(v - x[s]))
            x[s] = v
        if delta < VI_TOLERANCE:
            return
    log.warning("value iteration stopped after %d sweeps without converging", VI_MAX_SWEEPS)


# -------------------------------------------------------------------- API


def check_ctl(ts, f, env=None, error_predicates=DEFAULT_ERROR_PREDICATES) -> frozenset:
    """Set of states of `ts` satisfying the CTL formula `f` (text or tree)."""
    if isinstance(f, str):
        f = parse_ctl(f)
    return Evaluator(ts, env, error_predicates).sat(f)


def holds_ctl(ts, f, env=None, error_predicates=DEFAULT_ERROR_PREDICATES) -> bool:
    """Top-level verdict: every initial state satisfies `f`."""
    sat = check_ctl(ts, f, env, error_predicates)
    return all(s in sat for s in ts.initial)


def check_pctl(dtmc, f, env=None, error_predicates=DEFAULT_ERROR_PREDICATES, method="exact") -> PctlResult:
    """Evaluate a PCTL formula on a DTMC.

    `method` is "exact" (rational linear solve) or "iterative" (value
    iteration, floats).  A top-level `P=? [...]` returns the probabilities
    with verdict None.
    """
    if isinstance(f, str):
        f = parse_pctl(f)
    if method not in ("exact", "iterative"):
        raise ValueError(f"unknown method {method!r}")
    ev = Evaluator(dtmc, env, error_predicates, method)
    init = dtmc.initial_states
    if isinstance(f, Prob):
        probs = ev.path_probs(f.path)
        values = {s: probs[s] for s in init}
        if f.bound is None:
            return PctlResult(None, values, frozenset())
        sat = frozenset(s for s in range(dtmc.n) if _compare(probs[s], f.cmp, f.bound))
        return PctlResult(all(s in sat for s in init), values, sat)
    sat = ev.sat(f)
    return PctlResult(all(s in sat for s in init), {}, sat)


def eval_builtin_props(model, error_predicates=DEFAULT_ERROR_PREDICATES) -> dict:
    """The builtin named formulas of `model` (see :func:`builtin_props`), warnings logged."""
    macros, warnings = builtin_props(model, error_predicates)
    for w in warnings:
        log.warning(w)
    return macros


QUALITATIVE_PAIRS = (
    ("AG safety", "P>=1 [G safety]"),
    ("EG (non-errors -> EF liveness)", "P>0 [non-errors U (non-errors & liveness)]"),
)
