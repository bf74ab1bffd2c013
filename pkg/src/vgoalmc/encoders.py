"""Text encodings of generated models for NuSMV (`.smv`) and PRISM/Storm (`.pm`).

Both encodings enumerate states with a single integer variable `s`, so the
external tools see exactly the model the internal checker sees.  Output is a
pure function of the model and the property list.
"""

from __future__ import annotations

from fractions import Fraction

from .checker import DEFAULT_ERROR_PREDICATES, declared_aps, expand
from .dtmc_builder import Dtmc, check_stochastic
from .logic import parse_ctl, parse_pctl, sanitize_ap, sanitize_map, to_text
from .ts_builder import TransitionSystem

__all__ = ["encode_smv", "encode_prism", "sanitize_ap", "sanitize_map", "EncodingError"]


class EncodingError(ValueError):
    pass


def _ap_names(model) -> dict:
    """Sanitized identifier for every declared AP of the model."""
    try:
        return sanitize_map(declared_aps(model))
    except ValueError as exc:
        raise EncodingError(str(exc)) from None


def _resolve(model, text_or_formula, parser, env, error_predicates):
    f = parser(text_or_formula) if isinstance(text_or_formula, str) else text_or_formula
    return expand(f, model, env, error_predicates)


def _states_of(model, name) -> list:
    return [s for s, label in enumerate(model.labels) if name in label]


def _alias_target(name, idents, model) -> str:
    """Raw AP behind a property name that may already be in sanitized form."""
    if name in idents:
        return name
    for raw in sorted(declared_aps(model)):
        if sanitize_ap(raw) == name:
            return raw
    raise EncodingError(f"unknown atomic proposition {name!r}")


def encode_smv(ts: TransitionSystem, props=(), env=None, error_predicates=DEFAULT_ERROR_PREDICATES) -> str:
    """NuSMV module for a self-loop completed TS with one CTLSPEC per property."""
    if not ts.completed:
        raise EncodingError("SMV needs a total transition relation; complete self-loops first")
    formulas = [_resolve(ts, p, parse_ctl, env, error_predicates) for p in props]
    idents = _ap_names(ts)
    lines = ["MODULE main", "VAR", f"  s : 0..{max(ts.n - 1, 0)};"]
    lines.append("INIT")
    lines.append("  " + " | ".join(f"s = {i}" for i in sorted(ts.initial)) + ";")
    lines.append("TRANS")
    pairs = sorted(ts.edge_set())
    body = "\n  | ".join(f"(s = {i} & next(s) = {j})" for i, j in pairs)
    lines.append(f"  {body};")
    if idents:
        lines.append("DEFINE")
        for raw, ident in sorted(idents.items(), key=lambda kv: kv[1]):
            states = _states_of(ts, raw)
            rhs = " | ".join(f"s = {i}" for i in states) if states else "FALSE"
            lines.append(f"  {ident} := {rhs};")
    for f in formulas:
        text = to_text(f, ap=lambda n: idents[_alias_target(n, idents, ts)], style="smv")
        lines.append(f"CTLSPEC {text}")
    return "\n".join(lines) + "\n"


def _frac(p: Fraction) -> str:
    return str(p.numerator) if p.denominator == 1 else f"{p.numerator}/{p.denominator}"


def encode_prism(
    dtmc: Dtmc, props=(), env=None, error_predicates=DEFAULT_ERROR_PREDICATES
) -> tuple[str, str]:
    """PRISM DTMC text and the matching properties text (one formula per line)."""
    bad = check_stochastic(dtmc)
    if bad:
        raise EncodingError(f"row of state {bad[0]} does not sum to 1; refusing to encode")
    init = dtmc.initial_states
    if len(init) != 1 or dtmc.initial[init[0]] != 1:
        raise EncodingError("PRISM encoding needs a point-mass initial distribution")
    formulas = [_resolve(dtmc, p, parse_pctl, env, error_predicates) for p in props]
    idents = _ap_names(dtmc)
    lines = ["dtmc", "", "module main", f"  s : [0..{max(dtmc.n - 1, 0)}] init {init[0]};"]
    for s, row in enumerate(dtmc.rows()):
        updates = " + ".join(f"{_frac(p)}:(s'={t})" for t, p in sorted(row))
        lines.append(f"  [] s={s} -> {updates};")
    lines.append("endmodule")
    lines.append("")
    for raw, ident in sorted(idents.items(), key=lambda kv: kv[1]):
        states = _states_of(dtmc, raw)
        rhs = "|".join(f"s={i}" for i in states) if states else "false"
        lines.append(f'label "{ident}" = {rhs};')
    model = "\n".join(lines) + "\n"
    prop_lines = [
        to_text(f, ap=lambda n: f'"{idents[_alias_target(n, idents, dtmc)]}"', style="prism") for f in formulas
    ]
    return model, "".join(line + "\n" for line in prop_lines)
