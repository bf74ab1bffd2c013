"""Command-line pipeline: spec -> transition system -> DTMC -> encodings and verdicts.

Exit codes: 0 success (all checked properties hold, models equivalent, no
errors detected); 1 a property fails, models differ or errors were detected;
2 the stage itself failed (a JSON error payload is written to stderr).
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from fractions import Fraction
from pathlib import Path

from . import external
from .checker import DEFAULT_ERROR_PREDICATES, CheckError, QUALITATIVE_PAIRS, check_pctl, holds_ctl
from .dtmc_builder import Dtmc, DtmcError, build_dtmc, dumps
from .encoders import EncodingError, encode_prism, encode_smv
from .equivalence import AlphabetError, bisimilar_ts, prob_bisimilar
from .logic import FormulaError, parse_ctl, parse_pctl, parse_property_file, to_text
from .quick_detect import DIAMONDS, detect_errors
from .spec_model import SpecError, load_spec, validate
from .ts_builder import (
    DEFAULT_STATE_CAP,
    StateCapExceeded,
    TransitionSystem,
    build_ts,
    build_ts_naive,
    complete_self_loops,
)

FAILURES = (SpecError, FormulaError, CheckError, DtmcError, EncodingError, AlphabetError, StateCapExceeded,
            OSError, ValueError)


def _error_predicates(text):
    return tuple(p.strip() for p in text.split(",") if p.strip())


def _emit(obj) -> None:
    sys.stdout.write(json.dumps(obj, sort_keys=True, indent=1) + "\n")


def _load_json(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _ts_from(path, args) -> TransitionSystem:
    """A self-loop completed TS from a `.vg` spec or a TS JSON file."""
    if str(path).endswith(".vg"):
        return complete_self_loops(build_ts(load_spec(path), state_cap=args.state_cap))
    ts = TransitionSystem.from_json(_load_json(path))
    return ts if ts.completed else complete_self_loops(ts)


def _dtmc_from(path, args) -> Dtmc:
    if str(path).endswith(".vg"):
        spec = load_spec(path)
        return build_dtmc(complete_self_loops(build_ts(spec, state_cap=args.state_cap)), spec)
    return Dtmc.from_json(_load_json(path))


def _write(path, text) -> None:
    Path(path).write_text(text, encoding="utf-8")


# ---------------------------------------------------------------- commands


def cmd_validate(args) -> int:
    spec = load_spec(args.spec)
    diags = [{"severity": d.severity, "location": d.location, "message": d.message} for d in validate(spec)]
    _emit({"spec": args.spec, "diagnostics": diags})
    return 1 if any(d["severity"] == "error" for d in diags) else 0


def cmd_build_ts(args) -> int:
    spec = load_spec(args.spec)
    builder = build_ts_naive if args.naive else build_ts
    ts = builder(spec, state_cap=args.state_cap)
    if not args.no_complete:
        ts = complete_self_loops(ts)
    _write(args.output, dumps(ts))
    _emit({"output": args.output, "states": ts.n, "transitions": len(ts.transitions),
           "final": len(ts.final), "seconds": round(ts.stats["seconds"], 6)})
    return 0


def cmd_build_dtmc(args) -> int:
    spec = load_spec(args.spec)
    if args.ts:
        ts = TransitionSystem.from_json(_load_json(args.ts))
        ts = ts if ts.completed else complete_self_loops(ts)
    else:
        ts = complete_self_loops(build_ts(spec, state_cap=args.state_cap))
    t0 = time.perf_counter()
    d = build_dtmc(ts, spec)
    _write(args.output, dumps(d))
    _emit({"output": args.output, "states": d.n, "edges": len(d.edges), "seconds": round(time.perf_counter() - t0, 6)})
    return 0


def _props(args, parser):
    props = list(args.prop or [])
    if args.props_file:
        logic = "ctl" if parser is parse_ctl else "pctl"
        text = Path(args.props_file).read_text(encoding="utf-8")
        props += [to_text(f) for kind, f in parse_property_file(text) if kind == logic]
    return props


def cmd_encode(args) -> int:
    preds = _error_predicates(args.error_predicates)
    if args.smv:
        ts = _ts_from(args.model, args)
        text = encode_smv(ts, _props(args, parse_ctl), error_predicates=preds)
        out = args.output or "model.smv"
        _write(out, text)
        _emit({"output": out})
    else:
        d = _dtmc_from(args.model, args)
        model, props = encode_prism(d, _props(args, parse_pctl), error_predicates=preds)
        out = args.output or "model.pm"
        props_out = str(Path(out).with_suffix(".props"))
        _write(out, model)
        _write(props_out, props)
        _emit({"output": out, "properties": props_out})
    return 0


def cmd_check(args) -> int:
    preds = _error_predicates(args.error_predicates)
    ctl, pctl = list(args.ctl or []), list(args.pctl or [])
    if args.props_file:
        for logic, f in parse_property_file(Path(args.props_file).read_text(encoding="utf-8")):
            (ctl if logic == "ctl" else pctl).append(to_text(f))
    if not ctl and not pctl:
        raise ValueError("nothing to check: give --ctl, --pctl or --props-file")
    results = []
    if ctl:
        ts = _ts_from(args.model, args)
    for text in ctl:
        results.append({"logic": "ctl", "formula": text, "verdict": holds_ctl(ts, text, error_predicates=preds)})
    method = "iterative" if args.iterative else "exact"
    if pctl:
        d = _dtmc_from(args.model, args)
    for text in pctl:
        res = check_pctl(d, text, error_predicates=preds, method=method)
        entry = {"logic": "pctl", "formula": text, "verdict": res.verdict}
        if res.probability:
            entry["probability"] = {str(s): _prob_json(p) for s, p in sorted(res.probability.items())}
        results.append(entry)
    _emit(results)
    return 1 if any(r["verdict"] is False for r in results) else 0


def _prob_json(p):
    if isinstance(p, Fraction):
        return {"exact": str(p), "decimal": float(p)}
    return {"decimal": p}


def cmd_quick_detect(args) -> int:
    spec = load_spec(args.spec)
    report = detect_errors(spec, args.diamond, _error_predicates(args.error_predicates), args.state_cap)
    if args.output:
        _write(args.output, json.dumps(report.to_json(), sort_keys=True, indent=1) + "\n")
    sys.stdout.write(report.table())
    return 1 if report else 0


def cmd_equiv(args) -> int:
    a, b = _load_json(args.first), _load_json(args.second)
    if args.kind == "ts":
        res = bisimilar_ts(TransitionSystem.from_json(a), TransitionSystem.from_json(b))
    else:
        res = prob_bisimilar(Dtmc.from_json(a), Dtmc.from_json(b))
    _emit(res.to_json())
    return 0 if res else 1


def _goals_text(spec) -> str:
    names = {base: name for name, base in spec.goal_names}
    parts = []
    for a in spec.agents:
        if a.goals:
            parts.append(f"{a.id}:[{','.join(names.get(g, '?') for g in a.goals)}]")
    return " ".join(parts)


def report_row(path, state_cap=DEFAULT_STATE_CAP, error_predicates=DEFAULT_ERROR_PREDICATES) -> dict:
    """One table row: model size plus generation and check wall-clock seconds."""
    spec = load_spec(path)
    t0 = time.perf_counter()
    ts = complete_self_loops(build_ts(spec, state_cap=state_cap))
    d = build_dtmc(ts, spec)
    gen = time.perf_counter() - t0
    t0 = time.perf_counter()
    verdicts = []
    for ctl, pctl in QUALITATIVE_PAIRS:
        verdicts.append(holds_ctl(ts, ctl, error_predicates=error_predicates))
        verdicts.append(check_pctl(d, pctl, error_predicates=error_predicates).verdict)
    chk = time.perf_counter() - t0
    return {
        "scenario": Path(path).stem,
        "goals": _goals_text(spec),
        "states": ts.n,
        "transitions": len(ts.transitions),
        "generation_seconds": f"{gen:.3f}",
        "check_seconds": f"{chk:.3f}",
        "verdicts": " ".join("T" if v else "F" for v in verdicts),
    }


def cmd_report(args) -> int:
    paths = sorted(Path(args.directory).glob("*.vg"))
    if not paths:
        raise ValueError(f"no .vg specifications in {args.directory}")
    preds = _error_predicates(args.error_predicates)
    if args.jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(args.jobs) as pool:
            rows = list(pool.map(report_row, paths, [args.state_cap] * len(paths), [preds] * len(paths)))
    else:
        rows = [report_row(p, args.state_cap, preds) for p in paths]
    out = open(args.output, "w", newline="", encoding="utf-8") if args.output else sys.stdout
    try:
        writer = csv.DictWriter(out, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def cmd_external(args) -> int:
    run = external.run_tool(args.tool, args.model, args.props)
    _emit(run.to_json())
    return 0 if run.status in ("ok", "skipped") else 2


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--state-cap", type=int, default=DEFAULT_STATE_CAP, help="abort exploration beyond N states")
    common.add_argument("--error-predicates", default=",".join(DEFAULT_ERROR_PREDICATES),
                        help="comma-separated substrings marking error predicates (default: err,crash)")
    common.add_argument("--seed-order", action="store_true",
                        help="accepted for compatibility; exploration order is always fixed")
    p = argparse.ArgumentParser(prog="vgoalmc", description="Model generation and checking for vGOAL specifications.")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, **kw):
        return sub.add_parser(name, parents=[common], **kw)


    s = add("validate", help="parse and validate a specification")
    s.add_argument("spec")
    s.set_defaults(func=cmd_validate)

    s = add("build-ts", help="generate the transition system")
    s.add_argument("spec")
    s.add_argument("-o", "--output", default="ts.json")
    s.add_argument("--naive", action="store_true", help="disable successor replay (reference builder)")
    s.add_argument("--no-complete", action="store_true", help="do not add stutter self-loops")
    s.set_defaults(func=cmd_build_ts)

    s = add("build-dtmc", help="generate the DTMC")
    s.add_argument("spec")
    s.add_argument("--ts", help="reuse a TS JSON file instead of exploring again")
    s.add_argument("-o", "--output", default="dtmc.json")
    s.set_defaults(func=cmd_build_dtmc)

    s = add("encode", help="emit NuSMV or PRISM input")
    fmt = s.add_mutually_exclusive_group(required=True)
    fmt.add_argument("--smv", action="store_true")
    fmt.add_argument("--prism", action="store_true")
    s.add_argument("model", help=".vg spec, TS JSON (--smv) or DTMC JSON (--prism)")
    s.add_argument("-p", "--prop", action="append", help="property (repeatable)")
    s.add_argument("--props-file", help="file with ctl:/pctl: lines")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_encode)

    s = add("check", help="check CTL/PCTL properties")
    s.add_argument("model", help=".vg spec, TS JSON or DTMC JSON")
    s.add_argument("--ctl", action="append", help="CTL formula (repeatable)")
    s.add_argument("--pctl", action="append", help="PCTL formula (repeatable)")
    s.add_argument("--props-file", help="file with ctl:/pctl: lines")
    mode = s.add_mutually_exclusive_group()
    mode.add_argument("--exact", action="store_true", help="rational linear solve (default)")
    mode.add_argument("--iterative", action="store_true", help="floating-point value iteration")
    s.set_defaults(func=cmd_check)

    s = add("quick-detect", help="compositional error detection")
    s.add_argument("spec")
    s.add_argument("--diamond", choices=DIAMONDS, default="EU-nonerr")
    s.add_argument("-o", "--output", help="write the report as JSON")
    s.set_defaults(func=cmd_quick_detect)

    s = add("equiv", help="bisimulation check between two models")
    s.add_argument("kind", choices=("ts", "dtmc"))
    s.add_argument("first")
    s.add_argument("second")
    s.set_defaults(func=cmd_equiv)

    s = add("report", help="CSV of model sizes and timings for every spec in a directory")
    s.add_argument("directory")
    s.add_argument("-o", "--output")
    s.add_argument("-j", "--jobs", type=int, default=1)
    s.set_defaults(func=cmd_report)

    s = add("external", help="run NuSMV or Storm on an emitted file")
    s.add_argument("tool", choices=sorted(external.TOOLS))
    s.add_argument("model")
    s.add_argument("--props")
    s.set_defaults(func=cmd_external)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FAILURES as exc:
        sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc)}) + "\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
