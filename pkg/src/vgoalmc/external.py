"""Optional adapter for the NuSMV and Storm command-line tools.

Binaries are looked up in `$VGOALMC_TOOLS_DIR` first, then on `PATH`.  When a
tool is missing the adapter reports status "skipped" instead of failing.
"""

from __future__ import annotations

import os
import re
import shutil
import subprocess
from dataclasses import dataclass, field

TOOLS = {"nusmv": ("NuSMV", "nusmv"), "storm": ("storm",)}
ENV_DIR = "VGOALMC_TOOLS_DIR"


@dataclass
class ToolRun:
    tool: str
    status: str  # "ok", "skipped" or "failed"
    verdicts: list = field(default_factory=list)  # bool, or float for Storm quantitative results
    message: str = ""

    def to_json(self) -> dict:
        return {"tool": self.tool, "status": self.status, "verdicts": self.verdicts, "message": self.message}


def find_tool(tool: str) -> str | None:
    names = TOOLS.get(tool.lower())
    if names is None:
        raise ValueError(f"unknown tool {tool!r}; expected one of {', '.join(TOOLS)}")
    base = os.environ.get(ENV_DIR)
    for name in names:
        if base:
            cand = os.path.join(base, name)
            if os.path.isfile(cand) and os.access(cand, os.X_OK):
                return cand
        found = shutil.which(name)
        if found:
            return found
    return None


_NUSMV_LINE = re.compile(r"^-- specification .* is (true|false)\s*$", re.MULTILINE)
_STORM_RESULT = re.compile(r"^Result \(for initial states\):\s*(\S+)", re.MULTILINE)


def parse_nusmv_output(text: str) -> list:
    """Verdicts in CTLSPEC order from NuSMV's standard output."""
    return [m.group(1) == "true" for m in _NUSMV_LINE.finditer(text)]


def parse_storm_output(text: str) -> list:
    """Results in property order: booleans for bounded queries, floats for P=? queries."""
    out = []
    for m in _STORM_RESULT.finditer(text):
        val = m.group(1)
        if val in ("true", "false"):
            out.append(val == "true")
        else:
            out.append(float(val))
    return out


def run_tool(tool: str, model_path, props_path=None, timeout: float = 600) -> ToolRun:
    """Run an external checker on an emitted model file."""
    exe = find_tool(tool)
    if exe is None:
        return ToolRun(tool, "skipped", message=f"{tool} not found (set {ENV_DIR} or PATH)")
    if tool.lower() == "nusmv":
        cmd = [exe, str(model_path)]
        parse = parse_nusmv_output
    else:
        cmd = [exe, "--prism", str(model_path)]
        if props_path is not None:
            cmd += ["--prop", str(props_path)]
        parse = parse_storm_output
    try:
        proc = subprocess.run(cmd, capture_output=True, text=True, timeout=timeout, check=False)
    except (OSError, subprocess.TimeoutExpired) as exc:
        return ToolRun(tool, "failed", message=str(exc))
    if proc.returncode != 0:
        return ToolRun(tool, "failed", message=proc.stderr.strip() or proc.stdout.strip())
    return ToolRun(tool, "ok", parse(proc.stdout))


def compare(internal: list, external: list, tolerance: float = 1e-6) -> list:
    """Indices where external verdicts disagree with internal ones."""
    bad = []
    if len(internal) != len(external):
        return list(range(max(len(internal), len(external))))
    for i, (a, b) in enumerate(zip(internal, external)):
        if isinstance(a, bool) or isinstance(b, bool):
            if a != b:
                bad.append(i)
        elif abs(float(a) - float(b)) > tolerance:
            bad.append(i)
    return bad
