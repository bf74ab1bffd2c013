import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent))

import support  # noqa: E402


def pytest_terminal_summary(terminalreporter):
    if not support.CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(support.CRITERIA):
        terminalreporter.write_line(f"criterion {n}: {support.CRITERIA[n]}")
