import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

#: (criterion, passed, detail) rows filled in by the acceptance suite.
ACCEPTANCE_RESULTS = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in sorted(ACCEPTANCE_RESULTS, key=lambda r: r[0]):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
