import json
from pathlib import Path

import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")

GOLDEN = Path(__file__).parent / "golden" / "v1"

# (criterion, passed, detail) reported by the acceptance suite; one summary line per criterion.
ACCEPTANCE_LINES: list = []


@pytest.fixture(scope="session")
def golden():
    return json.loads((GOLDEN / "constants.json").read_text())


SWEEP_N = (2, 3, 4)
SWEEP_C = (0.25, 0.5, 0.75)


@pytest.fixture(scope="session")
def sweep():
    """Shot solutions keyed by ``(n, c)``; shared by the soliton and acceptance tests."""
    from warpex.soliton import shoot

    return {(n, c): shoot(n, c) for n in SWEEP_N for c in SWEEP_C}


@pytest.fixture
def acceptance_report():
    def report(number: int, passed: bool, detail: str):
        ACCEPTANCE_LINES.append((number, bool(passed), detail))
        print(f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}")
        return passed
    return report


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted({n for n, _, _ in ACCEPTANCE_LINES}):
        cases = [(ok, detail) for n, ok, detail in ACCEPTANCE_LINES if n == number]
        verdict = "PASS" if all(ok for ok, _ in cases) else "FAIL"
        terminalreporter.write_line(f"criterion {number:>2}: {verdict}  " + "; ".join(d for _, d in cases))
