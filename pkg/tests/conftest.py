import pytest

from binsim.probes import ScriptedProbes

_ACCEPTANCE: list[str] = []


@pytest.fixture
def criterion():
    """Record one pass/fail line for the acceptance summary."""

    def record(number: int, passed: bool, detail: str) -> bool:
        status = "PASS" if passed else "FAIL"
        _ACCEPTANCE.append(f"[{status}] criterion {number:>2}: {detail}")
        return passed

    return record


@pytest.fixture
def scripted():
    return ScriptedProbes


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(_ACCEPTANCE, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
