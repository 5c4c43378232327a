import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=50)
settings.load_profile("default")

_RESULTS: list[tuple[str, bool, str]] = []
_NOTES: list[str] = []


@pytest.fixture
def criterion():
    """Register an acceptance verdict: ``criterion(name, ok, detail)``."""

    def record(name: str, ok: bool, detail: str = "") -> bool:
        _RESULTS.append((name, bool(ok), detail))
        return bool(ok)

    return record


@pytest.fixture
def report_note():
    """Attach a reported (not asserted) statistic to the acceptance summary."""
    return _NOTES.append


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS and not _NOTES:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for name, ok, detail in sorted(_RESULTS, key=lambda r: r[0]):
        tr.write_line(f"{'PASS' if ok else 'FAIL'}  {name}" + (f"  ({detail})" if detail else ""))
    for note in _NOTES:
        tr.write_line(f"NOTE  {note}")
