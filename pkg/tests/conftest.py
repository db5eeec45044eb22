import pytest

_ACCEPTANCE: list[tuple[str, bool, str]] = []


@pytest.fixture
def acceptance():
    """Record a criterion result; the line is echoed and repeated in the terminal summary."""

    def record(label: str, ok: bool, detail: str = "") -> bool:
        ok = bool(ok)
        _ACCEPTANCE.append((label, ok, detail))
        print(f"{'PASS' if ok else 'FAIL'}  {label}  {detail}")
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label, ok, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {label}  {detail}")
