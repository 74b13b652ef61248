import pytest

ACCEPTANCE: dict = {}


@pytest.fixture
def record():
    """Store a one-line verdict for the acceptance summary."""
    def _record(key, ok, detail=""):
        ACCEPTANCE[key] = (bool(ok), detail)
        return ok
    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: (int(k.split("(")[0]), k)):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key:<6} {'PASS' if ok else 'FAIL'}  {detail}")
