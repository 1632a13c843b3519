import pytest

_VERDICTS = pytest.StashKey[dict]()


@pytest.fixture
def acceptance(request):
    """Record ``(criterion, passed, detail)``; the lines are repeated in the terminal summary."""
    store = request.config.stash.setdefault(_VERDICTS, {})

    def record(k: int, passed: bool, detail: str) -> bool:
        line = f"ACCEPTANCE {k}: {'PASS' if passed else 'FAIL'} | {detail}"
        store[k] = line
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    store = config.stash.get(_VERDICTS, {})
    if not store:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(store):
        terminalreporter.write_line(store[k])
