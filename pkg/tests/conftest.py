import pytest

RESULTS = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[RESULTS] = {}


@pytest.fixture
def record(request):
    """Store one acceptance verdict, printed in the terminal summary."""
    results = request.config.stash[RESULTS]

    def _record(number, title, ok, detail=""):
        results[number] = (title, bool(ok), detail)
        print(f"{'PASS' if ok else 'FAIL'} {number}. {title}: {detail}")
        return bool(ok)

    return _record


def pytest_terminal_summary(terminalreporter, config):
    results = config.stash.get(RESULTS, {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        title, ok, detail = results[number]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} {number}. {title}: {detail}")
