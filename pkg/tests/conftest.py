import pytest

_RESULTS = {}


@pytest.fixture(scope="session")
def acceptance_results():
    return _RESULTS


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for crit in sorted(_RESULTS):
        res = _RESULTS[crit]
        terminalreporter.write_line(f"{res.summary()}  [{res.elapsed:.1f} s]")
