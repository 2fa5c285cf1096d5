import numpy as np
import pytest

# criterion number -> (passed, detail), filled through the ``acceptance`` fixture
_RESULTS = pytest.StashKey[dict]()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def acceptance(request):
    """Record one criterion's named checks and fail the test if any is false."""
    store = request.config.stash.setdefault(_RESULTS, {})

    def record(n: int, checks: dict, detail: str = ""):
        failed = [k for k, ok in checks.items() if not ok]
        store[n] = (not failed, detail if not failed else f"{detail}  failed: {', '.join(failed)}")
        assert not failed, f"criterion {n}: {', '.join(failed)} ({detail})"

    return record


def pytest_terminal_summary(terminalreporter, config):
    store = config.stash.get(_RESULTS, {})
    if not store:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(store):
        ok, detail = store[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
