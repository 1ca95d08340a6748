import os

# Several tests compare 1, 2 and "max" workers; give numba a pool larger than
# one even on single-core runners. Must happen before numba is imported.
os.environ.setdefault("NUMBA_NUM_THREADS", str(max(4, os.cpu_count() or 1)))

import numpy as np  # noqa: E402
import pytest  # noqa: E402

_ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE] = []


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def acceptance(request):
    """Record one PASS/FAIL/N/A line for an acceptance criterion."""

    def report(number, status, detail):
        line = f"criterion {number}: {status} - {detail}"
        print(line)
        request.config.stash[_ACCEPTANCE].append(line)

    return report
