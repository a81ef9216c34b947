import sys
from pathlib import Path

import numpy as np
import pytest

from fragscan import accel

sys.path.insert(0, str(Path(__file__).parent))

BACKENDS = ["numba", "numpy"] if accel.HAVE_NUMBA else ["numpy"]


@pytest.fixture(params=BACKENDS)
def backend(request):
    prev = accel.set_backend(request.param)
    yield request.param
    accel.set_backend(prev)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "ACCEPTANCE_RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        terminalreporter.write_line(results[n])
