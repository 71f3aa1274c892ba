import sys

import numpy as np
import pytest

from spadeclip.experiments import make_synthetic


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def short_sines():
    """Half a second of the five-tone generator, peak-normalized."""
    return make_synthetic("sparse_sines", seed=7, duration=0.5)



def pytest_terminal_summary(terminalreporter):
    module = next((m for name, m in sys.modules.items() if name.endswith("test_acceptance")), None)
    report = getattr(module, "REPORT", None)
    if not report:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(report):
        terminalreporter.write_line(report[number])
