import numpy as np
import pytest

from uarelay.geometry import NetworkConfig
from uarelay.numerics import dbm_to_watts

LAMBDA1 = 1.0 / (16 * 150.0**2)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def net():
    """Reference network: Rc = 300 m, 23 dBm, lambda2 = 2 lambda1, 15 dB edge SNR."""
    p = dbm_to_watts(23.0)
    return NetworkConfig(LAMBDA1, 2 * LAMBDA1, alpha=4.0, cell_radius=300.0,
                         noise_power=p * 300.0**-4 / 10**1.5, p_s=p)


def pytest_terminal_summary(terminalreporter):
    from . import test_acceptance

    if not test_acceptance.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(test_acceptance.RESULTS):
        terminalreporter.write_line(test_acceptance.RESULTS[number].line())
