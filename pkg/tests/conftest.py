import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from rdpf.prob import hamming

settings.register_profile(
    "rdpf", deadline=None, max_examples=60, derandomize=True,
    suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("rdpf")


@pytest.fixture
def ber15():
    return np.array([0.85, 0.15]), hamming(2)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import summary_lines

    lines = summary_lines()
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
