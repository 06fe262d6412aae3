import numpy as np
import pytest

from stbc54.channel import Constellation, RngStream, equivalent_channel, real_model, sample_channel, transmit
from stbc54.codes import make_code
from stbc54.detector import reduce

_ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def new54():
    return make_code("new54")


@pytest.fixture(scope="session")
def cod34():
    return make_code("cod34")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def acceptance_log():
    return _ACCEPTANCE_LINES


def noisy_system(code, M, nr, snr_noise_var, seed, trial):
    """Random (s, ReducedSystem, H_real, y_real) instance built from the module API."""
    C = Constellation(M)
    u = RngStream(seed, 3 * trial).uniforms(code.n_real)
    s = 2.0 * np.floor(u * C.q) - (C.q - 1.0)
    ch = sample_channel(code.Nt, nr, RngStream(seed, 3 * trial + 1), snr_noise_var)
    Y = transmit(code.codeword(s), ch, RngStream(seed, 3 * trial + 2))
    Hr, yr = real_model(equivalent_channel(code, ch), Y)
    return s, reduce(Hr, yr), Hr, yr


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
