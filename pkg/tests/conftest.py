import numpy as np
import pytest

from tridiag_spectra.basis import PotentialParams
from tridiag_spectra.scattering import phase_shift_curve

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def resonant_curve():
    """P-wave phase-shift curve across the sharp resonance near eps = 4."""
    params = PotentialParams(lam=1.0, C=70.0, gamma=0.4)
    return phase_shift_curve(params, 1, (0.1, 8.0), n_samples=200)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
