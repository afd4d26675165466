import numpy as np
import pytest

from opbernstein.ensembles import analyze_ensemble, center_ensemble, random_ensemble
from opbernstein.hermitian import HermitianMatrix

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def pauli_ensemble():
    """{+-sx, +-sy, +-sz}: centered, c = 1, sigma0^2 = 1."""
    mats = []
    for p in (PAULI_X, PAULI_Y, PAULI_Z):
        mats += [HermitianMatrix(p), HermitianMatrix(-p)]
    return analyze_ensemble(mats)


def spiked_ensemble(dim, count, spikes, seed):
    """``spikes`` random members (each paired with its negative), rest zero.

    Small variance relative to c^2, so the Bernstein bound drops below 1
    inside [0, mc] and the tail check is not vacuous.
    """
    g = np.random.default_rng(seed)
    mats = []
    for _ in range(spikes):
        a = g.standard_normal((dim, dim)) + 1j * g.standard_normal((dim, dim))
        a = (a + a.conj().T) / 2
        a /= np.max(np.abs(np.linalg.eigvalsh(a)))
        mats += [HermitianMatrix(a), HermitianMatrix(-a)]
    mats += [HermitianMatrix(np.zeros((dim, dim)))] * (count - 2 * spikes)
    return center_ensemble(analyze_ensemble(mats))


@pytest.fixture
def pauli():
    return pauli_ensemble()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(params=[(2, 4, 1), (2, 5, 2), (3, 4, 3)], ids=lambda p: "n{}-C{}-s{}".format(*p))
def small_ensemble(request):
    n, count, seed = request.param
    return random_ensemble(n, count, seed)


# --- acceptance reporting -----------------------------------------------------

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line[1])
