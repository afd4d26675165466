import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from opbernstein import hermitian as H
from opbernstein.hermitian import HermitianMatrix, SpectralError, operator_norm, trace_exp, matrix_sum


def power_iteration_norm(a, iters=5000):
    # |lambda|_max of a Hermitian matrix = sqrt of the top eigenvalue of a^2
    b = a @ a
    v = np.ones(a.shape[0], dtype=complex) + 0.1j * np.arange(a.shape[0])
    val = 0.0
    for _ in range(iters):
        w = b @ v
        nw = np.linalg.norm(w)
        if nw == 0:
            return 0.0
        v = w / nw
        val = np.real(np.vdot(v, b @ v))
    return math.sqrt(max(val, 0.0))


def taylor_trace_exp(a, s, terms=40):
    acc = np.eye(a.shape[0], dtype=complex)
    term = np.eye(a.shape[0], dtype=complex)
    for k in range(1, terms):
        term = term @ (s * a) / k
        acc = acc + term
    return float(np.trace(acc).real)


def random_h(g, n):
    return H.random_hermitian(n, g)


def test_rejects_non_hermitian():
    with pytest.raises(ValueError, match="not Hermitian"):
        HermitianMatrix([[0, 1], [0, 0]])


def test_symmetrizes_within_tolerance():
    M = HermitianMatrix([[1, 1 + 1e-13], [1, 2]])
    assert np.array_equal(M.entries, M.entries.conj().T)


def test_rejects_non_square():
    with pytest.raises(ValueError):
        HermitianMatrix(np.zeros((2, 3)))


def test_entries_immutable():
    M = H.identity(2)
    with pytest.raises(ValueError):
        M.entries[0, 0] = 5


def test_eigenvalues_real(rng):
    M = random_h(rng, 5)
    w = np.linalg.eigvals(M.entries)
    assert np.max(np.abs(w.imag)) < 1e-10


@pytest.mark.parametrize("n", [1, 2, 5])
def test_norm_of_zero(n):
    assert operator_norm(H.zeros(n)) == 0


def test_norm_examples():
    assert operator_norm(H.diag(3, -5)) == pytest.approx(5, abs=1e-14)
    assert operator_norm(HermitianMatrix([[0, 1], [1, 0]])) == pytest.approx(1, abs=1e-14)


def test_norm_matches_power_iteration(rng):
    for _ in range(20):
        n = int(rng.integers(2, 9))
        M = random_h(rng, n)
        assert operator_norm(M) == pytest.approx(power_iteration_norm(M.entries), abs=1e-8)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 6), a=st.floats(-5, 5))
def test_norm_axioms(seed, n, a):
    g = np.random.default_rng(seed)
    A, B = random_h(g, n), random_h(g, n)
    assert operator_norm(A + B) <= operator_norm(A) + operator_norm(B) + 1e-10
    assert operator_norm(A * a) == pytest.approx(abs(a) * operator_norm(A), abs=1e-10)


def test_trace_exp_examples():
    assert trace_exp(H.zeros(3), 7) == 3
    assert trace_exp(H.diag(1, -1), 1) == pytest.approx(math.e + 1 / math.e, abs=1e-14)
    assert trace_exp(H.diag(1, -1), 1) == pytest.approx(3.0862, abs=1e-4)


def test_trace_exp_scale_zero(rng):
    for n in (1, 3, 6):
        assert trace_exp(random_h(rng, n), 0) == n


def test_trace_exp_matches_taylor(rng):
    for _ in range(30):
        n = int(rng.integers(1, 7))
        M = random_h(rng, n)
        s = float(rng.uniform(-2, 2)) / max(operator_norm(M), 1e-12)
        assert trace_exp(M, s) == pytest.approx(taylor_trace_exp(M.entries, s), abs=1e-9)


def test_trace_exp_convexity_lower_bound(rng):
    # tr exp(sM) >= n exp(s tr M / n)
    for _ in range(20):
        M = random_h(rng, 4)
        s = float(rng.uniform(-3, 3))
        assert trace_exp(M, s) >= 4 * math.exp(s * np.trace(M.entries).real / 4) - 1e-12


def test_trace_exp_overflow_names_eigenvalue():
    with pytest.raises(SpectralError, match="1000"):
        trace_exp(H.diag(1000.0, 0.0), 1.0)


def test_expm_consistent_with_trace_exp(rng):
    M = random_h(rng, 4)
    assert np.trace(H.expm(M, 0.7)).real == pytest.approx(trace_exp(M, 0.7), rel=1e-12)


def test_matrix_sum_examples(rng):
    M = random_h(rng, 3)
    assert matrix_sum([M, -M]) == H.zeros(3)
    assert matrix_sum([M]) == M
    assert matrix_sum([H.diag(1, 0), H.diag(0, 1)]) == H.identity(2)


def test_matrix_sum_dimension_mismatch():
    with pytest.raises(ValueError, match="2 vs 3"):
        matrix_sum([H.zeros(2), H.zeros(3)])


def test_text_round_trip(rng):
    M = random_h(rng, 4)
    text = H.dumps_matrix(M)
    assert text.splitlines()[0] == "4"
    assert H.loads_matrix(text) == M


def test_parse_plain_entries():
    M = H.loads_matrix("2\n1+0j 0-2j\n0+2j -3+0j\n")
    assert M.entries[0, 1] == -2j


def test_parse_errors():
    with pytest.raises(ValueError, match="line 2"):
        H.loads_matrix("2\n1 2 3\n0 1\n")
    with pytest.raises(ValueError, match="end of input"):
        H.loads_matrix("2\n1 0\n")
