"""The sampling operator over an orthonormal Hermitian basis.

For sampled basis indices A_1..A_m,

    R(rho) = (n^2 / m) * sum_i tr(rho w_{A_i}) w_{A_i}.

In the coordinates of the basis itself ``(m / n^2) R`` is diagonal, with
the multiplicity of each index on the diagonal; that form gives the
spectrum and norm directly.  :func:`dense_superoperator` builds the same
matrix by applying ``R`` to every basis element, as an independent path.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import rng as _rng
from ._parallel import map_blocks
from .hermitian import HermitianMatrix
from .samplers import Mode, SampleVector, sample

ORTHONORMAL_TOL = 1e-10


@dataclass(frozen=True)
class HermitianBasis:
    dim: int
    elements: tuple[HermitianMatrix, ...]

    def __len__(self) -> int:
        return len(self.elements)

    def stack(self) -> np.ndarray:
        return np.stack([w.entries for w in self.elements])

    def gram(self) -> np.ndarray:
        """Matrix of trace inner products tr(w_a w_b)."""
        s = self.stack()
        return np.einsum("aij,bji->ab", s, s).real

    def coefficients(self, rho: HermitianMatrix) -> np.ndarray:
        """Real coefficients tr(rho w_a)."""
        if rho.dim != self.dim:
            raise ValueError(f"matrix dim {rho.dim} does not match basis dim {self.dim}")
        return np.einsum("ij,aji->a", rho.entries, self.stack()).real

    def synthesize(self, coeffs: np.ndarray) -> HermitianMatrix:
        return HermitianMatrix._trusted(np.tensordot(np.asarray(coeffs, dtype=float), self.stack(), axes=1))


def build_basis(n: int) -> HermitianBasis:
    """E_kk, then (E_kl + E_lk)/sqrt2 and i(E_kl - E_lk)/sqrt2 for k < l."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    r = 1 / math.sqrt(2)
    out = []
    for k in range(n):
        a = np.zeros((n, n), dtype=complex)
        a[k, k] = 1
        out.append(HermitianMatrix._trusted(a))
    for k in range(n):
        for l in range(k + 1, n):
            s = np.zeros((n, n), dtype=complex)
            s[k, l] = s[l, k] = r
            out.append(HermitianMatrix._trusted(s))
            a = np.zeros((n, n), dtype=complex)
            a[k, l] = 1j * r
            a[l, k] = -1j * r
            out.append(HermitianMatrix._trusted(a))
    return HermitianBasis(n, tuple(out))


def check_orthonormal(basis: HermitianBasis, tol: float = ORTHONORMAL_TOL) -> float:
    err = float(np.max(np.abs(basis.gram() - np.eye(len(basis)))))
    if err > tol:
        raise ValueError(f"basis is not orthonormal: max Gram deviation {err:.3e}")
    return err


def _check(v: SampleVector, basis: HermitianBasis) -> None:
    if v.m == 0:
        raise ValueError("sampling operator needs at least one sampled index (m = 0)")
    if v.ensemble_size != len(basis):
        raise ValueError(f"sample vector indexes {v.ensemble_size} coefficients, basis has {len(basis)}")


def apply_sampling_operator(rho: HermitianMatrix, v: SampleVector, basis: HermitianBasis) -> HermitianMatrix:
    _check(v, basis)
    n2 = len(basis)
    acc = np.zeros((basis.dim, basis.dim), dtype=complex)
    for a in v.indices:
        w = basis.elements[a].entries
        acc += np.trace(rho.entries @ w).real * w
    return HermitianMatrix._trusted(acc * (n2 / v.m))


def superoperator_matrix(v: SampleVector, basis: HermitianBasis) -> np.ndarray:
    """(m / n^2) R in the basis coordinates: diag(multiplicities)."""
    _check(v, basis)
    return np.diag(v.multiplicities().astype(float))


def dense_superoperator(v: SampleVector, basis: HermitianBasis) -> np.ndarray:
    """Entry (a, b) = tr(w_a (m/n^2) R(w_b)), by applying R column by column."""
    _check(v, basis)
    scale = v.m / len(basis)
    cols = [basis.coefficients(apply_sampling_operator(w, v, basis)) * scale for w in basis.elements]
    return np.stack(cols, axis=1)


@dataclass(frozen=True)
class SamplingOperatorDiag:
    n: int
    m: int
    indices: SampleVector
    eigenvalues: tuple[float, ...]
    norm: float

    @property
    def max_multiplicity(self) -> int:
        return int(self.indices.multiplicities().max())

    @property
    def is_projection(self) -> bool:
        return self.max_multiplicity <= 1


def diagnose(v: SampleVector, basis: HermitianBasis) -> SamplingOperatorDiag:
    P = superoperator_matrix(v, basis)
    w = np.linalg.eigvalsh(P)
    return SamplingOperatorDiag(basis.dim, v.m, v, tuple(w.tolist()), float(np.max(np.abs(w))))


def _study_block(n: int, m, mode_value: str, seed: int, block: int, count: int, start: int):
    basis = build_basis(n)
    out = []
    for i in range(count):
        trial = start + i
        v = sample(mode_value, n * n, m, _rng.derive_key(seed, "sampling-operator", mode_value, trial))
        if v.m == 0:
            out.append((trial, 0.0, 0, True))
            continue
        d = diagnose(v, basis)
        out.append((trial, d.norm, d.max_multiplicity, d.is_projection))
    return out


def operator_norm_study(n: int, m, mode, trials: int, seed: int, workers: int = 1) -> dict:
    """Per-trial ||(m/n^2) R|| and its min / median / max.

    Bernoulli draws use the realized number of indices as m; an empty
    draw is recorded with norm 0.
    """
    mode = Mode.parse(mode)
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    if mode is Mode.WithoutReplacement and m > n * n:
        raise ValueError(f"m={m} exceeds n^2={n * n} for sampling without replacement")
    if mode is not Mode.Bernoulli and m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    tasks = []
    start = 0
    for b, k in _rng.blocks(trials, 256):
        tasks.append((n, m, mode.value, seed, b, k, start))
        start += k
    rows = [r for part in map_blocks(_study_block, tasks, workers) for r in part]
    norms = np.array([r[1] for r in rows])
    return {
        "rows": rows,
        "min": float(norms.min()),
        "median": float(np.median(norms)),
        "max": float(norms.max()),
    }
