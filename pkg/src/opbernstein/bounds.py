"""Operator-Bernstein tail bounds and Monte Carlo / exact estimates of
the tail and of the operator moment-generating function
``M(lambda) = E[tr exp(lambda * S)]``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import permutations, product
from typing import Optional, Sequence

import numpy as np
from scipy.stats import norm

from . import rng as _rng
from ._parallel import map_blocks
from .ensembles import MatrixEnsemble
from .hermitian import HermitianMatrix, _checked_exponent, trace_exp
from .samplers import Mode, index_batch

EXACT_GUARD = 10**6
WILSON_CONFIDENCE = 0.9999


class DegenerateEnsembleError(ValueError):
    """The ensemble is identically zero, so the sum is deterministic."""


@dataclass(frozen=True)
class BernsteinParams:
    n: int
    m: int
    c: float
    sigma0sq: float

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise ValueError(f"need n >= 1 and m >= 1, got n={self.n}, m={self.m}")
        if not (self.c >= 0 and self.sigma0sq >= 0):
            raise ValueError(f"need c >= 0 and sigma0^2 >= 0, got c={self.c}, sigma0^2={self.sigma0sq}")

    @property
    def V(self) -> float:
        return self.m * self.sigma0sq

    @property
    def crossover(self) -> float:
        """Threshold 2V/c between the Gaussian and exponential regimes."""
        if self.c == 0:
            return math.inf
        return 2 * self.V / self.c

    @classmethod
    def from_ensemble(cls, e: MatrixEnsemble, m: int) -> "BernsteinParams":
        return cls(e.dim, m, e.norm_bound_c, e.variance_bound_sigma0sq)


def gaussian_branch(p: BernsteinParams, t: float) -> float:
    """2n exp(-t^2 / 4V)."""
    return 2 * p.n * math.exp(-(t * t) / (4 * p.V))


def exponential_branch(p: BernsteinParams, t: float) -> float:
    """2n exp(-t / 2c)."""
    return 2 * p.n * math.exp(-t / (2 * p.c))


def bernstein_bound(p: BernsteinParams, t: float) -> float:
    """Upper bound on Pr[||S|| > t]; not capped at 1."""
    if t < 0:
        raise ValueError(f"t must be nonnegative, got {t}")
    if t == 0:
        return float(2 * p.n)
    if p.V == 0:
        if p.c == 0:
            raise DegenerateEnsembleError("c = 0 and V = 0: the sum is identically zero, the bound is vacuous")
        return exponential_branch(p, t)
    if t <= p.crossover:
        return gaussian_branch(p, t)
    return exponential_branch(p, t)


def wilson_upper(successes: int, trials: int, confidence: float = WILSON_CONFIDENCE) -> float:
    """Upper end of the two-sided Wilson score interval."""
    if trials <= 0:
        raise ValueError("trials must be positive")
    z = norm.ppf(1 - (1 - confidence) / 2)
    phat = successes / trials
    z2 = z * z
    centre = phat + z2 / (2 * trials)
    half = z * math.sqrt(phat * (1 - phat) / trials + z2 / (4 * trials * trials))
    return min(1.0, (centre + half) / (1 + z2 / trials))


@dataclass(frozen=True)
class TailReport:
    t: float
    empirical_tail: float
    exceedances: int
    trials: int
    theoretical_bound: float
    mode: Mode
    seed: int
    wilson_upper: float


def _check_sampling(e: MatrixEnsemble, m: int, mode: Mode, trials: int) -> Mode:
    mode = Mode.parse(mode)
    if mode is Mode.Bernoulli:
        raise ValueError("tail and MGF estimates are defined for iid and noreplace sampling only")
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    if mode is Mode.WithoutReplacement and m > e.size:
        raise ValueError(f"m={m} exceeds |C|={e.size} for sampling without replacement")
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    return mode


def _spectra_block(stack: np.ndarray, m: int, mode_value: str, seed: int, block: int, count: int) -> np.ndarray:
    mode = Mode(mode_value)
    g = _rng.stream(seed, "sums", mode_value, m, block)
    idx = index_batch(mode, g, stack.shape[0], m, count)
    sums = stack[idx].sum(axis=1)
    return np.linalg.eigvalsh(sums)


def sum_spectra(e: MatrixEnsemble, m: int, mode, trials: int, seed: int, workers: int = 1) -> np.ndarray:
    """Eigenvalues of S for each of ``trials`` independent draws, shape (trials, n).

    Row order is trial order regardless of ``workers``.
    """
    mode = _check_sampling(e, m, mode, trials)
    stack = np.ascontiguousarray(e.stack())
    tasks = [(stack, m, mode.value, seed, b, k) for b, k in _rng.blocks(trials)]
    return np.concatenate(map_blocks(_spectra_block, tasks, workers))


def _require_centered(e: MatrixEnsemble) -> None:
    if not e.centered:
        raise ValueError("ensemble is not centered (E[X] != 0); center it first")


def _safe_bound(p: BernsteinParams, t: float) -> float:
    try:
        return bernstein_bound(p, max(t, 0.0))
    except DegenerateEnsembleError:
        return math.nan


def tail_reports(
    e: MatrixEnsemble,
    m: int,
    mode,
    ts: Sequence[float],
    trials: int,
    seed: int,
    workers: int = 1,
) -> list[TailReport]:
    """Empirical Pr[||S|| > t] for every t in ``ts`` from one set of draws."""
    _require_centered(e)
    mode = Mode.parse(mode)
    spectra = sum_spectra(e, m, mode, trials, seed, workers)
    norms = np.max(np.abs(spectra), axis=1)
    p = BernsteinParams.from_ensemble(e, m)
    out = []
    for t in ts:
        k = int(np.count_nonzero(norms > t))
        out.append(
            TailReport(
                t=float(t),
                empirical_tail=k / trials,
                exceedances=k,
                trials=trials,
                theoretical_bound=_safe_bound(p, t),
                mode=mode,
                seed=seed,
                wilson_upper=wilson_upper(k, trials),
            )
        )
    return out


def empirical_tail(e: MatrixEnsemble, m: int, mode, t: float, trials: int, seed: int, workers: int = 1) -> TailReport:
    return tail_reports(e, m, mode, [t], trials, seed, workers)[0]


def _mean_and_se(values: np.ndarray) -> tuple[float, float]:
    k = len(values)
    mean = math.fsum(values.tolist()) / k
    if k < 2:
        return mean, 0.0
    var = math.fsum(((values - mean) ** 2).tolist()) / (k - 1)
    return mean, math.sqrt(var / k)


def mgf_from_spectra(spectra: np.ndarray, scale: float) -> tuple[float, float]:
    x = _checked_exponent(spectra, scale)
    return _mean_and_se(np.sort(np.exp(x), axis=1).sum(axis=1))


def empirical_mgf(
    e: MatrixEnsemble, m: int, mode, scale: float, trials: int, seed: int, workers: int = 1
) -> tuple[float, float]:
    """Monte Carlo mean of tr exp(scale * S) and its standard error."""
    return mgf_from_spectra(sum_spectra(e, m, mode, trials, seed, workers), scale)


def exact_count(size: int, m: int, mode) -> int:
    mode = Mode.parse(mode)
    if mode is Mode.WithReplacement:
        return size**m
    if mode is Mode.WithoutReplacement:
        return math.perm(size, m)
    raise ValueError("exact MGF is defined for iid and noreplace sampling only")


def exact_mgf(e: MatrixEnsemble, m: int, mode, scale: float, guard: int = EXACT_GUARD) -> float:
    """E[tr exp(scale * S)] averaged over every equiprobable sample vector."""
    mode = _check_sampling(e, m, mode, 1)
    count = exact_count(e.size, m, mode)
    if count > guard:
        raise ValueError(f"exact enumeration needs {count} sample vectors, above the limit {guard}")
    stack = e.stack()
    cache: dict = {}
    terms = []
    draws = (
        product(range(e.size), repeat=m)
        if mode is Mode.WithReplacement
        else permutations(range(e.size), m)
    )
    for idx in draws:
        key = tuple(sorted(idx))
        v = cache.get(key)
        if v is None:
            v = cache[key] = trace_exp(HermitianMatrix._trusted(stack[list(key)].sum(axis=0)), scale)
        terms.append(v)
    return math.fsum(terms) / count


def try_exact_mgf(e: MatrixEnsemble, m: int, mode, scale: float) -> Optional[float]:
    """exact_mgf, or None when the enumeration guard refuses."""
    try:
        if exact_count(e.size, m, mode) > EXACT_GUARD:
            return None
    except ValueError:
        return None
    return exact_mgf(e, m, mode, scale)
