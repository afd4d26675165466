"""Index samplers for the three sampling models.

Single draws and the batched kernels used by the Monte Carlo loops share
one implementation, so ``sample_without_replacement(size, m, seed)`` is
exactly row 0 of a batch of one drawn from the same stream.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import rng as _rng
from .hermitian import HermitianMatrix


class Mode(enum.Enum):
    WithReplacement = "iid"
    WithoutReplacement = "noreplace"
    Bernoulli = "bernoulli"

    @classmethod
    def parse(cls, value) -> "Mode":
        if isinstance(value, Mode):
            return value
        for mode in cls:
            if value in (mode.value, mode.name):
                return mode
        raise ValueError(f"unknown sampling mode {value!r}; expected one of iid, noreplace, bernoulli")


@dataclass(frozen=True)
class SampleVector:
    indices: tuple[int, ...]
    mode: Mode
    ensemble_size: int
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "indices", tuple(int(i) for i in self.indices))
        for i in self.indices:
            if not 0 <= i < self.ensemble_size:
                raise ValueError(f"index {i} outside [0, {self.ensemble_size})")
        if self.mode is Mode.WithoutReplacement and len(set(self.indices)) != len(self.indices):
            raise ValueError("without-replacement sample has repeated indices")
        if self.mode is Mode.Bernoulli and any(a >= b for a, b in zip(self.indices, self.indices[1:])):
            raise ValueError("Bernoulli sample must be strictly increasing")

    def __len__(self) -> int:
        return len(self.indices)

    @property
    def m(self) -> int:
        return len(self.indices)

    def distinct(self) -> frozenset[int]:
        """The set of distinct indices drawn (Omega)."""
        return frozenset(self.indices)

    def multiplicities(self) -> np.ndarray:
        return np.bincount(np.asarray(self.indices, dtype=np.int64), minlength=self.ensemble_size)


def _check_size_m(size: int, m: int) -> None:
    if size < 1:
        raise ValueError(f"ensemble size must be >= 1, got {size}")
    if m < 1:
        raise ValueError(f"sample count m must be >= 1, got {m}")


def iid_batch(g: np.random.Generator, size: int, m: int, batch: int) -> np.ndarray:
    """(batch, m) array of i.i.d. uniform indices."""
    return g.integers(0, size, size=(batch, m), dtype=np.int64)


def noreplace_batch(g: np.random.Generator, size: int, m: int, batch: int) -> np.ndarray:
    """(batch, m) array; each row an ordered uniform m-subset.

    Partial Fisher-Yates run in lockstep over the rows: step i swaps
    position i with a uniform position in [i, size).
    """
    if m > size:
        raise ValueError(f"cannot draw m={m} without replacement from {size} elements")
    perm = np.tile(np.arange(size, dtype=np.int64), (batch, 1))
    rows = np.arange(batch)
    for i in range(m):
        j = g.integers(i, size, size=batch, dtype=np.int64)
        vi = perm[rows, i].copy()
        perm[rows, i] = perm[rows, j]
        perm[rows, j] = vi
    return perm[:, :m].copy()


def sample_with_replacement(size: int, m: int, seed: int) -> SampleVector:
    _check_size_m(size, m)
    g = _rng.stream(seed, "sample", Mode.WithReplacement.value)
    idx = iid_batch(g, size, m, 1)[0]
    return SampleVector(tuple(idx.tolist()), Mode.WithReplacement, size, seed)


def sample_without_replacement(size: int, m: int, seed: int) -> SampleVector:
    _check_size_m(size, m)
    if m > size:
        raise ValueError(f"cannot draw m={m} without replacement from |C|={size}")
    g = _rng.stream(seed, "sample", Mode.WithoutReplacement.value)
    idx = noreplace_batch(g, size, m, 1)[0]
    return SampleVector(tuple(idx.tolist()), Mode.WithoutReplacement, size, seed)


def sample_bernoulli(size: int, m_expected: float, seed: int) -> SampleVector:
    """Each index kept independently with probability m_expected / size."""
    if size < 1:
        raise ValueError(f"size must be >= 1, got {size}")
    if not 0 <= m_expected <= size:
        raise ValueError(f"m_expected must lie in [0, {size}], got {m_expected}")
    g = _rng.stream(seed, "sample", Mode.Bernoulli.value)
    p = m_expected / size
    keep = g.random(size) < p
    return SampleVector(tuple(np.flatnonzero(keep).tolist()), Mode.Bernoulli, size, seed)


def sample(mode, size: int, m, seed: int) -> SampleVector:
    mode = Mode.parse(mode)
    if mode is Mode.WithReplacement:
        return sample_with_replacement(size, m, seed)
    if mode is Mode.WithoutReplacement:
        return sample_without_replacement(size, m, seed)
    return sample_bernoulli(size, m, seed)


def index_batch(mode: Mode, g: np.random.Generator, size: int, m: int, batch: int) -> np.ndarray:
    if mode is Mode.WithReplacement:
        return iid_batch(g, size, m, batch)
    if mode is Mode.WithoutReplacement:
        return noreplace_batch(g, size, m, batch)
    raise ValueError("batched draws are defined for iid and noreplace only")


def realize(v: SampleVector, e) -> list[HermitianMatrix]:
    """Look up ``e.members[i]`` for every index of ``v``."""
    if v.ensemble_size != e.size:
        raise ValueError(f"sample vector built for |C|={v.ensemble_size}, ensemble has {e.size} members")
    return [e.members[i] for i in v.indices]


def realize_sum(indices: Sequence[int] | np.ndarray, stack: np.ndarray) -> np.ndarray:
    """Sum of stack[i] over the last axis of ``indices`` (any leading batch shape)."""
    return stack[np.asarray(indices)].sum(axis=-3)
