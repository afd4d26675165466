"""Finite ensembles C of Hermitian matrices and their bound constants."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import rng as _rng
from .hermitian import (
    HermitianMatrix,
    content_lines,
    dump_matrix,
    operator_norm,
    random_hermitian,
    read_matrix,
)

CONSTANT_TOL = 1e-10


@dataclass(frozen=True)
class MatrixEnsemble:
    """A finite set of Hermitian matrices sampled uniformly.

    ``norm_bound_c`` bounds every member's operator norm and
    ``variance_bound_sigma0sq`` bounds ``||mean(X^2)||``.
    """

    members: tuple[HermitianMatrix, ...]
    norm_bound_c: float
    variance_bound_sigma0sq: float
    centered: bool

    @property
    def size(self) -> int:
        return len(self.members)

    @property
    def dim(self) -> int:
        return self.members[0].dim

    def stack(self) -> np.ndarray:
        """Members as a read-only (|C|, n, n) array."""
        a = np.stack([m.entries for m in self.members])
        a.setflags(write=False)
        return a

    def mean(self) -> np.ndarray:
        return self.stack().mean(axis=0)

    def with_constants(self, c: Optional[float] = None, sigma0sq: Optional[float] = None) -> "MatrixEnsemble":
        """Replace the tight constants by looser user-supplied ones.

        The override must dominate the computed pair; the theorem only
        needs upper bounds.
        """
        new_c = self.norm_bound_c if c is None else float(c)
        new_s = self.variance_bound_sigma0sq if sigma0sq is None else float(sigma0sq)
        if new_c < self.norm_bound_c - CONSTANT_TOL:
            raise ValueError(f"override c={new_c} is below the computed bound {self.norm_bound_c}")
        if new_s < self.variance_bound_sigma0sq - CONSTANT_TOL:
            raise ValueError(
                f"override sigma0^2={new_s} is below the computed bound {self.variance_bound_sigma0sq}"
            )
        return MatrixEnsemble(self.members, new_c, new_s, self.centered)


def analyze_ensemble(members: Sequence[HermitianMatrix]) -> MatrixEnsemble:
    members = tuple(members)
    if not members:
        raise ValueError("an ensemble needs at least one member")
    n = members[0].dim
    for i, m in enumerate(members):
        if m.dim != n:
            raise ValueError(f"dimension mismatch: member 0 has dim {n}, member {i} has dim {m.dim}")
    stack = np.stack([m.entries for m in members])
    c = max(operator_norm(m) for m in members)
    second = (stack @ stack).mean(axis=0)
    sigma0sq = operator_norm(HermitianMatrix._trusted((second + second.conj().T) / 2))
    mean = stack.mean(axis=0)
    mean_norm = operator_norm(HermitianMatrix._trusted((mean + mean.conj().T) / 2))
    return MatrixEnsemble(members, c, sigma0sq, mean_norm <= CONSTANT_TOL)


def center_ensemble(e: MatrixEnsemble) -> MatrixEnsemble:
    stack = e.stack()
    mean = stack.mean(axis=0)
    return analyze_ensemble([HermitianMatrix._trusted(x - mean) for x in stack])


def random_ensemble(dim: int, count: int, seed: int, complex_entries: bool = True) -> MatrixEnsemble:
    """Centered ensemble of ``count`` Hermitized Gaussian matrices."""
    if dim < 1 or count < 1:
        raise ValueError(f"need dim >= 1 and count >= 1, got dim={dim}, count={count}")
    g = _rng.stream(seed, "random_ensemble", dim, count)
    raw = [random_hermitian(dim, g, complex_entries) for _ in range(count)]
    return center_ensemble(analyze_ensemble(raw))


# --- file format: "count n" header, then count matrices ---------------------

def dump_ensemble(e: MatrixEnsemble, fh) -> None:
    fh.write(f"{e.size} {e.dim}\n")
    for m in e.members:
        dump_matrix(m, fh)


def save_ensemble(e: MatrixEnsemble, path) -> None:
    with open(path, "w") as fh:
        dump_ensemble(e, fh)


def loads_ensemble(text: str) -> MatrixEnsemble:
    it = content_lines(text)
    try:
        lineno, header = next(it)
    except StopIteration:
        raise ValueError("empty ensemble file") from None
    parts = header.split()
    if len(parts) != 2:
        raise ValueError(f"line {lineno}: expected header 'count n', got {header.strip()!r}")
    try:
        count, n = int(parts[0]), int(parts[1])
    except ValueError:
        raise ValueError(f"line {lineno}: expected integers in header, got {header.strip()!r}") from None
    if count < 1 or n < 1:
        raise ValueError(f"line {lineno}: count and n must be positive")
    members = []
    for k in range(count):
        m = read_matrix(it)
        if m.dim != n:
            raise ValueError(f"matrix {k}: dimension {m.dim} does not match header n={n}")
        members.append(m)
    for lineno, _ in it:
        raise ValueError(f"line {lineno}: trailing content after {count} matrices")
    return analyze_ensemble(members)


def load_ensemble(path) -> MatrixEnsemble:
    text = Path(path).read_text()
    try:
        return loads_ensemble(text)
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from None
