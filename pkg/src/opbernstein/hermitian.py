"""Dense Hermitian matrices and the spectral helpers built on them.

Everything spectral goes through ``numpy.linalg.eigh``; the matrix
exponential and the trace-exponential are both derived from it.
"""
from __future__ import annotations

import math
from typing import Iterable, Sequence, TextIO

import numpy as np

HERMITIAN_TOL = 1e-12


class SpectralError(ArithmeticError):
    """Raised when an eigendecomposition fails or an exponential overflows."""


class HermitianMatrix:
    """Immutable dense n x n complex Hermitian matrix.

    Inputs whose Hermitian defect exceeds ``tol`` are rejected; inputs
    within tolerance are symmetrized to ``(M + M^H) / 2``.
    """

    __slots__ = ("_entries",)

    def __init__(self, entries, tol: float = HERMITIAN_TOL):
        a = np.array(entries, dtype=complex)
        if a.ndim == 0:
            a = a.reshape(1, 1)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise ValueError(f"expected a square nonempty matrix, got shape {a.shape}")
        defect = float(np.max(np.abs(a - a.conj().T)))
        if defect > tol:
            raise ValueError(f"matrix is not Hermitian: max |M - M^H| = {defect:.3e} > {tol:.0e}")
        a = (a + a.conj().T) / 2
        a.setflags(write=False)
        self._entries = a

    @classmethod
    def _trusted(cls, a: np.ndarray) -> "HermitianMatrix":
        # skip validation for results of Hermitian-preserving arithmetic
        obj = cls.__new__(cls)
        a = np.array(a, dtype=complex)
        a.setflags(write=False)
        obj._entries = a
        return obj

    @property
    def entries(self) -> np.ndarray:
        return self._entries

    @property
    def dim(self) -> int:
        return self._entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self._entries
        return self._entries.astype(dtype)

    def __add__(self, other: "HermitianMatrix") -> "HermitianMatrix":
        _check_dims(self, other)
        return HermitianMatrix._trusted(self._entries + other._entries)

    def __sub__(self, other: "HermitianMatrix") -> "HermitianMatrix":
        _check_dims(self, other)
        return HermitianMatrix._trusted(self._entries - other._entries)

    def __neg__(self) -> "HermitianMatrix":
        return HermitianMatrix._trusted(-self._entries)

    def __mul__(self, scalar: float) -> "HermitianMatrix":
        if isinstance(scalar, complex) and scalar.imag != 0:
            raise TypeError("only real scalars preserve Hermiticity")
        return HermitianMatrix._trusted(self._entries * float(np.real(scalar)))

    __rmul__ = __mul__

    def __truediv__(self, scalar: float) -> "HermitianMatrix":
        return self * (1.0 / scalar)

    def __eq__(self, other) -> bool:
        if not isinstance(other, HermitianMatrix):
            return NotImplemented
        return self._entries.shape == other._entries.shape and bool(
            np.array_equal(self._entries, other._entries)
        )

    def __hash__(self):
        return hash((self._entries.shape, self._entries.tobytes()))

    def __repr__(self) -> str:
        return f"HermitianMatrix(dim={self.dim}, entries={self._entries.tolist()!r})"

    def eigvalsh(self) -> np.ndarray:
        return eigenvalues(self)

    def allclose(self, other: "HermitianMatrix", atol: float = 1e-12) -> bool:
        return self.dim == other.dim and bool(
            np.allclose(self._entries, other._entries, rtol=0, atol=atol)
        )


def _check_dims(a: HermitianMatrix, b: HermitianMatrix) -> None:
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")


def zeros(n: int) -> HermitianMatrix:
    return HermitianMatrix._trusted(np.zeros((n, n), dtype=complex))


def identity(n: int) -> HermitianMatrix:
    return HermitianMatrix._trusted(np.eye(n, dtype=complex))


def diag(*values: float) -> HermitianMatrix:
    return HermitianMatrix(np.diag(np.asarray(values, dtype=float)))


def eigenvalues(M: HermitianMatrix) -> np.ndarray:
    try:
        return np.linalg.eigvalsh(M.entries)
    except np.linalg.LinAlgError as exc:
        raise SpectralError(
            f"eigensolver did not converge for dim={M.dim} matrix: {exc}"
        ) from exc


def eigh(M: HermitianMatrix) -> tuple[np.ndarray, np.ndarray]:
    try:
        return np.linalg.eigh(M.entries)
    except np.linalg.LinAlgError as exc:
        raise SpectralError(
            f"eigensolver did not converge for dim={M.dim} matrix: {exc}"
        ) from exc


def operator_norm(M: HermitianMatrix) -> float:
    """Largest absolute eigenvalue."""
    w = eigenvalues(M)
    return float(np.max(np.abs(w)))


# exp(709.78) is the largest finite double
_EXP_LIMIT = math.log(np.finfo(float).max)


def _checked_exponent(w: np.ndarray, scale: float) -> np.ndarray:
    if not math.isfinite(scale):
        raise ValueError(f"scale must be finite, got {scale}")
    x = scale * w
    if x.size and float(np.max(x)) > _EXP_LIMIT:
        lam = float(w.flat[int(np.argmax(x))])
        raise SpectralError(
            f"exp overflow: scale * eigenvalue = {scale!r} * {lam!r} exceeds {_EXP_LIMIT:.2f}; rescale"
        )
    return x


def trace_exp(M: HermitianMatrix, scale: float = 1.0) -> float:
    """tr exp(scale * M) as the sum of exp(scale * eigenvalue)."""
    x = _checked_exponent(eigenvalues(M), scale)
    return math.fsum(np.exp(x).tolist())


def expm(M: HermitianMatrix, scale: float = 1.0) -> np.ndarray:
    """exp(scale * M) as a dense array, via V diag(exp(scale w)) V^H."""
    w, v = eigh(M)
    x = _checked_exponent(w, scale)
    return (v * np.exp(x)) @ v.conj().T


def matrix_sum(terms: Sequence[HermitianMatrix]) -> HermitianMatrix:
    terms = list(terms)
    if not terms:
        raise ValueError("matrix_sum needs at least one term")
    n = terms[0].dim
    acc = np.zeros((n, n), dtype=complex)
    for t in terms:
        if t.dim != n:
            raise ValueError(f"dimension mismatch: {n} vs {t.dim}")
        acc += t.entries
    return HermitianMatrix._trusted(acc)


def random_hermitian(n: int, rng: np.random.Generator, complex_entries: bool = True) -> HermitianMatrix:
    """Gaussian matrix Hermitized as (G + G^H) / 2."""
    g = rng.standard_normal((n, n))
    if complex_entries:
        g = g + 1j * rng.standard_normal((n, n))
    return HermitianMatrix._trusted((g + g.conj().T) / 2)


# --- text serialization ---------------------------------------------------

def format_complex(z: complex) -> str:
    return f"{z.real:.17g}{z.imag:+.17g}j"


def dump_matrix(M: HermitianMatrix, fh: TextIO) -> None:
    fh.write(f"{M.dim}\n")
    for row in M.entries:
        fh.write(" ".join(format_complex(complex(z)) for z in row) + "\n")


def dumps_matrix(M: HermitianMatrix) -> str:
    import io

    buf = io.StringIO()
    dump_matrix(M, buf)
    return buf.getvalue()


def _parse_row(line: str, n: int, lineno: int) -> list[complex]:
    tokens = line.split()
    if len(tokens) != n:
        raise ValueError(f"line {lineno}: expected {n} entries, got {len(tokens)}")
    try:
        return [complex(tok) for tok in tokens]
    except ValueError as exc:
        raise ValueError(f"line {lineno}: cannot parse complex entry ({exc})") from None


def read_matrix(lines: Iterable[tuple[int, str]]) -> HermitianMatrix:
    """Read one matrix from an iterator of (lineno, non-blank line) pairs."""
    it = iter(lines)
    try:
        lineno, header = next(it)
    except StopIteration:
        raise ValueError("unexpected end of input: missing matrix header") from None
    try:
        n = int(header.strip())
    except ValueError:
        raise ValueError(f"line {lineno}: bad matrix dimension {header.strip()!r}") from None
    if n < 1:
        raise ValueError(f"line {lineno}: matrix dimension must be positive, got {n}")
    rows = []
    for _ in range(n):
        try:
            lineno, line = next(it)
        except StopIteration:
            raise ValueError(f"unexpected end of input: matrix needs {n} rows") from None
        rows.append(_parse_row(line, n, lineno))
    return HermitianMatrix(rows)


def content_lines(text: str):
    for i, line in enumerate(text.splitlines(), start=1):
        if line.strip():
            yield i, line


def loads_matrix(text: str) -> HermitianMatrix:
    it = content_lines(text)
    M = read_matrix(it)
    for lineno, _ in it:
        raise ValueError(f"line {lineno}: trailing content after matrix")
    return M
