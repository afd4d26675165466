"""Hoeffding's coupling: with-replacement samples built from a
without-replacement draw.

Given a draw ``y`` with pairwise distinct components, ``Z(y)`` is filled
in one component at a time.  With ``D`` the set of values already
produced, step k

* repeats a uniform element of ``D`` with probability ``|D| / |C|``,
* otherwise takes a uniform element of ``{y_1..y_m} \\ D``.

Averaged over a uniform without-replacement ``Y``, every step hits each
element of C with probability exactly ``1/|C|``, so ``Z(Y)`` is i.i.d.
uniform.  For a *fixed* ``y`` the fresh branch is only spread over the
``m - |D|`` unused y-values; the ``1/|C|`` identity needs the average
over ``Y`` (see :func:`conditional_step_probability`).

The exact routines enumerate every branch with ``fractions.Fraction``
weights; floats only enter when matrices are realized.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import permutations, product
from typing import Iterator, Sequence

import numpy as np

from . import rng as _rng
from ._parallel import map_blocks
from .hermitian import HermitianMatrix, trace_exp
from .samplers import Mode, SampleVector, noreplace_batch

# Largest instances the exact oracles accept.  Leaves per y are at most
# m^m and there are |C|!/(|C|-m)! draws, so (6, 4) is 360 * 256 leaves;
# with matrices each leaf costs an eigendecomposition, hence (5, 3).
DIST_GUARD = (6, 4)
MATRIX_GUARD = (5, 3)


class Rule(enum.Enum):
    FromDrawn = 1
    FromFresh = 2


@dataclass(frozen=True)
class CouplingStep:
    already_drawn: frozenset
    rule_taken: Rule
    value: int


@dataclass(frozen=True)
class CouplingTrace:
    input_y: SampleVector
    steps: tuple[CouplingStep, ...]
    output_z: tuple[int, ...]

    def prefix(self, k: int) -> tuple[int, ...]:
        """The first ``k`` produced values."""
        return self.output_z[:k]


@dataclass(frozen=True)
class ExactDistribution:
    support: dict = field(default_factory=dict)

    def total(self) -> Fraction:
        return sum(self.support.values(), Fraction(0))

    def probability(self, outcome) -> Fraction:
        return self.support.get(tuple(outcome), Fraction(0))

    def is_uniform_over(self, c_size: int, m: int) -> bool:
        target = Fraction(1, c_size**m)
        return len(self.support) == c_size**m and all(p == target for p in self.support.values())


class GuardError(ValueError):
    pass


def _check_guard(c_size: int, m: int, guard: tuple[int, int]) -> None:
    if not (1 <= m <= c_size):
        raise ValueError(f"need 1 <= m <= |C|, got |C|={c_size}, m={m}")
    if c_size > guard[0] or m > guard[1]:
        raise GuardError(
            f"instance |C|={c_size}, m={m} too large for exact enumeration (limit |C| <= {guard[0]}, m <= {guard[1]})"
        )


def _y_values(y) -> tuple[int, ...]:
    if isinstance(y, SampleVector):
        return y.indices
    return tuple(int(v) for v in y)


def _check_domain(y: tuple[int, ...], c_size: int) -> None:
    if len(set(y)) != len(y):
        raise ValueError(f"y={y} has repeated components; Z is only defined on distinct-component vectors")
    if len(y) > c_size:
        raise ValueError(f"m={len(y)} exceeds |C|={c_size}")
    for v in y:
        if not 0 <= v < c_size:
            raise ValueError(f"component {v} of y outside [0, {c_size})")


# --- sampling ---------------------------------------------------------------

def coupling_batch(g: np.random.Generator, ys: np.ndarray, c_size: int) -> tuple[np.ndarray, np.ndarray]:
    """Run the Z recipe on every row of ``ys`` (shape (batch, m)).

    Returns ``(z, from_drawn)``.  Each row keeps a working copy of y whose
    first ``d`` slots hold the values drawn so far; a fresh pick is
    swapped into slot ``d``.
    """
    ys = np.asarray(ys, dtype=np.int64)
    batch, m = ys.shape
    pool = ys.copy()
    rows = np.arange(batch)
    d = np.zeros(batch, dtype=np.int64)
    z = np.empty((batch, m), dtype=np.int64)
    from_drawn = np.empty((batch, m), dtype=bool)
    for k in range(m):
        u = g.random(batch)
        rule1 = u * c_size < d
        # uniform slot in [0, d) for rule 1, in [d, m) for rule 2
        lo = np.where(rule1, 0, d)
        hi = np.where(rule1, d, m)
        slot = g.integers(lo, hi)
        picked = pool[rows, slot]
        fresh = ~rule1
        # move fresh picks to slot d
        swap_with = pool[rows, d]
        pool[rows[fresh], slot[fresh]] = swap_with[fresh]
        pool[rows[fresh], d[fresh]] = picked[fresh]
        d = d + fresh
        z[:, k] = picked
        from_drawn[:, k] = rule1
    return z, from_drawn


def run_coupling(y, c_size: int, seed: int) -> CouplingTrace:
    yv = _y_values(y)
    _check_domain(yv, c_size)
    if not isinstance(y, SampleVector):
        y = SampleVector(yv, Mode.WithoutReplacement, c_size, seed)
    g = _rng.stream(seed, "coupling")
    z, from_drawn = coupling_batch(g, np.asarray([yv]), c_size)
    steps = []
    drawn: set[int] = set()
    for k in range(len(yv)):
        v = int(z[0, k])
        rule = Rule.FromDrawn if from_drawn[0, k] else Rule.FromFresh
        steps.append(CouplingStep(frozenset(drawn), rule, v))
        drawn.add(v)
    return CouplingTrace(y, tuple(steps), tuple(int(v) for v in z[0]))


def _mc_block(c_size: int, m: int, seed: int, block: int, count: int) -> np.ndarray:
    g = _rng.stream(seed, "coupling-mc", block)
    ys = noreplace_batch(g, c_size, m, count)
    z, _ = coupling_batch(g, ys, c_size)
    codes = z @ (c_size ** np.arange(m - 1, -1, -1, dtype=np.int64))
    return np.bincount(codes, minlength=c_size**m)


def coupling_monte_carlo(c_size: int, m: int, trials: int, seed: int, workers: int = 1) -> np.ndarray:
    """Outcome counts of Z(Y) over ``trials`` runs.

    Outcome ``(x_1..x_m)`` is stored at its base-|C| code (x_1 most
    significant), i.e. in lexicographic order.
    """
    if not 1 <= m <= c_size:
        raise ValueError(f"need 1 <= m <= |C|, got |C|={c_size}, m={m}")
    tasks = [(c_size, m, seed, b, k) for b, k in _rng.blocks(trials)]
    counts = np.zeros(c_size**m, dtype=np.int64)
    for part in map_blocks(_mc_block, tasks, workers):
        counts += part
    return counts


def decode_outcome(code: int, c_size: int, m: int) -> tuple[int, ...]:
    out = []
    for _ in range(m):
        code, r = divmod(code, c_size)
        out.append(r)
    return tuple(reversed(out))


# --- exact enumeration ------------------------------------------------------

def step_law(y: Sequence[int], drawn: Sequence[int], c_size: int) -> list[tuple[int, Fraction, Rule]]:
    """Exact law of the next component given y and the values drawn so far."""
    d = len(drawn)
    m = len(y)
    out = []
    if d:
        p = Fraction(d, c_size) / d
        out.extend((v, p, Rule.FromDrawn) for v in drawn)
    fresh = [v for v in y if v not in drawn]
    if fresh:
        p = (1 - Fraction(d, c_size)) / len(fresh)
        out.extend((v, p, Rule.FromFresh) for v in fresh)
    elif d < m:
        raise AssertionError("fresh pool exhausted before step m")
    return out


def _walk(y: tuple[int, ...], c_size: int) -> Iterator[tuple[tuple[int, ...], Fraction]]:
    """Every (partial or full) Z-prefix reachable from y with its probability."""
    m = len(y)
    stack = [((), (), Fraction(1))]
    while stack:
        prefix, drawn, p = stack.pop()
        yield prefix, p
        if len(prefix) == m:
            continue
        for v, q, rule in step_law(y, drawn, c_size):
            nd = drawn if rule is Rule.FromDrawn else drawn + (v,)
            stack.append((prefix + (v,), nd, p * q))


def coupling_law_given_y(y, c_size: int) -> ExactDistribution:
    yv = _y_values(y)
    _check_domain(yv, c_size)
    _check_guard(c_size, len(yv), DIST_GUARD)
    law: dict = {}
    for prefix, p in _walk(yv, c_size):
        if len(prefix) == len(yv):
            law[prefix] = law.get(prefix, Fraction(0)) + p
    return ExactDistribution(law)


def _draws(c_size: int, m: int) -> tuple[Fraction, Iterator[tuple[int, ...]]]:
    weight = Fraction(1, math.perm(c_size, m))
    return weight, permutations(range(c_size), m)


def exact_coupling_distribution(c_size: int, m: int) -> ExactDistribution:
    """Exact law of Z(Y) with Y uniform without replacement."""
    _check_guard(c_size, m, DIST_GUARD)
    law = {x: Fraction(0) for x in product(range(c_size), repeat=m)}
    weight, draws = _draws(c_size, m)
    for y in draws:
        for prefix, p in _walk(y, c_size):
            if len(prefix) == m:
                law[prefix] += weight * p
    return ExactDistribution(law)


@lru_cache(maxsize=None)
def _prefix_law(c_size: int, m: int) -> dict:
    law: dict = {}
    weight, draws = _draws(c_size, m)
    for y in draws:
        for prefix, p in _walk(y, c_size):
            law[prefix] = law.get(prefix, Fraction(0)) + weight * p
    return law


def conditional_step_probability(prefix, candidate: int, c_size: int, m: int) -> Fraction:
    """Pr[Z_k = candidate | Z_1..Z_{k-1} = prefix], Y averaged out.

    ``prefix`` is a value sequence of length k-1 < m or a
    :class:`CouplingTrace` (its first ``k-1`` outputs are used, with
    ``k-1`` given by ``len(trace.output_z) - 1``).  Computed as a ratio
    of exact joint prefix probabilities.
    """
    if isinstance(prefix, CouplingTrace):
        prefix = prefix.output_z[:-1]
    prefix = tuple(int(v) for v in prefix)
    _check_guard(c_size, m, DIST_GUARD)
    if not 0 <= candidate < c_size:
        raise ValueError(f"candidate {candidate} is not an element of C = [0, {c_size})")
    if len(prefix) >= m:
        raise ValueError(f"prefix of length {len(prefix)} leaves no step to take (m={m})")
    law = _prefix_law(c_size, m)
    denom = law.get(prefix, Fraction(0))
    if denom == 0:
        raise ValueError(f"prefix {prefix} is not reachable")
    return law.get(prefix + (int(candidate),), Fraction(0)) / denom


def conditional_step_probability_given_y(y, prefix: Sequence[int], candidate: int, c_size: int) -> Fraction:
    """Same conditional probability with y held fixed.

    Equals 1/|C| on the repeat branch; on the fresh branch it is
    ``(1 - |D|/|C|) / (m - |D|)``, which is 1/|C| only when m = |C|.
    """
    yv = _y_values(y)
    _check_domain(yv, c_size)
    if candidate not in yv:
        raise ValueError(f"candidate {candidate} is not one of y = {yv}")
    drawn: list[int] = []
    for v in prefix:
        if v not in yv:
            raise ValueError(f"prefix value {v} is not one of y = {yv}")
        if v not in drawn:
            drawn.append(v)
    return sum((p for v, p, _ in step_law(yv, drawn, c_size) if v == candidate), Fraction(0))


def expected_counts(y, c_size: int) -> dict[int, Fraction]:
    """E_Z[#{i : Z_i(y) = v}] for every component v of y."""
    law = coupling_law_given_y(y, c_size)
    counts = {v: Fraction(0) for v in _y_values(y)}
    for z, p in law.support.items():
        for v in z:
            counts[v] += p
    return counts


def coupling_sum_expectation(y, e) -> HermitianMatrix:
    """E_Z[sum_i Z_i(y)] realized in the ensemble ``e``."""
    yv = _y_values(y)
    _check_domain(yv, e.size)
    _check_guard(e.size, len(yv), MATRIX_GUARD)
    acc = np.zeros((e.dim, e.dim), dtype=complex)
    for v, w in sorted(expected_counts(yv, e.size).items()):
        acc += float(w) * e.members[v].entries
    return HermitianMatrix._trusted(acc)


def jensen_domination_check(e, m: int, scale: float) -> tuple[float, float]:
    """(E_X[tr exp(scale S_X)], E_Y[tr exp(scale S_Y)]) by exact enumeration.

    The left side is computed through the coupling, as
    E_Y E_Z[tr exp(scale * sum Z(Y))]; convexity then gives rhs <= lhs.
    """
    _check_guard(e.size, m, MATRIX_GUARD)
    stack = e.stack()
    cache: dict = {}

    def f(values) -> float:
        key = tuple(sorted(values))
        if key not in cache:
            cache[key] = trace_exp(HermitianMatrix._trusted(stack[list(key)].sum(axis=0)), scale)
        return cache[key]

    weight, draws = _draws(e.size, m)
    lhs_terms = []
    rhs_terms = []
    for y in draws:
        rhs_terms.append(float(weight) * f(y))
        for prefix, p in _walk(y, e.size):
            if len(prefix) == m:
                lhs_terms.append(float(weight * p) * f(prefix))
    return math.fsum(lhs_terms), math.fsum(rhs_terms)
