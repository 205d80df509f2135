"""Sensitivity notions for the empirical left median.

The release test is built on a fixed-threshold breakdown statistic: the
minimal number of coordinate changes that can move the left median by
more than eta.  Changing k coordinates to extreme values shifts the left
median to at most the (ell+k)-th and at least the (ell-k)-th original
order statistic, and extreme replacements are optimal because each order
statistic is monotone in every single coordinate.  This gives the exact
endpoint characterisation

    shift(k) = max(x_(ell+k) - x_(ell), x_(ell) - x_(ell-k)),

with an out-of-range index meaning the median can be dragged arbitrarily
far (shift = inf).  shift(k) is nondecreasing in k, so the breakdown
statistic is found by binary search: O(log n) probes on a sorted sample,
O(n log n) in total including the sort.

As a function of the dataset the breakdown statistic changes by at most
1 between neighbours (Hamming distance 1); that Lipschitz property is
exactly what makes the noisy release test private, and is the single
most important invariant in this module's test suite.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .core import (
    DomainError,
    OracleSizeError,
    Sample,
    SampleTooSmallError,
)

__all__ = [
    "BreakdownResult",
    "local_sensitivity_median",
    "smooth_sensitivity_median_bounded",
    "max_shift_median",
    "breakdown_stat_median",
    "breakdown_stat_oracle",
    "ORACLE_MAX_N",
]

ORACLE_MAX_N = 12


@dataclass(frozen=True)
class BreakdownResult:
    """Breakdown statistic k_star = min{k : shift(k) > eta} plus the shifts
    actually probed on the way (keyed by k; math.inf marks an unbounded
    shift).  k_star never exceeds ell: changing ell points drags the left
    median below every original value."""

    k_star: int
    shift_at_k: dict[int, float]


def local_sensitivity_median(s: Sample) -> float:
    """Largest change of the left median under one coordinate change:
    max(x_(ell+1) - x_(ell), x_(ell) - x_(ell-1))."""
    ell = s.ell
    if s.n < 3 or ell < 2:
        raise SampleTooSmallError(
            f"local sensitivity needs x_(ell-1) and x_(ell+1); n={s.n} is too small"
        )
    x = s.sorted_values
    return float(max(x[ell] - x[ell - 1], x[ell - 1] - x[ell - 2]))


def smooth_sensitivity_median_bounded(
    s: Sample, a: float, b: float, beta: float
) -> float:
    """Exponentially smoothed sensitivity of the left median on [a, b].

    Returns max over k >= 0 of exp(-beta*k) * max_{0<=t<=k+1}
    (x_(ell+t) - x_(ell+t-k-1)), where order statistics below index 1
    clamp to a and above index n clamp to b.  Finite and at most b - a;
    this is the only regime in which the median's smooth sensitivity is
    finite at all.  O(n^2); fine for the bounded-domain baseline it backs.
    """
    if not a < b:
        raise DomainError(f"need a < b, got [{a}, {b}]")
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta}")
    x = s.sorted_values
    if x[0] < a or x[-1] > b:
        raise DomainError(
            f"sample range [{x[0]}, {x[-1]}] is not contained in [{a}, {b}]"
        )
    n, ell = s.n, s.ell
    if ell < 1:
        raise SampleTooSmallError("median undefined for n < 2")

    def stat(i: int) -> float:
        if i < 1:
            return a
        if i > n:
            return b
        return float(x[i - 1])

    best = 0.0
    for k in range(n + 1):
        width = max(stat(ell + t) - stat(ell + t - k - 1) for t in range(k + 2))
        best = max(best, math.exp(-beta * k) * width)
    return best


def max_shift_median(s: Sample, k: int) -> float:
    """Exact maximal move of the left median over all datasets within
    Hamming distance k; math.inf once an endpoint index leaves 1..n."""
    if not 0 <= k <= s.n:
        raise ValueError(f"k must lie in 0..{s.n}, got {k}")
    ell = s.ell
    if ell < 1:
        raise SampleTooSmallError("median undefined for n < 2")
    if ell + k > s.n or ell - k < 1:
        return math.inf
    x = s.sorted_values
    return float(max(x[ell + k - 1] - x[ell - 1], x[ell - 1] - x[ell - k - 1]))


def _window_shift(s: Sample, k: int) -> float:
    # Widest gap over all windows of span k+1 straddling the median index;
    # always >= max_shift_median(s, k), so it can only lower k_star.
    n, ell = s.n, s.ell
    x = s.sorted_values
    best = 0.0
    for t in range(k + 2):
        hi = ell + t
        lo = ell + t - k - 1
        if hi > n or lo < 1:
            return math.inf
        best = max(best, float(x[hi - 1] - x[lo - 1]))
    return best


def breakdown_stat_median(
    s: Sample, eta: float, conservative: bool = False
) -> BreakdownResult:
    """Fixed-threshold breakdown statistic of the left median.

    Binary search for min{k : shift(k) > eta}, valid because the shift is
    nondecreasing in k.  With conservative=True the endpoint shift is
    replaced by the wider straddling-window gap, which can only report a
    smaller k_star (more no-replies, never less privacy).
    """
    if not eta > 0:
        raise ValueError(f"eta must be positive, got {eta}")
    if s.n < 2:
        raise SampleTooSmallError("breakdown statistic needs n >= 2")
    shift = _window_shift if conservative else max_shift_median
    probed: dict[int, float] = {0: 0.0}
    # shift(ell) is always inf, so an answer exists in 1..ell.
    lo, hi = 1, s.ell
    while lo < hi:
        mid = (lo + hi) // 2
        v = shift(s, mid)
        probed[mid] = v
        if v > eta:
            hi = mid
        else:
            lo = mid + 1
    probed.setdefault(lo, shift(s, lo))
    return BreakdownResult(k_star=lo, shift_at_k=probed)


@lru_cache(maxsize=None)
def _subsets_and_signs(n: int, k: int) -> tuple[np.ndarray, np.ndarray]:
    subsets = np.array(list(itertools.combinations(range(n), k)), dtype=np.intp)
    signs = np.array(list(itertools.product((-1.0, 1.0), repeat=k)))
    return subsets, signs


def breakdown_stat_oracle(s: Sample, eta: float) -> BreakdownResult:
    """Exhaustive reference for the breakdown statistic (n <= 12).

    Enumerates every coordinate subset of size <= k with replacements in
    {-BIG, +BIG} (sufficient by monotonicity), recomputes the left median
    of each modified dataset, and returns the first k achieving a shift
    strictly above eta.  BIG = 2*(max|x| + eta + 1) is provably beyond any
    achievable finite shift.
    """
    if not eta > 0:
        raise ValueError(f"eta must be positive, got {eta}")
    n, ell = s.n, s.ell
    if n < 2:
        raise SampleTooSmallError("breakdown statistic needs n >= 2")
    if n > ORACLE_MAX_N:
        raise OracleSizeError(f"oracle enumerates up to n={ORACLE_MAX_N}, got n={n}")
    base = s.sorted_values
    base_median = float(base[ell - 1])
    big = 2.0 * (float(np.abs(base).max()) + eta + 1.0)

    shifts: dict[int, float] = {0: 0.0}
    for k in range(1, n + 1):
        subsets, signs = _subsets_and_signs(n, k)
        nsub, nsgn = len(subsets), len(signs)
        variants = np.broadcast_to(base, (nsub, nsgn, n)).copy()
        rows = np.arange(nsub)[:, None, None]
        sgn_rows = np.arange(nsgn)[None, :, None]
        cols = subsets[:, None, :]
        variants[rows, sgn_rows, cols] = big * signs[None, :, :]
        medians = np.sort(variants, axis=-1)[:, :, ell - 1]
        moved = np.abs(medians - base_median)
        moved[np.abs(medians) == big] = math.inf  # median escaped the data range
        max_shift = float(moved.max())
        shifts[k] = max_shift
        if max_shift > eta:
            return BreakdownResult(k_star=k, shift_at_k=shifts)
    # Unreachable for eta > 0: k = ell already moves the median to -BIG.
    return BreakdownResult(k_star=n, shift_at_k=shifts)
