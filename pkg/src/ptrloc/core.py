"""Domain types and parameter validation shared by every estimator.

All order-statistic indexing in this package is 1-based, matching the
usual mathematical convention; the left median of n points is the
floor(n/2)-th order statistic (so for 5 points it is the 2nd one, not
the 3rd).  Every type here is immutable after construction and safe to
share across parallel workers.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

__all__ = [
    "PtrlocError",
    "EmptyInputError",
    "NonFiniteValueError",
    "SampleTooSmallError",
    "DomainError",
    "OracleSizeError",
    "InfiniteSensitivityError",
    "CalibrationError",
    "SampleSizeError",
    "BlockCountError",
    "BlockSizeError",
    "BlockCountExceedsSampleError",
    "NotNeighborsError",
    "InsufficientTrialsError",
    "Sample",
    "make_sample",
    "PrivacyBudget",
    "Confidence",
    "Variant",
    "PtrConfig",
    "make_ptr_config",
    "ReleaseOutcome",
    "MedianProfile",
    "MomentProfile",
    "MomConfig",
    "make_mom_config",
    "compute_C",
]


# ---------------------------------------------------------------------------
# Errors


class PtrlocError(Exception):
    """Base class for all errors raised by this package."""


class EmptyInputError(PtrlocError):
    """A dataset with zero rows was supplied."""


class NonFiniteValueError(PtrlocError):
    """A NaN or infinity was found at ingestion time."""

    def __init__(self, index: int, message: str | None = None):
        self.index = index
        super().__init__(message or f"non-finite value at index {index}")


class SampleTooSmallError(PtrlocError):
    """The sample has too few points for the requested statistic."""


class DomainError(PtrlocError):
    """A value lies outside the declared bounded domain."""


class OracleSizeError(PtrlocError):
    """The brute-force oracle was asked to enumerate too large a sample."""


class InfiniteSensitivityError(PtrlocError):
    """A mechanism was given an infinite or degenerate sensitivity."""


class CalibrationError(PtrlocError):
    """Base class for violated calibration preconditions."""


class SampleSizeError(CalibrationError):
    """n is below the threshold required by the median calibration.

    Carries both lower bounds so callers can report how much data would
    be needed.
    """

    def __init__(self, n: int, bound_coverage: float, bound_concentration: float):
        self.n = n
        self.bound_coverage = bound_coverage
        self.bound_concentration = bound_concentration
        self.required_n = math.ceil(max(bound_coverage, bound_concentration))
        super().__init__(
            f"sample size n={n} is below the calibration threshold: "
            f"need n >= {self.required_n} "
            f"(bounds {bound_coverage:.1f} and {bound_concentration:.1f})"
        )


class BlockCountError(CalibrationError):
    """K is below the threshold required by the block-means calibration."""

    def __init__(self, k: int, required: float):
        self.k = k
        self.required = required
        super().__init__(
            f"block count K={k} is below the calibration threshold: "
            f"need K >= {required:.1f}"
        )


class BlockSizeError(CalibrationError):
    """n/K is not an integer where the density calibration requires it."""

    def __init__(self, n: int, k: int):
        self.n = n
        self.k = k
        super().__init__(
            f"n/K must be an integer for the density calibration "
            f"(n={n}, K={k}); drop the last {n % k} points or change K"
        )


class BlockCountExceedsSampleError(PtrlocError):
    """More blocks were requested than there are data points."""


class NotNeighborsError(PtrlocError):
    """An audit was given datasets not at Hamming distance exactly 1."""


class InsufficientTrialsError(PtrlocError):
    """An audit was configured with too few trials for its bin count."""


# ---------------------------------------------------------------------------
# Sample


@dataclass(frozen=True)
class Sample:
    """A validated real-valued dataset together with its order statistics.

    ``values`` preserves input order (block-based estimators rely on it);
    ``sorted_values`` is the nondecreasing rearrangement.  ``ell`` is the
    1-based index floor(n/2) of the left median; it is 0 for n == 1, in
    which case median-based operations refuse the sample.
    """

    values: np.ndarray
    sorted_values: np.ndarray

    def __post_init__(self):
        self.values.setflags(write=False)
        self.sorted_values.setflags(write=False)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def ell(self) -> int:
        return self.n // 2

    def order_stat(self, i: int) -> float:
        """Return the i-th order statistic, 1-based; raises off the ends."""
        if not 1 <= i <= self.n:
            raise IndexError(f"order statistic index {i} outside 1..{self.n}")
        return float(self.sorted_values[i - 1])


def make_sample(raw: Sequence[float] | np.ndarray) -> Sample:
    """Validate and sort a dataset.

    Raises EmptyInputError on zero rows and NonFiniteValueError (with the
    0-based offending index) if any entry is NaN or infinite.
    """
    values = np.asarray(raw, dtype=float)
    if values.ndim != 1:
        values = values.reshape(-1)
    if values.size == 0:
        raise EmptyInputError("cannot build a sample from zero values")
    finite = np.isfinite(values)
    if not finite.all():
        raise NonFiniteValueError(int(np.flatnonzero(~finite)[0]))
    return Sample(values=values.copy(), sorted_values=np.sort(values))


# ---------------------------------------------------------------------------
# Privacy parameters


@dataclass(frozen=True)
class PrivacyBudget:
    """An (epsilon, delta) differential-privacy budget."""

    epsilon: float
    delta: float

    def __post_init__(self):
        if not (self.epsilon > 0 and math.isfinite(self.epsilon)):
            raise ValueError(f"epsilon must be positive and finite, got {self.epsilon}")
        if not 0 < self.delta < 1:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")


@dataclass(frozen=True)
class Confidence:
    """A failure level tau in (0, 1); guarantees hold with probability 1 - 2 tau."""

    tau: float

    def __post_init__(self):
        if not 0 < self.tau < 1:
            raise ValueError(f"tau must lie in (0, 1), got {self.tau}")


def compute_C(budget: PrivacyBudget, conf: Confidence) -> float:
    """Threshold constant gating every release calibration.

    C = 1 + (2 log(1.25/delta) + 2 sqrt(log(2/tau) log(1.25/delta))) / epsilon.
    Strictly decreasing in epsilon, strictly increasing in log(1/delta)
    and log(1/tau), and always > 1.
    """
    ld = math.log(1.25 / budget.delta)
    lt = math.log(2.0 / conf.tau)
    return 1.0 + (2.0 * ld + 2.0 * math.sqrt(lt * ld)) / budget.epsilon


class Variant(enum.Enum):
    """Noise family used by the release test and payload."""

    LAPLACE = "laplace"
    GAUSSIAN = "gaussian"


@dataclass(frozen=True)
class PtrConfig:
    """Calibrated constants for one propose-test-release invocation.

    a_delta scales the test noise, b_delta sets the no-reply threshold
    1 + b_delta/epsilon, and C is the threshold constant used by the eta
    calibrations.  For the Gaussian variant a_delta**2 == b_delta exactly.
    """

    eta: float
    variant: Variant
    a_delta: float
    b_delta: float
    C: float
    budget: PrivacyBudget

    def __post_init__(self):
        if not (self.eta > 0 and math.isfinite(self.eta)):
            raise ValueError(f"eta must be positive and finite, got {self.eta}")
        if self.C <= 1:
            raise ValueError(f"C must exceed 1, got {self.C}")


def make_ptr_config(
    eta: float,
    variant: Variant,
    budget: PrivacyBudget,
    conf: Confidence,
) -> PtrConfig:
    """Derive (a_delta, b_delta, C) for the given variant and budget."""
    delta = budget.delta
    if variant is Variant.LAPLACE:
        a_delta = 1.0
        b_delta = math.log(2.0 / delta)
    else:
        a_delta = math.sqrt(2.0 * math.log(1.25 / delta))
        b_delta = 2.0 * math.log(1.25 / delta)
    return PtrConfig(
        eta=eta,
        variant=variant,
        a_delta=a_delta,
        b_delta=b_delta,
        C=compute_C(budget, conf),
        budget=budget,
    )


# ---------------------------------------------------------------------------
# Release outcome


@dataclass(frozen=True)
class ReleaseOutcome:
    """Either a released real value or the distinguished no-reply symbol.

    Exactly one alternative is inhabited; a no-reply carries no numeric
    payload at all.
    """

    _value: float | None = None

    @classmethod
    def reply(cls, value: float) -> "ReleaseOutcome":
        if value is None or not math.isfinite(value):
            raise ValueError(f"reply payload must be a finite real, got {value}")
        return cls(_value=float(value))

    @classmethod
    def no_reply(cls) -> "ReleaseOutcome":
        return cls(_value=None)

    @property
    def is_no_reply(self) -> bool:
        return self._value is None

    @property
    def value(self) -> float:
        if self._value is None:
            raise ValueError("no-reply outcome has no value")
        return self._value

    def __repr__(self):
        return "ReleaseOutcome(no_reply)" if self.is_no_reply else f"ReleaseOutcome({self._value})"


# ---------------------------------------------------------------------------
# Calibration profiles


@dataclass(frozen=True)
class MedianProfile:
    """Density floor around the population median: f >= L on [m-r, m+r]."""

    r: float
    L: float

    def __post_init__(self):
        if not self.r > 0:
            raise ValueError(f"r must be positive, got {self.r}")
        if not self.L > 0:
            raise ValueError(f"L must be positive, got {self.L}")
        if self.r * self.L > 0.5 + 1e-12:
            raise ValueError(
                f"r*L = {self.r * self.L:.4f} exceeds 1/2; no distribution can "
                "put that much mass below its median"
            )


@dataclass(frozen=True)
class MomentProfile:
    """First three moments: mean, standard deviation, and cube root of the
    third absolute central moment."""

    mu: float
    sigma: float
    rho: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if self.rho < self.sigma * (1 - 1e-12):
            raise ValueError(
                f"rho = {self.rho} < sigma = {self.sigma} is impossible "
                "(third absolute moment dominates the second)"
            )


@dataclass(frozen=True)
class MomConfig:
    """Block layout for the median-of-means estimator: K blocks of >= N points."""

    K: int
    N: int = field(default=0)

    def __post_init__(self):
        if self.K < 1:
            raise ValueError(f"block count K must be >= 1, got {self.K}")
        if self.N < 1:
            raise ValueError(f"block size N must be >= 1, got {self.N}")


def make_mom_config(n: int, k_blocks: int) -> MomConfig:
    """Validate K against the sample size and derive N = floor(n/K)."""
    if k_blocks < 1:
        raise ValueError(f"block count K must be >= 1, got {k_blocks}")
    if k_blocks > n:
        raise BlockCountExceedsSampleError(
            f"cannot split n={n} points into K={k_blocks} non-empty blocks"
        )
    return MomConfig(K=k_blocks, N=n // k_blocks)
