"""Noise sources and release mechanisms.

Noise is generated by inverse-CDF transforms only: every standard draw
consumes exactly one uniform, so a release always advances its noise
stream by the same amount whether or not it replies.  That constant
consumption is what keeps paired simulations (audits, coverage sweeps)
aligned across seeds.  Reproducibility is favoured over cryptographic
hardening; floating-point side channels are out of scope and documented
as such.

The propose-test-release mechanism is generic over an estimator and a
breakdown statistic so the block-means estimator can reuse it unchanged.
The breakdown callable must change by at most 1 between neighbouring
datasets; that contract is declared here and tested for the shipped
median breakdown.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.special import ndtri

from .core import (
    InfiniteSensitivityError,
    PrivacyBudget,
    PtrConfig,
    ReleaseOutcome,
    Sample,
    Variant,
)

__all__ = [
    "NoiseSource",
    "InjectedNoiseSource",
    "sample_laplace",
    "sample_gaussian",
    "laplace_global_mech",
    "gaussian_global_mech",
    "laplace_smooth_beta",
    "gaussian_smooth_beta",
    "laplace_smooth_mech",
    "gaussian_smooth_mech",
    "PtrMechanism",
    "ptr_release",
    "no_reply_threshold",
]

_TINY = np.nextafter(0.0, 1.0)


class NoiseSource:
    """Reproducible noise stream keyed by (seed, stream_id).

    Identical keys replay identical sequences; distinct stream_ids (or
    children derived with ``derive``) are statistically independent.
    """

    def __init__(self, seed: int, stream_id: int = 0, _path: tuple[int, ...] = ()):
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        self._path = tuple(_path)
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream_id, *self._path))
        self._gen = np.random.Generator(np.random.PCG64(ss))

    def derive(self, index: int) -> "NoiseSource":
        """Independent child stream, e.g. one per Monte Carlo trial."""
        return NoiseSource(self.seed, self.stream_id, (*self._path, int(index)))

    @property
    def generator(self) -> np.random.Generator:
        """Underlying generator, for bulk data generation."""
        return self._gen

    def uniform_open(self, size=None):
        """Uniform on the open interval (0, 1)."""
        u = self._gen.random(size)
        if size is None:
            return float(u) if u > 0.0 else _TINY
        np.maximum(u, _TINY, out=u)
        return u

    def standard_laplace(self, size=None):
        """Standard Laplace draw(s) by inverse CDF: -sign(u) log(1-2|u|)
        for u uniform on (-1/2, 1/2)."""
        u = self.uniform_open(size) - 0.5
        return -np.sign(u) * np.log1p(-2.0 * np.abs(u))

    def standard_normal(self, size=None):
        """Standard normal draw(s) by inverse CDF."""
        return ndtri(self.uniform_open(size))

    def standard(self, variant: Variant, size=None):
        if variant is Variant.LAPLACE:
            return self.standard_laplace(size)
        return self.standard_normal(size)


class InjectedNoiseSource(NoiseSource):
    """Test double that replays a fixed queue of standard draws."""

    def __init__(self, draws: Sequence[float]):
        super().__init__(seed=0)
        self._queue = list(draws)

    def _pop(self):
        if not self._queue:
            raise RuntimeError("injected noise queue exhausted")
        return self._queue.pop(0)

    def standard_laplace(self, size=None):
        if size is not None:
            return np.array([self._pop() for _ in range(int(size))])
        return self._pop()

    standard_normal = standard_laplace


def sample_laplace(lam: float, src: NoiseSource) -> float:
    """One draw from the Laplace distribution with density (lam/2) e^{-lam|u|}."""
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    return float(src.standard_laplace()) / lam

def sample_gaussian(src: NoiseSource) -> float:
    """One standard normal draw."""
    return float(src.standard_normal())


def laplace_global_mech(
    value: float, gs: float, budget: PrivacyBudget, src: NoiseSource
) -> float:
    """value + (Z/epsilon) * gs with Z ~ Lap(1); requires finite gs > 0."""
    _check_sensitivity(gs)
    return value + float(src.standard_laplace()) * gs / budget.epsilon


def gaussian_global_mech(
    value: float, gs: float, budget: PrivacyBudget, src: NoiseSource
) -> float:
    """value + (sqrt(2 log(1.25/delta)) Z / epsilon) * gs with Z standard normal."""
    _check_sensitivity(gs)
    scale = math.sqrt(2.0 * math.log(1.25 / budget.delta)) / budget.epsilon
    return value + float(src.standard_normal()) * scale * gs


def laplace_smooth_beta(budget: PrivacyBudget) -> float:
    """Smoothing rate the Laplace smooth-sensitivity mechanism requires."""
    return budget.epsilon / (2.0 * math.log(1.0 / budget.delta))


def gaussian_smooth_beta(budget: PrivacyBudget) -> float:
    """Smoothing rate the Gaussian smooth-sensitivity mechanism requires."""
    return budget.epsilon / (4.0 * (1.0 + math.log(2.0 / budget.delta)))


def laplace_smooth_mech(
    s: Sample,
    h: Callable[[Sample], float],
    smooth_sens: float,
    budget: PrivacyBudget,
    src: NoiseSource,
    *,
    beta: float,
) -> float:
    """h(x) + (2Z/epsilon) * S, Z ~ Lap(1), with S the beta-smooth
    sensitivity computed at beta = epsilon / (2 log(1/delta))."""
    _check_beta(beta, laplace_smooth_beta(budget))
    _check_sensitivity(smooth_sens)
    return h(s) + 2.0 * float(src.standard_laplace()) * smooth_sens / budget.epsilon


def gaussian_smooth_mech(
    s: Sample,
    h: Callable[[Sample], float],
    smooth_sens: float,
    budget: PrivacyBudget,
    src: NoiseSource,
    *,
    beta: float,
) -> float:
    """h(x) + (5 sqrt(2 log(2/delta)) Z / epsilon) * S with beta =
    epsilon / (4 (1 + log(2/delta)))."""
    _check_beta(beta, gaussian_smooth_beta(budget))
    _check_sensitivity(smooth_sens)
    scale = 5.0 * math.sqrt(2.0 * math.log(2.0 / budget.delta)) / budget.epsilon
    return h(s) + float(src.standard_normal()) * scale * smooth_sens


def _check_sensitivity(value: float):
    if not (value > 0 and math.isfinite(value)):
        raise InfiniteSensitivityError(
            f"sensitivity must be finite and positive, got {value}"
        )


def _check_beta(beta: float, required: float):
    if not math.isclose(beta, required, rel_tol=1e-9, abs_tol=0.0):
        raise ValueError(
            f"smooth sensitivity was computed at beta={beta}, but this "
            f"budget requires beta={required}"
        )


# ---------------------------------------------------------------------------
# Propose, test, release


@dataclass(frozen=True)
class PtrMechanism:
    """A calibrated release: an estimator, its breakdown statistic, and the
    noise constants.  ``breakdown(sample, eta)`` must satisfy the
    Hamming-Lipschitz-1 contract for the privacy guarantee to hold."""

    config: PtrConfig
    estimator: Callable[[Sample], float]
    breakdown: Callable[[Sample, float], int]


def no_reply_threshold(config: PtrConfig) -> float:
    """Test cutoff 1 + b_delta/epsilon below which the release stays silent."""
    return 1.0 + config.b_delta / config.budget.epsilon


def ptr_release(mech: PtrMechanism, s: Sample, src: NoiseSource) -> ReleaseOutcome:
    """Run one propose-test-release invocation.

    Draws Z1 then Z2 from the variant's distribution, forms the noisy
    test statistic A + (a_delta/eps) Z1, and replies with
    estimate + (eta/eps) a_delta Z2 only if the test clears
    1 + b_delta/eps.  Z2 is drawn (and discarded) even on a no-reply so
    the randomness consumed per call is constant.
    """
    cfg = mech.config
    eps = cfg.budget.epsilon
    z1 = float(src.standard(cfg.variant))
    z2 = float(src.standard(cfg.variant))
    a_stat = mech.breakdown(s, cfg.eta)
    noisy_stat = a_stat + (cfg.a_delta / eps) * z1
    if noisy_stat <= no_reply_threshold(cfg):
        return ReleaseOutcome.no_reply()
    return ReleaseOutcome.reply(mech.estimator(s) + (cfg.eta / eps) * cfg.a_delta * z2)
