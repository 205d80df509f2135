"""Monte Carlo verification lab.

Generators with analytically known calibration constants, coverage and
no-reply experiments, scaling sweeps, and a heuristic neighbouring-dataset
privacy audit.  Every experiment is bit-reproducible from its seed:
per-trial noise sources are derived from (master seed, trial index) and
aggregation is order-independent.

Truth values for coverage are always the population median or mean from
the analytic distribution spec, never estimated from data.  The audit is
an empirical lower-bound diagnostic, not a proof.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Protocol

import numpy as np
from scipy import integrate, stats
from scipy.special import gamma as gamma_fn

from .core import (
    Confidence,
    InsufficientTrialsError,
    MedianProfile,
    MomentProfile,
    NotNeighborsError,
    PrivacyBudget,
    PtrlocError,
    Sample,
    make_mom_config,
    make_sample,
)
from .estimators import (
    BoundTerms,
    dp_median,
    dp_mom,
    dp_mom_density,
    empirical_median,
    median_error_bound,
    median_eta,
    mom_density_error_bound,
    mom_error_bound,
    mom_point_estimate,
)
from .mechanisms import NoiseSource, PtrMechanism, no_reply_threshold

__all__ = [
    "UnsupportedFamilyError",
    "Normal",
    "StudentT",
    "Pareto",
    "LogNormal",
    "DistributionSpec",
    "generate",
    "ExperimentReport",
    "run_coverage",
    "ScalingRow",
    "ScalingResult",
    "run_scaling",
    "AuditArm",
    "GlobalLaplaceArm",
    "PtrArm",
    "AuditCase",
    "AuditResult",
    "dp_audit",
    "laplace_global_case",
    "ptr_cliff_case",
    "ptr_boundary_case",
    "binomial_ci",
    "quantile_ci",
]

DEFAULT_QUANTILE_LEVELS = (0.5, 0.1, 0.05, 0.01)

AUDIT_MIN_BIN_COUNT = 25  # bins thinner than this are too noisy to score
AUDIT_MIN_TRIALS = 1000


class UnsupportedFamilyError(PtrlocError):
    """Distribution parameters outside the supported (profiled) range."""


# ---------------------------------------------------------------------------
# Distribution families with analytic calibration profiles


class DistributionSpec(Protocol):
    def draw(self, n: int, gen: np.random.Generator) -> np.ndarray: ...

    @property
    def population_median(self) -> float: ...

    @property
    def population_mean(self) -> float: ...

    def median_profile(self) -> MedianProfile: ...

    def moment_profile(self) -> MomentProfile: ...


@dataclass(frozen=True)
class Normal:
    """Normal(mu, sigma); median floor uses r = sqrt(2) sigma and
    L = 1/(e sqrt(2 pi sigma^2)), the density value at mu +- r."""

    mu: float = 0.0
    sigma: float = 1.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise UnsupportedFamilyError(f"sigma must be positive, got {self.sigma}")

    def draw(self, n, gen):
        return self.mu + self.sigma * gen.standard_normal(n)

    @property
    def population_median(self):
        return self.mu

    @property
    def population_mean(self):
        return self.mu

    def median_profile(self):
        return MedianProfile(
            r=math.sqrt(2.0) * self.sigma,
            L=1.0 / (math.e * math.sqrt(2.0 * math.pi) * self.sigma),
        )

    def moment_profile(self):
        rho3 = self.sigma**3 * 2.0 * math.sqrt(2.0 / math.pi)
        return MomentProfile(mu=self.mu, sigma=self.sigma, rho=rho3 ** (1.0 / 3.0))


@dataclass(frozen=True)
class StudentT:
    """Shifted/scaled Student t with nu >= 4 degrees of freedom (three
    finite moments, heavy polynomial tails)."""

    nu: float
    loc: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        if self.nu < 4:
            raise UnsupportedFamilyError(f"need nu >= 4 for three moments, got {self.nu}")
        if not self.scale > 0:
            raise UnsupportedFamilyError(f"scale must be positive, got {self.scale}")

    def draw(self, n, gen):
        return self.loc + self.scale * gen.standard_t(self.nu, size=n)

    @property
    def population_median(self):
        return self.loc

    @property
    def population_mean(self):
        return self.loc

    def median_profile(self):
        r = math.sqrt(2.0) * self.scale
        L = stats.t.pdf(math.sqrt(2.0), self.nu) / self.scale
        return MedianProfile(r=r, L=L)

    def moment_profile(self):
        nu = self.nu
        sigma = self.scale * math.sqrt(nu / (nu - 2.0))
        abs3 = (
            nu**1.5
            * gamma_fn(2.0)
            * gamma_fn((nu - 3.0) / 2.0)
            / (math.sqrt(math.pi) * gamma_fn(nu / 2.0))
        )
        return MomentProfile(
            mu=self.loc, sigma=sigma, rho=self.scale * abs3 ** (1.0 / 3.0)
        )


@dataclass(frozen=True)
class Pareto:
    """Pareto with tail index alpha >= 4 and scale xm, optionally centered
    at zero mean.  Exactly three finite moments at alpha = 4."""

    alpha: float = 4.0
    xm: float = 1.0
    centered: bool = True

    def __post_init__(self):
        if self.alpha < 4:
            raise UnsupportedFamilyError(
                f"need alpha >= 4 for three moments, got {self.alpha}"
            )
        if not self.xm > 0:
            raise UnsupportedFamilyError(f"xm must be positive, got {self.xm}")

    @property
    def _raw_mean(self):
        return self.alpha * self.xm / (self.alpha - 1.0)

    @property
    def _shift(self):
        return self._raw_mean if self.centered else 0.0

    def draw(self, n, gen):
        u = np.maximum(gen.random(n), np.nextafter(0.0, 1.0))
        return self.xm * u ** (-1.0 / self.alpha) - self._shift

    @property
    def population_median(self):
        return self.xm * 2.0 ** (1.0 / self.alpha) - self._shift

    @property
    def population_mean(self):
        return self._raw_mean - self._shift

    def median_profile(self):
        # Density is decreasing on its support, so the floor on the window
        # [m - r, m + r] is the density at m + r; r stops at the support edge.
        m_raw = self.xm * 2.0 ** (1.0 / self.alpha)
        r = m_raw - self.xm
        L = self._pdf_raw(m_raw + r)
        return MedianProfile(r=r, L=L)

    def _pdf_raw(self, x):
        return self.alpha * self.xm**self.alpha / x ** (self.alpha + 1.0)

    def moment_profile(self):
        a, xm = self.alpha, self.xm
        var = a * xm**2 / ((a - 1.0) ** 2 * (a - 2.0))
        return MomentProfile(
            mu=self.population_mean,
            sigma=math.sqrt(var),
            rho=_pareto_rho3(a, xm) ** (1.0 / 3.0),
        )


@lru_cache(maxsize=None)
def _pareto_rho3(alpha: float, xm: float) -> float:
    # E|X - mu|^3 by adaptive quadrature over u = F(x) in (0, 1).
    mu = alpha * xm / (alpha - 1.0)
    value, _ = integrate.quad(
        lambda u: abs(xm * u ** (-1.0 / alpha) - mu) ** 3, 0.0, 1.0, limit=200
    )
    return value


@dataclass(frozen=True)
class LogNormal:
    """exp(mu + sigma Z); three finite moments for every sigma."""

    mu: float = 0.0
    sigma: float = 1.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise UnsupportedFamilyError(f"sigma must be positive, got {self.sigma}")

    def draw(self, n, gen):
        return np.exp(self.mu + self.sigma * gen.standard_normal(n))

    @property
    def population_median(self):
        return math.exp(self.mu)

    @property
    def population_mean(self):
        return math.exp(self.mu + self.sigma**2 / 2.0)

    def median_profile(self):
        m = self.population_median
        r = m * (1.0 - math.exp(-self.sigma))
        dist = stats.lognorm(s=self.sigma, scale=m)
        # Unimodal density: the floor over the window sits at an endpoint.
        L = min(dist.pdf(m - r), dist.pdf(m + r))
        return MedianProfile(r=r, L=L)

    def moment_profile(self):
        mean = self.population_mean
        var = (math.exp(self.sigma**2) - 1.0) * math.exp(2.0 * self.mu + self.sigma**2)
        rho3 = _lognormal_rho3(self.mu, self.sigma)
        return MomentProfile(mu=mean, sigma=math.sqrt(var), rho=rho3 ** (1.0 / 3.0))


@lru_cache(maxsize=None)
def _lognormal_rho3(mu: float, sigma: float) -> float:
    mean = math.exp(mu + sigma**2 / 2.0)
    value, _ = integrate.quad(
        lambda z: abs(math.exp(mu + sigma * z) - mean) ** 3 * stats.norm.pdf(z),
        -12.0,
        12.0,
        limit=200,
    )
    return value


def generate(spec: DistributionSpec, n: int, src: NoiseSource) -> Sample:
    """n i.i.d. draws from the family; deterministic per source."""
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    return make_sample(spec.draw(n, src.generator))


# ---------------------------------------------------------------------------
# Confidence helpers


def binomial_ci(successes: int, trials: int, alpha: float = 0.05) -> tuple[float, float]:
    """Exact (Clopper-Pearson) two-sided confidence interval."""
    lo = 0.0 if successes == 0 else float(stats.beta.ppf(alpha / 2, successes, trials - successes + 1))
    hi = 1.0 if successes == trials else float(stats.beta.ppf(1 - alpha / 2, successes + 1, trials - successes))
    return lo, hi


def quantile_ci(
    sorted_values: np.ndarray, q: float, alpha: float = 0.05
) -> tuple[float, float]:
    """Distribution-free order-statistic confidence interval for a quantile."""
    t = len(sorted_values)
    if t == 0:
        return math.nan, math.nan
    lo_idx = min(int(stats.binom.ppf(alpha / 2, t, q)), t - 1)
    hi_idx = min(int(stats.binom.ppf(1 - alpha / 2, t, q)), t - 1)
    return float(sorted_values[lo_idx]), float(sorted_values[hi_idx])


# ---------------------------------------------------------------------------
# Coverage experiments


@dataclass(frozen=True)
class ExperimentReport:
    """Result of one coverage experiment; reproducible from (spec, config, seed)."""

    estimator_kind: str
    n: int
    k_blocks: int | None
    trials: int
    seed: int
    truth: float
    theoretical_bound: float
    coverage_rate: float
    coverage_ci: tuple[float, float]
    noreply_rate: float
    noreply_ci: tuple[float, float]
    error_quantiles: dict[float, float]
    error_quantile_cis: dict[float, tuple[float, float]]

    def to_json_dict(self) -> dict:
        return {
            "estimator_kind": self.estimator_kind,
            "n": self.n,
            "K": self.k_blocks,
            "trials": self.trials,
            "seed": self.seed,
            "truth": self.truth,
            "theoretical_bound": self.theoretical_bound,
            "coverage_rate": self.coverage_rate,
            "coverage_ci": list(self.coverage_ci),
            "noreply_rate": self.noreply_rate,
            "noreply_ci": list(self.noreply_ci),
            "error_quantiles": {str(k): v for k, v in self.error_quantiles.items()},
            "error_quantile_cis": {
                str(k): list(v) for k, v in self.error_quantile_cis.items()
            },
        }


def _one_estimate(
    kind: str,
    data: Sample,
    spec: DistributionSpec,
    budget: PrivacyBudget,
    conf: Confidence,
    k_blocks: int | None,
    src: NoiseSource,
):
    """Returns (outcome value or None for no-reply, theoretical bound)."""
    if kind == "median":
        rep = dp_median(data, spec.median_profile(), budget, conf, src)
    elif kind == "mom":
        rep = dp_mom(data, spec.moment_profile(), k_blocks, budget, conf, src)
    elif kind == "mom_density":
        rep = dp_mom_density(data, spec.moment_profile(), k_blocks, budget, conf, src)
    elif kind == "median_raw":
        return empirical_median(data), math.nan
    elif kind == "mom_raw":
        return mom_point_estimate(data, make_mom_config(data.n, k_blocks)), math.nan
    else:
        raise ValueError(f"unknown estimator kind {kind!r}")


def _check_kind(kind: str, k_blocks: int | None):
    if kind in ("mom", "mom_density", "mom_raw") and k_blocks is None:
        raise ValueError(f"estimator kind {kind!r} requires a block count")
    value = None if rep.outcome.is_no_reply else rep.outcome.value
    return value, rep.theoretical_bound


def run_coverage(
    spec: DistributionSpec,
    estimator_kind: str,
    n: int,
    budget: PrivacyBudget,
    conf: Confidence,
    trials: int,
    seed: int,
    k_blocks: int | None = None,
    quantile_levels: tuple[float, ...] = DEFAULT_QUANTILE_LEVELS,
) -> ExperimentReport:
    """Replicate the private release on fresh data and score it.

    Coverage counts trials where a reply was produced AND the error stayed
    within the theoretical bound; the two rates come with exact binomial
    confidence intervals.  Calibration precondition failures propagate
    out of the first trial rather than being skipped.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    _check_kind(estimator_kind, k_blocks)
    truth = (
        spec.population_median
        if estimator_kind.startswith("median")
        else spec.population_mean
    )
    master = NoiseSource(seed)
    errors = []
    noreplies = 0
    covered = 0
    bound = math.nan
    for trial in range(trials):
        src = master.derive(trial)
        data = generate(spec, n, src)
        value, bound = _one_estimate(
            estimator_kind, data, spec, budget, conf, k_blocks, src
        )
        if value is None:
            noreplies += 1
            continue
        err = abs(value - truth)
        errors.append(err)
        if not math.isnan(bound) and err <= bound:
            covered += 1
    errors_sorted = np.sort(np.array(errors))
    quantiles = {}
    q_cis = {}
    for tau in quantile_levels:
        if errors_sorted.size:
            quantiles[tau] = float(np.quantile(errors_sorted, 1.0 - tau))
            q_cis[tau] = quantile_ci(errors_sorted, 1.0 - tau)
        else:
            quantiles[tau] = math.nan
            q_cis[tau] = (math.nan, math.nan)
    return ExperimentReport(
        estimator_kind=estimator_kind,
        n=n,
        k_blocks=k_blocks,
        trials=trials,
        seed=seed,
        truth=truth,
        theoretical_bound=bound,
        coverage_rate=covered / trials,
        coverage_ci=binomial_ci(covered, trials),
        noreply_rate=noreplies / trials,
        noreply_ci=binomial_ci(noreplies, trials),
        error_quantiles=quantiles,
        error_quantile_cis=q_cis,
    )


# ---------------------------------------------------------------------------
# Scaling experiments


@dataclass(frozen=True)
class ScalingRow:
    n: int
    k_blocks: int | None
    tau: float
    quantile: float
    lower: float
    upper: float
    bound: BoundTerms | None


@dataclass(frozen=True)
class ScalingResult:
    rows: tuple[ScalingRow, ...]
    exponent_in_n: dict[float, float]
    exponent_in_log_inv_tau: dict[int, float]
    privacy_term_exponent: float | None
    seed: int

    def to_json_dict(self) -> dict:
        return {
            "seed": self.seed,
            "rows": [
                {
                    "n": r.n,
                    "K": r.k_blocks,
                    "tau": r.tau,
                    "quantile": r.quantile,
                    "lower": r.lower,
                    "upper": r.upper,
                    "bound_total": r.bound.total if r.bound else None,
                    "bound_privacy": r.bound.privacy if r.bound else None,
                }
                for r in self.rows
            ],
            "exponent_in_n": {str(k): v for k, v in self.exponent_in_n.items()},
            "exponent_in_log_inv_tau": {
                str(k): v for k, v in self.exponent_in_log_inv_tau.items()
            },
            "privacy_term_exponent": self.privacy_term_exponent,
        }


def _fit_slope(x: np.ndarray, y: np.ndarray) -> float:
    return float(np.polyfit(x, y, 1)[0])


def _bound_for(
    kind: str,
    spec: DistributionSpec,
    n: int,
    k_blocks: int | None,
    budget: PrivacyBudget,
    conf: Confidence,
) -> BoundTerms | None:
    if kind == "median":
        profile = spec.median_profile()
        eta = median_eta(profile, n, budget, conf)
        return median_error_bound(profile, n, eta, budget, conf)
    if kind == "mom":
        return mom_error_bound(spec.moment_profile(), n, k_blocks, budget, conf)
    if kind == "mom_density":
        return mom_density_error_bound(spec.moment_profile(), n, k_blocks, budget, conf)
    return None


def run_scaling(
    spec: DistributionSpec,
    estimator_kind: str,
    n_grid: list[int],
    tau_grid: list[float],
    budget: PrivacyBudget,
    conf: Confidence,
    trials: int,
    seed: int,
    k_grid: list[int] | None = None,
) -> ScalingResult:
    """Empirical (1-tau)-quantiles of |estimate - truth| over an n grid,
    with fitted log-log slopes in n and in log(1/tau), and the evaluated
    error bound (including its privacy term) alongside."""
    if k_grid is not None and len(k_grid) != len(n_grid):
        raise ValueError("k_grid must match n_grid in length")
    _check_kind(estimator_kind, None if k_grid is None else k_grid[0])
    truth = (
        spec.population_median
        if estimator_kind.startswith("median")
        else spec.population_mean
    )
    master = NoiseSource(seed)
    rows: list[ScalingRow] = []
    quantile_table: dict[tuple[int, float], float] = {}
    for gi, n in enumerate(n_grid):
        k_blocks = k_grid[gi] if k_grid is not None else None
        errors = []
        for trial in range(trials):
            src = master.derive(gi * trials + trial)
            data = generate(spec, n, src)
            value, _ = _one_estimate(
                estimator_kind, data, spec, budget, conf, k_blocks, src
            )
            if value is not None:
                errors.append(abs(value - truth))
        errors_sorted = np.sort(np.array(errors))
        bound = _bound_for(estimator_kind, spec, n, k_blocks, budget, conf)
        for tau in tau_grid:
            q = float(np.quantile(errors_sorted, 1.0 - tau)) if errors_sorted.size else math.nan
            lo, hi = quantile_ci(errors_sorted, 1.0 - tau)
            quantile_table[(n, tau)] = q
            rows.append(
                ScalingRow(
                    n=n, k_blocks=k_blocks, tau=tau, quantile=q, lower=lo, upper=hi, bound=bound
                )
            )
    exponent_in_n = {
        tau: _fit_slope(
            np.log(np.array(n_grid, dtype=float)),
            np.log(np.array([quantile_table[(n, tau)] for n in n_grid])),
        )
        for tau in tau_grid
        if len(n_grid) > 1
    }
    exponent_in_log_inv_tau = {
        n: _fit_slope(
            np.log(np.log(1.0 / np.array(tau_grid, dtype=float))),
            np.log(np.array([quantile_table[(n, tau)] for tau in tau_grid])),
        )
        for n in n_grid
        if len(tau_grid) > 1
    }
    privacy_exponent = None
    bounds = [r.bound for r in rows if r.tau == tau_grid[0]]
    if len(n_grid) > 1 and bounds[0] is not None:
        privacy_exponent = _fit_slope(
            np.log(np.array(n_grid, dtype=float)),
            np.log(np.array([b.privacy for b in bounds])),
        )
    return ScalingResult(
        rows=tuple(rows),
        exponent_in_n=exponent_in_n,
        exponent_in_log_inv_tau=exponent_in_log_inv_tau,
        privacy_term_exponent=privacy_exponent,
        seed=seed,
    )


# ---------------------------------------------------------------------------
# Heuristic privacy audit


class AuditArm(Protocol):
    """Anything that can map a dataset to a stream of release outputs,
    with NaN standing in for the no-reply symbol."""

    def draw_outputs(
        self, x: np.ndarray, trials: int, src: NoiseSource
    ) -> np.ndarray: ...


@dataclass(frozen=True)
class GlobalLaplaceArm:
    """Global-sensitivity Laplace release of h; always replies."""

    h: Callable[[np.ndarray], float]
    gs: float
    budget: PrivacyBudget

    def draw_outputs(self, x, trials, src):
        value = self.h(x)
        return value + src.standard_laplace(trials) * self.gs / self.budget.epsilon


@dataclass(frozen=True)
class PtrArm:
    """Vectorised propose-test-release arm.

    The breakdown statistic and estimate are data-dependent constants, so
    trials reduce to two noise arrays consumed in the same (Z1, Z2) order
    as single releases.
    """

    mech: PtrMechanism

    def draw_outputs(self, x, trials, src):
        cfg = self.mech.config
        eps = cfg.budget.epsilon
        s = make_sample(x)
        a_stat = self.mech.breakdown(s, cfg.eta)
        estimate = self.mech.estimator(s)
        z1 = np.asarray(src.standard(cfg.variant, trials), dtype=float)
        z2 = np.asarray(src.standard(cfg.variant, trials), dtype=float)
        out = estimate + (cfg.eta / eps) * cfg.a_delta * z2
        out[a_stat + (cfg.a_delta / eps) * z1 <= no_reply_threshold(cfg)] = np.nan
        return out


@dataclass(frozen=True)
class AuditResult:
    eps_hat: float
    bootstrap_radius: float
    delta_target: float
    trials: int
    seed: int
    bin_edges: np.ndarray
    counts_x: np.ndarray  # histogram counts plus trailing no-reply cell
    counts_x_prime: np.ndarray

    def to_json_dict(self) -> dict:
        return {
            "eps_hat": self.eps_hat,
            "bootstrap_radius": self.bootstrap_radius,
            "delta_target": self.delta_target,
            "trials": self.trials,
            "seed": self.seed,
            "bin_edges": [float(v) for v in self.bin_edges],
            "counts_x": [int(v) for v in self.counts_x],
            "counts_x_prime": [int(v) for v in self.counts_x_prime],
        }


def _direction_eps(p_counts, q_counts, trials, delta_target):
    p_hat = p_counts / trials
    q_hat = q_counts / trials
    floor = 1.0 / trials
    eligible = np.minimum(p_counts, q_counts) >= AUDIT_MIN_BIN_COUNT
    if not eligible.any():
        return 0.0
    num = np.maximum(p_hat[eligible] - delta_target, floor)
    return float(np.max(np.log(num / q_hat[eligible])))


def _histogram(outputs, edges):
    finite = outputs[~np.isnan(outputs)]
    counts, _ = np.histogram(finite, bins=edges)
    noreply = np.count_nonzero(np.isnan(outputs))
    return np.append(counts, noreply)


def dp_audit(
    mechanism: AuditArm,
    x: Sample,
    x_prime: Sample,
    bins: int | np.ndarray,
    trials: int,
    seed: int,
    delta_target: float = 0.0,
    bootstrap: int = 200,
) -> AuditResult:
    """Estimate the empirical privacy loss between two neighbouring datasets.

    Runs the mechanism ``trials`` times on each dataset, histograms the
    outputs over shared bins plus one no-reply cell, and reports the
    symmetrised maximum of log(max(p_hat - delta, 1/trials) / q_hat) over
    cells with at least 25 counts on both sides, with a bootstrap radius.
    A diagnostic lower bound, not a proof.
    """
    xv, pv = x.values, x_prime.values
    if xv.shape != pv.shape or int(np.count_nonzero(xv != pv)) != 1:
        raise NotNeighborsError(
            "audit datasets must have equal length and differ in exactly one coordinate"
        )
    n_bins = int(bins) if np.isscalar(bins) else len(np.asarray(bins)) - 1
    if trials < max(AUDIT_MIN_TRIALS, 50 * (n_bins + 1)):
        raise InsufficientTrialsError(
            f"{trials} trials is too few for {n_bins} bins; "
            f"need at least {max(AUDIT_MIN_TRIALS, 50 * (n_bins + 1))}"
        )
    master = NoiseSource(seed)
    out_x = mechanism.draw_outputs(xv, trials, master.derive(0))
    out_p = mechanism.draw_outputs(pv, trials, master.derive(1))
    if np.isscalar(bins):
        pooled = np.concatenate([out_x[~np.isnan(out_x)], out_p[~np.isnan(out_p)]])
        if pooled.size == 0:
            edges = np.linspace(-1.0, 1.0, int(bins) + 1)
        else:
            span = pooled.max() - pooled.min()
            pad = 1e-9 * max(1.0, abs(span))
            edges = np.linspace(pooled.min() - pad, pooled.max() + pad, int(bins) + 1)
    else:
        edges = np.asarray(bins, dtype=float)
    # Outer catch-all cells make every output land somewhere, so the cell
    # counts always sum to the trial count (the bootstrap relies on that).
    if not np.isneginf(edges[0]):
        edges = np.concatenate([[-np.inf], edges])
    if not np.isposinf(edges[-1]):
        edges = np.concatenate([edges, [np.inf]])
    counts_x = _histogram(out_x, edges)
    counts_p = _histogram(out_p, edges)

    def symmetric_eps(cx, cp):
        return max(
            _direction_eps(cx, cp, trials, delta_target),
            _direction_eps(cp, cx, trials, delta_target),
        )

    eps_hat = symmetric_eps(counts_x, counts_p)
    boot_gen = master.derive(2).generator
    boot = np.empty(bootstrap)
    for b in range(bootstrap):
        rx = boot_gen.multinomial(trials, counts_x / trials)
        rp = boot_gen.multinomial(trials, counts_p / trials)
        boot[b] = symmetric_eps(rx, rp)
    lo, hi = np.quantile(boot, [0.025, 0.975])
    return AuditResult(
        eps_hat=eps_hat,
        bootstrap_radius=float((hi - lo) / 2.0),
        delta_target=delta_target,
        trials=trials,
        seed=seed,
        bin_edges=edges,
        counts_x=counts_x,
        counts_x_prime=counts_p,
    )


# ---------------------------------------------------------------------------
# Shipped audit cases


@dataclass(frozen=True)
class AuditCase:
    """A named neighbouring-dataset audit preset with its guarantee."""

    name: str
    arm: AuditArm
    x: Sample
    x_prime: Sample
    bins: int | np.ndarray
    delta_target: float
    guarantee_eps: float


def laplace_global_case(budget: PrivacyBudget) -> AuditCase:
    """Canonical worst-case neighbours for the Laplace release: the
    projected coordinate moves by exactly the global sensitivity."""
    x = make_sample([0.0, 0.0, 0.0, 0.0, 0.0])
    x_prime = make_sample([1.0, 0.0, 0.0, 0.0, 0.0])
    scale = 1.0 / budget.epsilon
    edges = np.concatenate(
        [[-np.inf], np.linspace(-4.0 * scale, 1.0 + 4.0 * scale, 7), [np.inf]]
    )
    return AuditCase(
        name="laplace-global",
        arm=GlobalLaplaceArm(h=lambda v: float(v[0]), gs=1.0, budget=budget),
        x=x,
        x_prime=x_prime,
        bins=edges,
        delta_target=0.0,
        guarantee_eps=budget.epsilon,
    )


def _ptr_gaussian_delta(budget: PrivacyBudget) -> float:
    return 2.0 * math.exp(budget.epsilon) * budget.delta + budget.delta**2


def _median_ptr_mechanism(eta, budget, conf):
    from .core import Variant, make_ptr_config
    from .sensitivity import breakdown_stat_median

    return PtrMechanism(
        config=make_ptr_config(eta, Variant.GAUSSIAN, budget, conf),
        estimator=empirical_median,
        breakdown=lambda sample, e: breakdown_stat_median(sample, e).k_star,
    )


def ptr_cliff_case(budget: PrivacyBudget, conf: Confidence) -> AuditCase:
    """Two tight clusters; one coordinate change flips the median across
    the gap, so the payloads of the rare replies are maximally separated."""
    x = make_sample([0.0] * 4 + [1.0] * 4)
    x_prime = make_sample([0.0] * 3 + [1.0] * 5)
    mech = _median_ptr_mechanism(0.25, budget, conf)
    return AuditCase(
        name="ptr-cliff",
        arm=PtrArm(mech),
        x=x,
        x_prime=x_prime,
        bins=8,
        delta_target=_ptr_gaussian_delta(budget),
        guarantee_eps=2.0 * budget.epsilon,
    )


def ptr_boundary_case(budget: PrivacyBudget, conf: Confidence) -> AuditCase:
    """Breakdown statistic sitting at the no-reply threshold; the one
    changed coordinate moves it by exactly 1, maximising the test leak."""
    big = 50.0
    zeros_x, zeros_p = 17, 18
    x = make_sample([0.0] * zeros_x + [big] * (20 - zeros_x))
    x_prime = make_sample([0.0] * zeros_p + [big] * (20 - zeros_p))
    mech = _median_ptr_mechanism(0.5, budget, conf)
    return AuditCase(
        name="ptr-boundary",
        arm=PtrArm(mech),
        x=x,
        x_prime=x_prime,
        bins=8,
        delta_target=_ptr_gaussian_delta(budget),
        guarantee_eps=2.0 * budget.epsilon,
    )


def run_audit_case(case: AuditCase, trials: int, seed: int) -> AuditResult:
    return dp_audit(
        case.arm,
        case.x,
        case.x_prime,
        case.bins,
        trials,
        seed,
        delta_target=case.delta_target,
    )
