"""Figure rendering for experiment reports.

Every report path of the CLI writes these figures next to the CSV/JSON
output.  The Agg backend is forced so rendering works headless.
"""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .simlab import AuditResult, ExperimentReport, ScalingResult

__all__ = ["save_coverage_figure", "save_scaling_figure", "save_audit_figure"]


def save_coverage_figure(report: ExperimentReport, path) -> None:
    fig, (ax_rates, ax_q) = plt.subplots(1, 2, figsize=(9, 3.6))

    labels = ["coverage", "no-reply"]
    rates = [report.coverage_rate, report.noreply_rate]
    cis = [report.coverage_ci, report.noreply_ci]
    yerr = np.array(
        [
            [r - lo for r, (lo, _) in zip(rates, cis)],
            [hi - r for r, (_, hi) in zip(rates, cis)],
        ]
    )
    ax_rates.errorbar(labels, rates, yerr=yerr, fmt="o", capsize=4)
    ax_rates.set_ylim(-0.02, 1.02)
    ax_rates.set_ylabel("rate")
    ax_rates.set_title(f"{report.estimator_kind}, n={report.n}, {report.trials} trials")

    taus = sorted(report.error_quantiles)
    qs = [report.error_quantiles[t] for t in taus]
    los = [report.error_quantile_cis[t][0] for t in taus]
    his = [report.error_quantile_cis[t][1] for t in taus]
    ax_q.errorbar(
        taus,
        qs,
        yerr=[np.subtract(qs, los), np.subtract(his, qs)],
        fmt="s-",
        capsize=3,
        label="empirical |error| quantile",
    )
    if not math.isnan(report.theoretical_bound):
        ax_q.axhline(
            report.theoretical_bound, ls="--", color="crimson", label="theoretical bound"
        )
    ax_q.set_xscale("log")
    ax_q.set_xlabel(r"$\tau$")
    ax_q.set_ylabel(r"$(1-\tau)$-quantile of $|$error$|$")
    ax_q.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_scaling_figure(result: ScalingResult, path) -> None:
    fig, (ax_q, ax_b) = plt.subplots(1, 2, figsize=(9, 3.6))

    taus = sorted({r.tau for r in result.rows})
    for tau in taus:
        rows = [r for r in result.rows if r.tau == tau]
        ns = [r.n for r in rows]
        ax_q.plot(ns, [r.quantile for r in rows], "o-", label=rf"$\tau$={tau}")
        ax_q.fill_between(
            ns, [r.lower for r in rows], [r.upper for r in rows], alpha=0.2
        )
    ax_q.set_xscale("log")
    ax_q.set_yscale("log")
    ax_q.set_xlabel("n")
    ax_q.set_ylabel("error quantile")
    slopes = ", ".join(f"{tau}: {s:.2f}" for tau, s in result.exponent_in_n.items())
    ax_q.set_title(f"fitted exponents in n: {slopes}" if slopes else "error quantiles")
    ax_q.legend(fontsize=8)

    rows0 = [r for r in result.rows if r.tau == taus[0] and r.bound is not None]
    if rows0:
        ns = [r.n for r in rows0]
        ax_b.plot(ns, [r.bound.total for r in rows0], "o-", label="bound total")
        ax_b.plot(ns, [r.bound.privacy for r in rows0], "s--", label="privacy term")
        ax_b.set_xscale("log")
        ax_b.set_yscale("log")
        if result.privacy_term_exponent is not None:
            ax_b.set_title(
                f"privacy-term exponent: {result.privacy_term_exponent:.3f}"
            )
        ax_b.legend(fontsize=8)
    ax_b.set_xlabel("n")
    ax_b.set_ylabel("evaluated bound")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_audit_figure(result: AuditResult, path) -> None:
    fig, ax = plt.subplots(figsize=(6.5, 3.6))
    cells = np.arange(len(result.counts_x))
    width = 0.4
    ax.bar(cells - width / 2, result.counts_x, width=width, label="x")
    ax.bar(cells + width / 2, result.counts_x_prime, width=width, label="x'")
    labels = [f"b{i}" for i in range(len(cells) - 1)] + ["no-reply"]
    ax.set_xticks(cells, labels, rotation=45, fontsize=7)
    ax.set_yscale("symlog")
    ax.set_ylabel("count")
    ax.set_title(
        rf"$\hat\varepsilon$ = {result.eps_hat:.3f} $\pm$ {result.bootstrap_radius:.3f}"
        rf" at $\delta$ = {result.delta_target:.3g}"
    )
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
