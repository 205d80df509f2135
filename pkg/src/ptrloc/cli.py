"""Command-line front end.

Subcommands: ``median``, ``mean``, ``mean-density`` (one private release
on a dataset), ``simulate`` (coverage/scaling experiments), ``audit``
(neighbouring-dataset privacy estimate).  Estimation output is a single
JSON document (schema_version 1) with either a released value or the
no-reply marker; exit code 0 means a reply, 3 means no reply and 2 means
a validation or precondition failure, so pipelines can branch without
parsing.

Calibration constants must be given explicitly (--r/--L or --sigma/--rho);
there are no defaults because a wrong profile silently voids the
guarantees.  All flags are validated before any data is read.  When the
outcome is a no-reply, nothing derived from the data values is printed --
only the calibration constants and thresholds.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

from .core import (
    CalibrationError,
    Confidence,
    EmptyInputError,
    MedianProfile,
    MomentProfile,
    NonFiniteValueError,
    PrivacyBudget,
    PtrlocError,
    Sample,
    make_sample,
)
from .estimators import DpEstimateReport, dp_median, dp_mom, dp_mom_density
from .mechanisms import NoiseSource
from . import simlab

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_PRECONDITION = 2
EXIT_NO_REPLY = 3


class ParseError(PtrlocError):
    """Unparseable row in an input file; carries the 1-based line number."""

    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


# ---------------------------------------------------------------------------
# Ingestion


def ingest(path: str | Path, fmt: str = "csv") -> Sample:
    """Read a dataset from CSV (column named 'value', or single-column)
    or JSON-lines (one number per line).  Row-count diagnostics go to
    stderr; the first bad row aborts with its line number."""
    path = Path(path)
    if fmt == "csv":
        values = _read_csv(path)
    elif fmt == "json-lines":
        values = _read_json_lines(path)
    else:
        raise ValueError(f"unknown input format {fmt!r}")
    if not values:
        raise EmptyInputError(f"no data rows in {path}")
    print(f"ingested {len(values)} rows from {path}", file=sys.stderr)
    return make_sample(values)


def _parse_number(text: str, line: int) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ParseError(line, f"not a number: {text!r}") from None
    if not math.isfinite(value):
        raise NonFiniteValueError(line, f"non-finite value at line {line}")
    return value


def _read_csv(path: Path) -> list[float]:
    values: list[float] = []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        col = 0
        for line, row in enumerate(reader, start=1):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if line == 1:
                header = [cell.strip().lower() for cell in row]
                if "value" in header:
                    col = header.index("value")
                    continue
                if len(row) > 1:
                    raise ParseError(1, "multi-column CSV needs a 'value' column")
            if col >= len(row):
                raise ParseError(line, f"missing column {col + 1}")
            values.append(_parse_number(row[col].strip(), line))
    return values


def _read_json_lines(path: Path) -> list[float]:
    values: list[float] = []
    with path.open() as fh:
        for line, text in enumerate(fh, start=1):
            text = text.strip()
            if not text:
                continue
            try:
                obj = json.loads(text)
            except json.JSONDecodeError:
                raise ParseError(line, f"invalid JSON: {text[:40]!r}") from None
            if not isinstance(obj, (int, float)) or isinstance(obj, bool):
                raise ParseError(line, "expected a bare number per line")
            if not math.isfinite(obj):
                raise NonFiniteValueError(line, f"non-finite value at line {line}")
            values.append(float(obj))
    return values


def parse_dist_spec(text: str):
    """Compact generator syntax: normal:MU:SIGMA, student-t:NU:LOC:SCALE,
    pareto:ALPHA:XM, lognormal:MU:SIGMA."""
    parts = text.split(":")
    family, params = parts[0], [float(p) for p in parts[1:]]
    try:
        if family == "normal":
            return simlab.Normal(*params)
        if family == "student-t":
            return simlab.StudentT(*params)
        if family == "pareto":
            return simlab.Pareto(*params)
        if family == "lognormal":
            return simlab.LogNormal(*params)
    except TypeError:
        raise ValueError(f"wrong parameter count in distribution spec {text!r}") from None
    raise ValueError(f"unknown distribution family {family!r}")


# ---------------------------------------------------------------------------
# Output helpers


def _emit(doc: dict, fmt: str, out: str | None) -> None:
    if fmt == "csv":
        lines = [f"{key},{_flat(value)}" for key, value in sorted(_flatten(doc).items())]
        text = "\n".join(["key,value"] + lines) + "\n"
    else:
        text = json.dumps(doc, sort_keys=True, indent=2) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _flat(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _flatten(doc: dict, prefix: str = "") -> dict:
    flat: dict = {}
    for key, value in doc.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            flat.update(_flatten(value, f"{name}."))
        elif isinstance(value, list):
            for i, item in enumerate(value):
                if isinstance(item, dict):
                    flat.update(_flatten(item, f"{name}.{i}."))
                else:
                    flat[f"{name}.{i}"] = item
        else:
            flat[name] = value
    return flat


def write_plot_csv(path: Path, rows) -> None:
    """Plot-ready CSV with the fixed columns x, quantile_or_rate, lower, upper."""
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "quantile_or_rate", "lower", "upper"])
        for x, value, lower, upper in rows:
            writer.writerow([_flat(x), _flat(value), _flat(lower), _flat(upper)])


def _error_doc(exc: Exception) -> dict:
    doc = {"schema_version": SCHEMA_VERSION, "error": {"type": type(exc).__name__, "message": str(exc)}}
    for attr in ("required_n", "required", "line", "index"):
        if hasattr(exc, attr):
            doc["error"][attr] = getattr(exc, attr)
    return doc


# ---------------------------------------------------------------------------
# Estimation subcommands


def _budget_conf(args) -> tuple[PrivacyBudget, Confidence]:
    return PrivacyBudget(args.epsilon, args.delta), Confidence(args.tau)


def _load_data(args) -> Sample:
    if args.input is None and args.dist is None:
        raise ValueError("either --input or --dist is required")
    if args.input is not None and args.dist is not None:
        raise ValueError("--input and --dist are mutually exclusive")
    if args.input is not None:
        return ingest(args.input, args.format)
    if args.n is None:
        raise ValueError("--dist needs --n for the number of draws")
    spec = parse_dist_spec(args.dist)
    return simlab.generate(spec, args.n, NoiseSource(args.seed, stream_id=1))


def _report_doc(args, report: DpEstimateReport, n: int, extra: dict) -> dict:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "command": args.command,
        "seed": args.seed,
        "n": n,
        "epsilon": args.epsilon,
        "delta": args.delta,
        "tau": args.tau,
        "eta": report.eta_used,
        "C": report.C_used,
        "theoretical_bound": report.theoretical_bound,
        "preconditions": [
            {"name": c.name, "satisfied": c.satisfied, "margin": c.margin}
            for c in report.precondition_checks
        ],
        "result": "no_reply" if report.outcome.is_no_reply else report.outcome.value,
    }
    doc.update(extra)
    return doc


def _finish(args, report: DpEstimateReport, n: int, extra: dict) -> int:
    _emit(_report_doc(args, report, n, extra), args.out_format, args.out)
    return EXIT_NO_REPLY if report.outcome.is_no_reply else EXIT_OK


def cmd_median(args) -> int:
    budget, conf = _budget_conf(args)
    if args.r is None or args.L is None:
        raise ValueError("median needs explicit --r and --L")
    profile = MedianProfile(r=args.r, L=args.L)
    data = _load_data(args)
    report = dp_median(data, profile, budget, conf, NoiseSource(args.seed))
    return _finish(args, report, data.n, {"r": args.r, "L": args.L})


def _moment_args(args) -> MomentProfile:
    if args.sigma is None or args.rho is None:
        raise ValueError("mean estimation needs explicit --sigma and --rho")
    if args.K is None:
        raise ValueError("mean estimation needs --K")
    return MomentProfile(mu=0.0, sigma=args.sigma, rho=args.rho)


def cmd_mean(args) -> int:
    budget, conf = _budget_conf(args)
    profile = _moment_args(args)
    data = _load_data(args)
    report = dp_mom(data, profile, args.K, budget, conf, NoiseSource(args.seed))
    return _finish(
        args, report, data.n, {"K": args.K, "sigma": args.sigma, "rho": args.rho}
    )


def cmd_mean_density(args) -> int:
    budget, conf = _budget_conf(args)
    profile = _moment_args(args)
    data = _load_data(args)
    report = dp_mom_density(data, profile, args.K, budget, conf, NoiseSource(args.seed))
    return _finish(
        args, report, data.n, {"K": args.K, "sigma": args.sigma, "rho": args.rho}
    )


# ---------------------------------------------------------------------------
# Simulation and audit subcommands


def cmd_simulate(args) -> int:
    from . import plots

    budget, conf = _budget_conf(args)
    spec = parse_dist_spec(args.dist)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.experiment == "coverage":
        if args.n is None:
            raise ValueError("coverage needs --n")
        report = simlab.run_coverage(
            spec,
            args.estimator,
            args.n,
            budget,
            conf,
            trials=args.trials,
            seed=args.seed,
            k_blocks=args.K,
        )
        doc = {"schema_version": SCHEMA_VERSION, "experiment": "coverage"}
        doc.update(report.to_json_dict())
        (out_dir / "report.json").write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")
        rows = [
            (tau, report.error_quantiles[tau], *report.error_quantile_cis[tau])
            for tau in sorted(report.error_quantiles)
        ]
        write_plot_csv(out_dir / "coverage_quantiles.csv", rows)
        write_plot_csv(
            out_dir / "coverage_rates.csv",
            [
                (0, report.coverage_rate, *report.coverage_ci),
                (1, report.noreply_rate, *report.noreply_ci),
            ],
        )
        plots.save_coverage_figure(report, out_dir / "coverage.png")
    else:
        n_grid = [int(v) for v in args.n_grid.split(",")]
        k_grid = [int(v) for v in args.k_grid.split(",")] if args.k_grid else None
        tau_grid = [float(v) for v in args.tau_grid.split(",")]
        result = simlab.run_scaling(
            spec,
            args.estimator,
            n_grid,
            tau_grid,
            budget,
            conf,
            trials=args.trials,
            seed=args.seed,
            k_grid=k_grid,
        )
        doc = {"schema_version": SCHEMA_VERSION, "experiment": "scaling"}
        doc.update(result.to_json_dict())
        (out_dir / "report.json").write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")
        for tau in tau_grid:
            rows = [
                (r.n, r.quantile, r.lower, r.upper)
                for r in result.rows
                if r.tau == tau
            ]
            write_plot_csv(out_dir / f"scaling_quantiles_tau{tau}.csv", rows)
        bound_rows = [
            (r.n, r.bound.privacy, r.bound.privacy, r.bound.privacy)
            for r in result.rows
            if r.tau == tau_grid[0] and r.bound is not None
        ]
        if bound_rows:
            write_plot_csv(out_dir / "scaling_bound_privacy.csv", bound_rows)
        plots.save_scaling_figure(result, out_dir / "scaling.png")
    print(f"wrote {args.experiment} outputs to {out_dir}", file=sys.stderr)
    return EXIT_OK


AUDIT_CASES = {
    "laplace-global": lambda budget, conf: simlab.laplace_global_case(budget),
    "ptr-cliff": simlab.ptr_cliff_case,
    "ptr-boundary": simlab.ptr_boundary_case,
}


def cmd_audit(args) -> int:
    from . import plots

    budget, conf = _budget_conf(args)
    case = AUDIT_CASES[args.case](budget, conf)
    result = simlab.run_audit_case(case, trials=args.trials, seed=args.seed)
    doc = {
        "schema_version": SCHEMA_VERSION,
        "command": "audit",
        "case": case.name,
        "guarantee_eps": case.guarantee_eps,
    }
    doc.update(result.to_json_dict())
    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "audit.json").write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")
        total = result.trials
        for label, counts in (
            ("x", result.counts_x),
            ("x_prime", result.counts_x_prime),
        ):
            rows = [
                (i, c / total, *simlab.binomial_ci(int(c), total))
                for i, c in enumerate(counts)
            ]
            write_plot_csv(out_dir / f"audit_{label}.csv", rows)
        plots.save_audit_figure(result, out_dir / "audit.png")
        print(f"wrote audit outputs to {out_dir}", file=sys.stderr)
    else:
        sys.stdout.write(json.dumps(doc, sort_keys=True, indent=2) + "\n")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--epsilon", type=float, required=True, help="privacy budget epsilon > 0")
    p.add_argument("--delta", type=float, required=True, help="privacy slack delta in (0,1)")
    p.add_argument("--tau", type=float, required=True, help="failure level tau in (0,1)")
    p.add_argument("--seed", type=int, default=0, help="noise seed (fixed seed => identical output)")


def _add_io(p: argparse.ArgumentParser):
    p.add_argument("--input", help="input dataset path")
    p.add_argument("--format", choices=["csv", "json-lines"], default="csv", help="input format")
    p.add_argument("--dist", help="synthetic data spec, e.g. normal:0:1 (instead of --input)")
    p.add_argument("--n", type=int, help="number of synthetic draws (with --dist)")
    p.add_argument("--out", help="write the output document here instead of stdout")
    p.add_argument("--out-format", choices=["json", "csv"], default="json", help="output document format")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ptrloc",
        description="Differentially private median and mean estimation via propose-test-release.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("median", help="private median of a dataset")
    _add_common(p)
    _add_io(p)
    p.add_argument("--r", type=float, help="density-floor half width around the median")
    p.add_argument("--L", type=float, help="density lower bound on [m-r, m+r]")
    p.set_defaults(handler=cmd_median)

    for name, handler, help_text in (
        ("mean", cmd_mean, "private mean via median of block means"),
        ("mean-density", cmd_mean_density, "private mean, density-regime calibration"),
    ):
        p = sub.add_parser(name, help=help_text)
        _add_common(p)
        _add_io(p)
        p.add_argument("--sigma", type=float, help="standard deviation of the data")
        p.add_argument("--rho", type=float, help="cube root of E|X-mu|^3")
        p.add_argument("--K", type=int, help="number of blocks")
        p.set_defaults(handler=handler)

    p = sub.add_parser("simulate", help="coverage / scaling experiments")
    _add_common(p)
    p.add_argument("--experiment", choices=["coverage", "scaling"], required=True)
    p.add_argument(
        "--estimator",
        choices=["median", "mom", "mom_density", "median_raw", "mom_raw"],
        required=True,
    )
    p.add_argument("--dist", required=True, help="distribution spec, e.g. normal:0:1")
    p.add_argument("--n", type=int, help="sample size (coverage)")
    p.add_argument("--K", type=int, help="block count (mom estimators, coverage)")
    p.add_argument("--n-grid", help="comma-separated n values (scaling)")
    p.add_argument("--k-grid", help="comma-separated K values (scaling)")
    p.add_argument("--tau-grid", default="0.1,0.01", help="comma-separated tau values (scaling)")
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(handler=cmd_simulate)

    p = sub.add_parser("audit", help="empirical privacy-loss estimate on preset neighbours")
    _add_common(p)
    p.add_argument("--case", choices=sorted(AUDIT_CASES), required=True)
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--out", help="output directory (figures + JSON); default prints JSON")
    p.set_defaults(handler=cmd_audit)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except (PtrlocError, ValueError) as exc:
        # Machine-readable error on stdout, human-readable on stderr.
        sys.stdout.write(json.dumps(_error_doc(exc), sort_keys=True, indent=2) + "\n")
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
