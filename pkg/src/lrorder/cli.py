"""Command-line interface.

Subcommands:

* ``test``      full analysis of a CSV table: both MLEs, chi-bar weights,
                the T/S statistic grid with asymptotic p-values, and the
                0.05 chi-bar quantile (JSON or aligned text).
* ``weights``   Monte Carlo chi-bar weights for a table, as JSON.
* ``mle``       the two fits with active set and KKT residual, as JSON.
* ``simulate``  the size/power study, as CSV.

Exit codes: 0 success, 2 input error, 3 numerical failure, 4 bad
configuration.  All reports embed the seed/replication counts needed to
reproduce them, and identical seeds give byte-identical output.
"""

from __future__ import annotations

import argparse
import hashlib
import sys

from . import __version__
from .chibar import (
    chibar_pvalue,
    chibar_quantile,
    estimate_weights,
    weights_from_json,
    weights_to_json,
)
from .divergence import (
    DEFAULT_LAMBDAS,
    PowerDivergence,
    TestOutcome,
    lambda_label,
    parse_lambda,
    statistic_S,
    statistic_T,
)
from .errors import (
    ConfigError,
    InputDataError,
    LrOrderError,
    NonIdentifiable,
    NumericalError,
)
from .estimate import kkt_residual, mle_h0, mle_h1
from .jsonio import dump_json
from .simulate import (
    SCENARIOS,
    SimulationConfig,
    relative_efficiencies,
    run_study,
)
from .tables import read_table_csv, relative_frequencies

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERICAL = 3
EXIT_CONFIG = 4


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems with the config exit code."""

    def error(self, message):
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _parse_lambdas(text: str):
    try:
        return tuple(parse_lambda(tok) for tok in text.split(",") if tok.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"bad lambda list {text!r}: {exc}") from exc


def _sha256(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        digest.update(fh.read())
    return digest.hexdigest()


def _write_output(text: str, out_path):
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def analyze_table(
    table,
    lambdas=DEFAULT_LAMBDAS,
    weights=None,
    weight_reps: int = 1_000_000,
    seed: int = 0,
    zero_cell_correction: bool = False,
    workers: int = 1,
):
    """Run the full pipeline on one table.

    Returns (report dict, weights); the dict carries everything needed to
    reproduce the run.
    """
    fit = mle_h1(table, zero_cell_correction=zero_cell_correction)
    analyzed = table.corrected(0.5) if fit.corrected else table
    theta_hat, h0_model = mle_h0(analyzed)
    p_bar = relative_frequencies(analyzed).p
    n = analyzed.n

    if weights is None:
        nu = analyzed.row_totals / n
        pi_hat = analyzed.column_totals / n
        weights = estimate_weights(nu, pi_hat, reps=weight_reps, seed=seed, workers=workers)

    outcomes = []
    for lam in lambdas:
        spec = PowerDivergence(lam)
        label = lambda_label(lam)
        for family, value in (
            ("T", statistic_T(p_bar, fit.fitted.p, h0_model.p, n, spec)),
            ("S", statistic_S(fit.fitted.p, h0_model.p, n, spec)),
        ):
            outcomes.append(
                TestOutcome(
                    family=family,
                    lam=float(lam),
                    label=label,
                    statistic=float(value),
                    p_value=chibar_pvalue(value, weights),
                    weights_ref=weights.ref,
                )
            )
    try:
        quantile_05 = chibar_quantile(0.05, weights)
    except NonIdentifiable:
        quantile_05 = None

    report = {
        "version": __version__,
        "input": {
            "rows": table.n_rows,
            "cols": table.n_cols,
            "n": float(table.n),
            "zero_cell_correction_applied": fit.corrected,
        },
        "config": {
            "lambdas": [lambda_label(lm) for lm in lambdas],
            "weight_reps": weights.reps,
            "seed": weights.seed,
            "weights_source": weights.source,
        },
        "theta_hat": {
            "theta2": list(theta_hat.theta2),
            "theta12": list(theta_hat.theta12),
        },
        "theta_tilde": {
            "theta2": list(fit.theta.theta2),
            "theta12": list(fit.theta.theta12),
        },
        "p_bar": list(p_bar),
        "p_hat": list(h0_model.p),
        "p_tilde": list(fit.fitted.p),
        "active_set": list(fit.active_set),
        "kkt_residual": fit.kkt_residual,
        "weights": {
            "dims": {"I": weights.n_rows, "J": weights.n_cols},
            "w": list(weights.w),
            "reps": weights.reps,
            "seed": weights.seed,
            "source": weights.source,
        },
        "tests": [
            {
                "family": o.family,
                "lambda": o.label,
                "statistic": o.statistic,
                "p_value": o.p_value,
                "weights_ref": o.weights_ref,
            }
            for o in outcomes
        ],
        "quantile_05": quantile_05,
    }
    return report, weights


def _render_table(report: dict) -> str:
    """Aligned text rendering of the statistic grid."""
    labels = report["config"]["lambdas"]
    by_key = {(t["family"], t["lambda"]): t for t in report["tests"]}
    width = max(10, *(len(lab) + 2 for lab in labels))
    head = "statistic".ljust(12) + "".join(f"{lab:>{width}}" for lab in labels)
    lines = [head, "-" * len(head)]
    for family in ("T", "S"):
        stat_row = f"{family}_lambda".ljust(12)
        p_row = f"p({family})".ljust(12)
        for lab in labels:
            cell = by_key[(family, lab)]
            stat_row += f"{cell['statistic']:>{width}.4f}"
            p_row += f"{cell['p_value']:>{width}.4f}"
        lines.extend([stat_row, p_row])
    if report["quantile_05"] is not None:
        lines.append(f"chi-bar 0.05 quantile: {report['quantile_05']:.4f}")
    return "\n".join(lines) + "\n"


def cmd_test(args) -> int:
    table = read_table_csv(args.input)
    weights = None
    if args.weights_file:
        with open(args.weights_file, "r", encoding="utf-8") as fh:
            weights = weights_from_json(fh.read())
    report, _ = analyze_table(
        table,
        lambdas=_parse_lambdas(args.lambdas),
        weights=weights,
        weight_reps=args.weights_reps,
        seed=args.seed,
        zero_cell_correction=args.zero_cell_correction,
        workers=args.workers,
    )
    report["input"]["path"] = args.input
    report["input"]["sha256"] = _sha256(args.input)
    if args.format == "table":
        _write_output(_render_table(report), args.out)
    else:
        _write_output(dump_json(report), args.out)
    return EXIT_OK


def cmd_weights(args) -> int:
    table = read_table_csv(args.input)
    nu = table.row_totals / table.n
    pi_hat = table.column_totals / table.n
    weights = estimate_weights(
        nu, pi_hat, reps=args.weights_reps, seed=args.seed, workers=args.workers
    )
    _write_output(weights_to_json(weights), args.out)
    return EXIT_OK


def cmd_mle(args) -> int:
    table = read_table_csv(args.input)
    fit = mle_h1(table, zero_cell_correction=args.zero_cell_correction)
    analyzed = table.corrected(0.5) if fit.corrected else table
    theta_hat, h0_model = mle_h0(analyzed)
    doc = {
        "version": __version__,
        "input": {"path": args.input, "sha256": _sha256(args.input)},
        "zero_cell_correction_applied": fit.corrected,
        "theta_hat": {
            "theta2": list(theta_hat.theta2),
            "theta12": list(theta_hat.theta12),
        },
        "theta_tilde": {
            "theta2": list(fit.theta.theta2),
            "theta12": list(fit.theta.theta12),
        },
        "p_hat": list(h0_model.p),
        "p_tilde": list(fit.fitted.p),
        "active_set": list(fit.active_set),
        "multipliers": list(fit.multipliers),
        "kkt_residual": kkt_residual(table, fit),
        "iterations": fit.iterations,
        "converged": fit.converged,
    }
    _write_output(dump_json(doc), args.out)
    return EXIT_OK


def cmd_simulate(args) -> int:
    if args.sizes:
        try:
            sizes = tuple(
                tuple(int(tok) for tok in group.split(","))
                for group in args.sizes.split(";")
            )
        except ValueError as exc:
            raise ConfigError(f"bad --sizes {args.sizes!r}") from exc
    else:
        try:
            scenario_ids = [int(tok) for tok in args.scenario.split(",") if tok.strip()]
        except ValueError as exc:
            raise ConfigError(f"bad --scenario {args.scenario!r}") from exc
        unknown = [s for s in scenario_ids if s not in SCENARIOS]
        if unknown:
            raise ConfigError(f"unknown scenario presets {unknown}")
        sizes = tuple(SCENARIOS[s] for s in scenario_ids)
    try:
        deltas = tuple(float(tok) for tok in args.delta.split(",") if tok.strip())
    except ValueError as exc:
        raise ConfigError(f"bad --delta {args.delta!r}") from exc
    config = SimulationConfig(
        scenario_sizes=sizes,
        deltas=deltas,
        lambdas=_parse_lambdas(args.lambdas),
        alpha=args.alpha,
        reps=args.reps,
        weight_reps=args.weights_reps,
        seed=args.seed,
        workers=args.workers,
    )
    report = run_study(config)
    t0, s1 = lambda_label(0.0), lambda_label(1.0)
    has_baselines = (
        0.0 in config.deltas
        and any(lambda_label(lm) == t0 for lm in config.lambdas)
        and any(lambda_label(lm) == s1 for lm in config.lambdas)
    )
    if has_baselines:
        report = relative_efficiencies(report)
    _write_output(report.to_csv(), args.out)
    corrections = sum(report.corrections.values())
    resamples = sum(report.resamples.values())
    print(
        f"simulate: {config.reps} replications/cell, {resamples} resampled "
        f"degenerate tables, {corrections} zero-cell corrections",
        file=sys.stderr,
    )
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(
        prog="lrorder",
        description="Tests of homogeneity against likelihood-ratio ordering "
        "for independent multinomial samples.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, with_input=True):
        if with_input:
            p.add_argument("--input", required=True, help="CSV table path")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default=None, help="output path (default stdout)")
        p.add_argument("--workers", type=int, default=1)

    p_test = sub.add_parser("test", help="statistics and p-values for a table")
    common(p_test)
    p_test.add_argument("--lambda", dest="lambdas", default="-1.5,-1,-0.5,0,2/3,1,1.5,2")
    p_test.add_argument("--weights-reps", type=int, default=1_000_000)
    p_test.add_argument("--weights-file", default=None, help="reuse precomputed weights JSON")
    p_test.add_argument("--zero-cell-correction", action="store_true")
    p_test.add_argument("--format", choices=("json", "table"), default="json")
    p_test.set_defaults(func=cmd_test)

    p_w = sub.add_parser("weights", help="Monte Carlo chi-bar weights")
    common(p_w)
    p_w.add_argument("--weights-reps", type=int, default=1_000_000)
    p_w.set_defaults(func=cmd_weights)

    p_mle = sub.add_parser("mle", help="homogeneity and order-restricted fits")
    common(p_mle)
    p_mle.add_argument("--zero-cell-correction", action="store_true")
    p_mle.set_defaults(func=cmd_mle)

    p_sim = sub.add_parser("simulate", help="size/power study")
    common(p_sim, with_input=False)
    p_sim.add_argument("--scenario", default="1,2,3,4", help="preset ids, comma separated")
    p_sim.add_argument(
        "--sizes", default=None, help="custom row totals, e.g. '12,18,24,30;16,24,32,40'"
    )
    p_sim.add_argument("--delta", default="0,0.1,0.5,1,1.5")
    p_sim.add_argument("--lambda", dest="lambdas", default="-1.5,-1,-0.5,0,2/3,1,1.5,2")
    p_sim.add_argument("--alpha", type=float, default=0.05)
    p_sim.add_argument("--reps", type=int, default=10_000)
    p_sim.add_argument("--weights-reps", type=int, default=10_000)
    p_sim.set_defaults(func=cmd_simulate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"lrorder: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (InputDataError, OSError) as exc:
        print(f"lrorder: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalError as exc:
        print(f"lrorder: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except LrOrderError as exc:  # anything typed but unclassified
        print(f"lrorder: error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
