"""Monte Carlo size/power study for the order-restricted test.

Truth models are indexed by a shift delta >= 0: row i of the I x J table has
conditional probabilities proportional to 1 + i (j-1) delta, which reduces
to homogeneity at delta = 0 and pushes every local odds ratio above one for
delta > 0.  Each replication samples a product-multinomial table, fits both
MLEs, estimates per-table chi-bar weights, evaluates the full lambda grid
for both statistic families, and tallies rejections at the nominal level.

Sampling is exact: each multinomial row is drawn through sequential
conditional binomials, every binomial by inversion of one uniform.
Replications own independent Philox streams keyed by (seed, scenario,
delta, replication), so results are reproducible bit for bit regardless of
how replications are distributed over workers.

Degenerate tables (an empty response column) are resampled and counted.
Tables with zero cells but intact margins are analyzed after the +0.5
continuity correction (counted separately): negative-lambda statistics are
infinite on zero cells, and uncorrected boundary fits push theta out of its
safe box.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence, Union

import numpy as np
from numpy.random import Generator, Philox, SeedSequence

from .chibar import ChiBarWeights, chibar_pvalue, estimate_weights
from .divergence import (
    DEFAULT_LAMBDAS,
    PowerDivergence,
    lambda_label,
    statistic_S,
    statistic_T,
)
from .errors import ConfigError, MissingBaseline, NegativeDelta
from .estimate import mle_h0, mle_h1
from .tables import ContingencyTable, from_counts, relative_frequencies

#: Row totals of the study's four sample-size scenarios.
SCENARIOS = {
    1: (4, 6, 8, 10),
    2: (8, 12, 16, 20),
    3: (12, 18, 24, 30),
    4: (16, 24, 32, 40),
}

#: Default shift grid (the large-delta outlier is available, not a preset).
DEFAULT_DELTAS = (0.0, 0.1, 0.5, 1.0, 1.5)


def truth_probabilities(delta: float, n_rows: int = 4, n_cols: int = 3) -> np.ndarray:
    """Row-conditional truth probabilities pi_ij proportional to
    1 + i (j-1) delta; rows sum to one exactly."""
    if delta < 0:
        raise NegativeDelta(f"delta must be nonnegative, got {delta}")
    i = np.arange(1, n_rows + 1)[:, None]
    j = np.arange(1, n_cols + 1)[None, :]
    raw = 1.0 + i * (j - 1) * delta
    pis = raw / raw.sum(axis=1, keepdims=True)
    np.testing.assert_allclose(pis.sum(axis=1), 1.0, atol=1e-14)
    return pis


def theoretical_local_odds(delta: float, n_rows: int = 4, n_cols: int = 3) -> np.ndarray:
    """Local odds ratios of the truth model,
    [(1 + i(j-1)d)(1 + (i+1)jd)] / [(1 + (i+1)(j-1)d)(1 + ijd)] >= 1."""
    if delta < 0:
        raise NegativeDelta(f"delta must be nonnegative, got {delta}")
    i = np.arange(1, n_rows)[:, None]
    j = np.arange(1, n_cols)[None, :]
    return ((1 + i * (j - 1) * delta) * (1 + (i + 1) * j * delta)) / (
        (1 + (i + 1) * (j - 1) * delta) * (1 + i * j * delta)
    )


def _binomial_icdf(u: float, n: int, p: float) -> int:
    """Inverse-CDF binomial draw from one uniform (exact inversion).

    The pmf recurrence from x = 0 underflows once n log(1-p) drops below
    the double range; those cases fall back to the beta-function inverse.
    """
    if p <= 0.0 or n == 0:
        return 0
    if p >= 1.0:
        return n
    if n * np.log1p(-p) < -700.0:
        from scipy.stats import binom

        return int(binom.ppf(u, n, p))
    ratio = p / (1.0 - p)
    pmf = (1.0 - p) ** n
    cdf = pmf
    x = 0
    while cdf < u and x < n:
        pmf *= (n - x) / (x + 1.0) * ratio
        x += 1
        cdf += pmf
    return x


def sample_row(pi: Sequence[float], size: int, rng: Generator) -> np.ndarray:
    """One multinomial row via sequential conditional binomials, consuming
    exactly len(pi) - 1 uniforms."""
    pi = np.asarray(pi, dtype=float)
    J = pi.size
    row = np.zeros(J, dtype=np.int64)
    remaining = int(size)
    mass_left = 1.0
    for j in range(J - 1):
        cond = 0.0 if mass_left <= 0 else min(max(pi[j] / mass_left, 0.0), 1.0)
        draw = _binomial_icdf(float(rng.random()), remaining, cond)
        row[j] = draw
        remaining -= draw
        mass_left -= pi[j]
    row[J - 1] = remaining
    return row


def sample_table(pis, sizes, rng: Generator) -> ContingencyTable:
    """Independent multinomial rows with the given sizes."""
    pis = np.atleast_2d(np.asarray(pis, dtype=float))
    counts = np.vstack([sample_row(pis[i], sizes[i], rng) for i in range(pis.shape[0])])
    return from_counts(counts)


def dale_criterion(alpha_hat: float, alpha: float, e: float = 0.35) -> bool:
    """|logit(1 - alpha_hat) - logit(1 - alpha)| <= e."""
    def logit(p: float) -> float:
        return float(np.log(p / (1.0 - p)))

    return abs(logit(1.0 - alpha_hat) - logit(1.0 - alpha)) <= e


@dataclass(frozen=True)
class SimulationConfig:
    """Study configuration; scenario sizes are row-total tuples."""

    scenario_sizes: tuple[tuple[int, ...], ...]
    deltas: tuple[float, ...] = DEFAULT_DELTAS
    lambdas: tuple[Union[float, Fraction], ...] = DEFAULT_LAMBDAS
    alpha: float = 0.05
    reps: int = 10_000
    weight_reps: int = 10_000
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.reps < 1:
            raise ConfigError("reps must be >= 1")
        if self.weight_reps < 1:
            raise ConfigError("weight_reps must be >= 1")
        if not 0.0 < self.alpha <= 1.0:
            raise ConfigError("alpha must lie in (0, 1]")
        if not self.scenario_sizes:
            raise ConfigError("at least one scenario is required")
        for sizes in self.scenario_sizes:
            if len(sizes) < 2 or any(s < 1 for s in sizes):
                raise ConfigError(f"invalid scenario sizes {sizes}")
        if any(d < 0 for d in self.deltas):
            raise ConfigError("deltas must be nonnegative")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    @classmethod
    def presets(cls, scenarios: Sequence[int], **kwargs) -> "SimulationConfig":
        try:
            sizes = tuple(SCENARIOS[s] for s in scenarios)
        except KeyError as exc:
            raise ConfigError(f"unknown scenario preset {exc.args[0]}") from exc
        return cls(scenario_sizes=sizes, **kwargs)


@dataclass
class SizePowerReport:
    """Rejection rates per (scenario index, family, lambda label, delta),
    with Dale screening at delta = 0 and relative local efficiencies
    against the T_0 and S_1 baselines."""

    config: SimulationConfig
    rejection_rates: dict = field(default_factory=dict)
    alpha_hat: dict = field(default_factory=dict)
    dale_pass: dict = field(default_factory=dict)
    rho: dict = field(default_factory=dict)
    rho_star: dict = field(default_factory=dict)
    resamples: dict = field(default_factory=dict)
    corrections: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        """Flat CSV, one row per (scenario, family, lambda, delta) cell."""
        lines = [
            "scenario,family,lambda,delta,rejection_rate,dale_pass,rho,rho_star,resamples"
        ]
        def fmt(x):
            return "" if x is None else format(float(x), ".17g")

        for (sc, fam, lab, delta), rate in self.rejection_rates.items():
            dale = self.dale_pass.get((sc, fam, lab))
            lines.append(
                ",".join(
                    [
                        str(sc),
                        fam,
                        lab,
                        format(float(delta), ".17g"),
                        format(float(rate), ".17g"),
                        "" if dale is None else str(bool(dale)).lower(),
                        fmt(self.rho.get((sc, fam, lab, delta))),
                        fmt(self.rho_star.get((sc, fam, lab, delta))),
                        str(self.resamples.get((sc, delta), 0)),
                    ]
                )
            )
        return "\n".join(lines) + "\n"


def _weight_seed(seed: int, scenario_idx: int, delta_idx: int, table: ContingencyTable) -> int:
    """Deterministic weight-estimation seed from the analyzed table.

    Keyed by the doubled (integer) row and column totals rather than the
    replication index, so identical tables reuse identical weights; this is
    what makes the per-cell weight cache exact.
    """
    cols = tuple(int(round(2 * c)) for c in table.column_totals)
    rows = tuple(int(round(2 * r)) for r in table.row_totals)
    ss = SeedSequence((seed, scenario_idx, delta_idx, 0x57E16875) + cols + rows)
    return int(ss.generate_state(1, np.uint64)[0])


def _replication_rng(seed: int, scenario_idx: int, delta_idx: int, rep: int) -> Generator:
    cell = SeedSequence((seed, scenario_idx, delta_idx, 0x5A3B1E)).generate_state(
        1, np.uint64
    )[0]
    return Generator(Philox(key=np.array([cell, np.uint64(rep)], dtype=np.uint64)))


def _analyze_replication(table, lam_specs, weights: ChiBarWeights, alpha: float):
    """p-value < alpha indicators for both families over the lambda grid."""
    n = table.n
    p_bar = relative_frequencies(table).p
    _, h0_model = mle_h0(table)
    fit = mle_h1(table)  # zero cells were corrected upstream
    rejected = {}
    for lab, spec in lam_specs:
        t_val = statistic_T(p_bar, fit.fitted.p, h0_model.p, n, spec)
        s_val = statistic_S(fit.fitted.p, h0_model.p, n, spec)
        rejected[("T", lab)] = chibar_pvalue(t_val, weights) < alpha
        rejected[("S", lab)] = chibar_pvalue(s_val, weights) < alpha
    return rejected


def run_study(config: SimulationConfig) -> SizePowerReport:
    """Run the full study; deterministic for a fixed (seed, reps,
    weight_reps) independent of the worker count."""
    report = SizePowerReport(config=config)
    lam_specs = [(lambda_label(lm), PowerDivergence(lm)) for lm in config.lambdas]

    for sc_idx, sizes in enumerate(config.scenario_sizes, start=1):
        for d_idx, delta in enumerate(config.deltas):
            pis = truth_probabilities(delta, n_rows=len(sizes))
            tally = {
                (fam, lab): 0 for lab, _ in lam_specs for fam in ("T", "S")
            }
            resamples = 0
            corrections = 0
            weight_cache: dict[tuple, ChiBarWeights] = {}

            def one_rep(rep: int):
                rng = _replication_rng(config.seed, sc_idx, d_idx, rep)
                local_resamples = 0
                while True:
                    table = sample_table(pis, sizes, rng)
                    if (table.column_totals > 0).all():
                        break
                    local_resamples += 1
                corrected = table.has_zero_cell()
                if corrected:
                    table = table.corrected(0.5)
                key = tuple(int(round(2 * c)) for c in table.column_totals) + tuple(
                    int(round(2 * r)) for r in table.row_totals
                )
                weights = weight_cache.get(key)
                if weights is None:
                    nu = table.row_totals / table.n
                    pi_hat = table.column_totals / table.n
                    weights = estimate_weights(
                        nu,
                        pi_hat,
                        reps=config.weight_reps,
                        seed=_weight_seed(config.seed, sc_idx, d_idx, table),
                    )
                    weight_cache[key] = weights
                rejected = _analyze_replication(
                    table, lam_specs, weights, config.alpha
                )
                return rejected, local_resamples, corrected

            if config.workers > 1:
                with ThreadPoolExecutor(max_workers=config.workers) as pool:
                    results = list(pool.map(one_rep, range(config.reps)))
            else:
                results = [one_rep(r) for r in range(config.reps)]

            for rejected, local_resamples, corrected in results:
                resamples += local_resamples
                corrections += int(corrected)
                for key, hit in rejected.items():
                    tally[key] += int(hit)

            for (fam, lab), hits in tally.items():
                rate = hits / config.reps
                report.rejection_rates[(sc_idx, fam, lab, delta)] = rate
                if delta == 0.0:
                    report.alpha_hat[(sc_idx, fam, lab)] = rate
                    report.dale_pass[(sc_idx, fam, lab)] = dale_criterion(
                        rate, config.alpha
                    )
            report.resamples[(sc_idx, delta)] = resamples
            report.corrections[(sc_idx, delta)] = corrections

    return report


def relative_efficiencies(report: SizePowerReport) -> SizePowerReport:
    """Fill size-corrected relative efficiencies against the T_0 and S_1
    baselines: rho = [(beta - alpha_hat) - (beta0 - alpha0)] / (beta0 -
    alpha0).  Cells whose baseline gain is nonpositive stay absent."""
    cfg = report.config
    if 0.0 not in cfg.deltas:
        raise MissingBaseline("delta = 0 rows are required for efficiencies")
    t0_label, s1_label = lambda_label(0.0), lambda_label(1.0)
    scenarios = range(1, len(cfg.scenario_sizes) + 1)
    for sc in scenarios:
        for base_fam, base_lab, target in (
            ("T", t0_label, report.rho),
            ("S", s1_label, report.rho_star),
        ):
            if (sc, base_fam, base_lab) not in report.alpha_hat:
                raise MissingBaseline(
                    f"baseline {base_fam}_{base_lab} missing from the lambda grid"
                )
            alpha0 = report.alpha_hat[(sc, base_fam, base_lab)]
            for delta in cfg.deltas:
                if delta == 0.0:
                    continue
                beta0 = report.rejection_rates[(sc, base_fam, base_lab, delta)]
                gain0 = beta0 - alpha0
                if gain0 <= 0:
                    continue
                for lab, _ in ((lambda_label(lm), lm) for lm in cfg.lambdas):
                    for fam in ("T", "S"):
                        beta = report.rejection_rates[(sc, fam, lab, delta)]
                        a_hat = report.alpha_hat[(sc, fam, lab)]
                        target[(sc, fam, lab, delta)] = (
                            (beta - a_hat) - gain0
                        ) / gain0
    return report
