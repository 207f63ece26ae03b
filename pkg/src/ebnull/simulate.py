"""Synthetic benchmarks for the null-estimation testing pipeline.

Each replication draws m one-sided z-statistics from a two-group mixture:
with probability pi0 the mean comes from a null prior supported on
(-inf, 0], otherwise it sits at a fixed positive alternative location.
The harness runs a configurable set of procedures per replication and
aggregates false-discovery and true-positive rates with Monte Carlo
standard errors.  Everything is deterministic given (scenario, base_seed):
replication r uses the seed sequence (base_seed, r).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

from .distributions import SkewNormalParams, skew_normal_cdf, std_normal_pdf
from .nullmodel import NullModel, StatSample, TruncationRule, null_pdf, select_null
from .procedures import (
    RejectionResult,
    bh,
    c_storey_bh,
    compute_metrics,
    d_storey_bh,
    storey_bh,
)
from .pvalues import eb_pvalues, standard_pvalues

METHOD_NAMES = ("bh", "stbh", "c-stbh", "d-stbh", "proposed")


# ---------------------------------------------------------------------------
# null priors


@dataclass(frozen=True)
class TwoPointPrior:
    """Null means equal to -1 with probability rho, otherwise 0."""

    rho: float

    def __post_init__(self):
        if not (0.0 <= self.rho <= 1.0):
            raise ValueError("rho must lie in [0, 1]")

    name = "two_point"

    @property
    def param(self) -> float:
        return self.rho

    def draw(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return np.where(rng.random(size) < self.rho, -1.0, 0.0)

    def marginal_cdf(self, z):
        """CDF of the z-statistic marginal when the mean follows this prior."""
        arr = np.asarray(z, dtype=float)
        out = self.rho * ndtr(arr + 1.0) + (1.0 - self.rho) * ndtr(arr)
        return float(out) if np.ndim(z) == 0 else out


@dataclass(frozen=True)
class HalfNormalPrior:
    """Null means are minus the absolute value of a N(0, sigma0^2) draw,
    i.e. a centered Gaussian truncated to the non-positive half-line."""

    sigma0: float

    def __post_init__(self):
        if not (np.isfinite(self.sigma0) and self.sigma0 > 0.0):
            raise ValueError("sigma0 must be positive and finite")

    name = "half_normal"

    @property
    def param(self) -> float:
        return self.sigma0

    def draw(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return -np.abs(rng.normal(0.0, self.sigma0, size=size))

    def marginal_cdf(self, z):
        """Closed-form marginal: skew-normal with scale sqrt(1 + sigma0^2)
        and shape -sigma0."""
        params = SkewNormalParams(
            location=0.0,
            scale=math.sqrt(1.0 + self.sigma0**2),
            shape=-self.sigma0,
        )
        return skew_normal_cdf(z, params)


# ---------------------------------------------------------------------------
# scenario and summary records


@dataclass(frozen=True)
class SimScenario:
    """One simulation setting: mixture weights, null prior, alternative."""

    null_prior: TwoPointPrior | HalfNormalPrior
    m: int = 5000
    pi0: float = 0.9
    q: float = 0.1
    alt_mean: float = 3.0
    n_reps: int = 200
    base_seed: int = 0

    def __post_init__(self):
        if self.m < 2:
            raise ValueError("need at least 2 hypotheses")
        if not (0.0 < self.pi0 <= 1.0):
            raise ValueError("pi0 must lie in (0, 1]")
        if not (0.0 < self.q < 1.0):
            raise ValueError("q must lie in (0, 1)")
        if self.n_reps < 1:
            raise ValueError("need at least one replication")
        if self.base_seed < 0:
            raise ValueError("base_seed must be non-negative")


@dataclass(frozen=True)
class MethodSummary:
    """Aggregated error rates for one procedure across replications."""

    fdr: float
    fdr_se: float
    tpr: float
    tpr_se: float


@dataclass(frozen=True)
class SimSummary:
    """Per-method aggregate of a scenario run.

    ``n_reps_used`` counts replications that completed; failed ones are
    dropped from every method's average and tallied in ``n_failures``.
    """

    scenario: SimScenario
    methods: dict = field(default_factory=dict)
    n_reps_requested: int = 0
    n_reps_used: int = 0
    n_failures: int = 0


def generate(scenario: SimScenario, rep_index: int) -> StatSample:
    """Draw one replication of labeled statistics, deterministically.

    The stream is seeded by the pair (base_seed, rep_index); labels are
    drawn first, then null means, then the unit Gaussian noise, so any two
    runs of the same pair agree bit for bit.
    """
    if rep_index < 0:
        raise ValueError("rep_index must be non-negative")
    rng = np.random.default_rng((scenario.base_seed, rep_index))
    m = scenario.m
    is_alt = rng.random(m) < (1.0 - scenario.pi0)
    means = np.full(m, scenario.alt_mean, dtype=float)
    n_null = int((~is_alt).sum())
    means[~is_alt] = scenario.null_prior.draw(rng, n_null)
    values = means + rng.standard_normal(m)
    return StatSample(values=values, is_alt=is_alt)


def _run_methods(
    sample: StatSample,
    q: float,
    methods,
    tau: float,
    lambda_storey: float,
    lambda_discard: float,
    xi_quantile: float,
    mixture_k: int,
) -> dict[str, RejectionResult]:
    p_std = standard_pvalues(sample)
    out: dict[str, RejectionResult] = {}
    for method in methods:
        if method == "bh":
            out[method] = bh(p_std, q)
        elif method == "stbh":
            out[method] = storey_bh(p_std, q, lam=lambda_storey)
        elif method == "c-stbh":
            out[method] = c_storey_bh(p_std, q, tau=tau, lam=lambda_storey)
        elif method == "d-stbh":
            out[method] = d_storey_bh(p_std, q, lam=lambda_discard, tau=tau)
        elif method == "proposed":
            model = select_null(
                sample, TruncationRule(quantile_level=xi_quantile), k=mixture_k
            )
            p_eb = eb_pvalues(sample, model)
            out[method] = storey_bh(p_eb, q, lam=lambda_storey)
        else:
            raise ValueError(f"unknown method {method!r}")
    return out


def run_scenario(
    scenario: SimScenario,
    methods=("stbh", "c-stbh", "d-stbh", "proposed"),
    tau: float = 0.5,
    lambda_storey: float = 0.5,
    lambda_discard: float = 0.25,
    xi_quantile: float = 0.85,
    mixture_k: int = 50,
) -> SimSummary:
    """Run every replication of a scenario and aggregate error rates.

    A replication that raises is dropped for all methods (keeping the
    per-method averages paired) and counted in the summary; results do not
    depend on iteration order beyond the deterministic per-rep seeding.
    """
    methods = tuple(methods)
    for method in methods:
        if method not in METHOD_NAMES:
            raise ValueError(f"unknown method {method!r}")
    rows = {method: ([], []) for method in methods}  # fdp list, tpp list
    failures = 0
    for rep in range(scenario.n_reps):
        sample = generate(scenario, rep)
        try:
            results = _run_methods(
                sample,
                scenario.q,
                methods,
                tau=tau,
                lambda_storey=lambda_storey,
                lambda_discard=lambda_discard,
                xi_quantile=xi_quantile,
                mixture_k=mixture_k,
            )
        except Exception:  # noqa: BLE001 - failed reps are tallied, not fatal
            failures += 1
            continue
        for method, result in results.items():
            metrics = compute_metrics(result, sample.is_alt)
            rows[method][0].append(metrics.fdp)
            rows[method][1].append(metrics.tpp)

    n_used = scenario.n_reps - failures
    summaries = {}
    for method in methods:
        fdps = np.asarray(rows[method][0])
        tpps = np.asarray(rows[method][1])
        if n_used == 0:
            summaries[method] = MethodSummary(math.nan, math.nan, math.nan, math.nan)
            continue
        scale = math.sqrt(n_used) if n_used > 1 else 1.0
        summaries[method] = MethodSummary(
            fdr=float(fdps.mean()),
            fdr_se=float(fdps.std(ddof=1) / scale) if n_used > 1 else 0.0,
            tpr=float(tpps.mean()),
            tpr_se=float(tpps.std(ddof=1) / scale) if n_used > 1 else 0.0,
        )
    return SimSummary(
        scenario=scenario,
        methods=summaries,
        n_reps_requested=scenario.n_reps,
        n_reps_used=n_used,
        n_failures=failures,
    )


# ---------------------------------------------------------------------------
# diagnostics


def pvalue_histogram(pvalues, bins: int = 50) -> np.ndarray:
    """Counts over equal-width bins of [0, 1], right-closed except the first.

    Bin j covers (j/bins, (j+1)/bins] for j >= 1 and [0, 1/bins] for j = 0,
    so boundary values land in the lower bin.  Returns the counts only;
    edges are ``np.linspace(0, 1, bins + 1)``.
    """
    if bins < 1:
        raise ValueError("need at least one bin")
    vals = np.asarray(
        pvalues.values if hasattr(pvalues, "values") else pvalues, dtype=float
    )
    if vals.size == 0:
        return np.zeros(bins, dtype=np.intp)
    if vals.min() < 0.0 or vals.max() > 1.0:
        raise ValueError("p-values must lie in [0, 1]")
    edges = np.linspace(0.0, 1.0, bins + 1)
    idx = np.clip(np.searchsorted(edges, vals, side="left"), 1, bins) - 1
    return np.bincount(idx, minlength=bins).astype(np.intp)


def density_overlay(
    sample, model: NullModel, pi0_hat: float, grid_points: int = 200
):
    """Null-density curves for plotting over a statistic histogram.

    Returns (grid, fitted, standard): an even grid spanning the sample
    range padded by one unit, the fitted null density scaled by pi0_hat,
    and the unit-Gaussian density scaled the same way.
    """
    if grid_points < 2:
        raise ValueError("need at least two grid points")
    values = sample.values if isinstance(sample, StatSample) else np.asarray(
        sample, dtype=float
    )
    grid = np.linspace(values.min() - 1.0, values.max() + 1.0, grid_points)
    fitted = pi0_hat * null_pdf(model, grid)
    standard = pi0_hat * std_normal_pdf(grid)
    return grid, fitted, standard
