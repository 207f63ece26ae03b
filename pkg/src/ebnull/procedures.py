"""Step-up multiple-testing procedures and error metrics.

Implements the Benjamini-Hochberg step-up, its adaptive variant with
Storey's null-proportion estimate, the conditional variant applied to
rescaled p-values at or below a threshold tau, and the discarding variant
whose null-proportion estimate and threshold scan ignore p-values above
tau.  All procedures return the same result record and operate purely on
p-value vectors; no calibration logic lives here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .pvalues import PValueVector, conditional_pvalues


@dataclass(frozen=True)
class RejectionResult:
    """Outcome of one testing procedure on one p-value vector.

    ``rejected`` holds sorted original indices; ``threshold`` is the
    largest p-value (on the original scale) that was rejected, 0.0 when
    nothing was.  ``pi0_hat`` records the null-proportion estimate the
    procedure actually used (1.0 for plain BH).
    """

    rejected: np.ndarray
    threshold: float
    pi0_hat: float
    procedure: str
    q: float
    m: int

    def __post_init__(self):
        idx = np.asarray(self.rejected, dtype=np.intp)
        object.__setattr__(self, "rejected", np.sort(idx))

    @property
    def n_rejected(self) -> int:
        return int(self.rejected.size)

    def mask(self) -> np.ndarray:
        out = np.zeros(self.m, dtype=bool)
        out[self.rejected] = True
        return out


@dataclass(frozen=True)
class ErrorMetrics:
    """False discovery proportion and true positive proportion."""

    fdp: float
    tpp: float


def _values(pvalues) -> np.ndarray:
    if isinstance(pvalues, PValueVector):
        return pvalues.values
    vals = np.asarray(pvalues, dtype=float)
    if vals.ndim != 1:
        raise ValueError("p-values must form a one-dimensional vector")
    return vals


def _check_q(q: float):
    if not (0.0 < q < 1.0):
        raise ValueError("target FDR level q must lie in (0, 1)")


def _step_up(vals: np.ndarray, slope: float) -> float | None:
    """Largest p with p_(k) <= k * slope, or None when no order statistic
    passes (distinct from a passing threshold of exactly 0.0)."""
    m = vals.size
    if m == 0:
        return None
    ordered = np.sort(vals)
    passing = np.flatnonzero(ordered <= slope * np.arange(1, m + 1))
    if passing.size == 0:
        return None
    return float(ordered[passing[-1]])


def _reject_at(vals: np.ndarray, thr: float | None):
    if thr is None:
        return np.empty(0, dtype=np.intp), 0.0
    return np.flatnonzero(vals <= thr), thr


def bh(pvalues, q: float) -> RejectionResult:
    """Benjamini-Hochberg step-up at level q."""
    _check_q(q)
    vals = _values(pvalues)
    m = vals.size
    rejected, thr = _reject_at(vals, _step_up(vals, q / m) if m else None)
    return RejectionResult(
        rejected=rejected, threshold=thr, pi0_hat=1.0, procedure="bh", q=q, m=m
    )


def storey_pi0(pvalues, lam: float = 0.5) -> float:
    """Storey's null-proportion estimate (1 + #{p > lam}) / (m (1 - lam)).

    Returned uncapped; callers that need a proportion clip it themselves.
    """
    if not (0.0 <= lam < 1.0):
        raise ValueError("lambda must lie in [0, 1)")
    vals = _values(pvalues)
    m = vals.size
    if m == 0:
        raise ValueError("cannot estimate pi0 from an empty vector")
    return float((1.0 + (vals > lam).sum()) / (m * (1.0 - lam)))


def storey_bh(pvalues, q: float, lam: float = 0.5) -> RejectionResult:
    """Adaptive BH with Storey's estimate clipped into [1/m, 1]."""
    _check_q(q)
    vals = _values(pvalues)
    m = vals.size
    pi0 = min(max(storey_pi0(vals, lam), 1.0 / m), 1.0)
    rejected, thr = _reject_at(vals, _step_up(vals, q / (m * pi0)))
    return RejectionResult(
        rejected=rejected, threshold=thr, pi0_hat=pi0, procedure="stbh", q=q, m=m
    )


def c_storey_bh(
    pvalues, q: float, tau: float = 0.5, lam: float = 0.5
) -> RejectionResult:
    """Storey-BH on conditionally rescaled p-values p/tau given p <= tau.

    The adaptive step-up runs entirely on the conditioned vector (with its
    own length and pi0 estimate) and rejections are mapped back through
    the recorded source indices, so the rejection set can only contain
    hypotheses with p <= tau.
    """
    _check_q(q)
    vals = _values(pvalues)
    m = vals.size
    cond = conditional_pvalues(vals, tau)
    if len(cond) == 0:
        return RejectionResult(
            rejected=np.empty(0, dtype=np.intp),
            threshold=0.0,
            pi0_hat=1.0,
            procedure="c-stbh",
            q=q,
            m=m,
        )
    inner = storey_bh(cond.values, q, lam)
    rejected = cond.source_indices[inner.rejected]
    return RejectionResult(
        rejected=rejected,
        threshold=inner.threshold * tau,
        pi0_hat=inner.pi0_hat,
        procedure="c-stbh",
        q=q,
        m=m,
    )


def d_storey_bh(
    pvalues, q: float, lam: float = 0.25, tau: float = 0.5
) -> RejectionResult:
    """Discarding variant: estimate pi0 from p in (lam, tau], scan s <= tau.

    The null-proportion estimate (1 + #{lam < p <= tau}) / (m (tau - lam))
    is deliberately left uncapped, and the rejection threshold is the
    largest candidate s in {0} union {p_i <= tau} whose estimated FDP
    m * pi0 * s / max(#{p <= s}, 1) stays at or below q.
    """
    _check_q(q)
    if not (0.0 <= lam < tau <= 1.0):
        raise ValueError("need 0 <= lambda < tau <= 1")
    vals = _values(pvalues)
    m = vals.size
    if m == 0:
        raise ValueError("cannot run the discarding procedure on an empty vector")
    pi0 = float((1.0 + ((vals > lam) & (vals <= tau)).sum()) / (m * (tau - lam)))
    below = np.sort(vals[vals <= tau])
    threshold = 0.0
    if below.size:
        counts = np.searchsorted(below, below, side="right")
        fdp_hat = m * pi0 * below / np.maximum(counts, 1)
        passing = np.flatnonzero(fdp_hat <= q)
        if passing.size:
            threshold = float(below[passing[-1]])
    rejected = np.flatnonzero(vals <= threshold)
    return RejectionResult(
        rejected=rejected,
        threshold=threshold,
        pi0_hat=pi0,
        procedure="d-stbh",
        q=q,
        m=m,
    )


def compute_metrics(result: RejectionResult, truth) -> ErrorMetrics:
    """False discovery and true positive proportions against truth labels.

    ``truth`` is a boolean vector, True for genuine alternatives, with one
    entry per original hypothesis.
    """
    labels = np.asarray(truth, dtype=bool)
    if labels.ndim != 1 or labels.size != result.m:
        raise ValueError(
            f"truth labels have length {labels.size}, expected {result.m}"
        )
    mask = result.mask()
    n_rejected = int(mask.sum())
    false_rej = int((mask & ~labels).sum())
    true_rej = int((mask & labels).sum())
    n_alt = int(labels.sum())
    return ErrorMetrics(
        fdp=false_rej / max(n_rejected, 1),
        tpp=true_rej / max(n_alt, 1),
    )
