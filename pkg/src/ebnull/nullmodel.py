"""Estimation of the marginal null distribution from truncated z-statistics.

One-sided testing with z-scores whose null means may sit below zero makes
the textbook p-value 1 - Phi(z) conservative.  The remedy implemented here
fits the marginal null law F0 on the statistics falling below a data-chosen
cut (where alternatives are rare), then hands the fitted F0 to the p-value
layer.  Three nested families are fitted on the same truncated subsample:

* a shifted Gaussian N(mu0, 1) with mu0 <= 0 (point-mass prior),
* a skew-normal arising from a one-sided Gaussian prior spread sigma0,
* a finite location mixture on a grid of non-positive atoms.

The family with the largest truncated log-likelihood wins; exact ties go to
the simpler family.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special
from scipy.optimize import minimize_scalar

from .distributions import (
    SkewNormalParams,
    mills_ratio,
    skew_normal_cdf,
    skew_normal_pdf,
)

_LOG_2PI = float(np.log(2.0 * np.pi))


# ---------------------------------------------------------------------------
# sample container and truncation rule


@dataclass(frozen=True)
class StatSample:
    """A vector of test statistics with optional ids and truth labels."""

    values: np.ndarray
    ids: tuple[str, ...] | None = None
    is_alt: np.ndarray | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1:
            raise ValueError("statistics must form a one-dimensional vector")
        if values.size == 0:
            raise ValueError("empty statistic vector")
        if not np.all(np.isfinite(values)):
            raise ValueError("statistics must be finite")
        object.__setattr__(self, "values", values)
        if self.ids is not None:
            ids = tuple(str(i) for i in self.ids)
            if len(ids) != values.size:
                raise ValueError("ids length does not match statistics length")
            object.__setattr__(self, "ids", ids)
        if self.is_alt is not None:
            labels = np.asarray(self.is_alt, dtype=bool)
            if labels.shape != values.shape:
                raise ValueError("labels length does not match statistics length")
            object.__setattr__(self, "is_alt", labels)

    def __len__(self):
        return int(self.values.size)


@dataclass(frozen=True)
class TruncationRule:
    """How to choose the truncation cut: a sample quantile or a fixed value.

    Exactly one of ``quantile_level`` and ``explicit_cut`` may be active;
    the default keeps the 0.85 sample quantile.
    """

    quantile_level: float | None = 0.85
    explicit_cut: float | None = None

    def __post_init__(self):
        if self.explicit_cut is not None:
            if not np.isfinite(self.explicit_cut):
                raise ValueError("explicit cut must be finite")
            object.__setattr__(self, "quantile_level", None)
        else:
            lvl = self.quantile_level
            if lvl is None or not (0.0 < lvl < 1.0):
                raise ValueError("quantile level must lie in (0, 1)")


def _as_values(sample) -> np.ndarray:
    if isinstance(sample, StatSample):
        return sample.values
    return StatSample(np.asarray(sample, dtype=float)).values


def resolve_cut(sample, rule: TruncationRule | None = None) -> float:
    """Turn a truncation rule into a concrete cut value for this sample.

    Quantiles use the linear-interpolation convention (numpy's default),
    so the cut is a weighted average of two order statistics.  An explicit
    cut below the sample minimum leaves nothing to fit and is rejected.
    """
    values = _as_values(sample)
    rule = rule or TruncationRule()
    if rule.explicit_cut is not None:
        cut = float(rule.explicit_cut)
        if not np.any(values <= cut):
            raise ValueError("explicit cut lies below every statistic; truncated set is empty")
        return cut
    return float(np.quantile(values, rule.quantile_level))


def _truncated(values: np.ndarray, xi: float) -> np.ndarray:
    z0 = values[values <= xi]
    if z0.size < 2:
        raise ValueError(f"need at least 2 statistics at or below the cut, got {z0.size}")
    return z0


# ---------------------------------------------------------------------------
# fitted-family containers


@dataclass(frozen=True)
class GaussianNull:
    """Shifted Gaussian null N(mu0, 1) with mu0 <= 0."""

    mu0: float
    loglik: float
    iterations: int
    converged: bool


@dataclass(frozen=True)
class SkewNormalNull:
    """Skew-normal null induced by a one-sided Gaussian prior spread sigma0.

    ``eta = log(sigma0)`` is the internal optimization variable;
    ``at_boundary`` flags an estimate pinned at the search-interval edge.
    """

    sigma0: float
    eta: float
    loglik: float
    at_boundary: bool = False

    @property
    def params(self) -> SkewNormalParams:
        return SkewNormalParams(
            location=0.0,
            scale=math.sqrt(1.0 + self.sigma0**2),
            shape=-self.sigma0,
        )


@dataclass(frozen=True)
class MixtureNull:
    """Finite mixture of unit-variance Gaussians on non-positive atoms.

    ``weights_p`` are the mixing weights of the null law itself;
    ``weights_eta`` are the truncation-tilted weights the concave program
    optimizes over (each atom's weight times its chance of landing below
    the cut, renormalized).
    """

    grid: np.ndarray
    weights_p: np.ndarray
    weights_eta: np.ndarray
    loglik: float
    iterations: int
    converged: bool
    kkt_gap: float


@dataclass(frozen=True)
class NullModel:
    """Selected null family plus the truncation context it was fitted under."""

    variant: GaussianNull | SkewNormalNull | MixtureNull
    cut_xi: float
    n_truncated: int
    family_logliks: dict = field(default_factory=dict)

    @property
    def family(self) -> str:
        return _FAMILY_NAMES[type(self.variant)]

    @property
    def loglik(self) -> float:
        return self.variant.loglik

    def cdf(self, z):
        return null_cdf(self, z)

    def pdf(self, z):
        return null_pdf(self, z)


_FAMILY_NAMES = {
    GaussianNull: "gaussian",
    SkewNormalNull: "skew_normal",
    MixtureNull: "mixture",
}


# ---------------------------------------------------------------------------
# Gaussian fit: Newton iteration on the truncated likelihood


def _gaussian_loglik(mu, n, sum_z, sum_zz, xi):
    """Truncated-sample log-likelihood of N(mu, 1); vectorized over mu."""
    mu = np.asarray(mu, dtype=float)
    quad = sum_zz - 2.0 * mu * sum_z + n * mu * mu
    return -0.5 * n * _LOG_2PI - 0.5 * quad - n * special.log_ndtr(xi - mu)


def fit_gaussian(sample, xi: float, tol: float = 1e-8, max_iter: int = 100) -> GaussianNull:
    """Fit the shifted-Gaussian null on the statistics at or below ``xi``.

    Newton iteration on the concave truncated log-likelihood, started at
    the truncated mean.  Iterates are clamped to a generous window and a
    sign-change bracket (once seen) turns wayward Newton proposals into
    bisection steps.  The unconstrained root is clipped to mu0 <= 0 at the
    end.
    """
    z0 = _truncated(_as_values(sample), xi)
    n = z0.size
    zbar = float(z0.mean())
    lo_clamp = float(z0.min()) - 10.0
    hi_clamp = xi + 10.0

    mu = zbar
    bracket_lo = -np.inf
    bracket_hi = np.inf
    iterations = 0
    converged = False
    while iterations < max_iter:
        r = float(mills_ratio(xi - mu))
        grad = n * ((zbar - mu) + r)
        hess = -n * (1.0 + r * ((xi - mu) + r))
        if grad > 0.0:
            bracket_lo = max(bracket_lo, mu)
        elif grad < 0.0:
            bracket_hi = min(bracket_hi, mu)
        if hess >= 0.0:  # cannot happen analytically; fall back to bisection
            cand = mu + (1.0 if grad > 0 else -1.0)
        else:
            cand = mu - grad / hess
        cand = min(max(cand, lo_clamp), hi_clamp)
        if bracket_lo > -np.inf and bracket_hi < np.inf and not (
            bracket_lo <= cand <= bracket_hi
        ):
            cand = 0.5 * (bracket_lo + bracket_hi)
        iterations += 1
        if abs(cand - mu) < tol:
            mu = cand
            converged = True
            break
        mu = cand

    if converged:
        grad = n * ((zbar - mu) + float(mills_ratio(xi - mu)))
        if abs(grad) > tol * n:  # stuck on a clamp, not an actual root
            converged = False

    mu0 = min(mu, 0.0)
    sum_z = float(z0.sum())
    sum_zz = float((z0 * z0).sum())
    loglik = float(_gaussian_loglik(mu0, n, sum_z, sum_zz, xi))
    return GaussianNull(mu0=mu0, loglik=loglik, iterations=iterations, converged=converged)


# ---------------------------------------------------------------------------
# skew-normal fit: bounded scalar search over eta = log(sigma0)


def _skew_loglik(eta, z0, xi, n, sum_zz):
    sigma0 = math.exp(eta)
    omega = math.sqrt(1.0 + sigma0 * sigma0)
    # sum of log pdf terms; the squared part collapses to a sufficient stat
    ll = (
        n * (math.log(2.0) - math.log(omega))
        - 0.5 * n * _LOG_2PI
        - 0.5 * sum_zz / (omega * omega)
        + float(special.log_ndtr(-sigma0 * z0 / omega).sum())
    )
    h = xi / omega
    cdf_xi = float(special.ndtr(h) - 2.0 * special.owens_t(h, -sigma0))
    cdf_xi = min(max(cdf_xi, 1e-300), 1.0)
    return ll - n * math.log(cdf_xi)


def fit_skew_normal(
    sample, xi: float, eta_min: float = -6.0, eta_max: float = 3.0
) -> SkewNormalNull:
    """Fit the skew-normal null by maximizing over eta = log(sigma0).

    Bounded Brent search on the negated truncated log-likelihood; the two
    interval endpoints are evaluated explicitly afterwards so a boundary
    optimum is returned exactly rather than to within the search tolerance.
    """
    if eta_min >= eta_max:
        raise ValueError("eta_min must be below eta_max")
    z0 = _truncated(_as_values(sample), xi)
    n = z0.size
    sum_zz = float((z0 * z0).sum())

    def neg(eta):
        return -_skew_loglik(eta, z0, xi, n, sum_zz)

    res = minimize_scalar(neg, bounds=(eta_min, eta_max), method="bounded",
                          options={"xatol": 1e-6})
    candidates = [(float(res.x), -float(res.fun))]
    for edge in (eta_min, eta_max):
        candidates.append((edge, _skew_loglik(edge, z0, xi, n, sum_zz)))
    eta, loglik = max(candidates, key=lambda pair: pair[1])
    at_boundary = eta in (eta_min, eta_max) or min(
        eta - eta_min, eta_max - eta
    ) < 1e-5 * (eta_max - eta_min)
    return SkewNormalNull(
        sigma0=math.exp(eta), eta=eta, loglik=loglik, at_boundary=at_boundary
    )


# ---------------------------------------------------------------------------
# mixture fit: concave weight optimization on a fixed atom grid


def _mixture_columns(z0, xi, grid):
    """Per-observation, per-atom truncated density columns, row-shifted.

    Returns (A, row_shift) with A[i, k] = exp(L[i, k] - row_shift[i]) where
    L[i, k] = log phi(z_i - mu_k) - log Phi(xi - mu_k).  The shift keeps the
    rows well scaled; log-likelihoods add sum(row_shift) back.
    """
    diffs = z0[:, None] - grid[None, :]
    logcols = -0.5 * (_LOG_2PI + diffs * diffs) - special.log_ndtr(xi - grid)[None, :]
    shift = logcols.max(axis=1)
    return np.exp(logcols - shift[:, None]), shift


def _em_update(A, eta, d=None):
    if d is None:
        d = A @ eta
    return eta * (A.T @ (1.0 / d)) / A.shape[0]


def _qp_step_simplex(g, H, w0, max_inner=200):
    """Maximize the quadratic model g'(w - w0) + 0.5 (w - w0)' H (w - w0)
    over the simplex, by an active-set sweep on the nonnegativity bounds.
    """
    k = w0.size
    w = w0.copy()
    free = w > 0.0
    if not free.any():
        free[int(np.argmax(g))] = True
    ridge = 1e-10 * (abs(float(np.trace(H))) / k + 1.0)
    for _ in range(max_inner):
        idx = np.flatnonzero(free)
        nf = idx.size
        kkt = np.empty((nf + 1, nf + 1))
        kkt[:nf, :nf] = H[np.ix_(idx, idx)] - ridge * np.eye(nf)
        kkt[:nf, nf] = 1.0
        kkt[nf, :nf] = 1.0
        kkt[nf, nf] = 0.0
        grad_model = g + H @ (w - w0)
        rhs = np.zeros(nf + 1)
        rhs[:nf] = -grad_model[idx]
        try:
            sol = np.linalg.solve(kkt, rhs)
        except np.linalg.LinAlgError:
            sol = np.linalg.lstsq(kkt, rhs, rcond=None)[0]
        delta = np.zeros(k)
        delta[idx] = sol[:nf]
        nu = sol[nf]
        if np.max(np.abs(delta)) < 1e-14:
            # optimal on the free set; look for a bound worth releasing
            mults = grad_model - nu
            blocked = np.flatnonzero(~free & (mults > 1e-10))
            if blocked.size == 0:
                break
            free[blocked[np.argmax(mults[blocked])]] = True
            continue
        shrinking = free & (delta < 0.0)
        t = 1.0
        hit = None
        if shrinking.any():
            ratios = -w[shrinking] / delta[shrinking]
            j = int(np.argmin(ratios))
            if ratios[j] < 1.0:
                t = float(ratios[j])
                hit = np.flatnonzero(shrinking)[j]
        w = np.maximum(w + t * delta, 0.0)
        if hit is not None:
            w[hit] = 0.0
            free[hit] = False
    total = w.sum()
    return w / total if total > 0 else w0


def _solve_weights_newton(A, tol, tol_gap, max_iter, warm):
    """EM warm start, then support-Newton steps with a gap certificate.

    The certificate is the largest directional derivative of adding any
    atom; it bounds the remaining objective gap, so ``converged`` means
    provably within ``tol_gap`` of the global optimum.  Objective-change
    stalls (three in a row below ``tol``) stop the loop early.
    """
    n, K = A.shape
    eta = np.full(K, 1.0 / K)
    d = A @ eta
    obj = float(np.log(d).sum())
    iterations = 0
    gap = np.inf
    converged = False
    stalls = 0
    while iterations < max_iter:
        if iterations < warm:
            eta = _em_update(A, eta, d)
            d = A @ eta
            obj = float(np.log(d).sum())
            iterations += 1
            continue
        u = 1.0 / d
        g_full = A.T @ u
        gap = float(g_full.max()) - n
        if gap <= tol_gap:
            converged = True
            break
        support = np.flatnonzero(eta > 0.0)
        best_new = int(np.argmax(g_full))
        if eta[best_new] == 0.0:
            support = np.sort(np.append(support, best_new))
        cols = A[:, support]
        w0 = eta[support]
        hess = -(cols * (u * u)[:, None]).T @ cols
        w_star = _qp_step_simplex(g_full[support], hess, w0)
        direction = w_star - w0
        move = cols @ direction
        step = 1.0
        new_eta = None
        for _ in range(40):
            d_try = d + step * move
            if d_try.min() > 0.0 and float(np.log(d_try).sum()) > obj:
                cand = np.zeros(K)
                cand[support] = np.maximum(w0 + step * direction, 0.0)
                cand /= cand.sum()
                d_cand = A @ cand
                obj_cand = float(np.log(d_cand).sum())
                if obj_cand > obj:
                    new_eta, new_d, new_obj = cand, d_cand, obj_cand
                    break
            step *= 0.5
        if new_eta is None:
            new_eta = _em_update(A, eta, d)
            new_d = A @ new_eta
            new_obj = float(np.log(new_d).sum())
        iterations += 1
        stalls = stalls + 1 if abs(new_obj - obj) < tol else 0
        eta, d, obj = new_eta, new_d, new_obj
        if stalls >= 3:
            gap = float((A.T @ (1.0 / d)).max()) - n
            converged = gap <= tol_gap
            break
    else:
        gap = float((A.T @ (1.0 / d)).max()) - n
        converged = gap <= tol_gap
    return eta, obj, iterations, gap, converged


def _solve_weights_em(A, tol, max_iter):
    """Plain multiplicative (EM) ascent; the reference solver."""
    n, K = A.shape
    eta = np.full(K, 1.0 / K)
    d = A @ eta
    obj = float(np.log(d).sum())
    iterations = 0
    converged = False
    while iterations < max_iter:
        eta = _em_update(A, eta, d)
        d = A @ eta
        new_obj = float(np.log(d).sum())
        iterations += 1
        if abs(new_obj - obj) < tol:
            obj = new_obj
            converged = True
            break
        obj = new_obj
    gap = float((A.T @ (1.0 / d)).max()) - n
    return eta, obj, iterations, gap, converged


def fit_mixture(
    sample,
    xi: float,
    k: int = 50,
    grid: np.ndarray | None = None,
    tol: float = 1e-9,
    max_iter: int = 10000,
    solver: str = "newton",
) -> MixtureNull:
    """Fit mixture weights on a fixed grid of non-positive atoms.

    The default grid places ``k`` equally spaced atoms from the sample
    minimum up to 0.  The optimization runs in the truncation-tilted
    weight coordinates (a concave program over the simplex); the plain
    mixing weights are recovered by undoing the tilt.

    solver="newton" (default) polishes an EM warm start with active-set
    Newton steps and certifies optimality through the gradient gap;
    solver="em" is the plain multiplicative ascent run to an objective
    change below ``tol`` or ``max_iter`` sweeps.
    """
    values = _as_values(sample)
    z0 = _truncated(values, xi)
    if grid is None:
        if k < 2:
            raise ValueError("need at least 2 grid atoms")
        grid = np.linspace(min(float(values.min()), 0.0), 0.0, k)
    else:
        grid = np.asarray(grid, dtype=float)
        if grid.ndim != 1 or grid.size < 2:
            raise ValueError("grid must be a 1-d array with at least 2 atoms")
        if np.any(np.diff(grid) < 0.0):
            raise ValueError("grid atoms must be sorted ascending")
        if np.any(grid > 0.0):
            raise ValueError("grid atoms must be non-positive")
    if solver not in ("newton", "em"):
        raise ValueError(f"unknown solver {solver!r}")

    A, row_shift = _mixture_columns(z0, xi, grid)
    if solver == "newton":
        eta, obj, iterations, gap, converged = _solve_weights_newton(
            A, tol=tol, tol_gap=1e-7, max_iter=max_iter, warm=25
        )
    else:
        eta, obj, iterations, gap, converged = _solve_weights_em(
            A, tol=tol, max_iter=max_iter
        )
    loglik = obj + float(row_shift.sum())

    # undo the truncation tilt: eta_k  propto  p_k * Phi(xi - mu_k)
    untilted = eta / special.ndtr(xi - grid)
    weights_p = untilted / untilted.sum()
    return MixtureNull(
        grid=grid,
        weights_p=weights_p,
        weights_eta=eta,
        loglik=float(loglik),
        iterations=iterations,
        converged=converged,
        kkt_gap=float(gap),
    )


# ---------------------------------------------------------------------------
# family selection and the fitted null law


def select_null(sample, rule: TruncationRule | None = None, k: int = 50) -> NullModel:
    """Fit all three null families on the same truncated subsample and keep
    the one with the largest log-likelihood (simpler family wins exact ties).

    Individual fit failures are tolerated as long as at least one family
    fits; every failure is recorded as ``None`` in ``family_logliks``.
    """
    values = _as_values(sample)
    xi = resolve_cut(values, rule)
    n_truncated = int((values <= xi).sum())

    fits: dict[str, GaussianNull | SkewNormalNull | MixtureNull | None] = {}
    errors: dict[str, str] = {}
    for name, fitter in (
        ("gaussian", lambda: fit_gaussian(values, xi)),
        ("skew_normal", lambda: fit_skew_normal(values, xi)),
        ("mixture", lambda: fit_mixture(values, xi, k=k)),
    ):
        try:
            fits[name] = fitter()
        except Exception as exc:  # noqa: BLE001 - survivors carry the selection
            fits[name] = None
            errors[name] = str(exc)

    best = None
    for name in ("gaussian", "skew_normal", "mixture"):
        fit = fits[name]
        if fit is None:
            continue
        if best is None or fit.loglik > best.loglik:
            best = fit
    if best is None:
        details = "; ".join(f"{k}: {v}" for k, v in errors.items())
        raise RuntimeError(f"all null-family fits failed ({details})")

    logliks = {
        name: (None if fit is None else float(fit.loglik))
        for name, fit in fits.items()
    }
    return NullModel(
        variant=best, cut_xi=xi, n_truncated=n_truncated, family_logliks=logliks
    )


def _variant_of(model):
    return model.variant if isinstance(model, NullModel) else model


def null_cdf(model, z):
    """Distribution function of the fitted null law at ``z``."""
    variant = _variant_of(model)
    z_arr = np.asarray(z, dtype=float)
    if isinstance(variant, GaussianNull):
        out = special.ndtr(z_arr - variant.mu0)
    elif isinstance(variant, SkewNormalNull):
        out = skew_normal_cdf(z_arr, variant.params)
    elif isinstance(variant, MixtureNull):
        out = special.ndtr(z_arr[..., None] - variant.grid) @ variant.weights_p
    else:
        raise TypeError(f"not a fitted null model: {type(variant).__name__}")
    if np.ndim(z) == 0:
        return float(out)
    return out


def null_pdf(model, z):
    """Density of the fitted null law at ``z``."""
    variant = _variant_of(model)
    z_arr = np.asarray(z, dtype=float)
    if isinstance(variant, GaussianNull):
        t = z_arr - variant.mu0
        out = np.exp(-0.5 * (_LOG_2PI + t * t))
    elif isinstance(variant, SkewNormalNull):
        out = skew_normal_pdf(z_arr, variant.params)
    elif isinstance(variant, MixtureNull):
        t = z_arr[..., None] - variant.grid
        out = np.exp(-0.5 * (_LOG_2PI + t * t)) @ variant.weights_p
    else:
        raise TypeError(f"not a fitted null model: {type(variant).__name__}")
    if np.ndim(z) == 0:
        return float(out)
    return out
