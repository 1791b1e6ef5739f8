"""Calibration: declustering, count diagnostics, and constrained MLE.

The likelihood constraint couples each edge's dependence parameter to the
two incident means, so the optimizer works in a transformed space where the
box is static: log means plus a logistic coordinate giving the dependence as
a fraction of its current admissible bound.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy import optimize, stats
from scipy.special import expit, logit

from .errors import (
    InvalidDataError,
    NonConvergenceError,
    SampleTooSmallError,
    TooFewPeriodsError,
    TooManyFailuresError,
    ZeroVarianceError,
)
from .mrf import MpmrfParams, alpha_bound, log_likelihood, sample, validate_params
from .trees import Tree, WeightedGraph

__all__ = [
    "EventSeries",
    "FitResult",
    "decluster",
    "poisson_gof",
    "pearson_correlation_matrix",
    "fit_mpmrf",
    "information_criteria",
    "bootstrap_se",
    "implied_correlations",
]


@dataclass(frozen=True)
class EventSeries:
    """Declustered exceedance events for one station and one period.

    Counts are numbers of maximal runs strictly above the threshold;
    severities keep each run's maximum.
    """

    threshold: float
    n_events: int
    severities: np.ndarray
    cluster_sizes: np.ndarray
    max_indices: np.ndarray  # position of each run's maximum in the input


@dataclass
class FitResult:
    params: MpmrfParams
    loglik: float
    aic: float
    aicc: float
    bic: float
    n_obs: int
    converged: bool
    n_iterations: int
    message: str = ""
    bootstrap_se_lambda: np.ndarray | None = None
    bootstrap_se_alpha: dict | None = None

    def to_json_dict(self) -> dict:
        out = {
            "params": json.loads(self.params.to_json()),
            "loglik": self.loglik,
            "aic": self.aic,
            "aicc": self.aicc,
            "bic": self.bic,
            "n_obs": self.n_obs,
            "converged": self.converged,
            "n_iterations": self.n_iterations,
        }
        if self.bootstrap_se_lambda is not None:
            out["bootstrap_se_lambda"] = list(self.bootstrap_se_lambda)
            out["bootstrap_se_alpha"] = {
                f"{u}-{v}": se for (u, v), se in self.bootstrap_se_alpha.items()
            }
        return out


def decluster(daily_values, threshold: float) -> EventSeries:
    """Collapse runs of consecutive days strictly above the threshold.

    Each maximal run is one event whose severity is the run maximum.  NaN
    entries are missing days: they break runs and are otherwise excluded.
    """
    x = np.asarray(daily_values, dtype=float)
    above = np.isfinite(x) & (x > threshold)
    severities = []
    sizes = []
    max_indices = []
    run_max = None
    run_len = 0
    run_argmax = -1
    for i, (val, flag) in enumerate(zip(x, above)):
        if flag:
            run_len += 1
            if run_max is None or val > run_max:
                run_max, run_argmax = val, i
        elif run_len:
            severities.append(run_max)
            sizes.append(run_len)
            max_indices.append(run_argmax)
            run_max, run_len = None, 0
    if run_len:
        severities.append(run_max)
        sizes.append(run_len)
        max_indices.append(run_argmax)
    return EventSeries(
        threshold=float(threshold),
        n_events=len(severities),
        severities=np.asarray(severities, dtype=float),
        cluster_sizes=np.asarray(sizes, dtype=int),
        max_indices=np.asarray(max_indices, dtype=int),
    )


def poisson_gof(counts) -> float:
    """Chi-squared goodness of fit of counts against a Poisson law.

    Expected frequencies come from Poisson(sample mean); upper-tail bins are
    pooled until each expected frequency is at least 5; degrees of freedom
    are bins - 2 (one for the total, one for the estimated mean).
    """
    c = np.asarray(counts, dtype=int)
    n = c.size
    if n < 20:
        raise TooFewPeriodsError(f"need >= 20 periods, got {n}")
    if np.ptp(c) == 0 and c[0] == 0:
        return 0.0
    lam = c.mean()
    kmax = int(c.max())
    observed = np.bincount(c, minlength=kmax + 2).astype(float)
    expected = n * stats.poisson.pmf(np.arange(kmax + 2), lam)
    expected[-1] = n * stats.poisson.sf(kmax, lam)  # open upper bin
    # pool the upper tail until every bin expects at least 5
    while expected.size > 2 and expected[-1] < 5.0:
        expected[-2] += expected[-1]
        observed[-2] += observed[-1]
        expected = expected[:-1]
        observed = observed[:-1]
    # pool the lower tail symmetrically
    while expected.size > 2 and expected[0] < 5.0:
        expected[1] += expected[0]
        observed[1] += observed[0]
        expected = expected[1:]
        observed = observed[1:]
    dof = expected.size - 2
    if dof < 1:
        return 0.0
    statistic = float(((observed - expected) ** 2 / expected).sum())
    return float(stats.chi2.sf(statistic, dof))


def pearson_correlation_matrix(counts) -> WeightedGraph:
    """Sample Pearson correlations between station count columns."""
    c = np.asarray(counts, dtype=float)
    if c.ndim != 2 or c.shape[0] < 2:
        raise TooFewPeriodsError("need at least 2 periods of counts")
    if (c.std(axis=0) == 0).any():
        bad = np.nonzero(c.std(axis=0) == 0)[0] + 1
        raise ZeroVarianceError(f"zero-variance station(s): {list(bad)}")
    return WeightedGraph(num_vertices=c.shape[1], weights=np.corrcoef(c.T))


def _sorted_edges(tree: Tree) -> list[tuple[int, int]]:
    return sorted(tree.edges)


def _moment_init(tree: Tree, counts: np.ndarray) -> MpmrfParams:
    lam = np.maximum(counts.mean(axis=0), 1e-3)
    corr = np.corrcoef(counts.T) if counts.shape[0] > 1 else np.eye(tree.num_vertices)
    alpha = {}
    for u, v in _sorted_edges(tree):
        bound = alpha_bound(lam[u - 1], lam[v - 1])
        guess = corr[u - 1, v - 1] if np.isfinite(corr[u - 1, v - 1]) else 0.3
        alpha[(u, v)] = float(np.clip(guess, 0.05 * bound, 0.9 * bound))
    return MpmrfParams(lam=lam, alpha=alpha)


def _pack(params: MpmrfParams, tree: Tree) -> np.ndarray:
    lam = params.lam
    parts = [np.log(lam)]
    for u, v in _sorted_edges(tree):
        frac = params.alpha_of(u, v) / alpha_bound(lam[u - 1], lam[v - 1])
        parts.append([logit(np.clip(frac, 1e-6, 1.0 - 1e-6))])
    return np.concatenate(parts)


def _unpack(x: np.ndarray, tree: Tree) -> MpmrfParams:
    d = tree.num_vertices
    lam = np.exp(x[:d])
    alpha = {}
    for i, (u, v) in enumerate(_sorted_edges(tree)):
        bound = alpha_bound(lam[u - 1], lam[v - 1])
        alpha[(u, v)] = float(bound * expit(x[d + i]))
    return MpmrfParams(lam=lam, alpha=alpha)


def fit_mpmrf(
    tree: Tree,
    counts,
    init: MpmrfParams | None = None,
    root: int = 1,
) -> FitResult:
    """Joint maximum likelihood for (means, edge dependences) on a fixed tree.

    Quasi-Newton search with finite-difference gradients in the transformed
    space, followed by a simplex polish; initialized at moment matching
    unless ``init`` is given.
    """
    c = np.asarray(counts)
    if c.ndim != 2 or c.shape[1] != tree.num_vertices:
        raise InvalidDataError("counts must be (n_periods, num_vertices)")
    if (c < 0).any() or not np.issubdtype(c.dtype, np.integer):
        raise InvalidDataError("counts must be non-negative integers")
    if (c.max(axis=0) == 0).any():
        bad = np.nonzero(c.max(axis=0) == 0)[0] + 1
        raise InvalidDataError(f"all-zero count column(s): {list(bad)}")
    n = c.shape[0]
    start = init if init is not None else _moment_init(tree, c)

    def objective(x):
        try:
            return -log_likelihood(_unpack(x, tree), tree, c, root=root)
        except FloatingPointError:
            return np.inf

    x0 = _pack(start, tree)
    res = optimize.minimize(objective, x0, method="L-BFGS-B")
    polish = optimize.minimize(
        objective,
        res.x,
        method="Nelder-Mead",
        options={"xatol": 1e-8, "fatol": 1e-10, "maxiter": 4000},
    )
    best = polish if polish.fun <= res.fun else res
    params = _unpack(best.x, tree)
    if validate_params(params, tree):
        raise NonConvergenceError("optimizer left the admissible region")
    loglik = -best.fun
    if not np.isfinite(loglik):
        raise NonConvergenceError("log-likelihood not finite at the optimum")
    aic, aicc, bic = _criteria(loglik, n, tree.num_vertices)
    return FitResult(
        params=params,
        loglik=float(loglik),
        aic=aic,
        aicc=aicc,
        bic=bic,
        n_obs=n,
        converged=bool(res.success or polish.success),
        n_iterations=int(res.nit + polish.nit),
        message=str(best.message),
    )


def _criteria(loglik: float, n: int, d: int) -> tuple[float, float, float]:
    k = 2 * d - 1
    if n <= k + 1:
        raise SampleTooSmallError(f"need n > k + 1 = {k + 1} periods, got {n}")
    aic = 2 * k - 2 * loglik
    aicc = aic + 2 * k * (k + 1) / (n - k - 1)
    bic = k * np.log(n) - 2 * loglik
    return float(aic), float(aicc), float(bic)


def information_criteria(fit: FitResult, n: int) -> tuple[float, float, float]:
    """(AIC, AICc, BIC) with parameter count 2d - 1."""
    return _criteria(fit.loglik, n, fit.params.lam.shape[0])


def bootstrap_se(
    tree: Tree,
    fitted_params: MpmrfParams,
    n_periods: int,
    n_boot: int,
    seed,
    root: int = 1,
    data=None,
    method: str = "parametric",
) -> dict:
    """Bootstrap standard errors for every parameter.

    Parametric by default: simulate ``n_periods`` rows from the fitted model
    and refit, ``n_boot`` times.  ``method="resample"`` draws periods with
    replacement from ``data`` instead.  Failed refits are dropped; more than
    5% of them is an error.
    """
    if n_boot < 2:
        raise SampleTooSmallError("need n_boot >= 2 to estimate a spread")
    if method == "resample" and data is None:
        raise InvalidDataError("resampling bootstrap needs the original data")
    rng = np.random.default_rng(seed)
    edges = _sorted_edges(tree)
    lam_hat = []
    alpha_hat = []
    n_failed = 0
    for _ in range(n_boot):
        if method == "parametric":
            rep = sample(fitted_params, tree, root, n_periods, rng)
        else:
            rows = rng.integers(0, len(data), size=n_periods)
            rep = np.asarray(data)[rows]
        try:
            fit = fit_mpmrf(tree, rep, init=fitted_params, root=root)
        except (NonConvergenceError, InvalidDataError):
            n_failed += 1
            continue
        lam_hat.append(fit.params.lam)
        alpha_hat.append([fit.params.alpha_of(u, v) for u, v in edges])
    if n_failed > 0.05 * n_boot:
        raise TooManyFailuresError(f"{n_failed}/{n_boot} bootstrap refits failed")
    lam_hat = np.asarray(lam_hat)
    alpha_hat = np.asarray(alpha_hat)
    return {
        "method": method,
        "n_failed": n_failed,
        "se_lambda": lam_hat.std(axis=0, ddof=1),
        "se_alpha": {e: float(s) for e, s in zip(edges, alpha_hat.std(axis=0, ddof=1))},
    }


def implied_correlations(params: MpmrfParams, tree: Tree) -> WeightedGraph:
    """Model-implied count correlations: products of alpha along tree paths."""
    from .mrf import correlation

    d = tree.num_vertices
    w = np.eye(d)
    for u in range(1, d + 1):
        for v in range(u + 1, d + 1):
            w[u - 1, v - 1] = w[v - 1, u - 1] = correlation(params, tree, u, v)
    return WeightedGraph(num_vertices=d, weights=w)
