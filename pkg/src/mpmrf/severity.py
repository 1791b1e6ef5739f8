"""Severity laws on a common lattice.

Everything downstream (aggregation, allocation) consumes a LatticePmf: mass
at points 0, h, 2h, ...  Continuous severities enter either through the
discretized generalized Pareto or through mixed Erlang representations.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, stats

from .errors import (
    InfiniteMomentError,
    InvalidRateError,
    NonConvergenceError,
    NormalizationError,
    ThresholdNotOnLatticeError,
    TailMassTooLargeError,
    TooFewExceedancesError,
    ZeroMeanError,
)

__all__ = [
    "LatticePmf",
    "Gpd",
    "MixedErlang",
    "dgpd_pmf",
    "gpd_moments",
    "gpd_fit_mle",
    "size_biased",
    "mixed_erlang_common_rate",
    "discrete_pmf",
    "negbinom_pmf",
]

MASS_TOL = 1e-9


@dataclass(frozen=True)
class LatticePmf:
    """Probability mass on the lattice {0, h, 2h, ...}."""

    h: float
    masses: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.masses, dtype=float)
        if self.h <= 0:
            raise NormalizationError("lattice step must be positive")
        if (m < 0).any():
            raise NormalizationError("negative mass")
        if abs(m.sum() - 1.0) > MASS_TOL:
            raise NormalizationError(f"masses sum to {m.sum()}, not 1")
        object.__setattr__(self, "masses", m)

    @property
    def support_points(self) -> np.ndarray:
        return self.h * np.arange(self.masses.shape[0])

    def mean(self) -> float:
        return float(self.support_points @ self.masses)

    def second_moment(self) -> float:
        return float((self.support_points ** 2) @ self.masses)

    def variance(self) -> float:
        mu = self.mean()
        return self.second_moment() - mu * mu


@dataclass(frozen=True)
class Gpd:
    """Generalized Pareto with shape xi, scale sigma, threshold u.

    Survival (1 + xi (x - u) / sigma)^(-1/xi) for x >= u; exponential limit
    at xi = 0.
    """

    xi: float
    sigma: float
    u: float = 0.0

    def __post_init__(self):
        if self.sigma <= 0:
            raise InvalidRateError("sigma must be positive")
        if self.u < 0:
            raise InvalidRateError("threshold must be non-negative")

    def survival(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        y = np.maximum(x - self.u, 0.0)
        if self.xi == 0.0:
            return np.exp(-y / self.sigma)
        base = 1.0 + self.xi * y / self.sigma
        if self.xi < 0:
            return np.where(base > 0, np.maximum(base, 0.0) ** (-1.0 / self.xi), 0.0)
        return base ** (-1.0 / self.xi)


@dataclass(frozen=True)
class MixedErlang:
    """Mixture over Erlang(k, beta), k = 1, 2, ... with common rate beta."""

    beta: float
    weights: np.ndarray  # weights[k-1] = probability of shape k

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if self.beta <= 0:
            raise InvalidRateError("beta must be positive")
        if (w < 0).any() or abs(w.sum() - 1.0) > MASS_TOL:
            raise NormalizationError("weights must form a probability vector")
        object.__setattr__(self, "weights", w)

    def mean(self) -> float:
        k = np.arange(1, self.weights.shape[0] + 1)
        return float((k @ self.weights) / self.beta)

    def second_moment(self) -> float:
        k = np.arange(1, self.weights.shape[0] + 1)
        return float(((k * (k + 1)) @ self.weights) / self.beta ** 2)


def dgpd_pmf(gpd: Gpd, h: float, n_cells: int) -> LatticePmf:
    """Discretize a GPD on the lattice: mass F̄(kh) - F̄((k+1)h) at kh.

    The threshold must sit on the lattice; support starts there.  Fails
    loudly rather than renormalizing when the truncated tail exceeds 1e-9.
    """
    k0 = round(gpd.u / h)
    if abs(k0 * h - gpd.u) > 1e-9 * max(1.0, gpd.u):
        raise ThresholdNotOnLatticeError(
            f"threshold {gpd.u} is not an integer multiple of h={h}"
        )
    tail = float(gpd.survival(n_cells * h))
    if tail > MASS_TOL:
        raise TailMassTooLargeError(
            f"tail mass {tail:.3e} beyond {n_cells} cells exceeds {MASS_TOL}"
        )
    k = np.arange(k0, n_cells)
    surv = gpd.survival(k * h)
    surv_next = gpd.survival((k + 1) * h)
    masses = np.zeros(n_cells)
    masses[k0:] = surv - surv_next
    return LatticePmf(h=h, masses=np.clip(masses, 0.0, None))


def gpd_moments(gpd: Gpd) -> tuple[float, float]:
    """(mean, variance) of the continuous GPD, thresholds included in the mean."""
    if gpd.xi >= 1:
        raise InfiniteMomentError(f"mean is infinite for xi = {gpd.xi} >= 1")
    mean = gpd.u + gpd.sigma / (1.0 - gpd.xi)
    if gpd.xi >= 0.5:
        raise InfiniteMomentError(f"variance is infinite for xi = {gpd.xi} >= 1/2")
    var = gpd.sigma ** 2 / ((1.0 - gpd.xi) ** 2 * (1.0 - 2.0 * gpd.xi))
    return float(mean), float(var)


def _gpd_negloglik(log_sigma: float, xi: float, y: np.ndarray) -> float:
    sigma = np.exp(log_sigma)
    z = 1.0 + xi * y / sigma
    if (z <= 0).any():
        # large finite penalty keeps the simplex arithmetic free of inf - inf
        return 1e30
    if abs(xi) < 1e-12:
        return log_sigma * y.size + y.sum() / sigma
    return log_sigma * y.size + (1.0 + 1.0 / xi) * np.log(z).sum()


def gpd_fit_mle(exceedances, threshold: float, min_n: int = 30) -> Gpd:
    """Fit (sigma, xi) by maximum likelihood to excesses over ``threshold``.

    Unconstrained multi-start search in (log sigma, xi) with xi confined to
    (-0.5, 0.95).
    """
    x = np.asarray(exceedances, dtype=float)
    y = x[x > threshold] - threshold
    if y.size < min_n:
        raise TooFewExceedancesError(f"need >= {min_n} exceedances, got {y.size}")
    if np.ptp(y) == 0:
        raise NonConvergenceError("all excesses identical; likelihood degenerate")

    def objective(p):
        return _gpd_negloglik(p[0], p[1], y)

    best = None
    for xi0 in (-0.2, 0.0, 0.1, 0.3, 0.6):
        res = optimize.minimize(
            objective,
            x0=[np.log(y.mean()), xi0],
            method="Nelder-Mead",
            bounds=[(None, None), (-0.499, 0.949)],
            options={"xatol": 1e-10, "fatol": 1e-10, "maxiter": 2000},
        )
        if best is None or res.fun < best.fun:
            best = res
    if not np.isfinite(best.fun) or best.fun >= 1e29:
        raise NonConvergenceError("GPD likelihood optimization failed")
    return Gpd(xi=float(best.x[1]), sigma=float(np.exp(best.x[0])), u=threshold)


def size_biased(pmf: LatticePmf) -> LatticePmf:
    """p*(x) = x p(x) / E[B] on the same lattice."""
    mean = pmf.mean()
    if mean <= 0:
        raise ZeroMeanError("size-biased transform needs a positive mean")
    masses = pmf.support_points * pmf.masses / mean
    return LatticePmf(h=pmf.h, masses=masses / masses.sum())


def _count_pmf(model: MixedErlang, q: float, n_max: int) -> np.ndarray:
    """Pmf of the shape count after re-expressing the mixture at a faster rate.

    Entry x is sum_k pi_k * P(NegBinomial trials to k successes = x) with
    success probability q; support starts at 1 (index 0 carries no mass).
    """
    out = np.zeros(n_max)
    xs = np.arange(n_max)
    for k, pi_k in enumerate(model.weights, start=1):
        if pi_k == 0:
            continue
        # nbinom counts failures; x trials = x - k failures before success k
        out += pi_k * stats.nbinom.pmf(xs - k, k, q)
    return out


def mixed_erlang_common_rate(
    models: list[MixedErlang], n_max: int = 4096
) -> tuple[float, list[np.ndarray]]:
    """Re-express all mixtures against the fastest rate.

    Returns (beta_max, count pmfs): each severity equals, in distribution,
    a random-length sum of Exp(beta_max) variables whose length pmf is the
    returned vector (support starting at 1).
    """
    if not models:
        raise InvalidRateError("need at least one mixed Erlang model")
    beta_max = max(m.beta for m in models)
    pmfs = []
    for m in models:
        q = m.beta / beta_max
        pmf = _count_pmf(m, q, n_max)
        if 1.0 - pmf.sum() > 1e-9:
            raise TailMassTooLargeError(
                f"count pmf truncated at {n_max} loses {1.0 - pmf.sum():.3e} mass"
            )
        pmfs.append(pmf)
    return beta_max, pmfs


def discrete_pmf(values, masses, h: float) -> LatticePmf:
    """Place explicit masses at the given lattice points."""
    values = np.asarray(values, dtype=float)
    masses = np.asarray(masses, dtype=float)
    if abs(masses.sum() - 1.0) > MASS_TOL or (masses < 0).any():
        raise NormalizationError("masses must be a probability vector")
    idx = np.round(values / h).astype(int)
    if (np.abs(idx * h - values) > 1e-9 * np.maximum(1.0, np.abs(values))).any():
        raise ThresholdNotOnLatticeError("values must be integer multiples of h")
    out = np.zeros(idx.max() + 1)
    np.add.at(out, idx, masses)
    return LatticePmf(h=h, masses=out)


def negbinom_pmf(r: float, p: float, n: int, h: float = 1.0) -> LatticePmf:
    """Negative binomial severity (number of failures) truncated to n cells."""
    masses = stats.nbinom.pmf(np.arange(n), r, p)
    tail = 1.0 - masses.sum()
    if tail > MASS_TOL:
        raise TailMassTooLargeError(f"truncation at {n} cells loses {tail:.3e} mass")
    return LatticePmf(h=h, masses=masses)
