"""Infinite-regular-tree limits of the frequency model.

When the per-vertex means decay geometrically away from the root
(lambda_v = lambda_parent * alpha^2 on a degree-chi regular tree), every
event traces back to the root and the total count M across the whole tree is
the total progeny of a branching process: Poisson(lambda_r) ancestors, a
first generation Binomial(chi * N_r, alpha^2), and Binomial(chi - 1, alpha^2)
offspring thereafter.  M is finite almost surely iff chi <= 1 + 1/alpha^2.

As chi grows with chi * alpha^2 -> theta the law of M tends to a generalized
Poisson distribution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, xlogy

from .aggregation import aggregate_pmf_fft, compound_mean_variance
from .errors import (
    FiniteSupportViolatedError,
    InfiniteMomentError,
    InvalidParamsError,
    InvalidThetaError,
    SupercriticalRegimeError,
)
from .mrf import MpmrfParams
from .severity import LatticePmf
from .trees import RootedTree, Tree

__all__ = [
    "SplashParams",
    "GenPoissonParams",
    "SplashSample",
    "splash_total_pmf",
    "splash_mean",
    "splash_simulate",
    "generalized_poisson_pmf",
    "gp_limit_check",
    "average_loss_distribution",
    "variance_of_average",
    "homogeneous_params",
]

DEFAULT_STEP_CAP = 10 ** 7


@dataclass(frozen=True)
class SplashParams:
    """Root mean, uniform edge dependence, and regular-tree degree."""

    lambda_r: float
    alpha: float
    chi: int

    def __post_init__(self):
        if self.lambda_r <= 0:
            raise InvalidParamsError("lambda_r must be positive")
        if not 0.0 <= self.alpha <= 1.0:
            raise InvalidParamsError("alpha must lie in [0, 1]")
        if self.chi < 2:
            raise InvalidParamsError("degree chi must be >= 2")

    @property
    def subcritical_or_critical(self) -> bool:
        # finiteness condition chi <= 1 + 1/alpha^2, i.e. (chi-1) alpha^2 <= 1
        return (self.chi - 1) * self.alpha ** 2 <= 1.0 + 1e-12


@dataclass(frozen=True)
class GenPoissonParams:
    lambda_r: float
    theta: float

    def __post_init__(self):
        if self.lambda_r <= 0:
            raise InvalidParamsError("lambda_r must be positive")
        if not 0.0 <= self.theta < 1.0:
            raise InvalidThetaError("theta must lie in [0, 1)")


@dataclass(frozen=True)
class SplashSample:
    """Simulated totals; entries of -1 were cut off by the step cap."""

    counts: np.ndarray
    n_capped: int

    @property
    def cap_rate(self) -> float:
        return self.n_capped / self.counts.shape[0]

    def valid(self) -> np.ndarray:
        return self.counts[self.counts >= 0]


def _splash_conditional_log(sp: SplashParams, ell: np.ndarray, j: np.ndarray):
    """log P(total progeny = j | ell ancestors), ell >= 1, j >= 1, vectorized.

    Dwass-style hitting formula for the branching process: the first
    generation has chi * ell potential slots, later individuals chi - 1 each.
    """
    chi, a2 = sp.chi, sp.alpha ** 2
    ell = np.asarray(ell, dtype=float)
    j = np.asarray(j, dtype=float)
    n_tot = (chi - 1.0) * j + chi * ell
    with np.errstate(divide="ignore"):
        log_a2 = np.log(a2) if a2 > 0 else -np.inf
        log_1ma2 = np.log1p(-a2) if a2 < 1 else -np.inf
    out = (
        np.log(chi * ell)
        - np.log(j)
        + gammaln(n_tot)
        - gammaln(j)
        - gammaln(n_tot - j + 1.0)
        + j * log_a2
    )
    expo = chi * ell + (chi - 2.0) * j
    out = out + np.where(expo > 0, expo * log_1ma2, 0.0)
    return out


def splash_total_pmf(
    sp: SplashParams, x_max: int, allow_supercritical: bool = False
) -> np.ndarray:
    """Pmf of the total count M on 0..x_max.

    M = N_r + J where, given N_r = ell >= 1, J is the branching-process
    progeny count; evaluated in log space throughout.  In the supercritical
    regime M is infinite with positive probability and the returned vector
    deliberately sums to less than one; that regime is refused unless
    ``allow_supercritical`` is set.
    """
    if not sp.subcritical_or_critical and not allow_supercritical:
        raise FiniteSupportViolatedError(
            f"chi={sp.chi} > 1 + 1/alpha^2 = {1 + 1 / sp.alpha ** 2:.6g}: "
            "total count infinite with positive probability"
        )
    lam = sp.lambda_r
    a2 = sp.alpha ** 2
    xs = np.arange(x_max + 1)
    log_pois = -lam + xlogy(xs, lam) - gammaln(xs + 1.0)
    pmf = np.zeros(x_max + 1)
    # no-propagation term: all N_r = x ancestors splash nobody
    pmf += np.exp(log_pois + xlogy(sp.chi * xs, 1.0 - a2))
    for x in range(2, x_max + 1):
        j = np.arange(1, x)
        ell = x - j
        logs = _splash_conditional_log(sp, ell, j) + log_pois[ell]
        pmf[x] += np.exp(logs).sum()
    return pmf


def splash_mean(sp: SplashParams) -> float:
    """E[M] = lambda_r (1 + chi a2 / (1 - (chi-1) a2)); infinite at criticality."""
    a2 = sp.alpha ** 2
    if (sp.chi - 1) * a2 >= 1.0:
        raise InfiniteMomentError("mean diverges at or beyond criticality")
    return sp.lambda_r * (1.0 + sp.chi * a2 / (1.0 - (sp.chi - 1) * a2))


def splash_simulate(
    sp: SplashParams,
    n: int,
    seed,
    step_cap: int = DEFAULT_STEP_CAP,
) -> SplashSample:
    """Draw n replications of the total count by running the branching process.

    Replications whose running population exceeds ``step_cap`` are marked
    capped (-1) rather than silently truncated; at the critical boundary this
    happens with positive frequency and the rate is reported.
    """
    if not sp.subcritical_or_critical:
        raise SupercriticalRegimeError(
            f"(chi - 1) alpha^2 = {(sp.chi - 1) * sp.alpha ** 2:.6g} > 1"
        )
    rng = np.random.default_rng(seed)
    a2 = sp.alpha ** 2
    total = rng.poisson(sp.lambda_r, size=n)
    active = rng.binomial(sp.chi * total, a2)
    capped = np.zeros(n, dtype=bool)
    while True:
        alive = active > 0
        if not alive.any():
            break
        total = total + active
        over = total > step_cap
        capped |= over
        active = np.where(over, 0, active)
        active = rng.binomial((sp.chi - 1) * active, a2)
    counts = np.where(capped, -1, total)
    return SplashSample(counts=counts, n_capped=int(capped.sum()))


def generalized_poisson_pmf(gp: GenPoissonParams, x) -> np.ndarray:
    """lambda (lambda + x theta)^(x-1) exp(-lambda - x theta) / x!."""
    x = np.asarray(x)
    if (x < 0).any() or not np.issubdtype(x.dtype, np.integer):
        raise InvalidThetaError("x must be non-negative integers")
    xf = x.astype(float)
    logs = (
        np.log(gp.lambda_r)
        + (xf - 1.0) * np.log(gp.lambda_r + xf * gp.theta)
        - gp.lambda_r
        - xf * gp.theta
        - gammaln(xf + 1.0)
    )
    return np.exp(logs)


def gp_limit_check(
    lambda_r: float,
    theta: float,
    chi: int,
    n: int = 10 ** 5,
    seed=0,
) -> dict:
    """Total-variation distance between the degree-chi model and its limit.

    Simulates the splash total at alpha = sqrt(theta / chi) and compares the
    empirical pmf against the generalized Poisson law the model approaches as
    chi grows.
    """
    sp = SplashParams(lambda_r=lambda_r, alpha=float(np.sqrt(theta / chi)), chi=chi)
    sample = splash_simulate(sp, n, seed)
    counts = sample.valid()
    x_max = int(counts.max()) if counts.size else 0
    emp = np.bincount(counts, minlength=x_max + 1) / counts.size
    gp = generalized_poisson_pmf(
        GenPoissonParams(lambda_r=lambda_r, theta=theta), np.arange(x_max + 1)
    )
    tv = 0.5 * (np.abs(emp - gp).sum() + max(1.0 - gp.sum(), 0.0))
    return {
        "tv_distance": float(tv),
        "chi": chi,
        "alpha": sp.alpha,
        "n_capped": sample.n_capped,
        "n": n,
    }


def homogeneous_params(tree: Tree | RootedTree, lam: float, alpha: float) -> MpmrfParams:
    """Same mean at every vertex and the same dependence on every edge."""
    if isinstance(tree, RootedTree):
        tree = tree.base
    return MpmrfParams(
        lam=np.full(tree.num_vertices, float(lam)),
        alpha={e: float(alpha) for e in tree.edges},
    )


def average_loss_distribution(
    tree_sequence: list[Tree | RootedTree],
    lam: float,
    alpha: float,
    severity: LatticePmf,
    n_fft: int | None = None,
) -> list[dict]:
    """Cdf of the per-vertex average S/d for each tree in a growth sequence.

    Homogeneous parameters; the average lives on the refined lattice h/d, so
    the grid is returned alongside each cdf.
    """
    out = []
    for t in tree_sequence:
        tree = t.base if isinstance(t, RootedTree) else t
        d = tree.num_vertices
        params = homogeneous_params(tree, lam, alpha)
        agg = aggregate_pmf_fft(params, tree, [severity] * d, n_fft=n_fft)
        out.append(
            {
                "d": d,
                "grid": agg.pmf.support_points / d,
                "pmf": agg.pmf.masses,
                "cdf": agg.cdf,
            }
        )
    return out


def variance_of_average(
    params: MpmrfParams, tree: Tree | RootedTree, severities: list[LatticePmf]
) -> float:
    """Var(S/d) from the closed-form covariance sums."""
    if isinstance(tree, RootedTree):
        tree = tree.base
    _, var = compound_mean_variance(params, tree, severities)
    return var / tree.num_vertices ** 2
