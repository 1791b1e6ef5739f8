"""Capital allocation: per-outcome expected shares and tail contributions.

The central object is the allocation vector a_v(k) = E[X_v 1{S = kh}].  It is
computed exactly with the same transform engine as the aggregate pmf: re-root
the tree at vertex v and swap the root's transformed severity for its
size-biased version; everything else in the bottom-up pass is unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .aggregation import (
    AggregateDistribution,
    _invert,
    _transform_pass,
    aggregate_pmf_fft,
    compound_mean_variance,
    default_n_fft,
    var_tvar,
)
from .errors import (
    ArgumentOutOfRangeError,
    InvalidKappaError,
    ZeroMassOutcomeError,
    ZeroVarianceError,
)
from .mrf import MpmrfParams, correlation
from .severity import LatticePmf, size_biased
from .trees import Tree, root_tree

__all__ = [
    "AllocationTable",
    "expected_allocation",
    "expected_allocations",
    "tvar_contributions_euler",
    "covariance_contributions",
    "conditional_mean_sharing",
    "linear_sharing",
    "vertex_covariances_with_total",
]


@dataclass(frozen=True)
class AllocationTable:
    """a[v-1, k] = E[X_v 1{S = kh}] for every vertex and lattice point."""

    h: float
    values: np.ndarray  # shape (d, n_fft)

    @property
    def num_vertices(self) -> int:
        return self.values.shape[0]

    def expected_losses(self) -> np.ndarray:
        """E[X_v] per vertex, recovered by summing each allocation vector."""
        return self.values.sum(axis=1)


def expected_allocation(
    params: MpmrfParams,
    tree: Tree,
    severities: list[LatticePmf],
    v: int,
    n_fft: int | None = None,
) -> np.ndarray:
    """Allocation vector a_k = E[X_v 1{S = kh}] for a single vertex."""
    if not 1 <= v <= tree.num_vertices:
        raise ArgumentOutOfRangeError(f"vertex {v} not in 1..{tree.num_vertices}")
    if n_fft is None:
        n_fft = default_n_fft(params, tree, severities)
    fhat = {
        w: np.fft.fft(severities[w - 1].masses, n_fft)
        for w in range(1, tree.num_vertices + 1)
    }
    rooted = root_tree(tree, v)
    char, root_factor = _transform_pass(params, rooted, fhat, n_fft)
    sb_hat = np.fft.fft(size_biased(severities[v - 1]).masses, n_fft)
    mean_v = params.lam_of(v) * severities[v - 1].mean()
    return mean_v * _invert(sb_hat * root_factor * char)


def expected_allocations(
    params: MpmrfParams,
    tree: Tree,
    severities: list[LatticePmf],
    n_fft: int | None = None,
) -> AllocationTable:
    """Exact allocation vectors for every vertex.

    One bottom-up transform pass per vertex: rooting at v makes the root term
    the only one that depends on v's own severity, so the size-biased swap
    reduces to rescaling the cached root factor.
    """
    d = tree.num_vertices
    if n_fft is None:
        n_fft = default_n_fft(params, tree, severities)
    fhat = {v: np.fft.fft(severities[v - 1].masses, n_fft) for v in range(1, d + 1)}
    out = np.empty((d, n_fft))
    for v in range(1, d + 1):
        rooted = root_tree(tree, v)
        char, root_factor = _transform_pass(params, rooted, fhat, n_fft)
        sb_hat = np.fft.fft(size_biased(severities[v - 1]).masses, n_fft)
        shifted_char = sb_hat * root_factor * char
        mean_v = params.lam_of(v) * severities[v - 1].mean()
        out[v - 1] = mean_v * _invert(shifted_char)
    return AllocationTable(h=severities[0].h, values=out)


def tvar_contributions_euler(
    alloc: AllocationTable, aggregate: AggregateDistribution, kappa: float
) -> np.ndarray:
    """Euler (gradient) contributions to TVaR at level kappa, one per vertex.

    Computed purely from the allocation vectors, so the contributions sum to
    the TVaR implied by sum_v a_v up to transform round-off.
    """
    if not 0.0 <= kappa < 1.0:
        raise InvalidKappaError(f"kappa must be in [0, 1), got {kappa}")
    var_value, _ = var_tvar(aggregate, kappa)
    k_star = int(round(var_value / aggregate.h))
    pmf = aggregate.pmf.masses
    cdf = aggregate.cdf
    a = alloc.values
    head = a[:, : k_star + 1].sum(axis=1)
    if pmf[k_star] > 0:
        atom = (cdf[k_star] - kappa) / pmf[k_star] * a[:, k_star]
    else:
        atom = np.zeros(a.shape[0])
    return (a.sum(axis=1) - head + atom) / (1.0 - kappa)


def vertex_covariances_with_total(
    params: MpmrfParams, tree: Tree, severities: list[LatticePmf]
) -> np.ndarray:
    """Cov(X_v, S) per vertex from the closed-form covariance structure."""
    d = tree.num_vertices
    lam = params.lam
    m1 = np.array([s.mean() for s in severities])
    m2 = np.array([s.second_moment() for s in severities])
    cov = lam * m2  # own-variance term Cov(X_v, X_v)
    for v in range(1, d + 1):
        for w in range(1, d + 1):
            if w != v:
                cov[v - 1] += (
                    m1[v - 1]
                    * m1[w - 1]
                    * np.sqrt(lam[v - 1] * lam[w - 1])
                    * correlation(params, tree, v, w)
                )
    return cov


def covariance_contributions(
    params: MpmrfParams,
    tree: Tree,
    severities: list[LatticePmf],
    aggregate: AggregateDistribution,
    kappa: float,
    weighting: str = "full_covariance",
) -> np.ndarray:
    """Covariance-rule contributions: mean plus a beta share of the tail load.

    ``weighting`` picks the beta numerator: ``full_covariance`` uses
    Cov(X_v, S) including all cross terms from the tree dependence;
    ``own_variance`` uses each vertex's standalone compound variance
    lambda_v E[B_v^2] (the common shortcut in practice).  Either way the
    weights are normalized by their own sum, so contributions always add up
    to the TVaR.
    """
    if weighting == "full_covariance":
        cov = vertex_covariances_with_total(params, tree, severities)
    elif weighting == "own_variance":
        cov = params.lam * np.array([s.second_moment() for s in severities])
    else:
        raise ArgumentOutOfRangeError(f"unknown weighting {weighting!r}")
    var_s = cov.sum()
    if var_s <= 0:
        raise ZeroVarianceError("aggregate loss has zero variance")
    means = params.lam * np.array([s.mean() for s in severities])
    _, tvar = var_tvar(aggregate, kappa)
    return means + cov / var_s * (tvar - means.sum())


def conditional_mean_sharing(
    alloc: AllocationTable, aggregate: AggregateDistribution, k: int
) -> np.ndarray:
    """E[X_v | S = kh] per vertex for one lattice outcome."""
    pmf = aggregate.pmf.masses
    if not 0 <= k < pmf.shape[0]:
        raise ArgumentOutOfRangeError(f"lattice index {k} outside the grid")
    if pmf[k] <= 0:
        raise ZeroMassOutcomeError(f"S = {k * aggregate.h} has zero probability")
    return alloc.values[:, k] / pmf[k]


def linear_sharing(
    params: MpmrfParams,
    tree: Tree,
    severities: list[LatticePmf],
    rule: str = "proportional",
) -> np.ndarray:
    """Outcome-independent sharing weights; each set sums to one.

    ``proportional`` splits by expected loss; ``regression`` splits by
    Cov(X_v, S) / Var(S).
    """
    if rule == "proportional":
        means = params.lam * np.array([s.mean() for s in severities])
        total = means.sum()
        if total <= 0:
            raise ZeroVarianceError("portfolio mean is zero")
        return means / total
    if rule == "regression":
        cov = vertex_covariances_with_total(params, tree, severities)
        var_s = cov.sum()
        if var_s <= 0:
            raise ZeroVarianceError("aggregate loss has zero variance")
        return cov / var_s
    raise ArgumentOutOfRangeError(f"unknown sharing rule {rule!r}")
