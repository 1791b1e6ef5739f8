"""Tree-structured Poisson Markov random field: MPMRF(lambda, alpha, T).

Counts are generated by drawing the root from a Poisson law and propagating
along edges by binomial thinning plus independent Poisson innovations.  The
joint law does not depend on which vertex is used as the root; that property
is exercised by the test suite rather than assumed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import product

import numpy as np
from scipy.special import gammaln, logsumexp, xlogy

from .errors import (
    DimensionTooLargeError,
    InvalidParamsError,
    NegativeCountError,
    VertexOutOfRangeError,
)
from .trees import RootedTree, Tree, edge_key, path_between, root_tree

__all__ = [
    "MpmrfParams",
    "ShockDecomposition",
    "validate_params",
    "sample",
    "joint_pmf",
    "joint_log_pmf",
    "eta_pgf",
    "joint_pgf",
    "covariance",
    "correlation",
    "common_shock_expansion",
    "pmf_via_shocks",
    "log_likelihood",
]


@dataclass(frozen=True)
class MpmrfParams:
    """Mean vector lambda and per-edge dependence alpha.

    ``alpha`` maps canonical (sorted) edges to values in (0, 1].  With
    ``allow_independent`` set, alpha = 0 is accepted as exact independence
    along that edge (thinning probability 0, innovation mean lambda_v).
    """

    lam: np.ndarray
    alpha: dict[tuple[int, int], float]
    allow_independent: bool = False

    def __post_init__(self):
        object.__setattr__(self, "lam", np.asarray(self.lam, dtype=float))
        object.__setattr__(
            self, "alpha", {edge_key(*e): float(a) for e, a in self.alpha.items()}
        )

    @property
    def dim(self) -> int:
        return self.lam.shape[0]

    def lam_of(self, v: int) -> float:
        return float(self.lam[v - 1])

    def alpha_of(self, u: int, v: int) -> float:
        return self.alpha[edge_key(u, v)]

    def theta(self, rooted: RootedTree, v: int) -> float:
        """Thinning probability of the propagation from pa(v) to v."""
        p = rooted.parent[v]
        return self.alpha_of(p, v) * np.sqrt(self.lam_of(v) / self.lam_of(p))

    def zeta(self, rooted: RootedTree, v: int) -> float:
        """Innovation mean at v; equals lambda_r at the root."""
        if v == rooted.root:
            return self.lam_of(v)
        p = rooted.parent[v]
        return self.lam_of(v) - self.alpha_of(p, v) * np.sqrt(
            self.lam_of(p) * self.lam_of(v)
        )

    def to_json(self) -> str:
        return json.dumps(
            {
                "lambda": self.lam.tolist(),
                "alpha": [
                    {"u": u, "v": v, "value": a}
                    for (u, v), a in sorted(self.alpha.items())
                ],
            }
        )

    @classmethod
    def from_json(cls, text: str, allow_independent: bool = False) -> "MpmrfParams":
        obj = json.loads(text)
        alpha = {(int(e["u"]), int(e["v"])): float(e["value"]) for e in obj["alpha"]}
        return cls(np.array(obj["lambda"], dtype=float), alpha, allow_independent)


@dataclass(frozen=True)
class ShockDecomposition:
    """Common-shock representation: one Poisson shock per connected subset."""

    tree: Tree
    subsets: tuple[frozenset[int], ...]
    gamma: np.ndarray


def validate_params(params: MpmrfParams, tree: Tree) -> list[str]:
    """Check admissibility; returns a list of violation messages (empty = ok)."""
    violations = []
    if params.dim != tree.num_vertices:
        return [f"lambda has length {params.dim}, tree has {tree.num_vertices} vertices"]
    for v in range(1, tree.num_vertices + 1):
        if not params.lam_of(v) > 0:
            violations.append(f"lambda_{v} = {params.lam_of(v)} is not positive")
    if set(params.alpha) != set(tree.edges):
        violations.append("alpha keys do not match the tree's edge set")
        return violations
    for (u, v), a in sorted(params.alpha.items()):
        lu, lv = params.lam_of(u), params.lam_of(v)
        bound = np.sqrt(min(lu, lv) / max(lu, lv))
        low_ok = a > 0 or (params.allow_independent and a == 0)
        if not low_ok or a > bound + 1e-12:
            violations.append(
                f"alpha_({u},{v}) = {a} outside admissible interval (0, {bound:.6g}]"
            )
    return violations


def _require_valid(params: MpmrfParams, tree: Tree) -> None:
    violations = validate_params(params, tree)
    if violations:
        raise InvalidParamsError("; ".join(violations))


def alpha_bound(lam_u: float, lam_v: float) -> float:
    return float(np.sqrt(min(lam_u, lam_v) / max(lam_u, lam_v)))


def sample(params: MpmrfParams, tree: Tree, root: int, n: int, seed) -> np.ndarray:
    """Draw ``n`` independent count vectors, shape (n, d).

    The root is Poisson, every other vertex a binomial thinning of its
    already-drawn parent plus a Poisson innovation, in topological order.
    Draws are vectorized across replications; output is a deterministic
    function of ``seed``.
    """
    _require_valid(params, tree)
    if n < 1:
        raise InvalidParamsError("n must be >= 1")
    rooted = root_tree(tree, root)
    rng = np.random.default_rng(seed)
    out = np.empty((n, tree.num_vertices), dtype=np.int64)
    out[:, root - 1] = rng.poisson(params.lam_of(root), size=n)
    for v in rooted.topo_order[1:]:
        parent_counts = out[:, rooted.parent[v] - 1]
        thinned = rng.binomial(parent_counts, params.theta(rooted, v))
        out[:, v - 1] = thinned + rng.poisson(params.zeta(rooted, v), size=n)
    return out


def _edge_log_factor(x_pa, x_v, zeta, theta):
    """log sum_k Poisson(x_v - k; zeta) * Binomial(k; x_pa, theta).

    Vectorized over rows; x_pa and x_v are integer arrays of equal shape.
    """
    x_pa = np.asarray(x_pa)
    x_v = np.asarray(x_v)
    kmax = int(np.minimum(x_pa, x_v).max(initial=0))
    k = np.arange(kmax + 1)
    xp = x_pa[..., None]
    xv = x_v[..., None]
    with np.errstate(divide="ignore", invalid="ignore"):
        log_pois = -zeta + xlogy(xv - k, zeta) - gammaln(xv - k + 1)
        log_binom = (
            gammaln(xp + 1)
            - gammaln(k + 1)
            - gammaln(xp - k + 1)
            + xlogy(k, theta)
            + xlogy(xp - k, 1.0 - theta)
        )
    terms = np.where(k <= np.minimum(xp, xv), log_pois + log_binom, -np.inf)
    return logsumexp(terms, axis=-1)


def joint_log_pmf(params: MpmrfParams, tree: Tree, root: int, x) -> np.ndarray:
    """log P(N = x) for one count vector or a batch of rows."""
    _require_valid(params, tree)
    x = np.asarray(x, dtype=np.int64)
    single = x.ndim == 1
    rows = x[None, :] if single else x
    if rows.shape[1] != tree.num_vertices:
        raise VertexOutOfRangeError("count vector length mismatch")
    if (rows < 0).any():
        raise NegativeCountError("counts must be non-negative")
    rooted = root_tree(tree, root)
    lam_r = params.lam_of(root)
    xr = rows[:, root - 1]
    logp = -lam_r + xlogy(xr, lam_r) - gammaln(xr + 1)
    for v in rooted.topo_order[1:]:
        logp = logp + _edge_log_factor(
            rows[:, rooted.parent[v] - 1],
            rows[:, v - 1],
            params.zeta(rooted, v),
            params.theta(rooted, v),
        )
    return logp[0] if single else logp


def joint_pmf(params: MpmrfParams, tree: Tree, root: int, x) -> float:
    return float(np.exp(joint_log_pmf(params, tree, root, np.asarray(x))))


def eta_pgf(rooted: RootedTree, v: int, t, theta: dict[int, float]):
    """Leaf-to-root recursive joint pgf evaluated at ``t``.

    ``t`` maps each vertex to its argument (array-valued arguments are
    supported and broadcast); ``theta`` maps each non-root vertex to its
    thinning probability.  Leaves return t_v.
    """
    value = t[v] if isinstance(t, dict) else t[v - 1]
    for child in rooted.children[v]:
        th = theta[child]
        value = value * (1.0 - th + th * eta_pgf(rooted, child, t, theta))
    return value


def _theta_map(params: MpmrfParams, rooted: RootedTree) -> dict[int, float]:
    return {v: params.theta(rooted, v) for v in rooted.topo_order[1:]}


def joint_pgf(params: MpmrfParams, tree: Tree, root: int, t) -> float:
    """P_N(t) = prod_v exp(zeta_v (eta_v - 1)); root-invariant."""
    _require_valid(params, tree)
    t = np.asarray(t, dtype=float)
    if (np.abs(t) > 1 + 1e-12).any():
        raise InvalidParamsError("pgf arguments must lie in [-1, 1]")
    rooted = root_tree(tree, root)
    theta = _theta_map(params, rooted)
    log_value = 0.0
    for v in rooted.topo_order:
        log_value += params.zeta(rooted, v) * (eta_pgf(rooted, v, t, theta) - 1.0)
    return float(np.exp(log_value))


def covariance(params: MpmrfParams, tree: Tree, u: int, v: int) -> float:
    """Cov(N_u, N_v) = sqrt(lambda_u lambda_v) * prod of alpha along the path."""
    if u == v:
        return params.lam_of(u)
    prod = 1.0
    for a, b in path_between(tree, u, v):
        prod *= params.alpha_of(a, b)
    return float(np.sqrt(params.lam_of(u) * params.lam_of(v)) * prod)


def correlation(params: MpmrfParams, tree: Tree, u: int, v: int) -> float:
    if u == v:
        return 1.0
    prod = 1.0
    for a, b in path_between(tree, u, v):
        prod *= params.alpha_of(a, b)
    return float(prod)


def _connected_subsets(tree: Tree):
    """All vertex sets inducing a connected subgraph, each enumerated once.

    Standard scheme: for each anchor v, grow sets whose minimum label is v,
    deciding inclusion of frontier vertices larger than the anchor.
    """
    adj = tree.adjacency
    results = []

    def grow(current: set, candidates: list, anchor: int):
        results.append(frozenset(current))
        for i, c in enumerate(candidates):
            extension = [
                w for w in adj[c] if w > anchor and w not in current and w not in candidates
            ]
            current.add(c)
            grow(current, candidates[i + 1:] + extension, anchor)
            current.remove(c)

    for v in range(1, tree.num_vertices + 1):
        grow({v}, [w for w in adj[v] if w > v], v)
    return results


def common_shock_expansion(
    params: MpmrfParams, tree: Tree, max_dim: int = 20
) -> ShockDecomposition:
    """Intensities of the independent Poisson shocks, one per connected subset.

    The subset count grows super-polynomially with dimension for bushy trees,
    hence the cap.
    """
    _require_valid(params, tree)
    if tree.num_vertices > max_dim:
        raise DimensionTooLargeError(
            f"shock expansion capped at {max_dim} vertices, got {tree.num_vertices}"
        )
    subsets = sorted(_connected_subsets(tree), key=lambda s: (len(s), sorted(s)))
    gammas = np.empty(len(subsets))
    for i, w_set in enumerate(subsets):
        g = 1.0
        for w in w_set:
            g *= params.lam_of(w)
        for (a, b) in tree.edges:
            la, lb = params.lam_of(a), params.lam_of(b)
            if a in w_set and b in w_set:
                g *= params.alpha_of(a, b) / np.sqrt(la * lb)
            elif a in w_set:
                g *= 1.0 - params.alpha_of(a, b) * np.sqrt(lb / la)
            elif b in w_set:
                g *= 1.0 - params.alpha_of(a, b) * np.sqrt(la / lb)
        gammas[i] = g
    return ShockDecomposition(tree=tree, subsets=tuple(subsets), gamma=gammas)


def pmf_via_shocks(decomposition: ShockDecomposition, x) -> float:
    """P(N = x) by exhaustive enumeration over shock outcomes.

    Intended as an independent oracle for ``joint_pmf`` on small instances.
    """
    x = np.asarray(x, dtype=np.int64)
    d = decomposition.tree.num_vertices
    if d > 8 or x.sum() > 20:
        raise DimensionTooLargeError("shock enumeration is for small instances only")
    subsets = decomposition.subsets
    gamma = decomposition.gamma
    # each shock count is bounded by the smallest coordinate it feeds
    bounds = [min(x[v - 1] for v in s) for s in subsets]
    total = 0.0
    log_pois_tables = []
    for g, b in zip(gamma, bounds):
        ks = np.arange(b + 1)
        log_pois_tables.append(-g + xlogy(ks, g) - gammaln(ks + 1))
    for combo in product(*(range(b + 1) for b in bounds)):
        acc = np.zeros(d, dtype=np.int64)
        for count, s in zip(combo, subsets):
            if count:
                for v in s:
                    acc[v - 1] += count
        if (acc == x).all():
            logp = sum(tab[c] for tab, c in zip(log_pois_tables, combo))
            total += np.exp(logp)
    return float(total)


def log_likelihood(params: MpmrfParams, tree: Tree, data, root: int = 1) -> float:
    """Sum of log joint pmfs over rows of ``data`` (log-space accumulation)."""
    data = np.asarray(data, dtype=np.int64)
    if data.ndim != 2:
        raise InvalidParamsError("data must be an (n, d) matrix of counts")
    return float(joint_log_pmf(params, tree, root, data).sum())
