"""Tree-dependent compound-loss modeling.

Frequency: a multivariate Poisson family whose components form a Markov
random field on a tree, driven by binomial thinning along edges.  Severity:
lattice pmfs (discretized generalized Pareto, discrete, mixed Erlang).
On top of those: exact FFT aggregation of the portfolio total, TVaR-based
capital allocation and risk sharing, infinite-regular-tree asymptotics, and
a maximum-likelihood calibration pipeline with a batch CLI.
"""

__version__ = "0.1.0"

from .aggregation import (
    AggregateDistribution,
    aggregate_cdf_mixed_erlang,
    aggregate_pmf_fft,
    compound_mean_variance,
    default_n_fft,
    var_tvar,
)
from .allocation import (
    AllocationTable,
    conditional_mean_sharing,
    expected_allocation,
    covariance_contributions,
    expected_allocations,
    linear_sharing,
    tvar_contributions_euler,
)
from .asymptotics import (
    GenPoissonParams,
    SplashParams,
    SplashSample,
    average_loss_distribution,
    generalized_poisson_pmf,
    gp_limit_check,
    homogeneous_params,
    splash_mean,
    splash_simulate,
    splash_total_pmf,
    variance_of_average,
)
from .datasets import rainfall_model
from .errors import MpmrfError
from .estimation import (
    EventSeries,
    FitResult,
    bootstrap_se,
    decluster,
    fit_mpmrf,
    implied_correlations,
    information_criteria,
    pearson_correlation_matrix,
    poisson_gof,
)
from .mrf import (
    MpmrfParams,
    ShockDecomposition,
    common_shock_expansion,
    correlation,
    covariance,
    joint_log_pmf,
    joint_pgf,
    joint_pmf,
    log_likelihood,
    pmf_via_shocks,
    sample,
    validate_params,
)
from .severity import (
    Gpd,
    LatticePmf,
    MixedErlang,
    dgpd_pmf,
    discrete_pmf,
    gpd_fit_mle,
    gpd_moments,
    mixed_erlang_common_rate,
    negbinom_pmf,
    size_biased,
)
from .trees import (
    RootedTree,
    Tree,
    WeightedGraph,
    binary_tree,
    build_tree,
    cayley_tree,
    kruskal_mst,
    path_between,
    path_tree,
    root_tree,
    star_tree,
)
