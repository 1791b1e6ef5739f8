import itertools

import numpy as np
import pytest

from mpmrf import (
    MpmrfParams,
    aggregate_pmf_fft,
    build_tree,
    conditional_mean_sharing,
    covariance_contributions,
    discrete_pmf,
    expected_allocation,
    expected_allocations,
    joint_pmf,
    linear_sharing,
    tvar_contributions_euler,
    var_tvar,
)
from mpmrf.errors import ArgumentOutOfRangeError, ZeroMassOutcomeError

PAIR = build_tree(2, [(1, 2)])
PATH3 = build_tree(3, [(1, 2), (2, 3)])
UNIT = discrete_pmf([1.0], [1.0], 1.0)


def pair_setup(alpha=0.5, lam=(1.0, 1.0), n_fft=128):
    params = MpmrfParams(list(lam), {(1, 2): alpha})
    sev = [UNIT, UNIT]
    agg = aggregate_pmf_fft(params, PAIR, sev, n_fft=n_fft)
    alloc = expected_allocations(params, PAIR, sev, n_fft=n_fft)
    return params, sev, agg, alloc


class TestAllocationVectors:
    def test_single_vertex_identity(self):
        # d = 1, B = 1: a_k = k * P(S = k)
        t = build_tree(1, [])
        params = MpmrfParams([2.0], {})
        agg = aggregate_pmf_fft(params, t, [UNIT], n_fft=64)
        a = expected_allocation(params, t, [UNIT], v=1, n_fft=64)
        k = np.arange(64)
        assert np.max(np.abs(a - k * agg.pmf.masses)) < 1e-12

    def test_pair_matches_enumeration(self):
        params, sev, agg, alloc = pair_setup(0.5)
        # brute force: a_v(k) = sum over joint counts with n1 + n2 = k of n_v * p
        ref = np.zeros((2, 40))
        for n1, n2 in itertools.product(range(20), repeat=2):
            p = joint_pmf(params, PAIR, 1, np.array([n1, n2]))
            ref[0, n1 + n2] += n1 * p
            ref[1, n1 + n2] += n2 * p
        assert np.max(np.abs(alloc.values[:, :40] - ref)) < 1e-10

    def test_sums_to_expected_loss(self):
        params = MpmrfParams([1.0, 2.0, 1.5], {(1, 2): 0.5, (2, 3): 0.6})
        sev = [
            discrete_pmf([1.0, 2.0], [0.5, 0.5], 1.0),
            UNIT,
            discrete_pmf([2.0], [1.0], 1.0),
        ]
        alloc = expected_allocations(params, PATH3, sev, n_fft=512)
        means = params.lam * np.array([s.mean() for s in sev])
        assert np.max(np.abs(alloc.expected_losses() - means)) < 1e-8

    def test_allocation_vectors_sum_to_conditional_total(self):
        # sum_v a_v(k) = kh * P(S = kh)
        params = MpmrfParams([1.0, 2.0, 1.5], {(1, 2): 0.5, (2, 3): 0.6})
        sev = [UNIT, discrete_pmf([2.0], [1.0], 1.0), UNIT]
        agg = aggregate_pmf_fft(params, PATH3, sev, n_fft=256)
        alloc = expected_allocations(params, PATH3, sev, n_fft=256)
        k = np.arange(256)
        assert np.max(np.abs(alloc.values.sum(axis=0) - k * agg.pmf.masses)) < 1e-10

    def test_single_vertex_helper_matches_table(self):
        params, sev, agg, alloc = pair_setup(0.7)
        a2 = expected_allocation(params, PAIR, sev, v=2, n_fft=128)
        assert np.max(np.abs(a2 - alloc.values[1])) < 1e-14

    def test_bad_vertex(self):
        params, sev, *_ = pair_setup()
        with pytest.raises(ArgumentOutOfRangeError):
            expected_allocation(params, PAIR, sev, v=3, n_fft=64)


class TestEulerContributions:
    def test_sum_to_tvar_all_levels(self):
        params = MpmrfParams([1.0, 2.0, 1.5], {(1, 2): 0.5, (2, 3): 0.6})
        sev = [
            discrete_pmf([1.0, 2.0], [0.5, 0.5], 1.0),
            UNIT,
            discrete_pmf([2.0], [1.0], 1.0),
        ]
        agg = aggregate_pmf_fft(params, PATH3, sev, n_fft=512)
        alloc = expected_allocations(params, PATH3, sev, n_fft=512)
        for kappa in (0.0, 0.5, 0.9, 0.99, 0.999):
            _, tvar = var_tvar(agg, kappa)
            contrib = tvar_contributions_euler(alloc, agg, kappa)
            assert contrib.sum() == pytest.approx(tvar, rel=1e-6)

    def test_kappa_zero_gives_means(self):
        params, sev, agg, alloc = pair_setup(0.5, lam=(1.0, 2.0))
        contrib = tvar_contributions_euler(alloc, agg, 0.0)
        assert np.max(np.abs(contrib - params.lam)) < 1e-8

    def test_symmetric_vertices_equal(self):
        # 7-vertex tree where vertices 6 and 7 share parent 4 symmetrically
        t = build_tree(7, [(1, 2), (1, 3), (3, 4), (3, 5), (4, 6), (4, 7)])
        alpha = {e: 0.5 for e in t.edges}
        params = MpmrfParams(np.ones(7), alpha)
        sev = [UNIT] * 7
        agg = aggregate_pmf_fft(params, t, sev, n_fft=256)
        alloc = expected_allocations(params, t, sev, n_fft=256)
        contrib = tvar_contributions_euler(alloc, agg, 0.95)
        assert contrib[5] == pytest.approx(contrib[6], rel=1e-10)

    def test_root_choice_irrelevant(self):
        # allocation is defined per vertex; n_fft path already re-roots at each
        # vertex, so results must be identical when the tree edges are permuted
        params = MpmrfParams([1.0, 1.5], {(1, 2): 0.6})
        sev = [UNIT, discrete_pmf([2.0], [1.0], 1.0)]
        a1 = expected_allocation(params, PAIR, sev, v=1, n_fft=256)
        table = expected_allocations(params, PAIR, sev, n_fft=256)
        assert np.max(np.abs(a1 - table.values[0])) < 1e-14


class TestCovarianceRule:
    def test_sums_to_tvar_both_weightings(self):
        params = MpmrfParams([1.0, 2.0, 1.5], {(1, 2): 0.5, (2, 3): 0.6})
        sev = [
            discrete_pmf([1.0, 2.0], [0.5, 0.5], 1.0),
            UNIT,
            discrete_pmf([2.0], [1.0], 1.0),
        ]
        agg = aggregate_pmf_fft(params, PATH3, sev, n_fft=512)
        for w in ("full_covariance", "own_variance"):
            contrib = covariance_contributions(params, PATH3, sev, agg, 0.95, weighting=w)
            _, tvar = var_tvar(agg, 0.95)
            assert contrib.sum() == pytest.approx(tvar, rel=1e-10)

    def test_symmetric_pair_splits_evenly(self):
        params, sev, agg, _ = pair_setup(0.5)
        contrib = covariance_contributions(params, PAIR, sev, agg, 0.9)
        assert contrib[0] == pytest.approx(contrib[1], rel=1e-12)

    def test_unknown_weighting(self):
        params, sev, agg, _ = pair_setup(0.5)
        with pytest.raises(ArgumentOutOfRangeError):
            covariance_contributions(params, PAIR, sev, agg, 0.9, weighting="bogus")


class TestConditionalMeanSharing:
    def test_shares_sum_to_outcome(self):
        params, sev, agg, alloc = pair_setup(0.5, lam=(1.0, 2.0))
        for k in (1, 2, 5):
            shares = conditional_mean_sharing(alloc, agg, k)
            assert shares.sum() == pytest.approx(k * agg.h, rel=1e-10)

    def test_symmetric_pair_equal_shares(self):
        params, sev, agg, alloc = pair_setup(0.5)
        shares = conditional_mean_sharing(alloc, agg, 4)
        assert shares[0] == pytest.approx(shares[1], rel=1e-10)
        assert shares.sum() == pytest.approx(4.0, rel=1e-10)

    def test_zero_mass_outcome(self):
        # severities are multiples of 2, so odd lattice points have no mass
        params = MpmrfParams([1.0, 1.0], {(1, 2): 0.5})
        sev = [discrete_pmf([2.0], [1.0], 1.0)] * 2
        agg = aggregate_pmf_fft(params, PAIR, sev, n_fft=128)
        alloc = expected_allocations(params, PAIR, sev, n_fft=128)
        with pytest.raises(ZeroMassOutcomeError):
            conditional_mean_sharing(alloc, agg, 3)


class TestLinearSharing:
    def test_proportional_symmetric(self):
        params, sev, *_ = pair_setup(0.5)
        w = linear_sharing(params, PAIR, sev, rule="proportional")
        assert np.allclose(w, [0.5, 0.5])

    def test_regression_sums_to_one(self):
        params = MpmrfParams([1.0, 2.0, 1.5], {(1, 2): 0.5, (2, 3): 0.6})
        sev = [UNIT, discrete_pmf([2.0], [1.0], 1.0), UNIT]
        w = linear_sharing(params, PATH3, sev, rule="regression")
        assert w.sum() == pytest.approx(1.0, rel=1e-12)
        assert (w > 0).all()

    def test_regression_matches_monte_carlo_slope(self):
        from mpmrf import sample

        params = MpmrfParams([1.0, 2.0], {(1, 2): 0.6})
        sev = [UNIT, UNIT]
        w = linear_sharing(params, PAIR, sev, rule="regression")
        counts = sample(params, PAIR, 1, 200_000, seed=3)
        s = counts.sum(axis=1)
        slope = np.cov(counts[:, 0], s)[0, 1] / np.var(s, ddof=1)
        assert w[0] == pytest.approx(slope, abs=0.01)

    def test_unknown_rule(self):
        params, sev, *_ = pair_setup()
        with pytest.raises(ArgumentOutOfRangeError):
            linear_sharing(params, PAIR, sev, rule="equal")
