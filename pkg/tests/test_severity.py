import numpy as np
import pytest
from scipy import stats

from mpmrf import (
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
from mpmrf.errors import (
    InfiniteMomentError,
    NonConvergenceError,
    NormalizationError,
    TailMassTooLargeError,
    ThresholdNotOnLatticeError,
    TooFewExceedancesError,
    ZeroMeanError,
)


class TestLatticePmf:
    def test_moments(self):
        p = LatticePmf(h=0.5, masses=[0.25, 0.5, 0.25])
        assert p.mean() == pytest.approx(0.5)
        assert p.variance() == pytest.approx(0.125)

    def test_negative_mass_rejected(self):
        with pytest.raises(NormalizationError):
            LatticePmf(h=1.0, masses=[0.5, -0.1, 0.6])

    def test_bad_normalization_rejected(self):
        with pytest.raises(NormalizationError):
            LatticePmf(h=1.0, masses=[0.5, 0.4])


class TestDgpd:
    def test_station_one_moments(self):
        # station 1: xi=0.005, sigma=12.32, u=26.9 -> mean 39.3, var 154.9
        g = Gpd(xi=0.005, sigma=12.32, u=26.9)
        pmf = dgpd_pmf(g, 0.1, 20000)
        assert pmf.mean() == pytest.approx(39.3, abs=0.1)
        assert pmf.variance() == pytest.approx(154.9, abs=0.5)

    def test_exponential_case(self):
        h = 0.01
        g = Gpd(xi=0.0, sigma=1.0, u=0.0)
        pmf = dgpd_pmf(g, h, 5000)
        k = np.arange(10)
        expected = np.exp(-k * h) * (1 - np.exp(-h))
        assert np.allclose(pmf.masses[:10], expected, rtol=1e-10)

    def test_total_mass_telescopes(self):
        g = Gpd(xi=0.1, sigma=5.0, u=2.0)
        n = 30000
        pmf = dgpd_pmf(g, 0.1, n)
        assert pmf.masses.sum() == pytest.approx(1 - g.survival(n * 0.1), abs=1e-12)

    def test_support_starts_at_threshold(self):
        g = Gpd(xi=0.1, sigma=5.0, u=2.0)
        pmf = dgpd_pmf(g, 0.5, 5000)
        assert (pmf.masses[:4] == 0).all()
        assert pmf.masses[4] > 0

    def test_threshold_off_lattice(self):
        with pytest.raises(ThresholdNotOnLatticeError):
            dgpd_pmf(Gpd(xi=0.1, sigma=5.0, u=2.05), 0.1, 5000)

    def test_undersized_grid(self):
        with pytest.raises(TailMassTooLargeError):
            dgpd_pmf(Gpd(xi=0.1, sigma=5.0, u=0.0), 0.1, 100)

    def test_moment_convergence_as_h_shrinks(self):
        g = Gpd(xi=0.1, sigma=5.0, u=2.0)
        mean, var = gpd_moments(g)
        errors = []
        for h, n in [(1.0, 3000), (0.1, 30000), (0.01, 300000)]:
            pmf = dgpd_pmf(g, h, n)
            errors.append(abs(pmf.mean() - mean))
        assert errors[0] > errors[1] > errors[2]


class TestGpdMoments:
    def test_station_values(self):
        assert gpd_moments(Gpd(xi=0.005, sigma=12.32, u=26.9)) == pytest.approx(
            (39.28, 154.9), abs=0.05
        )
        mean, var = gpd_moments(Gpd(xi=0.102, sigma=13.42, u=26.8))
        assert mean == pytest.approx(41.7, abs=0.1)
        assert var == pytest.approx(280.6, abs=0.5)

    def test_exponential(self):
        assert gpd_moments(Gpd(xi=0.0, sigma=2.0, u=1.0)) == (3.0, 4.0)

    def test_infinite_moments(self):
        with pytest.raises(InfiniteMomentError):
            gpd_moments(Gpd(xi=1.0, sigma=1.0))
        with pytest.raises(InfiniteMomentError):
            gpd_moments(Gpd(xi=0.5, sigma=1.0))


class TestGpdFit:
    def test_parametric_recovery(self):
        rng = np.random.default_rng(10)
        xi, sigma, n = 0.1, 10.0, 400
        x = stats.genpareto.rvs(xi, scale=sigma, size=n, random_state=rng)
        fit = gpd_fit_mle(x, 0.0, min_n=30)
        # asymptotic SEs: se(xi) ~ (1+xi)/sqrt(n), se(sigma) ~ sigma*sqrt(2(1+xi))/sqrt(n)
        assert abs(fit.xi - xi) < 3 * (1 + xi) / np.sqrt(n)
        assert abs(fit.sigma - sigma) < 3 * sigma * np.sqrt(2 * (1 + xi)) / np.sqrt(n)

    def test_exponential_sample_gives_small_shape(self):
        rng = np.random.default_rng(11)
        x = rng.exponential(5.0, size=1000)
        fit = gpd_fit_mle(x, 0.0)
        assert abs(fit.xi) < 3 * 1.0 / np.sqrt(1000)

    def test_too_few(self):
        with pytest.raises(TooFewExceedancesError):
            gpd_fit_mle([1.0, 2.0], 0.0)

    def test_degenerate_sample(self):
        with pytest.raises(NonConvergenceError):
            gpd_fit_mle(np.full(50, 3.0), 0.0)


class TestSizeBiased:
    def test_degenerate(self):
        p = discrete_pmf([2.0], [1.0], 1.0)
        sb = size_biased(p)
        assert sb.masses[2] == pytest.approx(1.0)

    def test_two_point(self):
        p = discrete_pmf([1.0, 3.0], [0.5, 0.5], 1.0)
        sb = size_biased(p)
        assert sb.masses[1] == pytest.approx(0.25)
        assert sb.masses[3] == pytest.approx(0.75)

    def test_mean_identity(self):
        p = negbinom_pmf(2, 1 / 3, 100)
        sb = size_biased(p)
        assert sb.mean() == pytest.approx(p.second_moment() / p.mean(), rel=1e-10)

    def test_zero_mean(self):
        with pytest.raises(ZeroMeanError):
            size_biased(discrete_pmf([0.0], [1.0], 1.0))


class TestMixedErlang:
    def test_single_model_identity(self):
        m = MixedErlang(beta=2.0, weights=[0.3, 0.7])
        beta_max, pmfs = mixed_erlang_common_rate([m])
        assert beta_max == 2.0
        assert pmfs[0][0] == 0.0
        assert pmfs[0][1] == pytest.approx(0.3)
        assert pmfs[0][2] == pytest.approx(0.7)

    def test_erlang_two_reexpressed(self):
        # Erlang(2, beta) against rate 2*beta: count is NB(2, 1/2) on {2,3,...}
        m = MixedErlang(beta=1.0, weights=[0.0, 1.0])
        fast = MixedErlang(beta=2.0, weights=[1.0])
        beta_max, pmfs = mixed_erlang_common_rate([m, fast])
        ks = np.arange(2, 30)
        expected = stats.nbinom.pmf(ks - 2, 2, 0.5)
        assert np.allclose(pmfs[0][2:30], expected, rtol=1e-12)

    def test_moment_preservation(self):
        models = [
            MixedErlang(beta=1.0, weights=[0.2, 0.5, 0.3]),
            MixedErlang(beta=3.0, weights=[0.6, 0.4]),
        ]
        beta_max, pmfs = mixed_erlang_common_rate(models, n_max=2048)
        for m, pmf in zip(models, pmfs):
            k = np.arange(pmf.shape[0])
            mean = (k * pmf).sum() / beta_max
            second = ((k * (k + 1)) * pmf).sum() / beta_max ** 2
            assert mean == pytest.approx(m.mean(), rel=1e-8)
            assert second == pytest.approx(m.second_moment(), rel=1e-8)


class TestDiscreteConstructors:
    def test_negbinom_mean(self):
        p = negbinom_pmf(2, 1 / 3, 100)
        assert p.mean() == pytest.approx(4.0, abs=1e-6)

    def test_point_mass(self):
        p = discrete_pmf([1.0], [1.0], 1.0)
        assert p.masses.tolist() == [0.0, 1.0]

    def test_bad_masses(self):
        with pytest.raises(NormalizationError):
            discrete_pmf([1.0, 2.0], [0.5, 0.6], 1.0)
