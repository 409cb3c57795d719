# tests/test_densities.py
import math

import numpy as np
import pytest
from scipy import integrate, stats

from common.api_error import DomainError
from app.metrics import ks_distance
from app.theory import (
    bn_relu_moments,
    bn_unit_cdf,
    bn_unit_pdf,
    erf,
    g0_cdf_from_gamma,
    g0_pdf_from_gamma,
    gamma_ratio,
    log_gamma,
    loo_normalized_variance,
    loo_var_expectation,
    rectified_gaussian_moments,
    sample_g0,
    std_normal_cdf,
    std_normal_pdf,
    std_normal_quantile,
)


class TestSpecialFunctions:
    def test_quantile_inverts_cdf(self):
        x = np.linspace(-5, 5, 101)
        np.testing.assert_allclose(std_normal_quantile(std_normal_cdf(x)), x, atol=1e-9)

    @pytest.mark.parametrize("p", [0.0, 1.0, -0.1, 1.5])
    def test_quantile_domain(self, p):
        with pytest.raises(DomainError):
            std_normal_quantile(p)

    def test_gamma_ratio(self):
        assert gamma_ratio(5.0, 3.0) == pytest.approx(12.0, rel=1e-12)
        # large arguments stay finite
        assert gamma_ratio(400.5, 400.0) == pytest.approx(math.sqrt(400.0), rel=1e-3)
        assert log_gamma(1.0) == pytest.approx(0.0, abs=1e-14)
        assert math.exp(log_gamma(5.0)) == pytest.approx(24.0, rel=1e-12)

    def test_erf(self):
        assert erf(0.0) == 0.0
        assert erf(1.0) == pytest.approx(0.8427007929497149, rel=1e-12)
        np.testing.assert_allclose(std_normal_cdf(0.0), 0.5)

    def test_scalar_in_scalar_out(self):
        assert isinstance(std_normal_pdf(0.0), float)
        assert std_normal_pdf(0.0) == pytest.approx(1 / math.sqrt(2 * math.pi))


class TestBnUnitDensity:
    @pytest.mark.parametrize("b", [4, 8, 16, 100])
    def test_normalized(self, b):
        total, _ = integrate.quad(lambda z: bn_unit_pdf(z, b), -np.inf, np.inf)
        assert total == pytest.approx(1.0, abs=1e-8)

    def test_is_scaled_student_t(self):
        b = 12
        z = np.linspace(-6, 6, 121)
        scale = math.sqrt((b - 2) / b)
        np.testing.assert_allclose(
            bn_unit_pdf(z, b), stats.t.pdf(z * scale, df=b - 2) * scale, rtol=1e-10
        )

    def test_cdf_matches_pdf(self):
        b = 9
        for z in (-2.0, 0.0, 0.7, 3.0):
            value, _ = integrate.quad(lambda t: bn_unit_pdf(t, b), -np.inf, z)
            assert bn_unit_cdf(z, b) == pytest.approx(value, abs=1e-8)

    def test_variance(self):
        second, _ = integrate.quad(lambda z: z * z * bn_unit_pdf(z, 8), -np.inf, np.inf)
        assert second == pytest.approx(loo_normalized_variance(8), rel=1e-6)
        assert loo_normalized_variance(8) == 2.0

    def test_gaussian_limit(self):
        z = np.linspace(-4, 4, 801)
        gap = np.abs(np.asarray(bn_unit_pdf(z, 10_000)) - np.asarray(std_normal_pdf(z)))
        assert gap.max() < 1e-3

    @pytest.mark.parametrize("b", [2, 2.5])
    def test_small_batch_rejected(self, b):
        with pytest.raises(DomainError):
            bn_unit_pdf(0.0, b)


class TestMoments:
    def test_relu_moments_match_quadrature(self):
        b = 16
        mean, var = bn_relu_moments(b)
        first, _ = integrate.quad(lambda z: z * bn_unit_pdf(z, b), 0, np.inf)
        second, _ = integrate.quad(lambda z: z * z * bn_unit_pdf(z, b), 0, np.inf)
        assert mean == pytest.approx(first, rel=1e-8)
        assert var == pytest.approx(second - first**2, rel=1e-6)

    def test_relu_moments_need_b_5(self):
        with pytest.raises(DomainError):
            bn_relu_moments(4)

    def test_rectified_standard_normal(self):
        mean, var = rectified_gaussian_moments(0.0, 1.0)
        assert mean == pytest.approx(1 / math.sqrt(2 * math.pi), rel=1e-14)
        assert var == pytest.approx(0.5 - 1 / (2 * math.pi), rel=1e-14)

    @pytest.mark.parametrize("alpha", [0.5, 2.0])
    @pytest.mark.parametrize("mu,sigma", [(0.0, 1.0), (1.0, 1.0), (-1.0, 2.0)])
    def test_rectified_scaling(self, alpha, mu, sigma):
        mean, var = rectified_gaussian_moments(mu, sigma)
        scaled_mean, scaled_var = rectified_gaussian_moments(alpha * mu, alpha * sigma)
        assert scaled_mean == pytest.approx(alpha * mean, rel=1e-12)
        assert scaled_var == pytest.approx(alpha**2 * var, rel=1e-12)

    @pytest.mark.parametrize("mu,sigma", [(0.0, 1.0), (1.0, 1.0), (-1.0, 2.0)])
    def test_rectified_monte_carlo(self, mu, sigma):
        n = 1_000_000
        sample = np.maximum(np.random.default_rng(7).normal(mu, sigma, n), 0.0)
        mean, var = rectified_gaussian_moments(mu, sigma)
        assert abs(sample.mean() - mean) < 4 * sample.std() / math.sqrt(n)
        assert sample.var() == pytest.approx(var, rel=0.01)

    def test_sigma_must_be_positive(self):
        with pytest.raises(DomainError):
            rectified_gaussian_moments(0.0, 0.0)

    def test_loo_variance_expectation(self):
        assert loo_var_expectation(1.0, 10) == pytest.approx(8 / 9)


class TestG0Density:
    @pytest.mark.parametrize("gamma", [0.1, 0.4669, 5.0])
    def test_symmetric(self, gamma):
        g = np.linspace(0.01, 0.99, 99)
        np.testing.assert_allclose(g0_pdf_from_gamma(g, gamma), g0_pdf_from_gamma(1 - g, gamma))

    def test_gamma_one_is_uniform(self):
        np.testing.assert_allclose(g0_pdf_from_gamma(np.linspace(0.05, 0.95, 19), 1.0), 1.0)

    @pytest.mark.parametrize("gamma", [0.1, 0.4669])
    def test_normalized(self, gamma):
        total, _ = integrate.quad(lambda g: g0_pdf_from_gamma(g, gamma), 1e-12, 1 - 1e-12)
        assert total == pytest.approx(1.0, abs=1e-6)

    def test_cdf(self):
        g = np.linspace(0.0, 1.0, 21)
        cdf = np.asarray(g0_cdf_from_gamma(g, 0.7))
        assert g0_cdf_from_gamma(0.5, 0.7) == pytest.approx(0.5)
        np.testing.assert_allclose(cdf + cdf[::-1], 1.0, atol=1e-12)
        assert cdf[0] == 0.0 and cdf[-1] == 1.0

    @pytest.mark.parametrize("delta", [0.05, 0.2])
    def test_center_mass_falls_as_gamma_grows(self, delta):
        gammas = [0.05, 0.2, 0.5, 1.0, 2.0, 5.0]
        masses = [
            integrate.quad(lambda g: g0_pdf_from_gamma(g, gamma), 0.5 - delta, 0.5 + delta)[0]
            for gamma in gammas
        ]
        assert all(np.diff(masses) < 0)
        assert masses[3] == pytest.approx(2 * delta)

    def test_neutral_is_a_step(self):
        np.testing.assert_array_equal(g0_cdf_from_gamma([0.2, 0.5, 0.8], 0.0), [0.0, 1.0, 1.0])
        np.testing.assert_array_equal(g0_pdf_from_gamma([0.3, 0.7], 0.0), [0.0, 0.0])

    def test_domain(self):
        with pytest.raises(DomainError):
            g0_pdf_from_gamma(1.0, 0.5)
        with pytest.raises(DomainError):
            g0_pdf_from_gamma(0.5, -0.1)
        with pytest.raises(DomainError):
            g0_cdf_from_gamma(1.2, 0.5)

    def test_sampling_agrees_with_cdf(self):
        samples = sample_g0(0.4669, 100_000, np.random.default_rng(3))
        assert ks_distance(samples, lambda g: g0_cdf_from_gamma(g, 0.4669)) < 0.01

    @pytest.mark.slow
    @pytest.mark.parametrize("gamma", [0.1, 0.4669, 5.0])
    def test_histogram_of_center_draws(self, gamma):
        n = 4_000_000
        samples = sample_g0(gamma, n, np.random.default_rng(11))
        counts, edges = np.histogram(samples, bins=40, range=(0.0, 1.0))
        expected = np.diff(np.asarray(g0_cdf_from_gamma(edges, gamma))) * n
        # bins holding at least 2% of the draws
        populated = expected >= 0.02 * n
        assert populated.sum() >= 4
        np.testing.assert_allclose(counts[populated], expected[populated], rtol=0.02)
