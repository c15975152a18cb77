import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from scrapfilter.model_core import (
    NONNEGATIVE,
    PPM,
    HeatRecord,
    InfeasibleMomentsError,
    ModelParams,
    NoiseSpec,
    ScrapState,
    beta_params_from_moments,
    gamma_params_from_moments,
    observe_linear,
    observe_nonlinear,
    sample_state_noise,
    state_transition,
)

GAMMA = math.log(2) / 1000


def heat(**kw):
    base = dict(m_scrap=np.array([70.0]), m_hm=285.0, f_hm=100 * PPM, m_slag=25.0,
                m_steel=345.0, f_feon=25.0)
    base.update(kw)
    return HeatRecord(**base)


class TestBetaParams:
    def test_uniform(self):
        assert beta_params_from_moments(0.5, 1 / 12) == pytest.approx((1.0, 1.0), rel=1e-12)

    def test_arcsine(self):
        a, b = beta_params_from_moments(0.5, 0.125)
        assert (a, b) == pytest.approx((0.5, 0.5))
        assert a * b / ((a + b) ** 2 * (a + b + 1)) == pytest.approx(0.125)

    def test_small_mean_scaling(self):
        # nu = 0.001 * 0.999 / 5e-6 - 1 = 198.8
        a, b = beta_params_from_moments(0.001, 5e-6)
        assert a == pytest.approx(0.001 * 198.8)
        assert b == pytest.approx(0.999 * 198.8)
        assert a == pytest.approx(0.19880, abs=1e-5)
        assert b == pytest.approx(198.60, abs=5e-3)

    @pytest.mark.parametrize("mean,var", [(0.5, 0.25), (0.5, 0.3), (0.0, 0.1), (1.0, 0.1), (0.3, 0)])
    def test_infeasible(self, mean, var):
        with pytest.raises(InfeasibleMomentsError):
            beta_params_from_moments(mean, var)

    def test_vectorised(self):
        a, b = beta_params_from_moments(np.array([0.5, 0.001]), np.array([1 / 12, 5e-6]))
        assert a.shape == b.shape == (2,)

    @given(st.floats(1e-4, 1 - 1e-4), st.floats(1e-6, 0.999))
    def test_moments_recovered(self, mean, frac):
        var = frac * mean * (1 - mean)
        a, b = beta_params_from_moments(mean, var)
        dist = stats.beta(a, b)
        assert dist.mean() == pytest.approx(mean, rel=1e-12)
        assert dist.var() == pytest.approx(var, rel=1e-12)


def test_gamma_params():
    k, theta = gamma_params_from_moments(9.7, 5 * 9.7**2)
    assert k == pytest.approx(0.2)
    assert theta == pytest.approx(48.5)


class TestNoiseSpec:
    def test_rejects_infeasible_beta(self):
        with pytest.raises(InfeasibleMomentsError):
            NoiseSpec([0.5], [0.3])

    def test_nonnegative_allows_large_mean(self):
        spec = NoiseSpec([9.7, 0.01], [5 * 9.7**2, 5e-4], (NONNEGATIVE, NONNEGATIVE))
        assert len(spec) == 2

    def test_rejects_zero_variance(self):
        with pytest.raises(ValueError):
            NoiseSpec([0.1], [0.0])


class TestSampleStateNoise:
    def test_degenerate_limit(self):
        spec = NoiseSpec([0.001, 0.3], [1e-20, 1e-20])
        x = sample_state_noise(spec, np.random.default_rng(0))
        np.testing.assert_allclose(x, spec.mean, rtol=1e-6)

    def test_beta_moments_monte_carlo(self):
        spec = NoiseSpec([0.001], [5e-6])
        x = sample_state_noise(spec, np.random.default_rng(1), size=1_000_000)[:, 0]
        assert abs(x.mean() / 0.001 - 1) < 0.01
        assert abs(x.var() / 5e-6 - 1) < 0.03
        assert x.min() >= 0 and x.max() <= 1

    def test_gamma_moments_monte_carlo(self):
        spec = NoiseSpec([9.7], [5 * 9.7**2], (NONNEGATIVE,))
        x = sample_state_noise(spec, np.random.default_rng(2), size=1_000_000)[:, 0]
        assert abs(x.mean() / 9.7 - 1) < 0.01
        assert x.min() >= 0

    def test_mixed_support_shape(self):
        spec = NoiseSpec.concat(NoiseSpec([0.002] * 3, [2e-5] * 3),
                                NoiseSpec([9.7, 0.01], [470.45, 5e-4], (NONNEGATIVE,) * 2))
        x = sample_state_noise(spec, np.random.default_rng(3), size=7)
        assert x.shape == (7, 5)


class TestStateTransition:
    def test_identity_at_zero_gamma(self):
        s = np.array([0.1, 0.2])
        np.testing.assert_array_equal(state_transition(s, [0.5, 0.5], 0.0), s)

    def test_noise_at_unit_gamma(self):
        np.testing.assert_array_equal(state_transition([0.1, 0.2], [0.5, 0.6], 1.0), [0.5, 0.6])

    def test_half_life_gamma_arithmetic(self):
        out = state_transition(np.full(45, 0.001), np.full(45, 0.003), GAMMA)
        np.testing.assert_allclose(out, 0.001 + 0.002 * GAMMA, rtol=1e-14)
        assert out[0] == pytest.approx(0.0010013863, abs=1e-10)

    def test_scrap_state_roundtrip(self):
        s = ScrapState(np.full(3, 0.002), np.array([9.7, 0.01]))
        out = state_transition(s, np.array([0.004] * 3 + [10.0, 0.02]), 0.5)
        assert isinstance(out, ScrapState)
        np.testing.assert_allclose(out.alpha, 0.003)
        np.testing.assert_allclose(out.partition, [9.85, 0.015])

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            state_transition(np.zeros(3), np.zeros(4), 0.1)

    @given(st.lists(st.floats(0, 1), min_size=1, max_size=8), st.floats(0, 1), st.data())
    def test_affine_and_convex(self, s, g, data):
        s = np.array(s)
        n = np.array(data.draw(st.lists(st.floats(0, 1), min_size=s.size, max_size=s.size)))
        out = state_transition(s, n, g)
        np.testing.assert_array_equal(out, (1 - g) * s + g * n)
        assert np.all(out >= 0) and np.all(out <= 1 + 1e-15)

    def test_geometric_convergence(self):
        s, n, g = np.array([0.9]), np.array([0.1]), 0.05
        for k in range(1, 50):
            s = state_transition(s, n, g)
            assert abs(s[0] - 0.1) == pytest.approx(0.8 * (1 - g) ** k, rel=1e-10)


class TestObserve:
    def test_linear_single_type(self):
        m = np.zeros(45)
        m[6] = 70
        alpha = np.full(45, 0.3)
        alpha[6] = 500 * PPM
        assert observe_linear(m, alpha) == pytest.approx(0.035)

    def test_linear_zero(self):
        assert observe_linear([30, 40], [0, 0]) == 0

    def test_linear_two_types(self):
        assert observe_linear([30, 40], [1000 * PPM, 2000 * PPM]) == pytest.approx(0.11)

    def test_linear_mismatch(self):
        with pytest.raises(ValueError):
            observe_linear([1, 2], [1, 2, 3])

    def test_nonlinear_no_slag(self):
        h = heat(m_slag=0.0)
        y = observe_nonlinear(h.m_scrap, [0.001], [9.7, 0.01], h)
        assert y == pytest.approx(0.07 + 285 * 100 * PPM)

    def test_nonlinear_eaf(self):
        h = heat(m_hm=0.0)
        y = observe_nonlinear(h.m_scrap, [0.001], [0.0, 0.0], h)
        assert y == pytest.approx(0.07)

    def test_nonlinear_arithmetic(self):
        h = heat()
        y = observe_nonlinear(h.m_scrap, [0.001], [9.7, 0.01], h)
        expected = (0.07 + 0.0285) / (1 + (9.7 + 0.01 * 25) * 25 / 345)
        assert y == pytest.approx(expected, rel=1e-12)
        assert y == pytest.approx(0.05716, abs=1e-4)

    def test_nonlinear_batch(self):
        h = heat()
        alphas = np.array([[0.001], [0.002]])
        parts = np.array([[9.7, 0.01], [0.0, 0.0]])
        y = observe_nonlinear(h.m_scrap, alphas, parts, h)
        assert y.shape == (2,)
        assert y[1] == pytest.approx(0.14 + 0.0285)

    def test_nonpositive_steel(self):
        with pytest.raises(ValueError):
            HeatRecord(np.ones(2), 1.0, 0.0, 1.0, 0.0, 1.0)

    @given(st.floats(0.1, 50), st.floats(0.1, 50), st.floats(0.01, 20), st.floats(1e-4, 0.1),
           st.floats(1e-5, 1e-2))
    def test_monotone_decreasing(self, slag, dslag, c1, c2, a):
        h1, h2 = heat(m_slag=slag), heat(m_slag=slag + dslag)
        m, al = h1.m_scrap, [a]
        assert observe_nonlinear(m, al, [c1, c2], h2) < observe_nonlinear(m, al, [c1, c2], h1)
        assert observe_nonlinear(m, al, [c1 + 1, c2], h1) < observe_nonlinear(m, al, [c1, c2], h1)
        assert observe_nonlinear(m, al, [c1, c2 + 0.01], h1) < observe_nonlinear(m, al, [c1, c2], h1)

    @given(st.lists(st.floats(0, 100), min_size=3, max_size=3),
           st.lists(st.floats(0, 1), min_size=3, max_size=3), st.floats(0, 300), st.floats(0, 1e-3))
    def test_zero_partition_reduces_to_linear(self, m, a, m_hm, f_hm):
        h = heat(m_scrap=np.array(m), m_hm=m_hm, f_hm=f_hm)
        y = observe_nonlinear(h.m_scrap, a, [0, 0], h)
        assert y == pytest.approx(observe_linear(m, a) + m_hm * f_hm, rel=1e-12, abs=1e-300)


def test_model_params_validation():
    spec = NoiseSpec([0.002], [2e-5])
    with pytest.raises(ValueError):
        ModelParams(0.0, spec, 1e-5)
    with pytest.raises(ValueError):
        ModelParams(0.1, spec, 0.0)
    p = ModelParams(0.1, spec, 1e-5)
    assert p.obs_variance(345.0) == pytest.approx((345e-5) ** 2)


def test_scrap_state_invariants():
    with pytest.raises(ValueError):
        ScrapState(np.array([1.5]))
    with pytest.raises(ValueError):
        ScrapState(np.array([0.5]), np.array([-1.0, 0.0]))
