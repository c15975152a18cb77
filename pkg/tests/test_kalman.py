import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import slice_dataset
from scrapfilter.kalman import GaussianBelief, kf_predict, kf_update, run_kf
from scrapfilter.model_core import PPM
from scrapfilter.synth_data import gen_mass_matrix_identity


def random_belief(rng, n):
    A = rng.standard_normal((n, n))
    return GaussianBelief(rng.uniform(0, 1, n), A @ A.T + 0.1 * np.eye(n))


class TestPredict:
    def test_gamma_zero(self, rng):
        b = random_belief(rng, 4)
        out = kf_predict(b, 0.0, np.ones(4), np.ones(4))
        np.testing.assert_array_equal(out.mean, b.mean)
        np.testing.assert_array_equal(out.cov, b.cov)

    def test_gamma_one(self, rng):
        b = random_belief(rng, 3)
        out = kf_predict(b, 1.0, [1, 2, 3], [4, 5, 6])
        np.testing.assert_array_equal(out.mean, [1, 2, 3])
        np.testing.assert_array_equal(out.cov, np.diag([4.0, 5, 6]))

    def test_hand_arithmetic(self):
        out = kf_predict(GaussianBelief([0.0], [[1.0]]), 0.5, [1.0], [4.0])
        assert out.mean[0] == pytest.approx(0.5)
        assert out.cov[0, 0] == pytest.approx(1.25)

    def test_dimension_mismatch(self, rng):
        with pytest.raises(ValueError):
            kf_predict(random_belief(rng, 3), 0.1, np.ones(2), np.ones(3))


class TestUpdate:
    def test_hand_arithmetic(self):
        post, y_pred, S = kf_update(GaussianBelief([0.0], [[1.0]]), [1.0], 1.0, 1.0)
        assert (y_pred, S) == (0.0, 2.0)
        assert post.mean[0] == pytest.approx(0.5)
        assert post.cov[0, 0] == pytest.approx(0.5)

    def test_uninformative_mass(self, rng):
        b = random_belief(rng, 5)
        post, y_pred, S = kf_update(b, np.zeros(5), 3.0, 0.7)
        assert y_pred == 0 and S == 0.7
        np.testing.assert_allclose(post.mean, b.mean)
        np.testing.assert_allclose(post.cov, b.cov)

    def test_huge_noise(self, rng):
        b = random_belief(rng, 5)
        post, _, _ = kf_update(b, rng.uniform(0, 10, 5), 3.0, 1e12)
        # gain is O(1/H): residual movement of order 1e-10
        np.testing.assert_allclose(post.mean, b.mean, atol=1e-8)
        np.testing.assert_allclose(post.cov, b.cov, atol=1e-8)

    def test_matches_textbook_form(self, rng):
        b = random_belief(rng, 6)
        m = rng.uniform(0, 10, 6)
        post, _, S = kf_update(b, m, 1.3, 0.2)
        K = b.cov @ m / S
        np.testing.assert_allclose(post.cov, b.cov - S * np.outer(K, K), atol=1e-12)

    def test_rejects_nonpositive_noise(self, rng):
        with pytest.raises(ValueError):
            kf_update(random_belief(rng, 2), [1, 1], 1.0, 0.0)

    @settings(max_examples=50)
    @given(st.integers(0, 2**32 - 1), st.floats(1e-3, 1e3))
    def test_scale_invariance(self, seed, k):
        r = np.random.default_rng(seed)
        b = random_belief(r, 4)
        m, y, H = r.uniform(0, 5, 4), r.normal(), r.uniform(0.1, 2)
        p1, _, _ = kf_update(b, m, y, H)
        p2, _, _ = kf_update(b, k * m, k * y, k**2 * H)
        np.testing.assert_allclose(p2.mean, p1.mean, rtol=1e-10, atol=1e-12)


def test_belief_validation():
    with pytest.raises(ValueError):
        GaussianBelief(np.zeros(2), np.eye(3))
    assert not GaussianBelief([0, 0], [[1, 0.5], [0.4, 1]]).is_valid()
    assert not GaussianBelief([0, 0], [[1, 0], [0, -1]]).is_valid()


def test_identity_contraction():
    """Constant alpha, no process noise, exact observations: error per visited type shrinks."""
    n, T = 5, 60
    alpha = np.linspace(0.001, 0.005, n)
    M = gen_mass_matrix_identity(T, n)
    b = GaussianBelief(np.full(n, 0.003), np.diag(np.full(n, 1e-6)))
    err = np.abs(b.mean - alpha)
    for t in range(T):
        b = kf_predict(b, 0.0, np.zeros(n), np.zeros(n))
        b, _, _ = kf_update(b, M[t], M[t] @ alpha, 1e-12)
        i = t % n
        new = abs(b.mean[i] - alpha[i])
        assert new <= err[i]
        err[i] = new


def test_recovers_constant_alpha():
    n = 8
    r = np.random.default_rng(3)
    alpha = r.uniform(0.001, 0.005, n)
    M = r.uniform(0, 10, (3 * n, n))
    b = GaussianBelief(np.full(n, 0.003), np.eye(n) * 1e-4)
    for m in M:
        b = kf_predict(b, 0.0, np.zeros(n), np.zeros(n))
        b, _, _ = kf_update(b, m, m @ alpha, 1e-20)
    np.testing.assert_allclose(b.mean, alpha, rtol=1e-6)


class TestRunKF:
    def test_empty(self, cu_small):
        out = run_kf(slice_dataset(cu_small, 0))
        assert len(out) == 0

    def test_rejects_slag_element(self, cr_small):
        with pytest.raises(ValueError, match="steel-only"):
            run_kf(cr_small)

    def test_outputs(self, cu_small):
        out = run_kf(cu_small)
        h = cu_small.heats
        assert out.pred_mean.shape == (3000, 45)
        np.testing.assert_allclose(out.y_obs, h.m_steel * h.f_steel - h.m_hm * h.f_hm)
        np.testing.assert_allclose(out.innovation, out.y_obs - out.y_pred)
        assert np.all(out.innovation_variance > 0)
        np.testing.assert_allclose(out.f_steel_pred * h.m_steel - h.m_hm * h.f_hm, out.y_pred,
                                   rtol=1e-9, atol=1e-15)
        np.testing.assert_allclose(out.y_pred, np.einsum("ti,ti->t", h.m_scrap, out.pred_mean))

    def test_covariance_hygiene_full_run(self, cu_full):
        bad = []
        run_kf(cu_full, check=lambda b: b.is_valid() or bad.append(b))
        assert not bad

    def test_innovation_whiteness(self, cu_full):
        out = run_kf(cu_full)
        e = (out.innovation / np.sqrt(out.innovation_variance))[2000:]
        e = e - e.mean()
        rho1 = (e[1:] @ e[:-1]) / (e @ e)
        assert abs(rho1) <= 0.05

    def test_sparse_baseline_near_measurement_noise(self, cu_full):
        out = run_kf(cu_full)
        err = (out.f_steel_pred - cu_full.heats.f_steel)[2000:] / PPM
        assert 8.0 <= err.std(ddof=1) <= 13.5
