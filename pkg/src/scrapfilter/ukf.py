"""Unscented Kalman filter for elements that partition between steel and slag.

State is ``[alpha_1..alpha_n, c1, c2]``. The transition is affine so the
prediction step is the exact Kalman one; only the observation update goes
through sigma points.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kalman import FilterOutput, GaussianBelief, kf_predict
from .model_core import ElementKind, HeatRecord, observe_nonlinear


class SigmaPointError(np.linalg.LinAlgError):
    pass


@dataclass(frozen=True)
class UkfParams:
    alpha_u: float = 1.0
    beta_u: float = 2.0
    kappa_u: float = 0.0
    clamp: bool = True

    def lam(self, n: int) -> float:
        lam = self.alpha_u**2 * (n + self.kappa_u) - n
        if n + lam <= 0:
            raise ValueError(f"n + lambda must be positive (n={n}, lambda={lam})")
        return lam


@dataclass(frozen=True)
class SigmaSet:
    points: np.ndarray
    weights_mean: np.ndarray
    weights_cov: np.ndarray

    def mean(self) -> np.ndarray:
        return self.weights_mean @ self.points

    def cov(self) -> np.ndarray:
        d = self.points - self.mean()
        return (d.T * self.weights_cov) @ d


JITTER_STEPS = (0.0, 1e-12, 1e-10, 1e-8)


def psd_sqrt(P: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor of ``P``, adding diagonal jitter (relative to trace/n) on failure."""
    n = P.shape[0]
    scale = np.trace(P) / n
    if scale == 0 and not P.any():
        return np.zeros_like(P)
    for eps in JITTER_STEPS:
        try:
            return np.linalg.cholesky(P + eps * scale * np.eye(n) if eps else P)
        except np.linalg.LinAlgError:
            continue
    raise SigmaPointError("covariance is not positive definite even after jitter")


def sigma_points(belief: GaussianBelief, params: UkfParams = UkfParams()) -> SigmaSet:
    """Scaled unscented transform: ``2n + 1`` points around ``belief.mean``."""
    x, P = belief.mean, belief.cov
    n = x.size
    lam = params.lam(n)
    L = psd_sqrt((n + lam) * P)
    pts = np.empty((2 * n + 1, n))
    pts[0] = x
    pts[1:n + 1] = x + L.T
    pts[n + 1:] = x - L.T
    wm = np.full(2 * n + 1, 0.5 / (n + lam))
    wc = wm.copy()
    wm[0] = lam / (n + lam)
    wc[0] = wm[0] + 1 - params.alpha_u**2 + params.beta_u
    return SigmaSet(pts, wm, wc)


def ukf_predict(belief: GaussianBelief, gamma: float, q_ext, Q_ext_diag) -> GaussianBelief:
    return kf_predict(belief, gamma, q_ext, Q_ext_diag)


def _clamp_points(pts: np.ndarray, n_scrap: int) -> np.ndarray:
    out = pts.copy()
    np.clip(out[:, :n_scrap], 0.0, 1.0, out=out[:, :n_scrap])
    np.maximum(out[:, n_scrap:], 0.0, out=out[:, n_scrap:])
    return out


def ukf_update(belief: GaussianBelief, heat: HeatRecord, y_obs: float, H_t: float,
               params: UkfParams = UkfParams(), return_sigma: bool = False):
    """Sigma-point update through the partition observation.

    Returns ``(posterior, y_pred, innovation_variance)``, plus the
    :class:`SigmaSet` when ``return_sigma`` is set.
    """
    if not H_t > 0:
        raise ValueError("H_t must be positive")
    n_scrap = heat.m_scrap.size
    sig = sigma_points(belief, params)
    pts = _clamp_points(sig.points, n_scrap) if params.clamp else sig.points
    ys = observe_nonlinear(heat.m_scrap, pts[:, :n_scrap], pts[:, n_scrap:], heat)
    y_pred = float(sig.weights_mean @ ys)
    dy = ys - y_pred
    dx = sig.points - sig.mean()
    S = float(sig.weights_cov @ dy**2) + H_t
    Pxy = (sig.weights_cov * dy) @ dx
    K = Pxy / S
    mean = belief.mean + K * (y_obs - y_pred)
    cov = belief.cov - S * np.outer(K, K)
    cov = 0.5 * (cov + cov.T)
    post = GaussianBelief(mean, cov)
    if return_sigma:
        return post, y_pred, S, sig
    return post, y_pred, S


def run_ukf(dataset, params=None, ukf_params: UkfParams = UkfParams(),
            init: GaussianBelief | None = None, store_cov: bool = False,
            check=None) -> FilterOutput:
    """Filter a steel/slag dataset; ``y_obs = m_steel * f_steel_meas``.

    ``check``, if given, is called as ``check(belief)`` after each predict
    and ``check(belief, sigma_set)`` after each update.
    """
    params = dataset.params if params is None else params
    if params.element_kind is not ElementKind.STEEL_SLAG:
        raise ValueError("run_ukf needs a steel/slag element; use run_kf for steel-only elements")
    h = dataset.heats
    T = len(h)
    q, Q = params.noise.mean, params.noise.variance
    d = q.size
    n_scrap = h.m_scrap.shape[1]
    belief = init or GaussianBelief.from_prior(q, Q)

    y_obs = h.m_steel * h.f_steel
    H = params.obs_variance(h.m_steel)
    pred_mean = np.empty((T, d))
    post_mean = np.empty((T, d))
    y_pred = np.empty(T)
    S = np.empty(T)
    pred_cov = np.empty((T, d, d)) if store_cov else None
    post_cov = np.empty((T, d, d)) if store_cov else None

    for t in range(T):
        belief = ukf_predict(belief, params.gamma, q, Q)
        if check:
            check(belief)
        pred_mean[t] = belief.mean
        if store_cov:
            pred_cov[t] = belief.cov
        heat = h.record(t)
        out = ukf_update(belief, heat, y_obs[t], H[t], ukf_params, return_sigma=check is not None)
        belief, y_pred[t], S[t] = out[:3]
        if check:
            check(belief, out[3])
        post_mean[t] = belief.mean
        if store_cov:
            post_cov[t] = belief.cov

    f_pred = y_pred / h.m_steel
    return FilterOutput(pred_mean, post_mean, y_obs, y_pred, S, f_pred,
                        pred_cov, post_cov, n_scrap=n_scrap)
