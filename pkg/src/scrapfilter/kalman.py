"""Kalman filter for the linear (steel-only) model.

The process noise has nonzero mean ``q``, so the prediction step pulls the
state towards ``q`` instead of leaving it in place:

    mean' = (1 - gamma) * mean + gamma * q
    cov'  = (1 - gamma)**2 * cov + gamma**2 * diag(Q)
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model_core import ElementKind


@dataclass(frozen=True)
class GaussianBelief:
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        cov = np.atleast_2d(np.asarray(self.cov, dtype=float))
        if cov.shape != (mean.size, mean.size):
            raise ValueError(f"cov shape {cov.shape} does not match mean length {mean.size}")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @classmethod
    def from_prior(cls, mean, variance) -> "GaussianBelief":
        return cls(np.array(mean, dtype=float), np.diag(variance))

    def is_valid(self, sym_tol=1e-10, psd_tol=1e-8) -> bool:
        """Symmetric and PSD up to tolerances relative to the trace."""
        tr = abs(np.trace(self.cov)) or 1.0
        if np.max(np.abs(self.cov - self.cov.T)) > sym_tol * tr:
            return False
        return np.linalg.eigvalsh(self.cov).min() >= -psd_tol * tr


@dataclass(frozen=True)
class FilterOutput:
    """Per-heat filter history, arrays stacked along axis 0.

    ``pred_*`` are one-step-ahead (before the heat's observation),
    ``post_*`` after it. ``pred_cov``/``post_cov`` are only kept when the
    run was asked to store covariances.
    """

    pred_mean: np.ndarray
    post_mean: np.ndarray
    y_obs: np.ndarray
    y_pred: np.ndarray
    innovation_variance: np.ndarray
    f_steel_pred: np.ndarray
    pred_cov: np.ndarray | None = None
    post_cov: np.ndarray | None = None
    n_scrap: int | None = None

    def __len__(self):
        return self.y_pred.size

    @property
    def innovation(self) -> np.ndarray:
        return self.y_obs - self.y_pred

    @property
    def alpha_hat(self) -> np.ndarray:
        """Filtered scrap fractions (posterior mean, scrap components only)."""
        n = self.n_scrap or self.post_mean.shape[1]
        return self.post_mean[:, :n]

    @property
    def partition_hat(self) -> np.ndarray | None:
        n = self.n_scrap or self.post_mean.shape[1]
        return self.post_mean[:, n:] if self.post_mean.shape[1] > n else None


def kf_predict(belief: GaussianBelief, gamma: float, q, Q_diag) -> GaussianBelief:
    q = np.asarray(q, dtype=float)
    Q_diag = np.asarray(Q_diag, dtype=float)
    if q.shape != belief.mean.shape or Q_diag.shape != belief.mean.shape:
        raise ValueError("dimension mismatch between belief and noise parameters")
    mean = (1 - gamma) * belief.mean + gamma * q
    cov = (1 - gamma) ** 2 * belief.cov
    cov[np.diag_indices_from(cov)] += gamma**2 * Q_diag
    return GaussianBelief(mean, cov)


def kf_update(belief: GaussianBelief, m_t, y_obs: float, H_t: float):
    """Scalar-observation update with ``y = m_t . state + noise(H_t)``.

    Returns ``(posterior, y_pred, innovation_variance)``. The covariance is
    updated in Joseph form.
    """
    if not H_t > 0:
        raise ValueError("H_t must be positive")
    m = np.asarray(m_t, dtype=float)
    P = belief.cov
    Pm = P @ m
    y_pred = float(m @ belief.mean)
    S = float(m @ Pm) + H_t
    K = Pm / S
    mean = belief.mean + K * (y_obs - y_pred)
    A = np.eye(m.size) - np.outer(K, m)
    cov = A @ P @ A.T + H_t * np.outer(K, K)
    cov = 0.5 * (cov + cov.T)
    return GaussianBelief(mean, cov), y_pred, S


def run_kf(dataset, params=None, init: GaussianBelief | None = None,
           store_cov: bool = False, check=None) -> FilterOutput:
    """Filter a steel-only dataset heat by heat.

    ``y_obs = m_steel * f_steel_meas - m_hm * f_hm`` and
    ``H_t = (obs_noise_std * m_steel)**2``. ``check``, if given, is called
    with each predicted and updated belief.
    """
    params = dataset.params if params is None else params
    if params.element_kind is not ElementKind.STEEL_ONLY:
        raise ValueError("run_kf needs a steel-only element; use run_ukf for partitioning elements")
    h = dataset.heats
    T = len(h)
    q, Q = params.noise.mean, params.noise.variance
    n = q.size
    belief = init or GaussianBelief.from_prior(q, Q)

    y_obs = h.m_steel * h.f_steel - h.m_hm * h.f_hm
    H = params.obs_variance(h.m_steel)
    pred_mean = np.empty((T, n))
    post_mean = np.empty((T, n))
    y_pred = np.empty(T)
    S = np.empty(T)
    pred_cov = np.empty((T, n, n)) if store_cov else None
    post_cov = np.empty((T, n, n)) if store_cov else None

    for t in range(T):
        belief = kf_predict(belief, params.gamma, q, Q)
        if check:
            check(belief)
        pred_mean[t] = belief.mean
        if store_cov:
            pred_cov[t] = belief.cov
        belief, y_pred[t], S[t] = kf_update(belief, h.m_scrap[t], y_obs[t], H[t])
        if check:
            check(belief)
        post_mean[t] = belief.mean
        if store_cov:
            post_cov[t] = belief.cov

    f_pred = (y_pred + h.m_hm * h.f_hm) / h.m_steel
    return FilterOutput(pred_mean, post_mean, y_obs, y_pred, S, f_pred,
                        pred_cov, post_cov, n_scrap=n)
