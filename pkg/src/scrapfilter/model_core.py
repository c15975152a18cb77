"""Domain types and the deterministic parts of the scrap state-space models.

Units: masses in tonnes, element fractions stored dimensionless. ``PPM``
converts a fraction to parts per million at I/O boundaries.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

PPM = 1e-6

UNIT_INTERVAL = "unit-interval"
NONNEGATIVE = "nonnegative"


class InfeasibleMomentsError(ValueError):
    """Requested (mean, variance) pair has no Beta distribution."""


class ElementKind(str, Enum):
    STEEL_ONLY = "steel-only"
    STEEL_SLAG = "steel-slag"


def _as_vector(x, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class ScrapState:
    """Element fraction per scrap type, optionally extended with partition coefficients."""

    alpha: np.ndarray
    partition: np.ndarray | None = None

    def __post_init__(self):
        alpha = _as_vector(self.alpha, "alpha")
        if np.any(alpha < 0) or np.any(alpha > 1):
            raise ValueError("alpha components must lie in [0, 1]")
        object.__setattr__(self, "alpha", alpha)
        if self.partition is not None:
            part = _as_vector(self.partition, "partition")
            if part.shape != (2,):
                raise ValueError("partition must hold exactly [c1, c2]")
            if np.any(part < 0):
                raise ValueError("partition coefficients must be nonnegative")
            object.__setattr__(self, "partition", part)

    @property
    def vector(self) -> np.ndarray:
        if self.partition is None:
            return self.alpha
        return np.concatenate([self.alpha, self.partition])


@dataclass(frozen=True)
class NoiseSpec:
    """Mean and diagonal variance of the state noise, with a support tag per component."""

    mean: np.ndarray
    variance: np.ndarray
    support: tuple[str, ...] = ()

    def __post_init__(self):
        mean = _as_vector(self.mean, "mean")
        var = _as_vector(self.variance, "variance")
        if mean.shape != var.shape:
            raise ValueError("mean and variance must have equal length")
        support = tuple(self.support) or (UNIT_INTERVAL,) * mean.size
        if len(support) != mean.size:
            raise ValueError("support must tag every component")
        if np.any(var <= 0):
            raise ValueError("variance components must be positive")
        for i, tag in enumerate(support):
            if tag == UNIT_INTERVAL:
                if not 0 < mean[i] < 1:
                    raise InfeasibleMomentsError(f"component {i}: mean {mean[i]} not in (0, 1)")
                if var[i] >= mean[i] * (1 - mean[i]):
                    raise InfeasibleMomentsError(
                        f"component {i}: variance {var[i]} >= mean*(1-mean)")
            elif tag == NONNEGATIVE:
                if mean[i] <= 0:
                    raise InfeasibleMomentsError(f"component {i}: mean must be positive")
            else:
                raise ValueError(f"unknown support tag {tag!r}")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "variance", var)
        object.__setattr__(self, "support", support)

    def __len__(self):
        return self.mean.size

    @classmethod
    def concat(cls, *specs: "NoiseSpec") -> "NoiseSpec":
        return cls(np.concatenate([s.mean for s in specs]),
                   np.concatenate([s.variance for s in specs]),
                   sum((s.support for s in specs), ()))


@dataclass(frozen=True)
class ModelParams:
    gamma: float
    noise: NoiseSpec
    obs_noise_std: float
    element_kind: ElementKind = ElementKind.STEEL_ONLY

    def __post_init__(self):
        if not 0 < self.gamma < 1:
            raise ValueError("gamma must lie in (0, 1)")
        if self.obs_noise_std <= 0:
            raise ValueError("obs_noise_std must be positive")
        object.__setattr__(self, "element_kind", ElementKind(self.element_kind))

    def obs_variance(self, m_steel):
        """Observation noise variance of the element mass in steel, (std * m_steel)**2."""
        return (self.obs_noise_std * np.asarray(m_steel, dtype=float)) ** 2


@dataclass(frozen=True)
class HeatRecord:
    """Inputs and measurements of one heat. ``f_feon`` is in percent."""

    m_scrap: np.ndarray
    m_hm: float
    f_hm: float
    m_slag: float
    m_steel: float
    f_feon: float
    f_steel_meas: float = field(default=float("nan"))

    def __post_init__(self):
        m = _as_vector(self.m_scrap, "m_scrap")
        if np.any(m < 0) or min(self.m_hm, self.m_slag) < 0:
            raise ValueError("masses must be nonnegative")
        if self.m_steel <= 0:
            raise ValueError("m_steel must be positive")
        object.__setattr__(self, "m_scrap", m)


def beta_params_from_moments(mean, variance):
    """Beta shape parameters ``(a, b)`` with the given mean and variance.

    Works elementwise on arrays.

    >>> beta_params_from_moments(0.5, 1 / 12)
    (1.0, 1.0)
    """
    mean = np.asarray(mean, dtype=float)
    variance = np.asarray(variance, dtype=float)
    if np.any(variance <= 0) or np.any(mean <= 0) or np.any(mean >= 1):
        raise InfeasibleMomentsError("need 0 < mean < 1 and variance > 0")
    if np.any(variance >= mean * (1 - mean)):
        raise InfeasibleMomentsError("variance must be below mean*(1-mean)")
    nu = mean * (1 - mean) / variance - 1
    a, b = mean * nu, (1 - mean) * nu
    if a.ndim == 0:
        return float(a), float(b)
    return a, b


def gamma_params_from_moments(mean, variance):
    """Gamma ``(shape, scale)`` with the given mean and variance."""
    mean = np.asarray(mean, dtype=float)
    variance = np.asarray(variance, dtype=float)
    if np.any(mean <= 0) or np.any(variance <= 0):
        raise InfeasibleMomentsError("need mean > 0 and variance > 0")
    shape, scale = mean**2 / variance, variance / mean
    if shape.ndim == 0:
        return float(shape), float(scale)
    return shape, scale


def sample_state_noise(spec: NoiseSpec, rng: np.random.Generator, size=None) -> np.ndarray:
    """Draw one state-noise vector (or ``size`` of them, stacked on axis 0).

    Unit-interval components come from a moment-matched Beta, nonnegative
    components from a moment-matched Gamma.
    """
    shape = (spec.mean.size,) if size is None else (size, spec.mean.size)
    out = np.empty(shape)
    unit = np.array([s == UNIT_INTERVAL for s in spec.support])
    if unit.any():
        a, b = beta_params_from_moments(spec.mean[unit], spec.variance[unit])
        out[..., unit] = rng.beta(a, b, size=out[..., unit].shape)
    if (~unit).any():
        k, theta = gamma_params_from_moments(spec.mean[~unit], spec.variance[~unit])
        out[..., ~unit] = rng.gamma(k, theta, size=out[..., ~unit].shape)
    return out


def state_transition(state, noise, gamma: float):
    """``(1 - gamma) * state + gamma * noise``.

    Accepts a :class:`ScrapState` (returns one) or a plain vector.
    """
    vec = state.vector if isinstance(state, ScrapState) else np.asarray(state, dtype=float)
    noise = np.asarray(noise, dtype=float)
    if vec.shape != noise.shape:
        raise ValueError(f"dimension mismatch: state {vec.shape} vs noise {noise.shape}")
    out = (1 - gamma) * vec + gamma * noise
    if isinstance(state, ScrapState):
        n = state.alpha.size
        return ScrapState(out[:n], None if state.partition is None else out[n:])
    return out


def observe_linear(m_scrap, alpha) -> float:
    """Mass [t] of the element coming from scrap: ``m_scrap . alpha``."""
    m = np.asarray(m_scrap, dtype=float)
    a = np.asarray(alpha, dtype=float)
    if m.shape[-1] != a.shape[-1]:
        raise ValueError(f"dimension mismatch: {m.shape} vs {a.shape}")
    return m @ a.T if a.ndim > 1 else m @ a


def partition_denominator(c1, c2, f_feon, m_slag, m_steel):
    """``1 + (c1 + c2 * f_feon) * m_slag / m_steel``."""
    if np.any(np.asarray(m_steel) <= 0):
        raise ValueError("m_steel must be positive")
    return 1 + (c1 + c2 * f_feon) * m_slag / m_steel


def observe_nonlinear(m_scrap, alpha, partition, heat: HeatRecord):
    """Mass [t] of the element in steel when it partitions into slag.

    ``alpha`` may be a single state (n,) or a batch (k, n); ``partition``
    correspondingly (2,) or (k, 2).
    """
    if heat.m_steel <= 0:
        raise ValueError("m_steel must be positive")
    partition = np.asarray(partition, dtype=float)
    num = observe_linear(m_scrap, alpha) + heat.m_hm * heat.f_hm
    den = partition_denominator(partition[..., 0], partition[..., 1],
                                heat.f_feon, heat.m_slag, heat.m_steel)
    return num / den
