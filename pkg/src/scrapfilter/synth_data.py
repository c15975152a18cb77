"""Synthetic heat datasets: hidden trajectories, scrap-mass matrices, process
variables, mass-balance steel compositions and injected measurement noise.

Every random quantity is drawn from its own named substream of the scenario
seed, so switching one noise target on or off leaves all other draws intact.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field, replace

import numpy as np

from .model_core import (
    NONNEGATIVE,
    PPM,
    ElementKind,
    HeatRecord,
    ModelParams,
    NoiseSpec,
    partition_denominator,
    sample_state_noise,
)

GAMMA = np.log(2) / 1000
PRIOR_GROUPS_PPM = ((200.0, 1000.0), (1000.0, 2000.0), (2000.0, 5000.0))
Q_SCALE = 5.0
PARTITION_PRIOR = np.array([9.7, 0.01])

NOISE_TARGETS = ("scrap_mass", "slag_mass", "feon", "steel_mass", "f_steel")
MATRIX_KINDS = ("identity", "conditioned", "lowrank", "sparse")

# Uniform bounds per heat; fractions in ppm, f_feon in percent.
PROCESS_BOUNDS = {
    "m_hm": (280.0, 290.0),
    "f_hm_cu": (20.0, 30.0),
    "f_hm_cr": (50.0, 200.0),
    "m_slag": (20.0, 30.0),
    "m_steel": (340.0, 350.0),
    "f_feon": (20.0, 30.0),
}


@dataclass(frozen=True)
class ElementInfo:
    name: str
    kind: ElementKind
    obs_noise_std: float
    f_hm_key: str


ELEMENTS = {
    "cu": ElementInfo("cu", ElementKind.STEEL_ONLY, 10 * PPM, "f_hm_cu"),
    "cr": ElementInfo("cr", ElementKind.STEEL_SLAG, 5 * PPM, "f_hm_cr"),
}


def element_info(element: str) -> ElementInfo:
    try:
        return ELEMENTS[element.lower()]
    except KeyError:
        raise ValueError(f"unknown element {element!r}; expected one of {sorted(ELEMENTS)}") from None


def substream(seed: int, name: str) -> np.random.Generator:
    """Independent generator for the quantity ``name`` under ``seed``."""
    key = zlib.crc32(name.encode())
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(key,)))


@dataclass(frozen=True)
class ScenarioConfig:
    n_scrap: int = 45
    T: int = 20000
    matrix_kind: str = "sparse"
    target_cond: float = 1e5
    rank: int = 20
    density: float = 0.1
    boost_columns: tuple[int, ...] = (1, 23, 45)
    total_scrap_mass: float = 70.0
    noise_targets: dict = field(default_factory=dict)
    seed: int = 0
    element: str = "cu"
    gamma: float = GAMMA

    def __post_init__(self):
        if self.T < 1 or self.n_scrap < 1:
            raise ValueError("T and n_scrap must be at least 1")
        if self.total_scrap_mass <= 0:
            raise ValueError("total_scrap_mass must be positive")
        if self.matrix_kind not in MATRIX_KINDS:
            raise ValueError(f"matrix_kind must be one of {MATRIX_KINDS}")
        for k, v in self.noise_targets.items():
            if k not in NOISE_TARGETS:
                raise ValueError(f"unknown noise target {k!r}; expected one of {NOISE_TARGETS}")
            if not 0 <= v <= 1:
                raise ValueError(f"noise level for {k} must lie in [0, 1]")
        element_info(self.element)
        object.__setattr__(self, "boost_columns", tuple(int(c) for c in self.boost_columns))
        object.__setattr__(self, "noise_targets", dict(self.noise_targets))

    def noise_level(self, target: str) -> float:
        return float(self.noise_targets.get(target, 0.0))

    def with_(self, **changes) -> "ScenarioConfig":
        return replace(self, **changes)


@dataclass(frozen=True)
class Heats:
    """Columnar per-heat records. ``f_steel`` is the measured (or, in truth, exact) fraction."""

    m_scrap: np.ndarray
    m_hm: np.ndarray
    f_hm: np.ndarray
    m_slag: np.ndarray
    m_steel: np.ndarray
    f_feon: np.ndarray
    f_steel: np.ndarray

    def __len__(self):
        return self.m_hm.size

    def record(self, t: int) -> HeatRecord:
        return HeatRecord(self.m_scrap[t], self.m_hm[t], self.f_hm[t], self.m_slag[t],
                          self.m_steel[t], self.f_feon[t], self.f_steel[t])

    def __iter__(self):
        return (self.record(t) for t in range(len(self)))


@dataclass(frozen=True)
class Dataset:
    """``heats`` is what the filter sees; ``truth`` holds noise-free values."""

    heats: Heats
    truth: Heats
    alpha: np.ndarray
    partition: np.ndarray | None
    params: ModelParams
    config: ScenarioConfig
    metadata: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.heats)

    @property
    def element(self) -> str:
        return self.config.element

    @property
    def kind(self) -> ElementKind:
        return self.params.element_kind


def generate_priors(n_scrap: int, rng: np.random.Generator) -> np.ndarray:
    """Long-run mean fraction per scrap type, three equal groups of rising impurity."""
    if n_scrap % 3:
        raise ValueError("n_scrap must split into three equal groups")
    k = n_scrap // 3
    return np.concatenate([rng.uniform(lo, hi, k) for lo, hi in PRIOR_GROUPS_PPM]) * PPM


def _ar_trajectory(start, spec: NoiseSpec, gamma: float, T: int, rng) -> np.ndarray:
    out = np.empty((T, start.size))
    out[0] = start
    if T > 1:
        eta = sample_state_noise(spec, rng, size=T - 1)
        for t in range(T - 1):
            out[t + 1] = (1 - gamma) * out[t] + gamma * eta[t]
    return out


def generate_alpha_trajectory(q, Q_diag, gamma: float, T: int, rng) -> np.ndarray:
    """(T, n) fraction trajectory starting at ``q``, Beta noise."""
    q = np.asarray(q, dtype=float)
    return _ar_trajectory(q, NoiseSpec(q, Q_diag), gamma, T, rng)


def generate_partition_trajectory(q_c, Qc_diag, gamma: float, T: int, rng) -> np.ndarray:
    """(T, 2) partition-coefficient trajectory starting at ``q_c``, Gamma noise."""
    q_c = np.asarray(q_c, dtype=float)
    spec = NoiseSpec(q_c, Qc_diag, (NONNEGATIVE,) * q_c.size)
    return _ar_trajectory(q_c, spec, gamma, T, rng)


def _normalize_rows(M: np.ndarray, total: float) -> np.ndarray:
    return M * (total / M.sum(axis=1, keepdims=True))


def gen_mass_matrix_identity(T: int, n_scrap: int, total: float = 70.0) -> np.ndarray:
    """One scrap type per heat, cycling through the types in order."""
    M = np.zeros((T, n_scrap))
    M[np.arange(T), np.arange(T) % n_scrap] = total
    return M


def svd_spectrum_matrix(T, n_scrap, target_cond, rng=None) -> np.ndarray:
    """``U diag(s) V^T`` with random orthonormal ``U``, ``V`` and cond exactly ``target_cond``."""
    if target_cond < 1:
        raise ValueError("target_cond must be >= 1")
    rng = np.random.default_rng() if rng is None else rng
    U, _ = np.linalg.qr(rng.standard_normal((T, n_scrap)))
    V, _ = np.linalg.qr(rng.standard_normal((n_scrap, n_scrap)))
    s = np.geomspace(1.0, 1.0 / target_cond, n_scrap)
    return (U * s) @ V.T


def gen_mass_matrix_conditioned(T, n_scrap, target_cond, total=70.0, rng=None):
    """SVD-built matrix with a geometric singular spectrum spanning ``target_cond``.

    Entries are shifted to be nonnegative and rows rescaled to ``total``, which
    moves the condition number; the achieved value is returned too.

    Returns
    -------
    M : ndarray (T, n_scrap)
    achieved_cond : float
    """
    M = svd_spectrum_matrix(T, n_scrap, target_cond, rng)
    lo = M.min()
    if lo < 0:
        M = M - lo
    M = _normalize_rows(M, total)
    return M, float(np.linalg.cond(M))


def gen_mass_matrix_lowrank(T, n_scrap, rank, total=70.0, rng=None):
    """Product of nonnegative (T, rank) and (rank, n_scrap) uniform factors, rows rescaled."""
    if not 1 <= rank <= n_scrap:
        raise ValueError(f"rank must lie in [1, {n_scrap}]")
    rng = np.random.default_rng() if rng is None else rng
    M = rng.uniform(size=(T, rank)) @ rng.uniform(size=(rank, n_scrap))
    return _normalize_rows(M, total)


def gen_mass_matrix_sparse(T, n_scrap, density=0.1, boost_columns=(1, 23, 45), total=70.0,
                           rng=None):
    """Sparse usage mask with extra mass on a few favoured scrap types.

    ``boost_columns`` are 1-based. Each row keeps at least one nonzero entry.
    """
    if not 0 < density <= 1:
        raise ValueError("density must lie in (0, 1]")
    cols = np.asarray(boost_columns, dtype=int) - 1
    if np.any(cols < 0) or np.any(cols >= n_scrap):
        raise ValueError("boost column out of range")
    rng = np.random.default_rng() if rng is None else rng
    mask = rng.uniform(size=(T, n_scrap)) < density
    forced = rng.integers(n_scrap, size=T)
    empty = ~mask.any(axis=1)
    mask[empty, forced[empty]] = True
    M = np.where(mask, rng.uniform(size=(T, n_scrap)), 0.0)
    if cols.size:
        M[:, cols] += rng.uniform(0.5, 1.0, size=(T, cols.size))
    return _normalize_rows(M, total)


def generate_process_vars(T: int, rng: np.random.Generator) -> dict:
    """Per-heat uniforms: masses in t, hot-metal fractions as fractions, f_feon in percent."""
    out = {k: rng.uniform(lo, hi, T) for k, (lo, hi) in PROCESS_BOUNDS.items()}
    out["f_hm_cu"] *= PPM
    out["f_hm_cr"] *= PPM
    return out


def compute_f_steel(alpha, m_scrap, m_hm, f_hm, m_steel, element_kind,
                    partition=None, m_slag=None, f_feon=None):
    """Noise-free element fraction in steel from the mass balance (vectorised over heats)."""
    m_steel = np.asarray(m_steel, dtype=float)
    if np.any(m_steel <= 0):
        raise ValueError("m_steel must be positive")
    num = np.einsum("...i,...i->...", m_scrap, alpha) + m_hm * f_hm
    if ElementKind(element_kind) is ElementKind.STEEL_ONLY:
        return num / m_steel
    partition = np.asarray(partition, dtype=float)
    den = partition_denominator(partition[..., 0], partition[..., 1], f_feon, m_slag, m_steel)
    return num / den / m_steel


def apply_multiplicative_noise(values, level_c: float, rng=None, z=None):
    """``values * (1 + xi)`` with ``xi ~ N(0, level_c**2)``, clamped at zero.

    ``z`` supplies pre-drawn standard normals so that sweeps over ``level_c``
    reuse the same draws.
    """
    values = np.asarray(values, dtype=float)
    if level_c == 0 and z is None:
        return values.copy()
    if z is None:
        z = rng.standard_normal(values.shape)
    return np.maximum(values * (1 + level_c * z), 0.0)


def model_params(element: str, q: np.ndarray, gamma: float = GAMMA) -> ModelParams:
    """Generating/filter parameters for ``element`` given scrap priors ``q``."""
    info = element_info(element)
    noise = NoiseSpec(q, Q_SCALE * q**2)
    if info.kind is ElementKind.STEEL_SLAG:
        noise = NoiseSpec.concat(
            noise, NoiseSpec(PARTITION_PRIOR, Q_SCALE * PARTITION_PRIOR**2, (NONNEGATIVE,) * 2))
    return ModelParams(gamma, noise, info.obs_noise_std, info.kind)


def build_mass_matrix(config: ScenarioConfig, rng) -> tuple[np.ndarray, dict]:
    T, n, total = config.T, config.n_scrap, config.total_scrap_mass
    kind = config.matrix_kind
    if kind == "identity":
        M = gen_mass_matrix_identity(T, n, total)
    elif kind == "conditioned":
        M, _ = gen_mass_matrix_conditioned(T, n, config.target_cond, total, rng)
    elif kind == "lowrank":
        M = gen_mass_matrix_lowrank(T, n, config.rank, total, rng)
    else:
        M = gen_mass_matrix_sparse(T, n, config.density, config.boost_columns, total, rng)
    return M, matrix_summary(M)


def matrix_summary(M: np.ndarray) -> dict:
    s = np.linalg.svd(M, compute_uv=False)
    rank = int(np.sum(s > 1e-10 * s[0]))
    cond = float(s[0] / s[-1]) if rank == min(M.shape) else float("inf")
    return {"rank": rank, "cond": cond}


def build_dataset(config: ScenarioConfig) -> Dataset:
    """Assemble a complete dataset for ``config.element``; deterministic in ``config.seed``."""
    info = element_info(config.element)
    seed, T, n = config.seed, config.T, config.n_scrap

    q = generate_priors(n, substream(seed, f"priors/{info.name}"))
    params = model_params(info.name, q, config.gamma)
    alpha = generate_alpha_trajectory(q, Q_SCALE * q**2, config.gamma, T,
                                      substream(seed, f"alpha/{info.name}"))
    partition = None
    if info.kind is ElementKind.STEEL_SLAG:
        partition = generate_partition_trajectory(
            PARTITION_PRIOR, Q_SCALE * PARTITION_PRIOR**2, config.gamma, T,
            substream(seed, f"partition/{info.name}"))

    M, summary = build_mass_matrix(config, substream(seed, "matrix"))
    pv = generate_process_vars(T, substream(seed, "process"))
    f_hm = pv[info.f_hm_key]
    f_true = compute_f_steel(alpha, M, pv["m_hm"], f_hm, pv["m_steel"], info.kind,
                             partition, pv["m_slag"], pv["f_feon"])
    truth = Heats(M, pv["m_hm"], f_hm, pv["m_slag"], pv["m_steel"], pv["f_feon"], f_true)

    meas = f_true + info.obs_noise_std * substream(seed, f"meas/{info.name}").standard_normal(T)

    def noisy(target, values):
        z = substream(seed, f"noise/{target}").standard_normal(np.shape(values))
        return apply_multiplicative_noise(values, config.noise_level(target), z=z)

    m_steel = np.maximum(noisy("steel_mass", pv["m_steel"]), 1e-6)
    heats = Heats(noisy("scrap_mass", M), pv["m_hm"], f_hm, noisy("slag_mass", pv["m_slag"]),
                  m_steel, noisy("feon", pv["f_feon"]), noisy("f_steel", meas))
    metadata = {"matrix_rank": summary["rank"], "matrix_cond": summary["cond"]}
    return Dataset(heats, truth, alpha, partition, params, config, metadata)
