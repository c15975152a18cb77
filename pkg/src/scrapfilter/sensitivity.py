"""Error metrics and noise-sweep harness behind the sensitivity tables."""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .kalman import FilterOutput, run_kf
from .model_core import PPM, ElementKind
from .synth_data import Dataset, ScenarioConfig, build_dataset
from .ukf import UkfParams, run_ukf

BURN_IN = 2000
DEFAULT_SEEDS = (0, 1, 2)
TRACKED_SCRAP = 45
USAGE_WINDOW = 30

TABLE_COLUMNS = ("label", "target", "level_pct", "seed", "bias_cu_ppm", "std_cu_ppm",
                 "bias_cr_ppm", "std_cr_ppm", "rmse_scrap45_ppm", "rank", "cond")


@dataclass(frozen=True)
class ErrorStats:
    bias: float
    std: float
    n_heats: int
    burn_in: int


def prediction_errors(output: FilterOutput, dataset: Dataset) -> np.ndarray:
    """One-step-ahead predicted minus measured steel fraction, in ppm."""
    if len(output) != len(dataset):
        raise ValueError(f"length mismatch: output {len(output)} vs dataset {len(dataset)}")
    return (output.f_steel_pred - dataset.heats.f_steel) / PPM


def error_stats(errors, burn_in: int = BURN_IN) -> ErrorStats:
    """Sample mean and (ddof=1) standard deviation after ``burn_in`` heats."""
    errors = np.asarray(errors, dtype=float)
    if errors.size <= burn_in + 1:
        raise ValueError(f"need more than burn_in + 1 = {burn_in + 1} points, got {errors.size}")
    tail = errors[burn_in:]
    return ErrorStats(float(tail.mean()), float(tail.std(ddof=1)), tail.size, burn_in)


def scrap_tracking_rmse(output, dataset: Dataset, scrap_index: int = TRACKED_SCRAP,
                        burn_in: int = BURN_IN, window: int = USAGE_WINDOW):
    """RMSE (ppm) of the filtered fraction of one scrap type (1-based index).

    Returns ``(rmse, usage)`` where ``usage`` holds the average input mass of
    that scrap type over consecutive blocks of ``window`` heats.
    ``output`` may also be a plain (T, n) array of estimates.
    """
    est = output.alpha_hat if isinstance(output, FilterOutput) else np.asarray(output)
    n = dataset.alpha.shape[1]
    if not 1 <= scrap_index <= n:
        raise IndexError(f"scrap_index must lie in [1, {n}]")
    i = scrap_index - 1
    diff = est[burn_in:, i] - dataset.alpha[burn_in:, i]
    rmse = float(np.sqrt(np.mean(diff**2)) / PPM)
    return rmse, usage_averages(dataset.heats.m_scrap[:, i], window)


def usage_averages(masses, window: int = USAGE_WINDOW) -> np.ndarray:
    masses = np.asarray(masses, dtype=float)
    nblocks = math.ceil(masses.size / window)
    padded = np.full(nblocks * window, np.nan)
    padded[:masses.size] = masses
    return np.nanmean(padded.reshape(nblocks, window), axis=1)


def prior_baseline(dataset: Dataset) -> np.ndarray:
    """Estimator that never moves off the prior mean."""
    q = dataset.params.noise.mean[:dataset.alpha.shape[1]]
    return np.broadcast_to(q, dataset.alpha.shape)


def run_filter(dataset: Dataset, ukf_params: UkfParams = UkfParams(), **kwargs) -> FilterOutput:
    if dataset.kind is ElementKind.STEEL_ONLY:
        return run_kf(dataset, **kwargs)
    return run_ukf(dataset, ukf_params=ukf_params, **kwargs)


@dataclass
class ScenarioRun:
    """Everything one scenario produced, per element."""

    datasets: dict
    outputs: dict
    stats: dict
    row: dict


def run_scenario_full(config: ScenarioConfig, elements=("cu", "cr"), label: str = "",
                      target: str = "", burn_in: int = BURN_IN,
                      scrap_index: int = TRACKED_SCRAP) -> ScenarioRun:
    datasets, outputs, stats = {}, {}, {}
    for el in elements:
        ds = build_dataset(config.with_(element=el))
        out = run_filter(ds)
        datasets[el], outputs[el] = ds, out
        stats[el] = error_stats(prediction_errors(out, ds), burn_in)
    main = config.element if config.element in elements else elements[0]
    rmse, _ = scrap_tracking_rmse(outputs[main], datasets[main], scrap_index, burn_in)
    meta = datasets[main].metadata
    row = {
        "label": label or config.matrix_kind,
        "target": target,
        "level_pct": 100 * config.noise_level(target) if target else 0.0,
        "seed": config.seed,
        "bias_cu_ppm": stats["cu"].bias if "cu" in stats else math.nan,
        "std_cu_ppm": stats["cu"].std if "cu" in stats else math.nan,
        "bias_cr_ppm": stats["cr"].bias if "cr" in stats else math.nan,
        "std_cr_ppm": stats["cr"].std if "cr" in stats else math.nan,
        "rmse_scrap45_ppm": rmse,
        "rank": meta["matrix_rank"],
        "cond": meta["matrix_cond"],
    }
    return ScenarioRun(datasets, outputs, stats, row)


def run_scenario(config: ScenarioConfig, elements=("cu", "cr"), label: str = "",
                 target: str = "", burn_in: int = BURN_IN) -> dict:
    """One table row for ``config``; deterministic in ``config.seed``."""
    return run_scenario_full(config, elements, label, target, burn_in).row


@dataclass
class SweepResult:
    rows: list = field(default_factory=list)

    def __len__(self):
        return len(self.rows)

    def sorted(self) -> "SweepResult":
        key = lambda r: (r["label"], r["target"], r["level_pct"], r["seed"])
        return SweepResult(sorted(self.rows, key=key))

    def select(self, **match) -> list:
        return [r for r in self.rows if all(r[k] == v for k, v in match.items())]

    def mean(self, column: str, **match) -> float:
        vals = [r[column] for r in self.select(**match)]
        if not vals:
            raise KeyError(f"no rows match {match}")
        return float(np.mean(vals))

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(TABLE_COLUMNS)
        for r in self.rows:
            writer.writerow([_fmt(r[c]) for c in TABLE_COLUMNS])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "SweepResult":
        reader = csv.DictReader(io.StringIO(text))
        missing = set(TABLE_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"table is missing columns: {sorted(missing)}")
        rows = []
        for rec in reader:
            row = {c: float(rec[c]) for c in TABLE_COLUMNS if c not in ("label", "target")}
            row["label"], row["target"] = rec["label"], rec["target"]
            row["seed"], row["rank"] = int(row["seed"]), int(row["rank"])
            rows.append(row)
        return cls(rows)


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _cell(args):
    config, elements, label, target, burn_in = args
    return run_scenario(config, elements, label, target, burn_in)


def run_cells(cells, jobs: int = 1, progress=None) -> SweepResult:
    """Run ``(config, elements, label, target, burn_in)`` cells, optionally in a process pool."""
    cells = list(cells)
    rows = []
    if jobs > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for row in pool.map(_cell, cells):
                rows.append(row)
                if progress:
                    progress(row, len(rows), len(cells))
    else:
        for cell in cells:
            rows.append(_cell(cell))
            if progress:
                progress(rows[-1], len(rows), len(cells))
    return SweepResult(rows).sorted()


def sweep(base: ScenarioConfig, target: str, levels, seeds=DEFAULT_SEEDS,
          elements=("cu", "cr"), label: str = "", burn_in: int = BURN_IN,
          jobs: int = 1, progress=None) -> SweepResult:
    """Noise sweep over ``levels`` x ``seeds`` for a single noise target.

    Each seed reuses the same underlying draws at every level, so rows differ
    only through the targeted noise.
    """
    levels = sorted(float(x) for x in levels)
    if any(not 0 <= x <= 1 for x in levels):
        raise ValueError("noise levels must lie in [0, 1]")
    label = label or f"{base.matrix_kind}-{target}"
    cells = []
    for level in levels:
        for seed in seeds:
            noise = dict(base.noise_targets)
            noise[target] = level
            cfg = base.with_(seed=int(seed), noise_targets=noise)
            cells.append((cfg, tuple(elements), label, target, burn_in))
    return run_cells(cells, jobs, progress)


def matrix_comparison(base: ScenarioConfig, seeds=DEFAULT_SEEDS, elements=("cu", "cr"),
                      burn_in: int = BURN_IN, jobs: int = 1, progress=None) -> SweepResult:
    """One row per matrix structure and seed, at the base noise settings."""
    cells = [(base.with_(matrix_kind=kind, seed=int(seed)), tuple(elements), kind, "", burn_in)
             for kind in ("identity", "sparse", "conditioned", "lowrank") for seed in seeds]
    return run_cells(cells, jobs, progress)


def tracking_series(output: FilterOutput, dataset: Dataset, scrap_index: int = TRACKED_SCRAP,
                    window: int = USAGE_WINDOW) -> dict:
    """Per-heat estimate vs truth for one scrap type plus block-averaged usage."""
    i = scrap_index - 1
    usage = usage_averages(dataset.heats.m_scrap[:, i], window)
    series = {
        "heat_index": np.arange(1, len(dataset) + 1),
        "alpha_hat_ppm": output.alpha_hat[:, i] / PPM,
        "alpha_true_ppm": dataset.alpha[:, i] / PPM,
        "usage_avg_t": np.repeat(usage, window)[:len(dataset)],
    }
    part = output.partition_hat
    if part is not None:
        series["c1_hat"], series["c2_hat"] = part[:, 0], part[:, 1]
        series["c1_true"], series["c2_true"] = dataset.partition[:, 0], dataset.partition[:, 1]
    return series
