"""CSV and metadata files for datasets, filter outputs and tracking series.

Floats are written with ``repr`` so files round-trip exactly and repeated
runs are byte-identical.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
from pathlib import Path

import numpy as np

from .model_core import PPM, ElementKind
from .synth_data import Dataset, Heats, ScenarioConfig, element_info, model_params

HEATS_FILE = "heats.csv"
TRUTH_FILE = "truth.csv"
METADATA_FILE = "metadata.json"


class SchemaError(ValueError):
    """A CSV file does not have the expected columns."""


def heats_columns(n: int) -> list[str]:
    return (["heat_index"] + [f"m_scrap_{i}" for i in range(1, n + 1)]
            + ["m_hm", "f_hm_ppm", "m_slag", "m_steel", "f_feon_pct", "f_steel_meas_ppm"])


def truth_columns(n: int) -> list[str]:
    # noise-free process variables follow the hidden state so truth.csv is self-contained
    return (["heat_index"] + [f"alpha_{i}" for i in range(1, n + 1)]
            + ["c1", "c2", "f_steel_true_ppm"]
            + [f"m_scrap_true_{i}" for i in range(1, n + 1)]
            + ["m_hm", "f_hm_ppm", "m_slag_true", "m_steel_true", "f_feon_true_pct"])


def filtered_columns(n: int, partition: bool) -> list[str]:
    cols = (["heat_index"] + [f"alpha_hat_{i}" for i in range(1, n + 1)]
            + ["y_pred", "innovation", "f_steel_pred_ppm"])
    return cols + ["c1_hat", "c2_hat"] if partition else cols


def fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return "" if math.isnan(v) else repr(float(v))
    if isinstance(v, np.integer):
        return str(int(v))
    return str(v)


def write_table(path, columns, data: np.ndarray):
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        indexed = columns[0] == "heat_index"
        for row in data:
            cells = [fmt(v) for v in row]
            if indexed:
                cells[0] = str(int(row[0]))
            w.writerow(cells)
    return path


def read_table(path, expected=None) -> tuple[list[str], np.ndarray]:
    """Read a numeric CSV. Raises :class:`SchemaError` naming the offending line or column."""
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        if expected is not None and header != list(expected):
            missing = [c for c in expected if c not in header]
            extra = [c for c in header if c not in expected]
            raise SchemaError(f"{path}: expected {len(expected)} columns, found {len(header)}"
                              f" (missing {missing[:5]}, unexpected {extra[:5]})")
        rows = []
        for lineno, rec in enumerate(reader, start=2):
            if len(rec) != len(header):
                raise SchemaError(f"{path}:{lineno}: expected {len(header)} columns, found {len(rec)}")
            try:
                rows.append([float(v) if v != "" else math.nan for v in rec])
            except ValueError as exc:
                raise SchemaError(f"{path}:{lineno}: {exc}") from None
    return header, np.array(rows, dtype=float).reshape(len(rows), len(header))


def config_to_dict(config: ScenarioConfig) -> dict:
    d = dataclasses.asdict(config)
    d["boost_columns"] = list(config.boost_columns)
    return d


def write_json(path, payload: dict):
    path = Path(path)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True, default=_json_default) + "\n")
    return path


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    raise TypeError(f"cannot serialise {type(o).__name__}")


def write_dataset(dataset: Dataset, out_dir) -> dict:
    """Write heats.csv, truth.csv and metadata.json; returns the written paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    h, tr = dataset.heats, dataset.truth
    T, n = h.m_scrap.shape
    idx = np.arange(1, T + 1)[:, None]

    heats = np.hstack([idx, h.m_scrap, np.column_stack(
        [h.m_hm, h.f_hm / PPM, h.m_slag, h.m_steel, h.f_feon, h.f_steel / PPM])])
    part = dataset.partition if dataset.partition is not None else np.full((T, 2), np.nan)
    truth = np.hstack([idx, dataset.alpha / PPM, part, (tr.f_steel / PPM)[:, None], tr.m_scrap,
                       np.column_stack([tr.m_hm, tr.f_hm / PPM, tr.m_slag, tr.m_steel, tr.f_feon])])
    paths = {
        "heats": write_table(out / HEATS_FILE, heats_columns(n), heats),
        "truth": write_table(out / TRUTH_FILE, truth_columns(n), truth),
    }
    meta = {
        "config": config_to_dict(dataset.config),
        "element": dataset.element,
        "n_scrap": n,
        "T": T,
        "q_ppm": dataset.params.noise.mean[:n] / PPM,
        **dataset.metadata,
    }
    paths["metadata"] = write_json(out / METADATA_FILE, meta)
    return paths


def read_dataset(data_dir) -> Dataset:
    d = Path(data_dir)
    meta_path = d / METADATA_FILE
    meta = json.loads(meta_path.read_text())
    n = int(meta["n_scrap"])
    _, H = read_table(d / HEATS_FILE, heats_columns(n))
    _, R = read_table(d / TRUTH_FILE, truth_columns(n))
    if H.shape[0] != R.shape[0]:
        raise SchemaError(f"{d}: heats.csv has {H.shape[0]} rows but truth.csv has {R.shape[0]}")

    cfg = dict(meta["config"])
    cfg["boost_columns"] = tuple(cfg["boost_columns"])
    config = ScenarioConfig(**cfg)
    q = np.asarray(meta["q_ppm"], dtype=float) * PPM
    params = model_params(meta["element"], q, config.gamma)

    heats = Heats(H[:, 1:n + 1], H[:, n + 1], H[:, n + 2] * PPM, H[:, n + 3], H[:, n + 4],
                  H[:, n + 5], H[:, n + 6] * PPM)
    alpha = R[:, 1:n + 1] * PPM
    partition = R[:, n + 1:n + 3]
    if element_info(meta["element"]).kind is ElementKind.STEEL_ONLY:
        partition = None
    k = n + 4
    truth = Heats(R[:, k:k + n], R[:, k + n], R[:, k + n + 1] * PPM, R[:, k + n + 2],
                  R[:, k + n + 3], R[:, k + n + 4], R[:, n + 3] * PPM)
    extra = {key: meta[key] for key in ("matrix_rank", "matrix_cond") if key in meta}
    return Dataset(heats, truth, alpha, partition, params, config, extra)


def write_filtered(output, dataset: Dataset, path):
    n = dataset.alpha.shape[1]
    T = len(output)
    cols = [np.arange(1, T + 1)[:, None], output.alpha_hat / PPM,
            np.column_stack([output.y_pred, output.innovation, output.f_steel_pred / PPM])]
    part = output.partition_hat
    if part is not None:
        cols.append(part)
    return write_table(path, filtered_columns(n, part is not None), np.hstack(cols))


def write_series(series: dict, path):
    cols = list(series)
    return write_table(path, cols, np.column_stack([series[c] for c in cols]))
