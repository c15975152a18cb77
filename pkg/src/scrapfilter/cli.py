"""Command-line entry point: ``scrapfilter {generate,filter,sweep,report}``.

Exit codes: 0 success, 1 acceptance failure, 2 usage/config error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from pathlib import Path

import yaml

from . import __version__
from .io import (
    SchemaError,
    config_to_dict,
    read_dataset,
    write_dataset,
    write_filtered,
    write_json,
    write_series,
)
from .reference import checks_for, comparison_lines
from .sensitivity import (
    BURN_IN,
    DEFAULT_SEEDS,
    TRACKED_SCRAP,
    SweepResult,
    error_stats,
    matrix_comparison,
    prediction_errors,
    run_filter,
    scrap_tracking_rmse,
    sweep,
    tracking_series,
)
from .synth_data import ScenarioConfig, build_dataset
from .ukf import UkfParams

log = logging.getLogger("scrapfilter")

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3

SCENARIO_KEYS = {f for f in ScenarioConfig.__dataclass_fields__}
RUN_KEYS = {"burn_in", "seeds", "levels", "target", "elements", "label", "scrap_index",
            "alpha_u", "beta_u", "kappa_u"}

SCRAP_LEVELS = (0.0, 0.01, 0.05, 0.10, 0.20)
PRESETS = {
    "table2": {"kind": "matrix"},
    "table3": {"kind": "sweep", "target": "scrap_mass", "levels": SCRAP_LEVELS},
    "table4": {"kind": "sweep", "target": "slag_mass", "levels": SCRAP_LEVELS},
    "table5": {"kind": "sweep", "target": "feon", "levels": (0.0, 0.05, 0.10, 0.20)},
}


class ConfigError(ValueError):
    pass


def _key_lines(text: str) -> dict:
    try:
        node = yaml.compose(text)
    except yaml.YAMLError:
        return {}
    if not isinstance(node, yaml.MappingNode):
        return {}
    return {k.value: k.start_mark.line + 1 for k, _ in node.value}


def load_config(path) -> dict:
    """Parse a YAML key-value config. Errors carry ``path:line`` diagnostics."""
    if path is None:
        return {}
    p = Path(path)
    try:
        text = p.read_text()
    except FileNotFoundError:
        raise FileNotFoundError(f"config file not found: {p}") from None
    try:
        data = yaml.safe_load(text) or {}
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"{p}:{mark.line + 1}" if mark else str(p)
        raise ConfigError(f"{where}: invalid YAML: {getattr(exc, 'problem', exc)}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{p}:1: top level must be a mapping of key: value")
    lines = _key_lines(text)
    for key in data:
        if key not in SCENARIO_KEYS | RUN_KEYS:
            raise ConfigError(f"{p}:{lines.get(key, '?')}: unknown key {key!r}")
    data["_lines"] = lines
    data["_path"] = str(p)
    return data


def scenario_from(cfg: dict, **overrides) -> ScenarioConfig:
    fields = {k: v for k, v in cfg.items() if k in SCENARIO_KEYS}
    fields.update({k: v for k, v in overrides.items() if v is not None})
    if "boost_columns" in fields:
        fields["boost_columns"] = tuple(fields["boost_columns"])
    try:
        return ScenarioConfig(**fields)
    except (TypeError, ValueError) as exc:
        where = cfg.get("_path", "<defaults>")
        bad = next((k for k in fields if k in str(exc)), None)
        line = cfg.get("_lines", {}).get(bad)
        raise ConfigError(f"{where}{':' + str(line) if line else ''}: {exc}") from None


def ukf_params_from(cfg: dict) -> UkfParams:
    keys = ("alpha_u", "beta_u", "kappa_u")
    return UkfParams(**{k: float(cfg[k]) for k in keys if k in cfg})


def write_manifest(out: Path, command: str, cfg: dict, seeds, outputs, started: float):
    write_json(out / f"manifest_{command}.json", {
        "command": command,
        "version": __version__,
        "config": {k: v for k, v in cfg.items() if not k.startswith("_")},
        "seeds": list(seeds),
        "outputs": sorted(str(p) for p in outputs),
        "duration_s": round(time.time() - started, 3),
    })


def cmd_generate(args) -> int:
    started = time.time()
    cfg = load_config(args.config)
    config = scenario_from(cfg, seed=args.seed, element=args.element, T=args.T)
    dataset = build_dataset(config)
    out = Path(args.out)
    paths = write_dataset(dataset, out)
    write_manifest(out, "generate", {**cfg, **config_to_dict(config)}, [config.seed],
                   paths.values(), started)
    print(f"wrote {len(dataset)} heats x {config.n_scrap} scrap types ({config.element}, "
          f"{config.matrix_kind}) to {out}")
    return EXIT_OK


def cmd_filter(args) -> int:
    started = time.time()
    cfg = load_config(args.config)
    dataset = read_dataset(args.data)
    if args.element and args.element != dataset.element:
        raise ConfigError(f"dataset in {args.data} is {dataset.element!r}, not {args.element!r}")
    burn_in = args.burn_in if args.burn_in is not None else cfg.get("burn_in", BURN_IN)
    scrap = int(cfg.get("scrap_index", TRACKED_SCRAP))
    output = run_filter(dataset, ukf_params_from(cfg))
    stats = error_stats(prediction_errors(output, dataset), burn_in)
    rmse, _ = scrap_tracking_rmse(output, dataset, scrap, burn_in)

    out = Path(args.out or args.data)
    out.mkdir(parents=True, exist_ok=True)
    paths = [write_filtered(output, dataset, out / "filtered.csv"),
             write_series(tracking_series(output, dataset, scrap), out / f"tracking_{scrap}.csv")]
    summary = {"element": dataset.element, "bias_ppm": stats.bias, "std_ppm": stats.std,
               "n_heats": stats.n_heats, "burn_in": burn_in, f"rmse_scrap{scrap}_ppm": rmse}
    paths.append(write_json(out / "metrics.json", summary))
    write_manifest(out, "filter", cfg, [dataset.config.seed], paths, started)
    print(f"element {dataset.element}: bias {stats.bias:+.3f} ppm, std {stats.std:.3f} ppm, "
          f"rmse scrap {scrap} {rmse:.2f} ppm (heats {stats.n_heats}, burn-in {burn_in})")
    return EXIT_OK


def cmd_sweep(args) -> int:
    started = time.time()
    cfg = load_config(args.config)
    preset = PRESETS.get(args.preset, {}) if args.preset else {}
    seeds = tuple(cfg.get("seeds", DEFAULT_SEEDS))
    if args.seed is not None:
        seeds = tuple(args.seed + i for i in range(len(seeds)))
    base = scenario_from(cfg, T=args.T)
    burn_in = args.burn_in if args.burn_in is not None else cfg.get("burn_in", BURN_IN)
    elements = tuple(cfg.get("elements", ("cu", "cr")))
    jobs = args.jobs or os.cpu_count() or 1

    def progress(row, done, total):
        log.info("[%d/%d] %s %s %.0f%% seed %d: std_cu %.2f std_cr %.2f", done, total,
                 row["label"], row["target"] or "-", row["level_pct"], row["seed"],
                 row["std_cu_ppm"], row["std_cr_ppm"])

    if preset.get("kind") == "matrix":
        result = matrix_comparison(base, seeds, elements, burn_in, jobs, progress)
    else:
        target = cfg.get("target", preset.get("target"))
        levels = cfg.get("levels", preset.get("levels"))
        if target is None or levels is None:
            raise ConfigError("sweep needs --preset or 'target' and 'levels' in the config")
        result = sweep(base, target, levels, seeds, elements, cfg.get("label", ""), burn_in,
                       jobs, progress)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    table = out / "table.csv"
    table.write_text(result.to_csv())
    write_manifest(out, "sweep", {**cfg, "preset": args.preset, **config_to_dict(base)}, seeds,
                   [table], started)
    print(f"wrote {len(result)} rows to {table}")
    return EXIT_OK


def cmd_report(args) -> int:
    rows = []
    for path in args.tables:
        rows += SweepResult.from_csv(Path(path).read_text()).rows
    res = SweepResult(rows)
    for line in comparison_lines(res):
        print(line)
    checks = checks_for(res)
    print()
    for c in checks:
        print(c.line())
    failed = [c for c in checks if not c.passed]
    if failed:
        print(f"{len(failed)} of {len(checks)} checks out of tolerance: "
              + "; ".join(c.name for c in failed))
        return EXIT_FAIL
    print(f"all {len(checks)} checks within tolerance")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="scrapfilter", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="simulate a dataset and write heats/truth CSVs")
    g.add_argument("--config")
    g.add_argument("--out", required=True)
    g.add_argument("--seed", type=int)
    g.add_argument("--element", choices=["cu", "cr"])
    g.add_argument("--T", type=int)
    g.set_defaults(func=cmd_generate)

    f = sub.add_parser("filter", help="run KF (cu) or UKF (cr) on a generated dataset")
    f.add_argument("--data", required=True, help="directory holding heats.csv/truth.csv")
    f.add_argument("--config")
    f.add_argument("--out")
    f.add_argument("--element", choices=["cu", "cr"])
    f.add_argument("--burn-in", type=int)
    f.set_defaults(func=cmd_filter)

    s = sub.add_parser("sweep", help="run a noise sweep or a matrix-structure comparison")
    s.add_argument("--config")
    s.add_argument("--preset", choices=sorted(PRESETS))
    s.add_argument("--out", required=True)
    s.add_argument("--seed", type=int, help="first seed; consecutive seeds follow")
    s.add_argument("--jobs", type=int)
    s.add_argument("--burn-in", type=int)
    s.add_argument("--T", type=int)
    s.set_defaults(func=cmd_sweep)

    r = sub.add_parser("report", help="compare table.csv files with the reference values")
    r.add_argument("tables", nargs="+")
    r.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(message)s")
    try:
        return args.func(args)
    except (ConfigError, SchemaError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FileNotFoundError, PermissionError, IsADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
