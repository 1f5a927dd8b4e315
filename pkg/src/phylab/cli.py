"""Command-line entry point.

Subcommands::

    phylab experiment list [--json]
    phylab experiment schema
    phylab experiment run CONFIG [--set KEY=VALUE ...] [--out DIR]
    phylab dataset gen CONFIG [--set KEY=VALUE ...] [--out DIR]
    phylab gradcheck [--seed N]

Without ``--out``, results go to ``$PHYLAB_OUTPUT_ROOT/<experiment>-<hash>``
(``./runs`` when the variable is unset).

Exit status: 0 success, 1 runtime failure, 2 configuration or schema error,
3 non-finite loss during training.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .experiments import (
    EXPERIMENTS,
    ConfigError,
    config_hash,
    config_to_dict,
    generate_dataset,
    load_config,
    run_experiment,
    schema_description,
    write_dataset,
)
from .nn import TrainingDiverged, run_suite, save_checkpoint
from .nn.gradcheck import GradcheckReport

__all__ = ["main", "build_parser", "OUTPUT_ROOT_ENV", "GRADCHECK_TOL"]

OUTPUT_ROOT_ENV = "PHYLAB_OUTPUT_ROOT"
GRADCHECK_TOL = 1e-6
EXIT_OK, EXIT_FAILURE, EXIT_CONFIG, EXIT_DIVERGED = 0, 1, 2, 3


def _output_dir(args, cfg) -> Path:
    if args.out:
        return Path(args.out)
    root = Path(os.environ.get(OUTPUT_ROOT_ENV, "runs"))
    return root / f"{cfg.name.value}-{config_hash(cfg)}"


def _manifest(args, cfg, out_dir: Path, command: str) -> dict:
    return {
        "command": command,
        "config_path": str(Path(args.config)),
        "overrides": list(args.set or []),
        "config": config_to_dict(cfg),
        "config_hash": config_hash(cfg),
        "master_seed": cfg.master_seed,
        "output_dir": str(out_dir),
        "version": __version__,
    }


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def cmd_experiment_list(args) -> int:
    rows = [{"name": e.name.value, "description": e.description} for e in EXPERIMENTS.values()]
    if args.json:
        print(json.dumps(rows, indent=2))
    else:
        width = max(len(r["name"]) for r in rows)
        for r in rows:
            print(f"{r['name']:<{width}}  {r['description']}")
    return EXIT_OK


def cmd_experiment_schema(args) -> int:
    print(schema_description())
    return EXIT_OK


def cmd_experiment_run(args) -> int:
    cfg = load_config(args.config, args.set)
    out_dir = _output_dir(args, cfg)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_json(out_dir / "manifest.json", _manifest(args, cfg, out_dir, "experiment run"))
    out = run_experiment(cfg)
    out.result.write_csv(out_dir / "results.csv")
    for role, net in sorted(out.models.items()):
        save_checkpoint(net, out_dir / f"model_{role}.npz")
    _write_json(
        out_dir / "run_info.json",
        {"wall_time_s": round(out.result.wall_time_s, 3), "rows": len(out.result.rows), "models": sorted(out.models)},
    )
    print(f"{cfg.name.value}: {len(out.result.rows)} rows -> {out_dir / 'results.csv'}")
    return EXIT_OK


def cmd_dataset_gen(args) -> int:
    cfg = load_config(args.config, args.set)
    if EXPERIMENTS[cfg.name].dataset is None:
        raise ConfigError("experiment.name", f"{cfg.name.value} trains on freshly drawn batches; no dataset to write")
    out_dir = _output_dir(args, cfg)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_json(out_dir / "manifest.json", _manifest(args, cfg, out_dir, "dataset gen"))
    ds = generate_dataset(cfg)
    path = write_dataset(ds, out_dir / f"{cfg.name.value}.phyds")
    counts = ", ".join(f"{k}={v}" for k, v in ds.split_counts.items())
    print(f"{cfg.name.value}: {ds.features.shape[0]} rows ({counts}) -> {path}")
    return EXIT_OK


def format_report(results) -> list:
    lines = []
    for name, rep in results:
        status = "ok" if rep.passed(GRADCHECK_TOL) else "FAIL"
        layers = " ".join(f"L{i}:W={w:.1e},b={b:.1e}" for i, (w, b) in enumerate(rep.per_layer))
        lines.append(f"{status:4} {name:24} max={rep.max_error:.2e}  {layers}")
    return lines


def cmd_gradcheck(args, backward_fn=None) -> int:
    kwargs = {} if backward_fn is None else {"backward_fn": backward_fn}
    results: list[tuple[str, GradcheckReport]] = run_suite(args.seed, **kwargs)
    for line in format_report(results):
        print(line)
    worst = max(rep.max_error for _, rep in results)
    ok = worst <= GRADCHECK_TOL
    print(f"gradcheck {'passed' if ok else 'FAILED'}: max relative error {worst:.2e} (tolerance {GRADCHECK_TOL:g})")
    return EXIT_OK if ok else EXIT_FAILURE


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="phylab", description="Deep-learning physical-layer experiments.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="group", required=True)

    exp = sub.add_parser("experiment", help="list, describe or run experiments")
    exp_sub = exp.add_subparsers(dest="action", required=True)
    p = exp_sub.add_parser("list", help="print the experiment names")
    p.add_argument("--json", action="store_true", help="machine-readable output")
    p.set_defaults(func=cmd_experiment_list)
    p = exp_sub.add_parser("schema", help="print the configuration schema")
    p.set_defaults(func=cmd_experiment_schema)
    p = exp_sub.add_parser("run", help="run one experiment sweep")
    _add_config_args(p)
    p.set_defaults(func=cmd_experiment_run)

    ds = sub.add_parser("dataset", help="generate training datasets")
    ds_sub = ds.add_subparsers(dest="action", required=True)
    p = ds_sub.add_parser("gen", help="write the dataset of a learning experiment")
    _add_config_args(p)
    p.set_defaults(func=cmd_dataset_gen)

    p = sub.add_parser("gradcheck", help="finite-difference check of every layer/loss pairing")
    p.add_argument("--seed", type=int, default=7)
    p.set_defaults(func=cmd_gradcheck)
    return parser


def _add_config_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("config", help="INI-style experiment configuration")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config value (repeatable)")
    p.add_argument("--out", help=f"output directory (default: ${OUTPUT_ROOT_ENV}/<experiment>-<hash>)")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TrainingDiverged as exc:
        print(f"training diverged at iteration {exc.iteration} (loss {exc.loss!r})", file=sys.stderr)
        return EXIT_DIVERGED
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
