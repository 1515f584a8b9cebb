"""Command-line entry point: ``pbit-forge {map,run,oracle,sweep,drift-rerun}``.

Exit codes: 0 ok, 1 validation error, 2 capacity error, 3 campaign failure
(no trial reached the optimum) or an uncolorable instance.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
from pathlib import Path

import yaml

from . import harness
from .config import ExperimentConfig, load_config, with_dotted
from .errors import CapacityError, ContractError

EXIT_OK, EXIT_INVALID, EXIT_CAPACITY, EXIT_FAILED = 0, 1, 2, 3
OUT_ENV = "PBIT_FORGE_OUT"


def parse_grid(items: list[str]) -> dict[str, list]:
    """``["schedule.v_end=0.15,0.25"]`` -> ``{"schedule.v_end": [0.15, 0.25]}``."""
    grid: dict[str, list] = {}
    for item in items:
        key, sep, values = item.partition("=")
        if not sep or not key:
            raise ContractError(f"grid axis must look like KEY=v1,v2: {item!r}")
        grid[key.strip()] = [yaml.safe_load(v) for v in values.split(",") if v.strip()]
    return grid


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, type=Path, help="experiment YAML")
    common.add_argument("--seed", type=int, help="override the config seed")
    common.add_argument("--out", type=Path, help=f"output directory (default ${OUT_ENV})")
    common.add_argument("--trials", type=int, help="override the trial count")
    common.add_argument("--mode", choices=["hw", "ideal"], help="override machine.mode")
    common.add_argument("--jobs", type=int, default=1, help="worker processes for trials")
    common.add_argument("-v", "--verbose", action="store_true")

    ap = argparse.ArgumentParser(prog="pbit-forge", description="Crossbar/SMTJ Ising machine experiments.")
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("map", parents=[common], help="lower the instance and write the conductance map")
    sub.add_parser("run", parents=[common], help="run an annealing campaign")
    sub.add_parser("oracle", parents=[common], help="certify the optimum by exhaustive search")
    sw = sub.add_parser("sweep", parents=[common], help="run the campaign over a parameter grid")
    sw.add_argument("--grid", action="append", default=[], metavar="KEY=v1,v2",
                    help="grid axis; repeatable; defaults to the config's sweep block")
    sub.add_parser("drift-rerun", parents=[common], help="fresh vs drift-aged rerun on one array")
    return ap


def _apply_overrides(cfg: ExperimentConfig, args) -> ExperimentConfig:
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    if args.trials is not None:
        cfg = dataclasses.replace(cfg, trials=args.trials)
    if args.mode is not None:
        cfg = with_dotted(cfg, "machine.mode", args.mode)
    return cfg


def _out_dir(args) -> Path | None:
    if args.out is not None:
        return args.out
    env = os.environ.get(OUT_ENV)
    return Path(env) if env else None


def _emit(obj: dict) -> None:
    sys.stdout.write(json.dumps(obj, indent=2) + "\n")


def _dispatch(args) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    out = _out_dir(args)
    if args.jobs < 1:
        raise ContractError("--jobs must be >= 1")

    if args.command == "map":
        _emit(harness.cmd_map(cfg, out))
        return EXIT_OK
    if args.command == "oracle":
        report = harness.cmd_oracle(cfg)
        _emit(report)
        return EXIT_OK if report["feasible"] else EXIT_FAILED
    if args.command == "run":
        summary = harness.cmd_run(cfg, out, args.jobs)
        _emit({k: v for k, v in summary.items() if k != "results"})
        return EXIT_OK if summary["successes"] else EXIT_FAILED
    if args.command == "sweep":
        grid = parse_grid(args.grid) if args.grid else cfg.sweep
        result = harness.cmd_sweep(cfg, grid, out, args.jobs)
        _emit(result)
        ok = any(p.get("success_rate") for p in result["points"])
        return EXIT_OK if ok else EXIT_FAILED
    if args.command == "drift-rerun":
        result = harness.cmd_drift_rerun(cfg, out)
        _emit({k: v for k, v in result.items() if k != "pairs"})
        return EXIT_OK if result["fresh_success_rate"] or result["aged_success_rate"] else EXIT_FAILED
    raise AssertionError(args.command)


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _dispatch(args)
    except CapacityError as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except ContractError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
