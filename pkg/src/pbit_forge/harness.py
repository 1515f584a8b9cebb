"""Campaign driver: map, run, oracle, sweep and drift-rerun experiments.

Every trial draws its randomness from SeedSequence([seed, trial]) so results
do not depend on how trials are scheduled across workers.
"""
from __future__ import annotations

import dataclasses
import itertools
import json
import logging
import os
import statistics
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .annealer import (
    IsingMachine,
    RunTrace,
    SmtjAssignment,
    UpdateMode,
    UpdateOrder,
    run_annealing,
)
from .config import ExperimentConfig, config_from_dict, with_dotted
from .devices import (
    CrossbarArray,
    apply_drift,
    conductance_to_csv,
    program_and_verify,
    sample_device,
)
from .errors import ContractError
from .ising import IsingModel, SpinState
from .mapping import (
    CrossbarLowering,
    WeightedGraph,
    conflict_coloring,
    decode_coloring,
    decode_cut,
    map_coloring,
    map_maxcut,
    read_graph,
    to_crossbar,
)
from .oracle import (
    ENERGY_TOL,
    coloring_exists,
    coloring_ground_state,
    exhaustive_ground_state,
    maxcut_brute,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Instance:
    graph: WeightedGraph
    model: IsingModel
    lowering: CrossbarLowering


def build_instance(cfg: ExperimentConfig) -> Instance:
    graph = read_graph(cfg.graph_path)
    if cfg.problem == "maxcut":
        model = map_maxcut(graph, cfg.A)
    else:
        model = map_coloring(graph, cfg.colors, cfg.A)
    lowering = to_crossbar(model, cfg.levels, cfg.g_scale)
    return Instance(graph, model, lowering)


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    with os.fdopen(fd, "w", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False) + "\n"


def trial_streams(seed: int, trial: int) -> dict[str, np.random.Generator]:
    program, device, drift, anneal = np.random.SeedSequence([seed, trial]).spawn(4)
    return {
        "program": np.random.default_rng(program),
        "device": np.random.default_rng(device),
        "drift": np.random.default_rng(drift),
        "anneal": np.random.default_rng(anneal),
    }


def make_devices(cfg: ExperimentConfig, n: int, rng: np.random.Generator):
    base = cfg.device.build()
    spread = cfg.device_spread.build()
    policy = SmtjAssignment(cfg.machine.assignment)
    if policy is SmtjAssignment.FIXED:
        return (base,)
    if policy is SmtjAssignment.PER_TRIAL:
        return (sample_device(base, spread, rng),)
    return tuple(sample_device(base, spread, rng) for _ in range(n))


def program_crossbar(cfg: ExperimentConfig, inst: Instance, rng) -> CrossbarArray:
    low = inst.lowering
    blank = CrossbarArray.blank(low.conductance_targets, low.column_polarity, cfg.machine.hardware_faithful)
    return program_and_verify(
        blank, low.conductance_targets, cfg.programming.build(), rng, cfg.programming.allow_degraded
    )


def make_machine(cfg, inst, crossbar, devices, mode: UpdateMode | None = None) -> IsingMachine:
    mcfg = cfg.machine.build(cfg.seed)
    if mode is not None:
        mcfg = dataclasses.replace(mcfg, mode=mode)
    classes = conflict_coloring(inst.model) if mcfg.order is UpdateOrder.CHROMATIC else None
    return IsingMachine(inst.model, mcfg, devices, crossbar, inst.lowering, color_classes=classes)


@dataclass
class Optimum:
    min_energy: float
    ground_state_count: int
    best_cut: float | None = None
    colorable: bool | None = None


def _coloring_optimum(graph: WeightedGraph, C: int, A: float, model: IsingModel) -> tuple[float, int, bool]:
    closed = coloring_ground_state(graph, C, A)
    if closed is not None:
        return closed[0], closed[1], True
    # Not colorable: the lower bound is loose, fall back to the full scan.
    res = exhaustive_ground_state(model)
    return res.min_energy, res.ground_state_count, False


def solve_oracle(cfg: ExperimentConfig, inst: Instance) -> Optimum:
    if cfg.problem == "maxcut":
        res = exhaustive_ground_state(inst.model)
        return Optimum(res.min_energy, res.ground_state_count, best_cut=maxcut_brute(inst.graph)[0])
    e, count, ok = _coloring_optimum(inst.graph, cfg.colors, cfg.A, inst.model)
    return Optimum(e, count, colorable=ok)


def evaluate(cfg: ExperimentConfig, inst: Instance, trace: RunTrace, optimum: Optimum) -> dict:
    hits = np.flatnonzero(np.abs(trace.energy - optimum.min_energy) <= ENERGY_TOL)
    out = {
        "final_energy": float(trace.final_energy),
        "optimum": bool(abs(trace.final_energy - optimum.min_energy) <= ENERGY_TOL),
        "first_optimum_update": int(hits[0]) + 1 if hits.size else None,
        "clamp_events": trace.clamp_events,
    }
    if cfg.problem == "maxcut":
        out["cut_weight"] = decode_cut(inst.graph, trace.final_state)[1]
    else:
        res = decode_coloring(inst.graph, cfg.colors, trace.final_state)
        out["valid_coloring"] = res.valid
        out["colors"] = list(res.colors)
        out["one_hot_violations"] = list(res.one_hot_violations)
        out["adjacency_violations"] = [list(p) for p in res.adjacency_violations]
        out["optimum"] = out["optimum"] and res.valid
    return out


def sidecar(cfg: ExperimentConfig, trial: int, trace: RunTrace, result: dict, phase: str = "run") -> dict:
    return {
        "config": {**cfg.to_dict(), "graph": str(cfg.graph_path)},
        "graph_sha256": cfg.graph_digest(),
        "trial": trial,
        "seed": cfg.seed,
        "phase": phase,
        "initial_state": trace.initial_state.values.tolist(),
        "final_state": trace.final_state.values.tolist(),
        "snapshots": [[int(it), v.tolist()] for it, v in trace.snapshots],
        **result,
    }


def write_trial(out_dir: Path, stem: str, trace: RunTrace, meta: dict) -> None:
    write_atomic(out_dir / f"{stem}.csv", trace.to_csv())
    write_atomic(out_dir / f"{stem}.json", dump_json(meta))


def run_trial(cfg: ExperimentConfig, trial: int, inst: Instance, optimum: Optimum,
              out_dir: Path | None = None) -> dict:
    streams = trial_streams(cfg.seed, trial)
    try:
        crossbar = program_crossbar(cfg, inst, streams["program"])
        devices = make_devices(cfg, inst.model.n, streams["device"])
        if cfg.drift is not None and cfg.drift.elapsed_hours > 0:
            crossbar = apply_drift(crossbar, cfg.drift.elapsed_hours, cfg.drift.build(), streams["drift"])
        machine = make_machine(cfg, inst, crossbar, devices)
        trace = run_annealing(machine, cfg.schedule.build(), rng=streams["anneal"])
    except Exception as exc:  # per-trial failures are recorded, the campaign goes on
        log.warning("trial %d failed: %s", trial, exc)
        return {"trial": trial, "optimum": False, "error": f"{type(exc).__name__}: {exc}"}
    result = evaluate(cfg, inst, trace, optimum)
    log.info("trial %d: E=%g optimum=%s (%.2fs)", trial, trace.final_energy, result["optimum"], trace.duration_s)
    if out_dir is not None:
        write_trial(out_dir, f"trial_{trial:03d}", trace, sidecar(cfg, trial, trace, result))
    return {"trial": trial, **result}


def _run_trial_job(args):
    cfg_dict, base_dir, trial, optimum, out_dir = args
    cfg = config_from_dict(cfg_dict, base_dir)
    return run_trial(cfg, trial, build_instance(cfg), optimum, out_dir)


def summarize(results: list[dict], optimum: Optimum) -> dict:
    wins = [r for r in results if r.get("optimum")]
    firsts = [r["first_optimum_update"] for r in wins if r.get("first_optimum_update")]
    return {
        "trials": len(results),
        "successes": len(wins),
        "success_rate": len(wins) / len(results) if results else 0.0,
        "median_updates_to_optimum": statistics.median(firsts) if firsts else None,
        "oracle_min_energy": optimum.min_energy,
        "oracle_ground_states": optimum.ground_state_count,
        "oracle_best_cut": optimum.best_cut,
        "oracle_colorable": optimum.colorable,
        "results": results,
    }


def cmd_run(cfg: ExperimentConfig, out_dir: Path | None, jobs: int = 1) -> dict:
    cfg.validate()
    inst = build_instance(cfg)
    optimum = solve_oracle(cfg, inst)
    trials = range(cfg.trials)
    if jobs > 1:
        args = [(cfg.to_dict(), cfg.base_dir, t, optimum, out_dir) for t in trials]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_trial_job, args))
    else:
        results = [run_trial(cfg, t, inst, optimum, out_dir) for t in trials]
    summary = summarize(results, optimum)
    if out_dir is not None:
        write_atomic(out_dir / "summary.json", dump_json(summary))
    return summary


def instance_report(cfg: ExperimentConfig, inst: Instance) -> dict:
    low = inst.lowering
    targets = low.conductance_targets
    return {
        "problem": cfg.problem,
        "n_spins": inst.model.n,
        "n_vertices": inst.graph.n_vertices,
        "n_edges": len(inst.graph.edges),
        "coupling_nonzeros": inst.model.nnz,
        "coupling_zero_fraction": inst.model.sparsity,
        "crossbar_shape": list(targets.shape),
        "bias_column": low.bias_column_index,
        "column_polarity": low.column_polarity.tolist(),
        "levels_used_uS": sorted({float(x) for x in np.unique(targets) if x > 0}),
        "g_scale_uS": low.g_scale,
    }


def cmd_map(cfg: ExperimentConfig, out_dir: Path | None) -> dict:
    cfg.validate()
    inst = build_instance(cfg)
    report = instance_report(cfg, inst)
    if out_dir is not None:
        write_atomic(out_dir / "conductance.csv", conductance_to_csv(inst.lowering.conductance_targets))
        write_atomic(out_dir / "instance.json", dump_json(report))
    return report


def cmd_oracle(cfg: ExperimentConfig) -> dict:
    cfg.validate()
    graph = read_graph(cfg.graph_path)
    if cfg.problem == "maxcut":
        model = map_maxcut(graph, cfg.A)
        res = exhaustive_ground_state(model)
        cut, labels = maxcut_brute(graph)
        return {
            "problem": "maxcut",
            "min_energy": res.min_energy,
            "ground_state_count": res.ground_state_count,
            "max_cut": cut,
            "partition": labels.tolist(),
            "feasible": True,
        }
    found, witness = coloring_exists(graph, cfg.colors)
    out = {"problem": "coloring", "colors": cfg.colors, "feasible": found,
           "witness": list(witness) if found else None}
    model = map_coloring(graph, cfg.colors, cfg.A)
    e, count, _ = _coloring_optimum(graph, cfg.colors, cfg.A, model)
    out["min_energy"] = e
    out["ground_state_count"] = count
    return out


def expand_grid(grid: dict[str, list]) -> list[dict]:
    if not grid:
        raise ContractError("sweep grid is empty")
    keys = list(grid)
    for k in keys:
        if not grid[k]:
            raise ContractError(f"sweep axis {k!r} has no values")
    return [dict(zip(keys, combo)) for combo in itertools.product(*(grid[k] for k in keys))]


def cmd_sweep(cfg: ExperimentConfig, grid: dict[str, list], out_dir: Path | None, jobs: int = 1) -> dict:
    cfg.validate()
    points = expand_grid(grid)
    rows = []
    for k, point in enumerate(points):
        pcfg = cfg
        for key, value in point.items():
            pcfg = with_dotted(pcfg, key, value)
        pcfg = dataclasses.replace(pcfg, sweep={})
        sub = None if out_dir is None else out_dir / f"point_{k:03d}"
        try:
            summary = cmd_run(pcfg, sub, jobs)
            rows.append({"point": point, "success_rate": summary["success_rate"],
                         "median_updates_to_optimum": summary["median_updates_to_optimum"]})
        except ContractError as exc:
            rows.append({"point": point, "error": str(exc)})
    result = {"grid": grid, "points": rows}
    if len(grid) == 1:
        (key,) = grid
        ok = [r for r in rows if "error" not in r]
        ordered = sorted(ok, key=lambda r: r["point"][key])
        rates = [r["success_rate"] for r in ordered]
        result["monotone_nondecreasing"] = all(a <= b for a, b in zip(rates, rates[1:]))
        result["monotone_nonincreasing"] = all(a >= b for a, b in zip(rates, rates[1:]))
    if out_dir is not None:
        write_atomic(out_dir / "sweep.json", dump_json(result))
    return result


def cmd_drift_rerun(cfg: ExperimentConfig, out_dir: Path | None) -> dict:
    """Fresh run, then the same programmed array aged by drift and rerun with a software sigmoid."""
    cfg.validate()
    if cfg.drift is None:
        raise ContractError("drift-rerun needs a drift block in the config")
    inst = build_instance(cfg)
    optimum = solve_oracle(cfg, inst)
    schedule = cfg.schedule.build()
    pairs = []
    for trial in range(cfg.trials):
        streams = trial_streams(cfg.seed, trial)
        crossbar = program_crossbar(cfg, inst, streams["program"])
        devices = make_devices(cfg, inst.model.n, streams["device"])
        anneal_state = streams["anneal"].bit_generator.state
        init = SpinState.random(inst.model.n, inst.model.domain, np.random.default_rng([cfg.seed, trial, 1]))

        fresh_machine = make_machine(cfg, inst, crossbar, devices)
        fresh = run_annealing(fresh_machine, schedule, init=init, rng=streams["anneal"])

        aged_xb = apply_drift(crossbar, cfg.drift.elapsed_hours, cfg.drift.build(), streams["drift"])
        rng = np.random.default_rng()
        rng.bit_generator.state = anneal_state
        aged_machine = make_machine(cfg, inst, aged_xb, devices, mode=UpdateMode.IDEAL)
        aged = run_annealing(aged_machine, schedule, init=init, rng=rng)

        r_fresh = evaluate(cfg, inst, fresh, optimum)
        r_aged = evaluate(cfg, inst, aged, optimum)
        r_aged["max_drift_uS"] = float(np.abs(aged_xb.drift_offset).max())
        if out_dir is not None:
            write_trial(out_dir / "fresh", f"trial_{trial:03d}", fresh, sidecar(cfg, trial, fresh, r_fresh, "fresh"))
            write_trial(out_dir / "aged", f"trial_{trial:03d}", aged, sidecar(cfg, trial, aged, r_aged, "aged"))
        pairs.append({"trial": trial, "fresh": r_fresh, "aged": r_aged,
                      "final_cost_delta": r_aged["final_energy"] - r_fresh["final_energy"]})
    n = len(pairs)
    fresh_rate = sum(p["fresh"]["optimum"] for p in pairs) / n
    aged_rate = sum(p["aged"]["optimum"] for p in pairs) / n
    result = {
        "trials": n,
        "elapsed_hours": cfg.drift.elapsed_hours,
        "fresh_success_rate": fresh_rate,
        "aged_success_rate": aged_rate,
        "success_rate_delta": aged_rate - fresh_rate,
        "oracle_min_energy": optimum.min_energy,
        "pairs": pairs,
    }
    if out_dir is not None:
        write_atomic(out_dir / "drift_summary.json", dump_json(result))
    return result


def replay(sidecar_path) -> RunTrace:
    """Re-run one trial from its JSON sidecar; the graph file must still hash the same."""
    meta = json.loads(Path(sidecar_path).read_text())
    cfg = config_from_dict(meta["config"])
    if cfg.graph_digest() != meta["graph_sha256"]:
        raise ContractError("graph file changed since the trace was written")
    inst = build_instance(cfg)
    trial = meta["trial"]
    streams = trial_streams(cfg.seed, trial)
    crossbar = program_crossbar(cfg, inst, streams["program"])
    devices = make_devices(cfg, inst.model.n, streams["device"])
    if meta["phase"] == "run":
        if cfg.drift is not None and cfg.drift.elapsed_hours > 0:
            crossbar = apply_drift(crossbar, cfg.drift.elapsed_hours, cfg.drift.build(), streams["drift"])
        return run_annealing(make_machine(cfg, inst, crossbar, devices), cfg.schedule.build(), rng=streams["anneal"])
    init = SpinState.random(inst.model.n, inst.model.domain, np.random.default_rng([cfg.seed, trial, 1]))
    mode = None
    if meta["phase"] == "aged":
        crossbar = apply_drift(crossbar, cfg.drift.elapsed_hours, cfg.drift.build(), streams["drift"])
        mode = UpdateMode.IDEAL
    return run_annealing(make_machine(cfg, inst, crossbar, devices, mode), cfg.schedule.build(),
                         init=init, rng=streams["anneal"])
