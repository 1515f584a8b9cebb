"""Run an annealing campaign from a config and summarize the energy trajectories.

    python scripts/anneal_campaign.py configs/maxcut24.yaml --out runs/maxcut24
    python scripts/anneal_campaign.py configs/coloring10.yaml --out runs/coloring10

Writes per-trial traces plus energy_envelope.csv (min/median/max energy across
trials at every update) next to summary.json.
"""
import argparse
import csv
import dataclasses
from pathlib import Path

import numpy as np

from pbit_forge import harness
from pbit_forge.config import load_config


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("config")
    ap.add_argument("--out", required=True)
    ap.add_argument("--trials", type=int)
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()

    cfg = load_config(args.config)
    if args.trials:
        cfg = dataclasses.replace(cfg, trials=args.trials)
    out = Path(args.out)
    summary = harness.cmd_run(cfg, out, args.jobs)

    energies = []
    for path in sorted(out.glob("trial_*.csv")):
        with path.open() as fh:
            energies.append([float(row["energy"]) for row in csv.DictReader(fh)])
    e = np.array(energies)
    with (out / "energy_envelope.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iteration", "min", "median", "max"])
        for t in range(e.shape[1]):
            w.writerow([t, e[:, t].min(), np.median(e[:, t]), e[:, t].max()])

    print(f"optimum E={summary['oracle_min_energy']:g}  "
          f"{summary['successes']}/{summary['trials']} trials reached it  "
          f"median first hit at update {summary['median_updates_to_optimum']}")
    for r in summary["results"]:
        print(f"  trial {r['trial']:3d}  E_final={r.get('final_energy')}  optimum={r['optimum']}")


if __name__ == "__main__":
    main()
