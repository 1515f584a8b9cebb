"""Survey generator seeds for the planted 3-coloring benchmark.

For each seed: number of proper colorings and the fraction of ideal-mode runs
that reach a valid coloring under the benchmark schedule.
"""
import argparse
import dataclasses
import tempfile
from pathlib import Path

import numpy as np

from pbit_forge import harness
from pbit_forge.config import load_config
from pbit_forge.mapping import planted_coloring_graph, write_graph
from pbit_forge.oracle import count_colorings

ROOT = Path(__file__).resolve().parents[1]


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=40)
    ap.add_argument("--trials", type=int, default=20)
    ap.add_argument("--mode", choices=["ideal", "hw"], default="ideal")
    args = ap.parse_args()
    base = load_config(ROOT / "configs" / "coloring10.yaml")
    base = dataclasses.replace(base, trials=args.trials,
                               machine=dataclasses.replace(base.machine, mode=args.mode))

    print("seed  colorings  success")
    with tempfile.TemporaryDirectory() as tmp:
        for seed in range(args.seeds):
            g = planted_coloring_graph(10, 17, 3, np.random.default_rng(seed))
            path = Path(tmp) / f"g{seed}.txt"
            write_graph(path, g)
            cfg = dataclasses.replace(base, graph=str(path))
            rate = harness.cmd_run(cfg, None)["success_rate"]
            print(f"{seed:4d}  {count_colorings(g, 3):9d}  {rate:7.2f}", flush=True)


if __name__ == "__main__":
    main()
