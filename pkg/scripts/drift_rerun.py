"""Age a programmed array and rerun the solver with an ideal software sigmoid.

    python scripts/drift_rerun.py configs/coloring10_drift.yaml --out runs/drift
    python scripts/drift_rerun.py configs/coloring10_drift.yaml --hours 1 24 720 8760
"""
import argparse
import dataclasses
from pathlib import Path

from pbit_forge import harness
from pbit_forge.config import load_config


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("config")
    ap.add_argument("--out")
    ap.add_argument("--hours", type=float, nargs="*")
    args = ap.parse_args()
    cfg = load_config(args.config)
    hours = args.hours or [cfg.drift.elapsed_hours]

    print("hours    fresh  aged   max|dG|[uS]")
    for h in hours:
        c = dataclasses.replace(cfg, drift=dataclasses.replace(cfg.drift, elapsed_hours=h))
        out = Path(args.out) / f"h{h:g}" if args.out else None
        res = harness.cmd_drift_rerun(c, out)
        worst = max(p["aged"]["max_drift_uS"] for p in res["pairs"])
        print(f"{h:7g}  {res['fresh_success_rate']:5.2f}  {res['aged_success_rate']:5.2f}  {worst:6.2f}")


if __name__ == "__main__":
    main()
