"""Regenerate the committed benchmark graphs under data/.

    python scripts/make_instances.py [--out data]
"""
import argparse
from pathlib import Path

import numpy as np

from pbit_forge.mapping import planted_coloring_graph, random_maxcut_graph, write_graph
from pbit_forge.oracle import coloring_exists

MAXCUT_SEED = 6
COLORING_SEED = 13


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default=str(Path(__file__).resolve().parents[1] / "data"))
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    mc = random_maxcut_graph(24, 42, [1.0, 2.0, 3.0], np.random.default_rng(MAXCUT_SEED))
    write_graph(out / "maxcut24.txt", mc)

    col = planted_coloring_graph(10, 17, 3, np.random.default_rng(COLORING_SEED))
    assert coloring_exists(col, 3)[0]
    write_graph(out / "coloring10.txt", col)
    print(f"wrote {out / 'maxcut24.txt'} and {out / 'coloring10.txt'}")


if __name__ == "__main__":
    main()
