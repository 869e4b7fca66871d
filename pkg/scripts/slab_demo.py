"""Component sizes of the slab dependency graph as the slab length grows.

    python scripts/slab_demo.py --eps 0.02 0.05 0.1 0.2 0.4
"""
import argparse
from pathlib import Path

import numpy as np

from hardcore_sbd.dynamics import build_dependency_graph
from hardcore_sbd.io import write_table_csv
from hardcore_sbd.params import SimParams


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--eps", type=float, nargs="+", default=[0.02, 0.05, 0.1, 0.2, 0.4])
    ap.add_argument("--L", type=float, default=50.0)
    ap.add_argument("--seeds", type=int, default=100)
    ap.add_argument("--out", default="out/slab_demo")
    args = ap.parse_args()

    rows = []
    for eps in args.eps:
        sizes = [build_dependency_graph(SimParams(d=2, L=args.L, seed=s), 0.0, eps).max_component_size
                 for s in range(args.seeds)]
        rows.append((eps, float(np.mean(sizes)), int(np.max(sizes)), float(np.percentile(sizes, 90))))
        print(f"eps={eps:5.3f}  mean max component {rows[-1][1]:7.1f}  max {rows[-1][2]}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_table_csv(out / "components.csv", ["eps", "mean_max_component", "max_component", "p90"], rows)


if __name__ == "__main__":
    main()
