#!/usr/bin/env python3
"""Resolution sweep: equilibrium approximation error over (Q, b_v) cells."""

import argparse
import json
from pathlib import Path

from tensorpde.config import ExperimentConfig
from tensorpde.runner import run


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out/maxwellian")
    ap.add_argument("--q-list", type=int, nargs="+", default=[11, 15, 21])
    ap.add_argument("--ratios", type=float, nargs="+",
                    default=[0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0],
                    help="Q*sqrt(RT)/b_v values; each must keep b_v >= 5*sqrt(RT)")
    args = ap.parse_args()

    cfg = ExperimentConfig("maxwellian-approx", out=args.out,
                           model={"kind": "bgk"},
                           sweep={"q_list": args.q_list,
                                  "ratio_list": args.ratios})
    status = run(cfg)
    man = json.loads((Path(args.out) / "manifest.json").read_text())
    print(f"{man['cells']} cells -> {args.out}/nmae_heatmap.csv")
    return status


if __name__ == "__main__":
    raise SystemExit(main())
