#!/usr/bin/env python3
"""Timing sweep: implicit assembly+solve wall time over workers and ranks."""

import argparse
import json
from pathlib import Path

from tensorpde.config import ExperimentConfig
from tensorpde.runner import run


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out/scaling")
    ap.add_argument("--q-modes", type=int, default=11)
    ap.add_argument("--workers", type=int, nargs="+", default=[1, 2, 4])
    ap.add_argument("--ranks", type=int, nargs="+", default=[1, 2, 3, 4])
    ap.add_argument("--steps", type=int, default=2,
                    help="implicit steps timed per cell")
    args = ap.parse_args()

    cfg = ExperimentConfig("scaling", out=args.out,
                           model={"kind": "bgk", "Q": args.q_modes},
                           sweep={"workers_list": args.workers,
                                  "rank_list": args.ranks,
                                  "sweeps_per_point": args.steps})
    status = run(cfg)
    man = json.loads((Path(args.out) / "manifest.json").read_text())
    print(f"wall-time vs DOF power at {args.workers[0]} workers: "
          f"{man['dof_power']:.2f} -> {args.out}/scaling.csv")
    return status


if __name__ == "__main__":
    raise SystemExit(main())
