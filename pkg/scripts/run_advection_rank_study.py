#!/usr/bin/env python3
"""Rank study on the sheared spiral flow: probe error vs rank cap."""

import argparse
import json
from pathlib import Path

from tensorpde.config import ExperimentConfig
from tensorpde.runner import run


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out/advection")
    ap.add_argument("--n-dims", type=int, default=2)
    ap.add_argument("--b", type=float, default=12.0,
                    help="domain half-width (13 is safer for 3D)")
    ap.add_argument("--q-modes", type=int, default=65)
    ap.add_argument("--steps", type=int, default=1000)
    ap.add_argument("--dt", type=float, default=1e-3)
    ap.add_argument("--ranks", type=int, nargs="+", default=[4, 8])
    args = ap.parse_args()

    status = 0
    for r_max in args.ranks:
        out = f"{args.out}/r{r_max}"
        cfg = ExperimentConfig("advection-error", out=out, steps=args.steps,
                               model={"kind": "advection",
                                      "n_dims": args.n_dims, "shear": 2.0,
                                      "b": args.b, "Q": args.q_modes},
                               solver={"kind": "explicit", "dt": args.dt,
                                       "r_max": r_max})
        status |= run(cfg)
        man = json.loads((Path(out) / "manifest.json").read_text())
        print(f"r_max={r_max}: median {man['median_error']:.3e}, "
              f"max {man['max_error']:.3e} ({man['wall_seconds']:.1f}s)")
    return status


if __name__ == "__main__":
    raise SystemExit(main())
