"""Command line entry point: run one configured experiment.

Flags override the corresponding config keys, so a single YAML file can
drive a family of runs (different worker counts, step counts, ranks)
without editing.
"""

from __future__ import annotations

import argparse
import sys

from .config import ConfigError, ExperimentConfig, load_config
from .runner import run


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="tensorpde",
        description="Low-rank spectral solver experiments (kinetic and advection).",
    )
    p.add_argument("--config", required=True, help="YAML experiment description")
    p.add_argument("--out", help="output directory (overrides config)")
    p.add_argument("--workers", type=int, help="solver worker threads")
    p.add_argument("--seed", type=int, help="random seed")
    p.add_argument("--steps", type=int, help="number of time steps")
    p.add_argument("--dt", type=float, help="time step size")
    p.add_argument("--rank", type=int, help="separation rank / rank cap")
    p.add_argument("--q-modes", type=int, help="modes per dimension")
    return p


def _apply_overrides(cfg: ExperimentConfig, args: argparse.Namespace
                     ) -> ExperimentConfig:
    data = cfg.to_dict()
    for key in ("out", "workers", "seed", "steps", "rank"):
        value = getattr(args, key)
        if value is not None:
            data[key] = value
    if args.dt is not None:
        data["solver"].setdefault(
            "kind",
            "explicit" if cfg.experiment == "advection-error" else "implicit-als")
        data["solver"]["dt"] = args.dt
    if args.q_modes is not None:
        data["model"].setdefault(
            "kind",
            "advection" if cfg.experiment == "advection-error" else "bgk")
        data["model"]["Q"] = args.q_modes
    return ExperimentConfig.from_dict(data)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = _apply_overrides(load_config(args.config), args)
    except (ConfigError, OSError) as exc:
        print(f"tensorpde: {exc}", file=sys.stderr)
        return 2
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
