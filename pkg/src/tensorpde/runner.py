"""Configuration-driven experiment harness.

Each experiment writes versioned CSV artifacts plus a manifest carrying the
config echo, a build id, and wall-time accounting.  The runner itself is
single-threaded; parallelism lives inside the implicit solver's sweep,
bounded by the configured worker count.  Solver non-convergence is
surfaced through the exit status while the artifacts are still written.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import subprocess
import time
from pathlib import Path

import numpy as np

from . import explicit, ht, implicit
from .config import ConfigError, ExperimentConfig, build_model, build_solver
from .cp import pad_rank
from .diagnostics import fit_decay_rate, moments, nmae, radial_points, \
    relative_pointwise_error
from .models import PROBE_COORDINATE, advection_analytic, bgk_source, \
    equilibrium_ic, gaussian_cp, maxwellian, maxwellian_cp, perturbed_ic
from .operators import crank_nicolson_pair

__all__ = ["run"]

_CSV_VERSION = "tensorpde-csv v1"


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def _write_csv(path: Path, name: str, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# {_CSV_VERSION} {name}\r\n")
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _build_id() -> str:
    try:
        out = subprocess.run(["git", "rev-parse", "HEAD"], capture_output=True,
                             text=True, cwd=Path(__file__).parent, timeout=10)
        if out.returncode == 0:
            return out.stdout.strip()
    except OSError:
        pass
    return "unknown"


def _write_manifest(outdir: Path, cfg: ExperimentConfig, wall: float,
                    extra: dict, files: list[str]) -> None:
    doc = {
        "config": cfg.to_dict(),
        "build": _build_id(),
        "wall_seconds": wall,
        "artifacts": files,
        **extra,
    }
    with open(outdir / "manifest.json", "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")


def run(cfg: ExperimentConfig) -> int:
    """Execute one experiment; returns a process exit status."""
    outdir = Path(cfg.out)
    outdir.mkdir(parents=True, exist_ok=True)
    started = time.perf_counter()
    runner = {
        "bgk-steady": _run_bgk,
        "bgk-relax": _run_bgk,
        "advection-error": _run_advection,
        "maxwellian-approx": _run_maxwellian_sweep,
        "scaling": _run_scaling,
    }[cfg.experiment]
    status, extra, files = runner(cfg, outdir)
    _write_manifest(outdir, cfg, time.perf_counter() - started, extra, files)
    return status


def _run_bgk(cfg: ExperimentConfig, outdir: Path):
    model = build_model(cfg)
    solver = build_solver(cfg, model)
    rng = np.random.default_rng(cfg.seed)

    if cfg.experiment == "bgk-steady":
        f = equilibrium_ic(model)
    else:
        f = perturbed_ic(model, cfg.epsilon)
    if f.rank < cfg.rank:
        f = pad_rank(f, cfg.rank, rng)

    pair = crank_nicolson_pair(model.operator(), solver.dt)
    forcing = bgk_source(model)
    pts6 = radial_points(model, phase_space=True)
    ref = maxwellian(model, radial_points(model))
    floor = nmae(maxwellian_cp(model).evaluate(radial_points(model)).real, ref)

    moment_rows = []
    error_rows = []
    all_converged = True
    sweeps_total = 0

    def record(t: float) -> None:
        rep = moments(f, model, t)
        moment_rows.append((t, rep.mean_density, *rep.mean_velocity,
                            rep.mean_temperature))
        error_rows.append((t, nmae(f.evaluate(pts6).real, ref)))

    record(0.0)
    with implicit.StepWorkspace(pair, solver) as ws:
        for n in range(cfg.steps):
            log: dict = {}
            f = implicit.step(f, pair, forcing, solver, ws, log)
            all_converged &= log["converged"]
            sweeps_total += log["sweeps"]
            record((n + 1) * solver.dt)

    files = ["moments.csv", "error.csv"]
    _write_csv(outdir / "moments.csv", "moments",
               ["t", "rho", "ux", "uy", "uz", "T"], moment_rows)
    _write_csv(outdir / "error.csv", "nmae",
               ["t", "nmae"], error_rows)
    extra = {
        "approximation_floor": floor,
        "sweeps_total": sweeps_total,
        "converged": all_converged,
    }
    if cfg.experiment == "bgk-relax":
        times = np.array([r[0] for r in error_rows])
        series = np.array([r[1] for r in error_rows])
        extra["fitted_rate"] = fit_decay_rate(times, series, floor=floor)
        extra["nominal_rate"] = model.nu
    return (0 if all_converged else 1), extra, files


def _run_advection(cfg: ExperimentConfig, outdir: Path):
    model = build_model(cfg)
    solver = build_solver(cfg, model)
    op = model.operator()
    probe = np.full(model.ndim, PROBE_COORDINATE)

    def exact(z, t):
        return advection_analytic(model, z, t)


    f_prev = gaussian_cp(model)
    if solver.format == "ht":
        f_prev = ht.from_cp(f_prev)
    rows = []
    log: list = []
    f_curr = explicit.startup_step(f_prev, op, solver, log)
    rows.append((solver.dt, relative_pointwise_error(exact, f_curr, probe,
                                                     solver.dt),
                 explicit.tensor_rank(f_curr)))
    for n in range(1, cfg.steps):
        f_prev, f_curr = f_curr, explicit.ab2_step(f_prev, f_curr, op, solver, log)
        t = (n + 1) * solver.dt
        rows.append((t, relative_pointwise_error(exact, f_curr, probe, t),
                     explicit.tensor_rank(f_curr)))

    _write_csv(outdir / "error.csv", "probe-error",
               ["t", "relative_error", "rank"], rows)
    errs = [r[1] for r in rows]
    extra = {
        "median_error": float(np.median(errs)),
        "max_error": float(np.max(errs)),
        "reductions": len(log),
    }
    return 0, extra, ["error.csv"]


def _run_maxwellian_sweep(cfg: ExperimentConfig, outdir: Path):
    model = build_model(cfg)
    q_list = cfg.sweep.get("q_list", [11, 15, 21])
    ratio_list = cfg.sweep.get("ratio_list",
                               [0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0])
    sqrt_rt = float(np.sqrt(model.R * model.T))
    span = 5.0 * sqrt_rt
    rows = []
    for q in q_list:
        for ratio in ratio_list:
            b_v = q * sqrt_rt / ratio
            if b_v < span:
                raise ConfigError(
                    f"sweep cell Q={q}, ratio={ratio} puts b_v below the "
                    f"5*sqrt(RT) probe span; shrink ratio or grow Q")
            cell = dataclasses.replace(model, Q=q, b_v=b_v)
            approx = maxwellian_cp(cell)
            pts = radial_points(cell, span=span)
            err = nmae(approx.evaluate(pts).real, maxwellian(cell, pts))
            rows.append((q, b_v, ratio, err))
    _write_csv(outdir / "nmae_heatmap.csv", "maxwellian-sweep",
               ["Q", "b_v", "ratio", "nmae"], rows)
    return 0, {"cells": len(rows)}, ["nmae_heatmap.csv"]


def _run_scaling(cfg: ExperimentConfig, outdir: Path):
    model = build_model(cfg)
    workers_list = cfg.sweep.get("workers_list", [1, 2, 4])
    rank_list = cfg.sweep.get("rank_list", [1, 2, 3, 4])
    steps = cfg.sweep.get("sweeps_per_point", 2)
    forcing = bgk_source(model)
    rows = []
    for workers in workers_list:
        for rank in rank_list:
            rng = np.random.default_rng(cfg.seed)
            f = pad_rank(equilibrium_ic(model), rank, rng) \
                if rank > 1 else equilibrium_ic(model)
            solver = build_solver(cfg, model)
            solver.workers = workers
            pair = crank_nicolson_pair(model.operator(), solver.dt)
            assembly = solve = 0.0
            sweeps = 0
            t0 = time.perf_counter()
            with implicit.StepWorkspace(pair, solver) as ws:
                for _ in range(steps):
                    log: dict = {}
                    f = implicit.step(f, pair, forcing, solver, ws, log)
                    assembly += log["assembly_seconds"]
                    solve += log["solve_seconds"]
                    sweeps += log["sweeps"]
            total = time.perf_counter() - t0
            rows.append((workers, rank, 6 * model.Q * rank, steps, sweeps,
                         assembly, solve, total))
    _write_csv(outdir / "scaling.csv", "scaling",
               ["workers", "rank", "dof", "steps", "sweeps",
                "assembly_seconds", "solve_seconds", "total_seconds"], rows)
    # report-only power fit of wall time against degrees of freedom
    base = [r for r in rows if r[0] == workers_list[0]]
    slope = float("nan")
    if len(base) > 1:
        slope = float(np.polyfit(np.log([r[2] for r in base]),
                                 np.log([r[7] for r in base]), 1)[0])
    return 0, {"dof_power": slope}, ["scaling.csv"]
