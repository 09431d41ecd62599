"""Experiment configuration: a strict YAML tree plus CLI overrides.

Every key is validated against the known schema before any compute starts;
unknown keys are errors, not warnings, so typos cannot silently fall back
to defaults.  Section keys mirror the dataclass field names of the model
and solver types they configure.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .cp import ALSApproxConfig
from .explicit import ExplicitConfig
from .implicit import ALSStepConfig
from .models import AdvectionSpec, BGKSpec, spiral_matrix

__all__ = ["ExperimentConfig", "ConfigError", "load_config", "build_model",
           "build_solver"]

EXPERIMENTS = ("bgk-steady", "bgk-relax", "advection-error",
               "maxwellian-approx", "scaling")


class ConfigError(ValueError):
    pass


_TOP_KEYS = {"experiment", "out", "workers", "seed", "steps", "rank",
             "epsilon", "model", "solver", "sweep"}
_MODEL_KEYS = {
    "advection": {"kind", "n_dims", "shear", "b", "Q"},
    "bgk": {"kind", "T", "n", "R", "tau_R", "b_x", "b_v", "dt", "rho", "Q",
            "n_iter", "eps_tol"},
}
_SOLVER_KEYS = {
    "implicit-als": {"kind", "dt", "eps_tol", "max_sweeps", "delta_beta",
                     "lsqr_tol", "lsqr_maxit", "schedule"},
    "explicit": {"kind", "dt", "r_max", "eps_rank", "format"},
}
_SWEEP_KEYS = {"q_list", "ratio_list", "workers_list", "rank_list",
               "sweeps_per_point"}


@dataclass
class ExperimentConfig:
    experiment: str
    out: str = "out"
    workers: int = 1
    seed: int = 0
    steps: int = 100
    rank: int = 2
    epsilon: float = 0.3
    model: dict = field(default_factory=dict)
    solver: dict = field(default_factory=dict)
    sweep: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; "
                              f"expected one of {', '.join(EXPERIMENTS)}")
        if self.workers < 1 or self.steps < 1 or self.rank < 1:
            raise ConfigError("workers, steps, and rank must be at least 1")
        _check_keys("model", self.model,
                    _MODEL_KEYS.get(self.model.get("kind", ""), {"kind"}))
        _check_keys("solver", self.solver,
                    _SOLVER_KEYS.get(self.solver.get("kind", ""), {"kind"}))
        _check_keys("sweep", self.sweep, _SWEEP_KEYS)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("config root must be a mapping")
        _check_keys("config", data, _TOP_KEYS)
        if "experiment" not in data:
            raise ConfigError("config must set 'experiment'")
        return cls(**data)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _check_keys(section: str, data: dict, allowed: set[str]) -> None:
    if not isinstance(data, dict):
        raise ConfigError(f"{section} must be a mapping")
    # kind first: without it the allowed set collapses and every other key
    # would be misreported as unknown
    if section in ("model", "solver") and data and "kind" not in data:
        raise ConfigError(f"{section} section must set 'kind'")
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"unknown {section} keys: {', '.join(sorted(unknown))}")


def load_config(path) -> ExperimentConfig:
    text = Path(path).read_text()
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    return ExperimentConfig.from_dict(data or {})


def build_model(cfg: ExperimentConfig):
    """Instantiate the model spec named by the config's model section."""
    section = dict(cfg.model)
    kind = section.pop("kind", None)
    if kind is None:
        kind = "advection" if cfg.experiment == "advection-error" else "bgk"
    if kind == "advection":
        n_dims = section.pop("n_dims", 2)
        shear = section.pop("shear", 1.0)
        return AdvectionSpec(spiral_matrix(n_dims, shear), **section)
    if kind == "bgk":
        return BGKSpec(**section)
    raise ConfigError(f"unknown model kind {kind!r}")


def build_solver(cfg: ExperimentConfig, model):
    """Instantiate the solver config, defaulting dt and tolerances from the
    model where the section leaves them unset."""
    section = dict(cfg.solver)
    kind = section.pop("kind", None)
    if kind is None:
        kind = "explicit" if cfg.experiment == "advection-error" else "implicit-als"
    if kind == "implicit-als":
        if not isinstance(model, BGKSpec):
            raise ConfigError("implicit-als solver expects the bgk model")
        section.setdefault("dt", model.dt)
        section.setdefault("eps_tol", model.eps_tol)
        return ALSStepConfig(workers=cfg.workers, **section)
    if kind == "explicit":
        section.setdefault("dt", 1e-3)
        section.setdefault("r_max", cfg.rank)
        als = ALSApproxConfig(seed=cfg.seed)
        return ExplicitConfig(als=als, **section)
    raise ConfigError(f"unknown solver kind {kind!r}")
