"""Two-step Adams-Bashforth integration with interleaved rank reduction.

Each step forms w = 3 f_{n+1} - f_n, reduces, applies the operator, reduces,
then reduces once more after the update f_{n+2} = f_{n+1} + (dt/2) L w.  The
reduction backend follows the tensor format: alternating least squares for
canonical tensors, hierarchical SVD for tree tensors.  A reduction is a
no-op when the operand already fits under the rank cap, which is exact and
is what makes "truncation inactive" runs possible for order studies.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import cp, ht, operators
from .cp import ALSApproxConfig, CPTensor, inner_product, rank_reduce_als
from .ht import HTTensor
from .operators import SeparableOperator

__all__ = ["ExplicitConfig", "ReductionRecord", "ab2_step", "startup_step",
           "tensor_rank"]


@dataclass
class ExplicitConfig:
    dt: float
    r_max: int
    eps_rank: float = 1e-10
    format: str = "cp"  # "cp" or "ht"
    startup: str = "rk2"
    als: ALSApproxConfig = field(default_factory=ALSApproxConfig)

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.r_max < 1:
            raise ValueError("rank cap must be at least 1")
        if self.format not in ("cp", "ht"):
            raise ValueError(f"unknown format {self.format!r}")
        if self.startup != "rk2":
            raise ValueError(f"unknown startup rule {self.startup!r}")


@dataclass
class ReductionRecord:
    stage: str
    rank_before: int
    rank_after: int
    error: float


def tensor_rank(f) -> int:
    return f.rank if isinstance(f, CPTensor) else f.max_rank


def _reduce(f, config: ExplicitConfig, stage: str,
            log: list | None):
    if tensor_rank(f) <= config.r_max:
        if log is not None:
            log.append(ReductionRecord(stage, tensor_rank(f), tensor_rank(f), 0.0))
        return f
    if isinstance(f, CPTensor):
        red = rank_reduce_als(f, config.r_max, config.eps_rank, config.als)
        if log is not None:
            # exact residual from the Gram identity, no dense evaluation
            gap = (inner_product(f, f).real - 2.0 * inner_product(red, f).real
                   + inner_product(red, red).real)
            log.append(ReductionRecord(stage, f.rank, red.rank,
                                       float(max(gap, 0.0) ** 0.5)))
        return red
    red, est = ht.truncate(f, config.r_max, config.eps_rank)
    if log is not None:
        log.append(ReductionRecord(stage, f.max_rank, red.max_rank, est))
    return red


def _ops(f):
    if isinstance(f, CPTensor):
        return cp.add, cp.scale, operators.apply
    if isinstance(f, HTTensor):
        return ht.add, ht.scale, ht.apply_operator
    raise TypeError(f"unsupported tensor type {type(f).__name__}")


def ab2_step(f_n, f_n1, L: SeparableOperator, config: ExplicitConfig,
             log: list | None = None):
    """Advance to f_{n+2} given the two previous states."""
    if type(f_n) is not type(f_n1):
        raise TypeError("both states must use the same tensor format")
    add, scale, apply_op = _ops(f_n1)
    w = _reduce(add(scale(f_n1, 3.0), scale(f_n, -1.0)), config, "difference", log)
    lw = _reduce(apply_op(L, w), config, "operator", log)
    return _reduce(add(f_n1, scale(lw, 0.5 * config.dt)), config, "update", log)


def startup_step(f_0, L: SeparableOperator, config: ExplicitConfig,
                 log: list | None = None):
    """One explicit midpoint step to seed the two-step scheme."""
    add, scale, apply_op = _ops(f_0)
    lf = _reduce(apply_op(L, f_0), config, "startup-operator", log)
    half = _reduce(add(f_0, scale(lf, 0.5 * config.dt)), config, "startup-half", log)
    lh = _reduce(apply_op(L, half), config, "startup-operator", log)
    return _reduce(add(f_0, scale(lh, config.dt)), config, "startup-update", log)
