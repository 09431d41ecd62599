"""Low-rank tensor solver for high-dimensional linear PDEs.

Functions of many variables are kept as canonical (sum of separable terms)
or hierarchical (binary dimension tree) tensors over a complex Fourier
basis, and advanced in time either implicitly, by an alternating least
squares sweep over the Crank-Nicolson system, or explicitly, by
Adams-Bashforth steps with interleaved rank reduction.
"""

from .basis import BasisSpec, FactorKind, eval_basis, factor_matrix, pair_matrix
from .cp import (ALSApproxConfig, CPTensor, cp_approx_als, inner_product,
                 rank_reduce_als)
from .diagnostics import fit_decay_rate, moments, nmae
from .explicit import ExplicitConfig, ab2_step, startup_step
from .ht import DimensionTree, HTTensor, balanced_tree, from_cp, truncate
from .implicit import ALSStepConfig, StepWorkspace, step
from .io import load_tensor, save_tensor
from .models import (AdvectionSpec, BGKSpec, bgk_source, equilibrium_ic,
                     gaussian_cp, maxwellian_cp, perturbed_ic)
from .operators import (CrankNicolsonPair, SeparableOperator,
                        advection_operator, bgk_operator, crank_nicolson_pair)

__version__ = "0.1.0"

__all__ = [
    "BasisSpec", "FactorKind", "eval_basis", "factor_matrix", "pair_matrix",
    "CPTensor", "ALSApproxConfig", "cp_approx_als", "rank_reduce_als",
    "inner_product",
    "HTTensor", "DimensionTree", "balanced_tree", "from_cp", "truncate",
    "SeparableOperator", "CrankNicolsonPair", "advection_operator",
    "bgk_operator", "crank_nicolson_pair",
    "ALSStepConfig", "StepWorkspace", "step",
    "ExplicitConfig", "ab2_step", "startup_step",
    "AdvectionSpec", "BGKSpec", "bgk_source", "equilibrium_ic", "gaussian_cp",
    "maxwellian_cp", "perturbed_ic",
    "moments", "nmae", "fit_decay_rate",
    "save_tensor", "load_tensor",
    "__version__",
]
