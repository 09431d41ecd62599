"""Separable linear operators and their Crank-Nicolson splitting.

An operator is a sum of terms ``alpha_q * prod_k E^q_k`` where each factor
``E^q_k`` acts on one dimension only.  Applying a term to a canonical tensor
maps each rank-1 term to another rank-1 term, so application is exact and
multiplies the separation rank by the number of operator terms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import BasisSpec, FactorKind, factor_matrix
from .cp import CPTensor

__all__ = [
    "SeparableOperator",
    "CrankNicolsonPair",
    "apply",
    "advection_operator",
    "bgk_operator",
    "crank_nicolson_pair",
]


@dataclass(frozen=True)
class SeparableOperator:
    specs: tuple[BasisSpec, ...]
    weights: tuple[complex, ...]
    factors: tuple[tuple[FactorKind, ...], ...]  # [term][dimension]

    def __post_init__(self):
        if len(self.weights) != len(self.factors):
            raise ValueError("one weight per term required")
        if not self.factors:
            raise ValueError("operator needs at least one term")
        for row in self.factors:
            if len(row) != len(self.specs):
                raise ValueError("every term must assign a factor to every dimension")

    @property
    def n_terms(self) -> int:
        return len(self.weights)


def apply(op: SeparableOperator, f: CPTensor) -> CPTensor:
    """Apply exactly; result rank is ``n_terms * f.rank``, term-major order."""
    if op.specs != f.specs:
        raise ValueError("operator and tensor live on different bases")
    blocks: list[list[np.ndarray]] = [[] for _ in f.specs]
    for q, (w, kinds) in enumerate(zip(op.weights, op.factors)):
        for k, spec in enumerate(f.specs):
            if kinds[k] is FactorKind.IDENTITY:
                col = f.factors[k].copy()
            else:
                col = factor_matrix(spec, kinds[k]) @ f.factors[k]
            if k == 0:
                col = col * w
            blocks[k].append(col)
    return CPTensor(f.specs, [np.hstack(cols) for cols in blocks])


def advection_operator(C: np.ndarray, specs) -> SeparableOperator:
    """Drift operator ``-sum_{j,k} C_jk z_k d/dz_j`` with one term per (j, k).

    Terms are ordered row-major in (j, k).  The diagonal term uses the fused
    coordinate-times-derivative factor; off-diagonal terms put the derivative
    in dimension j and the coordinate multiplication in dimension k.
    """
    C = np.asarray(C, dtype=float)
    n = len(tuple(specs))
    if C.shape != (n, n):
        raise ValueError(f"coefficient matrix must be {n}x{n}, got {C.shape}")
    weights, rows = [], []
    for j in range(n):
        for k in range(n):
            kinds = [FactorKind.IDENTITY] * n
            if j == k:
                kinds[j] = FactorKind.COORD_TIMES_DERIVATIVE
            else:
                kinds[j] = FactorKind.DERIVATIVE
                kinds[k] = FactorKind.COORD_MULTIPLY
            weights.append(complex(-C[j, k]))
            rows.append(tuple(kinds))
    return SeparableOperator(tuple(specs), tuple(weights), tuple(rows))


def bgk_operator(nu: float, specs) -> SeparableOperator:
    """Linearized collision-relaxation transport ``-nu*I - sum_i v_i d/dx_i``.

    Dimensions are ordered ``(x1, x2, x3, v1, v2, v3)``; the four terms are
    the relaxation identity followed by one transport term per pair.
    """
    specs = tuple(specs)
    if len(specs) != 6:
        raise ValueError("phase space has six dimensions (x1..x3, v1..v3)")
    weights = [complex(-nu)]
    rows = [tuple([FactorKind.IDENTITY] * 6)]
    for i in range(3):
        kinds = [FactorKind.IDENTITY] * 6
        kinds[i] = FactorKind.DERIVATIVE
        kinds[3 + i] = FactorKind.COORD_MULTIPLY
        weights.append(-1.0 + 0.0j)
        rows.append(tuple(kinds))
    return SeparableOperator(specs, tuple(weights), tuple(rows))


@dataclass(frozen=True)
class CrankNicolsonPair:
    """The pair ``A = I - (dt/2) L`` and ``B = I + (dt/2) L``.

    Both sides share one factor table; only the term weights differ.  Any
    all-identity terms of ``L`` are folded into term 0, so a pure relaxation
    weight ``-nu`` becomes ``eta_0 = 1 + nu dt/2``, ``zeta_0 = 1 - nu dt/2``.
    """

    specs: tuple[BasisSpec, ...]
    dt: float
    eta: tuple[complex, ...]
    zeta: tuple[complex, ...]
    factors: tuple[tuple[FactorKind, ...], ...]
    operator: SeparableOperator

    @property
    def n_terms(self) -> int:
        return len(self.eta)

    @property
    def A(self) -> SeparableOperator:
        return SeparableOperator(self.specs, self.eta, self.factors)

    @property
    def B(self) -> SeparableOperator:
        return SeparableOperator(self.specs, self.zeta, self.factors)


def crank_nicolson_pair(L: SeparableOperator, dt: float) -> CrankNicolsonPair:
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    n = len(L.specs)
    identity_row = tuple([FactorKind.IDENTITY] * n)
    eta = [1.0 + 0.0j]
    zeta = [1.0 + 0.0j]
    rows = [identity_row]
    for w, kinds in zip(L.weights, L.factors):
        if kinds == identity_row:
            eta[0] -= 0.5 * dt * w
            zeta[0] += 0.5 * dt * w
        else:
            eta.append(-0.5 * dt * w)
            zeta.append(0.5 * dt * w)
            rows.append(kinds)
    return CrankNicolsonPair(L.specs, float(dt), tuple(eta), tuple(zeta), tuple(rows), L)
