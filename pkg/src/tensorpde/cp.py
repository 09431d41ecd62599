"""Canonical separated representations and alternating least squares.

A rank-``r`` canonical tensor over ``N`` basis specs stores one ``(Q_k, r)``
complex coefficient matrix per dimension; term ``l`` of the represented
function is the product over dimensions of ``sum_s factors[k][s, l] phi_s``.
There is no separate weights vector: scalars are folded into the first
dimension's columns.

Real-valued fields correspond to Hermitian-symmetric coefficient columns
(``c[-s] = conj(c[s])``); realness is checked where it matters, never
structurally enforced.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import BasisSpec, eval_basis

__all__ = [
    "CPTensor",
    "ALSApproxConfig",
    "ConditioningError",
    "evaluate",
    "add",
    "scale",
    "inner_product",
    "norm",
    "random_cp",
    "pad_rank",
    "cp_approx_als",
    "rank_reduce_als",
]


class ConditioningError(RuntimeError):
    """Normal equations unsalvageably singular or non-finite."""


@dataclass
class CPTensor:
    specs: tuple[BasisSpec, ...]
    factors: list[np.ndarray]  # factors[k]: (Q_k, r) complex

    def __post_init__(self):
        self.specs = tuple(self.specs)
        if len(self.factors) != len(self.specs):
            raise ValueError("one factor matrix per dimension required")
        ranks = {f.shape[1] for f in self.factors}
        if len(ranks) != 1:
            raise ValueError(f"inconsistent ranks across dimensions: {ranks}")
        for k, (f, spec) in enumerate(zip(self.factors, self.specs)):
            if f.shape[0] != spec.Q:
                raise ValueError(f"dimension {k}: {f.shape[0]} rows != Q={spec.Q}")
        if self.factors[0].shape[1] < 1:
            raise ValueError("rank must be at least 1")
        self.factors = [np.ascontiguousarray(f, dtype=complex) for f in self.factors]

    @property
    def ndim(self) -> int:
        return len(self.specs)

    @property
    def rank(self) -> int:
        return self.factors[0].shape[1]

    def copy(self) -> "CPTensor":
        return CPTensor(self.specs, [f.copy() for f in self.factors])

    def evaluate(self, z):
        return evaluate(self, z)

    def norm(self) -> float:
        return norm(self)


def _check_same_specs(f: CPTensor, g: CPTensor) -> None:
    if f.specs != g.specs:
        raise ValueError("operands live on different bases")


def evaluate(f: CPTensor, z) -> complex | np.ndarray:
    """Evaluate at one point ``(N,)`` or a batch ``(m, N)``."""
    z = np.asarray(z, dtype=float)
    scalar = z.ndim == 1
    pts = np.atleast_2d(z)
    if pts.shape[1] != f.ndim:
        raise ValueError(f"points have {pts.shape[1]} coordinates, tensor has {f.ndim}")
    acc = np.ones((pts.shape[0], f.rank), dtype=complex)
    for k, spec in enumerate(f.specs):
        acc *= eval_basis(spec, pts[:, k]) @ f.factors[k]
    out = acc.sum(axis=1)
    return complex(out[0]) if scalar else out


def add(f: CPTensor, g: CPTensor) -> CPTensor:
    """Exact sum; ranks add, g's terms follow f's."""
    _check_same_specs(f, g)
    return CPTensor(f.specs, [np.hstack([a, b]) for a, b in zip(f.factors, g.factors)])


def scale(f: CPTensor, c: complex) -> CPTensor:
    """Scalar multiple, folded into the first dimension."""
    out = [fk.copy() for fk in f.factors]
    out[0] *= c
    return CPTensor(f.specs, out)


def inner_product(f: CPTensor, g: CPTensor) -> complex:
    """Sesquilinear ``<f, g> = Int conj(f) g`` (conjugate on f).

    Orthonormality reduces the integral to a Hadamard product of
    per-dimension cross Grams, summed over term pairs.
    """
    _check_same_specs(f, g)
    acc = np.ones((f.rank, g.rank), dtype=complex)
    for fk, gk in zip(f.factors, g.factors):
        acc *= fk.conj().T @ gk
    return complex(acc.sum())


def norm(f: CPTensor) -> float:
    val = inner_product(f, f).real
    return float(np.sqrt(max(val, 0.0)))


def random_cp(specs, r: int, rng: np.random.Generator) -> CPTensor:
    """Standard-normal coefficients, each rank-1 term normalized to unit L2."""
    factors = []
    for spec in specs:
        m = rng.standard_normal((spec.Q, r)) + 1j * rng.standard_normal((spec.Q, r))
        m /= np.linalg.norm(m, axis=0, keepdims=True)
        factors.append(m)
    return CPTensor(tuple(specs), factors)


def pad_rank(f: CPTensor, r: int, rng: np.random.Generator, rel_scale: float = 1e-8) -> CPTensor:
    """Extend to rank ``r`` with small random terms (``rel_scale`` of ||f||)."""
    if r < f.rank:
        raise ValueError(f"cannot pad rank {f.rank} down to {r}")
    if r == f.rank:
        return f.copy()
    pad = scale(random_cp(f.specs, r - f.rank, rng), rel_scale * max(norm(f), 1.0))
    return add(f, pad)


@dataclass
class ALSApproxConfig:
    """Controls for the fitting sweeps.

    ``tol`` stops once the relative residual reaches it; ``stall`` stops when
    a sweep improves the residual by less than ``stall * ||target||``.
    ``quad_points`` sizes the per-dimension Gauss-Legendre rule used when the
    target is a callable rather than a tensor (0 means ``2 Q_k`` nodes).
    """

    max_sweeps: int = 200
    tol: float = 0.0
    stall: float = 1e-13
    seed: int = 0
    quad_points: int = 0


_REG = 1e-12  # Tikhonov scale: lambda = _REG * trace(A_j) / (r * Q)


def _solve_gram(gram: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve (gram + lambda I) X = rhs with the trace-scaled regularizer."""
    r = gram.shape[0]
    lam = _REG * max(np.trace(gram).real, 0.0) / max(r, 1)
    sys = gram + lam * np.eye(r)
    try:
        out = np.linalg.solve(sys, rhs)
    except np.linalg.LinAlgError:
        out = np.linalg.lstsq(sys, rhs, rcond=None)[0]
    if not np.all(np.isfinite(out)):
        raise ConditioningError("normal equations produced non-finite coefficients")
    return out


class _CPTarget:
    """Projections of a tensor target, all in closed form."""

    def __init__(self, target: CPTensor):
        self.t = target
        self.norm_sq = max(inner_product(target, target).real, 0.0)

    def cross_matrices(self, guess: CPTensor) -> list[np.ndarray]:
        return [gk.conj().T @ tk for gk, tk in zip(guess.factors, self.t.factors)]

    @staticmethod
    def refresh(cross: list[np.ndarray], guess: CPTensor, target: CPTensor, j: int) -> None:
        cross[j] = guess.factors[j].conj().T @ target.factors[j]

    def rhs(self, cross: list[np.ndarray], j: int) -> np.ndarray:
        had = np.ones_like(cross[0])
        for k, c in enumerate(cross):
            if k != j:
                had *= c
        # g[l, h] = sum_m had[l, m] * T_j[h, m]
        return had @ self.t.factors[j].T

    def overlap(self, cross: list[np.ndarray]) -> complex:
        had = np.ones_like(cross[0])
        for c in cross:
            had *= c
        return complex(had.sum())


class _GridTarget:
    """Projections of a callable target via tensor-product Gauss-Legendre."""

    def __init__(self, fun, specs, points: int):
        self.specs = tuple(specs)
        self.weights, self.bases, nodes = [], [], []
        for spec in self.specs:
            m = points if points > 0 else 2 * spec.Q
            x, w = np.polynomial.legendre.leggauss(m)
            nodes.append(x * spec.b)
            self.weights.append(w * spec.b)
            self.bases.append(eval_basis(spec, x * spec.b))
        grids = np.meshgrid(*nodes, indexing="ij")
        pts = np.stack([g.ravel() for g in grids], axis=1)
        self.values = np.asarray(fun(pts), dtype=complex).reshape(grids[0].shape)
        wprod = np.ones(())
        for w in self.weights:
            wprod = np.multiply.outer(wprod, w)
        self.norm_sq = float(np.sum(wprod * np.abs(self.values) ** 2).real)

    def _weighted_factor_values(self, guess: CPTensor, k: int) -> np.ndarray:
        # conj(G^l_k) at the nodes, quadrature-weighted: (m_k, r)
        return np.conj(self.bases[k] @ guess.factors[k]) * self.weights[k][:, None]

    def rhs(self, guess: CPTensor, j: int) -> np.ndarray:
        acc = np.moveaxis(self.values, j, -1)  # (others..., m_j)
        first = True
        for k in range(len(self.specs)):
            if k == j:
                continue
            wv = self._weighted_factor_values(guess, k)
            if first:
                acc = np.tensordot(acc, wv, axes=([0], [0]))  # (rest..., m_j, r)
                first = False
            else:
                acc = np.einsum("a...r,ar->...r", acc, wv)
        proj = np.conj(self.bases[j]) * self.weights[j][:, None]  # (m_j, Q_j)
        if first:  # one-dimensional target: acc is just (m_j,)
            return (acc @ proj)[None, :]
        return acc.T @ proj  # (r, Q_j)

    def overlap(self, guess: CPTensor) -> complex:
        acc = self.values
        first = True
        for k in range(len(self.specs)):
            wv = self._weighted_factor_values(guess, k)
            if first:
                acc = np.tensordot(acc, wv, axes=([0], [0]))
                first = False
            else:
                acc = np.einsum("a...r,ar->...r", acc, wv)
        return complex(acc.sum() if acc.ndim else acc)


def cp_approx_als(target, r: int, config: ALSApproxConfig | None = None, *,
                  specs=None, init: CPTensor | None = None,
                  trace: list | None = None) -> CPTensor:
    """Fit a rank-``r`` canonical tensor to ``target`` by alternating sweeps.

    Each dimension update solves the regularized normal equations exactly,
    so the residual recorded after each full sweep is non-increasing.

    Parameters
    ----------
    target : CPTensor or callable
        A tensor, or a function of point batches ``(m, N) -> (m,)``; callables
        additionally need ``specs`` and are projected by quadrature.
    r : int
        Separation rank of the fit.
    config : ALSApproxConfig, optional
    specs : sequence of BasisSpec, only for callable targets
    init : CPTensor, optional
        Warm start; defaults to seeded normalized random terms.
    trace : list, optional
        If given, the residual norm after each sweep is appended.
    """
    cfg = config or ALSApproxConfig()
    if isinstance(target, CPTensor):
        oracle = _CPTarget(target)
        specs = target.specs
    else:
        if specs is None:
            raise ValueError("callable targets require specs")
        oracle = _GridTarget(target, specs, cfg.quad_points)
        specs = oracle.specs
    n = len(specs)
    t_norm = np.sqrt(oracle.norm_sq)

    rng = np.random.default_rng(cfg.seed)
    guess = init.copy() if init is not None else random_cp(specs, r, rng)
    if guess.rank != r or guess.specs != tuple(specs):
        raise ValueError("init shape does not match the requested fit")

    grams = [fk.conj().T @ fk for fk in guess.factors]
    cp_mode = isinstance(oracle, _CPTarget)
    cross = oracle.cross_matrices(guess) if cp_mode else None

    prev_resid = np.inf
    for _ in range(cfg.max_sweeps):
        for j in range(n):
            gram = np.ones((r, r), dtype=complex)
            for k in range(n):
                if k != j:
                    gram *= grams[k]
            rhs = oracle.rhs(cross, j) if cp_mode else oracle.rhs(guess, j)
            guess.factors[j] = _solve_gram(gram, rhs).T
            grams[j] = guess.factors[j].conj().T @ guess.factors[j]
            if cp_mode:
                oracle.refresh(cross, guess, oracle.t, j)
        self_sq = np.ones((r, r), dtype=complex)
        for g in grams:
            self_sq *= g
        ov = oracle.overlap(cross) if cp_mode else oracle.overlap(guess)
        resid_sq = oracle.norm_sq - 2.0 * ov.real + self_sq.sum().real
        resid = float(np.sqrt(max(resid_sq, 0.0)))
        if trace is not None:
            trace.append(resid)
        if resid <= cfg.tol * t_norm:
            break
        if prev_resid - resid < cfg.stall * max(t_norm, 1.0):
            break
        prev_resid = resid
    return guess


def rank_reduce_als(f: CPTensor, r_target: int, eps: float,
                    config: ALSApproxConfig | None = None) -> CPTensor:
    """Best separated approximation of ``f`` with rank at most ``r_target``.

    Ranks are tried adaptively from 1 upward, each warm-started from the
    previous fit plus one fresh normalized random term, stopping as soon as
    the relative L2 error reaches ``eps``.
    """
    if r_target < 1:
        raise ValueError("target rank must be at least 1")
    cfg = config or ALSApproxConfig()
    nf = norm(f)
    zero = CPTensor(f.specs, [np.zeros((s.Q, 1), dtype=complex) for s in f.specs])
    if nf == 0.0:
        return zero
    rng = np.random.default_rng(cfg.seed)
    best, best_err = zero, 1.0
    guess = None
    for r in range(1, r_target + 1):
        if guess is None:
            init = random_cp(f.specs, 1, rng)
        else:
            init = add(guess, random_cp(f.specs, 1, rng))
        guess = cp_approx_als(f, r, cfg, init=init)
        err = _relative_error(f, guess, nf)
        if err < best_err:
            best, best_err = guess, err
        if err <= eps:
            return guess
    return best


def _relative_error(f: CPTensor, g: CPTensor, nf: float) -> float:
    diff_sq = (
        inner_product(f, f).real
        - 2.0 * inner_product(g, f).real
        + inner_product(g, g).real
    )
    return float(np.sqrt(max(diff_sq, 0.0)) / nf)
