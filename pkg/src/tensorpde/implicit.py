"""Fixed-rank implicit time stepping by damped alternating least squares.

One backward step minimizes ``Int (A f_{n+1} - B f_n - dt*C)^2 dz`` over the
coefficients of ``f_{n+1}`` one dimension at a time.  The pairing in that
functional is the non-conjugated bilinear one, which is what makes every
normal-equation block assemble from the precomputed pair tables:

    M_q     = sum_{e,z} eta_e eta_z  [had_{k!=q} bnew_k^T E^{ez}_k bnew_k]^T (x) [E^{ez}_q]^T
    gamma_q = sum_{e,z} eta_e zeta_z [had_{k!=q} bold_k^T E^{ez}_k bnew_k]^T (x) [E^{ez}_q]^T  bold_q
              + dt * (source assembly)

with ``bnew_k`` the ``(Q_k, r)`` coefficient matrix of the new iterate and the
Kronecker blocks laid out rank-major, mode-minor.  A sweep solves all
dimensions against one snapshot of the iterate (Jacobi schedule: assemblies
in parallel, barrier, solves in parallel), measures the largest relative raw
update, then applies the damped update ``beta <- beta_int + (raw - beta_int) /
delta_beta``.  A Gauss-Seidel schedule that updates dimensions in sequence is
available behind ``ALSStepConfig.schedule``.
"""

from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.linalg import lsqr

from .basis import FactorKind, pair_matrix
from .cp import CPTensor
from .operators import CrankNicolsonPair

__all__ = [
    "ALSStepConfig",
    "OperatorTables",
    "StepWorkspace",
    "StepFailure",
    "build_tables",
    "build_M",
    "build_gamma",
    "solve_beta",
    "converged",
    "step",
]

logger = logging.getLogger(__name__)


class StepFailure(RuntimeError):
    """A per-dimension solve broke down; carries dimension and residual."""

    def __init__(self, dim: int, itn: int, residual: float):
        self.dim, self.itn, self.residual = dim, itn, residual
        super().__init__(f"solve failed in dimension {dim}: itn={itn}, residual={residual:.3e}")


@dataclass
class ALSStepConfig:
    dt: float
    eps_tol: float = 1e-8
    max_sweeps: int = 500
    delta_beta: float = 4.0
    lsqr_tol: float = 1e-12
    lsqr_maxit: int = 2000
    workers: int = 1
    schedule: str = "jacobi"  # or "gauss-seidel"

    def __post_init__(self):
        if self.schedule not in ("jacobi", "gauss-seidel"):
            raise ValueError(f"unknown schedule {self.schedule!r}")
        if self.delta_beta < 1.0:
            raise ValueError("damping divisor must be >= 1")


@dataclass
class OperatorTables:
    """Precomputed pairing tables shared by every sweep of every step.

    ``pairs[k][e, z]`` is the bilinear table of factor pair ``(e, z)`` in
    dimension ``k``; ``source[k][e]`` pairs factor ``e`` against an identity
    column for the forcing assembly.  ``KL = eta eta^T`` and ``KR = eta
    zeta^T`` hold the term-weight products.
    """

    pair: CrankNicolsonPair
    pairs: list[np.ndarray]   # [k]: (rA, rA, Q_k, Q_k)
    source: list[np.ndarray]  # [k]: (rA, Q_k, Q_k)
    KL: np.ndarray
    KR: np.ndarray


def build_tables(pair: CrankNicolsonPair) -> OperatorTables:
    ra = pair.n_terms
    pairs, source = [], []
    for k, spec in enumerate(pair.specs):
        tab = np.empty((ra, ra, spec.Q, spec.Q), dtype=complex)
        src = np.empty((ra, spec.Q, spec.Q), dtype=complex)
        for e in range(ra):
            src[e] = pair_matrix(spec, pair.factors[e][k], FactorKind.IDENTITY)
            for z in range(ra):
                tab[e, z] = pair_matrix(spec, pair.factors[e][k], pair.factors[z][k])
        pairs.append(tab)
        source.append(src)
    eta = np.asarray(pair.eta)
    zeta = np.asarray(pair.zeta)
    return OperatorTables(pair, pairs, source, np.outer(eta, eta), np.outer(eta, zeta))


def _term_grams(tables: OperatorTables, left: list[np.ndarray], right: list[np.ndarray],
                skip: int) -> np.ndarray:
    """Hadamard over ``k != skip`` of ``left_k^T E^{ez}_k right_k`` -> (rA,rA,r,r)."""
    ra = tables.KL.shape[0]
    r = left[0].shape[1]
    had = np.ones((ra, ra, r, right[0].shape[1]), dtype=complex)
    for k in range(len(left)):
        if k == skip:
            continue
        had *= np.einsum("ezsh,sl,hn->ezln", tables.pairs[k], left[k], right[k],
                         optimize=True)
    return had


def build_M(q: int, beta_new: list[np.ndarray], tables: OperatorTables) -> np.ndarray:
    """Left-hand block for dimension ``q``; shape (r*Q_q, r*Q_q), rank-major."""
    had = _term_grams(tables, beta_new, beta_new, q)
    r = beta_new[q].shape[1]
    qq = beta_new[q].shape[0]
    m = np.einsum("ez,ezji,ezca->iajc", tables.KL, had, tables.pairs[q], optimize=True)
    return m.reshape(r * qq, r * qq)


def build_gamma(q: int, beta_new: list[np.ndarray], beta_old: list[np.ndarray],
                tables: OperatorTables, forcing: CPTensor | None = None) -> np.ndarray:
    """Right-hand side for dimension ``q``; length ``r*Q_q``."""
    had = _term_grams(tables, beta_old, beta_new, q)
    gam = np.einsum("ez,ezji,ezca,cj->ia", tables.KR, had, tables.pairs[q],
                    beta_old[q], optimize=True)
    if forcing is not None:
        eta = np.asarray(tables.pair.eta)
        # v[e] = E^{e,I}_k c_k projects the source column of dimension k
        proj = [np.einsum("esh,hm->esm", tables.source[k], forcing.factors[k],
                          optimize=True) for k in range(len(beta_new))]
        r = beta_new[q].shape[1]
        rows = np.ones((len(eta), r, forcing.rank), dtype=complex)
        for k in range(len(beta_new)):
            if k == q:
                continue
            rows *= np.einsum("si,esm->eim", beta_new[k], proj[k], optimize=True)
        gam += tables.pair.dt * np.einsum("e,eim,eam->ia", eta, rows, proj[q],
                                          optimize=True)
    return gam.reshape(-1)


def solve_beta(M: np.ndarray, gamma: np.ndarray, beta_init: np.ndarray,
               config: ALSStepConfig) -> tuple[np.ndarray, int, float]:
    """Warm-started least-squares solve; returns (solution, iterations, residual)."""
    out = lsqr(M, gamma, x0=beta_init, atol=config.lsqr_tol, btol=config.lsqr_tol,
               iter_lim=config.lsqr_maxit)
    x, istop, itn, r1norm = out[0], out[1], out[2], out[3]
    if not np.all(np.isfinite(x)):
        raise StepFailure(-1, itn, float(r1norm))
    return x, int(itn), float(r1norm)


def converged(beta_int: list[np.ndarray], beta_new: list[np.ndarray]) -> float:
    """Largest per-dimension relative update ``||new_k - int_k|| / ||int_k||``."""
    worst = 0.0
    for a, b in zip(beta_int, beta_new):
        db = float(np.linalg.norm(b - a))
        na = float(np.linalg.norm(a))
        if na == 0.0:
            worst = max(worst, 0.0 if db == 0.0 else np.inf)
        else:
            worst = max(worst, db / na)
    return worst


class StepWorkspace:
    """Reusable scratch for repeated steps with one operator pair.

    Holds the pairing tables and, when ``workers > 1``, a thread pool that
    maps the per-dimension assemblies and solves of each sweep.
    """

    def __init__(self, pair: CrankNicolsonPair, config: ALSStepConfig):
        if abs(config.dt - pair.dt) > 1e-15 * max(abs(pair.dt), 1.0):
            raise ValueError(f"config dt {config.dt} != operator pair dt {pair.dt}")
        self.pair = pair
        self.config = config
        self.tables = build_tables(pair)
        self._pool = ThreadPoolExecutor(config.workers) if config.workers > 1 else None

    def close(self):
        if self._pool is not None:
            self._pool.shutdown()
            self._pool = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
        return False

    def _map(self, fn, items):
        if self._pool is None:
            return [fn(i) for i in items]
        return list(self._pool.map(fn, items))


def _vec(beta: np.ndarray) -> np.ndarray:
    # (Q, r) matrix -> rank-major coefficient vector
    return beta.T.reshape(-1)


def _unvec(vec: np.ndarray, q: int, r: int) -> np.ndarray:
    return vec.reshape(r, q).T


def step(f_n: CPTensor, pair: CrankNicolsonPair, forcing: CPTensor | None,
         config: ALSStepConfig, workspace: StepWorkspace | None = None,
         log: dict | None = None) -> CPTensor:
    """Advance one implicit step at fixed separation rank.

    The iterate starts at ``f_n`` and sweeps until the raw update falls below
    ``eps_tol`` or ``max_sweeps`` is hit (logged and flagged, never silent).
    ``log``, if given, receives sweep count, final update size, convergence
    flag, and wall times of the assembly and solve phases.
    """
    ws = workspace or StepWorkspace(pair, config)
    try:
        n = f_n.ndim
        r = f_n.rank
        beta_old = [fk.copy() for fk in f_n.factors]
        beta_new = [fk.copy() for fk in f_n.factors]
        dims = range(n)
        eps_conv = np.inf
        sweeps = 0
        assembly_s = solve_s = 0.0
        solver_stats: list[tuple[int, float]] = []

        while eps_conv > config.eps_tol and sweeps < config.max_sweeps:
            beta_int = [b.copy() for b in beta_new]
            if config.schedule == "jacobi":
                t0 = time.perf_counter()
                systems = ws._map(
                    lambda q: (build_M(q, beta_int, ws.tables),
                               build_gamma(q, beta_int, beta_old, ws.tables, forcing)),
                    dims,
                )
                t1 = time.perf_counter()

                def _solve(q):
                    m, gam = systems[q]
                    x, itn, res = solve_beta(m, gam, _vec(beta_int[q]), config)
                    return _unvec(x, beta_int[q].shape[0], r), itn, res

                solved = ws._map(_solve, dims)
                t2 = time.perf_counter()
                assembly_s += t1 - t0
                solve_s += t2 - t1
                for q, (bq, itn, res) in enumerate(solved):
                    beta_new[q] = bq
                    solver_stats.append((itn, res))
            else:  # gauss-seidel: each dimension sees the updates before it
                for q in dims:
                    t0 = time.perf_counter()
                    m = build_M(q, beta_new, ws.tables)
                    gam = build_gamma(q, beta_new, beta_old, ws.tables, forcing)
                    t1 = time.perf_counter()
                    x, itn, res = solve_beta(m, gam, _vec(beta_new[q]), config)
                    t2 = time.perf_counter()
                    assembly_s += t1 - t0
                    solve_s += t2 - t1
                    beta_new[q] = _unvec(x, beta_new[q].shape[0], r)
                    solver_stats.append((itn, res))

            eps_conv = converged(beta_int, beta_new)
            for q in dims:
                beta_new[q] = beta_int[q] + (beta_new[q] - beta_int[q]) / config.delta_beta
            sweeps += 1

        did_converge = eps_conv <= config.eps_tol
        if not did_converge:
            logger.warning("sweep cap %d hit with update %.3e > %.3e",
                           config.max_sweeps, eps_conv, config.eps_tol)
        if log is not None:
            log.update(
                sweeps=sweeps,
                eps_conv=float(eps_conv),
                converged=did_converge,
                assembly_seconds=assembly_s,
                solve_seconds=solve_s,
                lsqr_iterations=sum(s[0] for s in solver_stats),
            )
        return CPTensor(f_n.specs, beta_new)
    finally:
        if workspace is None:
            ws.close()
