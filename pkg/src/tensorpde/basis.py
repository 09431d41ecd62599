"""Complex Fourier basis on a symmetric interval and its Galerkin kernels.

The basis on ``[-b, b]`` is ``phi_s(z) = exp(i*pi*s*z/b) / sqrt(2b)`` for the
``Q`` integer mode numbers ``s = -(Q-1)/2, ..., (Q-1)/2`` (``Q`` odd).  It is
orthonormal under the sesquilinear inner product ``<u, v> = Int conj(u) v dz``,
which is the pairing used for norms and inner products throughout.

Operator assembly uses a second, non-conjugated bilinear pairing: the matrices
returned by :func:`pair_matrix` have entries ``Int (E^e phi_s)(E^z phi_h) dz``
with no conjugate on either side.  Both pairings have closed forms because each
factor action on a mode is ``(i*pi*s/b)^d * z^p * phi_s``, so every entry is a
scaled monomial moment ``(1/2b) Int z^p exp(i*pi*(s+h)*z/b) dz``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = [
    "BasisSpec",
    "FactorKind",
    "eval_basis",
    "factor_matrix",
    "pair_matrix",
    "integration_weights",
    "clear_caches",
    "cached_kernel_families",
]


class FactorKind(enum.Enum):
    """One-dimensional factor of a separable operator term."""

    IDENTITY = "identity"
    DERIVATIVE = "derivative"
    COORD_MULTIPLY = "coord_multiply"
    COORD_TIMES_DERIVATIVE = "coord_times_derivative"


# (derivative order, monomial power) of each factor action on a mode:
# E phi_s = (i*pi*s/b)^d * z^p * phi_s.
_KIND_ORDERS = {
    FactorKind.IDENTITY: (0, 0),
    FactorKind.DERIVATIVE: (1, 0),
    FactorKind.COORD_MULTIPLY: (0, 1),
    FactorKind.COORD_TIMES_DERIVATIVE: (1, 1),
}


@dataclass(frozen=True)
class BasisSpec:
    """Fourier basis on ``[-b, b]`` with ``Q`` modes (``Q`` odd)."""

    Q: int
    b: float

    def __post_init__(self):
        if self.Q < 1 or self.Q % 2 == 0:
            raise ValueError(f"Q must be a positive odd integer, got {self.Q}")
        if not self.b > 0:
            raise ValueError(f"b must be positive, got {self.b}")

    @property
    def modes(self) -> np.ndarray:
        """Integer mode numbers -(Q-1)/2 ... (Q-1)/2."""
        half = (self.Q - 1) // 2
        return np.arange(-half, half + 1)


def eval_basis(spec: BasisSpec, z) -> np.ndarray:
    """Evaluate all basis functions at points ``z`` inside ``[-b, b]``.

    Parameters
    ----------
    spec : BasisSpec
    z : float or array_like, shape (m,)

    Returns
    -------
    ndarray, shape (Q,) or (m, Q), complex
        ``phi_s(z)`` for every mode ``s``.
    """
    z = np.asarray(z, dtype=float)
    scalar = z.ndim == 0
    zv = np.atleast_1d(z)
    slack = 1e-12 * max(spec.b, 1.0)
    if np.any(np.abs(zv) > spec.b + slack):
        raise ValueError(f"evaluation point outside [-b, b] with b={spec.b}")
    out = np.exp(1j * np.pi * np.outer(zv, spec.modes) / spec.b) / np.sqrt(2.0 * spec.b)
    return out[0] if scalar else out


# --- ingredient kernels -----------------------------------------------------
#
# H_p[s, h] = (1/2b) Int_{-b}^{b} z^p exp(i*pi*(s+h)*z/b) dz      (p = 0, 1, 2)
# D        = diag(i*pi*s/b)
#
# Every factor and pair matrix is a product of these four tables, so they are
# the only integrals ever evaluated.  The cache below is keyed by family name
# so tests can count the distinct kernels a given operator set touches.

_INGREDIENT_CACHE: dict[tuple[int, float, str], np.ndarray] = {}


def _monomial_moment(p: int, m: np.ndarray, b: float) -> np.ndarray:
    """Closed form of ``(1/2b) Int z^p exp(i*pi*m*z/b) dz`` for integer m."""
    m = np.asarray(m)
    sign = np.where(m % 2 == 0, 1.0, -1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        if p == 0:
            out = np.where(m == 0, 1.0 + 0.0j, 0.0 + 0.0j)
        elif p == 1:
            out = np.where(m == 0, 0.0 + 0.0j, -1j * b * sign / (np.pi * m))
        elif p == 2:
            out = np.where(
                m == 0,
                b**2 / 3.0 + 0.0j,
                2.0 * b**2 * sign / (np.pi**2 * m.astype(float) ** 2) + 0.0j,
            )
        else:
            raise ValueError(f"monomial power {p} not needed by any factor pair")
    return out


def _ingredient(spec: BasisSpec, name: str) -> np.ndarray:
    key = (spec.Q, spec.b, name)
    hit = _INGREDIENT_CACHE.get(key)
    if hit is not None:
        return hit
    s = spec.modes
    if name == "D":
        table = np.diag(1j * np.pi * s / spec.b).astype(complex)
    else:
        p = {"H0": 0, "H1": 1, "H2": 2}[name]
        table = _monomial_moment(p, s[:, None] + s[None, :], spec.b)
    _INGREDIENT_CACHE[key] = table
    return table


def clear_caches() -> None:
    """Empty the kernel and pair-matrix caches (test hook)."""
    _INGREDIENT_CACHE.clear()
    _pair_cached.cache_clear()


def cached_kernel_families() -> set[str]:
    """Names of the distinct ingredient kernels currently cached.

    Two cached tables with the same family name differ only by scalar factors
    of ``b``, so this is the count of genuinely distinct integrals.
    """
    return {name for (_, _, name) in _INGREDIENT_CACHE}


def integration_weights(spec: BasisSpec, p: int) -> np.ndarray:
    """Vector of ``Int z^p phi_s(z) dz`` over the whole interval, p <= 2.

    Contracting a coefficient vector with this gives the exact integral of
    the expansion against ``z^p``, which is all the moment functionals need.
    """
    return 2.0 * spec.b / np.sqrt(2.0 * spec.b) * _monomial_moment(p, spec.modes, spec.b)


def factor_matrix(spec: BasisSpec, kind: FactorKind) -> np.ndarray:
    """Galerkin projection of a factor action, ``Int conj(phi_s) (E phi_h) dz``.

    Identity is exact; Derivative is the diagonal of mode eigenvalues;
    CoordMultiply is the projection of ``z*phi_h`` (the action leaves the
    span, so this is a genuine projection); CoordTimesDerivative composes the
    two, derivative first.
    """
    if kind is FactorKind.IDENTITY:
        return np.eye(spec.Q, dtype=complex)
    if kind is FactorKind.DERIVATIVE:
        return _ingredient(spec, "D").copy()
    # conj(phi_s) phi_h pairs into the monomial moment at m = h - s
    s = spec.modes
    coord = _monomial_moment(1, s[None, :] - s[:, None], spec.b)
    if kind is FactorKind.COORD_MULTIPLY:
        return coord
    if kind is FactorKind.COORD_TIMES_DERIVATIVE:
        return coord @ _ingredient(spec, "D")
    raise TypeError(f"unknown factor kind {kind!r}")


@lru_cache(maxsize=None)
def _pair_cached(Q: int, b: float, e: FactorKind, z: FactorKind) -> np.ndarray:
    spec = BasisSpec(Q, b)
    de, pe = _KIND_ORDERS[e]
    dz, pz = _KIND_ORDERS[z]
    table = _ingredient(spec, f"H{pe + pz}")
    if de or dz:
        d = np.diagonal(_ingredient(spec, "D"))
        rows = d**de
        cols = d**dz
        table = rows[:, None] * table * cols[None, :]
    else:
        table = table.copy()
    table.flags.writeable = False
    return table


def pair_matrix(spec: BasisSpec, e: FactorKind, z: FactorKind) -> np.ndarray:
    """Bilinear pairing table ``[E^{ez}]_{sh} = Int (E^e phi_s)(E^z phi_h) dz``.

    No conjugation on either side; with two identity factors this is the flip
    matrix ``delta_{s+h,0}``, not the identity.  Results are cached per
    ``(spec, e, z)`` and assembled from at most four ingredient kernels.
    """
    return _pair_cached(spec.Q, spec.b, e, z)
