"""Error metrics, kinetic moment functionals, and decay-rate fitting.

Moments integrate the spectral expansion exactly: per-dimension closed-form
weights (powers 0, 1, 2 against the basis) contract each canonical factor,
so no grid is ever built.  Velocity averages follow the kinetic convention,
velocity moment over mean density, temperature from the centered second
moment with the usual one-third trace factor, and the spatial average
divides by the true box volume.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import integration_weights
from .cp import CPTensor
from .models import BGKSpec

__all__ = [
    "MomentReport",
    "nmae",
    "relative_pointwise_error",
    "moments",
    "radial_points",
    "fit_decay_rate",
]


def nmae(x, y) -> float:
    """Mean absolute difference over the signed range max(x) - min(y)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1 or x.size == 0:
        raise ValueError("inputs must be equal-length nonempty vectors")
    denom = float(np.max(x) - np.min(y))
    if abs(denom) < 1e-300:
        raise ValueError("metric undefined: range max(x) - min(y) is degenerate")
    return float(np.mean(np.abs(x - y)) / denom)


def relative_pointwise_error(f_exact, f_hat, z_star, t: float) -> float:
    """|f(z*, t) - fhat(z*)| / |f(z*, t)| for an analytic reference."""
    exact = complex(f_exact(z_star, t))
    if exact == 0:
        raise ValueError("reference value vanishes at the probe point")
    approx = complex(f_hat.evaluate(np.asarray(z_star, dtype=float)))
    return abs(exact - approx) / abs(exact)


@dataclass(frozen=True)
class MomentReport:
    mean_density: float
    mean_velocity: np.ndarray
    mean_temperature: float
    timestamp: float


def _contract(f: CPTensor, weights: list[np.ndarray]) -> float:
    rows = np.ones(f.rank, dtype=complex)
    for w, factor in zip(weights, f.factors):
        rows = rows * (w @ factor)
    return float(np.sum(rows).real)


def moments(f: CPTensor, spec: BGKSpec, t: float = 0.0) -> MomentReport:
    """Average density, bulk velocity, and temperature of a kinetic state.

    Accepts either a velocity-only 3D tensor or a full 6D (x, v) tensor; the
    6D case averages over the box, dividing by its true volume (2 b_x)^3.
    """
    if f.ndim == 3:
        vdims = [0, 1, 2]
        vol = 1.0
    elif f.ndim == 6:
        vdims = [3, 4, 5]
        vol = (2.0 * spec.b_x) ** 3
    else:
        raise ValueError("expected a 3D velocity or 6D phase-space tensor")
    w0 = [integration_weights(s, 0) for s in f.specs]

    density = _contract(f, w0) / vol
    if density <= 0:
        raise ValueError(f"mean density {density:.3e} is not positive")

    flux = np.empty(3)
    energy = np.empty(3)
    for i, d in enumerate(vdims):
        w1 = list(w0)
        w1[d] = integration_weights(f.specs[d], 1)
        flux[i] = _contract(f, w1) / vol
        w2 = list(w0)
        w2[d] = integration_weights(f.specs[d], 2)
        energy[i] = _contract(f, w2) / vol

    velocity = flux / density
    # centered second moment: Int |v - u|^2 f = Int |v|^2 f - rho |u|^2
    centered = float(np.sum(energy)) - density * float(velocity @ velocity)
    temperature = centered / (3.0 * spec.R * density)
    return MomentReport(density, velocity, temperature, t)


def radial_points(spec: BGKSpec, n: int = 200, phase_space: bool = False,
                  span: float | None = None) -> np.ndarray:
    """Sampling set along the first velocity axis, speeds 0 to ``span``.

    ``span`` defaults to b_v.  Sweeps that compare different b_v must pass
    a common physical span instead, otherwise the line length varies across
    cells and mean-based metrics pick up a spurious domain-size factor.
    With ``phase_space`` the points are 6D with the spatial block at the
    origin, for probing (x, v) states on the same axis.
    """
    if span is None:
        span = spec.b_v
    if span > spec.b_v:
        raise ValueError("probe span exceeds the velocity domain")
    u = np.linspace(0.0, span, n)
    cols = 6 if phase_space else 3
    pts = np.zeros((n, cols))
    pts[:, 3 if phase_space else 0] = u
    return pts


def fit_decay_rate(times, series, floor: float | None = None) -> float:
    """Exponential rate of a positive decaying series by a log-linear fit.

    Entries below twice ``floor`` are excluded so a stagnation plateau (the
    best-approximation error of the representation) does not bias the slope.
    """
    times = np.asarray(times, dtype=float)
    series = np.asarray(series, dtype=float)
    if times.shape != series.shape or times.size < 5:
        raise ValueError("need matching series of at least five samples")
    if np.any(series <= 0):
        raise ValueError("series must be positive for a log fit")
    keep = np.ones(series.size, dtype=bool)
    if floor is not None:
        keep = series >= 2.0 * floor
        if keep.sum() < 2:
            raise ValueError("floor exclusion leaves too few samples to fit")
    slope = np.polyfit(times[keep], np.log(series[keep]), 1)[0]
    return float(-slope)
