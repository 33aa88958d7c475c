"""Fundamental solutions of the heat and wave operators.

Heat operator d/dt - (1/2) Laplacian:
    Gamma(t, x) = (2 pi t)^(-d/2) exp(-|x|^2 / (2t))
    FGamma(t)(xi) = exp(-2 pi^2 t |xi|^2)
    total mass 1 for every t and d.

Wave operator d^2/dt^2 - Laplacian (a nonnegative measure only for d <= 3):
    d=1: (1/2) 1_{|x| <= t}
    d=2: (1/(2 pi)) (t^2 - |x|^2)_+^(-1/2)
    d=3: surface measure of the radius-t sphere, scaled by 1/(4 pi t)
    FGamma(t)(xi) = sin(2 pi t |xi|) / (2 pi |xi|), with limit t at xi = 0
    total mass t.

``kernel_weights`` discretizes the measure Gamma(t, dx) on a periodic grid,
always renormalized so the weights sum exactly to the total mass.
"""

from dataclasses import dataclass
import math

import numpy as np

from .errors import ConfigurationError, DomainError
from .grids import GridSpec


@dataclass(frozen=True)
class GreenFunction:
    """Operator tag (``"heat"`` or ``"wave"``) plus spatial dimension."""

    operator: str
    d: int

    def __post_init__(self):
        if self.operator not in ("heat", "wave"):
            raise DomainError(f"unknown operator {self.operator!r}")
        if self.d < 1:
            raise DomainError("dimension must be >= 1")
        if self.operator == "wave" and self.d > 3:
            raise DomainError("wave kernel is a nonnegative measure only for d in {1,2,3}")


def heat(d):
    return GreenFunction("heat", d)


def wave(d):
    return GreenFunction("wave", d)


def multiplier_radial(g, t, rho):
    """FGamma(t) as a function of rho = |xi|, vectorized.

    The wave multiplier's removable singularity at rho = 0 is evaluated via
    the normalized sinc, which is exact in the limit.
    """
    if t <= 0:
        raise DomainError("time must be positive")
    rho = np.asarray(rho, dtype=float)
    if g.operator == "heat":
        return np.exp(-2.0 * math.pi ** 2 * t * rho ** 2)
    return t * np.sinc(2.0 * t * rho)


def fourier_value(g, t, xi):
    """FGamma(t)(xi) at a point xi in R^d."""
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    rho = float(np.sqrt(np.sum(xi ** 2)))
    return float(multiplier_radial(g, t, rho))


def total_mass(g, t):
    """integral Gamma(t, dx): 1 for heat, t for wave (d in {1,2,3})."""
    if t <= 0:
        raise DomainError("time must be positive")
    return 1.0 if g.operator == "heat" else float(t)


def support_radius(g, t):
    """Radius outside which Gamma(t, .) carries (essentially) no mass."""
    if g.operator == "wave":
        return float(t)
    # heat: 8 standard deviations of the Gaussian kernel
    return 8.0 * math.sqrt(t)


def kernel_weights(g, t, grid: GridSpec):
    """Nonnegative weights over grid cells summing exactly to total_mass(g, t).

    Heat uses pointwise density times cell volume.  Wave d=1 integrates the
    flat density exactly over each cell; d=2 assigns boundary cells through
    the analytic radial integral of the inverse square-root factor; d=3
    spreads the spherical shell over the cells it intersects.
    """
    if t <= 0:
        raise DomainError("time must be positive")
    if grid.d != g.d:
        raise ConfigurationError("grid dimension does not match the operator")
    if g.operator == "wave" and t > grid.extent / 2.0:
        raise ConfigurationError("wave cone leaves the torus")

    if g.operator == "heat":
        mesh = grid.coordinate_mesh()
        r2 = sum(m ** 2 for m in mesh)
        w = (2.0 * math.pi * t) ** (-g.d / 2.0) * np.exp(-r2 / (2.0 * t))
        w = w * grid.cell_volume
    elif g.d == 1:
        x = grid.axis_coords()
        lo = np.maximum(x - grid.dx / 2.0, -t)
        hi = np.minimum(x + grid.dx / 2.0, t)
        w = 0.5 * np.clip(hi - lo, 0.0, None)
    elif g.d == 2:
        w = _wave2_weights(t, grid)
    else:
        w = _wave3_weights(t, grid)

    s = w.sum()
    if s <= 0:
        raise ConfigurationError("kernel support does not meet the grid")
    return w * (total_mass(g, t) / s)


def _wave2_weights(t, grid):
    # Cumulative radial mass of (1/(2 pi))(t^2 - rho^2)^(-1/2) is
    # M(R) = t - sqrt(t^2 - R^2); each cell takes its angular share of the
    # mass in its clipped radial band, which keeps the light-cone edge finite.
    xx, yy = grid.coordinate_mesh()
    rho = np.sqrt(xx ** 2 + yy ** 2)
    half = grid.dx / 2.0
    corner = half * math.sqrt(2.0)
    r_lo = np.clip(rho - corner, 0.0, t)
    r_hi = np.clip(rho + corner, 0.0, t)

    def radial_mass(r):
        return t - np.sqrt(np.clip(t * t - r * r, 0.0, None))

    band = radial_mass(r_hi) - radial_mass(r_lo)
    with np.errstate(divide="ignore", invalid="ignore"):
        ang_frac = np.where(rho > 0, grid.dx / (2.0 * math.pi * np.maximum(rho, half)), 1.0)
    ang_frac = np.minimum(ang_frac, 1.0)
    return band * ang_frac


def _wave3_weights(t, grid):
    # Deterministic Fibonacci lattice on the radius-t sphere, binned to cells.
    npts = max(20000, int(200 * (t / grid.dx) ** 2))
    i = np.arange(npts)
    ga = math.pi * (3.0 - math.sqrt(5.0))
    z = 1.0 - 2.0 * (i + 0.5) / npts
    r = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
    th = ga * i
    pts = t * np.stack([r * np.cos(th), r * np.sin(th), z], axis=1)
    idx = np.rint(pts / grid.dx).astype(int) + grid.n_points // 2
    idx %= grid.n_points
    w = np.zeros(grid.shape)
    np.add.at(w, tuple(idx.T), 1.0)
    return w


def weights_to_rows(w, grid: GridSpec):
    """Flatten weights to (index..., value) rows for CSV dumps."""
    rows = []
    for idx in np.ndindex(*grid.shape):
        val = w[idx]
        if val != 0.0:
            rows.append(idx + (float(val),))
    return rows
