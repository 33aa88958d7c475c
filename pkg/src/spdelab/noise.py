"""Gaussian noise increments: white in time, spatially homogeneous on the torus.

The field increment over one time step is synthesized spectrally: each
discrete mode q carries a weight

    lambda_q = integral of the spectral density over the mode's frequency
               cell (density at the mode times cell volume; the origin cell
               of the riesz family is integrated in closed/polar form since
               the density is singular there),

and the increment is  X = sum_q sqrt(lambda_q dt) zeta_q exp(2 pi i xi_q x)
with i.i.d. complex Gaussians zeta_q under exact Hermitian symmetry.  In
implementation, zeta is obtained as the DFT of real white noise, so X is the
circular convolution of white noise with a real symmetric filter: exactly
real, with covariance  dt * sum_q lambda_q cos(2 pi xi_q (x - y))  between
grid points, i.e. the band-limited periodization of the covariance kernel.

Randomness comes from counter-based streams: one Philox position per
(seed, sample, component, step), so ensembles parallelize with no sequential
dependence and every increment is reproducible in isolation.
"""

from dataclasses import dataclass
from functools import lru_cache
import math

import numpy as np
from numpy.random import Generator, Philox
from scipy.integrate import quad

from .errors import ConfigurationError
from .grids import GridSpec
from .spectral import SpectralModel, sphere_area


@lru_cache(maxsize=32)
def _origin_cell_mass(kind, param, d, width):
    """Integral of the spectral density over the origin frequency cell."""
    h = width / 2.0
    if kind == "gaussian_kernel":
        return (2.0 * math.pi * param ** 2) ** (d / 2.0) * width ** d
    beta = param
    if d == 1:
        return 2.0 * h ** beta / beta
    if d == 2:
        # polar form: integral over angle of R(theta)^beta / beta with
        # R the distance from the center to the cell edge
        v, _ = quad(lambda th: (h / np.cos(th)) ** beta / beta, 0.0, math.pi / 4.0,
                    epsabs=1e-13, epsrel=1e-11)
        return 8.0 * v
    # d == 3: R(theta, phi) = h / max |omega_i|; integrate over the sphere
    def outer(th):
        st, ct = math.sin(th), math.cos(th)
        def inner(ph):
            m = max(abs(st * math.cos(ph)), abs(st * math.sin(ph)), abs(ct))
            return (h / m) ** beta / beta
        v, _ = quad(inner, 0.0, math.pi / 4.0, epsabs=1e-11, epsrel=1e-9)
        return 8.0 * v * st
    v, _ = quad(outer, 0.0, math.pi / 2.0, epsabs=1e-11, epsrel=1e-9, limit=100)
    return 2.0 * v


def spectral_weights(model: SpectralModel, grid: GridSpec):
    """Per-mode weights lambda_q >= 0, indexed like the FFT mode layout."""
    if model.d != grid.d:
        raise ConfigurationError("model dimension does not match the grid")
    rho = grid.freq_norm_mesh()
    cell = grid.extent ** (-grid.d)
    lam = np.zeros(grid.shape)
    nz = rho > 0
    lam[nz] = model.radial_density(rho[nz]) * cell
    param = model.beta if model.kind == "riesz" else model.ell
    lam[~nz] = _origin_cell_mass(model.kind, param, model.d, 1.0 / grid.extent)
    return lam


def band_limited_covariance(weights, grid: GridSpec, lag_cells):
    """Covariance of the synthesized field at an integer cell offset."""
    freqs = [grid.axis_freqs()] * grid.d
    mesh = np.meshgrid(*freqs, indexing="ij")
    phase = sum(m * (o * grid.dx) for m, o in zip(mesh, lag_cells))
    return float(np.sum(weights * np.cos(2.0 * math.pi * phase)))


@dataclass
class NoiseIncrement:
    """k independent field increments over one step of length dt."""

    fields: np.ndarray  # shape (k, *grid.shape)
    seed: int
    sample_index: int
    step_index: int
    dt: float


class NoiseStream:
    """Counter-based Gaussian stream over (sample, component, step) positions.

    Wraps a single Philox generator whose (key, counter) is repositioned per
    draw; this is bit-identical to constructing a fresh generator at
    key=(seed, sample), counter=(0, 0, component, step) but much cheaper.
    """

    def __init__(self, seed):
        self.seed = int(seed)
        self._bg = Philox(key=np.zeros(2, dtype=np.uint64))
        self._gen = Generator(self._bg)
        self._state = self._bg.state

    def normals(self, sample, step, component, size):
        st = self._state
        st["state"]["key"][:] = (self.seed, sample)
        st["state"]["counter"][:] = (0, 0, component, step)
        st["buffer_pos"] = 4
        st["has_uint32"] = 0
        self._bg.state = st
        return self._gen.standard_normal(size)


def _synthesize(sqrt_lam_dt, z):
    # real-noise filtering: N^(d/2) * ifft( sqrt(lambda dt) * fft(z) )
    axes = tuple(range(-z.ndim, 0)) if z.shape == sqrt_lam_dt.shape else tuple(
        range(-sqrt_lam_dt.ndim, 0)
    )
    zh = np.fft.fftn(z, axes=axes)
    x = np.fft.ifftn(sqrt_lam_dt * zh, axes=axes)
    n_modes = sqrt_lam_dt.size
    return np.real(x) * math.sqrt(n_modes)


def sample_increment(weights, k, stream: NoiseStream, sample_index, step_index,
                     dt, grid: GridSpec):
    """Draw one k-component noise increment for the given stream position."""
    sqrt_lam_dt = np.sqrt(weights * dt)
    fields = np.empty((k,) + grid.shape)
    for j in range(k):
        z = stream.normals(sample_index, step_index, j, grid.shape)
        fields[j] = _synthesize(sqrt_lam_dt, z)
    return NoiseIncrement(fields, stream.seed, sample_index, step_index, dt)


@dataclass
class CovarianceEstimate:
    lag_cells: tuple
    lag_physical: tuple
    estimate: float
    stderr: float


def empirical_covariance(samples, lags, grid: GridSpec):
    """Per-lag estimates of E[X(x) X(x+l)] / dt with sample-level stderr.

    ``samples`` is a list of :class:`NoiseIncrement`; each sample yields one
    statistic per lag (the mean of the product over grid points and
    components), and the standard error comes from the independent samples.
    """
    if len(samples) < 100:
        raise ConfigurationError("need at least 100 samples for covariance estimation")
    results = []
    for lag in lags:
        lag = tuple(int(v) for v in np.atleast_1d(lag))
        if len(lag) != grid.d:
            raise ConfigurationError("lag offsets must have one entry per axis")
        per_sample = np.empty(len(samples))
        for i, inc in enumerate(samples):
            shifted = np.roll(inc.fields, shift=lag, axis=tuple(range(1, 1 + grid.d)))
            per_sample[i] = np.mean(inc.fields * shifted) / inc.dt
        est = float(np.mean(per_sample))
        se = float(np.std(per_sample, ddof=1) / math.sqrt(len(samples)))
        results.append(CovarianceEstimate(
            lag_cells=lag,
            lag_physical=tuple(v * grid.dx for v in lag),
            estimate=est,
            stderr=se,
        ))
    return results
