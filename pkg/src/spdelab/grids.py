"""Periodic spatial grids for fields on the torus [-L/2, L/2)^d."""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic grid: ``n_points`` per axis on a torus of side ``extent``.

    ``n_points`` must be a power of two (>= 8) so spectral transforms stay
    cheap and mode sets nest under refinement.  ``dt`` is the time step used
    by integrators operating on this grid.
    """

    d: int
    n_points: int
    extent: float
    dt: float

    def __post_init__(self):
        if self.d < 1:
            raise ConfigurationError("dimension must be >= 1")
        n = self.n_points
        if n < 8 or (n & (n - 1)) != 0:
            raise ConfigurationError("n_points must be a power of two >= 8")
        if self.extent <= 0:
            raise ConfigurationError("extent must be positive")
        if self.dt <= 0:
            raise ConfigurationError("dt must be positive")

    @property
    def dx(self):
        return self.extent / self.n_points

    @property
    def cell_volume(self):
        return self.dx ** self.d

    @property
    def shape(self):
        return (self.n_points,) * self.d

    def axis_coords(self):
        """Signed displacement of each cell along one axis, FFT layout.

        Index 0 sits at coordinate 0 and the negative half wraps to the top
        indices (0, dx, ..., L/2 - dx, -L/2, ..., -dx), matching the implicit
        coordinates of the discrete Fourier modes exp(2 pi i xi_q x).
        """
        n = self.n_points
        return np.fft.fftfreq(n, d=1.0 / n) * self.dx

    def coordinate_mesh(self):
        """d arrays of shape ``self.shape`` with the coordinates of each cell."""
        ax = self.axis_coords()
        return np.meshgrid(*([ax] * self.d), indexing="ij")

    def axis_freqs(self):
        """Discrete frequencies along one axis (integer multiples of 1/extent)."""
        n = self.n_points
        return np.fft.fftfreq(n, d=1.0 / n) / self.extent

    def freq_norm_mesh(self):
        """|xi| at every discrete mode, shape ``self.shape``."""
        f = self.axis_freqs()
        mesh = np.meshgrid(*([f] * self.d), indexing="ij")
        return np.sqrt(sum(m ** 2 for m in mesh))

    def snap_point(self, x):
        """Snap a physical point to the nearest grid index tuple (torus wrap)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if x.shape != (self.d,):
            raise ConfigurationError(f"probe point must have {self.d} coordinates")
        idx = np.rint(x / self.dx).astype(int) % self.n_points
        return tuple(int(i) for i in idx)

    def index_coords(self, idx):
        """Signed displacement coordinates of a grid index tuple."""
        n = self.n_points
        return tuple(((i + n // 2) % n - n // 2) * self.dx for i in idx)
