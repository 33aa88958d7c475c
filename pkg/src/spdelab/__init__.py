"""spdelab: a numerical laboratory for stochastic heat and wave systems.

Simulates the mild solution of k coupled second-order equations driven by
Gaussian noise that is white in time and spatially homogeneous, verifies the
integral conditions its theory rests on (with closed-form exponents for the
riesz kernel family), and tests the statistical conclusions: sample-path
regularity, positivity of the one-point density where the diffusion matrix
is invertible, and convergence of the short-window diffusion recovery
statistic.
"""

from .errors import (BlowUpError, ConfigurationError, DegenerateSampleError,
                     DivergentIntegralError, DomainError, ResolutionError)
from .green import GreenFunction, fourier_value, heat, kernel_weights, total_mass, wave
from .grids import GridSpec
from .spectral import (SpectralModel, covariance_kernel, dalang_integral,
                       epsilon_integrability, gaussian_kernel, riesz,
                       spectral_density)

__all__ = [
    "BlowUpError", "ConfigurationError", "DegenerateSampleError",
    "DivergentIntegralError", "DomainError", "ResolutionError",
    "GreenFunction", "fourier_value", "heat", "kernel_weights", "total_mass",
    "wave", "GridSpec", "SpectralModel", "covariance_kernel",
    "dalang_integral", "epsilon_integrability", "gaussian_kernel", "riesz",
    "spectral_density",
]

__version__ = "0.1.0"
