"""Fundamental-solution values, masses, and grid discretizations."""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from spdelab import (ConfigurationError, DomainError, GridSpec, fourier_value,
                     heat, kernel_weights, total_mass, wave)
from spdelab.green import multiplier_radial


class TestFourierValues:
    def test_heat_at_zero_frequency(self):
        assert fourier_value(heat(1), 1.0, [0.0]) == pytest.approx(1.0)

    def test_wave_half_period_zero(self):
        assert fourier_value(wave(1), 1.0, [0.5]) == pytest.approx(0.0, abs=1e-15)

    def test_wave_small_frequency_limit(self):
        g = wave(3)
        xi = np.array([1e-14, 0.0, 0.0])
        assert fourier_value(g, 2.0, xi) == pytest.approx(2.0)

    def test_nonpositive_time_rejected(self):
        with pytest.raises(DomainError):
            fourier_value(heat(1), 0.0, [1.0])

    def test_heat_bounds_and_monotone(self):
        rho = np.linspace(0.0, 4.0, 50)
        v1 = multiplier_radial(heat(2), 0.3, rho)
        v2 = multiplier_radial(heat(2), 0.6, rho)
        assert np.all(v1 > 0) and np.all(v1 <= 1.0)
        assert np.all(np.diff(v1) < 0)
        assert np.all(v2[1:] < v1[1:])

    def test_wave_envelope_bound(self):
        rho = np.linspace(0.0, 20.0, 500)
        for t in (0.3, 1.0, 2.5):
            v = np.abs(multiplier_radial(wave(1), t, rho))
            cap = np.minimum(t, 1.0 / (2 * math.pi * np.maximum(rho, 1e-12)))
            assert np.all(v <= cap + 1e-12)


class TestTotalMass:
    def test_heat_mass_one(self):
        assert total_mass(heat(2), 0.37) == pytest.approx(1.0)

    def test_wave_mass_linear(self):
        assert total_mass(wave(1), 0.5) == pytest.approx(0.5)
        assert total_mass(wave(3), 2.0) == pytest.approx(2.0)

    def test_heat_mass_quadrature_oracle(self):
        # d=1 and d=2 by direct radial quadrature of the density
        for d in (1, 2):
            t = 0.41
            area = 2.0 if d == 1 else 2 * math.pi
            val, _ = quad(lambda r: area * r ** (d - 1)
                          * (2 * math.pi * t) ** (-d / 2)
                          * math.exp(-r * r / (2 * t)), 0, np.inf)
            assert val == pytest.approx(1.0, abs=1e-10)

    def test_wave_mass_quadrature_oracle(self):
        t = 0.8
        v1, _ = quad(lambda x: 0.5 * (abs(x) <= t), -2, 2, points=[-t, t])
        assert v1 == pytest.approx(t, abs=1e-8)
        v2, _ = quad(lambda r: r / math.sqrt(t * t - r * r), 0, t, points=[t])
        assert v2 == pytest.approx(t, abs=1e-8)
        # d=3: shell of radius t scaled by 1/(4 pi t) has mass t identically
        assert (1.0 / (4 * math.pi * t)) * 4 * math.pi * t ** 2 == pytest.approx(t)

    def test_wave_dimension_window(self):
        with pytest.raises(DomainError):
            wave(4)


class TestKernelWeights:
    def test_heat_sum_is_one(self):
        grid = GridSpec(d=1, n_points=128, extent=8.0, dt=1e-3)
        w = kernel_weights(heat(1), 1.0, grid)
        assert w.sum() == pytest.approx(1.0, abs=1e-12)
        assert np.all(w >= 0)

    def test_wave1_sum(self):
        grid = GridSpec(d=1, n_points=128, extent=4.0, dt=1e-3)
        w = kernel_weights(wave(1), 0.25, grid)
        assert w.sum() == pytest.approx(0.25, abs=1e-12)

    def test_wave3_sum(self):
        grid = GridSpec(d=3, n_points=64, extent=4.0, dt=1e-3)
        w = kernel_weights(wave(3), 0.5, grid)
        assert w.sum() == pytest.approx(0.5, abs=1e-12)
        assert np.all(w >= 0)

    def test_wave2_sum_and_nonneg(self):
        grid = GridSpec(d=2, n_points=64, extent=4.0, dt=1e-3)
        w = kernel_weights(wave(2), 0.9, grid)
        assert w.sum() == pytest.approx(0.9, abs=1e-12)
        assert np.all(w >= 0)

    def test_wave_cone_guard(self):
        grid = GridSpec(d=1, n_points=64, extent=4.0, dt=1e-3)
        with pytest.raises(ConfigurationError):
            kernel_weights(wave(1), 2.5, grid)

    def test_heat_dft_matches_multiplier(self):
        # weights transform back to the multiplier on the resolved band
        grid = GridSpec(d=1, n_points=512, extent=8.0, dt=1e-3)
        t = 0.05
        w = kernel_weights(heat(1), t, grid)
        dft = np.real(np.fft.fft(w))
        rho = grid.freq_norm_mesh()
        mult = multiplier_radial(heat(1), t, rho)
        sel = (rho > 0) & (rho < grid.n_points / (4 * grid.extent)) & (mult > 1e-3)
        assert sel.sum() > 10
        rel = np.abs(dft[sel] - mult[sel]) / mult[sel]
        assert rel.max() < 1e-3
