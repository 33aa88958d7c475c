"""Spectral noise synthesis: weights, determinism, and covariance structure."""

import math

import numpy as np
import pytest

from spdelab import ConfigurationError, GridSpec, gaussian_kernel, riesz
from spdelab.noise import (NoiseStream, band_limited_covariance,
                           empirical_covariance, sample_increment,
                           spectral_weights, _synthesize)
from spdelab.spectral import integrate_radial_ball


@pytest.fixture
def grid1():
    return GridSpec(d=1, n_points=128, extent=8.0, dt=0.01)


class TestSpectralWeights:
    def test_symmetry(self, grid1):
        lam = spectral_weights(riesz(0.5, 1), grid1)
        assert np.allclose(lam[1:], lam[1:][::-1])
        assert np.all(lam >= 0)

    def test_origin_cell_closed_form(self, grid1):
        lam = spectral_weights(riesz(0.5, 1), grid1)
        half = 0.5 / grid1.extent
        assert lam[0] == pytest.approx(2 * half ** 0.5 / 0.5, rel=1e-12)

    def test_total_weight_matches_quadrature(self, grid1):
        # sum of cell masses vs quadrature of the density over the band
        m = gaussian_kernel(1.0, 1)
        lam = spectral_weights(m, grid1)
        nyq = grid1.n_points / (2 * grid1.extent)
        ref = integrate_radial_ball(m, lambda rho: 1.0, nyq)
        assert lam.sum() == pytest.approx(ref, rel=1e-3)

    def test_origin_cell_d2_bounds(self):
        # cube integral must lie between inscribed and circumscribed balls
        grid = GridSpec(d=2, n_points=16, extent=4.0, dt=0.1)
        beta = 1.3
        lam = spectral_weights(riesz(beta, 2), grid)
        h = 0.5 / grid.extent
        lo = 2 * math.pi * h ** beta / beta
        hi = 2 * math.pi * (h * math.sqrt(2)) ** beta / beta
        assert lo < lam[0, 0] < hi


class TestSynthesis:
    def test_determinism(self, grid1):
        lam = spectral_weights(riesz(0.5, 1), grid1)
        a = sample_increment(lam, 2, NoiseStream(9), 3, 7, grid1.dt, grid1)
        b = sample_increment(lam, 2, NoiseStream(9), 3, 7, grid1.dt, grid1)
        assert np.array_equal(a.fields, b.fields)
        c = sample_increment(lam, 2, NoiseStream(9), 3, 8, grid1.dt, grid1)
        assert not np.array_equal(a.fields, c.fields)

    def test_zero_weights_zero_field(self, grid1):
        inc = sample_increment(np.zeros(grid1.shape), 1, NoiseStream(0), 0, 0,
                               grid1.dt, grid1)
        assert np.all(inc.fields == 0.0)

    def test_single_mode_cosine(self, grid1):
        lam = np.zeros(grid1.shape)
        q0 = 5
        lam[q0] = lam[-q0] = 0.3
        stream = NoiseStream(4)
        var_acc = 0.0
        M = 4000
        for i in range(M):
            inc = sample_increment(lam, 1, stream, i, 0, grid1.dt, grid1)
            f = inc.fields[0]
            # single random-phase cosine: spatial spectrum has only +-q0
            spec = np.abs(np.fft.fft(f)) > 1e-9 * np.abs(np.fft.fft(f)).max()
            assert spec[q0] and spec[-q0] and spec.sum() == 2
            var_acc += np.mean(f ** 2)
        var = var_acc / M
        expect = 2 * 0.3 * grid1.dt
        assert var == pytest.approx(expect, rel=0.05)

    def test_real_output(self, grid1):
        lam = spectral_weights(riesz(0.5, 1), grid1)
        z = np.random.default_rng(0).standard_normal(grid1.shape)
        x = _synthesize(np.sqrt(lam * grid1.dt), z)
        assert x.dtype == np.float64
        # compare against the explicit hermitian-mode construction
        zh = np.fft.fft(z)
        ref = np.fft.ifft(np.sqrt(lam * grid1.dt) * zh) * math.sqrt(z.size)
        assert np.abs(ref.imag).max() < 1e-12 * np.abs(ref.real).max()

    def test_component_independence(self, grid1):
        lam = spectral_weights(gaussian_kernel(1.0, 1), grid1)
        stream = NoiseStream(11)
        M = 2000
        prods = np.empty(M)
        for i in range(M):
            inc = sample_increment(lam, 2, stream, i, 0, grid1.dt, grid1)
            prods[i] = np.mean(inc.fields[0] * inc.fields[1]) / grid1.dt
        r = np.mean(prods) / 1.0  # normalized by f(0) ~ 1
        assert abs(r) < 3.0 / math.sqrt(M)

    def test_whiteness_in_time(self, grid1):
        lam = spectral_weights(gaussian_kernel(1.0, 1), grid1)
        stream = NoiseStream(13)
        M = 2000
        prods = np.empty(M)
        for i in range(M):
            a = sample_increment(lam, 1, stream, i, 0, grid1.dt, grid1)
            b = sample_increment(lam, 1, stream, i, 1, grid1.dt, grid1)
            prods[i] = np.mean(a.fields[0] * b.fields[0]) / grid1.dt
        assert abs(np.mean(prods)) < 3.0 / math.sqrt(M)

    def test_dt_scaling(self, grid1):
        lam = spectral_weights(gaussian_kernel(1.0, 1), grid1)
        stream = NoiseStream(17)
        M = 3000
        v1 = np.mean([np.mean(sample_increment(lam, 1, stream, i, 0, 0.01, grid1).fields ** 2)
                      for i in range(M)])
        v2 = np.mean([np.mean(sample_increment(lam, 1, stream, i, 1, 0.02, grid1).fields ** 2)
                      for i in range(M)])
        assert v2 / v1 == pytest.approx(2.0, rel=0.1)


class TestEmpiricalCovariance:
    def test_against_band_limited_oracle(self):
        grid = GridSpec(d=1, n_points=128, extent=16.0, dt=0.05)
        m = gaussian_kernel(1.0, 1)
        lam = spectral_weights(m, grid)
        stream = NoiseStream(42)
        samples = [sample_increment(lam, 1, stream, i, 0, grid.dt, grid)
                   for i in range(300)]
        ests = empirical_covariance(samples, [(0,), (8,), (24,)], grid)
        for est in ests:
            oracle = band_limited_covariance(lam, grid, est.lag_cells)
            assert abs(est.estimate - oracle) < 3 * est.stderr

    def test_distant_lag_decays(self):
        grid = GridSpec(d=1, n_points=128, extent=16.0, dt=0.05)
        m = gaussian_kernel(1.0, 1)
        lam = spectral_weights(m, grid)
        stream = NoiseStream(3)
        samples = [sample_increment(lam, 1, stream, i, 0, grid.dt, grid)
                   for i in range(300)]
        est = empirical_covariance(samples, [(64,)], grid)[0]
        assert abs(est.estimate) < 3 * est.stderr

    def test_needs_samples(self):
        grid = GridSpec(d=1, n_points=128, extent=16.0, dt=0.05)
        with pytest.raises(ConfigurationError):
            empirical_covariance([], [(0,)], grid)
