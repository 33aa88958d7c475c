"""Integrator contracts: drift, nullity, determinism, and the linear oracle."""

import math

import numpy as np
import pytest

from spdelab import ConfigurationError, GridSpec, ResolutionError, heat, riesz, wave
from spdelab.analysis import gaussian_oracle_variance
from spdelab.noise import NoiseStream, sample_increment, spectral_weights
from spdelab.solver import (RunSpec, SolutionField, WaveState, make_coefficients,
                            simulate, simulate_ensemble, step_heat, step_wave)

M1 = riesz(0.5, 1)
GRID = GridSpec(d=1, n_points=128, extent=8.0, dt=1e-3)


def runspec(coeffs="linear_const", params=None, T=0.1, grid=GRID, k=1,
            operator="heat", model=M1):
    return RunSpec(operator, model, grid, k, coeffs, params or {}, T)


class TestCoefficients:
    def test_registry_names(self):
        for name in ("linear_const", "drift_only", "sin_diag", "sigmoid_mix"):
            c = make_coefficients(name, 2)
            u = np.zeros((5, 2))
            assert c.sigma(u).shape == (5, 2, 2)
            assert c.b(u).shape == (5, 2)

    def test_unknown_name(self):
        with pytest.raises(ConfigurationError):
            make_coefficients("nope", 1)

    def test_sigmoid_mix_reduces_to_shifted_tanh(self):
        c = make_coefficients("sigmoid_mix", 1, a=0.5)
        u = np.linspace(-3, 3, 7)[:, None]
        expect = 1 + 0.5 * np.tanh(u[:, 0])
        assert np.allclose(c.sigma(u)[:, 0, 0], expect)

    def test_sin_diag_determinant_bound(self):
        c = make_coefficients("sin_diag", 2, a=0.2)
        u = np.random.default_rng(0).uniform(-10, 10, (100, 2))
        dets = np.linalg.det(c.sigma(u))
        assert np.all(dets >= 0.64 - 1e-12)


class TestDeterministicLimits:
    def test_heat_drift_linear_growth(self):
        spec = runspec("drift_only", {"b0": 2.0}, T=0.2)
        traj = simulate(spec, seed=0)
        final = traj.snapshots[-1]
        assert np.allclose(final.fields, 0.4, atol=1e-12)

    def test_wave_drift_quadratic_growth(self):
        grid = GridSpec(d=1, n_points=128, extent=8.0, dt=5e-3)
        spec = runspec("drift_only", {"b0": 2.0}, T=0.2, grid=grid, operator="wave")
        traj = simulate(spec, seed=0)
        # b0 T^2 / 2 with O(dt) bias
        assert np.allclose(traj.snapshots[-1].fields, 0.04, atol=2.5 * grid.dt)

    @pytest.mark.parametrize("operator,dt", [("heat", 1e-3), ("wave", 5e-3)])
    def test_null_coefficients_stay_zero(self, operator, dt):
        grid = GridSpec(d=1, n_points=128, extent=8.0, dt=dt)
        spec = runspec("linear_const", {"c": 0.0}, T=0.05, grid=grid,
                       operator=operator)
        traj = simulate(spec, seed=3)
        assert np.all(traj.snapshots[-1].fields == 0.0)

    def test_zero_horizon(self):
        spec = runspec(T=0.0)
        traj = simulate(spec, seed=3)
        assert traj.snapshots[-1].t == 0.0
        assert np.all(traj.snapshots[-1].fields == 0.0)


class TestDeterminism:
    def test_identical_seeds_identical_trajectories(self):
        spec = runspec(T=0.05)
        a = simulate(spec, seed=11)
        b = simulate(spec, seed=11)
        assert np.array_equal(a.snapshots[-1].fields, b.snapshots[-1].fields)

    def test_ensemble_prefix_property(self):
        spec = runspec(T=0.02)
        v1, _ = simulate_ensemble(spec, 8, [0.0], seed=5)
        v2, _ = simulate_ensemble(spec, 16, [0.0], seed=5)
        assert np.array_equal(v1, v2[:8])

    def test_batch_size_invariance(self):
        spec = runspec(T=0.02)
        v1, _ = simulate_ensemble(spec, 12, [0.0], seed=5, batch_size=3)
        v2, _ = simulate_ensemble(spec, 12, [0.0], seed=5, batch_size=12)
        assert np.array_equal(v1, v2)

    def test_worker_invariance(self):
        spec = runspec(T=0.01)
        v1, _ = simulate_ensemble(spec, 8, [0.0], seed=5, workers=1, batch_size=4)
        v2, _ = simulate_ensemble(spec, 8, [0.0], seed=5, workers=2, batch_size=4)
        assert np.array_equal(v1, v2)

    def test_m1_matches_single_simulation(self):
        spec = runspec(T=0.02)
        v, ex = simulate_ensemble(spec, 1, [0.5], seed=9)
        traj = simulate(spec, seed=9, sample_index=0)
        assert v[0, 0] == traj.snapshots[-1].fields[(0,) + ex["probe_index"]]


class TestStatistics:
    def test_zero_mean(self):
        spec = runspec(T=0.05)
        v, _ = simulate_ensemble(spec, 600, [0.0], seed=12)
        se = np.std(v[:, 0], ddof=1) / math.sqrt(len(v))
        assert abs(np.mean(v[:, 0])) < 3 * se

    def test_linear_variance_oracle_heat(self):
        spec = runspec(T=0.1, grid=GridSpec(d=1, n_points=256, extent=8.0, dt=5e-4))
        v, _ = simulate_ensemble(spec, 1500, [0.0], seed=4)
        emp = np.var(v[:, 0], ddof=1)
        oracle = gaussian_oracle_variance(heat(1), M1, 1.0, 0.1)
        se = emp * math.sqrt(2.0 / (len(v) - 1))
        assert abs(emp - oracle) < 3 * se + 0.03 * oracle

    def test_linear_variance_oracle_wave(self):
        grid = GridSpec(d=1, n_points=256, extent=8.0, dt=5e-3)
        spec = runspec(T=0.25, grid=grid, operator="wave")
        v, _ = simulate_ensemble(spec, 1500, [0.0], seed=4)
        emp = np.var(v[:, 0], ddof=1)
        oracle = gaussian_oracle_variance(wave(1), M1, 1.0, 0.25)
        se = emp * math.sqrt(2.0 / (len(v) - 1))
        assert abs(emp - oracle) < 3 * se + 0.03 * oracle

    def test_spatial_homogeneity(self):
        spec = runspec(T=0.05)
        va, _ = simulate_ensemble(spec, 800, [0.0], seed=6)
        vb, _ = simulate_ensemble(spec, 800, [2.0], seed=6)
        ma, mb = np.mean(va ** 2), np.mean(vb ** 2)
        se = np.std(va ** 2, ddof=1) / math.sqrt(len(va))
        assert abs(ma - mb) < 3 * math.sqrt(2) * se

    def test_gaussian_kurtosis_linear_case(self):
        spec = runspec(T=0.05)
        v, _ = simulate_ensemble(spec, 3000, [0.0], seed=8)
        x = (v[:, 0] - v[:, 0].mean()) / v[:, 0].std()
        kurt = np.mean(x ** 4)
        se = math.sqrt(24.0 / len(v))
        assert abs(kurt - 3.0) < 4 * se

    def test_dt_self_convergence(self):
        # halving dt moves second moments by well under the documented 5%
        M = 600
        moms = []
        for dt in (1e-3, 5e-4):
            grid = GridSpec(d=1, n_points=128, extent=8.0, dt=dt)
            spec = runspec("sin_diag", {"a": 0.25}, T=0.1, grid=grid)
            _, ex = simulate_ensemble(spec, M, [0.0], seed=10)
            moms.append(float(np.mean(ex["spatial_second_moment"])))
        assert abs(moms[1] - moms[0]) / moms[0] < 0.05

    def test_max_field_moments_stable_under_refinement(self):
        # empirical p-th moments of max |u| move by < 10% (+ sampling slack)
        # when the spatial grid is refined
        M = 400
        stats = {}
        for n in (128, 256):
            grid = GridSpec(d=1, n_points=n, extent=8.0, dt=1e-3)
            spec = runspec("sin_diag", {"a": 0.25}, T=0.5, grid=grid)
            maxes = np.empty(M)
            for lo in range(0, M, 100):
                samples = list(range(lo, min(lo + 100, M)))
                from spdelab.solver import _batched_run
                u, _, _, _ = _batched_run(spec, 10, samples)
                maxes[lo:lo + len(samples)] = np.abs(u).max(axis=(1, 2))
            stats[n] = [float(np.mean(maxes ** p)) for p in (2, 4)]
        for i, p in enumerate((2, 4)):
            rel = abs(stats[256][i] - stats[128][i]) / stats[128][i]
            assert rel < 0.10 + 0.05, f"p={p} moment moved {rel:.2%}"
        assert np.all(np.isfinite(list(stats[128]) + list(stats[256])))


class TestGuards:
    def test_grid_invariants(self):
        with pytest.raises(ConfigurationError):
            GridSpec(d=1, n_points=20, extent=8.0, dt=1e-3)
        with pytest.raises(ConfigurationError):
            GridSpec(d=1, n_points=4, extent=8.0, dt=1e-3)
        with pytest.raises(ConfigurationError):
            GridSpec(d=1, n_points=64, extent=0.0, dt=1e-3)
        with pytest.raises(ConfigurationError):
            GridSpec(d=1, n_points=64, extent=8.0, dt=0.0)

    def test_wave_resolution_guard(self):
        grid = GridSpec(d=1, n_points=128, extent=4.0, dt=0.1)
        spec = runspec(T=0.2, grid=grid, operator="wave")
        with pytest.raises(ResolutionError):
            simulate(spec, seed=0)

    def test_horizon_must_align(self):
        with pytest.raises(ConfigurationError):
            RunSpec("heat", M1, GRID, 1, "linear_const", {}, 0.0005)

    def test_model_grid_dimension_mismatch(self):
        with pytest.raises(ConfigurationError):
            RunSpec("heat", riesz(0.5, 2), GRID, 1, "linear_const", {}, 0.1)


class TestSingleStepOps:
    def test_step_heat_matches_simulate(self):
        spec = runspec(T=GRID.dt)
        lam = spectral_weights(M1, GRID)
        inc = sample_increment(lam, 1, NoiseStream(21), 0, 0, GRID.dt, GRID)
        state = SolutionField(0.0, np.zeros((1,) + GRID.shape))
        out = step_heat(state, inc, spec.coefficients(), heat(1), GRID)
        traj = simulate(spec, seed=21)
        assert np.allclose(out.fields, traj.snapshots[-1].fields, atol=1e-14)

    def test_step_wave_runs(self):
        grid = GridSpec(d=1, n_points=128, extent=8.0, dt=1e-2)
        lam = spectral_weights(M1, grid)
        inc = sample_increment(lam, 1, NoiseStream(1), 0, 0, grid.dt, grid)
        state = WaveState(0.0, np.zeros((1,) + grid.shape),
                          velocity=np.zeros((1,) + grid.shape))
        out = step_wave(state, inc, make_coefficients("linear_const", 1),
                        wave(1), grid)
        assert out.t == pytest.approx(grid.dt)
        assert np.all(np.isfinite(out.fields))
