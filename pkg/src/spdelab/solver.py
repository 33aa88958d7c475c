"""Mild-solution integrators for the k-component system on the torus.

Time stepping works in Fourier space with the exact propagator of the linear
part.  Writing m_dt for the operator's Fourier multiplier at lag dt:

* heat:  u_{n+1} = m_dt * (u_n + sigma(u_n) dW_n + b(u_n) dt), applied
  componentwise, with m_dt = exp(-2 pi^2 dt |xi|^2);
* wave:  the pair (u, du/dt) rotates under the exact group
  [[cos(w dt), sin(w dt)/w], [-w sin(w dt), cos(w dt)]], w = 2 pi |xi|,
  and the forcing F_n = sigma(u_n) dW_n + b(u_n) dt enters through
  (sin(w dt)/w, cos(w dt)): the multiplier of the fundamental solution and
  its time derivative.

Composing steps makes the noise injected at step n reach time T through the
multiplier at lag T - t_n, i.e. the scheme is the left-point Riemann
discretization of the stochastic convolution with the exact kernel.  The
nonlinearity is frozen at the pre-step field.  Initial data are identically
zero; there is no configurable initial condition.

Ensembles are embarrassingly parallel: every sample owns a counter-based
stream key, so results are independent of batch size and worker count.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
import math

import numpy as np

from .errors import BlowUpError, ConfigurationError, ResolutionError
from .green import GreenFunction
from .grids import GridSpec
from .noise import NoiseStream, spectral_weights, _synthesize
from .spectral import SpectralModel


# ---------------------------------------------------------------------------
# coefficient registry
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CoefficientSet:
    """Diffusion matrix sigma and drift b with their regularity metadata.

    ``sigma(u)`` maps (..., k) -> (..., k, k) and ``b(u)`` maps
    (..., k) -> (..., k), vectorized over leading axes.  ``bounded`` and
    ``smooth`` record whether the entries are bounded with bounded
    derivatives; ``lipschitz_constant`` is a recorded (not inferred) bound.
    """

    name: str
    k: int
    sigma: callable
    b: callable
    lipschitz_constant: float
    bounded: bool = True
    smooth: bool = True
    params: dict = field(default_factory=dict)


def _eye(k):
    return np.eye(k)


def linear_const(k, c=1.0):
    ident = _eye(k)

    def sigma(u):
        return np.broadcast_to(c * ident, u.shape + (k,)).copy()

    def b(u):
        return np.zeros_like(u)

    return CoefficientSet("linear_const", k, sigma, b, 0.0, params={"c": c})


def drift_only(k, b0=1.0):
    b0v = np.broadcast_to(np.asarray(b0, dtype=float), (k,))

    def sigma(u):
        return np.zeros(u.shape + (k,))

    def b(u):
        return np.broadcast_to(b0v, u.shape).copy()

    return CoefficientSet("drift_only", k, sigma, b, 0.0,
                          params={"b0": np.asarray(b0, dtype=float).tolist()})


def sin_diag(k, a=0.25):
    ident = _eye(k)

    def sigma(u):
        out = np.zeros(u.shape + (k,))
        out[...] = ident
        idx = np.arange(k)
        out[..., idx, idx] += a * np.sin(u)
        return out

    def b(u):
        return np.zeros_like(u)

    return CoefficientSet("sin_diag", k, sigma, b, abs(a), params={"a": a})


def sigmoid_mix(k, a=0.5):
    # full matrix: delta_ij + (a/k) tanh((u_i + u_j)/2); reduces to
    # 1 + a tanh(u) when k = 1
    ident = _eye(k)

    def sigma(u):
        s = np.tanh((u[..., :, None] + u[..., None, :]) / 2.0)
        return ident + (a / k) * s

    def b(u):
        return np.zeros_like(u)

    return CoefficientSet("sigmoid_mix", k, sigma, b, abs(a), params={"a": a})


REGISTRY = {
    "linear_const": linear_const,
    "drift_only": drift_only,
    "sin_diag": sin_diag,
    "sigmoid_mix": sigmoid_mix,
}


def make_coefficients(name, k, **params):
    try:
        factory = REGISTRY[name]
    except KeyError:
        raise ConfigurationError(f"unknown coefficient set {name!r}") from None
    return factory(k, **params)


# ---------------------------------------------------------------------------
# run specification and states
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RunSpec:
    """Everything needed to reproduce a run except the seed."""

    operator: str
    model: SpectralModel
    grid: GridSpec
    k: int
    coeffs_name: str
    coeffs_params: dict
    T: float

    def __post_init__(self):
        if self.T < 0:
            raise ConfigurationError("T must be nonnegative")
        if self.operator == "wave" and self.grid.d > 3:
            raise ConfigurationError("wave runs require d <= 3")
        if self.model.d != self.grid.d:
            raise ConfigurationError("model and grid dimension differ")
        n_steps = round(self.T / self.grid.dt)
        if abs(self.T - n_steps * self.grid.dt) > 1e-9 * max(1.0, self.T):
            raise ConfigurationError("T must be an integer multiple of dt")

    @property
    def green(self):
        return GreenFunction(self.operator, self.grid.d)

    @property
    def n_steps(self):
        return round(self.T / self.grid.dt)

    def coefficients(self):
        return make_coefficients(self.coeffs_name, self.k, **self.coeffs_params)


@dataclass
class SolutionField:
    """k grid fields at one time, with reproduction provenance."""

    t: float
    fields: np.ndarray  # (k, *grid.shape)
    provenance: dict = field(default_factory=dict)


@dataclass
class WaveState(SolutionField):
    """Solution plus its time derivative for the second-order system."""

    velocity: np.ndarray = None


# ---------------------------------------------------------------------------
# steppers (batched over leading sample axes)
# ---------------------------------------------------------------------------

class HeatStepper:
    def __init__(self, grid: GridSpec, dt):
        rho = grid.freq_norm_mesh()
        self.mult = np.exp(-2.0 * math.pi ** 2 * dt * rho ** 2)
        self.axes = tuple(range(-grid.d, 0))

    def step(self, u, forcing):
        # u, forcing: (..., k, *grid.shape)
        tot = np.fft.fftn(u + forcing, axes=self.axes)
        return np.real(np.fft.ifftn(self.mult * tot, axes=self.axes))


class WaveStepper:
    def __init__(self, grid: GridSpec, dt):
        if dt > grid.extent / (2.0 * grid.n_points):
            raise ResolutionError(
                "wave step needs dt <= extent / (2 n_points) for accuracy")
        rho = grid.freq_norm_mesh()
        omega = 2.0 * math.pi * rho
        self.cos = np.cos(omega * dt)
        self.sinc = dt * np.sinc(2.0 * dt * rho)       # sin(w dt)/w
        self.wsin = omega * np.sin(omega * dt)
        self.axes = tuple(range(-grid.d, 0))

    def step(self, u, v, forcing):
        uh = np.fft.fftn(u, axes=self.axes)
        vh = np.fft.fftn(v, axes=self.axes)
        fh = np.fft.fftn(forcing, axes=self.axes)
        new_u = self.cos * uh + self.sinc * (vh + fh)
        new_v = -self.wsin * uh + self.cos * (vh + fh)
        return (np.real(np.fft.ifftn(new_u, axes=self.axes)),
                np.real(np.fft.ifftn(new_v, axes=self.axes)))


def _apply_sigma(coeffs, u_points, dW_points):
    # u, dW laid out as (..., k); matrix product at every point
    sig = coeffs.sigma(u_points)
    return np.einsum("...ij,...j->...i", sig, dW_points)


# ---------------------------------------------------------------------------
# public single-step operations
# ---------------------------------------------------------------------------

def _pointwise_forcing(coeffs, u, dW, dt, d):
    """sigma(u) dW + b(u) dt for fields shaped (..., k, *spatial)."""
    # move the component axis last for the pointwise matrix algebra
    src = -1 - d
    u_pts = np.moveaxis(u, src, -1)
    dw_pts = np.moveaxis(dW, src, -1)
    out = _apply_sigma(coeffs, u_pts, dw_pts) + coeffs.b(u_pts) * dt
    return np.moveaxis(out, -1, src)


def step_heat(state: SolutionField, incr, coeffs, g: GreenFunction, grid: GridSpec):
    """One exponential-Euler step of the heat system."""
    stepper = HeatStepper(grid, grid.dt)
    forcing = _pointwise_forcing(coeffs, state.fields, incr.fields, incr.dt, grid.d)
    new = stepper.step(state.fields, forcing)
    if not np.all(np.isfinite(new)):
        raise BlowUpError(state.provenance.get("step", -1))
    return SolutionField(state.t + grid.dt, new, dict(state.provenance))


def step_wave(state: WaveState, incr, coeffs, g: GreenFunction, grid: GridSpec):
    """One spectral leapfrog step of the wave system."""
    stepper = WaveStepper(grid, grid.dt)
    forcing = _pointwise_forcing(coeffs, state.fields, incr.fields, incr.dt, grid.d)
    u, v = stepper.step(state.fields, state.velocity, forcing)
    if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
        raise BlowUpError(state.provenance.get("step", -1))
    return WaveState(state.t + grid.dt, u, dict(state.provenance), velocity=v)


# ---------------------------------------------------------------------------
# trajectories and ensembles
# ---------------------------------------------------------------------------

@dataclass
class Trajectory:
    """Snapshots at requested times plus an optional dense tail window."""

    spec: RunSpec
    seed: int
    sample_index: int
    snapshots: list  # list[SolutionField]
    window: list     # list[(t, fields)] at every step inside store_window
    provenance: dict


def _batched_run(spec: RunSpec, seed, sample_indices, record_steps=(),
                 window_range=None):
    """Advance a batch of samples; returns per-step collections.

    ``record_steps``: set of step indices whose full fields are kept (per
    sample).  ``window_range``: (step_lo, step_hi) dense storage range.
    """
    grid, k = spec.grid, spec.k
    coeffs = spec.coefficients()
    weights = spectral_weights(spec.model, grid)
    sqrt_lam_dt = np.sqrt(weights * grid.dt)
    stream = NoiseStream(seed)
    B = len(sample_indices)
    shape = (B, k) + grid.shape
    u = np.zeros(shape)
    v = np.zeros(shape) if spec.operator == "wave" else None
    stepper = (HeatStepper(grid, grid.dt) if spec.operator == "heat"
               else WaveStepper(grid, grid.dt))
    record_steps = set(record_steps)
    recorded = {}
    window = []
    if 0 in record_steps:
        recorded[0] = u.copy()
    z = np.empty(shape)
    for step in range(spec.n_steps):
        for bi, sample in enumerate(sample_indices):
            for j in range(k):
                z[bi, j] = stream.normals(sample, step, j, grid.shape)
        dW = _synthesize(sqrt_lam_dt, z)
        forcing = _pointwise_forcing(coeffs, u, dW, grid.dt, grid.d)
        if spec.operator == "heat":
            u = stepper.step(u, forcing)
        else:
            u, v = stepper.step(u, v, forcing)
        if not np.all(np.isfinite(u)):
            raise BlowUpError(step)
        step_idx = step + 1
        if step_idx in record_steps:
            recorded[step_idx] = u.copy()
        if window_range is not None and window_range[0] <= step_idx <= window_range[1]:
            window.append((step_idx * grid.dt, u.copy()))
    return u, v, recorded, window


def _time_to_step(spec, t):
    step = round(t / spec.grid.dt)
    if abs(t - step * spec.grid.dt) > 1e-9 * max(1.0, spec.T):
        raise ResolutionError(f"time {t} is not on the step grid")
    if not 0 <= step <= spec.n_steps:
        raise ConfigurationError(f"time {t} outside [0, T]")
    return step


def simulate(spec: RunSpec, seed, sample_index=0, record_times=(),
             store_window=None):
    """One trajectory; deterministic given (seed, sample_index).

    ``record_times`` lists output times (multiples of dt) to snapshot;
    ``store_window`` = (t0, t1) keeps every step in that closed range for
    short-window statistics.
    """
    record_steps = {_time_to_step(spec, t) for t in record_times}
    record_steps.add(spec.n_steps)
    window_range = None
    if store_window is not None:
        window_range = (_time_to_step(spec, store_window[0]),
                        _time_to_step(spec, store_window[1]))
    u, v, recorded, window = _batched_run(
        spec, seed, [sample_index], record_steps, window_range)
    prov = {
        "seed": seed,
        "sample": sample_index,
        "scheme": f"spectral-{spec.operator}",
        "steps": spec.n_steps,
        "dt": spec.grid.dt,
    }
    snaps = [SolutionField(s * spec.grid.dt, recorded[s][0], dict(prov))
             for s in sorted(recorded)]
    window = [(t, fields[0]) for t, fields in window]
    return Trajectory(spec, seed, sample_index, snaps, window, prov)


def _ensemble_chunk(args):
    spec, seed, samples, probe_idx, record_steps, offsets = args
    grid = spec.grid
    rec = sorted(set(record_steps) | {spec.n_steps})
    u, v, recorded, _ = _batched_run(spec, seed, samples, rec)
    sel = (slice(None), slice(None)) + probe_idx
    out = {s: recorded[s][sel] for s in rec}
    off_vals = {}
    final = recorded[spec.n_steps]
    for off in offsets:
        idx = tuple((p + o) % grid.n_points for p, o in zip(probe_idx, off))
        off_vals[off] = final[(slice(None), slice(None)) + idx]
    # spatial second moment: unbiased for the pointwise variance by
    # stationarity, with much smaller Monte Carlo error
    sm = np.mean(final ** 2, axis=tuple(range(-grid.d, 0)))
    return out, off_vals, sm


def simulate_ensemble(spec: RunSpec, M, probe, seed, record_times=(),
                      space_offsets=(), workers=1, batch_size=64):
    """M independent samples of u(., probe); optionally extra times/offsets.

    Returns ``(values, extras)`` where ``values`` has shape (M, k) at time T
    and ``extras`` carries dicts keyed by recorded time and by spatial
    offset.  Parallel execution over sample chunks is reproducibility-safe:
    sample index keys the stream, and chunks are concatenated in order.
    """
    if M < 1:
        raise ConfigurationError("M must be >= 1")
    grid = spec.grid
    probe_idx = grid.snap_point(probe)
    record_steps = [_time_to_step(spec, t) for t in record_times]
    offsets = [tuple(int(x) for x in np.atleast_1d(o)) for o in space_offsets]
    chunks = [list(range(i, min(i + batch_size, M)))
              for i in range(0, M, batch_size)]
    args = [(spec, seed, c, probe_idx, record_steps, offsets) for c in chunks]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_ensemble_chunk, args))
    else:
        results = [_ensemble_chunk(a) for a in args]
    times = sorted(set(record_steps) | {spec.n_steps})
    by_time = {s: np.concatenate([r[0][s] for r in results], axis=0) for s in times}
    by_offset = {o: np.concatenate([r[1][o] for r in results], axis=0)
                 for o in offsets}
    values = by_time[spec.n_steps]
    extras = {
        "times": {s * grid.dt: by_time[s] for s in times},
        "by_step": by_time,
        "offsets": by_offset,
        "spatial_second_moment": np.concatenate([r[2] for r in results], axis=0),
        "probe_index": probe_idx,
        "probe_coords": grid.index_coords(probe_idx),
    }
    return values, extras
