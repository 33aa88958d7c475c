"""Monte Carlo statistics on the simulated solution.

Covers the four empirical studies the laboratory runs:

* product-Gaussian kernel density estimates of the law of u(t, x*) with a
  positivity check over the region where the diffusion matrix is invertible;
* increment-moment scaling fits in time and space (sample-path regularity);
* the exact linear-case variance from the stochastic-integral isometry,
  used as an oracle for the solver;
* the short-window recovery statistic: the normalized window average of the
  kernel-weighted diffusion field, which converges to sigma(u(t, x*)) as the
  window 2^-n shrinks.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from .errors import (ConfigurationError, DegenerateSampleError, DomainError,
                     ResolutionError)
from .green import GreenFunction, multiplier_radial
from .grids import GridSpec
from .hyp import j_integral
from .noise import spectral_weights
from .solver import RunSpec, simulate_ensemble, _batched_run


# ---------------------------------------------------------------------------
# kernel density estimation
# ---------------------------------------------------------------------------

@dataclass
class DensityEstimate:
    """Product-Gaussian KDE on a rectangular evaluation grid."""

    axes: tuple            # per-component grid coordinates
    values: np.ndarray     # density on the tensor grid, shape len(axes[0]) x ...
    bandwidth: np.ndarray  # per-component bandwidths
    n_samples: int
    samples: np.ndarray    # (M, k), kept for quantile-based evaluation sets
    probe: tuple = None

    @property
    def k(self):
        return len(self.axes)

    def integral(self):
        """Trapezoid integral of the estimate over its box (<= 1)."""
        v = self.values
        for ax in reversed(range(self.k)):
            v = np.trapezoid(v, x=self.axes[ax], axis=ax)
        return float(v)


def kde(samples, bandwidth="auto", n_grid=None, pad_bandwidths=3.0):
    """Product-Gaussian kernel density estimate of an R^k sample cloud.

    Bandwidths default to the per-component Silverman-type rule
    sigma_c * (4 / ((k + 2) M))^(1 / (k + 4)), recorded in the result.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.ndim == 1:
        samples = samples[:, None]
    M, k = samples.shape
    if M < 500:
        raise ConfigurationError("density estimation needs at least 500 samples")
    if k > 3:
        raise DomainError("density grids are supported for k <= 3")
    std = samples.std(axis=0, ddof=1)
    if np.any(std == 0.0):
        raise DegenerateSampleError("degenerate sample, zero spread")
    if isinstance(bandwidth, str) and bandwidth == "auto":
        bw = std * (4.0 / ((k + 2.0) * M)) ** (1.0 / (k + 4.0))
    else:
        bw = np.broadcast_to(np.asarray(bandwidth, dtype=float), (k,)).copy()
        if np.any(bw <= 0):
            raise DomainError("bandwidths must be positive")
    if n_grid is None:
        n_grid = {1: 512, 2: 128, 3: 40}[k]
    axes = tuple(
        np.linspace(samples[:, c].min() - pad_bandwidths * bw[c],
                    samples[:, c].max() + pad_bandwidths * bw[c], n_grid)
        for c in range(k)
    )
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    values = np.empty(pts.shape[0])
    norm = 1.0 / (M * np.prod(bw * math.sqrt(2.0 * math.pi)))
    chunk = max(1, int(5e6) // M)
    for lo in range(0, pts.shape[0], chunk):
        sl = pts[lo:lo + chunk]
        z = (sl[:, None, :] - samples[None, :, :]) / bw[None, None, :]
        values[lo:lo + chunk] = np.sum(np.exp(-0.5 * np.sum(z * z, axis=2)), axis=1)
    values *= norm
    return DensityEstimate(axes, values.reshape([n_grid] * k), bw, M, samples)


@dataclass(frozen=True)
class SigmaRegion:
    """The set where det sigma is bounded away from zero.

    ``delta_det`` = None selects the default operational margin
    0.05 * max |det sigma| observed on the sample cloud.
    """

    sigma: callable
    delta_det: float = None

    def resolve_margin(self, samples):
        if self.delta_det is not None:
            if self.delta_det <= 0:
                raise DomainError("margin must be positive")
            return float(self.delta_det)
        dets = np.abs(np.linalg.det(np.atleast_3d(self.sigma(samples))))
        return 0.05 * float(dets.max())

    def indicator(self, points, margin):
        sig = self.sigma(points)
        dets = np.abs(np.linalg.det(sig))
        return dets >= margin


@dataclass
class PositivityReport:
    verdict: str              # "pass" | "fail" | "inconclusive"
    min_density: float
    threshold: float
    n_eval_points: int
    n_margin_excluded: int
    delta_det: float
    quantile_box: tuple       # ((lo_1, hi_1), ..., (lo_k, hi_k))
    note: str = ""


def positivity_check(est: DensityEstimate, region: SigmaRegion,
                     quantile_box=0.9, threshold=None):
    """Minimum of the estimate over (central quantile box) cap (margin set).

    Positivity on the full invertibility region cannot be certified from
    finitely many samples; the check restricts to the box where the sample
    cloud supports the estimator, and reports that restriction explicitly.
    """
    if not 0.0 < quantile_box < 1.0:
        raise DomainError("quantile_box must lie in (0, 1)")
    k = est.k
    qlo, qhi = (1.0 - quantile_box) / 2.0, (1.0 + quantile_box) / 2.0
    bounds = tuple(
        (float(np.quantile(est.samples[:, c], qlo)),
         float(np.quantile(est.samples[:, c], qhi)))
        for c in range(k)
    )
    if threshold is None:
        vol = float(np.prod([hi - lo for lo, hi in bounds]))
        threshold = 1e-3 / vol if vol > 0 else 1e-3
    margin = region.resolve_margin(est.samples)
    mesh = np.meshgrid(*est.axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    in_box = np.ones(pts.shape[0], dtype=bool)
    for c in range(k):
        in_box &= (pts[:, c] >= bounds[c][0]) & (pts[:, c] <= bounds[c][1])
    in_region = region.indicator(pts, margin)
    eval_mask = in_box & in_region
    n_excluded = int(np.sum(in_box & ~in_region))
    if not np.any(eval_mask):
        return PositivityReport("inconclusive", math.nan, threshold, 0,
                                n_excluded, margin, bounds,
                                "no evaluation points in the region within the quantile box")
    vals = est.values.ravel()[eval_mask]
    mn = float(vals.min())
    verdict = "pass" if mn >= threshold else "fail"
    return PositivityReport(verdict, mn, threshold, int(eval_mask.sum()),
                            n_excluded, margin, bounds)


# ---------------------------------------------------------------------------
# increment-moment scaling (sample-path regularity)
# ---------------------------------------------------------------------------

@dataclass
class MomentScalingFit:
    direction: str
    p: float
    lags: np.ndarray
    moments: np.ndarray
    moment_stderr: np.ndarray
    exponent: float          # slope / p
    ci_low: float
    ci_high: float
    n_boot: int


def fit_moment_scaling(increment_norms, lags, p, n_boot=200, seed=0,
                       direction="time"):
    """Fit E|increment|^p ~ lag^(p * exponent); bootstrap the samples.

    ``increment_norms``: array (M, n_lags) of increment magnitudes.  The
    reported exponent is slope/p; the confidence interval is the 2.5/97.5
    percentile range over ``n_boot`` sample resamplings.
    """
    lags = np.asarray(lags, dtype=float)
    X = np.asarray(increment_norms, dtype=float) ** p
    M = X.shape[0]
    moments = X.mean(axis=0)
    stderr = X.std(axis=0, ddof=1) / math.sqrt(M)
    if np.any(moments <= 0):
        raise DomainError("nonpositive moment in scaling fit")
    ll = np.log(lags)

    def slope_of(m):
        return np.polyfit(ll, np.log(m), 1)[0] / p

    est = float(slope_of(moments))
    rng = np.random.default_rng(seed)
    boots = np.empty(n_boot)
    for i in range(n_boot):
        idx = rng.integers(0, M, size=M)
        boots[i] = slope_of(X[idx].mean(axis=0))
    lo, hi = np.percentile(boots, [2.5, 97.5])
    return MomentScalingFit(direction, p, lags, moments, stderr, est,
                            float(lo), float(hi), n_boot)


def hoelder_estimate(spec: RunSpec, direction, lags, p, M, probe, seed,
                     n_boot=200, workers=1, batch_size=64):
    """Ensemble increment-moment exponent at the probe, time or space.

    Time lags must be multiples of dt with the largest not exceeding T;
    space lags must be multiples of the cell width.  At least 4 lags
    spanning 1.5 decades are required.
    """
    lags = np.asarray(sorted(float(l) for l in lags))
    if len(lags) < 4 or math.log10(lags[-1] / lags[0]) < 1.5 - 1e-9:
        raise ResolutionError("need >= 4 lags spanning >= 1.5 decades")
    grid = spec.grid
    if direction == "time":
        steps = [round(l / grid.dt) for l in lags]
        if any(abs(l - s * grid.dt) > 1e-9 or s < 1 for l, s in zip(lags, steps)):
            raise ResolutionError("time lags must be positive multiples of dt")
        base = spec.T - lags[-1]
        if base <= 0:
            raise ResolutionError("largest lag leaves no base time")
        base_step = round(base / grid.dt)
        times = [base] + [base + l for l in lags]
        values, extras = simulate_ensemble(
            spec, M, probe, seed, record_times=times, workers=workers,
            batch_size=batch_size)
        u0 = extras["by_step"][base_step]
        incs = np.stack(
            [np.linalg.norm(extras["by_step"][base_step + s] - u0, axis=1)
             for s in steps],
            axis=1)
    elif direction == "space":
        cells = [round(l / grid.dx) for l in lags]
        if any(abs(l - c * grid.dx) > 1e-9 or c < 1 for l, c in zip(lags, cells)):
            raise ResolutionError("space lags must be positive multiples of the cell width")
        offsets = [(c,) + (0,) * (grid.d - 1) for c in cells]
        values, extras = simulate_ensemble(
            spec, M, probe, seed, space_offsets=offsets, workers=workers,
            batch_size=batch_size)
        incs = np.stack(
            [np.linalg.norm(extras["offsets"][o] - values, axis=1) for o in offsets],
            axis=1)
    else:
        raise DomainError("direction must be 'time' or 'space'")
    return fit_moment_scaling(incs, lags, p, n_boot=n_boot, seed=seed,
                              direction=direction)


# ---------------------------------------------------------------------------
# linear-case variance oracle
# ---------------------------------------------------------------------------

def gaussian_oracle_variance(g, model, c, t):
    """Exact marginal variance c^2 J(0, t) of each component when sigma = c I."""
    if t <= 0:
        raise DomainError("time must be positive")
    if c == 0.0:
        return 0.0
    return c * c * j_integral(g, model, 0.0, t)


# ---------------------------------------------------------------------------
# short-window recovery of the diffusion matrix
# ---------------------------------------------------------------------------

def _window_multiplier(g, r, rho):
    if r == 0.0:
        return np.ones_like(rho) if g.operator == "heat" else np.zeros_like(rho)
    return multiplier_radial(g, r, rho)


def _window_statistic(g, model, grid, coeffs, window_fields, probe_idx, dt,
                      n_values):
    """Recovery matrices for each window size 2^-n, from dense step storage.

    ``window_fields``: list of (B, k, *grid) arrays at r = 0, dt, 2 dt, ...
    counted backwards from the evaluation time.  Numerator and normalizer
    share the time grid and the spectral weights, so a constant diffusion
    matrix is recovered exactly.
    """
    lam = spectral_weights(model, grid)
    rho = grid.freq_norm_mesh()
    coords = grid.index_coords(probe_idx)
    freqs = np.meshgrid(*([grid.axis_freqs()] * grid.d), indexing="ij")
    phase = np.exp(-2j * math.pi * sum(f * c for f, c in zip(freqs, coords)))
    axes = tuple(range(-grid.d, 0))
    B, k = window_fields[0].shape[:2]
    n_steps_max = max(round(2.0 ** (-n) / dt) for n in n_values)
    h_vals = np.empty((n_steps_max + 1, B, k, k))
    c_vals = np.empty(n_steps_max + 1)
    for j in range(n_steps_max + 1):
        r = j * dt
        mult = _window_multiplier(g, r, rho)
        amp = mult * phase
        g_field = np.real(np.fft.ifftn(amp, axes=tuple(range(-grid.d, 0)))) * amp.size
        c_vals[j] = float(np.sum(mult * mult * lam))
        u_r = window_fields[j]                       # (B, k, *grid)
        pts = np.moveaxis(u_r, 1, -1)                # (B, *grid, k)
        sig = coeffs.sigma(pts)                      # (B, *grid, k, k)
        sig = np.moveaxis(sig, tuple(range(1, 1 + grid.d)), axes)
        prod = sig * g_field                         # (B, k, k, *grid)
        ft = np.fft.fftn(prod, axes=axes) / amp.size
        h_vals[j] = np.real(np.sum(ft * np.conj(amp) * lam,
                                   axis=axes))
    out = {}
    for n in n_values:
        m = round(2.0 ** (-n) / dt)
        num = np.trapezoid(h_vals[:m + 1], dx=dt, axis=0)
        den = np.trapezoid(c_vals[:m + 1], dx=dt)
        out[n] = (num / den, den)
    return out


def localization_statistic(traj, probe, n, g, model, grid, coeffs):
    """Window-2^-n recovery matrix at the probe from a stored trajectory.

    Requires the trajectory to hold every step in [t - 2^-n, t] and the
    window to span at least 4 steps.
    """
    window = 2.0 ** (-n)
    dt = grid.dt
    t_end = traj.snapshots[-1].t
    if window < 4.0 * dt - 1e-12:
        raise ResolutionError("increase step resolution or decrease n")
    if window > t_end + 1e-12:
        raise ResolutionError("window exceeds history")
    m = round(window / dt)
    times = {round(t / dt): f for t, f in traj.window}
    t_step = round(t_end / dt)
    fields = []
    for j in range(m + 1):
        step = t_step - j
        if step not in times:
            raise ResolutionError("trajectory does not store the full window")
        fields.append(times[step][None, ...])
    probe_idx = grid.snap_point(probe)
    out = _window_statistic(g, model, grid, coeffs, fields, probe_idx, dt, [n])
    return out[n][0][0]


@dataclass
class LocalizationCurve:
    n_values: list
    normalizers: list          # c_n per window
    mean_errors: list          # E || W_n - sigma(u(t, x*)) ||_F
    stderrs: list
    decay_rate: float          # positive when the error decays in n
    provenance: dict = field(default_factory=dict)


def localization_convergence(spec: RunSpec, n_range, M, probe, seed,
                             batch_size=16):
    """Ensemble-mean recovery error per window size, with its decay rate."""
    n_values = sorted(int(n) for n in n_range)
    grid = spec.grid
    dt = grid.dt
    largest = 2.0 ** (-n_values[0])
    if largest > spec.T + 1e-12:
        raise ResolutionError("window exceeds history")
    if 2.0 ** (-n_values[-1]) < 4.0 * dt - 1e-12:
        raise ResolutionError("increase step resolution or decrease n")
    coeffs = spec.coefficients()
    probe_idx = grid.snap_point(probe)
    m_max = round(largest / dt)
    t_step = spec.n_steps
    errors = {n: [] for n in n_values}
    norms = {}
    for lo in range(0, M, batch_size):
        samples = list(range(lo, min(lo + batch_size, M)))
        _, _, recorded, win = _batched_run(
            spec, seed, samples,
            record_steps={t_step},
            window_range=(t_step - m_max, t_step))
        by_step = {round(t / dt): f for t, f in win}
        fields = [by_step[t_step - j] for j in range(m_max + 1)]
        stats = _window_statistic(spec.green, spec.model, grid, coeffs,
                                  fields, probe_idx, dt, n_values)
        u_final = recorded[t_step]
        pts = np.moveaxis(u_final, 1, -1)[(slice(None),) + probe_idx]
        sig_true = coeffs.sigma(pts)
        for n in n_values:
            w, c_n = stats[n]
            err = np.linalg.norm((w - sig_true).reshape(len(samples), -1), axis=1)
            errors[n].extend(err.tolist())
            norms[n] = c_n
    mean_err = [float(np.mean(errors[n])) for n in n_values]
    stderr = [float(np.std(errors[n], ddof=1) / math.sqrt(M)) for n in n_values]
    safe = [max(e, 1e-300) for e in mean_err]
    rate = -float(np.polyfit(n_values, np.log2(safe), 1)[0])
    return LocalizationCurve(n_values, [norms[n] for n in n_values],
                             mean_err, stderr, rate,
                             {"M": M, "seed": seed,
                              "probe_index": probe_idx})
