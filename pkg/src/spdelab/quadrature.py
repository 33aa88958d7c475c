"""Quadrature primitives for singular and oscillatory radial integrals.

Two recurring difficulties drive the design here:

* integrable power singularities rho^(s-1) at the origin, removed exactly by
  the substitution u = rho^s;
* slowly decaying oscillatory tails sin^2(c rho) * rho^(p) with p in (-3, -1),
  summed over panels aligned to the oscillation period, with the mean value
  of the trigonometric factor integrated analytically beyond the last panel
  and the oscillatory remainder bounded by integration by parts.
"""

from functools import lru_cache

import numpy as np
from scipy.integrate import quad

_GAUSS_X, _GAUSS_W = np.polynomial.legendre.leggauss(10)


def panel_block_sum(f, start, width, count):
    """Sum of integrals of ``f`` over ``count`` consecutive panels of ``width``.

    Uses 10-point Gauss-Legendre per panel, vectorized over the block: exact
    for smooth integrands resolved at one oscillation per panel.
    """
    edges = start + width * np.arange(count)
    nodes = edges[:, None] + (_GAUSS_X[None, :] + 1.0) * (width / 2.0)
    vals = f(nodes)
    return float((width / 2.0) * np.sum(vals @ _GAUSS_W))


def oscillatory_power_tail(f, power, start, width, tol, osc_scale, block=512,
                           mean_level=0.5, max_panels=2_000_000):
    """integral_start^inf f(rho) drho for f = (trig factor) * rho^power.

    ``f`` must oscillate with period ``width`` around ``mean_level`` times
    rho^power, with -3 < power < -1 so the tail converges.  Panels are summed
    until the analytic mean tail plus the by-parts bound on the oscillatory
    remainder (~ rho^power / osc_scale) drops below ``tol`` relative to the
    running estimate.  Returns the panel sum plus the mean tail.
    """
    total = 0.0
    k = 0
    while True:
        total += panel_block_sum(f, start + k * width, width, block)
        k += block
        rho_star = start + k * width
        mean_tail = mean_level * rho_star ** (power + 1.0) / (-(power + 1.0))
        osc_bound = rho_star ** power / osc_scale
        scale = abs(total) + mean_tail
        if osc_bound <= tol * scale or k >= max_panels:
            return total + mean_tail


@lru_cache(maxsize=64)
def one_minus_cos_moment(s, tol=1e-12):
    """integral_0^inf (1 - cos u) u^(-s) du for s in (1, 3).

    The head [0, 2 pi] behaves like u^(2-s) / 2; writing 1 - cos u as
    2 sin^2(u/2) avoids cancellation, and the origin power is substituted
    away.  The tail is the panel/mean-tail scheme with mean level 1.
    """
    if not 1.0 < s < 3.0:
        raise ValueError("moment defined for s in (1, 3)")

    def smooth(u):
        if u == 0.0:
            return 0.5
        return 2.0 * np.sin(u / 2.0) ** 2 / (u * u)

    head = integrate_with_origin_power(smooth, 3.0 - s, 2.0 * np.pi)
    tail = oscillatory_power_tail(
        lambda u: 2.0 * np.sin(u / 2.0) ** 2 * u ** (-s),
        power=-s, start=2.0 * np.pi, width=2.0 * np.pi,
        tol=tol, osc_scale=1.0, mean_level=1.0,
    )
    return head + tail


def integrate_with_origin_power(f_smooth, s, upper, abs_tol=1e-13, rel_tol=1e-11):
    """integral_0^upper f_smooth(rho) rho^(s-1) drho for smooth f_smooth, s > 0.

    Substituting u = rho^s maps the integrand to f_smooth(u^(1/s)) / s, which
    is bounded; adaptive quadrature then converges quickly.
    """
    if upper <= 0:
        return 0.0
    v, _ = quad(lambda u: f_smooth(u ** (1.0 / s)), 0.0, upper ** s,
                epsabs=abs_tol, epsrel=rel_tol, limit=200)
    return v / s
