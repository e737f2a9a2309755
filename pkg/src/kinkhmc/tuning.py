"""Acceptance limits and step-size tuning curves for kinked targets.

In the large-dimension limit the average acceptance of HMC on a product
target depends on the step-size constant l through

    a(l) = 2 Phi(-l**order * sqrt(sigma) / 2)

where order is 1 for targets whose energy error is dominated by kink
crossings and 2 for smooth targets, and sigma is the energy-error variance
constant of the 1-D component. Work per independent sample is proportional
to 1/l, so l * a(l) is the efficiency to maximize.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr


def acceptance_limit(order: int, l_const, sigma: float = 1.0):
    """Limiting average acceptance 2 Phi(-l**order sqrt(sigma) / 2).

    Vectorized over ``l_const``. ``order`` must be 1 (kinked) or 2 (smooth).
    """
    if order not in (1, 2):
        raise ValueError(f"order must be 1 or 2, got {order}")
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    l_arr = np.asarray(l_const, dtype=float)
    if np.any(l_arr < 0):
        raise ValueError("l must be nonnegative")
    out = 2.0 * ndtr(-0.5 * l_arr**order * np.sqrt(sigma))
    if np.isscalar(l_const) or getattr(l_const, "ndim", 1) == 0:
        return float(out)
    return out


@dataclass
class EfficiencyCurve:
    """Efficiency l * a(l) on a log grid, with the refined optimum."""

    order: int
    sigma: float
    l_grid: np.ndarray
    acceptance: np.ndarray
    efficiency: np.ndarray
    l_opt: float
    a_opt: float
    eff_opt: float


def _golden_section(f, lo, hi, rel_tol=1e-10, max_iter=200):
    """Maximize f on [lo, hi] by golden-section search."""
    inv_phi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a <= rel_tol * max(1.0, abs(a) + abs(b)):
            break
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def efficiency_curve(order: int, sigma: float = 1.0, l_min: float = 1e-3,
                     l_max: float = 10.0, n_grid: int = 512) -> EfficiencyCurve:
    """Tabulate l * a(l) on a log grid and refine the optimum.

    The grid argmax is polished by golden-section search on the bracketing
    interval, far past the 1e-6 placement the downstream checks need.
    """
    if n_grid < 3:
        raise ValueError("n_grid must be at least 3")
    l_grid = np.geomspace(l_min, l_max, n_grid)
    acc = acceptance_limit(order, l_grid, sigma)
    eff = l_grid * acc

    i = int(np.argmax(eff))
    lo = l_grid[max(i - 1, 0)]
    hi = l_grid[min(i + 1, n_grid - 1)]
    l_opt, eff_opt = _golden_section(
        lambda l: l * acceptance_limit(order, l, sigma), lo, hi)
    return EfficiencyCurve(order=order, sigma=sigma, l_grid=l_grid,
                           acceptance=acc, efficiency=eff,
                           l_opt=float(l_opt),
                           a_opt=acceptance_limit(order, l_opt, sigma),
                           eff_opt=float(eff_opt))


def efficiency_band(order: int, sigma: float = 1.0,
                    level: float = 0.95) -> tuple:
    """Acceptance interval over which efficiency stays >= level * optimum.

    Efficiency is unimodal in l and acceptance is strictly decreasing in l,
    so the band is a single interval (a_lo, a_hi) in acceptance.
    """
    if not 0.0 < level < 1.0:
        raise ValueError("level must be in (0, 1)")
    curve = efficiency_curve(order, sigma)
    target = level * curve.eff_opt

    def eff(l):
        return l * acceptance_limit(order, l, sigma)

    def bisect_flank(l_in, l_out):
        """Root of eff(l) = target between an inside and an outside point."""
        for _ in range(200):
            mid = np.sqrt(l_in * l_out)
            if eff(mid) >= target:
                l_in = mid
            else:
                l_out = mid
            if abs(l_out - l_in) <= 1e-12 * l_in:
                break
        return 0.5 * (l_in + l_out)

    # Expand outward until efficiency drops below the target on both sides.
    lo_out = curve.l_opt
    while eff(lo_out) >= target:
        lo_out /= 2.0
    hi_out = curve.l_opt
    while eff(hi_out) >= target and hi_out < 1e12:
        hi_out *= 2.0

    l_left = bisect_flank(curve.l_opt, lo_out)
    l_right = bisect_flank(curve.l_opt, hi_out)
    return (acceptance_limit(order, l_right, sigma),
            acceptance_limit(order, l_left, sigma))
