"""Energy-error order measurements for smooth and kinked potentials.

The one-step energy error of leapfrog is cubic in the step size on smooth
potentials. When the drift segment pierces kink surfaces the error picks up a
first-order term with an explicit form: for a step whose drift crosses
surfaces at offsets t_i with gradient jumps J_i,

    predicted = sum_i (eps/2 - t_i) * (p_half . J_i)

This module measures both orders, fits them on log-log grids, and provides
the start-point construction that pins a chosen surface crossing at a fixed
fraction of the step.
"""

from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np

from .errors import ConstructionError
from .leapfrog import (PhasePoint, StepRecord, detect_crossings,
                       leapfrog_step, trajectory)
from .potentials import Potential


@dataclass
class ErrorOrderFit:
    """Least-squares line through (log eps, log |error|)."""

    epsilons: np.ndarray
    abs_errors: np.ndarray
    slope: float
    intercept: float
    r_squared: float
    n_used: int
    floor: float = 1e-14

    @classmethod
    def fit(cls, epsilons, abs_errors, floor: float = 1e-14) -> "ErrorOrderFit":
        """Fit, ignoring errors at or below ``floor`` (rounding noise)."""
        eps = np.asarray(epsilons, dtype=float)
        err = np.asarray(abs_errors, dtype=float)
        mask = np.isfinite(err) & (err > floor)
        if mask.sum() < 2:
            raise ValueError(
                f"only {int(mask.sum())} errors above the {floor:g} floor; "
                "cannot fit an order"
            )
        lx = np.log(eps[mask])
        ly = np.log(err[mask])
        slope, intercept = np.polyfit(lx, ly, 1)
        resid = ly - (slope * lx + intercept)
        ss_tot = float(np.sum((ly - ly.mean()) ** 2))
        r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
        return cls(epsilons=eps, abs_errors=err, slope=float(slope),
                   intercept=float(intercept), r_squared=r2,
                   n_used=int(mask.sum()), floor=floor)


def predict_local_error(record: StepRecord) -> float:
    """First-order energy-error prediction from a step's crossing events."""
    total = 0.0
    for ev in record.crossings:
        if ev.jump is None:
            raise ValueError(
                "crossing events carry no jump vectors; rerun the step with "
                "with_gradients=True"
            )
        total += (0.5 * record.step_size - ev.time) * float(record.p_half @ ev.jump)
    return total


# ---------------------------------------------------------------------------
# local (single-step) studies


@dataclass
class LocalErrorStudy:
    """Measured vs predicted one-step energy errors across step sizes."""

    regime: str
    epsilons: np.ndarray
    measured: np.ndarray          # signed delta H per step
    predicted: np.ndarray         # signed first-order prediction
    measured_fit: ErrorOrderFit
    residual_fit: Optional[ErrorOrderFit]
    target_surface: Optional[tuple] = None
    target_fractions: Optional[np.ndarray] = None
    records: List[StepRecord] = field(default_factory=list)


def _pick_crossing(potential, anchor_q, drift_p, window, window_max):
    """First window along the drift containing a crossing; pick the one whose
    jump couples most strongly to the drift momentum."""
    t_ref = window
    while t_ref <= window_max:
        events = detect_crossings(potential, anchor_q, drift_p, t_ref,
                                  with_gradients=True)
        if events:
            return max(events, key=lambda ev: abs(float(drift_p @ ev.jump)))
        t_ref *= 2.0
    raise ConstructionError(
        f"no kink crossing along the drift within offset {window_max:g}"
    )


def _refine_on_line(potential, surface_id, z_ref, drift_p, scale):
    """Polish the surface offset u* along z_ref + u * drift_p by secant steps."""
    def g(u):
        return potential.surface_value(surface_id, z_ref + u * drift_p)

    u = 0.0
    gu = g(u)
    if gu == 0.0:
        return 0.0
    h = 1e-6 * scale
    for _ in range(3):
        slope = (g(u + h) - g(u - h)) / (2.0 * h)
        if slope == 0.0:
            break
        u -= gu / slope
        gu = g(u)
        if gu == 0.0:
            break
    return u


def local_error_study(potential: Potential, anchor: PhasePoint,
                      epsilons: Sequence[float], regime: str = "smooth",
                      crossing_fraction: float = 0.25,
                      search_window: float = 1e-2,
                      search_window_max: float = 20.0) -> LocalErrorStudy:
    """Single leapfrog steps at each step size, measured against prediction.

    regime "smooth": every step starts from the anchor unchanged.

    regime "crossing": starts are constructed so a chosen kink surface is
    pierced at offset crossing_fraction * eps for every eps. The construction
    walks the anchor onto the surface along the drift direction, then for each
    eps backs off by crossing_fraction * eps and pre-compensates the initial
    momentum by the first half kick (p0 = p_anchor + (eps/2) grad(q0)), so the
    drift momentum, and hence the drift line, is the same for every eps.
    """
    eps_arr = np.asarray(sorted(float(e) for e in epsilons))
    if len(eps_arr) < 2:
        raise ValueError("need at least two step sizes")
    if regime not in ("smooth", "crossing"):
        raise ValueError(f"unknown regime {regime!r}")

    measured = np.empty(len(eps_arr))
    predicted = np.zeros(len(eps_arr))
    records = []
    target_surface = None
    fractions = None

    if regime == "smooth":
        for i, eps in enumerate(eps_arr):
            _, rec = leapfrog_step(potential, anchor, eps,
                                   detect=True, with_gradients=True,
                                   divergence_cap=np.inf)
            measured[i] = rec.delta_h
            predicted[i] = predict_local_error(rec)
            records.append(rec)
    else:
        if crossing_fraction <= 0.0 or crossing_fraction >= 1.0:
            raise ValueError("crossing_fraction must be inside (0, 1)")
        drift_p = anchor.p
        event = _pick_crossing(potential, anchor.q, drift_p,
                               search_window, search_window_max)
        target_surface = event.surface_id
        u_star = _refine_on_line(potential, target_surface, event.point,
                                 drift_p, scale=max(eps_arr[-1], 1e-6))
        z_star = event.point

        fractions = np.empty(len(eps_arr))
        for i, eps in enumerate(eps_arr):
            q0 = z_star + (u_star - crossing_fraction * eps) * drift_p
            p0 = drift_p + (0.5 * eps) * potential.grad(q0)
            _, rec = leapfrog_step(potential, PhasePoint(q0, p0), eps,
                                   detect=True, with_gradients=True,
                                   divergence_cap=np.inf)
            measured[i] = rec.delta_h
            predicted[i] = predict_local_error(rec)
            records.append(rec)
            hit = [ev for ev in rec.crossings
                   if ev.surface_id == target_surface]
            if not hit:
                raise ConstructionError(
                    f"constructed start misses surface {target_surface} "
                    f"at eps={eps:g}"
                )
            fractions[i] = hit[0].time / eps

    measured_fit = ErrorOrderFit.fit(eps_arr, np.abs(measured))
    residual = np.abs(measured - predicted)
    try:
        residual_fit = ErrorOrderFit.fit(eps_arr, residual)
    except ValueError:
        residual_fit = None  # residual at rounding noise everywhere

    return LocalErrorStudy(regime=regime, epsilons=eps_arr,
                           measured=measured, predicted=predicted,
                           measured_fit=measured_fit,
                           residual_fit=residual_fit,
                           target_surface=target_surface,
                           target_fractions=fractions,
                           records=records)


def local_error_order(potential: Potential, anchor: PhasePoint,
                      epsilons: Sequence[float], regime: str = "smooth",
                      crossing_fraction: float = 0.25) -> ErrorOrderFit:
    """Order fit of the one-step |delta H| against step size."""
    study = local_error_study(potential, anchor, epsilons, regime=regime,
                              crossing_fraction=crossing_fraction)
    return study.measured_fit


# ---------------------------------------------------------------------------
# global (fixed travel time) studies


@dataclass
class GlobalErrorRow:
    step_size: float
    n_steps: int
    abs_error: float
    n_crossings: int
    divergent: bool


@dataclass
class GlobalErrorStudy:
    travel_time: float
    rows: List[GlobalErrorRow]
    fit: ErrorOrderFit

    @property
    def n_excluded(self) -> int:
        return sum(r.divergent for r in self.rows)


def global_error_order(potential: Potential, init: PhasePoint,
                       travel_time: float, n_steps_list: Sequence[int],
                       divergence_cap: float = 1e6) -> GlobalErrorStudy:
    """|H(T) - H(0)| over whole trajectories of fixed travel time.

    Each entry of n_steps_list gives one trajectory with eps = T / L from the
    same start. Divergent trajectories are excluded from the fit and flagged
    in their row. Crossings are counted (times only) along the way.
    """
    rows = []
    for L in n_steps_list:
        L = int(L)
        eps = travel_time / L
        trace = trajectory(potential, init, eps, L, detect=True,
                           with_gradients=False,
                           divergence_cap=divergence_cap)
        rows.append(GlobalErrorRow(
            step_size=eps, n_steps=L,
            abs_error=abs(trace.total_delta_h),
            n_crossings=trace.n_crossings,
            divergent=trace.divergent))
    good = [r for r in rows if not r.divergent]
    if len(good) < 2:
        raise ValueError("fewer than two non-divergent trajectories")
    fit = ErrorOrderFit.fit([r.step_size for r in good],
                            [r.abs_error for r in good])
    return GlobalErrorStudy(travel_time=travel_time, rows=rows, fit=fit)


# ---------------------------------------------------------------------------
# crossing-time statistics


@dataclass
class CrossingTimeStats:
    """Distribution probe of the first-crossing offset within a step."""

    a_grid: np.ndarray
    window_fractions: np.ndarray   # P(eps_1/eps in ((1-a)/2, (1+a)/2))
    fractions: np.ndarray          # raw eps_1/eps of single-crossing steps
    n_single: int
    n_samples: int


def crossing_time_stats(potential: Potential,
                        sampler: Callable[[np.random.Generator], tuple],
                        eps: float, n_samples: int,
                        a_grid: Sequence[float],
                        seed: int = 0) -> CrossingTimeStats:
    """Sample starts, take one step each, and histogram the crossing offset.

    Only steps with exactly one crossing contribute. For each a in a_grid the
    reported fraction is the share of those steps whose crossing offset
    eps_1 / eps falls inside the centered window ((1-a)/2, (1+a)/2).
    """
    rng = np.random.default_rng(seed)
    fracs = []
    for _ in range(int(n_samples)):
        q, p = sampler(rng)
        state = PhasePoint(np.asarray(q, dtype=float),
                           np.asarray(p, dtype=float))
        _, rec = leapfrog_step(potential, state, eps, detect=True,
                               with_gradients=False, divergence_cap=np.inf)
        if len(rec.crossings) == 1:
            fracs.append(rec.crossings[0].time / eps)
    fracs = np.asarray(fracs)
    a_arr = np.asarray(list(a_grid), dtype=float)
    window = np.empty(len(a_arr))
    for i, a in enumerate(a_arr):
        lo = 0.5 * (1.0 - a)
        hi = 0.5 * (1.0 + a)
        window[i] = (np.mean((fracs > lo) & (fracs < hi))
                     if fracs.size else np.nan)
    return CrossingTimeStats(a_grid=a_arr, window_fractions=window,
                             fractions=fracs, n_single=int(fracs.size),
                             n_samples=int(n_samples))
