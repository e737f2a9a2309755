"""Leapfrog integration with per-step energy accounting and kink detection.

One step from (q0, p0) with step size eps:

    p_half = p0 - (eps/2) dU(q0)
    q1     = q0 + eps p_half
    p1     = p_half - (eps/2) dU(q1)

The drift from q0 to q1 is a straight segment; ``detect_crossings`` locates
the points where that segment pierces the potential's kink surfaces and
records the one-sided gradient jump at each piercing.
"""

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .potentials import Potential


@dataclass
class PhasePoint:
    """Position and momentum."""

    q: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        self.q = np.asarray(self.q, dtype=float)
        self.p = np.asarray(self.p, dtype=float)
        if self.q.shape != self.p.shape:
            raise ValueError(
                f"q and p shapes differ: {self.q.shape} vs {self.p.shape}"
            )

    def copy(self) -> "PhasePoint":
        return PhasePoint(self.q.copy(), self.p.copy())


@dataclass
class CrossingEvent:
    """One piercing of a kink surface by a drift segment.

    ``time`` is the offset into the step, in (0, step_size). ``sign_before``
    and ``sign_after`` are the signs of the surface function on either side of
    the piercing along the drift. Gradient fields are None when the detection
    was run in times-only mode.
    """

    time: float
    point: np.ndarray
    surface_id: tuple
    sign_before: int
    sign_after: int
    grad_before: Optional[np.ndarray] = None
    grad_after: Optional[np.ndarray] = None
    jump: Optional[np.ndarray] = None


@dataclass
class StepRecord:
    """Everything observed during one leapfrog step."""

    step_size: float
    start: PhasePoint
    p_half: np.ndarray
    end: PhasePoint
    h0: float
    h1: float
    delta_h: float
    crossings: List[CrossingEvent] = field(default_factory=list)
    divergent: bool = False


@dataclass
class TrajectoryTrace:
    """A sequence of instrumented steps from a common start."""

    step_size: float
    n_steps: int
    initial: PhasePoint
    records: List[StepRecord]
    final: PhasePoint
    divergent: bool

    @property
    def n_crossings(self) -> int:
        return sum(len(r.crossings) for r in self.records)

    @property
    def total_delta_h(self) -> float:
        if not self.records:
            return 0.0
        return self.records[-1].h1 - self.records[0].h0


def hamiltonian(potential: Potential, state: PhasePoint) -> float:
    """Total energy U(q) + |p|^2 / 2."""
    return potential.value(state.q) + 0.5 * float(state.p @ state.p)


# ---------------------------------------------------------------------------
# crossing detection

_SCAN_CELLS = 64
_BISECT_ITERS = 40  # cell width eps/64 shrinks below 1e-12 * eps


def detect_crossings(potential: Potential, q0: np.ndarray, p_half: np.ndarray,
                     eps: float, with_gradients: bool = True) -> List[CrossingEvent]:
    """Find where the drift segment q0 + t p_half, t in (0, eps), pierces kinks.

    Surfaces affine along the segment get closed-form roots; the rest are
    scanned on 64 subintervals and bisected to within 1e-12 * eps. Crossings
    are reported sorted by time, ties broken by the potential's canonical
    surface order. Strict sign changes only: a segment endpoint exactly on a
    surface, or a tangential touch that does not change sign within one scan
    cell, is not reported.
    """
    surfaces = potential.drift_surfaces(q0, p_half, eps)
    if surfaces is None:
        return []

    hits = []  # (time, ordinal, surface_id, sign_before, sign_after)

    v0 = np.asarray(surfaces.affine_start, dtype=float)
    v1 = np.asarray(surfaces.affine_end, dtype=float)
    if len(surfaces.affine_ids):
        for k in np.nonzero(v0 * v1 < 0.0)[0]:
            t = eps * v0[k] / (v0[k] - v1[k])
            if 0.0 < t < eps:
                hits.append((t, int(k), surfaces.affine_ids[k],
                             1 if v0[k] > 0 else -1,
                             1 if v1[k] > 0 else -1))

    if surfaces.general_ids:
        base = len(surfaces.affine_ids)
        ts = np.linspace(0.0, eps, _SCAN_CELLS + 1)
        vals = surfaces.general_eval(ts)
        change = vals[:, :-1] * vals[:, 1:] < 0.0
        rows, cells = np.nonzero(change)
        if len(rows):
            lo = ts[cells].copy()
            hi = ts[cells + 1].copy()
            flo = vals[rows, cells].copy()
            cols = np.arange(len(rows))
            for _ in range(_BISECT_ITERS):
                mid = 0.5 * (lo + hi)
                fmid = surfaces.general_eval(mid)[rows, cols]
                left = flo * fmid > 0.0
                lo = np.where(left, mid, lo)
                flo = np.where(left, fmid, flo)
                hi = np.where(left, hi, mid)
            t_root = 0.5 * (lo + hi)
            for i, r in enumerate(rows):
                sb = 1 if vals[r, cells[i]] > 0 else -1
                hits.append((float(t_root[i]), base + int(r),
                             surfaces.general_ids[r], sb, -sb))

    hits.sort(key=lambda h: (h[0], h[1]))

    events = []
    for t, _, sid, sb, sa in hits:
        z = q0 + t * p_half
        if with_gradients:
            gb, ga = potential.one_sided_gradients(sid, z, sb, sa)
            ev = CrossingEvent(time=t, point=z, surface_id=sid,
                               sign_before=sb, sign_after=sa,
                               grad_before=gb, grad_after=ga, jump=ga - gb)
        else:
            ev = CrossingEvent(time=t, point=z, surface_id=sid,
                               sign_before=sb, sign_after=sa)
        events.append(ev)
    return events


# ---------------------------------------------------------------------------
# stepping


def _finite(*arrays) -> bool:
    return all(np.isfinite(a).all() for a in arrays)


def _step_core(potential, q0, p0, g0, eps):
    p_half = p0 - (0.5 * eps) * g0
    q1 = q0 + eps * p_half
    g1 = potential.grad(q1)
    p1 = p_half - (0.5 * eps) * g1
    return p_half, q1, p1, g1


def leapfrog_step(potential: Potential, state: PhasePoint, eps: float,
                  detect: bool = True, with_gradients: bool = True,
                  divergence_cap: float = 1e6):
    """One instrumented leapfrog step.

    Returns (new_state, StepRecord). A non-finite gradient or state marks the
    record divergent and returns the starting state unchanged; an energy error
    beyond ``divergence_cap`` marks it divergent but still returns the mapped
    state.
    """
    new_state, rec, _ = _leapfrog_step_cached(
        potential, state, eps, detect=detect, with_gradients=with_gradients,
        divergence_cap=divergence_cap, grad0=None)
    return new_state, rec


def _leapfrog_step_cached(potential: Potential, state: PhasePoint, eps: float,
                          detect: bool, with_gradients: bool,
                          divergence_cap: float,
                          grad0: Optional[np.ndarray]):
    potential.check_dim(state.q)
    q0, p0 = state.q, state.p
    with np.errstate(over="ignore", invalid="ignore"):
        g0 = potential.grad(q0) if grad0 is None else grad0

        if not _finite(q0, p0, g0):
            rec = StepRecord(step_size=eps, start=state, p_half=p0.copy(),
                             end=state, h0=np.nan, h1=np.nan, delta_h=np.nan,
                             divergent=True)
            return state, rec, g0

        p_half, q1, p1, g1 = _step_core(potential, q0, p0, g0, eps)
        h0 = potential.value(q0) + 0.5 * float(p0 @ p0)

        if not _finite(q1, p1, g1):
            rec = StepRecord(step_size=eps, start=state, p_half=p_half,
                             end=state, h0=h0, h1=np.inf, delta_h=np.inf,
                             divergent=True)
            return state, rec, g1

        h1 = potential.value(q1) + 0.5 * float(p1 @ p1)
    delta_h = h1 - h0
    divergent = not np.isfinite(delta_h) or abs(delta_h) > divergence_cap

    crossings = []
    if detect and not divergent:
        crossings = detect_crossings(potential, q0, p_half, eps,
                                     with_gradients=with_gradients)

    new_state = PhasePoint(q1, p1)
    rec = StepRecord(step_size=eps, start=state, p_half=p_half,
                     end=new_state, h0=h0, h1=h1, delta_h=delta_h,
                     crossings=crossings, divergent=divergent)
    return new_state, rec, g1


def trajectory(potential: Potential, init: PhasePoint, eps: float,
               n_steps: int, detect: bool = True, with_gradients: bool = True,
               divergence_cap: float = 1e6) -> TrajectoryTrace:
    """Run ``n_steps`` instrumented steps, stopping at the first divergence."""
    state = init
    records: List[StepRecord] = []
    grad_cache = None
    divergent = False
    for _ in range(n_steps):
        state, rec, grad_cache = _leapfrog_step_cached(
            potential, state, eps, detect=detect,
            with_gradients=with_gradients, divergence_cap=divergence_cap,
            grad0=grad_cache)
        records.append(rec)
        if rec.divergent:
            divergent = True
            break
    return TrajectoryTrace(step_size=eps, n_steps=n_steps, initial=init,
                           records=records, final=state, divergent=divergent)


def leapfrog_run(potential: Potential, q: np.ndarray, p: np.ndarray,
                 eps: float, n_steps: int, divergence_cap: float = 1e6):
    """Lean trajectory for hot loops: no records, no crossing detection.

    Performs the identical floating-point update sequence as the instrumented
    path (two half kicks per step), checks gradient and state finiteness per
    step, and applies the divergence cap to the total energy error at the end.

    Returns (q1, p1, delta_h, divergent).
    """
    q = q.copy()
    p = p.copy()
    # Overflow along a diverging trajectory is expected and caught by the
    # finiteness checks, so the numpy warnings for it are muted here.
    with np.errstate(over="ignore", invalid="ignore"):
        g = potential.grad(q)
        if not (_finite(q, p, g)):
            return q, p, np.inf, True
        h0 = potential.value(q) + 0.5 * float(p @ p)
        half = 0.5 * eps
        for _ in range(n_steps):
            p -= half * g
            q += eps * p
            g = potential.grad(q)
            p -= half * g
            if not np.isfinite(g).all():
                return q, p, np.inf, True
        if not _finite(q, p):
            return q, p, np.inf, True
        h1 = potential.value(q) + 0.5 * float(p @ p)
    delta_h = h1 - h0
    divergent = not np.isfinite(delta_h) or abs(delta_h) > divergence_cap
    return q, p, delta_h, divergent
