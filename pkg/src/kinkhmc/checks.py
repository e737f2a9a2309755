"""Structural checks on the integrator: reversibility and volume preservation."""

from itertools import product

import numpy as np

from .errors import StencilCrossesKinkError
from .leapfrog import PhasePoint, detect_crossings, leapfrog_run
from .potentials import Potential


def reverse_check(potential: Potential, state: PhasePoint, eps: float,
                  n_steps: int) -> float:
    """Integrate forward, flip the momentum, integrate back, measure the gap.

    Returns |q_rec - q0| + |p_rec + p0| (euclidean norms). Exact reversibility
    would give zero; floating point leaves an accumulation of rounding noise.
    Divergent trajectories return inf.
    """
    q0, p0 = state.q, state.p
    q1, p1, _, div1 = leapfrog_run(potential, q0, p0, eps, n_steps,
                                   divergence_cap=np.inf)
    if div1:
        return np.inf
    q2, p2, _, div2 = leapfrog_run(potential, q1, -p1, eps, n_steps,
                                   divergence_cap=np.inf)
    if div2:
        return np.inf
    return float(np.linalg.norm(q2 - q0) + np.linalg.norm(p2 + p0))


def _single_step(potential, q, p, eps):
    g0 = potential.grad(q)
    p_half = p - (0.5 * eps) * g0
    q1 = q + eps * p_half
    p1 = p_half - (0.5 * eps) * potential.grad(q1)
    return q1, p1


def volume_check(potential: Potential, q: np.ndarray, p: np.ndarray,
                 eps: float, fd_step: float = 1e-5) -> float:
    """|det J - 1| for the Jacobian of one leapfrog step, by central differences.

    Every perturbed start used by the stencil must map without piercing a kink
    surface; otherwise the finite-difference Jacobian mixes two polynomial
    pieces and the determinant is meaningless, so a StencilCrossesKinkError is
    raised instead.
    """
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    d = q.shape[0]

    starts = [(q, p)]
    for k, s in product(range(d), (+1.0, -1.0)):
        dq = q.copy()
        dq[k] += s * fd_step
        starts.append((dq, p))
        dp = p.copy()
        dp[k] += s * fd_step
        starts.append((q, dp))
    for qs, ps in starts:
        p_half = ps - (0.5 * eps) * potential.grad(qs)
        if detect_crossings(potential, qs, p_half, eps, with_gradients=False):
            raise StencilCrossesKinkError(
                "a finite-difference stencil point crosses a kink surface; "
                "move the base point or shrink fd_step"
            )

    jac = np.empty((2 * d, 2 * d))
    for k in range(d):
        qp = q.copy(); qp[k] += fd_step
        qm = q.copy(); qm[k] -= fd_step
        fp_ = _single_step(potential, qp, p, eps)
        fm_ = _single_step(potential, qm, p, eps)
        jac[:d, k] = (fp_[0] - fm_[0]) / (2.0 * fd_step)
        jac[d:, k] = (fp_[1] - fm_[1]) / (2.0 * fd_step)

        pp = p.copy(); pp[k] += fd_step
        pm = p.copy(); pm[k] -= fd_step
        fp_ = _single_step(potential, q, pp, eps)
        fm_ = _single_step(potential, q, pm, eps)
        jac[:d, d + k] = (fp_[0] - fm_[0]) / (2.0 * fd_step)
        jac[d:, d + k] = (fp_[1] - fm_[1]) / (2.0 * fd_step)

    det = np.linalg.det(jac)
    return abs(det - 1.0)
