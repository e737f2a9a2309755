"""One-dimensional piecewise-affine potentials and dimension-scaling probes.

These potentials are the minimal setting where activation kinks exist without
any network: V is continuous, affine between breakpoints, and its gradient
jumps at each breakpoint. A product of d independent copies gives the target
used to study how the step size must shrink with dimension.
"""

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .potentials import DriftSurfaces, Potential


class PiecewiseAffinePotential(Potential):
    """Continuous piecewise-affine V on the line.

    Args:
        breakpoints: strictly increasing kink locations b_1 < ... < b_k.
        slopes: k+1 slopes, one per piece, ordered left to right.
        value_at_zero: V(0), fixing the additive constant.
        kink_subgradient: the value reported for V' exactly at a breakpoint.
    """

    dim = 1

    def __init__(self, breakpoints: Sequence[float], slopes: Sequence[float],
                 value_at_zero: float = 0.0, kink_subgradient: float = 0.0):
        self.breakpoints = np.asarray(breakpoints, dtype=float)
        self.slopes = np.asarray(slopes, dtype=float)
        if self.breakpoints.ndim != 1 or self.slopes.ndim != 1:
            raise ValueError("breakpoints and slopes must be 1-D")
        if len(self.slopes) != len(self.breakpoints) + 1:
            raise ValueError("need exactly one more slope than breakpoints")
        if len(self.breakpoints) == 0:
            raise ValueError("need at least one breakpoint")
        if not np.all(np.diff(self.breakpoints) > 0):
            raise ValueError("breakpoints must be strictly increasing")
        if not (np.isfinite(self.breakpoints).all()
                and np.isfinite(self.slopes).all()):
            raise ValueError("non-finite breakpoints or slopes")
        self.kink_subgradient = float(kink_subgradient)

        # Intercepts per piece, anchored at V(0)=value_at_zero and propagated
        # by continuity at each breakpoint.
        k = len(self.breakpoints)
        c = np.empty(k + 1)
        j0 = int(np.searchsorted(self.breakpoints, 0.0, side="right"))
        c[j0] = float(value_at_zero)
        for j in range(j0, k):
            b = self.breakpoints[j]
            c[j + 1] = c[j] + (self.slopes[j] - self.slopes[j + 1]) * b
        for j in range(j0 - 1, -1, -1):
            b = self.breakpoints[j]
            c[j] = c[j + 1] + (self.slopes[j + 1] - self.slopes[j]) * b
        self.intercepts = c

    # -- vectorized componentwise forms (used by the product target) -------

    def value_array(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        j = np.searchsorted(self.breakpoints, x, side="right")
        return self.intercepts[j] + self.slopes[j] * x

    def grad_array(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        j = np.searchsorted(self.breakpoints, x, side="right")
        g = self.slopes[j]
        for b in self.breakpoints:
            g = np.where(x == b, self.kink_subgradient, g)
        return g

    def sample_iid(self, rng: np.random.Generator, size) -> np.ndarray:
        raise NotImplementedError(
            "no stationary sampler for a generic piecewise-affine potential"
        )

    # -- Potential interface ----------------------------------------------

    def value(self, q):
        self.check_dim(q)
        return float(self.value_array(q[0]))

    def grad(self, q):
        self.check_dim(q)
        return np.array([self.grad_array(q[0])], dtype=float)

    def drift_surfaces(self, q0, p_half, eps):
        q1 = q0 + eps * p_half
        return DriftSurfaces(
            affine_ids=list(range(len(self.breakpoints))),
            affine_start=q0[0] - self.breakpoints,
            affine_end=q1[0] - self.breakpoints,
        )

    def surface_value(self, surface_id, q):
        return float(q[0] - self.breakpoints[surface_id])

    def one_sided_gradients(self, surface_id, z, sign_before, sign_after):
        k = int(surface_id)

        def side_slope(s):
            return self.slopes[k] if s < 0 else self.slopes[k + 1]

        return (np.array([side_slope(sign_before)]),
                np.array([side_slope(sign_after)]))


class LaplacePotential(PiecewiseAffinePotential):
    """V(q) = |q|, the standard Laplace energy."""

    def __init__(self):
        super().__init__(breakpoints=[0.0], slopes=[-1.0, 1.0])

    def sample_iid(self, rng, size):
        """Stationary draw by inverse CDF: F^{-1}(u) with density exp(-|q|)/2."""
        u = rng.random(size)
        return np.where(u < 0.5, np.log(2.0 * u), -np.log(2.0 * (1.0 - u)))

    def sample_position(self, rng):
        return self.sample_iid(rng, 1)


class GaussianControl1D(Potential):
    """V(q) = q^2 / 2, the smooth control for the energy-error moments."""

    dim = 1

    def value_array(self, x):
        x = np.asarray(x, dtype=float)
        return 0.5 * x * x

    def grad_array(self, x):
        return np.asarray(x, dtype=float)

    def sample_iid(self, rng, size):
        return rng.standard_normal(size)

    def value(self, q):
        self.check_dim(q)
        return 0.5 * float(q @ q)

    def grad(self, q):
        self.check_dim(q)
        return q.copy()

    def sample_position(self, rng):
        return rng.standard_normal(1)


class ProductPotential(Potential):
    """d independent copies of a 1-D component: U(q) = sum_i V(q_i)."""

    def __init__(self, component, dim: int):
        self.component = component
        self.dim = int(dim)

    def value(self, q):
        self.check_dim(q)
        return float(np.sum(self.component.value_array(q)))

    def grad(self, q):
        self.check_dim(q)
        return np.asarray(self.component.grad_array(q), dtype=float)

    def sample_position(self, rng):
        return self.component.sample_iid(rng, self.dim)

    def drift_surfaces(self, q0, p_half, eps):
        bks = getattr(self.component, "breakpoints", None)
        if bks is None:
            return None
        q1 = q0 + eps * p_half
        ids = [(i, k) for i in range(self.dim) for k in range(len(bks))]
        v0 = (q0[:, None] - bks[None, :]).ravel()
        v1 = (q1[:, None] - bks[None, :]).ravel()
        return DriftSurfaces(affine_ids=ids, affine_start=v0, affine_end=v1)

    def surface_value(self, surface_id, q):
        i, k = surface_id
        return float(q[i] - self.component.breakpoints[k])

    def one_sided_gradients(self, surface_id, z, sign_before, sign_after):
        i, k = surface_id
        gb, ga = self.component.one_sided_gradients(k, z[i:i + 1],
                                                    sign_before, sign_after)
        base = self.grad(z)
        before = base.copy()
        before[i] = gb[0]
        after = base.copy()
        after[i] = ga[0]
        return before, after


# ---------------------------------------------------------------------------
# ensemble trajectories and the two scaling probes


def _ensemble_delta_h(component, Q, P, eps, n_steps):
    """Energy error of a full trajectory for each row of (Q, P).

    Componentwise potentials make the leapfrog map separable, so a batch of
    proposals is just elementwise array arithmetic.
    """
    val = component.value_array
    grd = component.grad_array
    axis = tuple(range(1, Q.ndim))
    h0 = val(Q).sum(axis=axis) + 0.5 * (P * P).sum(axis=axis)
    q = Q.copy()
    p = P.copy()
    g = grd(q)
    half = 0.5 * eps
    for _ in range(n_steps):
        p -= half * g
        q += eps * p
        g = grd(q)
        p -= half * g
    h1 = val(q).sum(axis=axis) + 0.5 * (p * p).sum(axis=axis)
    return h1 - h0


@dataclass
class SigmaEstimate:
    """Empirical moments of the per-dimension trajectory energy error."""

    sigma_hat: float       # E[Delta^2] / eps^2
    mu_hat: float          # E[Delta] / eps^2
    step_size: float
    n_steps: int
    travel_time: float
    n_samples: int

    @property
    def ratio(self) -> float:
        """mu_hat / sigma_hat, which should approach 1/2 in stationarity."""
        return self.mu_hat / self.sigma_hat


def estimate_sigma(component, eps: float, n_samples: int,
                   travel_time: float = 1.0, seed: int = 0) -> SigmaEstimate:
    """Estimate the energy-error variance constant of a 1-D component.

    Draws stationary starts and fresh momenta, runs full trajectories of
    L = round(travel_time / eps) steps, and returns the scaled first and
    second moments of Delta = H(end) - H(start). For a kinked component both
    E[Delta^2]/eps^2 and E[Delta]/eps^2 stabilize as eps shrinks; for a smooth
    component they vanish (the error is then O(eps^2) per trajectory).
    """
    rng = np.random.default_rng(seed)
    n_steps = max(1, int(round(travel_time / eps)))
    Q = component.sample_iid(rng, (n_samples, 1))
    P = rng.standard_normal((n_samples, 1))
    delta = _ensemble_delta_h(component, Q, P, eps, n_steps)
    return SigmaEstimate(
        sigma_hat=float(np.mean(delta * delta)) / eps**2,
        mu_hat=float(np.mean(delta)) / eps**2,
        step_size=eps,
        n_steps=n_steps,
        travel_time=travel_time,
        n_samples=n_samples,
    )


@dataclass
class ScalingCell:
    dim: int
    step_size: float
    n_steps: int
    acceptance: float


@dataclass
class ScalingResult:
    power: float
    l_const: float
    travel_time: float
    n_proposals: int
    cells: list

    def acceptances(self) -> np.ndarray:
        return np.array([c.acceptance for c in self.cells])


def scaling_experiment(component, l_const: float, dims: Sequence[int],
                       n_proposals: int = 1500, travel_time: float = 1.0,
                       power: float = -0.5, seed: int = 0) -> ScalingResult:
    """Mean Metropolis acceptance of full proposals as dimension grows.

    Step size follows eps = l * d**power; trajectories have
    L = round(travel_time / eps) steps from stationary product starts. The
    recorded acceptance is the average of min(1, exp(-Delta H)) over
    proposals (the expected acceptance, a lower-variance version of coin
    flipping); divergent proposals count as zero.
    """
    cells = []
    for d in dims:
        rng = np.random.default_rng(seed + int(d))
        eps = l_const * float(d) ** power
        n_steps = max(1, int(round(travel_time / eps)))
        Q = component.sample_iid(rng, (n_proposals, int(d)))
        P = rng.standard_normal((n_proposals, int(d)))
        dh = _ensemble_delta_h(component, Q, P, eps, n_steps)
        with np.errstate(over="ignore"):
            acc = np.where(dh <= 0.0, 1.0, np.exp(-dh))
        acc = np.where(np.isfinite(dh), acc, 0.0)
        cells.append(ScalingCell(dim=int(d), step_size=eps,
                                 n_steps=n_steps,
                                 acceptance=float(np.mean(acc))))
    return ScalingResult(power=power, l_const=l_const,
                         travel_time=travel_time,
                         n_proposals=n_proposals, cells=cells)
