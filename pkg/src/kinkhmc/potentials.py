"""Potential-energy interface used by the integrator.

A potential is a smooth-except-on-kink-surfaces function U(q) together with
enough structure for the integrator to find where a straight drift segment
pierces a kink surface and to query one-sided gradients there. Smooth
potentials simply report no surfaces.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DimensionMismatchError


@dataclass
class DriftSurfaces:
    """Candidate kink surfaces restricted to one drift segment q0 + t*p, t in [0, eps].

    Surfaces whose defining function is affine in t are described by their
    endpoint values (the root, if any, is then exact). Everything else goes
    through ``general_eval``, which evaluates the remaining surface functions
    at arbitrary segment times for sign-scan plus bisection.

    ``affine_ids`` and ``general_ids`` list surface identifiers in the
    potential's canonical enumeration order; that order breaks ties between
    simultaneous crossings.
    """

    affine_ids: list = field(default_factory=list)
    affine_start: np.ndarray = field(default_factory=lambda: np.empty(0))
    affine_end: np.ndarray = field(default_factory=lambda: np.empty(0))
    general_ids: list = field(default_factory=list)
    general_eval: Optional[Callable[[np.ndarray], np.ndarray]] = None


class Potential:
    """Base class for potential energies U(q) on R^dim."""

    dim: int

    def value(self, q: np.ndarray) -> float:
        raise NotImplementedError

    def grad(self, q: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def check_dim(self, q: np.ndarray) -> None:
        if q.shape != (self.dim,):
            raise DimensionMismatchError(
                f"expected shape ({self.dim},), got {q.shape}"
            )

    def drift_surfaces(self, q0: np.ndarray, p_half: np.ndarray,
                       eps: float) -> Optional[DriftSurfaces]:
        """Surfaces that might be pierced by this drift segment, or None if smooth."""
        return None

    def one_sided_gradients(self, surface_id, z: np.ndarray,
                            sign_before: int, sign_after: int):
        """Gradient limits (before, after) of U at a point z on the given surface."""
        raise NotImplementedError(
            f"{type(self).__name__} has no kink surfaces"
        )

    def surface_value(self, surface_id, q: np.ndarray) -> float:
        """Value of the surface's defining function at q (zero on the surface)."""
        raise NotImplementedError(
            f"{type(self).__name__} has no kink surfaces"
        )

    def sample_position(self, rng: np.random.Generator) -> np.ndarray:
        """Default chain initialization draw. Standard normal unless overridden."""
        return rng.standard_normal(self.dim)


class ZeroPotential(Potential):
    """U(q) = 0. Free-particle dynamics, useful as an exactness control."""

    def __init__(self, dim: int):
        self.dim = dim

    def value(self, q):
        self.check_dim(q)
        return 0.0

    def grad(self, q):
        self.check_dim(q)
        return np.zeros(self.dim)


class QuadraticPotential(Potential):
    """U(q) = 0.5 * stiffness * |q|^2, the harmonic oscillator."""

    def __init__(self, dim: int, stiffness: float = 1.0):
        self.dim = dim
        self.stiffness = float(stiffness)

    def value(self, q):
        self.check_dim(q)
        return 0.5 * self.stiffness * float(q @ q)

    def grad(self, q):
        self.check_dim(q)
        return self.stiffness * q


class CallablePotential(Potential):
    """Adapter wrapping plain value/grad callables as a smooth potential."""

    def __init__(self, dim: int, value_fn, grad_fn, sample_fn=None):
        self.dim = dim
        self._value = value_fn
        self._grad = grad_fn
        self._sample = sample_fn

    def value(self, q):
        return float(self._value(q))

    def grad(self, q):
        return np.asarray(self._grad(q), dtype=float)

    def sample_position(self, rng):
        if self._sample is None:
            return rng.standard_normal(self.dim)
        return np.asarray(self._sample(rng), dtype=float)
