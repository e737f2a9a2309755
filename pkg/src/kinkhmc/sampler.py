"""Hamiltonian Monte Carlo chains built on the leapfrog integrator.

The proposal omits the final momentum negation: the kinetic energy is an even
function of p, so the negation cancels in the acceptance ratio and only
matters for bookkeeping of the reverse map.

Randomness contract, for reproducibility: one Generator seeded from
``config.seed`` drives everything. If no initial position is supplied, the
first draw is the potential's init draw. Every proposal then consumes, in
order, d standard normals for the momentum and exactly one uniform for the
accept decision (drawn whether or not the trajectory diverged). Reruns with
the same seed are bit-identical.
"""

import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .bnn import PosteriorSpec, forward
from .errors import DimensionMismatchError
from .leapfrog import leapfrog_run
from .potentials import Potential


def accept_probability(delta_h: float) -> float:
    """min(1, exp(-delta_h)); any non-finite energy error gives 0."""
    if not np.isfinite(delta_h):
        return 0.0
    if delta_h <= 0.0:
        return 1.0
    return float(np.exp(-delta_h))


@dataclass
class HMCConfig:
    """Chain settings. Give exactly one of n_steps or travel_time."""

    step_size: float
    n_samples: int
    n_steps: Optional[int] = None
    travel_time: Optional[float] = None
    burn_in: int = 0
    seed: int = 0
    divergence_cap: float = 1e6

    def __post_init__(self):
        if self.step_size <= 0:
            raise ValueError("step_size must be positive")
        if (self.n_steps is None) == (self.travel_time is None):
            raise ValueError("give exactly one of n_steps or travel_time")
        if self.n_steps is not None and self.n_steps < 1:
            raise ValueError("n_steps must be at least 1")
        if self.travel_time is not None and self.travel_time <= 0:
            raise ValueError("travel_time must be positive")
        if self.n_samples < 1:
            raise ValueError("n_samples must be at least 1")
        if self.burn_in < 0:
            raise ValueError("burn_in must be nonnegative")

    @property
    def resolved_n_steps(self) -> int:
        if self.n_steps is not None:
            return self.n_steps
        return max(1, int(round(self.travel_time / self.step_size)))


@dataclass
class ChainResult:
    """Chain output: retained samples plus per-proposal accounting."""

    samples: np.ndarray          # (n_samples, d), post burn-in states
    delta_h: np.ndarray          # (burn_in + n_samples,), +inf for divergent
    accepted: np.ndarray         # (burn_in + n_samples,) bool
    acceptance_rate: float       # accepted / (burn_in + n_samples)
    n_divergent: int
    config: HMCConfig
    n_steps: int
    duration_s: float = 0.0

    def summary_dict(self) -> dict:
        finite = self.delta_h[np.isfinite(self.delta_h)]
        return {
            "n_samples": int(self.samples.shape[0]),
            "dim": int(self.samples.shape[1]),
            "burn_in": int(self.config.burn_in),
            "step_size": float(self.config.step_size),
            "n_steps": int(self.n_steps),
            "seed": int(self.config.seed),
            "acceptance_rate": float(self.acceptance_rate),
            "n_divergent": int(self.n_divergent),
            "mean_abs_delta_h": (float(np.mean(np.abs(finite)))
                                 if finite.size else float("nan")),
            "max_abs_delta_h": (float(np.max(np.abs(finite)))
                                if finite.size else float("nan")),
            "duration_s": float(self.duration_s),
        }


def hmc_chain(potential: Potential, config: HMCConfig,
              init: Optional[np.ndarray] = None) -> ChainResult:
    """Run an HMC chain and keep the post-burn-in states.

    A rejected or divergent proposal repeats the previous state exactly (same
    floats). Divergent proposals record delta_h = +inf and always reject.
    """
    rng = np.random.default_rng(config.seed)
    d = potential.dim
    if init is not None:
        q = np.asarray(init, dtype=float).copy()
        if q.shape != (d,):
            raise DimensionMismatchError(
                f"init shape {q.shape}, expected ({d},)")
    else:
        q = np.asarray(potential.sample_position(rng), dtype=float)

    n_total = config.burn_in + config.n_samples
    n_steps = config.resolved_n_steps
    samples = np.empty((config.n_samples, d))
    delta_h = np.empty(n_total)
    accepted = np.zeros(n_total, dtype=bool)
    n_divergent = 0

    t0 = time.perf_counter()
    for it in range(n_total):
        p = rng.standard_normal(d)
        q_new, _, dh, divergent = leapfrog_run(
            potential, q, p, config.step_size, n_steps,
            divergence_cap=config.divergence_cap)
        u = rng.random()
        if divergent:
            n_divergent += 1
            delta_h[it] = np.inf
        else:
            delta_h[it] = dh
            if u < accept_probability(dh):
                q = q_new
                accepted[it] = True
        if it >= config.burn_in:
            samples[it - config.burn_in] = q
    duration = time.perf_counter() - t0

    return ChainResult(samples=samples, delta_h=delta_h, accepted=accepted,
                       acceptance_rate=float(accepted.sum()) / n_total,
                       n_divergent=n_divergent, config=config,
                       n_steps=n_steps, duration_s=duration)


def posterior_predict(spec: PosteriorSpec, samples: np.ndarray, x):
    """Predictive mean over parameter samples.

    Returns (mean, outputs) where outputs has shape (n_samples, n_x, d_out)
    and mean is its average over samples.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.ndim != 2 or samples.shape[1] != spec.arch.n_params:
        raise DimensionMismatchError(
            f"samples shape {samples.shape}, expected (m, {spec.arch.n_params})"
        )
    x = np.asarray(x, dtype=float)
    x2d = x[None, :] if x.ndim == 1 else x
    outputs = np.stack([forward(spec.arch, s, x2d) for s in samples])
    return outputs.mean(axis=0), outputs


def mse(a: np.ndarray, b: np.ndarray) -> float:
    """Mean squared error between two equal-shape arrays."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise DimensionMismatchError(f"shapes {a.shape} vs {b.shape}")
    return float(np.mean((a - b) ** 2))
