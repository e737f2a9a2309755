"""Numerical laboratory for leapfrog HMC on potentials with kinks.

The package centers on Bayesian feed-forward networks with piecewise-linear
activations, whose posterior energy is continuous but has gradient jumps
across the neuron activation surfaces. It provides an instrumented leapfrog
integrator that locates those surface crossings inside each step, the
first-order energy-error prediction built from the crossing geometry,
integrator sanity checks (reversibility, volume preservation), closed-form
tuning curves for the acceptance-optimal step size, one-dimensional kink
proxies with dimension-scaling experiments, and a seeded experiment harness
with CSV outputs.
"""

from .analysis import (CrossingTimeStats, ErrorOrderFit, GlobalErrorStudy,
                       LocalErrorStudy, crossing_time_stats,
                       global_error_order, local_error_order,
                       local_error_study, predict_local_error)
from .bnn import (ACTIVATIONS, BNNPotential, MLPArchitecture, PosteriorSpec,
                  RegressionDataset, activation_pattern, flatten, forward,
                  grad_potential, grad_potential_forced, potential,
                  preactivations, unflatten)
from .checks import reverse_check, volume_check
from .errors import (ConstructionError, DimensionMismatchError,
                     StencilCrossesKinkError, UnsupportedActivationError)
from .harness import (ExperimentManifest, derive_seed, generate_synthetic,
                      run_manifest)
from .leapfrog import (CrossingEvent, PhasePoint, StepRecord, TrajectoryTrace,
                       detect_crossings, hamiltonian, leapfrog_run,
                       leapfrog_step, trajectory)
from .potentials import (CallablePotential, DriftSurfaces, Potential,
                         QuadraticPotential, ZeroPotential)
from .proxy import (GaussianControl1D, LaplacePotential,
                    PiecewiseAffinePotential, ProductPotential, SigmaEstimate,
                    estimate_sigma, scaling_experiment)
from .sampler import (ChainResult, HMCConfig, accept_probability, hmc_chain,
                      mse, posterior_predict)
from .tuning import (EfficiencyCurve, acceptance_limit, efficiency_band,
                     efficiency_curve)

__version__ = "0.1.0"
