"""Experiment orchestration: manifests, seeded cell grids, CSV emission.

Seeding contract
----------------
Every random stream is derived from the manifest's master seed with a stable
hash: ``derive_seed(master, *parts)`` is the little-endian uint64 read of
``blake2b(repr((master,) + parts), digest_size=8)``. The training set uses
parts ``("data",)``, the held-out test set ``("test",)``, the chain for
cell ``i``, repeat ``r`` uses parts ``(i, r)``, and the optional descent
warm start for that chain uses ``("init", i, r)``. Re-running a manifest
therefore reproduces every result CSV byte for byte; wall-clock timings go
to a separate ``*_timings.csv`` sidecar so they never perturb the results
file.
"""

import csv
import hashlib
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .analysis import (LocalErrorStudy, crossing_time_stats,
                       global_error_order, local_error_study)
from .bnn import BNNPotential, MLPArchitecture, PosteriorSpec, RegressionDataset
from .leapfrog import PhasePoint
from .proxy import (GaussianControl1D, LaplacePotential, estimate_sigma,
                    scaling_experiment)
from .sampler import HMCConfig, hmc_chain, mse, posterior_predict
from .tuning import efficiency_curve

RESULT_COLUMNS = ["activation", "widths", "d", "step_size", "n_steps",
                  "travel_time", "repeat", "seed", "acceptance_rate",
                  "efficiency", "n_divergent", "mean_abs_delta_h",
                  "test_mse", "error"]

MANIFEST_KINDS = ("grid", "efficiency-sweep", "dim-sweep")


def derive_seed(master_seed: int, *parts) -> int:
    """Stable 64-bit stream seed from the master seed and a part tuple."""
    payload = repr((int(master_seed),) + tuple(parts)).encode()
    digest = hashlib.blake2b(payload, digest_size=8).digest()
    return int.from_bytes(digest, "little")


def generate_synthetic(n: int, seed: int) -> RegressionDataset:
    """n noisy cosine observations: x ~ U(0,4), y ~ N(cos 2x, 0.1^2)."""
    if n < 1:
        raise ValueError("need n >= 1")
    rng = np.random.default_rng(seed)
    x = rng.uniform(0.0, 4.0, (n, 1))
    y = np.cos(2.0 * x) + 0.1 * rng.standard_normal((n, 1))
    return RegressionDataset(x, y)


# ---------------------------------------------------------------------------
# manifests


@dataclass(frozen=True)
class ExperimentManifest:
    """Declarative description of a chain-grid experiment.

    ``architectures`` lists hidden-layer width tuples; input and output are
    always one unit wide. For kind "efficiency-sweep" the number of steps per
    cell is round(travel_time / step_size) instead of the n_steps list.

    With ``warm_start_iters`` > 0 each chain starts from an L-BFGS descent
    (at most that many iterations, from a small Gaussian draw) instead of a
    prior draw, so acceptance statistics reflect the equilibrated posterior
    rather than the transient from a far-out initial point.
    """

    kind: str = "grid"
    activations: Tuple[str, ...] = ("sigmoid", "relu")
    architectures: Tuple[Tuple[int, ...], ...] = ((50,),)
    step_sizes: Tuple[float, ...] = (0.0005, 0.001, 0.0015, 0.002, 0.0025)
    n_steps: Tuple[int, ...] = (200, 400, 600, 800, 1000)
    travel_time: Optional[float] = None
    n_train: int = 100
    n_test: int = 200
    prior_scale: float = 1.0
    noise_scale: float = 0.1
    warm_start_iters: int = 0
    n_samples: int = 300
    burn_in: int = 50
    repeats: int = 3
    master_seed: int = 1
    out_prefix: str = "grid"

    def __post_init__(self):
        object.__setattr__(self, "activations", tuple(self.activations))
        object.__setattr__(self, "architectures",
                           tuple(tuple(int(w) for w in a)
                                 for a in self.architectures))
        object.__setattr__(self, "step_sizes",
                           tuple(float(e) for e in self.step_sizes))
        object.__setattr__(self, "n_steps",
                           tuple(int(L) for L in self.n_steps))
        if self.kind not in MANIFEST_KINDS:
            raise ValueError(f"unknown experiment kind {self.kind!r}")
        if self.kind == "efficiency-sweep" and self.travel_time is None:
            raise ValueError("efficiency-sweep needs a travel_time")
        if self.repeats < 1:
            raise ValueError("repeats must be >= 1")
        if self.warm_start_iters < 0:
            raise ValueError("warm_start_iters must be >= 0")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "activations": list(self.activations),
            "architectures": [list(a) for a in self.architectures],
            "step_sizes": list(self.step_sizes),
            "n_steps": list(self.n_steps),
            "travel_time": self.travel_time,
            "n_train": self.n_train,
            "n_test": self.n_test,
            "prior_scale": self.prior_scale,
            "noise_scale": self.noise_scale,
            "warm_start_iters": self.warm_start_iters,
            "n_samples": self.n_samples,
            "burn_in": self.burn_in,
            "repeats": self.repeats,
            "master_seed": self.master_seed,
            "out_prefix": self.out_prefix,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentManifest":
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown manifest keys: {sorted(unknown)}")
        return cls(**doc)

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path) -> "ExperimentManifest":
        return cls.from_dict(json.loads(Path(path).read_text()))


def default_grid_manifest(**overrides) -> ExperimentManifest:
    # noise_scale 0.15 keeps the ReLU divergence onset inside the step-size
    # grid (decay visible at eps=0.0015) without drowning every cell in
    # divergences the way 0.1 does on this exact-likelihood posterior.
    base = replace(ExperimentManifest(), noise_scale=0.15)
    return replace(base, **overrides)


def default_efficiency_manifest(**overrides) -> ExperimentManifest:
    # Calibration notes. travel_time 2.0: long enough that accumulated energy
    # error, not the integrator stability cliff, sets each efficiency
    # optimum, which parks the optima at moderate acceptance. The 0.001 cell
    # spacing is deliberate: the relu-family acceptance falls off a cliff
    # within a factor ~2 of step size, and a finer grid puts a cell right on
    # the plateau shoulder (acceptance ~0.85) that ties with the true
    # optimum. Chains are warm started because a prior draw needs most of
    # the sampling window just to reach the posterior bulk at this noise
    # scale.
    base = ExperimentManifest(
        kind="efficiency-sweep",
        activations=("sigmoid", "relu", "leaky_relu"),
        step_sizes=(0.0005, 0.0015, 0.0025, 0.0035, 0.0045, 0.0055, 0.0065),
        n_steps=(),
        travel_time=2.0,
        noise_scale=0.15,
        warm_start_iters=500,
        out_prefix="efficiency",
    )
    return replace(base, **overrides)


def default_dim_manifest(**overrides) -> ExperimentManifest:
    base = ExperimentManifest(
        kind="dim-sweep",
        architectures=((10,), (50,), (100,), (200,), (400,),
                       (20,), (20, 20), (20, 20, 20), (20, 20, 20, 20)),
        step_sizes=(0.001,),
        n_steps=(200,),
        out_prefix="dim",
    )
    return replace(base, **overrides)


# ---------------------------------------------------------------------------
# cells


@dataclass(frozen=True)
class Cell:
    index: int
    activation: str
    hidden: Tuple[int, ...]
    step_size: float
    n_steps: int

    @property
    def layer_dims(self) -> Tuple[int, ...]:
        return (1,) + self.hidden + (1,)

    @property
    def widths_label(self) -> str:
        return "x".join(str(w) for w in self.layer_dims)


def list_cells(manifest: ExperimentManifest) -> List[Cell]:
    """Deterministic cell enumeration; the position is the cell index."""
    if manifest.kind == "efficiency-sweep":
        pairs = [(eps, max(1, round(manifest.travel_time / eps)))
                 for eps in manifest.step_sizes]
    else:
        pairs = [(eps, L) for eps in manifest.step_sizes
                 for L in manifest.n_steps]
    cells = []
    for act in manifest.activations:
        for hidden in manifest.architectures:
            for eps, L in pairs:
                cells.append(Cell(index=len(cells), activation=act,
                                  hidden=hidden, step_size=eps, n_steps=L))
    return cells


def _run_cell(job: dict) -> dict:
    """One chain for one (cell, repeat). Module-level so it pickles."""
    cell: Cell = job["cell"]
    row = {
        "activation": cell.activation,
        "widths": cell.widths_label,
        "d": "",
        "step_size": repr(cell.step_size),
        "n_steps": str(cell.n_steps),
        "travel_time": repr(cell.step_size * cell.n_steps),
        "repeat": str(job["repeat"]),
        "seed": str(job["seed"]),
        "acceptance_rate": "",
        "efficiency": "",
        "n_divergent": "",
        "mean_abs_delta_h": "",
        "test_mse": "",
        "error": "",
        "_index": cell.index,
        "_duration": 0.0,
    }
    try:
        arch = MLPArchitecture(cell.layer_dims, activation=cell.activation)
        row["d"] = str(arch.n_params)
        spec = PosteriorSpec(
            arch=arch,
            data=RegressionDataset(job["train_x"], job["train_y"]),
            prior_scale=job["prior_scale"],
            noise_scale=job["noise_scale"],
        )
        potential = BNNPotential(spec)
        config = HMCConfig(step_size=cell.step_size,
                           n_samples=job["n_samples"],
                           n_steps=cell.n_steps,
                           burn_in=job["burn_in"],
                           seed=job["seed"])
        init = None
        if job["warm_start_iters"]:
            rng0 = np.random.default_rng(job["init_seed"])
            init = warm_start(potential, 0.6 * rng0.standard_normal(arch.n_params),
                              job["warm_start_iters"])
        result = hmc_chain(potential, config, init=init)
        pred_mean, _ = posterior_predict(spec, result.samples, job["test_x"])
        finite = result.delta_h[np.isfinite(result.delta_h)]
        row["acceptance_rate"] = repr(result.acceptance_rate)
        row["efficiency"] = repr(cell.step_size * result.acceptance_rate)
        row["n_divergent"] = str(result.n_divergent)
        row["mean_abs_delta_h"] = (repr(float(np.mean(np.abs(finite))))
                                   if finite.size else "")
        row["test_mse"] = repr(mse(pred_mean, job["test_y"]))
        row["_duration"] = result.duration_s
    except Exception as exc:  # per-cell failures land in the row
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def run_manifest(manifest: ExperimentManifest, out_dir,
                 workers: int = 1) -> Tuple[Path, int]:
    """Run every cell x repeat, write results + timings CSVs.

    Returns (results path, number of crashed cells). Chain divergences are
    not crashes; only raised exceptions count.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    train = generate_synthetic(manifest.n_train,
                               derive_seed(manifest.master_seed, "data"))
    test = generate_synthetic(manifest.n_test,
                              derive_seed(manifest.master_seed, "test"))
    jobs = []
    for cell in list_cells(manifest):
        for rep in range(manifest.repeats):
            jobs.append({
                "cell": cell,
                "repeat": rep,
                "seed": derive_seed(manifest.master_seed, cell.index, rep),
                "init_seed": derive_seed(manifest.master_seed, "init",
                                         cell.index, rep),
                "train_x": train.x, "train_y": train.y,
                "test_x": test.x, "test_y": test.y,
                "prior_scale": manifest.prior_scale,
                "noise_scale": manifest.noise_scale,
                "warm_start_iters": manifest.warm_start_iters,
                "n_samples": manifest.n_samples,
                "burn_in": manifest.burn_in,
            })

    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_run_cell, jobs, chunksize=1))
    else:
        rows = [_run_cell(job) for job in jobs]
    rows.sort(key=lambda r: (r["_index"], int(r["repeat"])))

    results_path = out_dir / f"{manifest.out_prefix}_results.csv"
    with open(results_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RESULT_COLUMNS)
        for row in rows:
            writer.writerow([row[c] for c in RESULT_COLUMNS])

    timings_path = out_dir / f"{manifest.out_prefix}_timings.csv"
    with open(timings_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["cell_index", "repeat", "duration_s"])
        for row in rows:
            writer.writerow([row["_index"], row["repeat"],
                             f"{row['_duration']:.3f}"])

    n_failed = sum(1 for row in rows if row["error"])
    return results_path, n_failed


# ---------------------------------------------------------------------------
# energy-error demonstration problems
#
# Small posteriors picked so each asymptotic regime is clean over the pinned
# step-size grids: smooth curvature small enough that the cubic term stays
# resolvable, kink jumps strong enough that the linear term dominates.

LOCAL_EPS_GRID = tuple(1e-4 * 2**k for k in range(8))
GLOBAL_STEP_GRID = tuple(8 * 2**k for k in range(8))
GLOBAL_TRAVEL_TIME = 0.1


def gradient_descent(potential, q: np.ndarray, n_steps: int,
                     learning_rate: float) -> np.ndarray:
    """Plain full-gradient descent; used to park anchors near a mode."""
    q = np.asarray(q, dtype=float).copy()
    for _ in range(n_steps):
        q -= learning_rate * potential.grad(q)
    return q


def warm_start(potential, q: np.ndarray, max_iters: int) -> np.ndarray:
    """L-BFGS descent toward a mode, for initializing stiff-posterior chains.

    Deterministic given the starting point. The line search copes with the
    wide curvature range of small-noise posteriors where any fixed-rate
    descent either stalls or blows up.
    """
    from scipy.optimize import minimize

    def fun(q):
        return potential.value(q), potential.grad(q)

    with np.errstate(over="ignore", invalid="ignore"):
        res = minimize(fun, np.asarray(q, dtype=float), jac=True,
                       method="L-BFGS-B", options={"maxiter": int(max_iters)})
    return np.asarray(res.x, dtype=float)


def crossing_order_problem(seed: int = 3):
    """Tiny one-observation ReLU posterior plus an anchor and drift.

    The anchor is a uniform draw in [-1,1]^d and the drift a standard normal;
    with a single data point the first-layer kink surfaces are sparse, so the
    targeted crossing dominates the energy error over the whole local grid.
    """
    rng = np.random.default_rng(seed)
    x = rng.uniform(0.5, 1.5, (1, 1))
    y = rng.uniform(1.5, 2.5, (1, 1))
    arch = MLPArchitecture((1, 4, 1), activation="relu")
    spec = PosteriorSpec(arch=arch, data=RegressionDataset(x, y),
                         prior_scale=1.0, noise_scale=0.3)
    q0 = rng.uniform(-1.0, 1.0, arch.n_params)
    p0 = rng.standard_normal(arch.n_params)
    return BNNPotential(spec), PhasePoint(q0, p0)


def smooth_order_problem(seed: int = 11, descent_steps: int = 2000,
                         learning_rate: float = 3e-3):
    """Sigmoid posterior with a near-mode anchor for the cubic-order fit."""
    rng = np.random.default_rng(seed)
    x = rng.uniform(0.0, 4.0, (10, 1))
    y = np.cos(2.0 * x) + 0.1 * rng.standard_normal((10, 1))
    arch = MLPArchitecture((1, 8, 1), activation="sigmoid")
    spec = PosteriorSpec(arch=arch, data=RegressionDataset(x, y),
                         prior_scale=1.0, noise_scale=0.5)
    potential = BNNPotential(spec)
    q0 = gradient_descent(potential, 0.6 * rng.standard_normal(arch.n_params),
                          descent_steps, learning_rate)
    p0 = rng.standard_normal(arch.n_params)
    return potential, PhasePoint(q0, p0)


def global_order_problem(activation: str, seed: int = 5,
                         descent_steps: int = 1500,
                         learning_rate: float = 2e-3):
    """Medium posterior for whole-trajectory error fits at fixed travel time."""
    rng = np.random.default_rng(seed)
    x = rng.uniform(0.0, 4.0, (20, 1))
    y = np.cos(2.0 * x) + 0.1 * rng.standard_normal((20, 1))
    arch = MLPArchitecture((1, 16, 1), activation=activation)
    spec = PosteriorSpec(arch=arch, data=RegressionDataset(x, y),
                         prior_scale=1.0, noise_scale=0.4)
    potential = BNNPotential(spec)
    rng2 = np.random.default_rng(seed + 1000)
    q0 = gradient_descent(potential,
                          0.6 * rng2.standard_normal(arch.n_params),
                          descent_steps, learning_rate)
    p0 = rng2.standard_normal(arch.n_params)
    return potential, PhasePoint(q0, p0)


def run_error_order(out_dir, crossing_seed: int = 3, smooth_seed: int = 11,
                    global_seed: int = 5) -> dict:
    """All four demonstration fits; writes one CSV per study plus a summary."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    studies = {}
    pot, anchor = smooth_order_problem(smooth_seed)
    studies["local_smooth"] = local_error_study(pot, anchor, LOCAL_EPS_GRID,
                                                regime="smooth")
    pot, anchor = crossing_order_problem(crossing_seed)
    studies["local_crossing"] = local_error_study(pot, anchor, LOCAL_EPS_GRID,
                                                  regime="crossing")
    for act in ("sigmoid", "relu"):
        pot, init = global_order_problem(act, global_seed)
        studies[f"global_{act}"] = global_error_order(
            pot, init, GLOBAL_TRAVEL_TIME, GLOBAL_STEP_GRID)

    summary = {}
    for name, study in studies.items():
        path = out_dir / f"error_order_{name}.csv"
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            if isinstance(study, LocalErrorStudy):
                writer.writerow(["step_size", "measured", "predicted",
                                 "n_crossings"])
                for i, eps in enumerate(study.epsilons):
                    writer.writerow([repr(float(eps)),
                                     repr(float(study.measured[i])),
                                     repr(float(study.predicted[i])),
                                     len(study.records[i].crossings)])
                summary[name] = {
                    "slope": study.measured_fit.slope,
                    "r_squared": study.measured_fit.r_squared,
                    "residual_slope": (study.residual_fit.slope
                                       if study.residual_fit else None),
                }
            else:
                writer.writerow(["step_size", "n_steps", "abs_error",
                                 "n_crossings", "divergent"])
                for r in study.rows:
                    writer.writerow([repr(r.step_size), r.n_steps,
                                     repr(r.abs_error), r.n_crossings,
                                     int(r.divergent)])
                summary[name] = {
                    "slope": study.fit.slope,
                    "r_squared": study.fit.r_squared,
                    "n_excluded": study.n_excluded,
                }
    (out_dir / "error_order_summary.json").write_text(
        json.dumps(summary, indent=2) + "\n")
    return studies


# ---------------------------------------------------------------------------
# proxy scaling, tuning curves, crossing stats


def run_proxy_scaling(out_dir, l_const: float = 1.5,
                      dims: Sequence[int] = (16, 64, 256, 1024),
                      n_proposals: int = 1500, seed: int = 0) -> dict:
    """Dimension scaling on the double-exponential product target.

    Emits one CSV row per (component, dimension) with the step-size powers
    -1/2 (plateau expected) and -1/4 control (decay expected), plus a JSON
    with the measured energy-error scale and the predicted plateau level.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    laplace = LaplacePotential()
    control = GaussianControl1D()

    runs = [
        ("laplace", laplace, -0.5),
        ("laplace_control", laplace, -0.25),
        ("gaussian", control, -0.5),
    ]
    rows = []
    for name, component, power in runs:
        result = scaling_experiment(component, l_const, dims,
                                    n_proposals=n_proposals, power=power,
                                    seed=seed)
        for cell in result.cells:
            rows.append((name, cell.dim, power, cell.step_size, cell.n_steps,
                         cell.acceptance))

    path = out_dir / "scaling_results.csv"
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["component", "dim", "power", "step_size", "n_steps",
                        "expected_acceptance"])
        for name, dim, power, eps, L, acc in rows:
            writer.writerow([name, dim, repr(power), repr(eps), L, repr(acc)])

    # eps here only needs to be small on the kink-density scale; the mean
    # estimate needs many proposals because its noise grows like 1/eps^2
    sigma = estimate_sigma(laplace, eps=0.1, n_samples=200000, seed=seed)
    from scipy.special import ndtr
    predicted_plateau = float(2.0 * ndtr(-0.5 * l_const
                                         * np.sqrt(sigma.sigma_hat)))
    meta = {
        "l_const": l_const,
        "sigma_hat": sigma.sigma_hat,
        "mu_hat": sigma.mu_hat,
        "predicted_plateau": predicted_plateau,
    }
    (out_dir / "scaling_meta.json").write_text(json.dumps(meta, indent=2)
                                               + "\n")
    return {"rows": rows, "meta": meta, "path": path}


def run_tuning_curves(out_dir, sigmas: Sequence[float] = (1.0,),
                      n_grid: int = 512) -> Path:
    """Acceptance and efficiency curves for both error orders."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "tuning_curves.csv"
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["order", "sigma", "l", "acceptance", "efficiency",
                         "l_opt", "a_opt"])
        for order in (1, 2):
            for sigma in sigmas:
                curve = efficiency_curve(order, sigma=sigma, n_grid=n_grid)
                for i in range(len(curve.l_grid)):
                    writer.writerow([order, repr(float(sigma)),
                                     repr(float(curve.l_grid[i])),
                                     repr(float(curve.acceptance[i])),
                                     repr(float(curve.efficiency[i])),
                                     repr(curve.l_opt), repr(curve.a_opt)])
    return path


def laplace_uniform_sampler(half_width: float = 2.0):
    """Uniform positions in [-w, w], standard normal momenta."""
    def sample(rng: np.random.Generator):
        return (rng.uniform(-half_width, half_width, 1),
                rng.standard_normal(1))
    return sample


def run_crossing_stats(out_dir, eps: float = 0.1, n_samples: int = 20000,
                       a_grid: Sequence[float] = tuple(np.linspace(0.1, 0.9, 9)),
                       seed: int = 0):
    """Window-fraction probe of the crossing offset on the 1-D kink target."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stats = crossing_time_stats(LaplacePotential(), laplace_uniform_sampler(),
                                eps, n_samples, a_grid, seed=seed)
    path = out_dir / "crossing_stats.csv"
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["a", "window_fraction"])
        for a, frac in zip(stats.a_grid, stats.window_fractions):
            writer.writerow([repr(float(a)), repr(float(frac))])
    meta = {"eps": eps, "n_samples": stats.n_samples,
            "n_single": stats.n_single}
    (out_dir / "crossing_stats_meta.json").write_text(
        json.dumps(meta, indent=2) + "\n")
    return stats
