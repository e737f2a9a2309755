"""File formats: posterior specs (JSON), parameters (binary / CSV), datasets
(CSV), trajectory traces (CSV / JSON), chain summaries (JSON).

Floats written to CSV use repr(), the shortest string that round-trips the
exact double, so reruns with the same seeds produce byte-identical files.
"""

import csv
import json
import struct
from pathlib import Path
from typing import List, Union

import numpy as np

from .bnn import MLPArchitecture, PosteriorSpec, RegressionDataset
from .leapfrog import TrajectoryTrace
from .sampler import ChainResult

PathLike = Union[str, Path]

_PARAMS_MAGIC = b"KHQ1"


# ---------------------------------------------------------------------------
# posterior specs


def save_posterior_spec(spec: PosteriorSpec, path: PathLike) -> None:
    doc = {
        "layer_dims": list(spec.arch.layer_dims),
        "activation": spec.arch.activation,
        "zero_subderivative": spec.arch.zero_subderivative,
        "leaky_slope": spec.arch.leaky_slope,
        "prior_scale": spec.prior_scale,
        "noise_scale": spec.noise_scale,
        "x": spec.data.x.tolist(),
        "y": spec.data.y.tolist(),
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def load_posterior_spec(path: PathLike) -> PosteriorSpec:
    doc = json.loads(Path(path).read_text())
    arch = MLPArchitecture(
        layer_dims=tuple(int(d) for d in doc["layer_dims"]),
        activation=doc["activation"],
        zero_subderivative=float(doc.get("zero_subderivative", 0.0)),
        leaky_slope=float(doc.get("leaky_slope", 0.01)),
    )
    data = RegressionDataset(np.asarray(doc["x"], dtype=float),
                             np.asarray(doc["y"], dtype=float))
    return PosteriorSpec(arch=arch, data=data,
                         prior_scale=float(doc["prior_scale"]),
                         noise_scale=float(doc["noise_scale"]))


# ---------------------------------------------------------------------------
# parameter vectors

def save_params_binary(params: np.ndarray, path: PathLike) -> None:
    """Magic, little-endian uint64 length, then float64 payload."""
    arr = np.ascontiguousarray(params, dtype="<f8").ravel()
    with open(path, "wb") as fh:
        fh.write(_PARAMS_MAGIC)
        fh.write(struct.pack("<Q", arr.size))
        fh.write(arr.tobytes())


def load_params_binary(path: PathLike) -> np.ndarray:
    raw = Path(path).read_bytes()
    if raw[:4] != _PARAMS_MAGIC:
        raise ValueError(f"{path}: not a parameter file (bad magic)")
    (n,) = struct.unpack("<Q", raw[4:12])
    payload = raw[12:]
    if len(payload) != 8 * n:
        raise ValueError(
            f"{path}: header says {n} doubles, payload holds "
            f"{len(payload) // 8}"
        )
    return np.frombuffer(payload, dtype="<f8").astype(float)


def save_params_csv(params: np.ndarray, path: PathLike) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["value"])
        for v in np.asarray(params, dtype=float).ravel():
            writer.writerow([repr(float(v))])


def load_params_csv(path: PathLike) -> np.ndarray:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["value"]:
            raise ValueError(f"{path}: expected header ['value'], got {header}")
        return np.array([float(row[0]) for row in reader])


# ---------------------------------------------------------------------------
# datasets


def save_dataset_csv(data: RegressionDataset, path: PathLike) -> None:
    n, p = data.x.shape
    d = data.y.shape[1]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x_{j}" for j in range(p)]
                        + [f"y_{j}" for j in range(d)])
        for i in range(n):
            writer.writerow([repr(float(v)) for v in data.x[i]]
                            + [repr(float(v)) for v in data.y[i]])


def load_dataset_csv(path: PathLike) -> RegressionDataset:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        p = sum(1 for h in header if h.startswith("x_"))
        d = sum(1 for h in header if h.startswith("y_"))
        if p + d != len(header) or p == 0 or d == 0:
            raise ValueError(f"{path}: malformed dataset header {header}")
        xs: List[List[float]] = []
        ys: List[List[float]] = []
        for row in reader:
            xs.append([float(v) for v in row[:p]])
            ys.append([float(v) for v in row[p:]])
    return RegressionDataset(np.asarray(xs), np.asarray(ys))


# ---------------------------------------------------------------------------
# trajectory traces


def save_trace_csv(trace: TrajectoryTrace, path: PathLike) -> None:
    """One row per step: energies, error, crossing count, divergence flag."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "h_before", "h_after", "delta_h",
                         "n_crossings", "divergent"])
        for i, rec in enumerate(trace.records):
            writer.writerow([i, repr(rec.h0), repr(rec.h1),
                             repr(rec.delta_h), len(rec.crossings),
                             int(rec.divergent)])


def save_trace_json(trace: TrajectoryTrace, path: PathLike) -> None:
    """Full trace including per-crossing times and surface labels."""
    doc = {
        "step_size": trace.step_size,
        "n_steps": trace.n_steps,
        "divergent": trace.divergent,
        "total_delta_h": trace.total_delta_h,
        "steps": [
            {
                "h_before": rec.h0,
                "h_after": rec.h1,
                "delta_h": rec.delta_h,
                "divergent": rec.divergent,
                "crossings": [
                    {
                        "time": ev.time,
                        "surface_id": list(ev.surface_id),
                        "sign_before": ev.sign_before,
                        "sign_after": ev.sign_after,
                    }
                    for ev in rec.crossings
                ],
            }
            for rec in trace.records
        ],
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


# ---------------------------------------------------------------------------
# chains


def save_chain_summary(result: ChainResult, path: PathLike) -> None:
    Path(path).write_text(json.dumps(result.summary_dict(), indent=2) + "\n")


def save_chain_samples(result: ChainResult, path: PathLike) -> None:
    np.save(path, result.samples)
