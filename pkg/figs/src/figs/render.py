"""Renderers for the experiment-CSV figure kinds.

Each renderer is a pure function of the CSV contents; re-rendering the same
file with the same library versions reproduces the image byte for byte
(best effort; matplotlib makes no hard promise). Numeric series that end up
in the plot are also returned in ``RenderResult.details`` so tests can check
them without decoding images.
"""

from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402

from .spec import FigureSpec, SchemaError  # noqa: E402

ACCEPTANCE_GRID_POINTS = 200


@dataclass
class RenderResult:
    path: Path
    details: dict


def _load(spec: FigureSpec, required) -> pd.DataFrame:
    path = Path(spec.csv)
    if not path.exists():
        raise FileNotFoundError(f"input CSV not found: {path}")
    df = pd.read_csv(path)
    for col in required:
        if col not in df.columns:
            raise SchemaError(f"missing column {col!r} in {path}")
    if "error" in df.columns:
        df = df[df["error"].isna() | (df["error"] == "")]
    numeric = [c for c in required if c not in (spec.series, "widths")]
    for col in numeric:
        df = df.assign(**{col: pd.to_numeric(df[col], errors="coerce")})
    return df.dropna(subset=numeric)


def _sem(values: np.ndarray) -> float:
    if values.size < 2:
        return 0.0
    return float(np.std(values, ddof=1) / np.sqrt(values.size))


def _finish(fig, ax, spec: FigureSpec, xlabel: str, ylabel: str):
    ax.set_xlabel(spec.xlabel or xlabel)
    ax.set_ylabel(spec.ylabel or ylabel)
    if spec.title:
        ax.set_title(spec.title)
    ax.grid(True, alpha=0.3)
    handles, _ = ax.get_legend_handles_labels()
    if handles:
        ax.legend(fontsize=8)
    out = Path(spec.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return out


def _acceptance_lines(spec: FigureSpec, inner: str, outer: str,
                      xlabel: str) -> RenderResult:
    """Mean acceptance vs ``inner``, one line per (series, ``outer``)."""
    df = _load(spec, [spec.series, "step_size", "n_steps", "repeat",
                      "acceptance_rate"])
    fig, ax = plt.subplots(figsize=(6.4, 4.4))
    series = {}
    for (s, o), group in sorted(df.groupby([spec.series, outer])):
        xs, ys, errs = [], [], []
        for x, cell in sorted(group.groupby(inner)):
            vals = cell["acceptance_rate"].to_numpy()
            xs.append(float(x))
            ys.append(float(np.mean(vals)))
            errs.append(_sem(vals))
        label = f"{s} {outer.replace('_', ' ')}={o:g}"
        if any(e > 0 for e in errs):
            ax.errorbar(xs, ys, yerr=errs, marker="o", ms=3, capsize=2,
                        label=label)
        else:
            ax.plot(xs, ys, marker="o", ms=3, label=label)
        series[label] = {"x": xs, "y": ys, "yerr": errs}
    out = _finish(fig, ax, spec, xlabel, "acceptance rate")
    return RenderResult(out, {"series": series})


def _render_acceptance_vs_steps(spec: FigureSpec) -> RenderResult:
    return _acceptance_lines(spec, inner="n_steps", outer="step_size",
                             xlabel="leapfrog steps per proposal")


def _render_acceptance_vs_step_size(spec: FigureSpec) -> RenderResult:
    return _acceptance_lines(spec, inner="step_size", outer="n_steps",
                             xlabel="step size")


def _repeat_curve(group: pd.DataFrame):
    """(acceptance, efficiency) of one repeat, ascending in acceptance.

    Duplicate acceptance values are averaged so np.interp sees a strictly
    increasing abscissa.
    """
    pairs = group.groupby("acceptance_rate")["efficiency"].mean()
    return pairs.index.to_numpy(), pairs.to_numpy()


def _render_efficiency_vs_acceptance(spec: FigureSpec) -> RenderResult:
    df = _load(spec, [spec.series, "step_size", "repeat", "acceptance_rate",
                      "efficiency"])
    fig, ax = plt.subplots(figsize=(6.4, 4.4))
    details = {"series": {}}
    for s, group in sorted(df.groupby(spec.series)):
        curves = [_repeat_curve(rep) for _, rep in group.groupby("repeat")]
        lo = max(float(a.min()) for a, _ in curves)
        hi = min(float(a.max()) for a, _ in curves)
        can_interp = all(a.size >= 2 for a, _ in curves) and hi > lo
        if can_interp:
            grid = np.linspace(lo, hi, ACCEPTANCE_GRID_POINTS)
            stack = np.vstack([np.interp(grid, a, e) for a, e in curves])
            mean = stack.mean(axis=0)
            sem = (stack.std(axis=0, ddof=1) / np.sqrt(stack.shape[0])
                   if stack.shape[0] > 1 else np.zeros_like(mean))
            line, = ax.plot(grid, mean, label=str(s))
            if sem.any():
                ax.fill_between(grid, mean - sem, mean + sem, alpha=0.25,
                                color=line.get_color())
            k = int(np.argmax(mean))
            ax.plot([grid[k]], [mean[k]], marker="v", ms=7,
                    color=line.get_color())
            details["series"][str(s)] = {
                "interpolated": True,
                "peak_acceptance": float(grid[k]),
                "peak_efficiency": float(mean[k]),
            }
        else:
            # too few points to interpolate; plot what there is
            a = np.concatenate([a for a, _ in curves])
            e = np.concatenate([e for _, e in curves])
            ax.plot(a, e, linestyle="none", marker="o", ms=5, label=str(s))
            k = int(np.argmax(e))
            details["series"][str(s)] = {
                "interpolated": False,
                "peak_acceptance": float(a[k]),
                "peak_efficiency": float(e[k]),
                "n_points": int(a.size),
            }
    out = _finish(fig, ax, spec, "acceptance rate",
                  "efficiency (step size x acceptance)")
    return RenderResult(out, details)


def _render_acceptance_vs_dimension(spec: FigureSpec) -> RenderResult:
    df = _load(spec, [spec.series, "d", "repeat", "acceptance_rate"])
    fig, ax = plt.subplots(figsize=(6.4, 4.4))
    series = {}
    for s, group in sorted(df.groupby(spec.series)):
        xs, ys, errs = [], [], []
        for d, cell in sorted(group.groupby("d")):
            vals = cell["acceptance_rate"].to_numpy()
            xs.append(float(d))
            ys.append(float(np.mean(vals)))
            errs.append(_sem(vals))
        if any(e > 0 for e in errs):
            ax.errorbar(xs, ys, yerr=errs, marker="o", ms=4, capsize=2,
                        label=str(s))
        else:
            ax.plot(xs, ys, marker="o", ms=4, label=str(s))
        series[str(s)] = {"x": xs, "y": ys, "yerr": errs}
    out = _finish(fig, ax, spec, "parameter count", "acceptance rate")
    return RenderResult(out, {"series": series})


def _render_tuning_curves(spec: FigureSpec) -> RenderResult:
    df = _load(spec, ["order", "sigma", "l", "acceptance", "efficiency",
                      "a_opt"])
    fig, ax = plt.subplots(figsize=(6.4, 4.4))
    optima = []
    for (order, sigma), group in sorted(df.groupby(["order", "sigma"])):
        group = group.sort_values("acceptance")
        a_opt = float(group["a_opt"].iloc[0])
        label = f"order {order:g}, scale {sigma:g}"
        line, = ax.plot(group["acceptance"], group["efficiency"], label=label)
        ax.axvline(a_opt, linestyle="--", alpha=0.6, color=line.get_color())
        ax.annotate(f"a*={a_opt:.3f}", (a_opt, 0.02),
                    xycoords=("data", "axes fraction"), fontsize=8,
                    rotation=90, va="bottom", ha="right")
        optima.append({"order": float(order), "sigma": float(sigma),
                       "a_opt": a_opt})
    out = _finish(fig, ax, spec, "acceptance rate", "relative efficiency")
    return RenderResult(out, {"optima": optima})


def _render_dataset_scatter(spec: FigureSpec) -> RenderResult:
    df = _load(spec, ["x_0", "y_0"])
    fig, ax = plt.subplots(figsize=(5.6, 4.2))
    ax.plot(df["x_0"], df["y_0"], linestyle="none", marker="o", ms=4,
            alpha=0.8)
    out = _finish(fig, ax, spec, "x", "y")
    return RenderResult(out, {"n_points": int(len(df))})


_RENDERERS = {
    "acceptance-vs-steps": _render_acceptance_vs_steps,
    "acceptance-vs-step-size": _render_acceptance_vs_step_size,
    "efficiency-vs-acceptance": _render_efficiency_vs_acceptance,
    "acceptance-vs-dimension": _render_acceptance_vs_dimension,
    "tuning-curves": _render_tuning_curves,
    "dataset-scatter": _render_dataset_scatter,
}


def render(spec: FigureSpec) -> RenderResult:
    """Render one figure; returns the output path and the plotted numbers."""
    return _RENDERERS[spec.kind](spec)
