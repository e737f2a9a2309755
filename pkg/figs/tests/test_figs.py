"""Unit tests for the figure package: schemas, numbers, CLI."""

import csv
import json

import numpy as np
import pytest

from figs import FigureSpec, SchemaError, render
from figs.cli import main

COLUMNS = ["activation", "widths", "d", "step_size", "n_steps",
           "travel_time", "repeat", "seed", "acceptance_rate", "efficiency",
           "n_divergent", "mean_abs_delta_h", "test_mse", "error"]


def _write_results(path, rows):
    """rows: (activation, d, step_size, n_steps, repeat, acceptance)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(COLUMNS)
        for act, d, eps, L, rep, acc in rows:
            writer.writerow([act, "1x3x1", d, repr(eps), L, repr(eps * L),
                             rep, 1234, repr(acc), repr(eps * acc), 0,
                             repr(0.01), repr(0.5), ""])


def test_spec_validation(tmp_path):
    with pytest.raises(ValueError, match="kind"):
        FigureSpec(kind="pie-chart", csv="a.csv", out="a.png")
    with pytest.raises(ValueError, match="colour"):
        FigureSpec.from_dict({"kind": "dataset-scatter", "csv": "a",
                              "out": "b", "colour": "red"})
    spec = FigureSpec(kind="dataset-scatter", csv="a.csv", out="a.png",
                      title="data")
    path = tmp_path / "spec.json"
    spec.save(path)
    assert FigureSpec.load(path) == spec


def test_missing_column_is_named(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("activation,step_size\nrelu,0.001\n")
    spec = FigureSpec(kind="acceptance-vs-steps", csv=str(path),
                      out=str(tmp_path / "o.png"))
    with pytest.raises(SchemaError, match="n_steps"):
        render(spec)


def test_missing_file(tmp_path):
    spec = FigureSpec(kind="dataset-scatter", csv=str(tmp_path / "no.csv"),
                      out=str(tmp_path / "o.png"))
    with pytest.raises(FileNotFoundError):
        render(spec)


def test_single_row_renders_without_error_bar(tmp_path):
    path = tmp_path / "one.csv"
    _write_results(path, [("relu", 10, 0.001, 100, 0, 0.5)])
    out = tmp_path / "one.png"
    result = render(FigureSpec(kind="acceptance-vs-steps", csv=str(path),
                               out=str(out)))
    assert out.exists() and out.stat().st_size > 0
    (label, series), = result.details["series"].items()
    assert "relu" in label
    assert series["x"] == [100.0]
    assert series["y"] == [0.5]
    assert series["yerr"] == [0.0]


def test_error_bars_are_standard_errors(tmp_path):
    accs = [0.50, 0.60, 0.55, 0.45, 0.65]
    path = tmp_path / "five.csv"
    _write_results(path, [("sigmoid", 10, 0.001, 100, r, a)
                          for r, a in enumerate(accs)])
    result = render(FigureSpec(kind="acceptance-vs-steps", csv=str(path),
                               out=str(tmp_path / "five.png")))
    (series,) = result.details["series"].values()
    assert series["y"][0] == pytest.approx(np.mean(accs))
    assert series["yerr"][0] == pytest.approx(
        np.std(accs, ddof=1) / np.sqrt(5))


def test_failed_rows_are_ignored(tmp_path):
    path = tmp_path / "mixed.csv"
    _write_results(path, [("relu", 10, 0.001, 100, 0, 0.5)])
    with open(path, "a", newline="") as fh:
        csv.writer(fh).writerow(["relu", "1x3x1", 10, repr(0.001), 100,
                                 repr(0.1), 1, 99, "", "", "", "", "",
                                 "ValueError: boom"])
    result = render(FigureSpec(kind="acceptance-vs-steps", csv=str(path),
                               out=str(tmp_path / "m.png")))
    (series,) = result.details["series"].values()
    assert series["y"] == [0.5]


def test_efficiency_interpolation_matches_hand_computation(tmp_path):
    # repeat 0 has knots (0.2,1) (0.6,3) (1.0,1); repeat 1 has (0.0,0)
    # (0.4,2) (0.8,4); on the shared range [0.2, 0.8] the averaged curve is
    # 1 -> 2 -> 3 at 0.2/0.4/0.6 and exactly 3 on [0.6, 0.8]
    rows = []
    for rep, pts in enumerate([[(0.2, 1.0), (0.6, 3.0), (1.0, 1.0)],
                               [(0.0, 0.0), (0.4, 2.0), (0.8, 4.0)]]):
        for acc, eff in pts:
            rows.append(("relu", 10, eff, 1, rep, acc))
    path = tmp_path / "eff.csv"
    # efficiency column must carry eff, not step_size*acc; write manually
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(COLUMNS)
        for act, d, eff, L, rep, acc in rows:
            writer.writerow([act, "1x3x1", d, repr(0.001), L, repr(0.001),
                             rep, 0, repr(acc), repr(eff), 0, "", "", ""])
    result = render(FigureSpec(kind="efficiency-vs-acceptance",
                               csv=str(path), out=str(tmp_path / "e.png")))
    detail = result.details["series"]["relu"]
    assert detail["interpolated"]
    assert detail["peak_efficiency"] == pytest.approx(3.0, abs=1e-12)
    assert 0.59 <= detail["peak_acceptance"] <= 0.81


def test_efficiency_single_points_fall_back(tmp_path):
    path = tmp_path / "pt.csv"
    _write_results(path, [("relu", 10, 0.002, 50, 0, 0.7)])
    result = render(FigureSpec(kind="efficiency-vs-acceptance",
                               csv=str(path), out=str(tmp_path / "p.png")))
    detail = result.details["series"]["relu"]
    assert not detail["interpolated"]
    assert detail["n_points"] == 1
    assert detail["peak_acceptance"] == pytest.approx(0.7)


def test_acceptance_vs_dimension_means(tmp_path):
    rows = [("relu", 10, 0.001, 100, r, a)
            for r, a in enumerate([0.8, 0.9])]
    rows += [("relu", 151, 0.001, 100, r, a)
             for r, a in enumerate([0.4, 0.6])]
    path = tmp_path / "dim.csv"
    _write_results(path, rows)
    result = render(FigureSpec(kind="acceptance-vs-dimension",
                               csv=str(path), out=str(tmp_path / "d.png")))
    series = result.details["series"]["relu"]
    assert series["x"] == [10.0, 151.0]
    assert series["y"] == pytest.approx([0.85, 0.5])


def test_dataset_scatter(tmp_path):
    path = tmp_path / "data.csv"
    path.write_text("x_0,y_0\n0.0,1.0\n1.0,0.5\n2.0,-0.4\n")
    result = render(FigureSpec(kind="dataset-scatter", csv=str(path),
                               out=str(tmp_path / "s.png")))
    assert result.details["n_points"] == 3


def test_render_is_deterministic(tmp_path):
    path = tmp_path / "r.csv"
    _write_results(path, [("relu", 10, 0.001, 100, r, 0.5 + 0.1 * r)
                          for r in range(3)])
    spec = FigureSpec(kind="acceptance-vs-steps", csv=str(path),
                      out=str(tmp_path / "r.png"))
    render(spec)
    first = (tmp_path / "r.png").read_bytes()
    render(spec)
    assert (tmp_path / "r.png").read_bytes() == first


def test_cli_flags_and_spec(tmp_path):
    path = tmp_path / "data.csv"
    path.write_text("x_0,y_0\n0.0,1.0\n")
    rc = main(["--kind", "dataset-scatter", "--csv", str(path),
               "--out", str(tmp_path / "a.png")])
    assert rc == 0 and (tmp_path / "a.png").exists()

    spec_path = tmp_path / "spec.json"
    spec_path.write_text(json.dumps({"kind": "dataset-scatter",
                                     "csv": str(path),
                                     "out": str(tmp_path / "b.png")}))
    assert main(["--spec", str(spec_path)]) == 0
    assert (tmp_path / "b.png").exists()


def test_cli_schema_error_exit_code(tmp_path, capsys):
    path = tmp_path / "bad.csv"
    path.write_text("x_0\n0.0\n")
    rc = main(["--kind", "dataset-scatter", "--csv", str(path),
               "--out", str(tmp_path / "x.png")])
    assert rc == 2
    assert "y_0" in capsys.readouterr().err


def test_cli_requires_kind_or_spec():
    with pytest.raises(SystemExit):
        main(["--csv", "a.csv"])
