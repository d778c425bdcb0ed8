import csv
import json

import numpy as np
import pytest

from risknet.experiments import FIGURES, FULL_SCALE, params, reproduce

COLUMNS = {
    "fig1_edges.csv": ["topology", "i", "j"],
    "fig1_cv.csv": ["topology", "node", "degree", "mean", "variance", "cv", "variance_theory"],
    "fig2_degree_variance.csv": ["model", "node", "degree", "variance", "benchmark"],
    "fig3_spread.csv": ["model", "replicate", "spread_q90_q10"],
    "fig3_decomposition.csv": ["model", "within_graph", "between_graph", "pooled_total", "mean_spread"],
    "fig4_post_mix.csv": ["model", "alpha", "trace_var", "trace_var_normalized"],
    "fig5_rs_vs_ds.csv": ["model", "scheme", "node", "degree", "variance", "variance_closed_form"],
    "fig6_lambda_mix.csv": ["model", "lambda", "trace_var", "trace_var_closed_form"],
}


def read(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def test_full_scale_parameters():
    assert FULL_SCALE["fig1"]["n"] == 50 and FULL_SCALE["fig1"]["B"] == 2000
    assert (FULL_SCALE["fig2"]["n"], FULL_SCALE["fig2"]["p"], FULL_SCALE["fig2"]["m"]) == (1000, 0.02, 10)
    assert (FULL_SCALE["fig3"]["n"], FULL_SCALE["fig3"]["B"], FULL_SCALE["fig3"]["R"]) == (600, 1000, 50)
    assert (FULL_SCALE["fig4"]["n"], FULL_SCALE["fig4"]["B"], FULL_SCALE["fig4"]["n_alpha"]) == (400, 1500, 13)
    assert (FULL_SCALE["fig5"]["n"], FULL_SCALE["fig5"]["p"]) == (400, 0.02)
    assert (FULL_SCALE["fig6"]["n"], FULL_SCALE["fig6"]["B"]) == (600, 1500)


@pytest.mark.parametrize("figure", FIGURES)
def test_desk_scaling_keeps_expected_degree(figure):
    full, desk = params(figure, "paper"), params(figure, "desk")
    assert desk["n"] == max(24, full["n"] // 4) and desk["B"] == max(500, full["B"] // 4)
    assert (desk["n"] - 1) * desk["p"] == pytest.approx((full["n"] - 1) * full["p"])


def test_params_errors():
    with pytest.raises(KeyError):
        params("fig7")
    with pytest.raises(ValueError):
        params("fig1", "huge")


@pytest.mark.parametrize("figure", FIGURES)
def test_reproduce_desk(figure, tmp_path):
    manifest = json.loads(reproduce(figure, "desk", 3, tmp_path).read_text())
    assert manifest["figure"] == figure and manifest["params"] == params(figure, "desk")
    for name in manifest["files"]:
        header, rows = read(tmp_path / name)
        assert header == COLUMNS[name] and rows


def test_reproduce_is_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        reproduce("fig4", "desk", 9, out, workers=2 if out == b else 1)
    for name in ("fig4_post_mix.csv", "fig4_manifest.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_fig2_benchmark_column(tmp_path):
    reproduce("fig2", "desk", 1, tmp_path)
    _, rows = read(tmp_path / "fig2_degree_variance.csv")
    for row in rows:
        assert float(row[4]) == pytest.approx(1 / (int(row[2]) + 1))


def test_fig4_normalized_at_zero(tmp_path):
    reproduce("fig4", "desk", 1, tmp_path)
    _, rows = read(tmp_path / "fig4_post_mix.csv")
    for model in ("erdos_renyi", "barabasi_albert"):
        sel = [r for r in rows if r[0] == model]
        assert float(sel[0][1]) == 0.0 and float(sel[0][3]) == 1.0
        assert np.all(np.diff([float(r[2]) for r in sel]) >= -1e-9)


def test_fig5_simulation_matches_closed_form(tmp_path):
    reproduce("fig5", "desk", 1, tmp_path)
    _, rows = read(tmp_path / "fig5_rs_vs_ds.csv")
    B = params("fig5", "desk")["B"]
    for model in ("erdos_renyi", "barabasi_albert"):
        for scheme in ("RS", "DS"):
            sel = np.array([[float(r[4]), float(r[5])] for r in rows if r[0] == model and r[1] == scheme])
            sim, closed = sel.T
            # exponential losses: variance of the sample variance is at most ~9 sigma^4 / B
            assert np.all(np.abs(sim - closed) <= 5 * 3 * closed / np.sqrt(B))


def test_fig6_closed_form_overlay(tmp_path):
    reproduce("fig6", "desk", 1, tmp_path)
    _, rows = read(tmp_path / "fig6_lambda_mix.csv")
    sim = np.array([float(r[2]) for r in rows])
    closed = np.array([float(r[3]) for r in rows])
    assert np.all(np.abs(sim - closed) <= 0.1 * closed)


def test_unknown_figure(tmp_path):
    with pytest.raises(KeyError):
        reproduce("fig0", "desk", 0, tmp_path)
