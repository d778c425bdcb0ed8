import json
import shutil
import subprocess

import numpy as np
import pytest

from risknet import io
from risknet.cli import ExperimentConfig, UsageError, main
from risknet.graphs import GraphSpec, equal_neighbor_matrix, generate


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def ring_csv(tmp_path):
    path = tmp_path / "ring.csv"
    io.write_matrix_csv(path, equal_neighbor_matrix(generate(GraphSpec("ring", 6))))
    return path


def test_gen_ring(capsys, tmp_path):
    out = tmp_path / "g.csv"
    code, _, err = run(capsys, "gen", "--kind", "ring", "--n", 5, "--out", out)
    assert code == 0 and "risknet gen" in err
    lines = out.read_text().splitlines()
    assert lines[0] == "i,j" and len(lines[1:]) == 5
    assert io.read_edge_list(out) == [(0, 1), (0, 4), (1, 2), (2, 3), (3, 4)]


def test_gen_invalid_probability(capsys):
    code, _, err = run(capsys, "gen", "--kind", "er", "--n", 100, "--p", 2.0)
    assert code == 2 and "InvalidSpec" in err


def test_gen_is_deterministic(capsys, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for path in (a, b):
        assert run(capsys, "gen", "--kind", "ba", "--n", 400, "--m", 4, "--seed", 7, "--out", path)[0] == 0
    assert a.read_bytes() == b.read_bytes()
    code, out, _ = run(capsys, "gen", "--kind", "ba", "--n", 400, "--m", 4, "--seed", 8)
    assert out != a.read_text()


def test_bad_flags_exit_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["gen", "--kind", "ring", "--n", "five"])
    assert exc.value.code == 2
    assert run(capsys, "gen", "--n", 5)[0] == 2
    assert run(capsys, "gen", "--kind", "ring", "--n", 5, "--seed", -3)[0] == 2
    with pytest.raises(SystemExit):
        main(["gen", "--kind", "ring", "--n", "5", "--threads", "-1"])


def test_scale_round_trip(capsys, tmp_path):
    a = tmp_path / "a.csv"
    io.write_matrix_csv(a, [[1.0, 2.0], [3.0, 4.0]])
    out, diag = tmp_path / "ds.csv", tmp_path / "diag.csv"
    assert run(capsys, "scale", "--in", a, "--out", out, "--diag", diag)[0] == 0
    b = io.read_matrix_csv(out).entries
    np.testing.assert_allclose(b.sum(axis=0), 1, atol=1e-10)
    np.testing.assert_allclose(b.sum(axis=1), 1, atol=1e-10)
    assert diag.read_text().startswith("index,d1,d2")
    code, text, _ = run(capsys, "scale", "--in", a)
    assert code == 0 and text.startswith("c0,c1")


def test_scale_without_total_support_exit_4(capsys, tmp_path):
    a = tmp_path / "a.csv"
    a.write_text("1,1\n0,1\n")
    code, _, err = run(capsys, "scale", "--in", a, "--tol", 1e-10)
    assert code == 4 and "NoTotalSupport" in err


def test_missing_file_exit_3(capsys, tmp_path):
    assert run(capsys, "scale", "--in", tmp_path / "nope.csv")[0] == 3
    assert run(capsys, "gen", "--kind", "ring", "--n", 4, "--out", tmp_path / "no" / "dir.csv")[0] == 3


def test_bvn(capsys, tmp_path):
    d = tmp_path / "d.csv"
    io.write_matrix_csv(d, [[0.5, 0.5, 0], [0, 0.5, 0.5], [0.5, 0, 0.5]])
    code, out, _ = run(capsys, "bvn", "--in", d)
    dec = json.loads(out)
    assert code == 0 and len(dec["terms"]) == 2 and dec["residual"] <= 1e-12
    io.write_matrix_csv(d, [[0.5, 0.5], [0.5, 0.4]])
    code, _, err = run(capsys, "bvn", "--in", d)
    assert code == 4 and "NotDoublyStochastic" in err


def _analyze(capsys, *argv):
    code, out, _ = run(capsys, "analyze", *argv)
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "quantity,agent,value"
    return {(q, a): float(v) for q, a, v in (line.split(",") for line in lines[1:])}


def test_analyze_ring(capsys, ring_csv):
    res = _analyze(capsys, "--matrix", ring_csv, "--sigma2", 1)
    assert res[("lambda_star_trace", "")] == pytest.approx(1.0)
    assert res[("lambda_star_spectral", "")] == pytest.approx(1.0)
    assert res[("variance", "0")] == pytest.approx(1 / 3)
    assert res[("incentive_derivative", "2")] == pytest.approx(2 * (1 / 3 - 1))


def test_analyze_weights_and_rho(capsys, tmp_path, ring_csv):
    w = tmp_path / "w.csv"
    w.write_text("weight\n" + "\n".join(["1", "2", "3", "1", "2", "3"]) + "\n")
    res = _analyze(capsys, "--matrix", ring_csv, "--weights", w, "--rho", 0.25, "--sigma2", 2)
    assert res[("lambda_star_weighted", "")] == pytest.approx(1.0)
    assert res[("variance", "4")] == pytest.approx(2 * (0.75 / 3 + 0.25))


def test_analyze_formal_spectral_label(capsys, tmp_path):
    p = tmp_path / "p.csv"
    io.write_matrix_csv(p, [[0.5, 0.2], [0.2, 0.5]])
    res = _analyze(capsys, "--matrix", p)
    assert ("lambda_star_spectral_formal", "") in res


def test_simulate_fixed_matrix(capsys, tmp_path, ring_csv):
    out = tmp_path / "sim.csv"
    assert run(capsys, "simulate", "--matrix", ring_csv, "--B", 20000, "--seed", 3, "--out", out)[0] == 0
    rows = out.read_text().splitlines()
    assert rows[0] == "index,degree,mean,var,cv" and len(rows) == 7
    var = np.array([float(r.split(",")[3]) for r in rows[1:]])
    assert np.all(np.abs(var - 1 / 3) <= 0.05 / 3)
    meta = json.loads(out.with_suffix(".json").read_text())
    assert meta["master_seed"] == 3 and meta["B"] == 20000


def test_simulate_threads_do_not_change_output(capsys):
    args = ["simulate", "--kind", "er", "--n", 40, "--p", 0.1, "--B", 1500, "--seed", 5]
    _, one, _ = run(capsys, *args, "--threads", 1)
    _, many, _ = run(capsys, *args, "--threads", 4)
    assert one == many and one.count("\n") == 41


def test_simulate_two_layer_flags(capsys, tmp_path):
    out = tmp_path / "tl.csv"
    code, _, _ = run(capsys, "simulate", "--kind", "ba", "--n", 30, "--m", 2, "--R", 3, "--B", 200, "--out", out)
    assert code == 0
    meta = json.loads(out.with_suffix(".json").read_text())
    assert meta["within_graph"] + meta["between_graph"] == pytest.approx(meta["pooled_total"], rel=1e-6)
    assert run(capsys, "simulate", "--kind", "ba", "--n", 30, "--m", 2, "--R", 3, "--B", 200)[0] == 2


def _config(tmp_path, **extra):
    cfg = {"graph": {"kind": "erdos_renyi", "n": 40, "p": 0.1}, "rule": "equal_neighbor",
           "loss": {"family": "exponential", "rate": 1.0}, "B": 300, "R": 3, "seed": 11,
           "output_dir": str(tmp_path / "results"), **extra}
    path = tmp_path / "experiment.json"
    path.write_text(json.dumps(cfg))
    return path


def test_simulate_with_config(capsys, tmp_path):
    assert run(capsys, "simulate", "--config", _config(tmp_path))[0] == 0
    assert (tmp_path / "results" / "simulate.csv").exists()
    assert (tmp_path / "results" / "simulate.json").exists()


def test_sweep_with_config(capsys, tmp_path):
    cfg = _config(tmp_path, sweep={"kind": "alpha", "grid": [0.0, 0.5, 1.0]})
    assert run(capsys, "sweep", "--config", cfg)[0] == 0
    rows = (tmp_path / "results" / "sweep_alpha.csv").read_text().splitlines()
    assert rows[0] == "alpha,trace_var,closed_form" and len(rows) == 4
    tv = [float(r.split(",")[1]) for r in rows[1:]]
    assert tv[0] <= tv[1] <= tv[2]


def test_invalid_configs(capsys, tmp_path):
    assert run(capsys, "sweep", "--config", _config(tmp_path))[0] == 2  # no sweep entry
    assert run(capsys, "simulate", "--config", _config(tmp_path, B=1))[0] == 2
    assert run(capsys, "simulate", "--config", _config(tmp_path, colour="red"))[0] == 2
    bad = _config(tmp_path, sweep={"kind": "lambda", "grid": [0.5, 0.1]})
    assert run(capsys, "sweep", "--config", bad)[0] == 2
    with pytest.raises(UsageError):
        ExperimentConfig(GraphSpec("ring", 5), rule="gossip")


def test_sweep_lambda_flags(capsys, ring_csv):
    code, out, _ = run(capsys, "sweep", "--matrix", ring_csv, "--sweep", "lambda", "--grid", "0,0.5,1", "--B", 4000)
    rows = [list(map(float, r.split(","))) for r in out.splitlines()[1:]]
    assert code == 0 and len(rows) == 3
    for lam, sim, closed in rows:
        assert sim == pytest.approx(closed, rel=0.1)


def test_sweep_sinkhorn_on_graph(capsys):
    code, out, _ = run(capsys, "sweep", "--kind", "ba", "--n", 30, "--m", 2, "--sinkhorn", "--n-grid", 5, "--B", 500)
    assert code == 0 and len(out.splitlines()) == 6


def _write_dist(path, atoms):
    path.write_text("value,prob\n" + "".join(f"{v},{p}\n" for v, p in atoms))
    return path


def test_cx_exact(capsys, tmp_path):
    s = _write_dist(tmp_path / "s.csv", [(0, 0.25), (1, 0.5), (2, 0.25)])
    b = _write_dist(tmp_path / "b.csv", [(0, 0.5), (2, 0.5)])
    code, out, _ = run(capsys, "cx", "--small", s, "--big", s)
    assert code == 0 and json.loads(out)["dominates"] is True
    rep = json.loads(run(capsys, "cx", "--small", s, "--big", b)[1])
    assert rep["mode"] == "exact" and rep["dominates"] is True
    rep = json.loads(run(capsys, "cx", "--small", b, "--big", s)[1])
    assert rep["dominates"] is False and rep["worst_gap"] > 0


def test_cx_empirical(capsys, tmp_path):
    rng = np.random.default_rng(0)
    x = rng.exponential(size=(20000, 2))
    s, b = tmp_path / "s.csv", tmp_path / "b.csv"
    np.savetxt(s, x.mean(axis=1), header="sample", comments="")
    np.savetxt(b, x[:, 0])
    rep = json.loads(run(capsys, "cx", "--small", s, "--big", b)[1])
    assert rep["mode"] == "empirical" and rep["dominates"] is True
    d = _write_dist(tmp_path / "d.csv", [(1, 1.0)])
    assert run(capsys, "cx", "--small", d, "--big", b)[0] == 2


def test_reproduce_unknown_figure(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["reproduce", "--figure", "fig9"])
    assert exc.value.code == 2


def test_reproduce_desk(capsys, tmp_path):
    assert run(capsys, "reproduce", "--figure", "fig5", "--out", tmp_path, "--seed", 2)[0] == 0
    manifest = json.loads((tmp_path / "fig5_manifest.json").read_text())
    assert manifest["seed"] == 2 and manifest["files"] == ["fig5_rs_vs_ds.csv"]


@pytest.mark.skipif(shutil.which("risknet") is None, reason="console script not installed")
def test_console_script(tmp_path):
    res = subprocess.run(["risknet", "gen", "--kind", "star", "--n", "4"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.splitlines() == ["i,j", "0,1", "0,2", "0,3"]
