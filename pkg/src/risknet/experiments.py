"""Figure reproductions: each writes tidy CSV panels plus a JSON manifest.

``scale="paper"`` uses the full-size parameters. ``scale="desk"`` quarters n
and B (floors n=24, B=500) and rescales Erdos-Renyi p so that the expected
degree, which drives every variance law here, is unchanged.
"""
from __future__ import annotations

import logging
import time
from pathlib import Path

import numpy as np

from . import io
from .analytics import per_agent_variance_iid
from .graphs import Graph, GraphSpec, equal_neighbor_matrix, generate, sharing_matrix
from .scaling import sinkhorn
from .sim import LossModel, lambda_sweep, post_mix_sweep, simulate_fixed, simulate_two_layer
from .streams import check_seed, derive_seed, seed_sequence

log = logging.getLogger(__name__)

FIGURES = ("fig1", "fig2", "fig3", "fig4", "fig5", "fig6")

FULL_SCALE = {
    "fig1": {"n": 50, "B": 2000, "p": 0.05, "m": 2, "d": 4},
    "fig2": {"n": 1000, "B": 2000, "p": 0.02, "m": 10},
    "fig3": {"n": 600, "B": 1000, "R": 50, "p": 0.05, "m": 2},
    "fig4": {"n": 400, "B": 1500, "p": 0.02, "m": 4, "n_alpha": 13},
    "fig5": {"n": 400, "B": 2000, "p": 0.02, "m": 2},
    "fig6": {"n": 600, "B": 1500, "p": 0.02, "m": 4, "n_lambda": 21},
}


def params(figure: str, scale: str = "desk") -> dict:
    if figure not in FULL_SCALE:
        raise KeyError(figure)
    if scale not in ("desk", "paper"):
        raise ValueError(f"scale must be 'desk' or 'paper', got {scale!r}")
    p = dict(FULL_SCALE[figure])
    if scale == "desk":
        n0 = p["n"]
        p["n"] = max(24, n0 // 4)
        p["B"] = max(500, p["B"] // 4)
        p["p"] = min(1.0, p["p"] * (n0 - 1) / (p["n"] - 1))
    return p


def _graph(spec: GraphSpec, seed: int, tag: str) -> Graph:
    return generate(spec, seed_sequence(seed, tag))


def _er_ba(prm: dict) -> dict[str, GraphSpec]:
    return {
        "erdos_renyi": GraphSpec("erdos_renyi", prm["n"], p=prm["p"]),
        "barabasi_albert": GraphSpec("barabasi_albert", prm["n"], m=prm["m"]),
    }


def fig1(prm: dict, seed: int, out: Path, workers: int = 1) -> list[str]:
    n, B = prm["n"], prm["B"]
    specs = {
        "complete": GraphSpec("complete", n),
        "ring": GraphSpec("ring", n),
        "star": GraphSpec("star", n),
        "regular": GraphSpec("regular", n, d=prm["d"]),
        "erdos_renyi": GraphSpec("erdos_renyi", n, p=prm["p"]),
        "barabasi_albert": GraphSpec("barabasi_albert", n, m=prm["m"]),
    }
    edges, nodes = [], []
    loss = LossModel.exponential(n)
    for name, spec in specs.items():
        g = _graph(spec, seed, f"fig1:{name}:graph")
        m = equal_neighbor_matrix(g)
        rep = simulate_fixed(m, loss, B, derive_seed(seed, f"fig1:{name}:loss"), workers=workers)
        theory = per_agent_variance_iid(m, loss.variance)
        edges += [[name, i, j] for i, j in g.edges()]
        for i in range(n):
            nodes.append([name, i, int(g.degrees[i]), rep.per_node_mean[i], rep.per_node_var[i],
                          rep.per_node_cv[i], theory[i]])
    io.write_table(out / "fig1_edges.csv", ["topology", "i", "j"], edges)
    io.write_table(out / "fig1_cv.csv", ["topology", "node", "degree", "mean", "variance", "cv", "variance_theory"], nodes)
    return ["fig1_edges.csv", "fig1_cv.csv"]


def degree_variance_table(spec: GraphSpec, B: int, seed: int, tag: str, workers: int = 1):
    """One graph, B draws: (degrees, simulated per-node variance) under equal-neighbour sharing."""
    g = _graph(spec, seed, f"{tag}:graph")
    rep = simulate_fixed(equal_neighbor_matrix(g), LossModel.exponential(spec.n), B,
                         derive_seed(seed, f"{tag}:loss"), workers=workers)
    return np.asarray(g.degrees), rep.per_node_var


def fig2(prm: dict, seed: int, out: Path, workers: int = 1) -> list[str]:
    rows = []
    for name, spec in _er_ba(prm).items():
        deg, var = degree_variance_table(spec, prm["B"], seed, f"fig2:{name}", workers)
        rows += [[name, i, int(deg[i]), var[i], 1.0 / (deg[i] + 1.0)] for i in range(spec.n)]
    io.write_table(out / "fig2_degree_variance.csv", ["model", "node", "degree", "variance", "benchmark"], rows)
    return ["fig2_degree_variance.csv"]


def fig3(prm: dict, seed: int, out: Path, workers: int = 1) -> list[str]:
    spread, decomp = [], []
    loss = LossModel.exponential(prm["n"])
    for name, spec in _er_ba(prm).items():
        rep = simulate_two_layer(spec, "equal_neighbor", loss, prm["R"], prm["B"],
                                 derive_seed(seed, f"fig3:{name}"), workers=workers)
        spread += [[name, r, s] for r, s in enumerate(rep.spreads)]
        decomp.append([name, rep.within_graph, rep.between_graph, rep.pooled_total, rep.spread_q90_q10])
    io.write_table(out / "fig3_spread.csv", ["model", "replicate", "spread_q90_q10"], spread)
    io.write_table(out / "fig3_decomposition.csv",
                   ["model", "within_graph", "between_graph", "pooled_total", "mean_spread"], decomp)
    return ["fig3_spread.csv", "fig3_decomposition.csv"]


def post_mix_curve(spec: GraphSpec, B: int, n_alpha: int, seed: int, tag: str, workers: int = 1):
    g = _graph(spec, seed, f"{tag}:graph")
    alphas = np.linspace(0.0, 1.0, n_alpha)
    return post_mix_sweep(equal_neighbor_matrix(g), alphas, LossModel.exponential(spec.n), B,
                          derive_seed(seed, f"{tag}:loss"), workers=workers)


def fig4(prm: dict, seed: int, out: Path, workers: int = 1) -> list[str]:
    rows = []
    for name, spec in _er_ba(prm).items():
        curve = post_mix_curve(spec, prm["B"], prm["n_alpha"], seed, f"fig4:{name}", workers)
        base = curve.trace_var[0]
        rows += [[name, a, t, t / base] for a, t in zip(curve.grid, curve.trace_var)]
    io.write_table(out / "fig4_post_mix.csv", ["model", "alpha", "trace_var", "trace_var_normalized"], rows)
    return ["fig4_post_mix.csv"]


def fig5(prm: dict, seed: int, out: Path, workers: int = 1) -> list[str]:
    rows = []
    for name, spec in _er_ba(prm).items():
        g = _graph(spec, seed, f"fig5:{name}:graph")
        rs = equal_neighbor_matrix(g)
        ds = sinkhorn(rs).B
        loss = LossModel.exponential(spec.n)
        for scheme, m in (("RS", rs), ("DS", ds)):
            rep = simulate_fixed(m, loss, prm["B"], derive_seed(seed, f"fig5:{name}:{scheme}"), workers=workers)
            theory = per_agent_variance_iid(m, loss.variance)
            rows += [[name, scheme, i, int(g.degrees[i]), rep.per_node_var[i], theory[i]] for i in range(spec.n)]
    io.write_table(out / "fig5_rs_vs_ds.csv",
                   ["model", "scheme", "node", "degree", "variance", "variance_closed_form"], rows)
    return ["fig5_rs_vs_ds.csv"]


def fig6(prm: dict, seed: int, out: Path, workers: int = 1) -> list[str]:
    rows = []
    lambdas = np.linspace(0.0, 1.0, prm["n_lambda"])
    for name, spec in _er_ba(prm).items():
        g = _graph(spec, seed, f"fig6:{name}:graph")
        d = sinkhorn(sharing_matrix(g, "equal_neighbor")).B
        curve = lambda_sweep(d, lambdas, LossModel.exponential(spec.n), prm["B"],
                             derive_seed(seed, f"fig6:{name}:loss"), workers=workers)
        rows += [[name, lam, t, c] for lam, t, c in zip(curve.grid, curve.trace_var, curve.closed_form)]
    io.write_table(out / "fig6_lambda_mix.csv", ["model", "lambda", "trace_var", "trace_var_closed_form"], rows)
    return ["fig6_lambda_mix.csv"]


RUNNERS = {"fig1": fig1, "fig2": fig2, "fig3": fig3, "fig4": fig4, "fig5": fig5, "fig6": fig6}


def reproduce(figure: str, scale: str, seed: int, out_dir, workers: int = 1) -> Path:
    """Run one figure experiment; returns the manifest path."""
    if figure not in RUNNERS:
        raise KeyError(f"unknown figure {figure!r}; expected one of {', '.join(FIGURES)}")
    seed = check_seed(seed)
    prm = params(figure, scale)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    files = RUNNERS[figure](prm, seed, out, workers)
    elapsed = time.perf_counter() - t0
    log.info("%s (%s) finished in %.2fs", figure, scale, elapsed)
    manifest = out / f"{figure}_manifest.json"
    io.write_json(manifest, {"figure": figure, "scale": scale, "seed": seed, "params": prm, "files": files})
    return manifest
