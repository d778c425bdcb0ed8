"""``risknet`` command-line interface.

Exit codes: 0 success, 2 invalid flags or input, 3 I/O failure, 4 numerical
failure (the error class name is printed on stderr).
"""
from __future__ import annotations

import argparse
import csv
import io as _stdio
import json
import logging
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import analytics, io, scaling
from .errors import NumericalError
from .experiments import FIGURES, reproduce
from .graphs import RULES, GraphSpec, generate, sharing_matrix
from .order import DiscreteDist, cx_dominates, empirical_cx_check
from .sim import LossModel, lambda_sweep, post_mix_sweep, simulate_fixed, simulate_two_layer
from .stochmat import classify
from .streams import check_seed, derive_seed, seed_sequence

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_NUMERIC = 0, 2, 3, 4

log = logging.getLogger("risknet")


class UsageError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    graph: GraphSpec
    rule: str = "equal_neighbor"
    loss: dict = field(default_factory=lambda: {"family": "exponential", "rate": 1.0})
    B: int = 2000
    R: int = 2
    seed: int = 0
    sweep: dict | None = None
    output_dir: str = "."

    def __post_init__(self):
        if self.B < 2 or self.R < 2:
            raise UsageError("config needs B >= 2 and R >= 2")
        if self.rule not in RULES:
            raise UsageError(f"unknown rule {self.rule!r}")
        check_seed(self.seed)
        if self.sweep is not None:
            if self.sweep.get("kind") not in ("alpha", "lambda"):
                raise UsageError("sweep.kind must be 'alpha' or 'lambda'")
            grid = np.asarray(self.sweep.get("grid", []), dtype=float)
            if grid.size == 0 or grid.min() < 0 or grid.max() > 1 or np.any(np.diff(grid) < 0):
                raise UsageError("sweep.grid must be a sorted non-empty list within [0, 1]")
        self.loss_model()

    def loss_model(self) -> LossModel:
        return LossModel.from_dict(self.loss, n=self.graph.n)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        raw = json.loads(Path(path).read_text())
        if not isinstance(raw, dict) or "graph" not in raw:
            raise UsageError("config must be a JSON object with a 'graph' entry")
        raw = dict(raw)
        raw["graph"] = GraphSpec.from_dict(raw["graph"])
        try:
            return cls(**raw)
        except TypeError as exc:
            raise UsageError(str(exc)) from None


# ---------------------------------------------------------------- helpers


def _emit(text: str, out) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _table(header, rows) -> str:
    buf = _stdio.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([io.fmt(v) if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue()


def _spec_from_args(a) -> GraphSpec:
    if a.kind is None:
        raise UsageError("--kind is required")
    return GraphSpec(a.kind, a.n, p=a.p, m=a.m, d=a.d, k=a.k, beta=a.beta)


def _loss_from_args(a, n: int) -> LossModel:
    if a.loss == "exponential":
        return LossModel.exponential(n, a.rate)
    if a.loss == "gaussian":
        return LossModel.gaussian(n, a.mean, a.sigma2)
    return LossModel.equicorrelated(n, a.mean, a.sigma2, a.rho)


def _parse_grid(a) -> np.ndarray:
    if a.grid:
        return np.array([float(x) for x in a.grid.split(",")])
    return np.linspace(0.0, 1.0, a.n_grid)


def _matrix_or_graph(a, seed: int):
    """(matrix, degrees or None) from --matrix or the graph flags."""
    if a.matrix:
        return io.read_matrix_csv(a.matrix), None
    g = generate(_spec_from_args(a), seed_sequence(seed, "cli:graph"))
    return sharing_matrix(g, a.rule), np.asarray(g.degrees)


# ---------------------------------------------------------------- commands


def cmd_gen(a) -> int:
    g = generate(_spec_from_args(a), check_seed(a.seed))
    _emit(_table(["i", "j"], g.edges()), a.out)
    return EXIT_OK


def cmd_scale(a) -> int:
    res = scaling.sinkhorn(io.read_matrix_csv(a.inp), tol=a.tol, max_iter=a.max_iter)
    if a.out:
        io.write_matrix_csv(a.out, res.B)
    else:
        _emit(_table(io.matrix_header(res.B.n), res.B.entries.tolist()), None)
    if a.diag:
        io.write_table(a.diag, ["index", "d1", "d2"], ([i, res.d1[i], res.d2[i]] for i in range(res.B.n)))
    log.info("sinkhorn: %d iterations, residual %.3g", res.iterations, res.max_residual)
    return EXIT_OK


def cmd_bvn(a) -> int:
    dec = scaling.bvn_decompose(io.read_matrix_csv(a.inp), tol=a.tol)
    _emit(json.dumps(dec.to_json(), indent=2) + "\n", a.out)
    return EXIT_OK


def cmd_analyze(a) -> int:
    p = io.read_matrix_csv(a.matrix)
    rows = []
    if a.rho is None:
        var = analytics.per_agent_variance_iid(p, a.sigma2)
    else:
        var = analytics.equicorr_variance(p, a.sigma2, a.rho)
    rows += [["variance", i, v] for i, v in enumerate(var)]
    rows += [["incentive_derivative", i, v] for i, v in enumerate(analytics.incentive_derivatives(p, a.sigma2))]
    rows.append(["lambda_star_trace", "", analytics.lambda_star_trace(p)])
    pe = p.entries
    if np.abs(pe - pe.T).max() <= analytics.SYM_TOL:
        ds = classify(p, 1e-9).is_doubly_stochastic
        label = "lambda_star_spectral" if ds else "lambda_star_spectral_formal"
        rows.append([label, "", analytics.lambda_star_spectral(p, require_ds=ds)])
    if a.weights:
        rows.append(["lambda_star_weighted", "", analytics.lambda_star_weighted(p, io.read_vector_csv(a.weights))])
    _emit(_table(["quantity", "agent", "value"], rows), a.out)
    return EXIT_OK


def _write_two_layer(rep, out: Path) -> None:
    rows = ([r, i, int(rep.degrees[r, i]), rep.variances[r, i]]
            for r in range(rep.R) for i in range(rep.degrees.shape[1]))
    io.write_table(out, ["replicate", "node", "degree", "variance"], rows)
    io.write_json(out.with_suffix(".json"), {
        "seed": rep.seed, "B": rep.B, "R": rep.R, "elapsed_ms": rep.elapsed_ms, **rep.meta,
        "within_graph": rep.within_graph, "between_graph": rep.between_graph,
        "pooled_total": rep.pooled_total, "spread_q90_q10": rep.spread_q90_q10,
        "degree_bins": {str(k): {"count": c, "mean_var": v} for k, (c, v) in rep.degree_bins.items()},
    })


def cmd_simulate(a) -> int:
    if a.config:
        cfg = ExperimentConfig.load(a.config)
        out = Path(a.out) if a.out else Path(cfg.output_dir) / "simulate.csv"
        out.parent.mkdir(parents=True, exist_ok=True)
        rep = simulate_two_layer(cfg.graph, cfg.rule, cfg.loss_model(), cfg.R, cfg.B, cfg.seed, workers=a.threads)
        _write_two_layer(rep, out)
        return EXIT_OK
    seed = check_seed(a.seed)
    if not a.matrix and a.R >= 2:
        spec = _spec_from_args(a)
        rep = simulate_two_layer(spec, a.rule, _loss_from_args(a, spec.n), a.R, a.B, seed, workers=a.threads)
        if not a.out:
            raise UsageError("two-layer simulation needs --out")
        _write_two_layer(rep, Path(a.out))
        return EXIT_OK
    m, deg = _matrix_or_graph(a, seed)
    rep = simulate_fixed(m, _loss_from_args(a, m.n), a.B, derive_seed(seed, "cli:loss"), workers=a.threads)
    rep.degrees = deg
    rep.meta["master_seed"] = seed
    if a.out:
        rep.write(a.out)
    else:
        _emit(_table(["index", "degree", "mean", "var", "cv"], rep.rows()), None)
    return EXIT_OK


def cmd_sweep(a) -> int:
    if a.config:
        cfg = ExperimentConfig.load(a.config)
        if cfg.sweep is None:
            raise UsageError("config has no 'sweep' entry")
        g = generate(cfg.graph, seed_sequence(cfg.seed, "graph", 0))
        m, kind, grid = sharing_matrix(g, cfg.rule), cfg.sweep["kind"], np.asarray(cfg.sweep["grid"], float)
        loss, B, seed = cfg.loss_model(), cfg.B, cfg.seed
        out = a.out or str(Path(cfg.output_dir) / f"sweep_{kind}.csv")
        Path(out).parent.mkdir(parents=True, exist_ok=True)
    else:
        seed = check_seed(a.seed)
        m, _ = _matrix_or_graph(a, seed)
        kind, grid, loss, B, out = a.kind_sweep, _parse_grid(a), _loss_from_args(a, m.n), a.B, a.out
    if a.sinkhorn:
        m = scaling.sinkhorn(m).B
    run = post_mix_sweep if kind == "alpha" else lambda_sweep
    curve = run(m, grid, loss, B, derive_seed(seed, f"cli:sweep:{kind}"), workers=a.threads)
    _emit(_table([kind, "trace_var", "closed_form"], curve.rows()), out)
    return EXIT_OK


def _read_dist_or_samples(path):
    with open(path, newline="") as fh:
        first = fh.readline().strip().lower().replace(" ", "")
    if first.startswith("value,prob"):
        arr = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return DiscreteDist(arr[:, 0], arr[:, 1])
    return io.read_vector_csv(path)


def cmd_cx(a) -> int:
    small, big = _read_dist_or_samples(a.small), _read_dist_or_samples(a.big)
    if isinstance(small, DiscreteDist) and isinstance(big, DiscreteDist):
        rep, mode = cx_dominates(small, big), "exact"
    else:
        if isinstance(small, DiscreteDist) or isinstance(big, DiscreteDist):
            raise UsageError("--small and --big must both be distributions or both be samples")
        ts = np.quantile(np.concatenate([small, big]), np.linspace(0.05, 0.95, 19))
        rep, mode = empirical_cx_check(small, big, ts), "empirical"
    _emit(json.dumps({"mode": mode, "equal_means": rep.equal_means, "dominates": rep.dominates,
                      "worst_threshold": rep.worst_threshold, "worst_gap": rep.worst_gap}) + "\n", a.out)
    return EXIT_OK


def cmd_reproduce(a) -> int:
    figs = FIGURES if a.figure == "all" else (a.figure,)
    out = Path(a.out or "results")
    for f in figs:
        path = reproduce(f, a.scale, a.seed, out, workers=a.threads)
        log.info("wrote %s", path)
    return EXIT_OK


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="master seed (u64)")
    common.add_argument("--out", default=None, help="output path (stdout when omitted)")
    common.add_argument("--threads", type=int, default=1, help="worker threads, 0 = auto; never changes results")
    common.add_argument("--config", default=None, help="experiment JSON (simulate, sweep)")

    graph = argparse.ArgumentParser(add_help=False)
    graph.add_argument("--kind", default=None, help="complete|ring|star|regular|er|ba|ws")
    graph.add_argument("--n", type=int, default=None)
    graph.add_argument("--p", type=float, default=None)
    graph.add_argument("--m", type=int, default=None)
    graph.add_argument("--d", type=int, default=None)
    graph.add_argument("--k", type=int, default=None)
    graph.add_argument("--beta", type=float, default=None)
    graph.add_argument("--rule", default="equal_neighbor", choices=RULES)

    loss = argparse.ArgumentParser(add_help=False)
    loss.add_argument("--loss", default="exponential", choices=("exponential", "gaussian", "equicorrelated"))
    loss.add_argument("--rate", type=float, default=1.0)
    loss.add_argument("--mean", type=float, default=0.0)
    loss.add_argument("--sigma2", type=float, default=1.0)
    loss.add_argument("--rho", type=float, default=0.0)
    loss.add_argument("--B", type=int, default=2000)

    ap = argparse.ArgumentParser(prog="risknet", description="Linear risk sharing on networks.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", parents=[common, graph], help="generate a graph edge list")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("scale", parents=[common], help="Sinkhorn-Knopp scaling to doubly stochastic form")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--max-iter", type=int, default=100_000)
    p.add_argument("--diag", default=None, help="CSV for the diagonal scalings d1, d2")
    p.set_defaults(func=cmd_scale)

    p = sub.add_parser("bvn", parents=[common], help="Birkhoff-von Neumann decomposition")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--tol", type=float, default=1e-9)
    p.set_defaults(func=cmd_bvn)

    p = sub.add_parser("analyze", parents=[common], help="closed-form variances and optimal lambda")
    p.add_argument("--matrix", required=True)
    p.add_argument("--sigma2", type=float, default=1.0)
    p.add_argument("--rho", type=float, default=None)
    p.add_argument("--weights", default=None)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("simulate", parents=[common, graph, loss], help="Monte Carlo allocation statistics")
    p.add_argument("--matrix", default=None)
    p.add_argument("--R", type=int, default=1, help="number of random graphs (>= 2 for two-layer)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", parents=[common, graph, loss], help="alpha post-mix or lambda-mix trace curve")
    p.add_argument("--matrix", default=None)
    p.add_argument("--sweep", dest="kind_sweep", default="lambda", choices=("alpha", "lambda"))
    p.add_argument("--grid", default=None, help="comma-separated values in [0, 1]")
    p.add_argument("--n-grid", type=int, default=21)
    p.add_argument("--sinkhorn", action="store_true", help="scale the matrix to DS first")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("cx", parents=[common], help="convex-order check between two laws or samples")
    p.add_argument("--small", required=True)
    p.add_argument("--big", required=True)
    p.set_defaults(func=cmd_cx)

    p = sub.add_parser("reproduce", parents=[common], help="regenerate a figure's data")
    p.add_argument("--figure", required=True, choices=FIGURES + ("all",))
    p.add_argument("--scale", default="desk", choices=("desk", "paper"))
    p.set_defaults(func=cmd_reproduce)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    a = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if a.verbose else logging.WARNING, format="%(message)s")
    if a.threads < 0:
        ap.error("--threads must be >= 0")
    t0 = time.perf_counter()
    try:
        code = a.func(a)
    except NumericalError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, KeyError) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    print(f"risknet {a.command}: {time.perf_counter() - t0:.2f}s", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
