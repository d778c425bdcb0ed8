"""Seeded Monte Carlo engine for fixed and random sharing networks.

Draws are generated in fixed-size chunks. Chunk ``c`` of replicate ``r``
uses the stream ``(seed, "loss", r, c)``, so chunk contents do not depend on
how many workers run them, and chunk moments are merged with Chan's pairwise
update in chunk order. Results are therefore bit-identical for any worker
count.
"""
from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import io
from .analytics import CovarianceModel, trace_variance_lambda
from .errors import DimensionMismatch, InvalidRule
from .graphs import GraphSpec, generate, sharing_matrix
from .stochmat import as_matrix, averaging_operator, mix
from .streams import check_seed, seed_sequence, stream

CHUNK = 512
CV_MEAN_FLOOR = 1e-12
FAMILIES = ("exponential", "gaussian", "equicorrelated_gaussian")
TWO_LAYER_RULES = ("equal_neighbor", "random_walk", "lazy_random_walk")


@dataclass(frozen=True)
class LossModel:
    family: str
    n: int
    rate: float = 1.0
    mean: float = 0.0
    sigma2: float = 1.0
    rho: float = 0.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown loss family {self.family!r}")
        if self.n < 1:
            raise ValueError("n must be positive")
        if self.family == "exponential" and self.rate <= 0:
            raise ValueError("exponential rate must be positive")
        if self.family != "exponential" and self.sigma2 <= 0:
            raise ValueError("sigma2 must be positive")
        if self.family == "equicorrelated_gaussian":
            lo = -1.0 / (self.n - 1) if self.n > 1 else -np.inf
            if not lo - 1e-15 <= self.rho < 1.0:
                raise ValueError(f"rho must lie in [{lo:.6g}, 1), got {self.rho}")

    @classmethod
    def exponential(cls, n: int, rate: float = 1.0) -> "LossModel":
        return cls("exponential", n, rate=rate)

    @classmethod
    def gaussian(cls, n: int, mean: float = 0.0, sigma2: float = 1.0) -> "LossModel":
        return cls("gaussian", n, mean=mean, sigma2=sigma2)

    @classmethod
    def equicorrelated(cls, n: int, mean: float = 0.0, sigma2: float = 1.0, rho: float = 0.0) -> "LossModel":
        return cls("equicorrelated_gaussian", n, mean=mean, sigma2=sigma2, rho=rho)

    def with_n(self, n: int) -> "LossModel":
        return LossModel(self.family, n, self.rate, self.mean, self.sigma2, self.rho)

    @property
    def mean_value(self) -> float:
        return 1.0 / self.rate if self.family == "exponential" else self.mean

    @property
    def variance(self) -> float:
        return 1.0 / self.rate**2 if self.family == "exponential" else self.sigma2

    def covariance(self) -> CovarianceModel:
        if self.family == "equicorrelated_gaussian":
            return CovarianceModel.equicorrelated(self.n, self.sigma2, self.rho)
        return CovarianceModel.iid(self.n, self.variance)

    def to_dict(self) -> dict:
        d = {"family": self.family, "n": self.n}
        if self.family == "exponential":
            d["rate"] = self.rate
        else:
            d.update(mean=self.mean, sigma2=self.sigma2)
            if self.family == "equicorrelated_gaussian":
                d["rho"] = self.rho
        return d

    @classmethod
    def from_dict(cls, d: dict, n: int | None = None) -> "LossModel":
        d = dict(d)
        if n is not None:
            d["n"] = n
        return cls(**d)


def draw_losses(model: LossModel, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """One loss vector (shape (n,)) or ``size`` of them (shape (size, n))."""
    shape = (model.n,) if size is None else (size, model.n)
    if model.family == "exponential":
        return rng.exponential(1.0 / model.rate, size=shape)
    z = rng.standard_normal(shape)
    sd = np.sqrt(model.sigma2)
    if model.family == "gaussian" or model.rho == 0.0:
        return model.mean + sd * z
    rho = model.rho
    if rho > 0:
        common = rng.standard_normal(shape[:-1] + (1,))
        return model.mean + sd * (np.sqrt(rho) * common + np.sqrt(1.0 - rho) * z)
    # rho < 0 has no shared-factor form; shrink the common direction of z instead
    n = model.n
    a = np.sqrt(1.0 - rho)
    b = -a + np.sqrt(a * a + n * rho)
    return model.mean + sd * (a * z + b * z.mean(axis=-1, keepdims=True))


# ---------------------------------------------------------------- moments


@dataclass
class Moments:
    """Count, mean and centred second moment (vector or full co-moment matrix)."""

    count: int
    mean: np.ndarray
    m2: np.ndarray

    @classmethod
    def of(cls, y: np.ndarray, full: bool = False) -> "Moments":
        mu = y.mean(axis=0)
        c = y - mu
        return cls(y.shape[0], mu, c.T @ c if full else np.einsum("ij,ij->j", c, c))

    def merge(self, other: "Moments") -> "Moments":
        na, nb = self.count, other.count
        n = na + nb
        delta = other.mean - self.mean
        mean = self.mean + delta * (nb / n)
        corr = np.outer(delta, delta) if self.m2.ndim == 2 else delta * delta
        return Moments(n, mean, self.m2 + other.m2 + corr * (na * nb / n))

    def var(self, ddof: int = 1) -> np.ndarray:
        return self.m2 / (self.count - ddof)


def _chunk_sizes(B: int) -> list[int]:
    full, rest = divmod(B, CHUNK)
    return [CHUNK] * full + ([rest] if rest else [])


def _run_chunks(jobs, workers: int):
    if workers == 1 or len(jobs) == 1:
        return [job() for job in jobs]
    with ThreadPoolExecutor(max_workers=workers if workers > 0 else None) as pool:
        futs = [pool.submit(job) for job in jobs]
        return [f.result() for f in futs]


def _reduce(parts: list[Moments]) -> Moments:
    acc = parts[0]
    for p in parts[1:]:
        acc = acc.merge(p)
    return acc


def allocation_moments(m, model: LossModel, B: int, seed: int, *, replicate: int = 0,
                       full: bool = False, workers: int = 1) -> Moments:
    """Moments of xi = M X over B draws; ``m=None`` means the identity (raw losses)."""
    a = None if m is None else as_matrix(m).entries

    def job(c: int, size: int):
        def run():
            x = draw_losses(model, stream(seed, "loss", replicate, c), size)
            return Moments.of(x if a is None else x @ a.T, full)
        return run

    jobs = [job(c, s) for c, s in enumerate(_chunk_sizes(B))]
    return _reduce(_run_chunks(jobs, workers))


def simulate_draws(m, model: LossModel, B: int, seed: int, *, replicate: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Raw (X, xi) draws from exactly the streams the moment engine uses."""
    m = as_matrix(m)
    xs = [draw_losses(model, stream(seed, "loss", replicate, c), s) for c, s in enumerate(_chunk_sizes(B))]
    x = np.vstack(xs)
    return x, x @ m.entries.T


# ---------------------------------------------------------------- fixed matrix


@dataclass
class SimReport:
    per_node_mean: np.ndarray
    per_node_var: np.ndarray
    per_node_cv: np.ndarray
    trace_var: float
    B: int
    seed: int
    elapsed_ms: float
    degrees: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def rows(self):
        for i in range(self.per_node_mean.size):
            deg = "" if self.degrees is None else int(self.degrees[i])
            yield [i, deg, float(self.per_node_mean[i]), float(self.per_node_var[i]), float(self.per_node_cv[i])]

    def write(self, csv_path) -> Path:
        """Write the per-node CSV and a JSON sidecar; returns the sidecar path."""
        csv_path = Path(csv_path)
        io.write_table(csv_path, ["index", "degree", "mean", "var", "cv"], self.rows())
        side = csv_path.with_suffix(".json")
        io.write_json(side, {"seed": self.seed, "B": self.B, "elapsed_ms": self.elapsed_ms,
                             "trace_var": self.trace_var, **self.meta})
        return side


def coefficient_of_variation(mean: np.ndarray, var: np.ndarray) -> np.ndarray:
    """std/mean, NaN where |mean| < 1e-12 (e.g. naive-star leaves)."""
    mean = np.asarray(mean, dtype=float)
    ok = np.abs(mean) >= CV_MEAN_FLOOR
    out = np.full(mean.shape, np.nan)
    out[ok] = np.sqrt(np.asarray(var)[ok]) / mean[ok]
    return out


def simulate_fixed(m, model: LossModel, B: int, seed: int, *, workers: int = 1) -> SimReport:
    """Per-node mean, unbiased variance and CV of xi = M X over B draws."""
    m = as_matrix(m)
    if model.n != m.n:
        raise DimensionMismatch(f"loss model has n={model.n}, matrix is {m.n}x{m.n}")
    if B < 2:
        raise ValueError("B must be at least 2")
    seed = check_seed(seed)
    t0 = time.perf_counter()
    mom = allocation_moments(m, model, B, seed, workers=workers)
    var = mom.var()
    return SimReport(
        per_node_mean=mom.mean,
        per_node_var=var,
        per_node_cv=coefficient_of_variation(mom.mean, var),
        trace_var=float(var.sum()),
        B=B,
        seed=seed,
        elapsed_ms=1e3 * (time.perf_counter() - t0),
        meta={"loss": model.to_dict()},
    )


# ---------------------------------------------------------------- two-layer


@dataclass
class TwoLayerReport:
    degree_bins: dict[int, tuple[int, float]]
    decomposition: tuple[float, float]
    spread_q90_q10: float
    pooled_total: float
    degrees: np.ndarray
    variances: np.ndarray
    spreads: np.ndarray
    R: int
    B: int
    seed: int
    elapsed_ms: float
    meta: dict = field(default_factory=dict)

    @property
    def within_graph(self) -> float:
        return self.decomposition[0]

    @property
    def between_graph(self) -> float:
        return self.decomposition[1]


def _degree_bins(degrees: np.ndarray, variances: np.ndarray) -> dict[int, tuple[int, float]]:
    d = degrees.ravel()
    v = variances.ravel()
    out = {}
    for k in np.unique(d):
        sel = d == k
        out[int(k)] = (int(sel.sum()), float(v[sel].mean()))
    return out


def simulate_two_layer(spec: GraphSpec, rule: str, model: LossModel, R: int, B: int, seed: int,
                       *, workers: int = 1) -> TwoLayerReport:
    """R independent graphs, B loss draws on each.

    The variance split uses population divisors so that
    within + between equals the pooled trace of all R*B draws exactly:
    within is the mean of per-graph covariance traces, between the trace of
    the covariance of per-graph mean vectors.
    """
    if rule not in TWO_LAYER_RULES:
        raise InvalidRule(f"rule must be one of {', '.join(TWO_LAYER_RULES)}, got {rule!r}")
    if R < 2 or B < 2:
        raise ValueError("R and B must both be at least 2")
    seed = check_seed(seed)
    model = model.with_n(spec.n)
    t0 = time.perf_counter()

    def replicate(r: int):
        def run():
            g = generate(spec, seed_sequence(seed, "graph", r))
            mom = allocation_moments(sharing_matrix(g, rule), model, B, seed, replicate=r)
            return np.asarray(g.degrees), mom
        return run

    results = _run_chunks([replicate(r) for r in range(R)], workers)
    degrees = np.stack([d for d, _ in results])
    moms = [m for _, m in results]
    variances = np.stack([m.var(ddof=1) for m in moms])
    within = float(np.mean([m.m2.sum() / m.count for m in moms]))
    means = np.stack([m.mean for m in moms])
    between = float(means.var(axis=0, ddof=0).sum())
    pooled = _reduce(moms)
    pooled_total = float(pooled.m2.sum() / pooled.count)
    q90, q10 = np.quantile(variances, [0.9, 0.1], axis=1)
    spreads = q90 - q10
    return TwoLayerReport(
        degree_bins=_degree_bins(degrees, variances),
        decomposition=(within, between),
        spread_q90_q10=float(spreads.mean()),
        pooled_total=pooled_total,
        degrees=degrees,
        variances=variances,
        spreads=spreads,
        R=R,
        B=B,
        seed=seed,
        elapsed_ms=1e3 * (time.perf_counter() - t0),
        meta={"spec": spec.to_dict(), "rule": rule, "loss": model.to_dict()},
    )


# ---------------------------------------------------------------- sweeps


@dataclass
class SweepCurve:
    kind: str
    grid: np.ndarray
    trace_var: np.ndarray
    closed_form: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def rows(self):
        for k, x in enumerate(self.grid):
            cf = "" if self.closed_form is None else float(self.closed_form[k])
            yield [float(x), float(self.trace_var[k]), cf]


def _check_grid(grid, name: str) -> np.ndarray:
    g = np.asarray(grid, dtype=float)
    if g.ndim != 1 or g.size == 0 or g.min() < 0 or g.max() > 1:
        raise ValueError(f"{name} grid must be a non-empty vector within [0, 1]")
    if np.any(np.diff(g) < 0):
        raise ValueError(f"{name} grid must be sorted ascending")
    return g


def _trace_of_map(d: np.ndarray, s: np.ndarray) -> float:
    """tr(D S D^T), the sample-covariance trace of the draws D y."""
    return float(np.einsum("ij,ij->", d @ s, d))


def post_mix_sweep(m, alphas, model: LossModel, B: int, seed: int, *, workers: int = 1) -> SweepCurve:
    """Trace of Var(D(alpha) M X) with D(alpha) = alpha I + (1 - alpha) J/n.

    All alphas share the same draws: the sample covariance of D xi is exactly
    D S D^T with S the sample covariance of xi.
    """
    m = as_matrix(m)
    alphas = _check_grid(alphas, "alpha")
    if model.n != m.n:
        raise DimensionMismatch(f"loss model has n={model.n}, matrix is {m.n}x{m.n}")
    s = allocation_moments(m, model, B, check_seed(seed), full=True, workers=workers).var()
    j = averaging_operator(m.n).entries
    traces = np.array([_trace_of_map(a * np.eye(m.n) + (1.0 - a) * j, s) for a in alphas])
    return SweepCurve("alpha", alphas, traces, meta={"B": B, "seed": seed, "loss": model.to_dict()})


def lambda_sweep(p, lambdas, model: LossModel, B: int, seed: int, *, workers: int = 1) -> SweepCurve:
    """Simulated and closed-form trace of Var(((1 - lam) I + lam P) X) over a lambda grid."""
    p = as_matrix(p)
    lambdas = _check_grid(lambdas, "lambda")
    if model.n != p.n:
        raise DimensionMismatch(f"loss model has n={model.n}, matrix is {p.n}x{p.n}")
    s = allocation_moments(None, model, B, check_seed(seed), full=True, workers=workers).var()
    sim = np.array([_trace_of_map(mix(lam, p).entries, s) for lam in lambdas])
    cov = model.covariance()
    closed = np.array([trace_variance_lambda(p, float(lam), cov) for lam in lambdas])
    return SweepCurve("lambda", lambdas, sim, closed, meta={"B": B, "seed": seed, "loss": model.to_dict()})
