"""Majorization, Hardy-Littlewood-Polya transfer matrices and convex-order checks."""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionMismatch, NotMajorized
from .stochmat import SharingMatrix

MERGE_TOL = 1e-12
CX_TOL = 1e-10


def majorizes(b, a, tol: float = 1e-12) -> bool:
    """True iff a is majorized by b, i.e. b is the more spread-out vector."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise DimensionMismatch("majorization needs two 1-d vectors of equal length")
    sa = np.cumsum(np.sort(a)[::-1])
    sb = np.cumsum(np.sort(b)[::-1])
    return bool(abs(sa[-1] - sb[-1]) <= tol and np.all(sa <= sb + tol))


def t_transform(n: int, j: int, k: int, t: float) -> np.ndarray:
    """t I + (1 - t) Q with Q the transposition of coordinates j and k."""
    m = np.eye(n)
    m[j, j] = m[k, k] = t
    m[j, k] = m[k, j] = 1.0 - t
    return m


def hlp_transfer_matrix(a, b, tol: float = 1e-9) -> SharingMatrix:
    """Doubly stochastic D with D b = a, built from at most n-1 T-transforms.

    Both vectors are sorted in decreasing order; at each step the largest
    index j with b_j > a_j is paired with the next index k with b_k < a_k and
    a Robin Hood transfer closes one of the two gaps.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if not majorizes(b, a, tol):
        raise NotMajorized("a is not majorized by b")
    n = a.size
    pa = np.argsort(-a, kind="stable")
    pb = np.argsort(-b, kind="stable")
    target = a[pa]
    cur = b[pb].copy()
    t_all = np.eye(n)
    for _ in range(n - 1):
        gap = cur - target
        above = np.nonzero(gap > tol)[0]
        if above.size == 0:
            break
        j = int(above[-1])
        below = np.nonzero(gap[j + 1:] < -tol)[0]
        if below.size == 0:
            break
        k = j + 1 + int(below[0])
        delta = min(cur[j] - target[j], target[k] - cur[k])
        t = 1.0 - delta / (cur[j] - cur[k])
        step = t_transform(n, j, k, t)
        cur = step @ cur
        t_all = step @ t_all
    # D = Pa^T T Pb where (Pb b) is b sorted decreasingly
    d = np.zeros((n, n))
    d[np.ix_(pa, pb)] = t_all
    return SharingMatrix(d)


@dataclass(frozen=True)
class DiscreteDist:
    """Finite law with sorted, distinct atoms (closer than 1e-12 are merged)."""

    values: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        p = np.asarray(self.probs, dtype=float)
        if v.shape != p.shape or v.ndim != 1 or v.size == 0:
            raise ValueError("values and probs must be non-empty 1-d arrays of equal length")
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
            raise ValueError(f"probabilities must be nonnegative and sum to 1 (sum={p.sum():.17g})")
        order = np.argsort(v, kind="stable")
        v, p = v[order], p[order]
        keep_v, keep_p = [v[0]], [p[0]]
        for x, q in zip(v[1:], p[1:]):
            if x - keep_v[-1] < MERGE_TOL:
                keep_p[-1] += q
            else:
                keep_v.append(x)
                keep_p.append(q)
        v, p = np.array(keep_v), np.array(keep_p)
        nz = p > 0
        object.__setattr__(self, "values", v[nz])
        object.__setattr__(self, "probs", p[nz])

    @classmethod
    def from_atoms(cls, atoms: Iterable[tuple[float, float]]) -> "DiscreteDist":
        atoms = list(atoms)
        return cls(np.array([v for v, _ in atoms]), np.array([p for _, p in atoms]))

    @classmethod
    def point(cls, x: float) -> "DiscreteDist":
        return cls(np.array([x]), np.array([1.0]))

    @classmethod
    def uniform(cls, values: Sequence[float]) -> "DiscreteDist":
        v = np.asarray(values, dtype=float)
        return cls(v, np.full(v.size, 1.0 / v.size))

    @property
    def atoms(self) -> list[tuple[float, float]]:
        return list(zip(self.values.tolist(), self.probs.tolist()))

    def mean(self) -> float:
        return float(self.values @ self.probs)

    def variance(self) -> float:
        mu = self.mean()
        return float(((self.values - mu) ** 2) @ self.probs)


def linear_combination_law(weights, marginal: DiscreteDist) -> DiscreteDist:
    """Exact law of sum_j w_j X_j for X_j i.i.d. with the given marginal.

    Enumerates all k^n outcomes; meant for small n.
    """
    w = np.asarray(weights, dtype=float)
    vals, probs = [], []
    for idx in product(range(marginal.values.size), repeat=w.size):
        idx = np.asarray(idx)
        vals.append(float(w @ marginal.values[idx]))
        probs.append(float(np.prod(marginal.probs[idx])))
    probs = np.asarray(probs)
    return DiscreteDist(np.asarray(vals), probs / probs.sum())


def stop_loss(dist: DiscreteDist, t: float) -> float:
    """E[(X - t)_+]."""
    return float(np.maximum(dist.values - t, 0.0) @ dist.probs)


@dataclass(frozen=True)
class CxReport:
    equal_means: bool
    dominates: bool
    worst_threshold: float
    worst_gap: float


def cx_dominates(small: DiscreteDist, big: DiscreteDist) -> CxReport:
    """Decide small <=_cx big exactly for finite laws.

    With equal means, convex order is pointwise stop-loss order, and both
    stop-loss transforms are piecewise linear with kinks at atoms, so the
    union of atoms is a sufficient set of thresholds. ``worst_gap`` is the
    largest value of stop_loss(small) - stop_loss(big) (positive = violation).
    """
    equal_means = abs(small.mean() - big.mean()) <= CX_TOL
    ts = np.union1d(small.values, big.values)
    gaps = np.array([stop_loss(small, t) - stop_loss(big, t) for t in ts])
    k = int(np.argmax(gaps))
    dominates = equal_means and bool(gaps[k] <= CX_TOL)
    return CxReport(equal_means, dominates, float(ts[k]), float(gaps[k]))


def empirical_cx_check(samples_small, samples_big, thresholds) -> CxReport:
    """Monte Carlo version of :func:`cx_dominates`.

    Means must agree within two combined standard errors; the empirical
    stop-loss of ``small`` may exceed that of ``big`` by at most three
    combined standard errors at every threshold.
    """
    xs = np.asarray(samples_small, dtype=float)
    xb = np.asarray(samples_big, dtype=float)
    if xs.size == 0 or xb.size == 0:
        raise ValueError("empirical_cx_check needs non-empty samples")
    ts = np.atleast_1d(np.asarray(thresholds, dtype=float))

    def se(x):
        return x.std(ddof=1) / np.sqrt(x.size) if x.size > 1 else 0.0

    equal_means = bool(abs(xs.mean() - xb.mean()) <= 2.0 * np.hypot(se(xs), se(xb)) + 1e-15)
    worst_t, worst_gap, violated = float("nan"), -np.inf, False
    for t in ts:
        ls, lb = np.maximum(xs - t, 0.0), np.maximum(xb - t, 0.0)
        gap = ls.mean() - lb.mean()
        if gap > worst_gap:
            worst_t, worst_gap = float(t), float(gap)
        if gap > 3.0 * np.hypot(se(ls), se(lb)) + 1e-15:
            violated = True
    return CxReport(equal_means, equal_means and not violated, worst_t, float(worst_gap))
