"""Closed-form variance formulas for linear risk sharing and the optimal mixing weight."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatch,
    NonPositiveWeight,
    NotDoublyStochastic,
    NotRowStochastic,
    NotSymmetric,
    RhoOutOfRange,
)
from .stochmat import as_matrix, classify, mix, row_norms_sq

DEGENERATE = 1e-14
SYM_TOL = 1e-9


def _check_rho(rho: float, n: int) -> None:
    lo = -1.0 / (n - 1) if n > 1 else -np.inf
    if not (lo - 1e-15 <= rho < 1.0):
        raise RhoOutOfRange(f"rho must lie in [-1/(n-1), 1) = [{lo:.6g}, 1), got {rho}")


@dataclass(frozen=True)
class CovarianceModel:
    """Covariance of the loss vector: iid, equicorrelated, or an explicit matrix."""

    kind: str
    n: int
    sigma2: float = 1.0
    rho: float = 0.0
    sigma: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in ("iid", "equicorrelated", "explicit"):
            raise ValueError(f"unknown covariance kind {self.kind!r}")
        if self.n < 1:
            raise ValueError("n must be positive")
        if self.kind == "explicit":
            s = np.array(self.sigma, dtype=float)
            if s.shape != (self.n, self.n) or not np.allclose(s, s.T, atol=1e-9, rtol=0):
                raise ValueError("explicit covariance must be a symmetric n x n matrix")
            s = 0.5 * (s + s.T)
            w, v = np.linalg.eigh(s)
            if w.min() < -1e-9 * max(w.max(), 1e-300):
                raise ValueError(f"explicit covariance is not PSD (min eigenvalue {w.min():.3g})")
            if w.min() < 0:
                s = (v * np.maximum(w, 0.0)) @ v.T
            object.__setattr__(self, "sigma", s)
        else:
            if self.sigma2 <= 0:
                raise ValueError("sigma2 must be positive")
            if self.kind == "equicorrelated":
                _check_rho(self.rho, self.n)

    @classmethod
    def iid(cls, n: int, sigma2: float = 1.0) -> "CovarianceModel":
        return cls("iid", n, sigma2=sigma2)

    @classmethod
    def equicorrelated(cls, n: int, sigma2: float, rho: float) -> "CovarianceModel":
        return cls("equicorrelated", n, sigma2=sigma2, rho=rho)

    @classmethod
    def explicit(cls, sigma) -> "CovarianceModel":
        s = np.asarray(sigma, dtype=float)
        return cls("explicit", s.shape[0], sigma=s)

    def matrix(self) -> np.ndarray:
        if self.kind == "explicit":
            return self.sigma
        if self.kind == "iid":
            return self.sigma2 * np.eye(self.n)
        return self.sigma2 * ((1.0 - self.rho) * np.eye(self.n) + self.rho * np.ones((self.n, self.n)))


def _cov_for(cov, n: int) -> np.ndarray:
    s = cov.matrix() if isinstance(cov, CovarianceModel) else np.asarray(cov, dtype=float)
    if s.shape != (n, n):
        raise DimensionMismatch(f"covariance is {s.shape}, matrix is {n}x{n}")
    return s


def covariance_transform(m, cov) -> np.ndarray:
    """Var[M X] = M Sigma M^T."""
    m = as_matrix(m)
    s = _cov_for(cov, m.n)
    out = m.entries @ s @ m.entries.T
    return 0.5 * (out + out.T)


def per_agent_variance_iid(m, sigma2: float = 1.0) -> np.ndarray:
    if sigma2 <= 0:
        raise ValueError("sigma2 must be positive")
    return sigma2 * row_norms_sq(m)


@dataclass(frozen=True)
class LambdaQuadratic:
    """Variance as c0 + c1 lam + c2 lam^2."""

    c0: float
    c1: float
    c2: float

    def __call__(self, lam):
        lam = np.asarray(lam, dtype=float)
        return self.c0 + self.c1 * lam + self.c2 * lam**2

    def derivative(self, lam):
        return self.c1 + 2.0 * self.c2 * np.asarray(lam, dtype=float)

    def argmin(self) -> float:
        """Minimiser over [0, 1]; 0 when the quadratic is flat."""
        if self.c2 <= DEGENERATE and abs(self.c1) <= DEGENERATE:
            return 0.0
        if self.c2 <= DEGENERATE:
            return 1.0 if self.c1 < 0 else 0.0
        return float(np.clip(-self.c1 / (2.0 * self.c2), 0.0, 1.0))


def lambda_quadratic_agent(p, i: int, sigma2: float = 1.0) -> LambdaQuadratic:
    p = as_matrix(p)
    if not 0 <= i < p.n:
        raise IndexError(f"agent index {i} out of range for n={p.n}")
    d = p.entries[i, i]
    a = float(p.entries[i] @ p.entries[i])
    return LambdaQuadratic(sigma2, 2.0 * sigma2 * (d - 1.0), sigma2 * (1.0 + a - 2.0 * d))


def trace_quadratic(p, cov) -> LambdaQuadratic:
    """tr Var[M(lam) X] = (1-lam)^2 tr S + 2 lam (1-lam) tr(P S) + lam^2 tr(P S P^T)."""
    p = as_matrix(p)
    s = _cov_for(cov, p.n)
    pe = p.entries
    t0 = float(np.trace(s))
    t1 = float(np.trace(pe @ s))
    t2 = float(np.einsum("ij,ij->", pe @ s, pe))
    return LambdaQuadratic(t0, 2.0 * (t1 - t0), t0 - 2.0 * t1 + t2)


def trace_variance_lambda(p, lam: float, cov) -> float:
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda must lie in [0, 1], got {lam}")
    return float(trace_quadratic(p, cov)(lam))


def _project(num: float, den: float) -> float:
    if den < DEGENERATE:
        return 0.0
    return float(np.clip(num / den, 0.0, 1.0))


def lambda_star_trace(p) -> float:
    """Planner's optimum: clip((n - tr P) / ||P - I||_F^2); 0 when P = I.

    The denominator is evaluated as (n - tr P) + (||P||_F^2 - tr P) with
    correctly rounded sums, so the ratio reaches exactly 1 whenever
    ||P||_F^2 <= tr P (e.g. ring and complete pooling).
    """
    pe = as_matrix(p).entries
    d = np.diag(pe)
    num = math.fsum(1.0 - d)
    excess = math.fsum((pe * pe).ravel()) - math.fsum(d)
    return _project(num, num + excess)


def symmetric_spectrum(p) -> np.ndarray:
    """Eigenvalues of a (numerically) symmetric matrix, sorted descending."""
    pe = as_matrix(p).entries
    if np.abs(pe - pe.T).max() > SYM_TOL:
        raise NotSymmetric("matrix is not symmetric within 1e-9")
    return np.linalg.eigvalsh(0.5 * (pe + pe.T))[::-1]


def lambda_star_spectral(p, require_ds: bool = True) -> float:
    """clip(sum(1 - mu_k) / sum(1 - mu_k)^2) over the spectrum of symmetric P.

    Eigenvalues equal to one contribute nothing to either sum. With
    ``require_ds=False`` the formula is evaluated formally on any symmetric P.
    """
    p = as_matrix(p)
    mu = symmetric_spectrum(p)
    if require_ds and not classify(p, SYM_TOL).is_doubly_stochastic:
        raise NotDoublyStochastic("spectral lambda* needs a doubly stochastic P")
    gap = 1.0 - mu
    return _project(float(gap.sum()), float((gap**2).sum()))


def lambda_star_weighted(p, w) -> float:
    """clip(sum w_i (1 - d_i) / sum w_i (1 + a_i - 2 d_i)); 0 when the denominator vanishes."""
    p = as_matrix(p)
    w = np.asarray(w, dtype=float)
    if w.shape != (p.n,):
        raise DimensionMismatch(f"weights have shape {w.shape}, expected ({p.n},)")
    if np.any(w <= 0):
        raise NonPositiveWeight("weights must be strictly positive")
    d = np.diag(p.entries)
    a = row_norms_sq(p)
    return _project(float(w @ (1.0 - d)), float(w @ (1.0 + a - 2.0 * d)))


def equicorr_variance(m, sigma2: float, rho: float) -> np.ndarray:
    """sigma2 ((1 - rho) ||M_i||^2 + rho) for row-stochastic M."""
    m = as_matrix(m)
    if not classify(m, 1e-9).is_row_stochastic:
        raise NotRowStochastic("equicorrelated variance formula needs a row-stochastic matrix")
    _check_rho(rho, m.n)
    return sigma2 * ((1.0 - rho) * row_norms_sq(m) + rho)


@dataclass(frozen=True)
class InverseDegreeBounds:
    lower: float
    upper: float
    exact: float


def inverse_degree_bounds(degree_counts, K: int) -> InverseDegreeBounds:
    """Jensen lower bound and truncation upper bound on E[1/(d+1)].

    ``degree_counts`` maps degree -> count (a dict, or an array indexed by
    degree as returned by ``np.bincount``). The upper bound is reported raw
    and may exceed 1.
    """
    if isinstance(degree_counts, dict):
        deg = np.array(list(degree_counts.keys()), dtype=float)
        cnt = np.array(list(degree_counts.values()), dtype=float)
    else:
        cnt = np.asarray(degree_counts, dtype=float)
        deg = np.arange(cnt.size, dtype=float)
    if cnt.size == 0 or cnt.sum() <= 0:
        raise ValueError("degree histogram is empty")
    if np.any(cnt < 0) or np.any(deg < 0):
        raise ValueError("degrees and counts must be nonnegative")
    if K < 0:
        raise ValueError("K must be a nonnegative integer")
    prob = cnt / cnt.sum()
    exact = float(prob @ (1.0 / (deg + 1.0)))
    lower = 1.0 / (float(prob @ deg) + 1.0)
    upper = float(prob[deg <= K].sum()) + 1.0 / (K + 1.0)
    return InverseDegreeBounds(lower=lower, upper=upper, exact=exact)


def rep_agent_variance(cov_of_xi) -> float:
    """Variance of a uniformly drawn agent's allocation: tr(V)/n."""
    c = np.asarray(cov_of_xi, dtype=float)
    if c.ndim != 2 or c.shape[0] != c.shape[1]:
        raise DimensionMismatch("covariance must be square")
    return float(np.trace(c)) / c.shape[0]


def hub_gap(variances, degrees, alpha: float) -> tuple[float, float]:
    """Mean variance over the floor(alpha n) highest-degree nodes vs the rest.

    Ties in degree are broken by ascending index.
    """
    v = np.asarray(variances, dtype=float)
    d = np.asarray(degrees)
    if v.shape != d.shape or v.ndim != 1:
        raise DimensionMismatch("variances and degrees must be 1-d of equal length")
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    k = int(np.floor(alpha * v.size))
    if k == 0 or k == v.size:
        raise ValueError(f"alpha={alpha} selects {k} of {v.size} nodes; both groups must be non-empty")
    order = np.lexsort((np.arange(v.size), -d))
    return float(v[order[:k]].mean()), float(v[order[k:]].mean())


def incentive_derivatives(p, sigma2: float = 1.0) -> np.ndarray:
    """d/dlam Var(xi_i(lam)) at lam = 0: 2 sigma2 (p_ii - 1)."""
    return 2.0 * sigma2 * (np.diag(as_matrix(p).entries) - 1.0)


def mixed_variance_iid(p, lam: float, sigma2: float = 1.0) -> np.ndarray:
    """Per-agent variance of the lambda-mix under iid losses."""
    return per_agent_variance_iid(mix(lam, p), sigma2)
