"""Nonnegative sharing matrices and the elementary operators built on them."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch

NEG_TOL = 1e-12
DEFAULT_TOL = 1e-9


class SharingMatrix:
    """Immutable dense n x n nonnegative matrix with cached line sums.

    Entries in ``[-1e-12, 0)`` are treated as floating-point dust and clamped
    to zero; anything more negative is rejected.
    """

    __slots__ = ("_a", "row_sums", "col_sums")

    def __init__(self, entries):
        a = np.array(entries, dtype=float, copy=True)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise ValueError(f"sharing matrix must be square and non-empty, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValueError("sharing matrix has non-finite entries")
        if a.min() < -NEG_TOL:
            raise ValueError(f"negative entry {a.min():.3g} in sharing matrix")
        a[a < 0] = 0.0
        a.flags.writeable = False
        self._a = a
        self.row_sums = a.sum(axis=1)
        self.col_sums = a.sum(axis=0)
        self.row_sums.flags.writeable = False
        self.col_sums.flags.writeable = False

    @property
    def n(self) -> int:
        return self._a.shape[0]

    @property
    def entries(self) -> np.ndarray:
        return self._a

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self._a
        return self._a.astype(dtype)

    def __getitem__(self, idx):
        return self._a[idx]

    def __eq__(self, other):
        if not isinstance(other, SharingMatrix):
            return NotImplemented
        return np.array_equal(self._a, other._a)

    def __hash__(self):
        return hash(self._a.tobytes())

    def __repr__(self):
        return f"SharingMatrix(n={self.n})"

    @property
    def T(self) -> "SharingMatrix":
        return SharingMatrix(self._a.T)

    def __matmul__(self, other):
        if isinstance(other, SharingMatrix):
            return SharingMatrix(self._a @ other._a)
        return self._a @ np.asarray(other, dtype=float)


def as_matrix(m) -> SharingMatrix:
    return m if isinstance(m, SharingMatrix) else SharingMatrix(m)


@dataclass(frozen=True)
class StochClass:
    is_row_stochastic: bool
    is_col_stochastic: bool
    is_doubly_stochastic: bool
    is_permutation: bool


def classify(m, tol: float = DEFAULT_TOL) -> StochClass:
    """Classify ``m`` as row-, column-, doubly-stochastic and/or a permutation.

    Each line sum must be within ``tol`` of 1; the permutation flag further
    needs every entry within ``tol`` of 0 or 1.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    m = as_matrix(m)
    rs = bool(np.all(np.abs(m.row_sums - 1.0) <= tol))
    cs = bool(np.all(np.abs(m.col_sums - 1.0) <= tol))
    ds = rs and cs
    a = m.entries
    zero_one = np.minimum(np.abs(a), np.abs(a - 1.0)) <= tol
    return StochClass(rs, cs, ds, ds and bool(zero_one.all()))


def identity(n: int) -> SharingMatrix:
    return SharingMatrix(np.eye(n))


def averaging_operator(n: int) -> SharingMatrix:
    """Complete-pooling operator J/n."""
    if n < 1:
        raise ValueError("n must be at least 1")
    return SharingMatrix(np.full((n, n), 1.0 / n))


def permutation_matrix(perm: Sequence[int]) -> SharingMatrix:
    """Matrix with P[i, perm[i]] = 1."""
    p = np.asarray(perm)
    n = p.size
    if n < 1 or p.ndim != 1 or not np.issubdtype(p.dtype, np.integer):
        raise ValueError("perm must be a non-empty 1-d integer sequence")
    if not np.array_equal(np.sort(p), np.arange(n)):
        raise ValueError(f"not a bijection of 0..{n - 1}: {list(p)}")
    out = np.zeros((n, n))
    out[np.arange(n), p] = 1.0
    return SharingMatrix(out)


def apply(m, x) -> np.ndarray:
    """Allocation M x of the loss vector x."""
    m = as_matrix(m)
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != m.n:
        raise DimensionMismatch(f"loss vector has length {x.shape[-1]}, matrix is {m.n}x{m.n}")
    return m.entries @ x


def mix(lam: float, p) -> SharingMatrix:
    """(1 - lam) I + lam P."""
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda must lie in [0, 1], got {lam}")
    p = as_matrix(p)
    return SharingMatrix((1.0 - lam) * np.eye(p.n) + lam * p.entries)


def row_norms_sq(m) -> np.ndarray:
    a = as_matrix(m).entries
    return np.einsum("ij,ij->i", a, a)
