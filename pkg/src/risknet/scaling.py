"""Sinkhorn-Knopp scaling, total-support detection and Birkhoff-von Neumann decomposition."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, maximum_bipartite_matching

from .errors import (
    DimensionMismatch,
    MatchingFailure,
    NoTotalSupport,
    NotDoublyStochastic,
    NumericalError,
    ZeroLine,
)
from .stochmat import SharingMatrix, as_matrix, classify

ZERO_LINE = 1e-300
STALL_WINDOW = 1000
STALL_FACTOR = 0.999


def perfect_matching(support: np.ndarray) -> np.ndarray | None:
    """Row -> column perfect matching on a boolean support pattern, or None.

    Hopcroft-Karp via scipy.
    """
    match = maximum_bipartite_matching(csr_matrix(support.astype(np.int8)), perm_type="column")
    if np.any(match < 0):
        return None
    return np.asarray(match, dtype=np.intp)


def has_total_support(a) -> bool:
    """True iff every positive entry lies on a positive diagonal.

    Uses the Dulmage-Mendelsohn characterisation: given one perfect matching
    ``mate``, the edge (i, j) belongs to some perfect matching exactly when row
    i and row ``mate^-1(j)`` are strongly connected in the digraph with an arc
    i -> mate^-1(j) for every positive entry (i, j).
    """
    pos = as_matrix(a).entries > 0
    if not pos.any():
        return True
    mate = perfect_matching(pos)
    if mate is None:
        return False
    n = pos.shape[0]
    row_of_col = np.empty(n, dtype=np.intp)
    row_of_col[mate] = np.arange(n)
    rows, cols = np.nonzero(pos)
    heads = row_of_col[cols]
    g = csr_matrix((np.ones(rows.size), (rows, heads)), shape=(n, n))
    _, label = connected_components(g, directed=True, connection="strong")
    return bool(np.all(label[rows] == label[heads]))


@dataclass
class SinkhornResult:
    d1: np.ndarray
    d2: np.ndarray
    B: SharingMatrix
    iterations: int
    max_residual: float


def _line_residual(b: np.ndarray) -> float:
    return float(max(np.abs(b.sum(axis=1) - 1.0).max(), np.abs(b.sum(axis=0) - 1.0).max()))


def sinkhorn(
    a,
    tol: float = 1e-10,
    max_iter: int = 100_000,
    *,
    d2_init=None,
    check_support: bool = True,
) -> SinkhornResult:
    """Scale ``a`` to doubly stochastic form diag(d1) A diag(d2).

    One iteration is a row normalisation followed by a column normalisation.
    ``d2_init`` sets the starting column scaling (all ones by default).
    Raises ZeroLine for an empty row/column and NoTotalSupport when the
    pattern cannot be scaled or the residual stalls.
    """
    if tol <= 0 or max_iter < 1:
        raise ValueError("tol must be positive and max_iter at least 1")
    a = as_matrix(a)
    x = a.entries
    if a.row_sums.min() < ZERO_LINE or a.col_sums.min() < ZERO_LINE:
        raise ZeroLine("matrix has an all-zero row or column")
    if check_support and not has_total_support(a):
        raise NoTotalSupport("matrix lacks total support; no diagonal scaling is doubly stochastic")

    d1 = np.ones(a.n)
    d2 = np.ones(a.n) if d2_init is None else np.array(d2_init, dtype=float)
    if d2.shape != (a.n,) or np.any(d2 <= 0):
        raise ValueError("d2_init must be a positive vector of length n")

    checkpoint = np.inf
    res = np.inf
    it = 0
    while it < max_iter:
        it += 1
        d1 = 1.0 / (x @ d2)
        d2 = 1.0 / (x.T @ d1)
        # columns are normalised by construction; rows carry the residual
        res = max(
            float(np.abs(d1 * (x @ d2) - 1.0).max()),
            float(np.abs(d2 * (x.T @ d1) - 1.0).max()),
        )
        if res <= tol:
            break
        if it % STALL_WINDOW == 0:
            if res > STALL_FACTOR * checkpoint:
                raise NoTotalSupport(f"Sinkhorn residual stalled at {res:.3g} after {it} iterations")
            checkpoint = res
    else:
        # without total support the residual decays only like 1/k, too slowly for the stall rule
        if not check_support and not has_total_support(a):
            raise NoTotalSupport(f"Sinkhorn did not converge in {max_iter} iterations; matrix lacks total support")
        raise NumericalError(f"Sinkhorn did not reach tol={tol:g} in {max_iter} iterations (residual {res:.3g})")

    b = d1[:, None] * x * d2[None, :]
    return SinkhornResult(d1=d1, d2=d2, B=SharingMatrix(b), iterations=it, max_residual=_line_residual(b))


@dataclass
class BvnDecomposition:
    terms: list[tuple[float, np.ndarray]] = field(default_factory=list)
    residual: float = 0.0

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for w, _ in self.terms])

    def to_json(self) -> dict:
        return {
            "terms": [{"weight": float(w), "perm": [int(k) for k in p]} for w, p in self.terms],
            "residual": float(self.residual),
        }


def reconstruct(dec: BvnDecomposition, n: int) -> SharingMatrix:
    out = np.zeros((n, n))
    rows = np.arange(n)
    for w, perm in dec.terms:
        perm = np.asarray(perm)
        if perm.shape != (n,) or not np.array_equal(np.sort(perm), rows):
            raise DimensionMismatch(f"term permutation is not a bijection of 0..{n - 1}")
        out[rows, perm] += w
    return SharingMatrix(out)


def bvn_decompose(d, tol: float = 1e-9) -> BvnDecomposition:
    """Greedy Birkhoff extraction of a doubly stochastic matrix.

    Each step takes whatever perfect matching the matcher returns on the
    entries above ``tol`` and removes it with the bottleneck weight.
    """
    d = as_matrix(d)
    if not classify(d, tol).is_doubly_stochastic:
        raise NotDoublyStochastic("input to bvn_decompose is not doubly stochastic within tol")
    n = d.n
    r = np.array(d.entries)
    rows = np.arange(n)
    terms: list[tuple[float, np.ndarray]] = []
    while r.sum() / n >= tol:
        perm = perfect_matching(r > tol)
        if perm is None:
            raise MatchingFailure(
                f"no perfect matching on residual support after {len(terms)} terms "
                f"(remaining row mass {r.sum() / n:.3g})"
            )
        picked = r[rows, perm]
        k = int(np.argmin(picked))
        w = float(picked[k])
        r[rows, perm] -= w
        r[k, perm[k]] = 0.0
        np.maximum(r, 0.0, out=r)
        terms.append((w, perm))
    dec = BvnDecomposition(terms=terms)
    dec.residual = float(np.abs(reconstruct(dec, n).entries - d.entries).max())
    return dec
