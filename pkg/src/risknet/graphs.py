"""Graph generators and the network-induced sharing matrices."""
from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Iterator

import numpy as np

from .errors import InvalidRule, InvalidSpec, IsolatedNode, RegularGenerationFailure
from .stochmat import SharingMatrix
from .streams import as_generator

REGULAR_RETRIES = 1000

KIND_ALIASES = {
    "er": "erdos_renyi",
    "gnp": "erdos_renyi",
    "ba": "barabasi_albert",
    "ws": "watts_strogatz",
    "cycle": "ring",
}
KINDS = ("complete", "ring", "star", "regular", "erdos_renyi", "barabasi_albert", "watts_strogatz")


class Graph:
    """Undirected simple graph stored as a dense symmetric 0/1 adjacency matrix."""

    __slots__ = ("adjacency", "degrees")

    def __init__(self, adjacency):
        a = np.array(adjacency, dtype=np.uint8)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise ValueError("adjacency must be a non-empty square matrix")
        if a.max(initial=0) > 1 or not np.array_equal(a, a.T):
            raise ValueError("adjacency must be a symmetric 0/1 matrix")
        if a.diagonal().any():
            raise ValueError("self-loops are not allowed")
        a.flags.writeable = False
        self.adjacency = a
        self.degrees = a.sum(axis=1, dtype=np.int64)
        self.degrees.flags.writeable = False

    @classmethod
    def from_edges(cls, n: int, edges) -> "Graph":
        a = np.zeros((n, n), dtype=np.uint8)
        for i, j in edges:
            if i == j:
                raise ValueError(f"self-loop at node {i}")
            a[i, j] = a[j, i] = 1
        return cls(a)

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    @property
    def n_edges(self) -> int:
        return int(self.degrees.sum() // 2)

    def edges(self) -> Iterator[tuple[int, int]]:
        i, j = np.nonzero(np.triu(self.adjacency, 1))
        return zip(i.tolist(), j.tolist())

    def __eq__(self, other):
        return isinstance(other, Graph) and np.array_equal(self.adjacency, other.adjacency)

    def __repr__(self):
        return f"Graph(n={self.n}, edges={self.n_edges})"


@dataclass(frozen=True)
class GraphSpec:
    kind: str
    n: int
    p: float | None = None
    m: int | None = None
    d: int | None = None
    k: int | None = None
    beta: float | None = None

    def __post_init__(self):
        kind = KIND_ALIASES.get(self.kind, self.kind)
        object.__setattr__(self, "kind", kind)
        self.validate()

    def validate(self) -> None:
        n = self.n
        if self.kind not in KINDS:
            raise InvalidSpec(f"unknown graph kind {self.kind!r}")
        if not isinstance(n, (int, np.integer)) or n < 1:
            raise InvalidSpec(f"n must be a positive integer, got {n!r}")
        if self.kind == "ring" and n < 3:
            raise InvalidSpec("ring needs n >= 3")
        if self.kind == "star" and n < 2:
            raise InvalidSpec("star needs n >= 2")
        if self.kind == "erdos_renyi":
            if self.p is None or not 0.0 <= self.p <= 1.0:
                raise InvalidSpec(f"erdos_renyi needs p in [0, 1], got {self.p!r}")
        if self.kind == "barabasi_albert":
            if self.m is None or not 1 <= self.m < n:
                raise InvalidSpec(f"barabasi_albert needs 1 <= m < n, got m={self.m!r}")
        if self.kind == "regular":
            d = self.d
            if d is None or d < 0 or d >= n or (d * n) % 2:
                raise InvalidSpec(f"regular needs 0 <= d < n with d*n even, got d={d!r}, n={n}")
        if self.kind == "watts_strogatz":
            k, beta = self.k, self.beta
            if k is None or k < 0 or k % 2 or k >= n:
                raise InvalidSpec(f"watts_strogatz needs even 0 <= k < n, got k={k!r}")
            if beta is None or not 0.0 <= beta <= 1.0:
                raise InvalidSpec(f"watts_strogatz needs beta in [0, 1], got {beta!r}")

    def to_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None}

    @classmethod
    def from_dict(cls, d: dict) -> "GraphSpec":
        try:
            return cls(**d)
        except TypeError as exc:
            raise InvalidSpec(str(exc)) from None

    def label(self) -> str:
        extra = ",".join(f"{k}={v}" for k, v in self.to_dict().items() if k not in ("kind", "n"))
        return f"{self.kind}(n={self.n}{',' + extra if extra else ''})"


def generate(spec: GraphSpec, seed=0) -> Graph:
    """Draw a graph. ``seed`` is a u64, a SeedSequence or a Generator.

    Deterministic kinds (complete, ring, star) ignore the seed.
    """
    spec.validate()
    n = spec.n
    if spec.kind == "complete":
        return Graph(np.ones((n, n), dtype=np.uint8) - np.eye(n, dtype=np.uint8))
    if spec.kind == "ring":
        return Graph.from_edges(n, ((i, (i + 1) % n) for i in range(n)))
    if spec.kind == "star":
        return Graph.from_edges(n, ((0, i) for i in range(1, n)))
    rng = as_generator(seed)
    if spec.kind == "erdos_renyi":
        return _erdos_renyi(n, spec.p, rng)
    if spec.kind == "barabasi_albert":
        return _barabasi_albert(n, spec.m, rng)
    if spec.kind == "regular":
        return _random_regular(n, spec.d, rng)
    return _watts_strogatz(n, spec.k, spec.beta, rng)


def _erdos_renyi(n: int, p: float, rng: np.random.Generator) -> Graph:
    iu, ju = np.triu_indices(n, 1)
    keep = rng.random(iu.size) < p
    a = np.zeros((n, n), dtype=np.uint8)
    a[iu[keep], ju[keep]] = 1
    return Graph(a | a.T)


def _barabasi_albert(n: int, m: int, rng: np.random.Generator) -> Graph:
    # seed graph: clique on m nodes; `ends` lists each node once per incident edge,
    # so a uniform pick from it is a degree-proportional pick
    a = np.zeros((n, n), dtype=np.uint8)
    ends: list[int] = []
    for i in range(m):
        for j in range(i + 1, m):
            a[i, j] = a[j, i] = 1
            ends += (i, j)
    for new in range(m, n):
        targets: set[int] = set()
        while len(targets) < m:
            if ends:
                t = ends[int(rng.integers(len(ends)))]
            else:
                t = int(rng.integers(new))
            targets.add(t)
        for t in sorted(targets):
            a[new, t] = a[t, new] = 1
            ends += (new, t)
    return Graph(a)


def _random_regular(n: int, d: int, rng: np.random.Generator) -> Graph:
    """Steger-Wormald incremental pairing; dense degrees via the sparse complement."""
    if 2 * d > n - 1:
        c = _random_regular(n, n - 1 - d, rng).adjacency
        return Graph((1 - c - np.eye(n, dtype=np.uint8)).astype(np.uint8))
    for _ in range(REGULAR_RETRIES):
        g = _try_regular(n, d, rng)
        if g is not None:
            return g
    raise RegularGenerationFailure(f"no simple {d}-regular graph on {n} nodes after {REGULAR_RETRIES} tries")


def _try_regular(n: int, d: int, rng: np.random.Generator) -> Graph | None:
    a = np.zeros((n, n), dtype=np.uint8)
    stubs = np.repeat(np.arange(n), d)
    while stubs.size:
        rng.shuffle(stubs)
        u, v = stubs[0::2], stubs[1::2]
        left = []
        for x, y in zip(u.tolist(), v.tolist()):
            if x == y or a[x, y]:
                left += (x, y)
            else:
                a[x, y] = a[y, x] = 1
        if len(left) == stubs.size:
            # nothing placed this round: restart unless some suitable pair remains
            rest = np.unique(left)
            if not any(x != y and not a[x, y] for x in rest for y in rest):
                return None
        stubs = np.array(left, dtype=np.intp)
    return Graph(a)


def _watts_strogatz(n: int, k: int, beta: float, rng: np.random.Generator) -> Graph:
    a = np.zeros((n, n), dtype=np.uint8)
    for j in range(1, k // 2 + 1):
        for u in range(n):
            v = (u + j) % n
            a[u, v] = a[v, u] = 1
    for j in range(1, k // 2 + 1):
        for u in range(n):
            v = (u + j) % n
            if not a[u, v] or rng.random() >= beta:
                continue
            if a[u].sum() >= n - 1:
                continue
            while True:
                w = int(rng.integers(n))
                if w != u and not a[u, w]:
                    break
            a[u, v] = a[v, u] = 0
            a[u, w] = a[w, u] = 1
    return Graph(a)


def equal_neighbor_matrix(g: Graph) -> SharingMatrix:
    """M[i, j] = 1/(d_i + 1) for j = i or j adjacent to i."""
    a = g.adjacency.astype(float) + np.eye(g.n)
    return SharingMatrix(a / (g.degrees + 1.0)[:, None])


def random_walk_matrix(g: Graph, lazy: bool = False) -> SharingMatrix:
    """D^-1 A, or (I + D^-1 A)/2 when lazy. Isolated nodes keep their own loss."""
    a = g.adjacency.astype(float)
    deg = g.degrees.astype(float)
    p = np.divide(a, deg[:, None], out=np.zeros_like(a), where=deg[:, None] > 0)
    iso = deg == 0
    p[iso, iso] = 1.0
    if lazy:
        p = 0.5 * np.eye(g.n) + 0.5 * p
        p[iso, iso] = 1.0
    return SharingMatrix(p)


def lazy_symmetric_matrix(g: Graph) -> SharingMatrix:
    """I/2 + D^{-1/2} A D^{-1/2} / 2; row-stochastic only for regular graphs."""
    if np.any(g.degrees == 0):
        raise IsolatedNode("lazy symmetric normalisation is undefined at isolated nodes")
    s = 1.0 / np.sqrt(g.degrees.astype(float))
    return SharingMatrix(0.5 * np.eye(g.n) + 0.5 * s[:, None] * g.adjacency * s[None, :])


def naive_star_matrix(n: int) -> SharingMatrix:
    """Center (index 0) absorbs every loss: xi_0 = sum(X), xi_i = 0 otherwise.

    Row 0 is all ones, so the scheme is budget balanced (column-stochastic)
    but not row-stochastic.
    """
    if n < 2:
        raise ValueError("naive star needs n >= 2")
    m = np.zeros((n, n))
    m[0, :] = 1.0
    return SharingMatrix(m)


RULES = ("equal_neighbor", "random_walk", "lazy_random_walk", "lazy_symmetric")


def sharing_matrix(g: Graph, rule: str) -> SharingMatrix:
    if rule == "equal_neighbor":
        return equal_neighbor_matrix(g)
    if rule == "random_walk":
        return random_walk_matrix(g, lazy=False)
    if rule == "lazy_random_walk":
        return random_walk_matrix(g, lazy=True)
    if rule == "lazy_symmetric":
        return lazy_symmetric_matrix(g)
    raise InvalidRule(f"unknown sharing rule {rule!r}; expected one of {', '.join(RULES)}")
