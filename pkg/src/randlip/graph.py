"""Undirected simple graphs, BFS balls and disjoint-ball packing.

Vertices are dense integer ids ``0..n-1``. Adjacency is stored in CSR form
(``indptr``/``indices``) with sorted neighbor lists, which is what the
numba kernels in :mod:`randlip.mcmc` consume directly.
"""

from __future__ import annotations

import math
import re
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp


class DisconnectedGraphError(ValueError):
    def __init__(self, vertex: int):
        super().__init__(f"graph is disconnected: vertex {vertex} is unreachable")
        self.vertex = vertex


class Graph:
    """Immutable undirected simple graph."""

    __slots__ = ("_n", "_indptr", "_indices", "_adj")

    def __init__(self, vertex_count: int, edges: Iterable[tuple[int, int]]):
        n = int(vertex_count)
        if n < 1:
            raise ValueError("graph needs at least one vertex")
        nbrs: list[set[int]] = [set() for _ in range(n)]
        for u, v in edges:
            u, v = int(u), int(v)
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge ({u}, {v}) out of range for {n} vertices")
            if u == v:
                raise ValueError(f"self-loop at vertex {u}")
            nbrs[u].add(v)
            nbrs[v].add(u)
        self._set_csr(n, [sorted(s) for s in nbrs])

    def _set_csr(self, n: int, adj: Sequence[Sequence[int]]) -> None:
        degrees = np.fromiter((len(a) for a in adj), dtype=np.int64, count=n)
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(degrees, out=indptr[1:])
        indices = np.fromiter((w for a in adj for w in a), dtype=np.int64, count=int(indptr[-1]))
        indptr.setflags(write=False)
        indices.setflags(write=False)
        self._n = n
        self._indptr = indptr
        self._indices = indices
        self._adj = None

    @classmethod
    def from_csr(cls, indptr: np.ndarray, indices: np.ndarray) -> "Graph":
        # trusted constructor: caller guarantees symmetric, sorted, loop-free
        g = cls.__new__(cls)
        g._n = len(indptr) - 1
        g._indptr = np.asarray(indptr, dtype=np.int64)
        g._indices = np.asarray(indices, dtype=np.int64)
        g._indptr.setflags(write=False)
        g._indices.setflags(write=False)
        g._adj = None
        return g

    @property
    def vertex_count(self) -> int:
        return self._n

    n = vertex_count

    @property
    def indptr(self) -> np.ndarray:
        return self._indptr

    @property
    def indices(self) -> np.ndarray:
        return self._indices

    @property
    def adjacency(self) -> tuple[tuple[int, ...], ...]:
        if self._adj is None:
            ip, ix = self._indptr, self._indices
            self._adj = tuple(tuple(int(w) for w in ix[ip[v]:ip[v + 1]]) for v in range(self._n))
        return self._adj

    def neighbors(self, v: int) -> tuple[int, ...]:
        return self.adjacency[v]

    def degree(self, v: int) -> int:
        return int(self._indptr[v + 1] - self._indptr[v])

    @property
    def max_degree(self) -> int:
        return int(np.diff(self._indptr).max())

    @property
    def edge_count(self) -> int:
        return len(self._indices) // 2

    def edges(self) -> list[tuple[int, int]]:
        return [(u, w) for u, nb in enumerate(self.adjacency) for w in nb if u < w]

    def has_edge(self, u: int, v: int) -> bool:
        nb = self._indices[self._indptr[u]:self._indptr[u + 1]]
        i = np.searchsorted(nb, v)
        return bool(i < len(nb) and nb[i] == v)

    def is_connected(self) -> bool:
        return len(_bfs(self, 0)) == self._n

    def bipartition(self) -> list[int] | None:
        """2-coloring as a list of 0/1, or None if the graph has an odd cycle."""
        color = [-1] * self._n
        adj = self.adjacency
        for s in range(self._n):
            if color[s] >= 0:
                continue
            color[s] = 0
            queue = deque([s])
            while queue:
                u = queue.popleft()
                for w in adj[u]:
                    if color[w] < 0:
                        color[w] = 1 - color[u]
                        queue.append(w)
                    elif color[w] == color[u]:
                        return None
        return color

    def is_bipartite(self) -> bool:
        return self.bipartition() is not None

    def induced_subgraph(self, vertices: Iterable[int]) -> tuple["Graph", list[int]]:
        """Induced subgraph on ``vertices``; returns it with the list mapping
        new ids back to original ids."""
        ids = sorted(set(vertices))
        pos = {v: i for i, v in enumerate(ids)}
        edges = [(pos[u], pos[w]) for u in ids for w in self.adjacency[u] if w in pos and u < w]
        return Graph(len(ids), edges), ids

    def to_sparse(self) -> sp.csr_matrix:
        data = np.ones(len(self._indices), dtype=np.int8)
        return sp.csr_matrix((data, self._indices, self._indptr), shape=(self._n, self._n))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return (self._n == other._n and np.array_equal(self._indptr, other._indptr)
                and np.array_equal(self._indices, other._indices))

    def __hash__(self) -> int:
        return hash((self._n, self._indices.tobytes()))

    def __repr__(self) -> str:
        return f"Graph(n={self._n}, m={self.edge_count})"


# --- generators -------------------------------------------------------------

def build_layered_cycle(n: int, k: int) -> Graph:
    """C_{n,k}: a cycle of ``n`` layers of ``k`` vertices, consecutive layers
    joined by complete bipartite graphs. Vertex (layer u, slot j) has id u*k + j."""
    if n < 4 or n % 2:
        raise ValueError(f"layered cycle needs even n >= 4, got n={n}")
    if k < 1:
        raise ValueError(f"layer size must be >= 1, got k={k}")
    adj = []
    for u in range(n):
        lower, upper = (u - 1) % n, (u + 1) % n
        nb = sorted(list(range(lower * k, lower * k + k)) + list(range(upper * k, upper * k + k)))
        adj.extend([nb] * k)
    g = Graph.__new__(Graph)
    g._set_csr(n * k, adj)
    return g


def cycle_graph(n: int) -> Graph:
    if n < 3:
        raise ValueError("cycle needs n >= 3")
    ip = np.arange(0, 2 * n + 1, 2, dtype=np.int64)
    ix = np.empty(2 * n, dtype=np.int64)
    v = np.arange(n)
    pair = np.sort(np.stack([(v - 1) % n, (v + 1) % n], axis=1), axis=1)
    ix[:] = pair.ravel()
    return Graph.from_csr(ip, ix)


def path_graph(n: int) -> Graph:
    return Graph(n, [(i, i + 1) for i in range(n - 1)])


def complete_graph(n: int) -> Graph:
    return Graph(n, [(i, j) for i in range(n) for j in range(i + 1, n)])


_SPEC_RE = re.compile(r"^(?P<name>[a-z]+):(?P<args>.*)$")


def parse_graph_spec(spec: str) -> Graph:
    """Generator spec such as ``cnk:n=8,k=3``, ``cycle:n=10``, ``path:n=5``,
    ``complete:n=4``; anything else is treated as an edge-list file path."""
    m = _SPEC_RE.match(spec.strip())
    if m is None or m.group("name") not in _GENERATORS:
        return read_edge_list(spec)
    try:
        kwargs = {key.strip(): int(val) for key, val in
                  (item.split("=") for item in m.group("args").split(",") if item.strip())}
    except ValueError as exc:
        raise ValueError(f"malformed graph spec {spec!r}") from exc
    return _GENERATORS[m.group("name")](**kwargs)


_GENERATORS = {
    "cnk": build_layered_cycle,
    "cycle": cycle_graph,
    "path": path_graph,
    "complete": complete_graph,
}


def read_edge_list(path: str) -> Graph:
    """Plain-text edge list: first line ``n m``, then ``m`` lines ``u v`` (0-based)."""
    with open(path) as fh:
        lines = [ln.split() for ln in fh if ln.strip() and not ln.startswith("#")]
    n, m = int(lines[0][0]), int(lines[0][1])
    edges = [(int(a), int(b)) for a, b in lines[1:]]
    if len(edges) != m:
        raise ValueError(f"{path}: header announces {m} edges, found {len(edges)}")
    return Graph(n, edges)


def write_edge_list(g: Graph, path: str) -> None:
    edges = g.edges()
    with open(path, "w") as fh:
        fh.write(f"{g.vertex_count} {len(edges)}\n")
        fh.writelines(f"{u} {v}\n" for u, v in edges)


# --- distances and balls ------------------------------------------------------

def _bfs(g: Graph, source: int, limit: int | None = None) -> dict[int, int]:
    dist = {source: 0}
    queue = deque([source])
    adj = g.adjacency
    while queue:
        u = queue.popleft()
        d = dist[u]
        if limit is not None and d >= limit:
            continue
        for w in adj[u]:
            if w not in dist:
                dist[w] = d + 1
                queue.append(w)
    return dist


def bfs_distances(g: Graph, v: int) -> list[int]:
    """Shortest-path distances from ``v`` to every vertex."""
    dist = _bfs(g, v)
    if len(dist) < g.vertex_count:
        missing = next(u for u in range(g.vertex_count) if u not in dist)
        raise DisconnectedGraphError(missing)
    return [dist[u] for u in range(g.vertex_count)]


@dataclass(frozen=True)
class BallDecomposition:
    """B_r(center) split into layers; ``layers[i]`` holds the vertices at
    distance r - i, so ``layers[0]`` is the boundary and ``layers[r]`` the center."""

    center: int
    radius: int
    layers: tuple[frozenset[int], ...]
    exact_radius: bool

    @property
    def boundary(self) -> frozenset[int]:
        return self.layers[0]

    @property
    def interior(self) -> frozenset[int]:
        return frozenset().union(*self.layers[1:])

    @property
    def vertices(self) -> frozenset[int]:
        return frozenset().union(*self.layers)

    def layer_of(self, u: int) -> int:
        for i, layer in enumerate(self.layers):
            if u in layer:
                return i
        raise KeyError(u)

    def __len__(self) -> int:
        return sum(len(layer) for layer in self.layers)


def ball(g: Graph, v: int, r: int) -> BallDecomposition:
    if r < 0:
        raise ValueError("radius must be nonnegative")
    dist = _bfs(g, v, limit=r)
    by_dist: list[set[int]] = [set() for _ in range(r + 1)]
    for u, d in dist.items():
        by_dist[d].add(u)
    layers = tuple(frozenset(by_dist[r - i]) for i in range(r + 1))
    return BallDecomposition(center=v, radius=r, layers=layers, exact_radius=bool(by_dist[r]))


def ball_sizes(g: Graph, r: int) -> np.ndarray:
    """|B_r(v)| for every v, by boolean sparse powers of (A + I)."""
    n = g.vertex_count
    if r == 0:
        return np.ones(n, dtype=np.int64)
    step = (g.to_sparse() + sp.identity(n, dtype=np.int8, format="csr")).astype(bool)
    reach = step
    for _ in range(r - 1):
        reach = (reach @ step).astype(bool)
    return np.diff(reach.tocsr().indptr)


def max_ball_size(g: Graph, r: int) -> int:
    if r < 0:
        raise ValueError("radius must be nonnegative")
    return int(ball_sizes(g, r).max())


def pack_disjoint_balls(g: Graph, W: Iterable[int], r: int) -> list[int]:
    """Greedy packing of pairwise disjoint exact-radius-r balls centred in W.

    Scans W by ascending id; after selecting u, every candidate within
    distance 2r of u is dropped, which is what gives |U| >= floor(|W|/m^2).
    """
    candidates = sorted(set(W))
    if not candidates:
        return []
    removed: set[int] = set()
    covered = np.zeros(g.vertex_count, dtype=bool)
    chosen: list[int] = []
    for u in candidates:
        if u in removed:
            continue
        b = ball(g, u, r)
        if not b.exact_radius:
            continue
        members = list(b.vertices)
        if covered[members].any():
            continue
        covered[members] = True
        chosen.append(u)
        removed.update(_bfs(g, u, limit=2 * r))
    return chosen


def choose_radius(g: Graph, c: float) -> int:
    """Largest r >= 1 with max |B_{r-1}(v)| <= c*log2(n), or 0 if there is none."""
    if c <= 0:
        raise ValueError("c must be positive")
    budget = c * math.log2(g.vertex_count) if g.vertex_count > 1 else 0.0
    r = 0
    while True:
        m = max_ball_size(g, r)
        if m > budget:
            return r
        if m == g.vertex_count:
            # the ball already covers everything; radius is not meaningful beyond diameter
            return r + 1
        r += 1
