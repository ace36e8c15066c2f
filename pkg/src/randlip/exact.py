"""Exact engines: a brute-force enumeration oracle for tiny graphs, and a
transfer-matrix engine for the layered cycle C_{n,k}.

The transfer engine works because adjacent layers of C_{n,k} are joined
completely: whether two layers are compatible depends only on their
(min, max) pair. A layer's state is that pair, and the number of k-tuples
realising a given pair has a closed form, so the count of all pinned
functions is a cyclic product of (states x states) matrices that we never
build explicitly. All counts are Python integers.

State arrays are object-dtype grids indexed ``[lo + B, hi + B]`` where B
bounds |f| under pinning; the leading axis (when present) enumerates the
state of the pinned layer, which the cyclic DP conditions on.
"""

from __future__ import annotations

import bisect
import functools
import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, NamedTuple

import numpy as np

from randlip.graph import Graph, bfs_distances, build_layered_cycle
from randlip.lipschitz import IntLipschitzFunction, ModelKind
from randlip.rng import py_substream

DEFAULT_ORACLE_CAP = 10**8
DEFAULT_CELL_CAP = 20_000_000
ENUMERATION_FALLBACK = 10**6


class OracleTooLarge(RuntimeError):
    """Brute-force enumeration would exceed its configured cap."""


class StateSpaceTooLarge(RuntimeError):
    """Transfer-matrix state grid would exceed its configured memory cap."""


# --- brute-force oracle ------------------------------------------------------

def _resolve(model) -> ModelKind:
    if isinstance(model, ModelKind):
        return model
    return ModelKind.lipschitz(int(model))


def _search_plan(g: Graph, v0: int, model: ModelKind):
    if model.kind == "real":
        raise ValueError("the real-valued model cannot be enumerated")
    if model.kind == "hom" and not g.is_bipartite():
        raise ValueError("Z-homomorphisms exist only on bipartite graphs")
    dist = bfs_distances(g, v0)
    order = sorted(range(g.vertex_count), key=lambda v: (dist[v], v))
    pos = {v: i for i, v in enumerate(order)}
    adj = g.adjacency
    earlier = [[w for w in adj[v] if pos[w] < pos[v]] for v in order]
    if model.kind == "lip":
        M, step = model.M, 1
    else:
        M, step = 1, 2
    bound = [M * dist[v] for v in order]
    return order, earlier, bound, M, step


def _domain(vals, nbrs, bound, M, hom):
    lo, hi = -bound, bound
    for w in nbrs:
        x = vals[w]
        if x - M > lo:
            lo = x - M
        if x + M < hi:
            hi = x + M
    # for homomorphisms all earlier neighbours share a parity, so lo/hi do too
    return lo, hi


def enumerate_bruteforce(g: Graph, v0: int, model, cap: int = DEFAULT_ORACLE_CAP,
                         window: tuple[int, int] | None = None) -> Iterator[tuple[int, ...]]:
    """Yield every pinned function of the model exactly once, as a tuple
    indexed by vertex id. ``cap`` bounds the number of search nodes;
    ``window`` (Lipschitz model only) keeps just the functions with all
    values in [lo, hi]."""
    model = _resolve(model)
    order, earlier, bound, M, step = _search_plan(g, v0, model)
    hom = model.kind == "hom"
    if window is not None:
        if hom:
            raise ValueError("value windows are supported for the Lipschitz model only")
        if not window[0] <= 0 <= window[1]:
            return
        clip = window
        raw = _domain

        def _domain_w(vals, nbrs, b, M, hom):
            a, c = raw(vals, nbrs, b, M, hom)
            return max(a, clip[0]), min(c, clip[1])
        dom = _domain_w
    else:
        dom = _domain
    n = len(order)
    vals = [0] * g.vertex_count
    if n == 1:
        yield (0,)
        return
    lo = [0] * n
    hi = [0] * n
    cur = [0] * n
    nodes = 0
    d = 1
    lo[1], hi[1] = dom(vals, earlier[1], bound[1], M, hom)
    cur[1] = lo[1]
    while d >= 1:
        if cur[d] > hi[d]:
            d -= 1
            cur[d] += step
            continue
        vals[order[d]] = cur[d]
        nodes += 1
        if nodes > cap:
            raise OracleTooLarge(f"enumeration exceeded {cap} search nodes")
        if d == n - 1:
            yield tuple(vals)
            cur[d] += step
        else:
            d += 1
            lo[d], hi[d] = dom(vals, earlier[d], bound[d], M, hom)
            cur[d] = lo[d]


def count_bruteforce(g: Graph, v0: int, model, cap: int = DEFAULT_ORACLE_CAP) -> int:
    """Number of pinned functions, by the same search as enumerate_bruteforce
    but closing the last vertex by counting its domain."""
    model = _resolve(model)
    order, earlier, bound, M, step = _search_plan(g, v0, model)
    hom = model.kind == "hom"
    n = len(order)
    if n == 1:
        return 1
    vals = [0] * g.vertex_count
    lo = [0] * n
    hi = [0] * n
    cur = [0] * n
    total = 0
    nodes = 0
    d = 1
    lo[1], hi[1] = _domain(vals, earlier[1], bound[1], M, hom)
    cur[1] = lo[1]
    last = n - 1
    while d >= 1:
        if d == last:
            a, b = _domain(vals, earlier[d], bound[d], M, hom)
            if a <= b:
                total += (b - a) // step + 1
            d -= 1
            if d >= 1:
                cur[d] += step
            continue
        if cur[d] > hi[d]:
            d -= 1
            cur[d] += step
            continue
        vals[order[d]] = cur[d]
        nodes += 1
        if nodes > cap:
            raise OracleTooLarge(f"enumeration exceeded {cap} search nodes")
        d += 1
        if d < last:
            lo[d], hi[d] = _domain(vals, earlier[d], bound[d], M, hom)
            cur[d] = lo[d]
    return total


def bruteforce_range_counts(g: Graph, v0: int, model, cap: int = DEFAULT_ORACLE_CAP) -> dict[int, int]:
    """Histogram {R: number of pinned functions with range R}."""
    hist: dict[int, int] = {}
    for f in enumerate_bruteforce(g, v0, model, cap):
        r = max(f) - min(f) + 1
        hist[r] = hist.get(r, 0) + 1
    return dict(sorted(hist.items()))


def check_ball_factorization(g: Graph, v0: int, M: int, centers, r: int,
                             cap: int = DEFAULT_ORACLE_CAP) -> tuple[bool, int]:
    """Check by exact enumeration that, given all values outside the ball
    interiors, the restrictions of f to the balls are independent.

    Returns ``(holds, number_of_exterior_configurations)``.
    """
    from randlip.graph import ball as _ball

    balls = [_ball(g, c, r) for c in centers]
    interior = set().union(*(b.interior for b in balls))
    if v0 in set().union(*(b.vertices for b in balls)):
        raise ValueError("pinned vertex must lie outside the balls")
    members = [sorted(b.vertices) for b in balls]
    if len(set().union(*map(set, members))) != sum(map(len, members)):
        raise ValueError("balls must be disjoint")
    exterior = [v for v in range(g.vertex_count) if v not in interior]
    groups: dict[tuple, dict[tuple, int]] = {}
    for f in enumerate_bruteforce(g, v0, ModelKind.lipschitz(M), cap):
        h = tuple(f[v] for v in exterior)
        key = tuple(tuple(f[v] for v in mem) for mem in members)
        grp = groups.setdefault(h, {})
        grp[key] = grp.get(key, 0) + 1
    for grp in groups.values():
        total = sum(grp.values())
        margs = [dict() for _ in balls]
        for key, c in grp.items():
            for i, part in enumerate(key):
                margs[i][part] = margs[i].get(part, 0) + c
        for combo in itertools.product(*(m.items() for m in margs)):
            joint = Fraction(grp.get(tuple(p for p, _ in combo), 0), total)
            prod = Fraction(1)
            for _, c in combo:
                prod *= Fraction(c, total)
            if joint != prod:
                return False, len(groups)
    return True, len(groups)


# --- layer tuple counts ---------------------------------------------------------

def count_layer_tuples(d: int, k: int) -> int:
    """k-tuples with values in [a, a+d] attaining both a and a+d."""
    if d < 0 or k < 1:
        raise ValueError("need d >= 0 and k >= 1")
    if d == 0:
        return 1
    return (d + 1) ** k - 2 * d ** k + (d - 1) ** k


def count_pinned_layer_tuples(lo: int, hi: int, k: int) -> int:
    """k-tuples with first coordinate 0, values in [lo, hi], min lo and max hi attained."""
    if lo > 0 or hi < 0:
        raise ValueError("pinned layer interval must contain 0")
    m = k - 1
    d = hi - lo
    total = (d + 1) ** m
    if lo < 0:
        total -= d ** m
    if hi > 0:
        total -= d ** m
    if lo < 0 and hi > 0:
        total += (d - 1) ** m
    return total


def _hom_layer_tuples(d: int, k: int) -> int:
    if d == 0:
        return 1
    return 2 ** k - 2 if d == 2 else 0


def _hom_pinned_layer_tuples(lo: int, hi: int, k: int) -> int:
    if (lo, hi) == (0, 0):
        return 1
    if (lo, hi) in ((-2, 0), (0, 2)):
        return 2 ** (k - 1) - 1
    return 0


# --- transfer model -------------------------------------------------------------

class LayerState(NamedTuple):
    lo: int
    hi: int

    @property
    def width(self) -> int:
        return self.hi - self.lo + 1


@dataclass(frozen=True)
class CountResult:
    count: int
    n: int
    k: int
    model: ModelKind

    def probability(self, numerator: int) -> Fraction:
        return Fraction(numerator, self.count)


class TransferModel:
    """States, weights and the compatibility operator for C_{n,k}."""

    def __init__(self, n: int, k: int, model: ModelKind, cell_cap: int = DEFAULT_CELL_CAP):
        if n < 4 or n % 2:
            raise ValueError(f"transfer engine needs even n >= 4, got {n}")
        if model.kind == "real":
            raise ValueError("transfer engine counts integer models only")
        self.n, self.k, self.model = n, k, model
        self.M = model.M
        self.hom = model.kind == "hom"
        self.B = (n // 2) * (1 if self.hom else self.M)
        G = self.size = 2 * self.B + 1
        max_w = 2 if self.hom else 2 * self.M
        layer_fn = _hom_layer_tuples if self.hom else count_layer_tuples
        pinned_fn = _hom_pinned_layer_tuples if self.hom else count_pinned_layer_tuples
        pinned = []
        for lo in range(-max_w, 1):
            for hi in range(0, max_w + 1):
                if hi - lo <= max_w:
                    c = pinned_fn(lo, hi, k)
                    if c:
                        pinned.append((LayerState(lo, hi), c))
        self.pinned_states = [s for s, _ in pinned]
        self.pinned_weights = [c for _, c in pinned]
        cells = len(pinned) * G * G
        if cells > cell_cap:
            raise StateSpaceTooLarge(f"{cells} DP cells exceed cap {cell_cap}")
        lo_idx, hi_idx = np.meshgrid(np.arange(G), np.arange(G), indexing="ij")
        self._lo_val = lo_idx - self.B
        self._hi_val = hi_idx - self.B
        width = hi_idx - lo_idx
        w_table = [layer_fn(d, k) for d in range(max_w + 1)]
        weight = np.zeros((G, G), dtype=object)
        ok = (width >= 0) & (width <= max_w)
        for i, j in zip(*np.nonzero(ok)):
            weight[i, j] = w_table[width[i, j]]
        self.weight = weight
        if not self.hom:
            M = self.M
            self._a_idx = np.clip(hi_idx - M, 0, G - 1)
            self._b_idx = np.clip(lo_idx + M, 0, G - 1)

    def index(self, s: LayerState) -> tuple[int, int]:
        return s.lo + self.B, s.hi + self.B

    def compatible(self, s: LayerState, t: LayerState) -> bool:
        if self.hom:
            return all(abs(x - y) == 1 for x in {s.lo, s.hi} for y in {t.lo, t.hi})
        return s.hi - t.lo <= self.M and t.hi - s.lo <= self.M

    def compat_sum(self, F: np.ndarray) -> np.ndarray:
        """(C F)[s] = sum of F[t] over states t compatible with s, on the last two axes."""
        if self.hom:
            return self._hom_compat_sum(F)
        D = np.flip(np.cumsum(np.flip(F, -2), axis=-2), -2)
        D = np.cumsum(D, axis=-1)
        return D[..., self._a_idx, self._b_idx]

    def _hom_compat_sum(self, F: np.ndarray) -> np.ndarray:
        G = self.size
        out = np.zeros_like(F)
        i = np.arange(G)
        d0 = F[..., i, i]
        d2 = np.zeros_like(d0)
        d2[..., : G - 2] = F[..., i[:-2], i[:-2] + 2]
        diag = np.zeros_like(d0)
        diag[..., 1:] += d0[..., :-1]
        diag[..., :-1] += d0[..., 1:]
        diag[..., 1:] += d2[..., :-1]
        out[..., i, i] = diag
        out[..., i[:-2], i[:-2] + 2] = d0[..., 1:-1]
        return out

    def compat_mask(self, s: LayerState) -> np.ndarray:
        if self.hom:
            mask = np.zeros((self.size, self.size), dtype=bool)
            vals = {s.lo, s.hi}
            if len(vals) == 1:
                c = s.lo
                for t in (LayerState(c - 1, c - 1), LayerState(c + 1, c + 1), LayerState(c - 1, c + 1)):
                    if -self.B <= t.lo and t.hi <= self.B:
                        mask[self.index(t)] = True
            else:
                c = s.lo + 1
                mask[self.index(LayerState(c, c))] = True
            return mask
        return (self._lo_val >= s.hi - self.M) & (self._hi_val <= s.lo + self.M) & (self._lo_val <= self._hi_val)

    # --- DP passes ---

    def _layer_weights(self, masks) -> list[np.ndarray]:
        out = []
        for j in range(self.n):
            m = masks.get(j) if masks else None
            out.append(self.weight if m is None else np.where(m, self.weight, 0))
        return out

    def _initial(self, masks) -> np.ndarray:
        G = self.size
        A = np.zeros((len(self.pinned_states), G, G), dtype=object)
        m0 = masks.get(0) if masks else None
        for t, (s, c) in enumerate(zip(self.pinned_states, self.pinned_weights)):
            i, j = self.index(s)
            if m0 is None or m0[i, j]:
                A[t, i, j] = c
        return A

    def _closing(self) -> np.ndarray:
        G = self.size
        E = np.zeros((len(self.pinned_states), G, G), dtype=object)
        for t, s in enumerate(self.pinned_states):
            E[(t,) + self.index(s)] = 1
        return E

    def count(self, masks: dict[int, np.ndarray] | None = None) -> int:
        """Number of pinned functions whose layer states satisfy the given
        per-layer boolean masks (missing layers are unconstrained)."""
        W = self._layer_weights(masks)
        A = self._initial(masks)
        for j in range(1, self.n):
            A = self.compat_sum(A) * W[j]
        C = self.compat_sum(A)
        total = 0
        for t, s in enumerate(self.pinned_states):
            total += C[(t,) + self.index(s)]
        return int(total)

    def backward(self, masks=None) -> list[np.ndarray | None]:
        """beta[j] for j = 1..n: weight of completing the cycle from layer j
        given state s at layer j (beta[n] is the closing indicator)."""
        W = self._layer_weights(masks)
        betas: list[np.ndarray | None] = [None] * (self.n + 1)
        betas[self.n] = self._closing()
        for j in range(self.n - 1, 0, -1):
            betas[j] = self.compat_sum(betas[j + 1]) * W[j]
        return betas

    def layer_joint(self, i: int, masks=None) -> np.ndarray:
        """Unnormalised law of layer i's state, as a (G, G) grid."""
        i %= self.n
        W = self._layer_weights(masks)
        A = self._initial(masks)
        for j in range(1, i + 1):
            A = self.compat_sum(A) * W[j]
        B = self._closing()
        for j in range(self.n - 1, i, -1):
            B = self.compat_sum(B) * W[j]
        return (A * self.compat_sum(B)).sum(axis=0)

    def state_grid_to_dict(self, grid: np.ndarray) -> dict[LayerState, int]:
        out = {}
        for i, j in zip(*np.nonzero(grid != 0)):
            out[LayerState(int(i) - self.B, int(j) - self.B)] = int(grid[i, j])
        return out

    def window_mask(self, a: int, b: int) -> np.ndarray:
        return (self._lo_val >= a) & (self._hi_val <= b)

    def width_mask(self, width: int) -> np.ndarray:
        return (self._hi_val - self._lo_val) == width - 1


@functools.lru_cache(maxsize=64)
def transfer_model(n: int, k: int, model: ModelKind) -> TransferModel:
    return TransferModel(n, k, model)


# --- public queries ---------------------------------------------------------------

def tm_count(n: int, k: int, M) -> CountResult:
    """|pinned functions on C_{n,k}| for an M-Lipschitz (int M) or given model."""
    model = _resolve(M)
    return CountResult(transfer_model(n, k, model).count(), n, k, model)


def tm_window_count(n: int, k: int, M, window: tuple[int, int]) -> int:
    """Number of pinned functions with every value in [a, b]."""
    a, b = window
    if not a <= 0 <= b:
        return 0
    tm = transfer_model(n, k, _resolve(M))
    mask = tm.window_mask(a, b)
    return tm.count({j: mask for j in range(n)})


def default_range_threshold(model: ModelKind) -> int:
    return 3 if model.kind == "hom" else model.M + 1


def tm_range_le_count(n: int, k: int, M, w: int | None = None) -> int:
    """#{f : R(f) <= w}, via sum over a of T([a, a+w-1]) - T([a+1, a+w-1])."""
    model = _resolve(M)
    if w is None:
        w = default_range_threshold(model)
    total = 0
    for a in range(-(w - 1), 1):
        total += tm_window_count(n, k, model, (a, a + w - 1))
        if a + 1 <= 0 and w >= 2:
            total -= tm_window_count(n, k, model, (a + 1, a + w - 1))
    return total


def tm_pr_range_le(n: int, k: int, M, w: int | None = None) -> Fraction:
    return Fraction(tm_range_le_count(n, k, M, w), tm_count(n, k, M).count)


def tm_range_distribution(n: int, k: int, M) -> dict[int, Fraction]:
    """Exact law of R(f), from the cumulative counts #{R <= w}."""
    model = _resolve(M)
    total = tm_count(n, k, model).count
    step = 1 if model.kind == "hom" else model.M
    w_max = step * n + 1
    out: dict[int, Fraction] = {}
    prev = 0
    for w in range(1, w_max + 1):
        c = tm_range_le_count(n, k, model, w)
        if c > prev:
            out[w] = Fraction(c - prev, total)
        prev = c
        if c == total:
            break
    return out


def tm_layer_marginal(n: int, k: int, M, i: int) -> dict[LayerState, Fraction]:
    tm = transfer_model(n, k, _resolve(M))
    counts = tm.state_grid_to_dict(tm.layer_joint(i))
    total = sum(counts.values())
    return {s: Fraction(c, total) for s, c in sorted(counts.items())}


def tm_layer_width_probability(n: int, k: int, M, width: int, layer: int = 1) -> Fraction:
    tm = transfer_model(n, k, _resolve(M))
    c = tm.count({layer % n: tm.width_mask(width)})
    return Fraction(c, tm.count())


def tm_epsilon(n: int, k: int, M, layer: int = 1) -> Fraction:
    """Pr(the value interval of a full layer has size != M+1).

    A full layer is the forward neighbourhood of every vertex in the layer
    before it; by rotation and translation symmetry the value does not
    depend on ``layer``.
    """
    model = _resolve(M)
    return 1 - tm_layer_width_probability(n, k, model, model.M + 1, layer)


def tm_ideal_edge_probability(n: int, k: int, M, layer: int = 1) -> Fraction:
    """Pr(an edge between layers ``layer`` and ``layer+1`` is ideal).

    Both endpoints' neighbour-layer intervals must equal one common interval
    of size M+1, which happens iff the four layers layer-1 .. layer+2 all have
    interval size M+1 (compatibility then forces them equal).
    """
    model = _resolve(M)
    tm = transfer_model(n, k, model)
    mask = tm.width_mask(model.M + 1)
    masks = {(layer + d) % n: mask for d in (-1, 0, 1, 2)}
    return Fraction(tm.count(masks), tm.count())


# --- exact sampling -------------------------------------------------------------

@dataclass
class _Sampler:
    tm: TransferModel
    betas: list
    s0_cum: list[int]
    cache: dict = field(default_factory=dict)
    tuple_cache: dict = field(default_factory=dict)


def _pick(rng, cum: list[int]) -> int:
    x = rng.randrange(cum[-1])
    return bisect.bisect_right(cum, x)


def _sample_tuple(sampler: _Sampler, rng, s: LayerState, m: int, pinned: bool) -> list[int]:
    """m free layer coordinates, uniform among those completing state s."""
    tm = sampler.tm
    lo, hi = s
    if lo == hi:
        return [lo] * m
    values = [lo, hi] if tm.hom else list(range(lo, hi + 1))
    required = {lo, hi}
    if pinned:
        required.discard(0)
    if pinned:
        count = (_hom_pinned_layer_tuples if tm.hom else count_pinned_layer_tuples)(lo, hi, m + 1)
    else:
        count = (_hom_layer_tuples if tm.hom else count_layer_tuples)(hi - lo, m)
    space = len(values) ** m
    if count / space < 0.05 and space <= ENUMERATION_FALLBACK:
        key = (lo, hi, m, pinned)
        table = sampler.tuple_cache.get(key)
        if table is None:
            table = [t for t in itertools.product(values, repeat=m) if required <= set(t)]
            sampler.tuple_cache[key] = table
        return list(table[rng.randrange(len(table))])
    while True:
        t = [values[rng.randrange(len(values))] for _ in range(m)]
        if required <= set(t):
            return t


def _build_sampler(n: int, k: int, model: ModelKind) -> _Sampler:
    tm = transfer_model(n, k, model)
    betas = tm.backward()
    C1 = tm.compat_sum(betas[1])
    cum = list(itertools.accumulate(
        c * C1[(t,) + tm.index(s)] for t, (s, c) in enumerate(zip(tm.pinned_states, tm.pinned_weights))))
    return _Sampler(tm, betas, cum)


def _sample_states(sampler: _Sampler, rng) -> list[LayerState]:
    tm = sampler.tm
    t0 = _pick(rng, sampler.s0_cum)
    states = [tm.pinned_states[t0]]
    for j in range(1, tm.n):
        key = (j, t0, states[-1])
        entry = sampler.cache.get(key)
        if entry is None:
            grid = np.where(tm.compat_mask(states[-1]), sampler.betas[j][t0], 0)
            idx = np.nonzero(grid != 0)
            cand = [LayerState(int(a) - tm.B, int(b) - tm.B) for a, b in zip(*idx)]
            cum = list(itertools.accumulate(int(x) for x in grid[idx]))
            entry = sampler.cache[key] = (cand, cum)
        cand, cum = entry
        states.append(cand[_pick(rng, cum)])
    return states


def tm_sample(n: int, k: int, M, seed: int, count: int) -> list[IntLipschitzFunction]:
    """i.i.d. exactly uniform pinned functions on C_{n,k} (v0 = vertex 0).

    Layer states are drawn by forward-filter backward-sample on the exact
    counts; each layer's tuple is then drawn uniformly given its state.
    """
    model = _resolve(M)
    sampler = _build_sampler(n, k, model)
    rng = py_substream(seed, "tm_sample")
    out = []
    for _ in range(count):
        states = _sample_states(sampler, rng)
        values = [0] * (n * k)
        for j, s in enumerate(states):
            if j == 0:
                values[1:k] = _sample_tuple(sampler, rng, s, k - 1, pinned=True)
            else:
                values[j * k:(j + 1) * k] = _sample_tuple(sampler, rng, s, k, pinned=False)
        out.append(IntLipschitzFunction(tuple(values), model.M, 0))
    return out


def cnk_graph(n: int, k: int) -> Graph:
    return build_layered_cycle(n, k)
