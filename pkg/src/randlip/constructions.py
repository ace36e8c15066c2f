"""Explicit high-reaching functions on a ball with a prescribed boundary.

Two constructions of M-Lipschitz functions g on a ball B_r(v) which agree with
a given f on the boundary and climb to height about Mr/2 at the centre:

* for M >= 2, keep f on the high set A, its "steep" neighbours Q* and the
  boundary, and put every other vertex of layer i into the band
  [ceil(Mi/2), floor(M(i+1)/2) - 1];
* for M = 1, raise the value i-1 to i on B_{r-i} for i = 1..r.

Layer indices follow :class:`randlip.graph.BallDecomposition`: layer 0 is the
boundary, layer r the centre. Threshold comparisons are done on doubled
integers so half-integer cut points are exact.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator, Mapping

from randlip.graph import BallDecomposition, Graph
from randlip.lipschitz import ModelKind, validate


@dataclass(frozen=True)
class HighSetDecomposition:
    ball: BallDecomposition
    M: int
    A_layers: tuple[frozenset[int], ...]
    Q: frozenset[int]
    Qstar: frozenset[int]
    source: Mapping[int, int]

    @property
    def A(self) -> frozenset[int]:
        return frozenset().union(*self.A_layers)

    @property
    def kept(self) -> frozenset[int]:
        """A ∪ Q* ∪ boundary: where every extension must agree with the source."""
        return self.A | self.Qstar | self.ball.boundary

    def free_vertices(self) -> list[int]:
        kept = self.kept
        b = self.ball
        return sorted((v for v in b.vertices if v not in kept), key=lambda v: (b.layer_of(v), v))


def _ball_values(ball: BallDecomposition, f) -> dict[int, int]:
    vals = f if isinstance(f, Mapping) else dict(enumerate(getattr(f, "values", f)))
    return {v: vals[v] for v in ball.vertices}


def _check_normalized(ball: BallDecomposition, vals: Mapping[int, int]) -> None:
    low = min(vals[v] for v in ball.boundary)
    if low != 0:
        raise ValueError(f"boundary minimum is {low}; translate f by {-low} so that min over the boundary is 0")


def high_set_decomposition(g: Graph, ball: BallDecomposition, f, M: int) -> HighSetDecomposition:
    vals = _ball_values(ball, f)
    _check_normalized(ball, vals)
    # A_i = {u in L_i : f(u) >= M(i+1)/2}
    A_layers = tuple(frozenset(u for u in layer if 2 * vals[u] >= M * (i + 1))
                     for i, layer in enumerate(ball.layers))
    A = frozenset().union(*A_layers)
    members = ball.vertices
    Q = frozenset(u for u in members if u not in A and any(w in A for w in g.neighbors(u)))
    Qstar = set()
    for u in Q:
        i = ball.layer_of(u)
        if any(w in A and 2 * vals[w] > M * (i + 2) for w in g.neighbors(u)):
            Qstar.add(u)
    return HighSetDecomposition(ball, M, A_layers, Q, frozenset(Qstar), vals)


def band(M: int, i: int) -> tuple[int, int]:
    """Integer values allowed at a free vertex of layer i: the integers in
    [Mi/2, M(i+1)/2 - 1], always at least (M-1)/2 of them."""
    return -(-M * i // 2), M * (i + 1) // 2 - 1


def extension_family_size(dec: HighSetDecomposition) -> int:
    size = 1
    for v in dec.free_vertices():
        lo, hi = band(dec.M, dec.ball.layer_of(v))
        size *= hi - lo + 1
    return size


def family_lower_bound(dec: HighSetDecomposition) -> float:
    """((M-1)/2)^(#free vertices)."""
    return ((dec.M - 1) / 2) ** len(dec.free_vertices())


def generate_high_extensions(g: Graph, ball: BallDecomposition, f, M: int,
                             limit: int | None = None) -> Iterator[dict[int, int]]:
    """Extensions g equal to f on A ∪ Q* ∪ boundary and banded elsewhere,
    in lexicographic order over free vertices sorted by (layer, id)."""
    if M < 2:
        raise ValueError("banded construction needs M >= 2; use lift_one_lipschitz for M = 1")
    if not ball.exact_radius:
        raise ValueError("ball must have exact radius")
    dec = high_set_decomposition(g, ball, f, M)
    yield from iter_extensions(dec, limit)


def iter_extensions(dec: HighSetDecomposition, limit: int | None = None) -> Iterator[dict[int, int]]:
    free = dec.free_vertices()
    ranges = [range(lo, hi + 1) for lo, hi in (band(dec.M, dec.ball.layer_of(v)) for v in free)]
    base = {v: dec.source[v] for v in dec.kept}
    for values in itertools.islice(itertools.product(*ranges), limit):
        out = dict(base)
        out.update(zip(free, values))
        yield out


def lift_one_lipschitz(g: Graph, ball: BallDecomposition, f, return_steps: bool = False):
    """h_r from h_0 = f by h_i(u) = i where u is in B_{r-i} and h_{i-1}(u) = i-1.

    ``f`` must be nonnegative and 1-Lipschitz on the ball (apply abs() first)
    with boundary minimum 0.
    """
    h = _ball_values(ball, f)
    if any(x < 0 for x in h.values()):
        raise ValueError("lift_one_lipschitz needs a nonnegative input (take |f| first)")
    _check_normalized(ball, h)
    r = ball.radius
    steps = [dict(h)]
    for i in range(1, r + 1):
        inner = frozenset().union(*ball.layers[i:])  # B_{r-i}(center)
        for u in inner:
            if h[u] == i - 1:
                h[u] = i
        if return_steps:
            steps.append(dict(h))
    return (h, steps) if return_steps else h


def is_valid_on_ball(g: Graph, values: Mapping[int, int], M: int) -> bool:
    return not validate(g, values, ModelKind.lipschitz(M), v0=None, partial=True)
