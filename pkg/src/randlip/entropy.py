"""Base-2 entropy of finite joint laws and a numeric Shearer-inequality check."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from randlip.exact import DEFAULT_ORACLE_CAP, enumerate_bruteforce
from randlip.graph import Graph, bfs_distances

NORM_TOL = 1e-12
COVER_TOL = 1e-12


def _log2(p) -> float:
    if isinstance(p, Fraction):
        return math.log2(p.numerator) - math.log2(p.denominator)
    return math.log2(p)


def binary_entropy(p: float) -> float:
    if not 0 <= p <= 1:
        raise ValueError("p must lie in [0, 1]")
    if p in (0, 1):
        return 0.0
    return -(p * _log2(p) + (1 - p) * _log2(1 - p))


class FiniteDistribution:
    """Law of a random vector (X_0, ..., X_{N-1}) with finite support."""

    def __init__(self, outcomes: Iterable[Sequence], probs: Iterable):
        merged: dict[tuple, object] = {}
        for x, p in zip(outcomes, probs):
            if p < 0:
                raise ValueError("negative probability")
            if p:
                x = tuple(x)
                merged[x] = merged.get(x, 0) + p
        if not merged:
            raise ValueError("empty support")
        self.table = merged
        total = sum(merged.values())
        exact = all(isinstance(p, (int, Fraction)) for p in merged.values())
        if (exact and total != 1) or (not exact and abs(float(total) - 1) > NORM_TOL):
            raise ValueError(f"probabilities sum to {total}, not 1")
        self.N = len(next(iter(merged)))

    @classmethod
    def uniform(cls, outcomes: Iterable[Sequence]) -> "FiniteDistribution":
        outs = [tuple(x) for x in outcomes]
        p = Fraction(1, len(outs))
        return cls(outs, [p] * len(outs))

    def __len__(self) -> int:
        return len(self.table)

    def items(self):
        return self.table.items()

    def marginal(self, coords: Sequence[int]) -> "FiniteDistribution":
        coords = tuple(coords)
        out: dict[tuple, object] = defaultdict(int)
        for x, p in self.table.items():
            out[tuple(x[i] for i in coords)] += p
        return FiniteDistribution(out.keys(), out.values())


def entropy(dist: FiniteDistribution, coords: Sequence[int] | None = None) -> float:
    """H(X_coords) in bits (all coordinates by default)."""
    d = dist if coords is None else dist.marginal(coords)
    return math.fsum(-float(p) * _log2(p) for _, p in d.items())


def conditional_entropy(joint: FiniteDistribution, coords: Sequence[int], given: Sequence[int]) -> float:
    """H(X_coords | X_given) = sum_y Pr(Y=y) H(X | Y=y)."""
    coords, given = tuple(coords), tuple(given)
    if not coords:
        return 0.0
    groups: dict[tuple, dict[tuple, object]] = defaultdict(lambda: defaultdict(int))
    for x, p in joint.items():
        groups[tuple(x[i] for i in given)][tuple(x[i] for i in coords)] += p
    terms = []
    for cond in groups.values():
        py = sum(cond.values())
        for p in cond.values():
            q = p / py
            terms.append(-float(p) * _log2(q))
    return math.fsum(terms)


@dataclass(frozen=True)
class FractionalCover:
    """Weighted family of coordinate sets covering each coordinate with total
    weight 1, with a partial order given either by ranks (i < j iff
    rank[i] < rank[j]) or by an explicit set of pairs (i, j) meaning i < j."""

    N: int
    sets: tuple[tuple[frozenset[int], object], ...]
    rank: tuple[float, ...] | None = None
    precedes: frozenset[tuple[int, int]] | None = None

    def coverage(self) -> list:
        cov = [0] * self.N
        for A, w in self.sets:
            for i in A:
                cov[i] += w
        return cov

    def validate(self) -> None:
        for i, c in enumerate(self.coverage()):
            if abs(float(c) - 1) > COVER_TOL:
                raise ValueError(f"coordinate {i} covered with total weight {c}, not 1")

    def before(self, A: Iterable[int]) -> list[int]:
        """Coordinates i with i < a for every a in A."""
        A = list(A)
        if self.rank is not None:
            bound = min(self.rank[a] for a in A)
            return [i for i in range(self.N) if self.rank[i] < bound]
        if self.precedes is not None:
            return [i for i in range(self.N) if all((i, a) in self.precedes for a in A)]
        return []


@dataclass(frozen=True)
class ShearerResult:
    lhs: float
    rhs: float

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs


def shearer_bound(joint: FiniteDistribution, cover: FractionalCover) -> ShearerResult:
    """H(X) against sum_A alpha_A H(X_A | X_i : i < A)."""
    cover.validate()
    if cover.N != joint.N:
        raise ValueError("cover and distribution have different coordinate counts")
    lhs = entropy(joint)
    terms = []
    for A, w in cover.sets:
        if w:
            terms.append(float(w) * conditional_entropy(joint, sorted(A), cover.before(A)))
    return ShearerResult(lhs, math.fsum(terms))


def exact_field_distribution(g: Graph, v0: int, model, cap: int = DEFAULT_ORACLE_CAP) -> FiniteDistribution:
    """Uniform law over every pinned function of the model, coordinates = vertices."""
    return FiniteDistribution.uniform(enumerate_bruteforce(g, v0, model, cap))


def _layer_distance(v: int, n: int, k: int) -> int:
    j = v // k
    return min(j, n - j)


def layered_cycle_cover(n: int, k: int, split: bool = False) -> FractionalCover:
    """Cover of C_{n,k} (pinned at vertex 0): every even-layer vertex v as {v}
    with weight 1 plus its neighbourhood with weight 1/(2k); ``split`` uses
    the two neighbour layers as separate sets. Order: layers by distance
    from layer 0 as 1, 0, 3, 2, 5, 4, ..."""
    N = n * k
    ell = [_layer_distance(v, n, k) for v in range(N)]
    rank = tuple(l - 1 if l % 2 else l + 1 for l in ell)
    w = Fraction(1, 2 * k)
    sets: list[tuple[frozenset[int], object]] = []
    for v in range(N):
        if ell[v] % 2:
            continue
        sets.append((frozenset([v]), Fraction(1)))
        j = v // k
        lower = frozenset(((j - 1) % n) * k + s for s in range(k))
        upper = frozenset(((j + 1) % n) * k + s for s in range(k))
        if split:
            sets.extend([(lower, w), (upper, w)])
        else:
            sets.append((lower | upper, w))
    cover = FractionalCover(N, tuple(sets), rank)
    cover.validate()
    return cover


def distance_order_cover(g: Graph, v0: int) -> FractionalCover:
    """Singleton cover ordered by distance from v0 (always valid)."""
    dist = bfs_distances(g, v0)
    return FractionalCover(g.vertex_count, tuple((frozenset([v]), Fraction(1)) for v in range(g.vertex_count)),
                           tuple(float(d) for d in dist))
