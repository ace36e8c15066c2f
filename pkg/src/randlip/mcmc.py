"""Heat-bath Glauber dynamics and monotone coupling from the past.

A heat-bath update resamples one vertex uniformly from the interval its
neighbours allow, ``[max_nbr - M, min_nbr + M]``, through the quantile map
``lo + floor(u * (hi - lo + 1))``. For fixed ``u`` that map is nondecreasing
in both endpoints, and the endpoints are nondecreasing in the neighbour
values, so the update is monotone and CFTP from the top and bottom pinned
functions is exact.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np
from numba import njit
from scipy.stats import binomtest

from randlip.graph import Graph, bfs_distances
from randlip.lipschitz import IntLipschitzFunction, ModelKind, RealLipschitzFunction
from randlip.rng import substream

DEFAULT_MAX_UPDATES = 2**30
_INF = 1 << 60


class NoCoalescence(RuntimeError):
    """CFTP hit its update budget before the top and bottom chains met."""


# --- single-site update ----------------------------------------------------------

def allowed_interval(g: Graph, f, v: int, M: float = 1):
    nb = g.neighbors(v)
    if not nb:
        raise ValueError(f"vertex {v} has no neighbours")
    return max(f[w] for w in nb) - M, min(f[w] for w in nb) + M


def heat_bath_update(g: Graph, f, v: int, u: float, M: int = 1, real: bool = False):
    """New value at ``v`` given uniform ``u`` in [0, 1)."""
    lo, hi = allowed_interval(g, f, v, M)
    assert lo <= hi, "empty interval: input assignment is not valid"
    if real:
        return lo + u * (hi - lo)
    return min(lo + math.floor(u * (hi - lo + 1)), hi)


@njit(cache=True)
def _systematic_int(indptr, indices, order, f, U, M):
    for s in range(U.shape[0]):
        for t in range(order.shape[0]):
            v = order[t]
            lo = -_INF
            hi = _INF
            for p in range(indptr[v], indptr[v + 1]):
                x = f[indices[p]]
                if x - M > lo:
                    lo = x - M
                if x + M < hi:
                    hi = x + M
            y = lo + np.int64(np.floor(U[s, t] * (hi - lo + 1)))
            f[v] = hi if y > hi else y


@njit(cache=True)
def _random_scan_int(indptr, indices, verts, f, U, M):
    for t in range(verts.shape[0]):
        v = verts[t]
        lo = -_INF
        hi = _INF
        for p in range(indptr[v], indptr[v + 1]):
            x = f[indices[p]]
            if x - M > lo:
                lo = x - M
            if x + M < hi:
                hi = x + M
        y = lo + np.int64(np.floor(U[t] * (hi - lo + 1)))
        f[v] = hi if y > hi else y


@njit(cache=True)
def _systematic_real(indptr, indices, order, f, U):
    for s in range(U.shape[0]):
        for t in range(order.shape[0]):
            v = order[t]
            lo = -np.inf
            hi = np.inf
            for p in range(indptr[v], indptr[v + 1]):
                x = f[indices[p]]
                if x - 1.0 > lo:
                    lo = x - 1.0
                if x + 1.0 < hi:
                    hi = x + 1.0
            f[v] = lo + U[s, t] * (hi - lo)


@njit(cache=True)
def _random_scan_real(indptr, indices, verts, f, U):
    for t in range(verts.shape[0]):
        v = verts[t]
        lo = -np.inf
        hi = np.inf
        for p in range(indptr[v], indptr[v + 1]):
            x = f[indices[p]]
            if x - 1.0 > lo:
                lo = x - 1.0
            if x + 1.0 < hi:
                hi = x + 1.0
        f[v] = lo + U[t] * (hi - lo)


# --- configuration and chain state -------------------------------------------------

@dataclass(frozen=True)
class SamplerConfig:
    seed: int = 0
    scan: str = "random"
    burn_in: int = 1000
    thinning: int = 1

    def __post_init__(self):
        if self.scan not in ("random", "systematic"):
            raise ValueError("scan must be 'random' or 'systematic'")
        if self.burn_in < 0 or self.thinning < 1:
            raise ValueError("burn_in >= 0 and thinning >= 1 required")


@dataclass
class ChainState:
    values: np.ndarray
    model: ModelKind
    updates: int = 0


@dataclass
class ChainResult:
    samples: list
    range_trace: list[float]
    probe_trace: list[float]
    final: ChainState


def _fixed_bounds(g: Graph, fixed: Mapping[int, int], M: int) -> tuple[np.ndarray, np.ndarray]:
    """Pointwise top and bottom of all M-Lipschitz functions agreeing with ``fixed``."""
    n = g.vertex_count
    top = np.full(n, _INF, dtype=np.int64)
    bot = np.full(n, -_INF, dtype=np.int64)
    for w, val in fixed.items():
        d = np.asarray(bfs_distances(g, w), dtype=np.int64)
        np.minimum(top, val + M * d, out=top)
        np.maximum(bot, val - M * d, out=bot)
    if (top < bot).any():
        raise ValueError("fixed values admit no M-Lipschitz extension")
    for w, val in fixed.items():
        if top[w] != val or bot[w] != val:
            raise ValueError("fixed values admit no M-Lipschitz extension")
    return top, bot


def _free_order(n: int, fixed: Iterable[int]) -> np.ndarray:
    fixed = set(fixed)
    return np.array([v for v in range(n) if v not in fixed], dtype=np.int64)


@dataclass
class CFTPResult:
    function: IntLipschitzFunction | dict
    epochs: int
    updates: int


def cftp_sample(g: Graph, v0: int, M: int, seed: int, index: int = 0,
                fixed: Mapping[int, int] | None = None,
                max_updates: int = DEFAULT_MAX_UPDATES) -> CFTPResult:
    """Exactly uniform pinned M-Lipschitz function by monotone CFTP.

    Epoch e runs systematic sweeps from time -2**e to 0; its newest block of
    sweeps (times -2**e .. -2**(e-1) - 1) gets randomness from the
    substream (seed, "cftp", index, e), and older blocks are reused verbatim.
    ``fixed`` replaces the single pin {v0: 0} by an arbitrary boundary
    condition (the result is then a plain values array in a dict).
    """
    pins = {v0: 0} if fixed is None else dict(fixed)
    top0, bot0 = _fixed_bounds(g, pins, M)
    order = _free_order(g.vertex_count, pins)
    ip, ix = g.indptr, g.indices
    if len(order) == 0:
        return _cftp_result(top0, M, v0, fixed, 0, 0)
    blocks: list[np.ndarray] = []
    used = 0
    e = 0
    while True:
        sweeps = 1 if e == 0 else 2 ** (e - 1)
        blocks.append(substream(seed, "cftp", index, e).random((sweeps, len(order))))
        top, bot = top0.copy(), bot0.copy()
        for blk in reversed(blocks):
            _systematic_int(ip, ix, order, top, blk, M)
            _systematic_int(ip, ix, order, bot, blk, M)
        used += 2 * (2 ** e) * len(order)
        if np.array_equal(top, bot):
            return _cftp_result(top, M, v0, fixed, e + 1, used)
        if used > max_updates:
            raise NoCoalescence(f"no coalescence after {used} updates ({e + 1} epochs)")
        e += 1


def _cftp_result(values, M, v0, fixed, epochs, used):
    vals = tuple(int(x) for x in values)
    if fixed is None:
        return CFTPResult(IntLipschitzFunction(vals, M, v0), epochs, used)
    return CFTPResult(dict(enumerate(vals)), epochs, used)


def cftp_samples(g: Graph, v0: int, M: int, seed: int, count: int, start: int = 0,
                 **kwargs) -> list[CFTPResult]:
    return [cftp_sample(g, v0, M, seed, index=i, **kwargs) for i in range(start, start + count)]


# --- approximate sampling ------------------------------------------------------------

_CHUNK = 256


def heat_bath_chain(g: Graph, v0: int, model: ModelKind, config: SamplerConfig,
                    samples: int, probe: int | None = None,
                    start: Sequence[float] | None = None, stream: int = 0) -> ChainResult:
    """Run heat-bath Glauber dynamics and collect ``samples`` states, one every
    ``config.thinning`` sweeps after ``config.burn_in`` sweeps."""
    if model.kind == "hom":
        raise ValueError("heat-bath sampling is implemented for Lipschitz models only")
    real = model.kind == "real"
    n = g.vertex_count
    bfs_distances(g, v0)  # connectivity check
    dtype = np.float64 if real else np.int64
    f = np.zeros(n, dtype=dtype) if start is None else np.array(start, dtype=dtype)
    order = _free_order(n, [v0])
    nfree = len(order)
    probe = probe if probe is not None else (int(order[-1]) if nfree else v0)
    ip, ix = g.indptr, g.indices
    state = ChainState(f, model)
    total_sweeps = config.burn_in + samples * config.thinning
    out, rtrace, ptrace = [], [], []
    done = 0
    chunk = 0
    while done < total_sweeps and nfree:
        todo = min(_CHUNK, total_sweeps - done)
        rng = substream(config.seed, "heat_bath", stream, chunk)
        U = rng.random((todo, nfree))
        verts = order[rng.integers(0, nfree, size=(todo, nfree))] if config.scan == "random" else None
        for s in range(todo):
            if verts is None:
                if real:
                    _systematic_real(ip, ix, order, f, U[s:s + 1])
                else:
                    _systematic_int(ip, ix, order, f, U[s:s + 1], model.M)
            elif real:
                _random_scan_real(ip, ix, verts[s], f, U[s])
            else:
                _random_scan_int(ip, ix, verts[s], f, U[s], model.M)
            state.updates += nfree
            t = done + s + 1
            if t > config.burn_in and (t - config.burn_in) % config.thinning == 0:
                _record(f, real, model, v0, probe, out, rtrace, ptrace)
        done += todo
        chunk += 1
    if not nfree:
        for _ in range(samples):
            _record(f, real, model, v0, probe, out, rtrace, ptrace)
    return ChainResult(out, rtrace, ptrace, state)


def _record(f, real, model, v0, probe, out, rtrace, ptrace):
    if real:
        vals = tuple(float(x) for x in f)
        out.append(RealLipschitzFunction(vals, v0))
    else:
        vals = tuple(int(x) for x in f)
        out.append(IntLipschitzFunction(vals, model.M, v0))
    rtrace.append(max(vals) - min(vals) + 1)
    ptrace.append(vals[probe])


def mcmc_sample_real(g: Graph, v0: int, config: SamplerConfig, samples: int = 1,
                     probe: int | None = None, stream: int = 0) -> ChainResult:
    return heat_bath_chain(g, v0, ModelKind.real(), config, samples, probe, stream=stream)


# --- range statistics ----------------------------------------------------------------

def wilson_interval(successes: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    ci = binomtest(successes, trials).proportion_ci(confidence_level=confidence, method="wilson")
    return float(ci.low), float(ci.high)


@dataclass
class RangeDistribution:
    ranges: list[float]
    confidence: float = 0.95
    histogram: Counter = field(init=False)

    def __post_init__(self):
        self.histogram = Counter(self.ranges)

    @property
    def trials(self) -> int:
        return len(self.ranges)

    def prob_le(self, x: float) -> tuple[float, float, float]:
        hits = sum(c for r, c in self.histogram.items() if r <= x)
        return (hits / self.trials,) + wilson_interval(hits, self.trials, self.confidence)

    def prob_lt(self, x: float) -> tuple[float, float, float]:
        hits = sum(c for r, c in self.histogram.items() if r < x)
        return (hits / self.trials,) + wilson_interval(hits, self.trials, self.confidence)

    def intervals(self) -> dict[float, tuple[float, float, float]]:
        return {r: (c / self.trials,) + wilson_interval(c, self.trials, self.confidence)
                for r, c in sorted(self.histogram.items())}

    @property
    def mean(self) -> float:
        return float(np.mean(self.ranges))

    def quantile(self, q: float) -> float:
        return float(np.quantile(self.ranges, q, method="inverted_cdf"))


def _range_of_sample(s) -> float:
    if isinstance(s, CFTPResult):
        s = s.function
    vals = list(s.values()) if isinstance(s, Mapping) else getattr(s, "values", s)
    return max(vals) - min(vals) + 1


def estimate_range_distribution(sampler: Callable[[int], object] | Iterable, trials: int,
                                confidence: float = 0.95) -> RangeDistribution:
    """Empirical law of R over ``trials`` draws; ``sampler`` is either a
    callable taking the trial index or an iterable of samples."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if callable(sampler):
        draws = (sampler(i) for i in range(trials))
    else:
        it = iter(sampler)
        draws = (next(it) for _ in range(trials))
    return RangeDistribution([_range_of_sample(s) for s in draws], confidence)
