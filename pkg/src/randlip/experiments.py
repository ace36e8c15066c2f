"""Parameter sweeps and statistical checks on exact or sampled data.

Rows are keyed by their parameters and every sampled row draws from its own
substream (seed, "sweep_row", n, k, M), so results do not depend on the
order or the process that computed them.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import stats

from randlip import exact
from randlip.exact import DEFAULT_ORACLE_CAP, default_range_threshold, enumerate_bruteforce
from randlip.graph import Graph, bfs_distances, build_layered_cycle, choose_radius
from randlip.lipschitz import ModelKind
from randlip.mcmc import (DEFAULT_MAX_UPDATES, SamplerConfig, cftp_sample, heat_bath_chain,
                          mcmc_sample_real, wilson_interval)
from randlip.rng import seed_sequence, substream

METHODS = ("exact", "bruteforce", "tm-sample", "cftp", "mcmc")


def derived_seed(seed: int, label: str, *index: int) -> int:
    return int(seed_sequence(seed, label, *index).generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class SweepSpec:
    n: Sequence[int]
    k: Sequence[int]
    M: Sequence[int] = (1,)
    model: str = "lip"
    method: str = "exact"
    trials: int = 2000
    seed: int = 0
    range_threshold: int | None = None
    confidence: float = 0.95
    threads: int = 1
    mcmc_burn_in: int = 1000
    oracle_cap: int = DEFAULT_ORACLE_CAP
    max_updates: int = DEFAULT_MAX_UPDATES

    def __post_init__(self):
        if not (self.n and self.k and self.M):
            raise ValueError("parameter grids must be nonempty")
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        ModelKind.parse(self.model, 1)

    def model_kind(self, M: int) -> ModelKind:
        return ModelKind.parse(self.model, M)

    def grid(self) -> list[tuple[int, int, int]]:
        Ms = (1,) if self.model in ("hom", "zhom", "homomorphism") else self.M
        return [(n, k, M) for n in self.n for k in self.k for M in Ms]


@dataclass
class ResultRow:
    family: str
    n: int
    k: int
    M: int
    model: str
    method: str
    threshold: int
    trials: int | None = None
    pr_range_le: float | None = None
    pr_range_le_exact: str | None = None
    pr_ci_low: float | None = None
    pr_ci_high: float | None = None
    epsilon: float | None = None
    epsilon_ci_low: float | None = None
    epsilon_ci_high: float | None = None
    ideal_edge_prob: float | None = None
    ideal_ci_low: float | None = None
    ideal_ci_high: float | None = None
    mean_range: float | None = None
    range_q10: float | None = None
    range_q50: float | None = None
    range_q90: float | None = None
    count: str | None = None
    wall_time: float = 0.0
    error: str | None = None

    @property
    def key(self) -> tuple:
        return (self.family, self.n, self.k, self.M, self.model, self.method)


CSV_FIELDS = [f.name for f in fields(ResultRow)]


def _exact_row(row: ResultRow, model: ModelKind) -> None:
    n, k = row.n, row.k
    dist = exact.tm_range_distribution(n, k, model)
    p = sum((q for r, q in dist.items() if r <= row.threshold), Fraction(0))
    row.pr_range_le = float(p)
    row.pr_range_le_exact = str(p)
    row.count = str(exact.tm_count(n, k, model).count)
    _fill_range_moments(row, {r: float(q) for r, q in dist.items()})
    if model.kind == "lip":
        row.epsilon = float(exact.tm_epsilon(n, k, model))
        row.ideal_edge_prob = float(exact.tm_ideal_edge_probability(n, k, model))


def _fill_range_moments(row: ResultRow, law: dict[int, float]) -> None:
    rs = sorted(law)
    row.mean_range = math.fsum(r * law[r] for r in rs)
    cum = np.cumsum([law[r] for r in rs])
    for q, name in ((0.1, "range_q10"), (0.5, "range_q50"), (0.9, "range_q90")):
        idx = int(np.searchsorted(cum, q - 1e-15))
        setattr(row, name, float(rs[min(idx, len(rs) - 1)]))


def _layer_width(values: np.ndarray, k: int, j: int) -> int:
    seg = values[j * k:(j + 1) * k]
    return int(seg.max() - seg.min() + 1)


def _sampled_row(row: ResultRow, model: ModelKind, spec: SweepSpec) -> None:
    n, k, M = row.n, row.k, row.M
    g = build_layered_cycle(n, k)
    rseed = derived_seed(spec.seed, "sweep_row", n, k, M)
    trials = spec.trials
    if row.method == "bruteforce":
        hist: dict[int, int] = {}
        eps_hits = ideal_hits = total = 0
        for f in enumerate_bruteforce(g, 0, model, spec.oracle_cap):
            a = np.asarray(f)
            r = int(a.max() - a.min() + 1)
            hist[r] = hist.get(r, 0) + 1
            total += 1
            if model.kind == "lip":
                widths = [_layer_width(a, k, j % n) for j in range(4)]
                eps_hits += widths[1] != M + 1
                ideal_hits += all(w == M + 1 for w in widths)
        hits = sum(c for r, c in hist.items() if r <= row.threshold)
        p = Fraction(hits, total)
        row.pr_range_le, row.pr_range_le_exact, row.count = float(p), str(p), str(total)
        _fill_range_moments(row, {r: c / total for r, c in hist.items()})
        if model.kind == "lip":
            row.epsilon = eps_hits / total
            row.ideal_edge_prob = ideal_hits / total
        return
    if row.method == "tm-sample":
        draws = [np.asarray(f.values) for f in exact.tm_sample(n, k, model, rseed, trials)]
    elif model.kind != "lip":
        raise ValueError(f"method {row.method} supports the Lipschitz model only")
    elif row.method == "cftp":
        draws = [np.asarray(cftp_sample(g, 0, M, rseed, index=i, max_updates=spec.max_updates).function.values)
                 for i in range(trials)]
    else:
        cfg = SamplerConfig(seed=rseed, burn_in=spec.mcmc_burn_in)
        draws = [np.asarray(f.values) for f in heat_bath_chain(g, 0, model, cfg, trials).samples]
    row.trials = trials
    ranges = np.array([d.max() - d.min() + 1 for d in draws])
    hits = int((ranges <= row.threshold).sum())
    row.pr_range_le = hits / trials
    row.pr_ci_low, row.pr_ci_high = wilson_interval(hits, trials, spec.confidence)
    row.mean_range = float(ranges.mean())
    for q, name in ((0.1, "range_q10"), (0.5, "range_q50"), (0.9, "range_q90")):
        setattr(row, name, float(np.quantile(ranges, q, method="inverted_cdf")))
    if model.kind == "lip":
        widths = np.array([[_layer_width(d, k, j % n) for j in range(4)] for d in draws])
        e = int((widths[:, 1] != M + 1).sum())
        i = int((widths == M + 1).all(axis=1).sum())
        row.epsilon = e / trials
        row.epsilon_ci_low, row.epsilon_ci_high = wilson_interval(e, trials, spec.confidence)
        row.ideal_edge_prob = i / trials
        row.ideal_ci_low, row.ideal_ci_high = wilson_interval(i, trials, spec.confidence)


def run_row(spec: SweepSpec, n: int, k: int, M: int) -> ResultRow:
    model = spec.model_kind(M)
    threshold = spec.range_threshold if spec.range_threshold is not None else default_range_threshold(model)
    row = ResultRow("cnk", n, k, model.M, model.kind, spec.method, threshold)
    t0 = time.perf_counter()
    try:
        if spec.method == "exact":
            _exact_row(row, model)
        else:
            _sampled_row(row, model, spec)
    except Exception as exc:  # recorded per row; the sweep goes on
        row.error = f"{type(exc).__name__}: {exc}"
    row.wall_time = time.perf_counter() - t0
    return row


def _run_row_packed(args) -> ResultRow:
    return run_row(*args)


def sweep_phase_transition(spec: SweepSpec) -> list[ResultRow]:
    grid = spec.grid()
    jobs = [(spec, n, k, M) for n, k, M in grid]
    if spec.threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=spec.threads) as pool:
            rows = list(pool.map(_run_row_packed, jobs))
    else:
        rows = [run_row(*j) for j in jobs]
    return sorted(rows, key=lambda r: r.key)


def monotonicity_flags(rows: Iterable[ResultRow], attr: str = "pr_range_le",
                       increasing: bool = True) -> list[tuple[int, int, int, int]]:
    """(n, M, k_prev, k) pairs where ``attr`` moves the wrong way in k."""
    series: dict[tuple[int, int], list[ResultRow]] = {}
    for r in rows:
        if getattr(r, attr) is not None:
            series.setdefault((r.n, r.M), []).append(r)
    bad = []
    for (n, M), rs in sorted(series.items()):
        rs.sort(key=lambda r: r.k)
        for a, b in zip(rs, rs[1:]):
            x, y = getattr(a, attr), getattr(b, attr)
            if (y < x) if increasing else (y > x):
                bad.append((n, M, a.k, b.k))
    return bad


# --- output -------------------------------------------------------------------

def row_dict(r: ResultRow, timing: bool = False) -> dict:
    """Row as a dict; wall time is left out unless asked for, so that
    reruns of exact or seeded sweeps are byte-identical."""
    d = asdict(r)
    if not timing:
        del d["wall_time"]
    return d


def rows_to_csv(rows: Iterable[ResultRow], timing: bool = False) -> str:
    buf = io.StringIO()
    names = [f for f in CSV_FIELDS if timing or f != "wall_time"]
    w = csv.DictWriter(buf, fieldnames=names, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: ("" if v is None else v) for k, v in row_dict(r, timing).items()})
    return buf.getvalue()


def rows_to_jsonl(rows: Iterable[ResultRow], timing: bool = False) -> str:
    return "".join(json.dumps(row_dict(r, timing), sort_keys=True) + "\n" for r in rows)


def plot_series(rows: Iterable[ResultRow], y: str = "pr_range_le") -> dict[str, str]:
    """Two-column (k, y) text blocks, one per (model, n, M) series."""
    series: dict[str, list[tuple[int, float]]] = {}
    for r in rows:
        val = getattr(r, y)
        if val is None:
            continue
        series.setdefault(f"{r.model}_n{r.n}_M{r.M}_{y}.dat", []).append((r.k, val))
    return {name: "".join(f"{k} {v:.17g}\n" for k, v in sorted(pts)) for name, pts in series.items()}


# --- exact sampler on a cycle ----------------------------------------------------------

def cycle_exact_samples(n: int, M: int, seed: int, count: int, batch: int = 4096) -> np.ndarray:
    """Uniform pinned M-Lipschitz functions on the n-cycle (v0 = 0).

    Such a function is the same thing as a sequence of n edge increments in
    [-M, M] summing to zero, so i.i.d. uniform increments conditioned on a
    zero sum (by rejection) give an exact sample.
    """
    if n < 3:
        raise ValueError("cycle needs n >= 3")
    out: list[np.ndarray] = []
    have = 0
    b = 0
    while have < count:
        rng = substream(seed, "cycle_exact", b)
        inc = rng.integers(-M, M + 1, size=(batch, n), dtype=np.int64)
        keep = inc[inc.sum(axis=1) == 0]
        out.append(keep)
        have += len(keep)
        b += 1
    inc = np.concatenate(out)[:count]
    vals = np.zeros((count, n), dtype=np.int64)
    np.cumsum(inc[:, :-1], axis=1, out=vals[:, 1:])
    return vals


def _is_cycle(g: Graph) -> bool:
    return g.vertex_count >= 3 and all(g.degree(v) == 2 for v in range(g.vertex_count)) and g.is_connected()


# --- range lower bound ------------------------------------------------------------------

@dataclass(frozen=True)
class RangeBoundResult:
    model: str
    M: int
    r: int
    target: float
    trials: int
    hits: int
    threshold: float
    ci_low: float
    ci_high: float
    method: str

    @property
    def probability(self) -> float:
        return self.hits / self.trials

    @property
    def passed(self) -> bool:
        return self.probability < self.threshold


def verify_range_lower_bound(g: Graph, M, r: int, trials: int, seed: int, threshold: float = 0.1,
                             method: str = "cftp", v0: int = 0, c: float | None = None,
                             confidence: float = 0.95, max_updates: int = DEFAULT_MAX_UPDATES,
                             real_config: SamplerConfig | None = None) -> RangeBoundResult:
    """Empirical Pr(R < M r / 2) (or Pr(R < r/2) for the real model).

    ``M`` is an int or a ModelKind. Methods: "cftp" (integer), "cycle-exact"
    (integer, cycles only), "mcmc" (integer or real).
    """
    model = M if isinstance(M, ModelKind) else ModelKind.lipschitz(int(M))
    if model.kind == "hom":
        raise ValueError("range lower bound is stated for Lipschitz models")
    if c is not None and r > choose_radius(g, c):
        raise ValueError(f"radius {r} exceeds choose_radius(G, {c}) = {choose_radius(g, c)}")
    mod = 1 if model.kind == "real" else model.M
    target = mod * r / 2
    if model.kind == "real":
        if method != "mcmc":
            raise ValueError("the real model is sampled by heat-bath MCMC only")
        cfg = real_config or SamplerConfig(seed=derived_seed(seed, "range_bound_real"))
        ranges = mcmc_sample_real(g, v0, cfg, trials).range_trace
    elif method == "cftp":
        bfs_distances(g, v0)
        ranges = []
        for i in range(trials):
            vals = cftp_sample(g, v0, model.M, seed, index=i, max_updates=max_updates).function.values
            ranges.append(max(vals) - min(vals) + 1)
    elif method == "cycle-exact":
        if not _is_cycle(g):
            raise ValueError("cycle-exact sampling needs a cycle graph")
        if v0 != 0:
            raise ValueError("cycle-exact sampling pins vertex 0")
        # the range does not depend on how the cycle is labelled
        vals = cycle_exact_samples(g.vertex_count, model.M, seed, trials)
        ranges = list(vals.max(axis=1) - vals.min(axis=1) + 1)
    elif method == "mcmc":
        cfg = real_config or SamplerConfig(seed=derived_seed(seed, "range_bound_mcmc"))
        ranges = heat_bath_chain(g, v0, model, cfg, trials).range_trace
    else:
        raise ValueError(f"unknown method {method!r}")
    hits = sum(1 for x in ranges if x < target)
    lo, hi = wilson_interval(hits, trials, confidence)
    return RangeBoundResult(model.kind, mod, r, target, trials, hits, threshold, lo, hi, method)


# --- convergence of f_M / M ---------------------------------------------------------------

@dataclass(frozen=True)
class ConvergenceResult:
    Ms: tuple[int, ...]
    distances: tuple[float, ...]
    trials: int
    noise: float

    def nonincreasing(self, slack: float | None = None) -> bool:
        tol = self.noise if slack is None else slack
        return all(b <= a + tol for a, b in zip(self.distances, self.distances[1:]))


def scaled_statistic(values: Sequence[int], M: int, statistic: str, probe: int | None) -> float:
    if statistic == "range":
        # R(f_M / M) = (max - min)/M + 1, not R(f_M)/M
        return (max(values) - min(values)) / M + 1
    if statistic == "probe":
        return values[probe] / M
    raise ValueError("statistic must be 'range' or 'probe'")


def kolmogorov_distance(xs: Sequence[float], cdf: Callable[[np.ndarray], np.ndarray]) -> float:
    """sup_x |F_n(x) - F(x)| for a right-continuous reference CDF F, which
    may itself have jumps (scipy's kstest assumes a continuous F)."""
    xs = np.sort(np.asarray(xs, dtype=float))
    pts = np.unique(xs)
    n = len(xs)
    right = np.searchsorted(xs, pts, side="right") / n
    left = np.searchsorted(xs, pts, side="left") / n
    f_right = np.asarray(cdf(pts), dtype=float)
    f_left = np.asarray(cdf(np.nextafter(pts, -np.inf)), dtype=float)
    return float(max(np.abs(right - f_right).max(), np.abs(left - f_left).max()))


def convergence_check(g: Graph, Ms: Sequence[int], trials: int, seed: int, v0: int = 0,
                      statistic: str = "range", probe: int | None = None,
                      reference: Callable[[np.ndarray], np.ndarray] | None = None,
                      real_config: SamplerConfig | None = None) -> ConvergenceResult:
    """Kolmogorov distance between the law of a statistic of f_M / M
    (CFTP samples) and its law under the real model: either a given
    reference CDF or heat-bath samples of the real model."""
    if statistic == "probe" and probe is None:
        raise ValueError("statistic 'probe' needs a probe vertex")
    if reference is None:
        cfg = real_config or SamplerConfig(seed=derived_seed(seed, "convergence_real"),
                                           burn_in=2000, thinning=5)
        chain = mcmc_sample_real(g, v0, cfg, trials, probe=probe)
        ref = np.array(chain.range_trace if statistic == "range" else chain.probe_trace)
    dists = []
    for M in Ms:
        xs = np.array([scaled_statistic(cftp_sample(g, v0, M, seed, index=i).function.values, M, statistic, probe)
                       for i in range(trials)])
        if reference is None:
            dists.append(float(stats.ks_2samp(xs, ref).statistic))
        else:
            dists.append(kolmogorov_distance(xs, reference))
    # 95% two-sided KS critical value, one-sample or two-sample
    noise = 1.358 * math.sqrt((1 if reference is not None else 2) / trials)
    return ConvergenceResult(tuple(Ms), tuple(dists), trials, noise)


# --- the many-high-vertices example -------------------------------------------------------

@dataclass(frozen=True)
class RatioResult:
    n: int
    k: int
    M: int
    alpha: int
    beta: int
    eligible: int

    @property
    def ratio(self) -> Fraction:
        return Fraction(self.beta, self.alpha)

    @property
    def displayed(self) -> Fraction:
        """((n-2)k - 1) (M/(M+1))^(2k)."""
        return ((self.n - 2) * self.k - 1) * Fraction(self.M, self.M + 1) ** (2 * self.k)

    @property
    def pinned(self) -> Fraction:
        """Closed form under the pin f(v0) = 0: the displayed value / (M+1)."""
        return self.displayed / (self.M + 1)


def ratio_example_check(n: int, k: int, M: int, cap: int = DEFAULT_ORACLE_CAP) -> RatioResult:
    """alpha = #{pinned f with values in [0, M]}; beta = sum over vertices u at
    distance >= 2 from v0 of #{f(u) = M+1, neighbours of u in [1, M], the
    rest in [0, M]}. Brute force over the value window [0, M+1]."""
    g = build_layered_cycle(n, k)
    dist = bfs_distances(g, 0)
    eligible = [u for u in range(g.vertex_count) if dist[u] >= 2]
    nbrs = [set(g.neighbors(u)) for u in range(g.vertex_count)]
    alpha = beta = 0
    for f in enumerate_bruteforce(g, 0, ModelKind.lipschitz(M), cap, window=(0, M + 1)):
        if max(f) <= M:
            alpha += 1
            continue
        for u in eligible:
            if f[u] != M + 1:
                continue
            if all((1 <= f[w] <= M) if w in nbrs[u] else (0 <= f[w] <= M)
                   for w in range(g.vertex_count) if w != u):
                beta += 1
    return RatioResult(n, k, M, alpha, beta, len(eligible))
