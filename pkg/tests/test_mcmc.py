import random
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from randlip.exact import enumerate_bruteforce, tm_pr_range_le
from randlip.graph import build_layered_cycle, complete_graph, cycle_graph, path_graph
from randlip.lipschitz import ModelKind, extremal, validate
from randlip.mcmc import (NoCoalescence, SamplerConfig, cftp_sample, cftp_samples, estimate_range_distribution,
                          heat_bath_chain, heat_bath_update, mcmc_sample_real, wilson_interval)
from conftest import random_connected_graph


def test_heat_bath_examples():
    g = path_graph(3)
    assert all(heat_bath_update(g, [0, 5, 2], 1, u) == 1 for u in (0.0, 0.3, 0.999))
    g = complete_graph(2)
    assert heat_bath_update(g, [0, 0], 1, 0.0) == -1
    assert heat_bath_update(g, [0, 0], 1, np.nextafter(1.0, 0)) == 1
    assert heat_bath_update(g, [0.0, 0.3], 1, 0.5, real=True) == 0.0


def _random_ordered_pair(rnd, g, M):
    """Two valid M-Lipschitz functions f <= g built as pointwise min/max of random ones."""
    n = g.vertex_count
    top = extremal(g, 0, M, 1).values
    def rand_f():
        f = list(top)
        for _ in range(3 * n):
            v = rnd.randrange(1, n)
            f[v] = heat_bath_update(g, f, v, rnd.random(), M)
        return f
    a, b = rand_f(), rand_f()
    return [min(x, y) for x, y in zip(a, b)], [max(x, y) for x, y in zip(a, b)]


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 50), st.integers(0, 30), st.integers(1, 4), st.randoms(use_true_random=False))
def test_monotone_coupling(n, extra, M, rnd):
    g = random_connected_graph(rnd, n, extra)
    f, h = _random_ordered_pair(rnd, g, M)
    assert not validate(g, f, ModelKind.lipschitz(M)) and not validate(g, h, ModelKind.lipschitz(M))
    for _ in range(10):
        v = rnd.randrange(1, n)
        u = rnd.random()
        assert heat_bath_update(g, f, v, u, M) <= heat_bath_update(g, h, v, u, M)


def test_cftp_k2_uniform():
    xs = [r.function.values[1] for r in cftp_samples(complete_graph(2), 0, 2, seed=3, count=5000)]
    c = Counter(xs)
    assert set(c) == {-2, -1, 0, 1, 2}
    assert stats.chisquare([c[x] for x in range(-2, 3)]).pvalue > 0.001


def test_cftp_c42_range_probability():
    g = build_layered_cycle(4, 2)
    res = estimate_range_distribution(lambda i: cftp_sample(g, 0, 1, seed=9, index=i), 4000)
    p, _, _ = res.prob_le(2)
    exact = float(tm_pr_range_le(4, 2, 1))
    assert abs(p - exact) < 3 * (exact * (1 - exact) / 4000) ** 0.5


def test_cftp_deterministic_and_cap_invariant():
    g = build_layered_cycle(4, 2)
    a = [r.function for r in cftp_samples(g, 0, 1, seed=4, count=50)]
    b = [r.function for r in cftp_samples(g, 0, 1, seed=4, count=50)]
    c = [r.function for r in cftp_samples(g, 0, 1, seed=4, count=50, max_updates=2 ** 40)]
    assert a == b == c


def test_cftp_no_coalescence():
    with pytest.raises(NoCoalescence):
        cftp_sample(cycle_graph(64), 0, 3, seed=0, max_updates=1000)


def test_cftp_fixed_boundary():
    g = path_graph(7)
    fixed = {0: 0, 6: 4}
    for i in range(50):
        f = cftp_sample(g, 0, 2, seed=1, index=i, fixed=fixed).function
        assert f[0] == 0 and f[6] == 4
        assert not validate(g, f, ModelKind.lipschitz(2))


def test_real_chain_k2_uniform():
    cfg = SamplerConfig(seed=2, burn_in=10, thinning=1)
    chain = mcmc_sample_real(complete_graph(2), 0, cfg, samples=10000, probe=1)
    assert stats.kstest(chain.probe_trace, stats.uniform(-1, 2).cdf).statistic < 0.02
    assert all(not validate(complete_graph(2), f, ModelKind.real()) for f in chain.samples[:100])


def test_real_chain_valid_on_cycle():
    g = build_layered_cycle(6, 2)
    chain = mcmc_sample_real(g, 0, SamplerConfig(seed=5, burn_in=50, scan="systematic"), samples=200)
    assert all(not validate(g, f, ModelKind.real()) for f in chain.samples)


def test_chain_deterministic():
    g = cycle_graph(8)
    cfg = SamplerConfig(seed=8, burn_in=20)
    a = heat_bath_chain(g, 0, ModelKind.lipschitz(2), cfg, 30).samples
    b = heat_bath_chain(g, 0, ModelKind.lipschitz(2), cfg, 30).samples
    assert a == b


def test_chain_keeps_uniform_stationary():
    # start from exact uniform draws and run one random-scan sweep each; the law stays uniform
    g = cycle_graph(4)
    support = sorted(enumerate_bruteforce(g, 0, 1))
    rnd = random.Random(0)
    counts = Counter()
    for t in range(40000):
        f = list(rnd.choice(support))
        v = rnd.randrange(1, 4)
        f[v] = heat_bath_update(g, f, v, rnd.random(), 1)
        counts[tuple(f)] += 1
    assert stats.chisquare([counts[f] for f in support]).pvalue > 0.001


def test_range_distribution_helpers():
    res = estimate_range_distribution(lambda i: (0, 0, 0), 100)
    assert res.prob_le(1)[0] == 1.0 and res.mean == 1.0
    lo, hi = wilson_interval(0, 100)
    assert lo == 0.0 and 0 < hi < 0.05
    with pytest.raises(ValueError):
        estimate_range_distribution(lambda i: (0,), 0)
