import random

import pytest

from randlip.constructions import (band, extension_family_size, family_lower_bound, generate_high_extensions,
                                   high_set_decomposition, iter_extensions, lift_one_lipschitz)
from randlip.graph import ball, cycle_graph, path_graph
from randlip.lipschitz import ModelKind, validate
from randlip.mcmc import cftp_sample
from conftest import random_connected_graph

P3 = path_graph(3)
B1 = ball(P3, 1, 1)


def test_decomposition_examples():
    d = high_set_decomposition(P3, B1, (0, 1, 0), 2)
    assert d.A == set() and d.Qstar == set()
    d = high_set_decomposition(P3, B1, (0, 2, 0), 2)
    assert d.A == {1} and d.Q == {0, 2} and d.Qstar == set()
    d = high_set_decomposition(cycle_graph(6), ball(cycle_graph(6), 0, 2), (0,) * 6, 3)
    assert d.A == set() and d.Qstar == set()


def test_decomposition_requires_normalized_boundary():
    with pytest.raises(ValueError, match="translate"):
        high_set_decomposition(P3, B1, (1, 2, 1), 2)


def test_extension_examples():
    out = list(generate_high_extensions(P3, B1, (0, 1, 0), 2))
    assert out == [{0: 0, 1: 1, 2: 0}]
    out = list(generate_high_extensions(P3, B1, (0, 1, 0), 4))
    assert [g[1] for g in out] == [2, 3]
    assert all(not validate(P3, g, ModelKind.lipschitz(4), v0=None, partial=True) for g in out)
    with pytest.raises(ValueError, match="lift_one_lipschitz"):
        list(generate_high_extensions(P3, B1, (0, 1, 0), 1))


def test_band_realization():
    assert band(2, 1) == (1, 1)
    assert band(4, 1) == (2, 3)
    assert band(3, 0) == (0, 0)
    assert band(3, 1) == (2, 2)
    assert band(5, 1) == (3, 4)
    for M in range(2, 8):
        for i in range(6):
            lo, hi = band(M, i)
            assert lo >= M * i / 2 and hi <= M * (i + 1) / 2 - 1 and hi - lo + 1 >= (M - 1) / 2


def test_lift_examples():
    assert lift_one_lipschitz(P3, B1, (0, 0, 0)) == {0: 0, 1: 1, 2: 0}
    P5 = path_graph(5)
    h = lift_one_lipschitz(P5, ball(P5, 2, 2), (0,) * 5)
    assert [h[v] for v in range(5)] == [0, 1, 2, 1, 0]
    # already maximal at the centre: nothing changes
    top = (0, 1, 2, 3, 4)
    assert lift_one_lipschitz(P5, ball(P5, 2, 2), top) == dict(enumerate(top))
    with pytest.raises(ValueError):
        lift_one_lipschitz(P3, B1, (0, -1, 0))


def _instance(rnd, M):
    """Random graph, exact-radius ball and a CFTP sample conditioned on a
    normalized boundary drawn from a global CFTP sample."""
    while True:
        g = random_connected_graph(rnd, rnd.randrange(5, 26), rnd.randrange(0, 8))
        r = rnd.randrange(1, 4)
        v = rnd.randrange(g.vertex_count)
        b = ball(g, v, r)
        if b.exact_radius:
            break
    seed = rnd.randrange(2 ** 32)
    pin = min(b.boundary)
    glob = cftp_sample(g, pin, M, seed).function.values
    low = min(glob[u] for u in b.boundary)
    sub, ids = g.induced_subgraph(sorted(b.vertices))
    local = {old: new for new, old in enumerate(ids)}
    fixed = {local[u]: glob[u] - low for u in b.boundary}
    f_local = cftp_sample(sub, local[pin], M, seed, index=1, fixed=fixed).function
    f = {u: f_local[local[u]] for u in b.vertices}
    return g, b, f


def test_high_extensions_randomized():
    rnd = random.Random(77)
    for trial in range(200):
        M = rnd.randrange(2, 7)
        g, b, f = _instance(rnd, M)
        dec = high_set_decomposition(g, b, f, M)
        kept = dec.A | dec.Qstar | b.boundary
        size = extension_family_size(dec)
        assert size >= family_lower_bound(dec)
        outs = list(iter_extensions(dec, limit=64))
        assert len(outs) == min(size, 64)
        # plus random members of the family
        free = dec.free_vertices()
        for _ in range(20):
            h = dict(outs[0])
            for u in free:
                lo, hi = band(M, b.layer_of(u))
                h[u] = rnd.randint(lo, hi)
            outs.append(h)
        for h in outs:
            assert not validate(g, h, ModelKind.lipschitz(M), v0=None, partial=True), (trial, h)
            assert all(h[u] == f[u] for u in kept)
            assert max(h.values()) - min(h[u] for u in b.boundary) >= M * b.radius / 2


def test_lift_randomized():
    rnd = random.Random(78)
    for trial in range(200):
        g, b, f = _instance(rnd, 1)
        c = f[rnd.choice(sorted(b.boundary))]
        src = {u: abs(x - c) for u, x in f.items()}
        h, steps = lift_one_lipschitz(g, b, src, return_steps=True)
        assert not validate(g, h, ModelKind.lipschitz(1), v0=None, partial=True)
        assert h[b.center] == b.radius
        assert all(h[u] == src[u] for u in b.boundary)
        assert all(h[u] >= src[u] for u in b.vertices)
        for i, hi in enumerate(steps):
            for j in range(i + 1):
                assert all(hi[u] >= j for layer in b.layers[j:] for u in layer)
