import itertools
from collections import Counter
from fractions import Fraction

import pytest

from randlip.exact import (OracleTooLarge, StateSpaceTooLarge, TransferModel, bruteforce_range_counts,
                           check_ball_factorization, count_bruteforce, count_layer_tuples,
                           count_pinned_layer_tuples, enumerate_bruteforce, tm_count,
                           tm_epsilon, tm_ideal_edge_probability, tm_layer_marginal, tm_pr_range_le,
                           tm_range_distribution, tm_sample, tm_window_count, LayerState)
from randlip.graph import build_layered_cycle, complete_graph, cycle_graph, path_graph
from randlip.lipschitz import ModelKind, validate

# counts frozen from the brute-force oracle
FROZEN_LIP = {(4, 1, 1): 19, (4, 1, 2): 85, (4, 2, 1): 355, (4, 2, 2): 10213,
              (6, 1, 1): 141, (6, 1, 2): 1751, (6, 2, 1): 8773, (6, 2, 2): 1755439, (4, 1, 3): 231}
FROZEN_HOM = {(4, 1): 6, (4, 2): 30, (4, 3): 126, (6, 1): 20, (6, 2): 180, (8, 1): 70, (8, 2): 1158}


def test_oracle_small_examples():
    assert count_bruteforce(complete_graph(2), 0, 2) == 5
    assert sorted(enumerate_bruteforce(complete_graph(2), 0, 2)) == [(0, x) for x in range(-2, 3)]
    assert count_bruteforce(cycle_graph(4), 0, 1) == 19
    assert count_bruteforce(cycle_graph(4), 0, ModelKind.hom()) == 6


def test_oracle_hand_count_c4():
    # sum over (f1, f3) of the choices for f2
    total = sum(3 - abs(a - b) for a in (-1, 0, 1) for b in (-1, 0, 1))
    assert total == count_bruteforce(cycle_graph(4), 0, 1) == 19


def test_oracle_enumeration_is_exhaustive_and_valid():
    g = path_graph(4)
    got = set(enumerate_bruteforce(g, 0, 2))
    want = {f for f in itertools.product(range(-6, 7), repeat=4)
            if f[0] == 0 and not validate(g, f, ModelKind.lipschitz(2))}
    assert got == want


def test_oracle_cap():
    with pytest.raises(OracleTooLarge):
        count_bruteforce(cycle_graph(30), 0, 3, cap=1000)


def test_layer_tuple_examples():
    assert count_layer_tuples(1, 2) == 2
    assert count_layer_tuples(2, 3) == 12
    assert all(count_layer_tuples(0, k) == 1 for k in range(1, 6))
    assert count_pinned_layer_tuples(0, 0, 4) == 1
    assert count_pinned_layer_tuples(0, 1, 2) == 1
    assert count_pinned_layer_tuples(-1, 1, 3) == 2


@pytest.mark.parametrize("d", range(5))
@pytest.mark.parametrize("k", range(1, 6))
def test_layer_tuples_brute_force(d, k):
    brute = sum(1 for t in itertools.product(range(d + 1), repeat=k) if min(t) == 0 and max(t) == d)
    assert count_layer_tuples(d, k) == brute


@pytest.mark.parametrize("lo,hi", [(-2, 0), (-1, 1), (0, 2), (-1, 2), (0, 0), (-3, 1)])
@pytest.mark.parametrize("k", range(1, 5))
def test_pinned_tuples_brute_force(lo, hi, k):
    brute = sum(1 for t in itertools.product(range(lo, hi + 1), repeat=k - 1)
                if min(t + (0,)) == lo and max(t + (0,)) == hi)
    assert count_pinned_layer_tuples(lo, hi, k) == brute


@pytest.mark.parametrize("key,count", sorted(FROZEN_LIP.items()))
def test_tm_count_frozen(key, count):
    assert tm_count(*key).count == count


@pytest.mark.parametrize("key,count", sorted(FROZEN_HOM.items()))
def test_tm_count_hom_frozen(key, count):
    assert tm_count(*key, ModelKind.hom()).count == count
    if count < 2000:
        assert count_bruteforce(build_layered_cycle(*key), 0, ModelKind.hom()) == count


def test_window_examples():
    assert tm_window_count(4, 1, 1, (0, 1)) == 8
    assert tm_window_count(4, 1, 1, (0, 0)) == 1
    assert tm_window_count(4, 1, 1, (1, 2)) == 0
    assert tm_pr_range_le(4, 1, 1) == Fraction(15, 19)


@pytest.mark.parametrize("n,k,M", [(4, 1, 1), (4, 2, 1), (6, 1, 2), (4, 3, 1), (6, 2, 1)])
def test_range_distribution_matches_bruteforce(n, k, M):
    hist = bruteforce_range_counts(build_layered_cycle(n, k), 0, M)
    total = sum(hist.values())
    assert tm_range_distribution(n, k, M) == {r: Fraction(c, total) for r, c in hist.items()}


@pytest.mark.parametrize("n,k,M", [(4, 1, 1), (4, 2, 2), (6, 2, 1)])
def test_layer_marginals_match_bruteforce(n, k, M):
    fs = list(enumerate_bruteforce(build_layered_cycle(n, k), 0, M))
    for i in range(n):
        c = Counter(LayerState(min(f[i * k:(i + 1) * k]), max(f[i * k:(i + 1) * k])) for f in fs)
        want = {s: Fraction(v, len(fs)) for s, v in c.items()}
        got = {s: p for s, p in tm_layer_marginal(n, k, M, i).items() if p}
        assert got == want
        assert sum(tm_layer_marginal(n, k, M, i).values()) == 1


def test_marginal_c4_frozen():
    m = tm_layer_marginal(4, 1, 1, 1)
    assert m == {LayerState(-1, -1): Fraction(6, 19), LayerState(0, 0): Fraction(7, 19),
                 LayerState(1, 1): Fraction(6, 19)}


def test_marginal_symmetry():
    assert tm_layer_marginal(8, 2, 1, 1) == tm_layer_marginal(8, 2, 1, 7)
    assert tm_layer_marginal(8, 2, 1, 3) == tm_layer_marginal(8, 2, 1, 5)


def test_epsilon_layer_independent():
    eps = {tm_epsilon(6, 3, 1, layer=j) for j in range(6)}
    assert eps == {Fraction(53283, 139439)}


def _widths(f, n, k):
    return [max(f[j * k:(j + 1) * k]) - min(f[j * k:(j + 1) * k]) + 1 for j in range(n)]


@pytest.mark.parametrize("n,k,M", [(6, 2, 1), (4, 3, 1), (6, 1, 2), (4, 2, 2)])
def test_epsilon_and_ideal_edge_bruteforce(n, k, M):
    g = build_layered_cycle(n, k)
    fs = list(enumerate_bruteforce(g, 0, M))
    eps = Fraction(sum(_widths(f, n, k)[2] != M + 1 for f in fs), len(fs))
    assert tm_epsilon(n, k, M, layer=2) == eps
    # direct definition: edge (u, w), u in layer 1, w in layer 2; neighbourhood value sets
    u, w = k, 2 * k
    hits = 0
    for f in fs:
        Nu = {f[x] for x in g.neighbors(u)}
        Nw = {f[x] for x in g.neighbors(w)}
        lo_u, hi_u = min(Nu), max(Nu)
        # both endpoints: the lower and upper neighbour layers each fill one common interval of size M+1
        layers_u = [{f[x] for x in g.neighbors(u) if x // k == j} for j in ((1 - 1) % n, 2)]
        layers_w = [{f[x] for x in g.neighbors(w) if x // k == j} for j in (1, 3 % n)]
        ivs = [(min(s), max(s)) for s in layers_u + layers_w]
        if len(set(ivs)) == 1 and ivs[0][1] - ivs[0][0] == M:
            hits += 1
    assert tm_ideal_edge_probability(n, k, M, layer=1) == Fraction(hits, len(fs))


def test_state_space_cap():
    with pytest.raises(StateSpaceTooLarge):
        TransferModel(200, 1, ModelKind.lipschitz(50), cell_cap=1000)


def test_rejects_odd_n():
    with pytest.raises(ValueError):
        tm_count(5, 1, 1)


def test_ball_factorization_path9():
    holds, groups = check_ball_factorization(path_graph(9), 0, 1, centers=[3, 6], r=1)
    assert holds and groups > 1


def test_tm_sample_valid_and_deterministic():
    g = build_layered_cycle(6, 2)
    a = tm_sample(6, 2, 2, seed=5, count=200)
    b = tm_sample(6, 2, 2, seed=5, count=200)
    assert a == b
    assert all(validate(g, f, ModelKind.lipschitz(2)) == [] for f in a)
    h = tm_sample(8, 2, ModelKind.hom(), seed=1, count=50)
    assert all(validate(build_layered_cycle(8, 2), f, ModelKind.hom()) == [] for f in h)


def test_tm_sample_uniform_c4():
    from scipy.stats import chisquare

    fs = tm_sample(4, 1, 1, seed=11, count=20000)
    c = Counter(f.values for f in fs)
    support = set(enumerate_bruteforce(cycle_graph(4), 0, 1))
    assert set(c) == support
    obs = [c[f] for f in sorted(support)]
    assert chisquare(obs).pvalue > 0.001
    p = sum(1 for f in fs if f.range <= 2) / len(fs)
    sigma = (15 / 19 * 4 / 19 / len(fs)) ** 0.5
    assert abs(p - 15 / 19) < 3 * sigma
