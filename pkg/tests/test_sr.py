import itertools
import math
from fractions import Fraction

import networkx as nx
import numpy as np
import pytest

from stablecap.bernoulli import sum_distribution
from stablecap.bounds import InvalidProfile, tightness_witness
from stablecap.capacity import gurvits_prefactor
from stablecap.poly import Var, polarization_blocks, polarize
from stablecap.sr import (
    DiscreteMeasure,
    GroupPartition,
    NotStronglyRayleigh,
    WeightedGraph,
    bernoulli_decomposition,
    condition_on_count,
    exact_joint_probability,
    expectations,
    generating_polynomial,
    group_polynomial,
    headline_prefactor,
    measure_from_polynomial,
    measure_probability_bounds,
    rank_distribution,
    spanning_tree_measure,
    spanning_trees,
    sr_probability_bound,
    stability_falsifier,
)

TRIANGLE = WeightedGraph(3, ((0, 1, 1), (1, 2, 1), (0, 2, 1)))


def nx_graph(G):
    H = nx.MultiGraph()
    H.add_nodes_from(range(G.num_vertices))
    for u, w, x in G.edges:
        H.add_edge(u, w, weight=x)
    return H


def test_triangle_trees():
    mu = spanning_tree_measure(TRIANGLE)
    assert len(mu.support) == 3
    assert all(p == pytest.approx(1 / 3) for p in mu.support.values())


def test_k4_tree_count():
    K4 = WeightedGraph(4, tuple((u, w, 1) for u, w in itertools.combinations(range(4), 2)))
    assert len(spanning_trees(K4)) == 16 == K4.tree_count()


def test_weighted_triangle():
    # product weights: {e0,e1} -> 1, {e0,e2} -> 2, {e1,e2} -> 2
    G = WeightedGraph(3, ((0, 1, 1), (1, 2, 1), (0, 2, 2)))
    mu = spanning_tree_measure(G)
    probs = sorted(float(p) for p in mu.support.values())
    assert probs == pytest.approx([0.2, 0.4, 0.4])


def test_weighted_tree_measure_against_networkx_edge_marginals():
    """Edge marginals equal w_e times the effective resistance of the edge."""
    rng = np.random.default_rng(1)
    for g in [nx.petersen_graph(), nx.wheel_graph(6), nx.complete_graph(5)]:
        edges = tuple((u, w, float(rng.uniform(0.5, 2.0))) for u, w in g.edges())
        G = WeightedGraph(g.number_of_nodes(), edges)
        if G.tree_count() > 5000:
            continue
        mu = spanning_tree_measure(G)
        marg = expectations(mu, GroupPartition(tuple((i,) for i in range(len(edges)))))
        H = nx.Graph()
        H.add_weighted_edges_from(edges)
        for (u, w, x), m in zip(edges, marg):
            assert float(m) == pytest.approx(x * nx.resistance_distance(H, u, w, weight="weight", invert_weight=False), rel=1e-9)


def test_disconnected_graph_rejected():
    with pytest.raises(ValueError):
        spanning_tree_measure(WeightedGraph(4, ((0, 1, 1), (2, 3, 1))))


def test_expectation_examples():
    point = DiscreteMeasure.from_sets(4, [((0, 2, 3), 1.0)])
    assert expectations(point, GroupPartition(((0, 2, 3),))) == [3]
    mu = spanning_tree_measure(TRIANGLE)
    assert float(expectations(mu, GroupPartition(((0,),)))[0]) == pytest.approx(2 / 3)


def test_joint_probability_examples():
    point = DiscreteMeasure.from_sets(3, [((0, 1), 1.0)])
    assert exact_joint_probability(point, GroupPartition(((0,), (1, 2))), (1, 1)) == 1
    mu = spanning_tree_measure(TRIANGLE)
    assert float(exact_joint_probability(mu, GroupPartition(((0,), (1,))), (1, 1))) == pytest.approx(1 / 3)


@pytest.mark.parametrize("kappa", [(1, 1), (2, 1), (1, 2, 1)])
def test_tightness_family_joint_probability(kappa):
    eps = Fraction(3, 10)
    p = tightness_witness(kappa, eps)
    mu = measure_from_polynomial(polarize(p))
    P = GroupPartition(tuple(tuple(b) for b in polarization_blocks(p)))
    assert exact_joint_probability(mu, P, kappa) == eps ** len(kappa)
    assert stability_falsifier(mu, trials=50) is None


def test_bridge_identity():
    G = WeightedGraph(4, ((0, 1, 1.0), (1, 2, 2.0), (2, 3, 1.5), (3, 0, 1.0), (0, 2, 0.7)))
    mu = spanning_tree_measure(G)
    P = GroupPartition(((0, 1), (2, 4)))
    g = generating_polynomial(mu)
    q = g.substitute({0: Var(0), 1: Var(0), 2: Var(1), 4: Var(1), 3: Var(2)}).substitute({2: 1})
    assert q.allclose(group_polynomial(mu, P), rtol=1e-12)
    for kappa in itertools.product(range(3), repeat=2):
        assert q.coefficient(kappa) == pytest.approx(float(exact_joint_probability(mu, P, kappa)), abs=1e-12)
    assert np.allclose([float(v) for v in q.gradient_at_one()], [float(e) for e in expectations(mu, P)], atol=1e-12)


def test_sr_bound_examples():
    b = sr_probability_bound((1, 1), (1, 1))
    assert b.strong == pytest.approx(math.exp(-2), rel=1e-12)
    for eps in (0.01, 0.1, 0.3):
        x = 0.5 + eps
        b = sr_probability_bound((x, 2 - x, 2 - x), (1, 1, 1))
        assert b.strong == pytest.approx(math.exp(-3) * x**2 * (2 * x - 1), rel=1e-12)
        assert b.strong >= eps / (2 * math.e**3)
        x = 0.5 - eps
        b = sr_probability_bound((x, 2 - x, 2 - x), (0, 2, 2))
        assert b.strong == pytest.approx(4 * math.exp(-4) * (1 - x) ** 2 * (1 - 2 * x), rel=1e-12)
        assert b.strong >= 2 * eps / math.e**4


def test_sr_bound_invalid_profile():
    with pytest.raises(InvalidProfile) as err:
        sr_probability_bound((0.2, 0.3), (1, 1))
    assert err.value.which == "delta" and err.value.k == 2


def test_headline_prefactor_comparison():
    for k in range(1, 51):
        assert gurvits_prefactor((k,)) >= headline_prefactor((k,))
    rng = np.random.default_rng(0)
    for _ in range(200):
        n = int(rng.integers(1, 5))
        kappa = rng.integers(1, 4, n)
        E = kappa + rng.dirichlet(np.ones(n)) * rng.uniform(0, 0.9) * rng.choice([-1, 1], n)
        b = sr_probability_bound(E, kappa)
        assert b.strong >= b.headline * (1 - 1e-12)


def test_bounds_hold_on_larger_sparse_graphs():
    """A few 7- and 8-vertex graphs beyond the atlas sweep of the acceptance suite."""
    rng = np.random.default_rng(7)
    graphs = [nx.cycle_graph(8), nx.ladder_graph(4), nx.wheel_graph(7)]
    for g in graphs:
        edges = tuple((u, w, float(rng.uniform(0.5, 2))) for u, w in g.edges())
        G = WeightedGraph(g.number_of_nodes(), edges)
        mu = spanning_tree_measure(G)
        m = G.num_edges
        for _ in range(20):
            labels = rng.integers(0, 4, m)
            groups = tuple(tuple(int(i) for i in np.nonzero(labels == k)[0]) for k in (1, 2, 3))
            groups = tuple(g for g in groups if g)
            if not groups:
                continue
            P = GroupPartition(groups)
            E = [float(e) for e in expectations(mu, P)]
            for kappa in itertools.product(*[(math.floor(e), math.ceil(e)) for e in E]):
                try:
                    b = measure_probability_bounds(mu, P, kappa)
                except InvalidProfile:
                    continue
                assert b.exact >= b.strong * (1 - 1e-9) >= b.lite * (1 - 1e-9) - 1e-15
                assert b.exact >= b.headline * (1 - 1e-9)


def test_conditioning_by_filtering():
    mu = spanning_tree_measure(TRIANGLE)
    cond = condition_on_count(mu, (0,), 1)
    assert len(cond.support) == 2
    assert sum(cond.support.values()) == pytest.approx(1)
    assert float(expectations(cond, GroupPartition(((0,),)))[0]) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        condition_on_count(mu, (0, 1, 2), 3)


def test_bernoulli_decomposition_examples():
    mu = spanning_tree_measure(TRIANGLE)
    assert bernoulli_decomposition(mu, (0, 1, 2)) == pytest.approx([1.0, 1.0])
    assert bernoulli_decomposition(mu, (0,)) == pytest.approx([2 / 3])
    assert bernoulli_decomposition(mu, (0, 1)) == pytest.approx([1.0, 1 / 3])


def test_bernoulli_decomposition_round_trip_petersen():
    g = nx.petersen_graph()
    G = WeightedGraph(10, tuple((u, w, 1.0) for u, w in g.edges()))
    assert G.tree_count() == 2000
    mu = spanning_tree_measure(G)
    rng = np.random.default_rng(0)
    for _ in range(10):
        F = sorted(rng.choice(15, size=int(rng.integers(1, 16)), replace=False))
        params = bernoulli_decomposition(mu, F)
        dist = [float(v) for v in rank_distribution(mu, F)]
        got = np.zeros(len(dist))
        sd = sum_distribution(params)
        got[: len(sd)] = sd
        assert np.abs(got - np.array(dist)).max() <= 1e-9


@pytest.mark.parametrize("k", [2, 3, 4])
def test_bernoulli_decomposition_repeated_roots(k):
    # k independent Bernoulli(0.2) elements: the rank polynomial has a k-fold root
    items = []
    for s in itertools.product((0, 1), repeat=k):
        items.append(([i for i in range(k) if s[i]], 0.2 ** sum(s) * 0.8 ** (k - sum(s))))
    mu = DiscreteMeasure.from_sets(k, items)
    assert bernoulli_decomposition(mu, range(k)) == pytest.approx([0.2] * k, abs=1e-6)


def test_non_real_rooted_rank_sequence_rejected():
    # P[|F cap T| = k] = (1/2, 0, 1/2) has roots +-i
    mu = DiscreteMeasure.from_sets(2, [((), 0.5), ((0, 1), 0.5)])
    with pytest.raises(NotStronglyRayleigh):
        bernoulli_decomposition(mu, (0, 1))


def test_falsifier():
    bad = DiscreteMeasure.from_sets(2, [((), 0.5), ((0, 1), 0.5)])
    assert stability_falsifier(bad, trials=50) is not None
    assert stability_falsifier(spanning_tree_measure(TRIANGLE), trials=50) is None


def test_json_round_trips():
    mu = spanning_tree_measure(TRIANGLE)
    mu2 = DiscreteMeasure.from_dict(mu.to_dict())
    assert mu2.support.keys() == mu.support.keys()
    assert WeightedGraph.from_dict(TRIANGLE.to_dict()) == TRIANGLE
    P = GroupPartition(((0, 2), (1,)))
    assert GroupPartition.from_dict(P.to_dict()) == P
    with pytest.raises(ValueError):
        GroupPartition(((0, 1), (1,)))
