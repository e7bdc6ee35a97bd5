import itertools
import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from stablecap.bounds import tightness_witness
from stablecap.newton import newton_membership
from stablecap.poly import SparsePolynomial, Var, grlex_key, collapse, polarization_blocks, polarize, product
from stablecap.sr import GroupPartition, expectations, generating_polynomial, group_polynomial, spanning_tree_measure, WeightedGraph

P = SparsePolynomial


def x1x2_plus_x1():
    return P(2, {(1, 1): 1, (1, 0): 1})


@st.composite
def sparse_polys(draw, max_vars=3, max_deg=3, max_terms=6):
    n = draw(st.integers(1, max_vars))
    exps = draw(st.lists(st.tuples(*[st.integers(0, max_deg)] * n), min_size=1, max_size=max_terms, unique=True))
    coefs = draw(st.lists(st.floats(0.01, 5.0), min_size=len(exps), max_size=len(exps)))
    return P(n, dict(zip(exps, coefs)))


def test_eval_examples():
    assert P(2, {(1, 1): 1})([1, 1]) == 1
    p = P.monomial([2], 1) * P.affine(0.7, [0.3])
    assert p([1]) == pytest.approx(1, abs=1e-15)


def test_eval_matches_factored_tightness_witness():
    p = tightness_witness([2, 1, 3], 0.3)
    x = [2.0, 3.0, 5.0]
    e = 0.3
    factored = (x[0] * x[2] ** 2) * (e * x[0] + (1 - e) * x[1]) * (e * x[1] + (1 - e) * x[2]) * (e * x[2] + 1 - e)
    assert p(x) == pytest.approx(factored, rel=1e-12)


def test_eval_dimension_mismatch():
    with pytest.raises(ValueError):
        x1x2_plus_x1()([1.0])


def test_zero_terms_are_dropped_and_negative_rejected():
    p = P(2, {(1, 0): 0.0, (0, 1): 2.0})
    assert len(p) == 1
    with pytest.raises(ValueError):
        P(1, {(1,): -1.0})


def test_gradient_examples():
    assert P(2, {(1, 1): 1}).gradient_at_one() == (1, 1)
    third = Fraction(1, 3)
    assert P(2, {(1, 1): third, (1, 0): third, (0, 1): third}).gradient_at_one() == (Fraction(2, 3), Fraction(2, 3))
    g = tightness_witness([2, 1, 3], Fraction(3, 10)).gradient_at_one()
    assert g == (Fraction(13, 10), 1, 3)


def test_coefficient_examples():
    assert x1x2_plus_x1().coefficient((1, 0)) == 1
    assert x1x2_plus_x1().coefficient((0, 1)) == 0
    assert tightness_witness([1, 1], Fraction(2, 5)).coefficient((1, 1)) == Fraction(4, 25)
    third = Fraction(1, 3)
    p = product([P.affine(0, [third] * 3) for _ in range(3)])
    assert p.coefficient((1, 1, 1)) == Fraction(6, 27)


def test_substitute_examples():
    p = x1x2_plus_x1()
    assert p.substitute({1: 0}) == P(1, {(1,): 1})
    assert p.substitute({1: 1}) == P(1, {(1,): 2})
    with pytest.raises(ValueError):
        p.substitute({1: -1})
    assert p.substitute({0: Var(0), 1: Var(0)}) == P(1, {(2,): 1, (1,): 1})


def test_substitute_grouping_gradient_is_expectation():
    mu = spanning_tree_measure(WeightedGraph(3, ((0, 1, 1.0), (1, 2, 1.0), (0, 2, 2.0))))
    g = generating_polynomial(mu)
    q = g.substitute({0: Var(0), 1: Var(0), 2: Var(1)})
    E = expectations(mu, GroupPartition(((0, 1), (2,))))
    assert np.allclose([float(v) for v in q.gradient_at_one()], [float(e) for e in E], atol=1e-12)
    assert q.allclose(group_polynomial(mu, GroupPartition(((0, 1), (2,)))))


def test_partial_derivative_examples():
    assert P(1, {(2,): 1}).partial_derivative(0) == P(1, {(1,): 2})
    assert x1x2_plus_x1().partial_derivative(1) == P(2, {(1, 0): 1})


@given(sparse_polys(), st.data())
def test_derivative_coefficient_identity(p, data):
    i = data.draw(st.integers(0, p.num_vars - 1))
    dp = p.partial_derivative(i)
    for kappa in itertools.product(range(4), repeat=p.num_vars):
        shifted = list(kappa)
        shifted[i] += 1
        assert dp.coefficient(kappa) == pytest.approx((kappa[i] + 1) * p.coefficient(shifted), rel=1e-12)


@given(sparse_polys())
def test_eval_at_one_is_coefficient_sum(p):
    assert p([1.0] * p.num_vars) == pytest.approx(sum(c for _, c in p), rel=1e-12)


def test_polarize_examples():
    x1 = P(1, {(1,): 1})
    assert polarize(x1) == x1
    assert polarize(P(1, {(2,): 1})) == P(2, {(1, 1): 1})


def test_polarize_tightness_witness_collapses():
    p = tightness_witness([2, 1], 0.3)
    q = polarize(p)
    assert q([1.0] * q.num_vars) == pytest.approx(1.0, abs=1e-12)
    blocks = polarization_blocks(p)
    assert collapse(q, blocks).allclose(p, rtol=1e-12)
    rng = np.random.default_rng(0)
    for _ in range(10):
        x = rng.uniform(0.1, 3.0, p.num_vars)
        y = np.concatenate([[x[i]] * len(b) for i, b in enumerate(blocks)])
        assert q(y) == pytest.approx(p(x), rel=1e-12)


@given(sparse_polys())
def test_polarize_then_collapse_is_identity(p):
    q = polarize(p)
    assert all(max(e, default=0) <= 1 for e, _ in q)
    assert collapse(q, polarization_blocks(p)).allclose(p, rtol=1e-12)


def test_newton_membership_examples():
    p = x1x2_plus_x1()
    assert newton_membership(p, (1, 0)).label == "vertex"
    assert newton_membership(p, (0, 1)).label == "outside"
    assert newton_membership(P(1, {(2,): 1, (1,): 1, (0,): 1}), (1,)).label == "interior"
    # on the edge between (0,0) and (2,0) of a triangle, but not a vertex
    tri = P(2, {(0, 0): 1, (2, 0): 1, (0, 2): 1})
    assert newton_membership(tri, (1, 0)).label == "boundary"
    assert newton_membership(tri, (1, 1)).label == "boundary"
    assert newton_membership(tri + P(2, {(1, 1): 1}), (1, 1)).label == "boundary"
    square = P(2, {(0, 0): 1, (2, 0): 1, (0, 2): 1, (2, 2): 1})
    assert newton_membership(square, (1, 1)).label == "interior"


def test_newton_membership_against_brute_force_hull():
    """Exact LP classification agrees with a float hull test from scipy on random 2D point sets."""
    from scipy.spatial import ConvexHull

    rng = np.random.default_rng(3)
    for _ in range(30):
        pts = {tuple(int(v) for v in rng.integers(0, 5, 2)) for _ in range(6)}
        pts |= {(0, 0), (4, 0), (0, 4)}
        p = P(2, {e: 1.0 for e in pts})
        hull = ConvexHull(np.array(sorted(pts), dtype=float))
        for kappa in itertools.product(range(6), repeat=2):
            inside = np.all(hull.equations[:, :2] @ np.array(kappa, float) + hull.equations[:, 2] <= 1e-9)
            label = newton_membership(p, kappa).label
            assert (label != "outside") == bool(inside), (pts, kappa)


def test_json_round_trip_and_canonical_order():
    p = P(2, {(0, 1): 0.25, (1, 1): Fraction(1, 3), (2, 0): 1})
    q = P.from_json(p.to_json())
    assert q == p
    exps = [tuple(t["exp"]) for t in json.loads(p.to_json())["terms"]]
    assert exps == sorted(exps, key=grlex_key)
    with pytest.raises(ValueError):
        P.from_dict({"terms": []})
