import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from stablecap.affine import associated_polynomial
from stablecap.bounds import tightness_witness
from stablecap.capacity import (
    CapacityQuery,
    capacity,
    capacity_oracle,
    capacity_value,
    gurvits_prefactor,
    kko_doubly_exp_bound,
    log_objective,
)
from stablecap.instances import random_chain_instance
from stablecap.newton import newton_membership
from stablecap.poly import SparsePolynomial as P


def cubic():
    return P.monomial([2], 1) * P.affine(0.7, [0.3])


def test_univariate_closed_form():
    assert capacity_value(cubic(), [2]) == pytest.approx(0.7, abs=1e-12)
    assert capacity_value(cubic(), [3]) == pytest.approx(0.3, abs=1e-12)
    # interior point of the univariate segment
    p = P(1, {(0,): 0.25, (1,): 0.5, (2,): 0.25})  # ((x+1)/2)^2
    assert capacity_value(p, [1]) == pytest.approx(1.0, abs=1e-10)


def test_am_gm_case():
    p = P.affine(0, [0.5, 0.5]) ** 2
    res = capacity(CapacityQuery(p, (1, 1)))
    assert res.status == "converged"
    assert res.value == pytest.approx(1.0, abs=1e-10)
    x = res.minimizer
    assert x[0] == pytest.approx(x[1], rel=1e-6)


def test_tightness_witness_capacity():
    assert capacity_value(tightness_witness([2, 1, 3], 0.3), [2, 1, 3]) == pytest.approx(0.027, abs=1e-7)


def test_routing_statuses():
    p = P(2, {(1, 1): 1, (1, 0): 1})
    out = capacity(CapacityQuery(p, (0, 1)))
    assert (out.status, out.value) == ("zero-outside", 0.0)
    vert = capacity(CapacityQuery(p, (1, 0)))
    assert vert.status == "vertex-shortcut" and vert.value == 1.0
    tri = P(2, {(0, 0): 0.5, (2, 0): 0.25, (0, 2): 0.25})
    edge = capacity(CapacityQuery(tri, (1, 0)))
    assert edge.status == "boundary-limit" and edge.minimizer is None
    # face polynomial 0.5 + 0.25 x^2 at kappa 1: inf (0.5 + 0.25 x^2)/x = 2 sqrt(0.125)
    assert edge.value == pytest.approx(2 * math.sqrt(0.125), rel=1e-9)


def test_query_validation():
    p = P(2, {(1, 1): 1})
    with pytest.raises(ValueError):
        CapacityQuery(p, (1,))
    with pytest.raises(ValueError):
        CapacityQuery(p, (1, 1), tol=0.5)


def test_oracle_examples():
    assert capacity_oracle(CapacityQuery(P(1, {(1,): 1}), (1,))) == pytest.approx(1.0, abs=1e-9)
    assert capacity_oracle(CapacityQuery(cubic(), (2,))) == pytest.approx(0.7, abs=1e-6)
    with pytest.raises(ValueError):
        capacity_oracle(CapacityQuery(P(5, {(1,) * 5: 1}), (1,) * 5))


@pytest.mark.parametrize("seed", range(15))
def test_oracle_sandwich_on_forest_products(seed):
    inst = random_chain_instance(seed, max_n=3, max_d=5)
    p = associated_polynomial(inst.matrix)
    q = CapacityQuery(p, inst.kappa)
    solver = capacity(q).value
    oracle = capacity_oracle(q)
    assert oracle >= solver - 1e-9
    # coordinate-wise refinement is slow in curved valleys; agreement is loose by design
    assert oracle == pytest.approx(solver, rel=1e-3, abs=1e-9)


@given(st.integers(0, 200), st.floats(0.01, 100))
def test_scaling_and_monomial_shift(seed, c):
    inst = random_chain_instance(seed, max_n=3, max_d=4)
    p = associated_polynomial(inst.matrix)
    base = capacity_value(p, inst.kappa)
    scaled = capacity_value(P(p.num_vars, {e: c * v for e, v in p}), inst.kappa)
    assert scaled == pytest.approx(c * base, rel=1e-9, abs=1e-15)
    v = [1] * p.num_vars
    shifted = capacity_value(P.monomial(v) * p, [k + 1 for k in inst.kappa])
    assert shifted == pytest.approx(base, rel=1e-9, abs=1e-15)


@given(st.integers(0, 200))
def test_log_objective_is_midpoint_convex(seed):
    inst = random_chain_instance(seed, max_n=4, max_d=5)
    p = associated_polynomial(inst.matrix)
    rng = np.random.default_rng(seed)
    y0, y1 = rng.normal(0, 3, p.num_vars), rng.normal(0, 3, p.num_vars)
    mid = log_objective(p, inst.kappa, (y0 + y1) / 2)
    assert mid <= (log_objective(p, inst.kappa, y0) + log_objective(p, inst.kappa, y1)) / 2 + 1e-10


@pytest.mark.parametrize("seed", range(20))
def test_vertex_shortcut_returns_coefficient(seed):
    inst = random_chain_instance(seed)
    p = associated_polynomial(inst.matrix)
    for e in list(p.terms)[:5]:
        if newton_membership(p, e).label == "vertex":
            assert capacity_value(p, e) == float(p.coefficient(e))


def test_gurvits_prefactor_examples():
    assert gurvits_prefactor((0, 0)) == 1.0
    assert gurvits_prefactor((1, 1, 1)) == pytest.approx(math.exp(-3), rel=1e-14)
    assert gurvits_prefactor((2,)) == pytest.approx(2 * math.exp(-2), rel=1e-14)
    assert gurvits_prefactor((5, 0)) == pytest.approx(5**5 * math.exp(-5) / 120, rel=1e-13)


def test_kko_baseline_examples():
    assert kko_doubly_exp_bound(0.5, (1,)) == pytest.approx(0.25)
    assert kko_doubly_exp_bound(0.5, (1, 1)) == pytest.approx(0.03125)
    assert kko_doubly_exp_bound(0.9, (1, 1, 1)) == pytest.approx(0.9**8 / 6)
