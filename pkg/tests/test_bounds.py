import itertools
import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from stablecap.bounds import (
    InvalidProfile,
    bound_report,
    coefficient_bound,
    one_term_bound,
    one_term_eps,
    profile_from,
    simple_bound,
    tightness_witness,
    two_term_argmin,
    two_term_bound,
)
from stablecap.capacity import capacity_value, gurvits_prefactor, kko_doubly_exp_bound
from stablecap.poly import SparsePolynomial as P


def enum_profile(alpha, kappa):
    """Subset-enumeration oracle for eps_k and delta_k."""
    n = len(kappa)
    dev = [a - k for a, k in zip(alpha, kappa)]
    eps, delta = [], []
    for k in range(1, n + 1):
        sums = [sum(dev[j] for j in S) for S in itertools.combinations(range(n), k)]
        eps.append(1 - max(sums))
        delta.append(1 + min(sums))
    return eps, delta


def enum_one_term(alpha, kappa):
    n = len(kappa)
    dev = [k - a for a, k in zip(alpha, kappa)]
    out = []
    for k in range(1, n + 1):
        best = max(abs(sum(dev[j] for j in S)) for r in range(1, k + 1) for S in itertools.combinations(range(n), r))
        out.append(1 - best)
    return out


instances = st.integers(1, 6).flatmap(
    lambda n: st.tuples(
        st.lists(st.integers(0, 3), min_size=n, max_size=n),
        st.lists(st.floats(-0.6, 0.6), min_size=n, max_size=n),
    )
)


def test_profile_identity_case():
    prof = profile_from((1, 2, 0), (1, 2, 0))
    assert prof.eps == (1, 1, 1) and prof.delta == (1, 1, 1) and prof.valid


@pytest.mark.parametrize("x", [0.55, 0.6, 0.9])
def test_profile_vertex_pair_above_half(x):
    prof = profile_from((x, 2 - x, 2 - x), (1, 1, 1))
    assert np.allclose(prof.delta, (x, 1, 2 - x))
    assert np.allclose(prof.eps, (x, 2 * x - 1, x))


@pytest.mark.parametrize("x", [0.1, 0.4, 0.45])
def test_profile_vertex_pair_below_half(x):
    prof = profile_from((x, 2 - x, 2 - x), (0, 2, 2))
    assert np.allclose(prof.delta, (1 - x, 1 - 2 * x, 1 - x))
    assert np.allclose(prof.eps, (1 - x, 1, 1 + x))


@given(instances)
def test_profile_matches_subset_enumeration(inst):
    kappa, dev = inst
    alpha = [max(0.0, k + d) for k, d in zip(kappa, dev)]
    prof = profile_from(alpha, kappa)
    eps, delta = enum_profile(alpha, kappa)
    assert np.allclose(prof.eps, eps, atol=1e-12) and np.allclose(prof.delta, delta, atol=1e-12)
    assert np.allclose(one_term_eps(alpha, kappa), enum_one_term(alpha, kappa), atol=1e-12)


def test_profile_is_not_monotone_in_general():
    # eps_k can increase once the k-th largest deviation is negative
    prof = profile_from((0.8, 1.3), (1, 1))
    assert prof.eps[1] > prof.eps[0]


def test_two_term_examples():
    assert two_term_bound(profile_from((1, 1), (1, 1))) == 1
    prof = profile_from((0.6, 1.4, 1.4), (1, 1, 1))
    assert two_term_bound(prof) == pytest.approx(0.072, abs=1e-12)
    # l = 2 and l = 3 tie (eps_3 = delta_1); ties go to the smaller l
    assert two_term_argmin(prof) == 2
    prof = profile_from((0.4, 1.6, 1.6), (0, 2, 2))
    assert two_term_bound(prof) == pytest.approx(0.072, abs=1e-12)
    # l = 0 and l = 1 tie (eps_1 = delta_3)
    assert two_term_argmin(prof) == 1
    assert 4 * two_term_bound(prof) == pytest.approx(4 * 0.6**2 * 0.2, abs=1e-12)


def test_two_term_invalid_names_k():
    with pytest.raises(InvalidProfile) as err:
        two_term_bound(profile_from((2.5, 1.0), (1, 1)))
    assert err.value.which == "eps" and err.value.k == 1


def test_one_term_examples():
    assert one_term_bound((1, 2), (1, 2)) == 1
    # kappa - alpha = (0.3, -0.2)
    assert one_term_bound((0.7, 1.2), (1, 1)) == pytest.approx(0.49, abs=1e-12)
    with pytest.raises(InvalidProfile):
        one_term_bound((0.0, 1.0), (1, 0))


def test_simple_examples():
    assert simple_bound((1, 2, 3, 4, 5), (1, 2, 3, 4, 5)) == 1
    assert simple_bound((0.8, 1.8), (1, 2)) == pytest.approx(0.36, abs=1e-12)
    with pytest.raises(ValueError):
        simple_bound((0.5, 1.5), (1, 1))


@pytest.mark.parametrize("seed", range(1000))
def test_chain_on_random_profiles(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 7))
    kappa = rng.integers(0, 4, n)
    dev = rng.dirichlet(np.ones(n)) * rng.uniform(0, 0.999) * rng.choice([-1, 1], n)
    alpha = np.maximum(kappa + dev, 0)
    two = two_term_bound(profile_from(alpha, kappa))
    one = one_term_bound(alpha, kappa)
    simple = simple_bound(alpha, kappa)
    assert two + 1e-12 >= one >= simple - 1e-12 >= -1e-12


def test_coefficient_bound_examples():
    assert coefficient_bound((1, 1, 1), (1, 1, 1)) == pytest.approx(math.exp(-3))
    val = coefficient_bound((0.6, 1.4, 1.4), (1, 1, 1), via="two_term")
    assert val == pytest.approx(math.exp(-3) * 0.072, rel=1e-12)
    assert val == pytest.approx(3.584e-3, abs=1e-6)
    assert coefficient_bound((0.0, 1.0), (0, 1)) == pytest.approx(math.exp(-1))
    with pytest.raises(ValueError):
        coefficient_bound((1, 1), (1, 1), via="nope")


def test_tightness_witness_examples():
    assert tightness_witness((1,), 0.5).allclose(P(1, {(1,): 0.5, (0,): 0.5}))
    assert tightness_witness((1, 1), Fraction(2, 5)).coefficient((1, 1)) == Fraction(4, 25)
    with pytest.raises(ValueError):
        tightness_witness((0, 1), 0.5)
    with pytest.raises(ValueError):
        tightness_witness((1, 1), 1.0)


@pytest.mark.parametrize("kappa", [(1, 1), (2, 1, 3), (1, 1, 1, 1)])
@pytest.mark.parametrize("eps", ["1/10", "1/2", "9/10"])
def test_tightness(kappa, eps):
    eps = Fraction(eps)
    n = len(kappa)
    p = tightness_witness(kappa, eps)
    assert p.coefficient(kappa) == eps**n
    alpha = [float(a) for a in p.gradient_at_one()]
    cap = capacity_value(p, kappa)
    assert cap == pytest.approx(float(eps) ** n, abs=1e-7)
    # the witness attains simple bound with equality: |kappa - alpha|_1 = 1 - eps
    assert simple_bound(alpha, kappa) == pytest.approx(float(eps) ** n, rel=1e-12)


def test_baseline_comparison_is_reported():
    """How often one_term * prefactor beats the prior doubly exponential bound.

    At n = 2 the prior bound is only eps^4 and the prefactor often loses, so
    this is a report. Only the small-eps, many-group regime is asserted.
    """
    rng = np.random.default_rng(0)
    wins = total = 0
    for _ in range(200):
        n = int(rng.integers(2, 6))
        kappa = rng.integers(1, 4, n)
        dev = rng.dirichlet(np.ones(n)) * rng.uniform(0.1, 0.9) * rng.choice([-1, 1], n)
        alpha = kappa + dev
        prof = profile_from(alpha, kappa)
        eps = min(min(prof.eps), min(prof.delta))
        if eps > 0.9:
            continue
        total += 1
        wins += one_term_bound(alpha, kappa) * gurvits_prefactor(kappa) > kko_doubly_exp_bound(eps, kappa)
    assert total > 0
    print(f"one-term bound beats baseline in {wins}/{total} instances")
    assert wins > total // 2
    for _ in range(200):
        n = int(rng.integers(4, 7))
        kappa = rng.integers(1, 4, n)
        dev = rng.dirichlet(np.ones(n)) * 0.5 * rng.choice([-1, 1], n)
        alpha = kappa + dev
        prof = profile_from(alpha, kappa)
        eps = min(min(prof.eps), min(prof.delta))
        assert one_term_bound(alpha, kappa) * gurvits_prefactor(kappa) > kko_doubly_exp_bound(eps, kappa)


def test_bound_report_shape():
    rep = bound_report((0.6, 1.4, 1.4), (1, 1, 1), exact=0.1).to_dict()
    assert {"exact", "two_term", "one_term", "simple", "coeff_bound", "baseline_kko", "profile"} <= set(rep)
    assert rep["schema_version"] == 1
    assert rep["two_term"] == pytest.approx(0.072)
    assert rep["simple"] is None and rep["notes"]
    json.dumps(rep)
    bad = bound_report((3.0,), (1,)).to_dict()
    assert bad["two_term"] is None and bad["one_term"] is None


@pytest.mark.parametrize("seed", range(50))
def test_one_term_eps_is_nonincreasing(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 7))
    kappa = rng.integers(0, 4, n)
    alpha = np.clip(kappa + rng.uniform(-0.3, 0.3, n), 0, None)
    eps = one_term_eps(alpha, kappa)
    assert all(a >= b - 1e-15 for a, b in zip(eps, eps[1:]))
