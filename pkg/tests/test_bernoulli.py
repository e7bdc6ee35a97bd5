from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from stablecap.bernoulli import BernoulliFamily, expected_value, extremal_bernoulli, hoeffding_candidates, sum_distribution


def test_sum_distribution_examples():
    assert sum_distribution(BernoulliFamily((1, 1))) == [0, 0, 1]
    assert sum_distribution((0.5, 0.5)) == pytest.approx([0.25, 0.5, 0.25])
    assert sum_distribution((Fraction(2, 3),)) == [Fraction(1, 3), Fraction(2, 3)]
    with pytest.raises(ValueError):
        BernoulliFamily((1.2,))


@given(st.lists(st.floats(0, 1), min_size=0, max_size=12))
def test_sum_distribution_normalized_and_mean(params):
    dist = sum_distribution(params)
    assert sum(dist) == pytest.approx(1, abs=1e-12)
    assert sum(s * w for s, w in enumerate(dist)) == pytest.approx(sum(params), abs=1e-10)


def test_extremal_examples():
    val, params = extremal_bernoulli([0, 1], 1, 0.5)
    assert val == pytest.approx(0.5) and params == [0.5]
    val, params = extremal_bernoulli([0, 1, 0, 0], 3, Fraction(1), "min")
    assert val == Fraction(4, 9) and params == [Fraction(1, 3)] * 3
    val, _ = extremal_bernoulli([0, 1, 1, 1], 3, Fraction(1), "min")
    assert val == Fraction(19, 27)
    with pytest.raises(ValueError):
        extremal_bernoulli([0, 1], 1, 1.5)


def test_at_least_one_against_fine_grid():
    """min P[S >= 1] with sum p = 1, n = 3 on a 1e-3 simplex grid."""
    step = 1e-3
    a = np.arange(0, 1 + step / 2, step)
    p1, p2 = np.meshgrid(a, a, indexing="ij")
    p3 = 1 - p1 - p2
    ok = p3 >= -1e-12
    vals = 1 - (1 - p1) * (1 - p2) * (1 - np.clip(p3, 0, 1))
    assert vals[ok].min() == pytest.approx(19 / 27, abs=1e-6)


def test_candidates_respect_sum():
    for n in range(1, 6):
        for q in (0, 0.3, 1, 1.7, n):
            if q > n:
                continue
            for m, l, params in hoeffding_candidates(n, q):
                assert len(params) == n
                assert sum(params) == pytest.approx(q)
                assert all(0 <= p <= 1 for p in params)


@pytest.mark.parametrize("seed", range(100))
def test_random_parameters_lie_between_extremes(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 7))
    g = rng.normal(size=n + 1)
    params = rng.uniform(0, 1, n)
    q = float(params.sum())
    lo, _ = extremal_bernoulli(g, n, q, "min")
    hi, _ = extremal_bernoulli(g, n, q, "max")
    assert lo - 1e-12 <= expected_value(g, params) <= hi + 1e-12


def test_ties_prefer_smaller_support():
    # constant g: every candidate ties, the first (smallest m, then l) wins
    val, params = extremal_bernoulli([1, 1, 1, 1], 3, 1)
    assert val == 1 and params == [1, 0, 0]
