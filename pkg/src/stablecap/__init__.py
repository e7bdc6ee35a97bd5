"""Capacity lower bounds for real stable polynomials and strongly Rayleigh probability bounds."""

from .poly import SparsePolynomial, product
from .capacity import CapacityQuery, CapacityResult, capacity, capacity_value, gurvits_prefactor, kko_doubly_exp_bound
from .affine import RowStochasticMatrix, associated_polynomial, is_extreme, productize, random_extreme_point
from .bounds import (
    DeviationProfile,
    InvalidProfile,
    bound_report,
    coefficient_bound,
    one_term_bound,
    profile_from,
    simple_bound,
    tightness_witness,
    two_term_bound,
)
from .sr import (
    DiscreteMeasure,
    GroupPartition,
    WeightedGraph,
    bernoulli_decomposition,
    exact_joint_probability,
    expectations,
    spanning_tree_measure,
    sr_probability_bound,
)
from .bernoulli import extremal_bernoulli, sum_distribution
from .permanent import ColumnSumSpec, minimize_permanent, permanent

__version__ = "0.1.0"
