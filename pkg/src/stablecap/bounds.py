"""Capacity lower bounds in terms of how far ``kappa`` is from ``grad p(1)``."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Sequence

from .capacity import gurvits_prefactor, kko_doubly_exp_bound
from .poly import SparsePolynomial, product

SCHEMA_VERSION = 1


class InvalidProfile(ValueError):
    def __init__(self, which: str, k: int, value):
        super().__init__(f"{which}_{k} = {float(value):.6g} is not positive")
        self.which, self.k, self.value = which, k, value


@dataclass(frozen=True)
class DeviationProfile:
    """``eps[k-1]`` and ``delta[k-1]`` for ``k = 1..n``.

    ``eps_k = 1 - (sum of the k largest alpha_j - kappa_j)`` and
    ``delta_k = 1 + (sum of the k smallest alpha_j - kappa_j)``. Neither is
    monotone in general; both are products of one-sided deviations.
    """

    n: int
    eps: tuple
    delta: tuple

    @property
    def valid(self) -> bool:
        return all(e > 0 for e in self.eps) and all(x > 0 for x in self.delta)

    def first_failure(self):
        for k, e in enumerate(self.eps, 1):
            if e <= 0:
                return "eps", k, e
        for k, x in enumerate(self.delta, 1):
            if x <= 0:
                return "delta", k, x
        return None

    def to_dict(self) -> dict:
        return {"n": self.n, "eps": [float(v) for v in self.eps], "delta": [float(v) for v in self.delta],
                "valid": self.valid}


def _deviations(alpha, kappa) -> list:
    if len(alpha) != len(kappa):
        raise ValueError(f"alpha has length {len(alpha)}, kappa has {len(kappa)}")
    return [a - k for a, k in zip(alpha, kappa)]


def _prefix_sums(values) -> list:
    out, s = [], 0
    for v in values:
        s = s + v
        out.append(s)
    return out


def profile_from(alpha: Sequence, kappa: Sequence) -> DeviationProfile:
    dev = _deviations(alpha, kappa)
    top = _prefix_sums(sorted(dev, reverse=True))
    bottom = _prefix_sums(sorted(dev))
    return DeviationProfile(len(dev), tuple(1 - s for s in top), tuple(1 + s for s in bottom))


def profile_from_sums(max_sums: Sequence, min_sums: Sequence) -> DeviationProfile:
    """Profile from precomputed ``max_{|S|=k}`` and ``min_{|S|=k}`` of ``sum_S (E - kappa)``."""
    if len(max_sums) != len(min_sums):
        raise ValueError("max and min sums differ in length")
    return DeviationProfile(len(max_sums), tuple(1 - s for s in max_sums), tuple(1 + s for s in min_sums))


def two_term_bound(prof: DeviationProfile):
    """``min_l prod_{k<=l} eps_k prod_{k<=n-l} delta_k``."""
    bad = prof.first_failure()
    if bad is not None:
        raise InvalidProfile(*bad)
    n = prof.n
    eps_pre = [1] + _cumprod(prof.eps)
    delta_pre = [1] + _cumprod(prof.delta)
    return min(eps_pre[l] * delta_pre[n - l] for l in range(n + 1))


def two_term_argmin(prof: DeviationProfile) -> int:
    n = prof.n
    eps_pre = [1] + _cumprod(prof.eps)
    delta_pre = [1] + _cumprod(prof.delta)
    vals = [eps_pre[l] * delta_pre[n - l] for l in range(n + 1)]
    return min(range(n + 1), key=lambda l: (vals[l], l))


def _cumprod(values) -> list:
    out, p = [], 1
    for v in values:
        p = p * v
        out.append(p)
    return out


def one_term_eps(alpha: Sequence, kappa: Sequence) -> list:
    """``eps_k = 1 - max_{|S|<=k} |sum_S (kappa - alpha)|``, nonincreasing in ``k``."""
    dev = [-d for d in _deviations(alpha, kappa)]
    pos = sorted((d for d in dev if d > 0), reverse=True)
    neg = sorted((-d for d in dev if d < 0), reverse=True)
    pos_pre = [0] + _prefix_sums(pos)
    neg_pre = [0] + _prefix_sums(neg)
    out = []
    for k in range(1, len(dev) + 1):
        a = pos_pre[min(k, len(pos))]
        b = neg_pre[min(k, len(neg))]
        out.append(1 - max(a, b))
    return out


def one_term_bound(alpha: Sequence, kappa: Sequence):
    eps = one_term_eps(alpha, kappa)
    for k, e in enumerate(eps, 1):
        if e <= 0:
            raise InvalidProfile("eps", k, e)
    return _cumprod(eps)[-1] if eps else 1


def l1_deviation(alpha: Sequence, kappa: Sequence):
    return sum(abs(d) for d in _deviations(alpha, kappa))


def simple_bound(alpha: Sequence, kappa: Sequence):
    """``(1 - |kappa - alpha|_1)^n``."""
    dist = l1_deviation(alpha, kappa)
    if dist >= 1:
        raise ValueError(f"|kappa - alpha|_1 = {float(dist):.6g} must be below 1")
    return (1 - dist) ** len(kappa)


def coefficient_bound(alpha: Sequence, kappa: Sequence, via: str = "simple") -> float:
    """Lower bound on the coefficient of ``x^kappa``: prefactor times a capacity bound.

    ``via`` selects the capacity bound: ``simple``, ``one_term`` or ``two_term``.
    """
    if via == "simple":
        cap = simple_bound(alpha, kappa)
    elif via == "one_term":
        cap = one_term_bound(alpha, kappa)
    elif via == "two_term":
        cap = two_term_bound(profile_from(alpha, kappa))
    else:
        raise ValueError(f"unknown capacity bound {via!r}")
    return gurvits_prefactor(kappa) * float(cap)


def tightness_witness(kappa: Sequence[int], eps) -> SparsePolynomial:
    """``prod x_i^(k_i-1) * prod_{i<n} (eps x_i + (1-eps) x_{i+1}) * (eps x_n + 1 - eps)``.

    Capacity and coefficient at ``kappa`` are both ``eps^n``. Exact when ``eps``
    is a Fraction.
    """
    kappa = [int(k) for k in kappa]
    n = len(kappa)
    if n == 0 or any(k < 1 for k in kappa):
        raise ValueError("kappa must be positive in every coordinate")
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    one = Fraction(1) if isinstance(eps, Fraction) else 1.0
    factors = [SparsePolynomial.monomial([k - 1 for k in kappa], one)]
    for i in range(n):
        lin = [0 * one] * n
        lin[i] = eps
        if i + 1 < n:
            lin[i + 1] = one - eps
            factors.append(SparsePolynomial.affine(0 * one, lin))
        else:
            factors.append(SparsePolynomial.affine(one - eps, lin))
    return product(factors)


@dataclass
class BoundReport:
    exact: float | None
    two_term: float | None
    one_term: float | None
    simple: float | None
    coeff_bound: float | None
    baseline_kko: float | None
    profile: dict
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        out = {"schema_version": SCHEMA_VERSION}
        out.update(asdict(self))
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _try(f, *args):
    try:
        return float(f(*args))
    except ValueError:
        return None


def bound_report(alpha: Sequence, kappa: Sequence, exact: float | None = None) -> BoundReport:
    """Every applicable bound for a polynomial with ``grad p(1) = alpha``; ``None`` where a bound is vacuous."""
    prof = profile_from(alpha, kappa)
    notes = []
    two = _try(two_term_bound, prof)
    one = _try(one_term_bound, alpha, kappa)
    simple = _try(simple_bound, alpha, kappa)
    if two is None:
        notes.append("two-term bound vacuous: %s_%d <= 0" % prof.first_failure()[:2])
    if simple is None:
        notes.append("l1 deviation is at least 1")
    coeff = gurvits_prefactor(kappa) * simple if simple is not None else None
    eps = min(list(prof.eps) + list(prof.delta))
    baseline = kko_doubly_exp_bound(float(eps), kappa) if eps > 0 else None
    return BoundReport(exact, two, one, simple, coeff, baseline, prof.to_dict(), notes)
