"""Sums of independent Bernoulli variables and their extremal structure."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence


@dataclass(frozen=True)
class BernoulliFamily:
    params: tuple

    def __post_init__(self):
        for p in self.params:
            if not 0 <= p <= 1:
                raise ValueError(f"Bernoulli parameter {p} outside [0, 1]")

    @property
    def mean(self):
        return sum(self.params, 0)


def sum_distribution(params: Sequence | BernoulliFamily) -> list:
    """``P[sum B_i = s]`` for ``s = 0..n`` by convolution; exact for Fraction input."""
    if isinstance(params, BernoulliFamily):
        params = params.params
    params = list(params)
    for p in params:
        if not 0 <= p <= 1:
            raise ValueError(f"Bernoulli parameter {p} outside [0, 1]")
    one = Fraction(1) if params and all(isinstance(p, (int, Fraction)) for p in params) else 1.0
    dist = [one]
    for p in params:
        nxt = [0 * one] * (len(dist) + 1)
        for s, w in enumerate(dist):
            nxt[s] += w * (1 - p)
            nxt[s + 1] += w * p
        dist = nxt
    return dist


def expected_value(g: Sequence, params: Sequence):
    dist = sum_distribution(params)
    if len(g) < len(dist):
        raise ValueError(f"g table has {len(g)} entries, need {len(dist)}")
    return sum((g[s] * w for s, w in enumerate(dist)), 0 * dist[0])


def hoeffding_candidates(n: int, q):
    """``(m, l, params)``: ``l`` ones and ``m - l`` copies of ``(q - l)/(m - l)``, padded with zeros to ``n``."""
    fl = math.floor(q)
    for m in range(max(fl, 0), n + 1):
        for l in range(0, min(fl, m) + 1):
            if m == l:
                if q != l:
                    continue
                x = None
            else:
                x = (q - l) / (m - l)
                if x > 1 or x < 0:
                    continue
            params = [1] * l + ([x] * (m - l) if x is not None else []) + [0] * (n - m)
            yield m, l, params


def extremal_bernoulli(g: Sequence, n: int, q, direction: str = "min"):
    """Optimum of ``E[g(sum B_i)]`` over ``n`` Bernoullis with ``sum p_i = q``.

    Searches the candidates in which every parameter is 0, 1 or one shared
    value. Ties go to smaller ``m``, then smaller ``l``. Returns
    ``(value, params)`` with ``params`` of length ``n``.
    """
    if direction not in ("min", "max"):
        raise ValueError("direction must be 'min' or 'max'")
    if not 0 <= q <= n:
        raise ValueError(f"q = {q} outside [0, {n}]")
    if len(g) != n + 1:
        raise ValueError(f"g table must have {n + 1} entries, got {len(g)}")
    best = None
    for m, l, params in hoeffding_candidates(n, q):
        val = expected_value(g, params)
        if best is None or (val < best[0] if direction == "min" else val > best[0]):
            best = (val, params)
    return best
