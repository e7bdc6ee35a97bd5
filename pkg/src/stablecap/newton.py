"""Exact position of an exponent vector relative to a Newton polytope."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .exact_lp import maximize
from .poly import SparsePolynomial

INTERIOR = "interior"
BOUNDARY = "boundary"
VERTEX = "vertex"
OUTSIDE = "outside"


@dataclass(frozen=True)
class Membership:
    label: str
    face: tuple[int, ...]  # term positions (grlex order) spanning the minimal face

    def __str__(self) -> str:
        return self.label


def _relint_lp(points: list[tuple[int, ...]], kappa: tuple[Fraction, ...]):
    # max s  s.t.  sum_t (s + nu_t)(e_t - kappa) = 0,  sum_t (s + nu_t) = 1,  nu, s >= 0
    n, N = len(kappa), len(points)
    diffs = [[Fraction(e[i]) - kappa[i] for e in points] for i in range(n)]
    A = [row + [sum(row, Fraction(0))] for row in diffs]
    A.append([Fraction(1)] * N + [Fraction(N)])
    b = [Fraction(0)] * n + [Fraction(1)]
    c = [Fraction(0)] * N + [Fraction(1)]
    return maximize(c, A, b), diffs


def minimal_face(points: Sequence[Sequence[int]], kappa: Sequence) -> tuple[int, ...] | None:
    """Indices of the points on the smallest face of their hull containing ``kappa``.

    Returns ``None`` when ``kappa`` is outside the hull. Each facial reduction
    step is certified: the dual multipliers give an exact linear functional
    that is nonnegative on ``e_t - kappa`` for every active point and positive
    on some.
    """
    kap = tuple(Fraction(k) for k in kappa)
    active = list(range(len(points)))
    first = True
    while True:
        pts = [tuple(points[t]) for t in active]
        res, diffs = _relint_lp(pts, kap)
        if res.status != "optimal":
            if first:
                return None
            raise RuntimeError("facial reduction lost feasibility")
        first = False
        if res.value > 0 or len(active) == 1:
            return tuple(active)
        w = res.duals[: len(kap)]
        slack = [sum((w[i] * diffs[i][t] for i in range(len(kap))), Fraction(0)) for t in range(len(pts))]
        if any(s < 0 for s in slack) or not any(s > 0 for s in slack):
            raise RuntimeError("invalid supporting functional from dual")
        active = [active[t] for t, s in enumerate(slack) if s == 0]


def newton_membership(p: SparsePolynomial, kappa: Sequence[int]) -> Membership:
    """Classify ``kappa`` against the convex hull of the exponents of ``p``.

    ``interior`` means the relative interior, so for a homogeneous polynomial a
    point in the middle of its (lower-dimensional) polytope is interior.
    """
    if len(kappa) != p.num_vars:
        raise ValueError(f"kappa has length {len(kappa)}, expected {p.num_vars}")
    points = list(p.terms)
    if not points:
        return Membership(OUTSIDE, ())
    face = minimal_face(points, kappa)
    if face is None:
        return Membership(OUTSIDE, ())
    if len(face) == 1:
        return Membership(VERTEX, face)
    if len(face) == len(points):
        return Membership(INTERIOR, face)
    return Membership(BOUNDARY, face)
