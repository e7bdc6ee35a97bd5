"""Exact rational linear programming.

A dense two-phase tableau simplex over :class:`fractions.Fraction` with
Bland's rule, for the small programs that need an exact answer (Newton
polytope classification). Not intended for more than a few hundred columns.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence


@dataclass
class LPResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    x: list[Fraction] | None = None
    value: Fraction | None = None
    duals: list[Fraction] | None = None
    basis: list[int] | None = None


def _pivot(T: list[list[Fraction]], obj: list[Fraction], r: int, c: int) -> None:
    row = T[r]
    piv = row[c]
    if piv != 1:
        T[r] = row = [v / piv for v in row]
    for i, other in enumerate(T):
        if i != r:
            f = other[c]
            if f:
                T[i] = [a - f * b for a, b in zip(other, row)]
    f = obj[c]
    if f:
        obj[:] = [a - f * b for a, b in zip(obj, row)]


def _run(T, obj, basis, allowed) -> str:
    """Maximize with reduced costs in ``obj`` (last entry is -value)."""
    while True:
        enter = next((j for j in allowed if obj[j] > 0), None)
        if enter is None:
            return "optimal"
        best = None
        for i, row in enumerate(T):
            a = row[enter]
            if a > 0:
                ratio = row[-1] / a
                if best is None or ratio < best[0] or (ratio == best[0] and basis[i] < basis[best[1]]):
                    best = (ratio, i)
        if best is None:
            return "unbounded"
        r = best[1]
        _pivot(T, obj, r, enter)
        basis[r] = enter


def _solve_transpose(B: list[list[Fraction]], rhs: list[Fraction]) -> list[Fraction]:
    """Solve ``B^T y = rhs`` by Gauss-Jordan elimination."""
    m = len(B)
    A = [[Fraction(B[r][c]) for r in range(m)] + [Fraction(rhs[c])] for c in range(m)]
    for col in range(m):
        piv = next(r for r in range(col, m) if A[r][col] != 0)
        A[col], A[piv] = A[piv], A[col]
        p = A[col][col]
        A[col] = [v / p for v in A[col]]
        for r in range(m):
            if r != col and A[r][col] != 0:
                f = A[r][col]
                A[r] = [a - f * b for a, b in zip(A[r], A[col])]
    return [A[r][-1] for r in range(m)]


def maximize(c: Sequence, A: Sequence[Sequence], b: Sequence) -> LPResult:
    """Maximize ``c.x`` subject to ``A x = b``, ``x >= 0``, exactly.

    Returns primal solution, optimal value, and dual multipliers ``y`` for the
    equality rows (zero for rows found redundant), satisfying
    ``A^T y >= c`` and ``b.y = value``.
    """
    m, n = len(A), len(c)
    c = [Fraction(v) for v in c]
    A = [[Fraction(v) for v in row] for row in A]
    b = [Fraction(v) for v in b]
    # phase 1: artificials n..n+m-1 on sign-normalized rows
    T = []
    for i in range(m):
        s = -1 if b[i] < 0 else 1
        row = [s * v for v in A[i]] + [Fraction(int(k == i)) for k in range(m)] + [s * b[i]]
        T.append(row)
    basis = list(range(n, n + m))
    obj = [Fraction(0)] * (n + m + 1)
    for row in T:  # reduced costs of max -sum(artificials)
        for j in range(n):
            obj[j] += row[j]
        obj[-1] += row[-1]
    _run(T, obj, basis, range(n))
    if obj[-1] != 0:
        return LPResult("infeasible")
    # drive zero-level artificials out; drop rows that cannot be cleared
    keep_rows = list(range(m))
    for r in range(m - 1, -1, -1):
        if basis[r] >= n:
            col = next((j for j in range(n) if T[r][j] != 0), None)
            if col is None:
                del T[r], basis[r], keep_rows[r]
            else:
                _pivot(T, obj, r, col)
                basis[r] = col
    T = [row[:n] + [row[-1]] for row in T]
    # phase 2 reduced costs
    obj = list(c) + [Fraction(0)]
    for i, row in enumerate(T):
        cb = c[basis[i]]
        if cb:
            obj = [o - cb * v for o, v in zip(obj, row)]
    status = _run(T, obj, basis, range(n))
    if status != "optimal":
        return LPResult(status)
    x = [Fraction(0)] * n
    for i, j in enumerate(basis):
        x[j] = T[i][-1]
    value = sum((ci * xi for ci, xi in zip(c, x)), Fraction(0))
    y = [Fraction(0)] * m
    if basis:
        Bsub = [[A[r][j] for j in basis] for r in keep_rows]
        ysub = _solve_transpose(Bsub, [c[j] for j in basis])
        for r, val in zip(keep_rows, ysub):
            y[r] = val
    return LPResult("optimal", x, value, y, list(basis))
