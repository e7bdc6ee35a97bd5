"""Permanents and the minimization of the permanent over matrices with fixed margins."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

MAX_N = 24
MAX_EXACT_N = 12
GRAY_LOOP_N = 14  # above this the float path is vectorized in chunks


@dataclass(frozen=True)
class ColumnSumSpec:
    c: tuple

    def __post_init__(self):
        object.__setattr__(self, "c", tuple(self.c))
        if not self.c:
            raise ValueError("empty column-sum vector")
        if any(not x > 0 for x in self.c):
            raise ValueError("column sums must be positive")
        if abs(float(sum(self.c)) - self.n) > 1e-9 * self.n:
            raise ValueError(f"column sums total {float(sum(self.c)):.12g}, must equal n = {self.n}")

    @property
    def n(self) -> int:
        return len(self.c)


def _check_square(M) -> int:
    rows = [list(r) for r in M]
    n = len(rows)
    if any(len(r) != n for r in rows):
        raise ValueError("matrix is not square")
    return n


def permanent(M, exact: bool = False):
    """Ryser's formula with Gray-code subset updates.

    ``exact=True`` works over Fractions (``n <= 12``) and returns a Fraction.
    """
    n = _check_square(M)
    if n == 0:
        return Fraction(1) if exact else 1.0
    if exact:
        if n > MAX_EXACT_N:
            raise ValueError(f"exact mode supports n <= {MAX_EXACT_N}")
        A = [[Fraction(v) for v in row] for row in M]
        return _ryser_gray(A, n, Fraction(0))
    if n > MAX_N:
        raise ValueError(f"n = {n} exceeds {MAX_N}")
    A = np.asarray(M, dtype=float)
    if n <= GRAY_LOOP_N:
        return float(_ryser_gray(A.tolist(), n, 0.0))
    return _ryser_chunked(A)


def _ryser_gray(A, n, zero):
    # sum over nonempty column subsets S of (-1)^|S| prod_i sum_{j in S} a_ij, times (-1)^n
    row_sums = [zero] * n
    total = zero
    prev_gray = 0
    for k in range(1, 1 << n):
        gray = k ^ (k >> 1)
        j = (gray ^ prev_gray).bit_length() - 1
        if gray >> j & 1:
            for i in range(n):
                row_sums[i] += A[i][j]
        else:
            for i in range(n):
                row_sums[i] -= A[i][j]
        prev_gray = gray
        prod = row_sums[0]
        for i in range(1, n):
            prod *= row_sums[i]
        if bin(gray).count("1") & 1:
            total -= prod
        else:
            total += prod
    return total if n % 2 == 0 else -total


def _ryser_chunked(A: np.ndarray, chunk_bits: int = 16) -> float:
    n = A.shape[0]
    low = min(chunk_bits, n)
    idx = np.arange(1 << low, dtype=np.int64)
    low_bits = ((idx[:, None] >> np.arange(low)) & 1).astype(float)  # 2^low x low
    low_sums = low_bits @ A[:, :low].T  # 2^low x n
    low_par = low_bits.sum(axis=1) % 2
    total = 0.0
    for hi in range(1 << (n - low)):
        hi_cols = [low + b for b in range(n - low) if hi >> b & 1]
        offset = A[:, hi_cols].sum(axis=1) if hi_cols else np.zeros(n)
        par = (low_par + len(hi_cols)) % 2
        prods = np.prod(low_sums + offset[None, :], axis=1)
        total += float(np.sum(np.where(par == 1, -prods, prods)))
    return total if n % 2 == 0 else -total


def permanent_naive(M, exact: bool = False):
    """Sum over all permutations; for cross-checking only."""
    import itertools

    n = _check_square(M)
    A = [[Fraction(v) for v in r] for r in M] if exact else [[float(v) for v in r] for r in M]
    total = Fraction(0) if exact else 0.0
    for perm in itertools.permutations(range(n)):
        p = Fraction(1) if exact else 1.0
        for i, j in enumerate(perm):
            p *= A[i][j]
            if not p:
                break
        total += p
    return total


def _subset_table(n: int):
    idx = np.arange(1, 1 << n, dtype=np.int64)
    bits = ((idx[:, None] >> np.arange(n)) & 1).astype(float)
    sign = np.where(bits.sum(axis=1) % 2 == n % 2, 1.0, -1.0)
    return bits, sign


def permanent_and_gradient(M: np.ndarray, table=None):
    """Permanent and ``d per / d m_ij`` (the permanents of the minors), vectorized over subsets."""
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    bits, sign = table if table is not None else _subset_table(n)
    R = bits @ M.T  # subsets x rows
    # products excluding one row via prefix/suffix products
    pre = np.ones_like(R)
    suf = np.ones_like(R)
    pre[:, 1:] = np.cumprod(R[:, :-1], axis=1)
    suf[:, :-1] = np.cumprod(R[:, :0:-1], axis=1)[:, ::-1]
    excl = pre * suf  # subsets x rows
    per = float(sign @ (pre[:, -1] * R[:, -1]))
    grad = (excl * sign[:, None]).T @ bits  # rows x cols
    return per, grad


# -- rank-one candidate and uniqueness regime ---------------------------------------------


def rank_one_candidate(spec: ColumnSumSpec) -> np.ndarray:
    """``(1/n) 1 c^T``."""
    c = np.array([float(x) for x in spec.c])
    return np.tile(c / spec.n, (spec.n, 1))


def rank_one_permanent(c: Sequence, exact: bool = False):
    """``n!/n^n prod c_i``."""
    n = len(c)
    if exact:
        out = Fraction(math.factorial(n), n**n)
        for x in c:
            out *= Fraction(x)
        return out
    return math.exp(math.lgamma(n + 1) - n * math.log(n) + sum(math.log(float(x)) for x in c))


def uniqueness_lhs(n: int):
    """``(n-2)^(n-2) n^(n-1) / (n-1)^(2n-3)`` as a Fraction."""
    if n < 3:
        raise ValueError("uniqueness condition needs n >= 3")
    return Fraction((n - 2) ** (n - 2) * n ** (n - 1), (n - 1) ** (2 * n - 3))


def uniqueness_condition(spec: ColumnSumSpec, L) -> tuple[bool, float]:
    """Whether the rank-one matrix is certified as the unique minimizer; margin is LHS - prod(c)/L."""
    if not L > 0:
        raise ValueError("capacity lower bound must be positive")
    lhs = uniqueness_lhs(spec.n)
    prod_c = math.prod(Fraction(x) if isinstance(x, (int, Fraction)) else x for x in spec.c)
    rhs = prod_c / L
    if isinstance(rhs, Fraction):
        margin = lhs - rhs
        return margin > 0, float(margin)
    margin = float(lhs) - float(rhs)
    return margin > 0, margin


# -- the sparse competitor ----------------------------------------------------------------


@dataclass(frozen=True)
class MinPerExample:
    n: int
    t: float
    eps: float
    c: tuple
    matrix: np.ndarray  # (n+1) x (n+1)
    per_sparse: float
    per_rank_one: float
    per_sparse_ryser: float | None
    per_rank_one_ryser: float | None
    l1_distance: float

    @property
    def sparse_is_smaller(self) -> bool:
        return self.per_sparse < self.per_rank_one


def min_per_matrix(n: int, eps):
    """Bidiagonal ``(n+1) x (n+1)`` matrix: row 0 is ``e_0``, row ``k`` has ``1 - k eps`` at ``k-1`` and ``k eps`` at ``k``.

    A Fraction ``eps`` gives a list of Fraction rows for exact permanents.
    """
    if isinstance(eps, Fraction):
        rows = [[Fraction(0)] * (n + 1) for _ in range(n + 1)]
        rows[0][0] = Fraction(1)
        for k in range(1, n + 1):
            rows[k][k - 1] = 1 - k * eps
            rows[k][k] = k * eps
        return rows
    M = np.zeros((n + 1, n + 1))
    M[0, 0] = 1.0
    for k in range(1, n + 1):
        M[k, k - 1] = 1.0 - k * float(eps)
        M[k, k] = k * float(eps)
    return M


def min_per_columns(n: int, eps) -> tuple:
    return (2 - eps,) + (1 - eps,) * (n - 1) + (n * eps,)


def _min_per_logs(n: int, t: float) -> tuple[float, float, float]:
    log_eps = -(1 + t) * math.log(n)
    eps = math.exp(log_eps)
    log_sparse = math.lgamma(n + 1) + n * log_eps
    log_rank = (math.lgamma(n + 2) - (n + 1) * math.log(n + 1) + math.log(2 - eps)
                + (n - 1) * math.log1p(-eps) + math.log(n) + log_eps)
    return eps, log_sparse, log_rank


def min_per_counterexample(n: int, t: float, check_limit: int = 10) -> MinPerExample:
    """The sparse matrix with permanent ``n! eps^n``, ``eps = n^-(1+t)``, against the rank-one matrix with the same column sums."""
    if n < 3:
        raise ValueError("need n >= 3")
    if not t > 0:
        raise ValueError("t must be positive")
    eps, log_sparse, log_rank = _min_per_logs(n, t)
    M = min_per_matrix(n, eps)
    c = min_per_columns(n, eps)
    ryser_sparse = ryser_rank = None
    if n <= check_limit:
        ryser_sparse = permanent(M)
        ryser_rank = permanent(np.tile(np.array(c) / (n + 1), (n + 1, 1)))
    l1 = float(sum(abs(x - 1) for x in c))
    return MinPerExample(n, t, eps, c, M, math.exp(log_sparse), math.exp(log_rank), ryser_sparse, ryser_rank, l1)


def min_per_exact(n: int, t: int) -> tuple[Fraction, Fraction]:
    """Both permanents exactly for integer ``t`` (``eps = 1/n^(1+t)`` is rational)."""
    eps = Fraction(1, n ** (1 + t))
    sparse = math.factorial(n) * eps**n
    rank = Fraction(math.factorial(n + 1), (n + 1) ** (n + 1)) * (2 - eps) * (1 - eps) ** (n - 1) * n * eps
    return sparse, rank


def min_per_scan(t: float = 1.0, n_max: int = 60) -> dict:
    """Smallest ``n`` in ``3..n_max`` where the sparse matrix beats the rank-one matrix."""
    rows = []
    threshold = None
    for n in range(3, n_max + 1):
        if float(t).is_integer():
            sparse, rank = min_per_exact(n, int(t))
            smaller = sparse < rank
            ratio = float(Fraction(sparse, 1) / rank)
        else:
            _, ls, lr = _min_per_logs(n, t)
            smaller = ls < lr
            ratio = math.exp(ls - lr)
        rows.append({"n": n, "sparse_over_rank_one": ratio, "sparse_smaller": bool(smaller)})
        if smaller and threshold is None:
            threshold = n
    return {"t": t, "threshold": threshold, "rows": rows}


# -- numerical minimization -----------------------------------------------------------------


def project_margins(X: np.ndarray, c: np.ndarray, iters: int = 500, tol: float = 1e-14) -> np.ndarray:
    """Nearest point (Dykstra) of ``{X >= 0, X 1 = 1, X^T 1 = c}``."""
    n = X.shape[0]
    ones = np.ones(n)

    def affine(Y):
        a = Y.sum(axis=1) - ones
        b = Y.sum(axis=0) - c
        s = a.sum()
        return Y - a[:, None] / n - b[None, :] / n + s / n**2

    P = np.zeros_like(X)
    Q = np.zeros_like(X)
    Y = X.copy()
    for _ in range(iters):
        Z = affine(Y + P)
        P = Y + P - Z
        Y_new = np.maximum(Z + Q, 0.0)
        Q = Z + Q - Y_new
        if np.abs(Y_new - Y).max() < tol:
            Y = Y_new
            break
        Y = Y_new
    return affine(Y) if np.all(affine(Y) >= 0) else Y


def minimize_permanent(spec: ColumnSumSpec, seed: int = 0, iters: int = 2000, restarts: int = 10):
    """Projected-gradient local search with random restarts; a heuristic, not a global certificate.

    Returns ``(matrix, value, restart_results)``.
    """
    n = spec.n
    if n > 8:
        raise ValueError("minimize_permanent supports n <= 8")
    c = np.array([float(x) for x in spec.c])
    rng = np.random.default_rng(seed)
    table = _subset_table(n)
    best = None
    results = []
    for _ in range(restarts):
        X = project_margins(rng.uniform(0.05, 1.0, (n, n)), c)
        val, grad = permanent_and_gradient(X, table)
        step = 0.5
        for _ in range(iters):
            # tangent direction of the affine constraints, then back into the polytope
            while True:
                Y = project_margins(X - step * grad, c)
                new_val, new_grad = permanent_and_gradient(Y, table)
                if new_val <= val - 1e-4 * float(np.sum(grad * (X - Y))) or step < 1e-12:
                    break
                step *= 0.5
            moved = float(np.abs(Y - X).max())
            X, val, grad = Y, new_val, new_grad
            step = min(step * 2.0, 4.0)
            if moved < 1e-13:
                break
        results.append((val, X))
        if best is None or val < best[0] - 1e-15:
            best = (val, X)
    return best[1], best[0], results
