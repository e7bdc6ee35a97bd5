"""Products of affine forms indexed by row-stochastic matrices.

A ``d x (n+1)`` nonnegative matrix ``M`` with unit row sums maps to
``phi(M)(x) = prod_i (m_{i,n+1} + sum_j m_ij x_j)``. Its column sums ``alpha``
are the gradient of ``phi(M)`` at the all-ones point. The set of such matrices
with fixed ``alpha`` is a transportation polytope whose vertices are exactly
the matrices with forest-shaped support.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import transport
from .poly import SparsePolynomial

TERM_CAP = 1_000_000
SUPPORT_EPS = 1e-14
ROW_TOL = 1e-12


class TermCapExceeded(ValueError):
    pass


class NotProductizable(ValueError):
    """``p(u)`` lies outside the values ``phi`` attains on the polytope at ``u``."""


@dataclass(frozen=True, eq=False)
class RowStochasticMatrix:
    rows: np.ndarray  # d x (n+1), last column is the constant term

    def __post_init__(self):
        a = np.array(self.rows, dtype=float)
        if a.ndim != 2 or a.shape[1] < 1:
            raise ValueError("matrix must be two-dimensional with at least one column")
        if np.any(a < 0) or not np.all(np.isfinite(a)):
            raise ValueError("entries must be finite and nonnegative")
        a.setflags(write=False)
        object.__setattr__(self, "rows", a)

    @property
    def d(self) -> int:
        return self.rows.shape[0]

    @property
    def n(self) -> int:
        return self.rows.shape[1] - 1

    @property
    def alpha(self) -> np.ndarray:
        return self.rows[:, :-1].sum(axis=0)

    def support(self) -> np.ndarray:
        return self.rows > SUPPORT_EPS

    def to_dict(self) -> dict:
        return {"d": self.d, "n": self.n, "rows": self.rows.tolist()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data) -> "RowStochasticMatrix":
        try:
            d, n, rows = int(data["d"]), int(data["n"]), data["rows"]
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed matrix record: {exc}") from None
        arr = np.array(rows, dtype=float).reshape(d, n + 1) if d else np.zeros((0, n + 1))
        if arr.shape != (d, n + 1):
            raise ValueError(f"rows have shape {arr.shape}, expected {(d, n + 1)}")
        return cls(arr)

    @classmethod
    def from_json(cls, text: str) -> "RowStochasticMatrix":
        return cls.from_dict(json.loads(text))


def validate(M: RowStochasticMatrix, alpha: Sequence[float] | None = None, atol: float = ROW_TOL) -> tuple[bool, list[str]]:
    """Check unit row sums and column sums ``(alpha, d - |alpha|)``.

    Returns ``(ok, diagnostics)``; each diagnostic names one violated constraint.
    """
    problems = []
    for i, s in enumerate(M.rows.sum(axis=1)):
        if abs(s - 1.0) > atol:
            problems.append(f"row {i} sums to {s:.15g}, expected 1")
    if alpha is not None:
        alpha = np.asarray(alpha, dtype=float)
        if alpha.shape != (M.n,):
            return False, problems + [f"alpha has length {alpha.size}, matrix has {M.n} variable columns"]
        target = np.append(alpha, M.d - alpha.sum())
        for j, (s, t) in enumerate(zip(M.rows.sum(axis=0), target)):
            if abs(s - t) > atol:
                label = "constant column" if j == M.n else f"column {j}"
                problems.append(f"{label} sums to {s:.15g}, expected {t:.15g}")
    return not problems, problems


def associated_polynomial(M: RowStochasticMatrix, term_cap: int = TERM_CAP) -> SparsePolynomial:
    """Expanded ``phi(M)``; raises :class:`TermCapExceeded` if the expansion could pass ``term_cap``."""
    n, d = M.n, M.d
    active = M.support()[:, :-1].any(axis=0)
    k = int(active.sum())
    if math.comb(d + k, k) > term_cap:
        raise TermCapExceeded(f"expansion may reach {math.comb(d + k, k)} terms, cap is {term_cap}")
    out = SparsePolynomial.constant(n, 1.0)
    for row in M.rows:
        out = out * SparsePolynomial.affine(float(row[-1]), [float(v) for v in row[:-1]])
    return out


class ProductForm:
    """Unexpanded ``phi(M)`` for evaluation only."""

    def __init__(self, M: RowStochasticMatrix):
        self.M = M

    @property
    def num_vars(self) -> int:
        return self.M.n

    def __call__(self, x) -> float:
        return math.exp(self.log_value(x))

    def log_value(self, x) -> float:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.M.n,):
            raise ValueError(f"expected a point of length {self.M.n}")
        lin = self.M.rows @ np.append(x, 1.0)
        with np.errstate(divide="ignore"):
            return float(np.log(lin).sum())


def _log_phi(M: np.ndarray, u1: np.ndarray) -> float:
    with np.errstate(divide="ignore"):
        return float(np.log(M @ u1).sum())


# -- forest structure ------------------------------------------------------------


def is_extreme(M: RowStochasticMatrix) -> bool:
    """True iff the bipartite support graph (rows vs. all columns) has no cycle."""
    d, cols = M.rows.shape
    parent = list(range(d + cols))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i, j in zip(*np.nonzero(M.support())):
        a, b = find(int(i)), find(d + int(j))
        if a == b:
            return False
        parent[a] = b
    return True


def left_leaf_count(M: RowStochasticMatrix) -> int:
    """Rows with exactly one nonzero entry."""
    return int((M.support().sum(axis=1) == 1).sum())


def _exact_alpha(alpha) -> list[Fraction]:
    return [a if isinstance(a, Fraction) else Fraction(a) for a in alpha]


def _extreme_exact(n: int, d: int, alpha, rng: random.Random, cost=None) -> list[list[Fraction]]:
    al = _exact_alpha(alpha)
    if len(al) != n:
        raise ValueError(f"alpha has length {len(al)}, expected {n}")
    if d < 0 or any(a < 0 for a in al) or sum(al) > d:
        raise ValueError("infeasible alpha: need alpha >= 0 and |alpha|_1 <= d")
    if d == 0:
        return []
    demand = al + [d - sum(al)]
    if cost is None:
        cost = [[rng.randint(0, 1000) for _ in range(n + 1)] for _ in range(d)]
    rows = list(range(d))
    cols = list(range(n + 1))
    rng.shuffle(rows)
    rng.shuffle(cols)
    return transport.solve([Fraction(1)] * d, demand, cost, rows, cols)


def _snap(X) -> np.ndarray:
    A = np.array([[float(v) for v in row] for row in X], dtype=float)
    A[A < SUPPORT_EPS] = 0.0
    return A


def random_extreme_point(n: int, d: int, alpha: Sequence, seed: int = 0) -> RowStochasticMatrix:
    """A vertex of the polytope, found by minimizing a seeded random linear cost exactly."""
    rng = random.Random(seed)
    X = _extreme_exact(n, d, alpha, rng)
    if d == 0:
        return RowStochasticMatrix(np.zeros((0, n + 1)))
    return RowStochasticMatrix(_snap(X))


# -- constructions and induction steps ------------------------------------------------


def delta_tight_matrix(kappa: Sequence[int], alpha: Sequence[float]) -> RowStochasticMatrix:
    """Staircase matrix whose capacity at ``kappa`` is ``prod_k (1 - s_k)``.

    Columns are staircased in order of non-increasing ``kappa_j - alpha_j``, so
    ``s_k`` is the sum of the ``k`` largest deviations. Unit rows ``e_j`` are
    repeated ``kappa_j - 1`` times on top.
    """
    kappa = [int(k) for k in kappa]
    alpha = [float(a) for a in alpha]
    n = len(kappa)
    if len(alpha) != n:
        raise ValueError("kappa and alpha differ in length")
    if any(k < 1 for k in kappa):
        raise ValueError("kappa must be positive in every coordinate")
    dev = [k - a for k, a in zip(kappa, alpha)]
    if any(x < 0 for x in dev):
        raise ValueError("need alpha <= kappa")
    if sum(dev) >= 1:
        raise ValueError(f"|kappa - alpha|_1 = {sum(dev):.6g} must be below 1")
    order = sorted(range(n), key=lambda j: (-dev[j], j))
    rows = []
    for j in range(n):
        e = [0.0] * (n + 1)
        e[j] = 1.0
        rows.extend([list(e) for _ in range(kappa[j] - 1)])
    s = 0.0
    for pos, j in enumerate(order):
        s += dev[j]
        r = [0.0] * (n + 1)
        r[j] = 1.0 - s
        nxt = order[pos + 1] if pos + 1 < n else n
        r[nxt] = s
        rows.append(r)
    return RowStochasticMatrix(np.array(rows))


def restrict_zero_column(M: RowStochasticMatrix, j: int, kappa: Sequence[int]) -> tuple[RowStochasticMatrix, float]:
    """Set ``x_j = 0``: delete column ``j`` and renormalize each row.

    Returns ``(M', factor)`` with ``factor = prod_i (1 - m_ij)``, so that
    ``phi(M)|_{x_j=0} = factor * phi(M')``.
    """
    if not 0 <= j < M.n:
        raise ValueError(f"column {j} out of range")
    if len(kappa) != M.n or int(kappa[j]) != 0:
        raise ValueError("restrict_zero_column needs kappa_j = 0")
    col = M.rows[:, j]
    dead = np.nonzero(col >= 1.0 - ROW_TOL)[0]
    if dead.size:
        raise ValueError(f"row {int(dead[0])} has m_ij = 1; setting x_j = 0 kills it")
    keep = np.delete(M.rows, j, axis=1)
    scale = 1.0 - col
    return RowStochasticMatrix(keep / scale[:, None]), float(np.prod(scale))


def peel_leaf_column(M: RowStochasticMatrix, j: int, kappa: Sequence[int]) -> tuple[RowStochasticMatrix, float]:
    """Remove a column with one nonzero entry ``m_{i0,j}`` along with row ``i0``.

    The capacity at ``kappa`` (with ``kappa_j = 1``) is at least
    ``m_{i0,j}`` times the capacity of the smaller matrix at ``kappa`` minus
    coordinate ``j``.
    """
    if not 0 <= j < M.n:
        raise ValueError(f"column {j} out of range")
    if len(kappa) != M.n or int(kappa[j]) != 1:
        raise ValueError("peel_leaf_column needs kappa_j = 1")
    nz = np.nonzero(M.support()[:, j])[0]
    if nz.size != 1:
        raise ValueError(f"column {j} has {nz.size} nonzero entries, expected exactly 1")
    i0 = int(nz[0])
    factor = float(M.rows[i0, j])
    rest = np.delete(np.delete(M.rows, i0, axis=0), j, axis=1)
    return RowStochasticMatrix(rest), factor


def drop_coordinate(kappa: Sequence[int], j: int) -> tuple[int, ...]:
    return tuple(int(k) for i, k in enumerate(kappa) if i != j)


# -- productization ------------------------------------------------------------------


@dataclass(frozen=True)
class Productization:
    matrix: RowStochasticMatrix
    value: float
    target: float
    upper: float  # max of phi(.)(u) over the polytope
    lower: float  # smallest value seen at a vertex
    vertices_tried: int


def _linearized_descent(X0, demand_exact, u1, rng, max_steps: int = 50):
    """Frank-Wolfe style vertex walk: minimize the linearization of log phi at the current vertex."""
    d, cols = len(X0), len(u1)
    A = _snap(X0)
    best = _log_phi(A, u1)
    for _ in range(max_steps):
        lin = A @ u1
        grad = u1[None, :] / np.where(lin > 0, lin, 1e-300)[:, None]
        # integer-scaled costs keep the transportation simplex exact
        scale = 1e6 / max(float(grad.max()), 1e-300)
        cost = [[int(round(grad[i, k] * scale)) for k in range(cols)] for i in range(d)]
        X = transport.solve([Fraction(1)] * d, demand_exact, cost, list(range(d)), list(range(cols)))
        B = _snap(X)
        val = _log_phi(B, u1)
        if val >= best - 1e-15:
            break
        A, best = B, val
    return A, best


def productize(p: SparsePolynomial, u: Sequence[float], d: int | None = None, tol: float = 1e-10,
               seed: int = 0, samples: int = 64) -> Productization:
    """Find ``M`` with ``phi(M)(u) = p(u)`` and column sums ``grad p(1)``.

    The maximum of ``phi(.)(u)`` over the polytope is attained at the rank-one
    matrix ``1 beta^T / d`` (AM-GM over rows), so it is known in closed form.
    A vertex with value at most ``p(u)`` is searched among seeded random
    vertices and a linearized descent. Along the segment from the maximizer to
    that vertex ``log phi`` is concave and starts at its global maximum, hence
    nonincreasing, and bisection finds the crossing.
    """
    u = np.asarray(u, dtype=float)
    n = p.num_vars
    if u.shape != (n,) or np.any(u <= 0):
        raise ValueError("u must be a positive vector with one entry per variable")
    total = float(p.sum_of_coefficients())
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"p(1) = {total:.12g}, expected 1")
    deg = p.total_degree
    d = deg if d is None else int(d)
    if d < deg:
        raise ValueError(f"degree bound {d} below total degree {deg}")
    alpha_exact = [Fraction(a) for a in p.gradient_at_one()]
    excess = sum(alpha_exact) - d
    if excess > 0:
        # float coefficients can overshoot |alpha|_1 = d by rounding; pull back onto the face
        if excess > Fraction(1e-9) * max(d, 1):
            raise ValueError("|alpha|_1 exceeds d")
        alpha_exact = [a * d / (d + excess) for a in alpha_exact]
    demand = alpha_exact + [d - sum(alpha_exact)]
    beta = np.array([float(v) for v in demand])
    u1 = np.append(u, 1.0)
    target = float(p(u))
    log_t = math.log(target)

    if d == 0:
        # constant polynomial: the polytope is the single empty matrix with phi = 1
        M0 = RowStochasticMatrix(np.zeros((0, n + 1)))
        if abs(target - 1.0) > tol:
            raise NotProductizable(f"p(u) = {target:.12g} differs from the constant 1")
        return Productization(M0, 1.0, target, 1.0, 1.0, 0)
    top = math.log(float(beta @ u1) / d) * d
    M0 = np.tile(beta / d, (d, 1))
    if log_t > top:
        if target - math.exp(top) <= tol * target:
            return Productization(RowStochasticMatrix(M0), math.exp(top), target, math.exp(top), math.nan, 0)
        raise NotProductizable(f"p(u) = {target:.12g} exceeds the maximum {math.exp(top):.12g} over the polytope")

    rng = random.Random(seed)
    best_X, best_val = None, math.inf
    tried = 0
    for _ in range(samples):
        tried += 1
        X = _extreme_exact(n, d, alpha_exact, rng)
        val = _log_phi(_snap(X), u1)
        if val < best_val:
            best_X, best_val = X, val
        if val <= log_t:
            break
    V = _snap(best_X)
    if best_val > log_t:
        V, best_val = _linearized_descent(best_X, demand, u1, rng)
        tried += 1
    lower = math.exp(best_val)
    if best_val > log_t:
        if lower - target <= tol * target:
            return Productization(RowStochasticMatrix(V), lower, target, math.exp(top), lower, tried)
        raise NotProductizable(f"p(u) = {target:.12g} is below every vertex value found (min {lower:.12g})")

    lo, hi = 0.0, 1.0  # f(lo) >= target >= f(hi)
    M = V
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        M = (1 - mid) * M0 + mid * V
        val = _log_phi(M, u1)
        if abs(math.expm1(val - log_t)) <= tol:
            break
        if val > log_t:
            lo = mid
        else:
            hi = mid
    # rows of a convex combination still sum to 1 exactly up to rounding
    M = M / M.sum(axis=1, keepdims=True)
    return Productization(RowStochasticMatrix(M), math.exp(_log_phi(M, u1)), target, math.exp(top), lower, tried)
