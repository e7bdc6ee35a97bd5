"""Polynomial capacity ``inf_{x>0} p(x) / x^kappa``.

The objective ``F(y) = log p(e^y) - kappa.y`` is convex in ``y``; interior
exponents are handled by damped Newton, extreme and boundary exponents are
routed through :func:`stablecap.newton.newton_membership`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import gammaln

from .newton import BOUNDARY, INTERIOR, OUTSIDE, VERTEX, newton_membership
from .poly import SparsePolynomial

CONVERGED = "converged"
VERTEX_SHORTCUT = "vertex-shortcut"
BOUNDARY_LIMIT = "boundary-limit"
ZERO_OUTSIDE = "zero-outside"

MAX_ITER = 500
COND_LIMIT = 1e12


@dataclass(frozen=True)
class CapacityQuery:
    p: SparsePolynomial
    kappa: tuple[int, ...]
    tol: float = 1e-9

    def __post_init__(self):
        object.__setattr__(self, "kappa", tuple(int(k) for k in self.kappa))
        if len(self.kappa) != self.p.num_vars:
            raise ValueError(f"kappa has length {len(self.kappa)}, polynomial has {self.p.num_vars} variables")
        if any(k < 0 for k in self.kappa):
            raise ValueError("kappa must be nonnegative")
        if not 0 < self.tol <= 1e-2:
            raise ValueError(f"tol must lie in (0, 1e-2], got {self.tol}")


@dataclass(frozen=True)
class CapacityResult:
    value: float
    status: str
    minimizer: tuple[float, ...] | None = None
    iterations: int = 0
    grad_norm: float = 0.0
    membership: str = ""
    notes: tuple[str, ...] = field(default_factory=tuple)


def log_objective(p: SparsePolynomial, kappa: Sequence[float], y: np.ndarray) -> float:
    return p.log_eval(y) - float(np.dot(kappa, y))


def _derivatives(exps, logc, kappa, y):
    z = logc + exps @ y
    zmax = z.max()
    w = np.exp(z - zmax)
    s = w.sum()
    F = zmax + math.log(s) - kappa @ y
    w /= s
    mean = w @ exps
    g = mean - kappa
    centered = exps - mean
    H = (centered * w[:, None]).T @ centered
    return F, g, H


def _minimize_log(p: SparsePolynomial, kappa: Sequence[int], tol: float):
    """Damped Newton on the affine hull of the exponents.

    Returns (F*, y*, iterations, final gradient sup-norm, note).
    """
    exps, coefs = p.as_arrays()
    logc = np.log(coefs)
    kap = np.asarray(kappa, dtype=float)
    n = p.num_vars
    # F is invariant along directions orthogonal to the exponent differences
    centered = exps - exps[0]
    if len(exps) > 1:
        _, sv, vt = np.linalg.svd(centered, full_matrices=False)
        rank = int((sv > 1e-9 * max(sv[0], 1.0)).sum())
        Q = vt[:rank].T
    else:
        Q = np.zeros((n, 0))
    y = np.zeros(n)
    note = ""
    F, g, H = _derivatives(exps, logc, kap, y)
    it = 0
    for it in range(1, MAX_ITER + 1):
        gq = Q.T @ g
        if Q.shape[1] == 0:
            break
        Hq = Q.T @ H @ Q
        ev = np.linalg.eigvalsh(Hq)
        if ev[0] > 0 and ev[-1] / ev[0] < COND_LIMIT:
            step = -Q @ np.linalg.solve(Hq, gq)
        else:
            note = "gradient fallback"
            step = -Q @ gq
        decrement = -float(g @ step)
        if decrement <= 0:
            break
        t = 1.0
        while True:
            y_new = y + t * step
            F_new, g_new, H_new = _derivatives(exps, logc, kap, y_new)
            if F_new <= F - 1e-4 * t * decrement or t < 1e-12:
                break
            t *= 0.5
        moved = t * float(np.abs(step).max())
        y, F, g, H = y_new, F_new, g_new, H_new
        if np.abs(g).max() <= tol * 1e-3 and moved < tol:
            break
        if decrement < 1e-26:
            break
    return F, y, it, float(np.abs(g).max()), note


def capacity(q: CapacityQuery) -> CapacityResult:
    """Capacity of ``q.p`` at ``q.kappa``.

    Exponents outside the Newton polytope give 0. A vertex gives the
    coefficient exactly. On a proper face the infimum is only approached in a
    limit; it equals the capacity of the face polynomial, which is what is
    returned with status ``boundary-limit``.
    """
    p, kappa = q.p, q.kappa
    if len(p) == 0:
        raise ValueError("polynomial has no terms")
    mem = newton_membership(p, kappa)
    if mem.label == OUTSIDE:
        return CapacityResult(0.0, ZERO_OUTSIDE, membership=OUTSIDE)
    if mem.label == VERTEX:
        return CapacityResult(float(p.coefficient(kappa)), VERTEX_SHORTCUT, membership=VERTEX)
    target = p if mem.label == INTERIOR else p.face(mem.face)
    F, y, it, gnorm, note = _minimize_log(target, kappa, q.tol)
    notes = (note,) if note else ()
    if gnorm > q.tol:
        notes += (f"gradient {gnorm:.3g} above tolerance after {it} iterations",)
    value = math.exp(F)
    if mem.label == BOUNDARY:
        return CapacityResult(value, BOUNDARY_LIMIT, None, it, gnorm, BOUNDARY, notes)
    return CapacityResult(value, CONVERGED, tuple(float(v) for v in np.exp(y)), it, gnorm, INTERIOR, notes)


def capacity_value(p: SparsePolynomial, kappa: Sequence[int], tol: float = 1e-9) -> float:
    return capacity(CapacityQuery(p, tuple(kappa), tol)).value


# -- independent grid oracle ----------------------------------------------------


def _golden(f, a: float, b: float, iters: int = 80) -> tuple[float, float]:
    r = (math.sqrt(5) - 1) / 2
    c, d = b - r * (b - a), a + r * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - r * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + r * (b - a)
            fd = f(d)
    return (c, fc) if fc < fd else (d, fd)


def capacity_oracle(q: CapacityQuery, grid_points_per_axis: int = 60, box: float = 20.0, sweeps: int = 30) -> float:
    """Upper bound on the capacity by brute-force search in log coordinates.

    Scans a uniform grid on ``[-box, box]^n``, then refines the best grid point
    by golden-section searches along each axis. Shares no code with the Newton
    solver.
    """
    p, kappa = q.p, np.asarray(q.kappa, dtype=float)
    n = p.num_vars
    if n > 4:
        raise ValueError("capacity_oracle supports at most 4 variables")
    if grid_points_per_axis < 50:
        raise ValueError("grid_points_per_axis must be at least 50")
    exps, coefs = p.as_arrays()
    if n == 0:
        return float(coefs.sum())

    def ratio_log(Y: np.ndarray) -> np.ndarray:
        Z = np.log(coefs)[None, :] + Y @ exps.T
        zmax = Z.max(axis=1, keepdims=True)
        return (zmax[:, 0] + np.log(np.exp(Z - zmax).sum(axis=1))) - Y @ kappa

    axis = np.linspace(-box, box, grid_points_per_axis)
    best_val, best_y = np.inf, None
    mesh = np.stack(np.meshgrid(*([axis] * n), indexing="ij"), axis=-1).reshape(-1, n)
    for chunk in np.array_split(mesh, max(1, len(mesh) // 200_000)):
        vals = ratio_log(chunk)
        k = int(np.argmin(vals))
        if vals[k] < best_val:
            best_val, best_y = float(vals[k]), chunk[k].copy()
    h = axis[1] - axis[0]
    y = best_y
    for _ in range(sweeps):
        before = best_val
        for i in range(n):
            def f(t, i=i):
                yy = y.copy()
                yy[i] = t
                return float(ratio_log(yy[None, :])[0])
            t, val = _golden(f, max(-box, y[i] - h), min(box, y[i] + h))
            if val < best_val:
                best_val = val
                y[i] = t
        if before - best_val < 1e-15:
            break
    return math.exp(best_val)


# -- closed-form prefactors -----------------------------------------------------


def gurvits_prefactor(kappa: Sequence[int]) -> float:
    """``prod_i kappa_i^kappa_i e^-kappa_i / kappa_i!`` with ``0^0 = 1``."""
    total = 0.0
    for k in kappa:
        k = int(k)
        if k < 0:
            raise ValueError("kappa must be nonnegative")
        if k:
            total += k * math.log(k) - k - float(gammaln(k + 1))
    return math.exp(total)


def kko_doubly_exp_bound(eps: float, kappa: Sequence[int]) -> float:
    """Prior doubly exponential bound ``eps^(2^n) prod_{i>=2} 1/(max(k_i, k_[i-1]) + 1)``."""
    n = len(kappa)
    value = eps ** (2**n)
    prefix = 0
    for i, k in enumerate(kappa):
        if i:
            value /= max(k, prefix) + 1
        prefix += k
    return value
