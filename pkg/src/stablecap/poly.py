"""Sparse multivariate polynomials with nonnegative coefficients.

Coefficients may be floats or :class:`fractions.Fraction`; arithmetic is
generic, so a polynomial built from Fractions stays exact under products,
substitution, derivatives and polarization.
"""

from __future__ import annotations

import itertools
import json
import math
from fractions import Fraction
from numbers import Real
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import numpy as np

Exponent = tuple[int, ...]


class Var(int):
    """Target variable index used in :meth:`SparsePolynomial.substitute`."""


def _check_exponent(exp: Iterable[int], n: int) -> Exponent:
    e = tuple(int(k) for k in exp)
    if len(e) != n:
        raise ValueError(f"exponent {e} has length {len(e)}, expected {n}")
    if any(k < 0 for k in e):
        raise ValueError(f"exponent {e} has a negative entry")
    return e


def grlex_key(exp: Exponent) -> tuple:
    """Sort key placing higher total degree first, then lexicographically larger."""
    return (-sum(exp), tuple(-k for k in exp))


class SparsePolynomial:
    """Immutable map from exponent vectors to strictly positive coefficients."""

    __slots__ = ("num_vars", "_terms", "_arrays")

    def __init__(self, num_vars: int, terms: Mapping[Iterable[int], Real] | None = None):
        if num_vars < 0:
            raise ValueError("num_vars must be nonnegative")
        self.num_vars = int(num_vars)
        clean: dict[Exponent, Real] = {}
        for exp, coef in (terms or {}).items():
            e = _check_exponent(exp, self.num_vars)
            if coef < 0:
                raise ValueError(f"negative coefficient {coef} at {e}")
            if coef == 0:
                continue
            clean[e] = clean.get(e, 0) + coef
        self._terms = dict(sorted(clean.items(), key=lambda kv: grlex_key(kv[0])))
        self._arrays = None

    # -- construction helpers -------------------------------------------------

    @classmethod
    def constant(cls, num_vars: int, value: Real = 1) -> "SparsePolynomial":
        return cls(num_vars, {(0,) * num_vars: value})

    @classmethod
    def monomial(cls, exp: Sequence[int], coef: Real = 1) -> "SparsePolynomial":
        return cls(len(exp), {tuple(exp): coef})

    @classmethod
    def affine(cls, constant: Real, linear: Sequence[Real]) -> "SparsePolynomial":
        """``constant + sum_j linear[j] * x_j``."""
        n = len(linear)
        terms = {(0,) * n: constant}
        for j, a in enumerate(linear):
            e = [0] * n
            e[j] = 1
            terms[tuple(e)] = a
        return cls(n, terms)

    # -- basic queries --------------------------------------------------------

    @property
    def terms(self) -> Mapping[Exponent, Real]:
        return MappingProxyType(self._terms)

    def __len__(self) -> int:
        return len(self._terms)

    def __iter__(self):
        return iter(self._terms.items())

    @property
    def total_degree(self) -> int:
        if not self._terms:
            return 0
        return max(sum(e) for e in self._terms)

    def degrees(self) -> tuple[int, ...]:
        """Maximum exponent of each variable."""
        if not self._terms:
            return (0,) * self.num_vars
        return tuple(max(col) for col in zip(*self._terms)) if self.num_vars else ()

    def coefficient(self, kappa: Sequence[int]):
        return self._terms.get(tuple(int(k) for k in kappa), 0)

    def is_exact(self) -> bool:
        return all(isinstance(c, (int, Fraction)) for c in self._terms.values())

    def as_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Exponent matrix (terms x vars) and float coefficient vector."""
        if self._arrays is None:
            exps = np.array(list(self._terms), dtype=float).reshape(len(self._terms), self.num_vars)
            coefs = np.array([float(c) for c in self._terms.values()], dtype=float)
            self._arrays = (exps, coefs)
        return self._arrays

    # -- evaluation -----------------------------------------------------------

    def __call__(self, x: Sequence[Real]) -> float:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.num_vars,):
            raise ValueError(f"expected a point of length {self.num_vars}, got shape {x.shape}")
        exps, coefs = self.as_arrays()
        if not len(coefs):
            return 0.0
        return float(coefs @ np.prod(x[None, :] ** exps, axis=1))

    def evaluate_exact(self, x: Sequence[Real]):
        if len(x) != self.num_vars:
            raise ValueError(f"expected a point of length {self.num_vars}, got {len(x)}")
        total = 0
        for exp, coef in self._terms.items():
            term = coef
            for xi, k in zip(x, exp):
                if k:
                    term = term * xi**k
            total = total + term
        return total

    def log_eval(self, y: np.ndarray) -> float:
        """``log p(exp(y))`` computed stably."""
        exps, coefs = self.as_arrays()
        z = np.log(coefs) + exps @ np.asarray(y, dtype=float)
        zmax = z.max()
        return float(zmax + math.log(np.exp(z - zmax).sum()))

    def gradient_at_one(self) -> tuple:
        grad = [0] * self.num_vars
        for exp, coef in self._terms.items():
            for i, k in enumerate(exp):
                if k:
                    grad[i] = grad[i] + coef * k
        return tuple(grad)

    def sum_of_coefficients(self):
        return sum(self._terms.values(), 0)

    # -- algebra --------------------------------------------------------------

    def __add__(self, other: "SparsePolynomial") -> "SparsePolynomial":
        self._check_same(other)
        terms = dict(self._terms)
        for e, c in other._terms.items():
            terms[e] = terms.get(e, 0) + c
        return SparsePolynomial(self.num_vars, terms)

    def __mul__(self, other):
        if isinstance(other, SparsePolynomial):
            self._check_same(other)
            terms: dict[Exponent, Real] = {}
            for e1, c1 in self._terms.items():
                for e2, c2 in other._terms.items():
                    e = tuple(a + b for a, b in zip(e1, e2))
                    terms[e] = terms.get(e, 0) + c1 * c2
            return SparsePolynomial(self.num_vars, terms)
        if other < 0:
            raise ValueError("scaling by a negative number")
        return SparsePolynomial(self.num_vars, {e: c * other for e, c in self._terms.items()})

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "SparsePolynomial":
        out = SparsePolynomial.constant(self.num_vars, 1)
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, SparsePolynomial)
            and self.num_vars == other.num_vars
            and self._terms == other._terms
        )

    def __hash__(self):
        return hash((self.num_vars, tuple(self._terms.items())))

    def __repr__(self) -> str:
        return f"SparsePolynomial({self.num_vars}, {dict(self._terms)!r})"

    def _check_same(self, other: "SparsePolynomial") -> None:
        if self.num_vars != other.num_vars:
            raise ValueError(f"variable count mismatch: {self.num_vars} vs {other.num_vars}")

    def allclose(self, other: "SparsePolynomial", rtol: float = 1e-12, atol: float = 0.0) -> bool:
        if self.num_vars != other.num_vars:
            return False
        keys = set(self._terms) | set(other._terms)
        return all(
            math.isclose(float(self.coefficient(k)), float(other.coefficient(k)), rel_tol=rtol, abs_tol=atol)
            for k in keys
        )

    # -- structural transformations ------------------------------------------

    def partial_derivative(self, i: int) -> "SparsePolynomial":
        if not 0 <= i < self.num_vars:
            raise IndexError(f"variable {i} out of range")
        terms = {}
        for exp, coef in self._terms.items():
            k = exp[i]
            if k:
                e = list(exp)
                e[i] = k - 1
                terms[tuple(e)] = coef * k
        return SparsePolynomial(self.num_vars, terms)

    def substitute(self, assignment: Mapping[int, Real | Var]) -> "SparsePolynomial":
        """Replace variables by nonnegative constants or by new variables.

        Constants eliminate their variable. Without any :class:`Var` targets the
        untouched variables are kept in order and renumbered. With targets, the
        mapping must cover every variable; the result has ``max(target)+1``
        variables and merged variables multiply (``x_a -> y, x_b -> y`` gives
        ``x_a x_b -> y**2``).
        """
        for var, val in assignment.items():
            if not 0 <= var < self.num_vars:
                raise IndexError(f"variable {var} out of range")
            if not isinstance(val, Var) and val < 0:
                raise ValueError(f"negative constant {val} for variable {var}")
        targets = [v for v in assignment.values() if isinstance(v, Var)]
        if targets:
            if len(assignment) != self.num_vars:
                raise ValueError("a mapping with variable targets must cover every variable")
            m = max(targets) + 1
            target_of = dict(assignment)
        else:
            kept = [i for i in range(self.num_vars) if i not in assignment]
            m = len(kept)
            target_of = dict(assignment)
            target_of.update({old: Var(new) for new, old in enumerate(kept)})
        terms: dict[Exponent, Real] = {}
        for exp, coef in self._terms.items():
            new = [0] * m
            c = coef
            for i, k in enumerate(exp):
                if not k:
                    continue
                t = target_of[i]
                if isinstance(t, Var):
                    new[t] += k
                else:
                    c = c * t**k
            if c:
                key = tuple(new)
                terms[key] = terms.get(key, 0) + c
        return SparsePolynomial(m, terms)

    def face(self, indices: Iterable[int]) -> "SparsePolynomial":
        """Sub-polynomial keeping the terms at the given positions (grlex order)."""
        items = list(self._terms.items())
        return SparsePolynomial(self.num_vars, dict(items[i] for i in indices))

    # -- serialization --------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "num_vars": self.num_vars,
            "terms": [{"exp": list(e), "coef": _coef_to_json(c)} for e, c in self._terms.items()],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: Mapping) -> "SparsePolynomial":
        try:
            n = int(data["num_vars"])
            terms: dict[Exponent, Real] = {}
            for t in data["terms"]:
                e = tuple(int(k) for k in t["exp"])
                terms[e] = terms.get(e, 0) + _coef_from_json(t["coef"])
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed polynomial JSON: {exc}") from exc
        return cls(n, terms)

    @classmethod
    def from_json(cls, text: str) -> "SparsePolynomial":
        return cls.from_dict(json.loads(text))


def _coef_to_json(c):
    if isinstance(c, Fraction):
        return str(c) if c.denominator != 1 else c.numerator
    if isinstance(c, int):
        return c
    return float(c)


def _coef_from_json(c):
    if isinstance(c, str):
        return Fraction(c)
    if isinstance(c, bool) or not isinstance(c, (int, float)):
        raise ValueError(f"bad coefficient {c!r}")
    return c


def product(factors: Iterable[SparsePolynomial], num_vars: int | None = None) -> SparsePolynomial:
    factors = list(factors)
    if not factors:
        if num_vars is None:
            raise ValueError("empty product needs num_vars")
        return SparsePolynomial.constant(num_vars, 1)
    out = factors[0]
    for f in factors[1:]:
        out = out * f
    return out


# -- polarization ---------------------------------------------------------------


def polarize(p: SparsePolynomial) -> SparsePolynomial:
    """Multiaffine polarization.

    Variable ``i`` is replaced by a block of ``deg_i(p)`` new variables (blocks
    are laid out consecutively) and ``x_i**k`` becomes the k-th elementary
    symmetric polynomial of the block divided by ``binom(deg_i, k)``.
    """
    degs = p.degrees()
    offsets = np.concatenate([[0], np.cumsum(degs)]).astype(int)
    total = int(offsets[-1])
    exact = p.is_exact()
    terms: dict[Exponent, Real] = {}
    for exp, coef in p:
        per_var_choices = []
        for i, k in enumerate(exp):
            per_var_choices.append(list(itertools.combinations(range(offsets[i], offsets[i + 1]), k)))
        scale = 1
        for i, k in enumerate(exp):
            scale *= math.comb(degs[i], k)
        c = Fraction(coef) / scale if exact else coef / scale
        for combo in itertools.product(*per_var_choices):
            e = [0] * total
            for block in combo:
                for j in block:
                    e[j] = 1
            terms[tuple(e)] = c
    return SparsePolynomial(total, terms)


def polarization_blocks(p: SparsePolynomial) -> list[list[int]]:
    """Indices of the polarized variables belonging to each original variable."""
    out, start = [], 0
    for k in p.degrees():
        out.append(list(range(start, start + k)))
        start += k
    return out


def collapse(q: SparsePolynomial, blocks: Sequence[Sequence[int]]) -> SparsePolynomial:
    """Inverse of :func:`polarize`: identify every variable in a block."""
    mapping = {j: Var(i) for i, block in enumerate(blocks) for j in block}
    if len(mapping) != q.num_vars:
        raise ValueError("blocks must cover every variable exactly once")
    if not mapping:
        return SparsePolynomial(len(blocks), {(0,) * len(blocks): q.coefficient(())})
    out = q.substitute(mapping)
    if out.num_vars < len(blocks):  # trailing variables of degree zero
        pad = len(blocks) - out.num_vars
        out = SparsePolynomial(len(blocks), {e + (0,) * pad: c for e, c in out})
    return out
