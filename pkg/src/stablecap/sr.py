"""Explicit strongly Rayleigh measures and probability lower bounds for counts."""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np

from .bernoulli import sum_distribution
from .bounds import (
    InvalidProfile,
    one_term_eps,
    profile_from_sums,
    two_term_bound,
)
from .capacity import gurvits_prefactor, kko_doubly_exp_bound
from .poly import SparsePolynomial

TREE_LIMIT = 1_000_000
MAX_GROUPS = 20
PROFILE_TOL = 1e-12


class NotStronglyRayleigh(ValueError):
    pass


# -- graphs ------------------------------------------------------------------------


@dataclass(frozen=True)
class WeightedGraph:
    num_vertices: int
    edges: tuple  # ((u, w, weight), ...); edge index = position

    def __post_init__(self):
        clean = []
        for e in self.edges:
            u, w, *rest = e
            weight = rest[0] if rest else 1.0
            u, w = int(u), int(w)
            if not (0 <= u < self.num_vertices and 0 <= w < self.num_vertices):
                raise ValueError(f"edge ({u}, {w}) has an endpoint outside 0..{self.num_vertices - 1}")
            if u == w:
                raise ValueError(f"self-loop at vertex {u}")
            if not weight > 0:
                raise ValueError(f"edge ({u}, {w}) has nonpositive weight {weight}")
            clean.append((u, w, weight))
        object.__setattr__(self, "edges", tuple(clean))

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def is_connected(self) -> bool:
        if self.num_vertices <= 1:
            return True
        adj = {v: [] for v in range(self.num_vertices)}
        for u, w, _ in self.edges:
            adj[u].append(w)
            adj[w].append(u)
        seen, stack = {0}, [0]
        while stack:
            for nb in adj[stack.pop()]:
                if nb not in seen:
                    seen.add(nb)
                    stack.append(nb)
        return len(seen) == self.num_vertices

    def laplacian(self, weighted: bool = True) -> np.ndarray:
        L = np.zeros((self.num_vertices, self.num_vertices))
        for u, w, wt in self.edges:
            x = float(wt) if weighted else 1.0
            L[u, u] += x
            L[w, w] += x
            L[u, w] -= x
            L[w, u] -= x
        return L

    def tree_count(self) -> int:
        """Number of spanning trees by the matrix-tree theorem."""
        if self.num_vertices <= 1:
            return 1
        return int(round(np.linalg.det(self.laplacian(weighted=False)[1:, 1:])))

    def to_dict(self) -> dict:
        return {"vertices": self.num_vertices, "edges": [[u, w, _num_json(x)] for u, w, x in self.edges]}

    @classmethod
    def from_dict(cls, data) -> "WeightedGraph":
        try:
            return cls(int(data["vertices"]), tuple(tuple(e) for e in data["edges"]))
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed graph record: {exc}") from None


def _num_json(x):
    return f"{x.numerator}/{x.denominator}" if isinstance(x, Fraction) else x


def _num_from_json(x):
    if isinstance(x, str):
        return Fraction(x)
    return x


# -- measures ------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Probability on subsets of ``{0..m-1}``; sets are bitmasks."""

    ground_size: int
    support: dict  # mask -> probability

    def __post_init__(self):
        clean = {}
        for mask, prob in self.support.items():
            mask = int(mask)
            if mask < 0 or mask >> self.ground_size:
                raise ValueError(f"set {mask:b} is outside the ground set of size {self.ground_size}")
            if prob < 0:
                raise ValueError("negative probability")
            if prob:
                clean[mask] = clean.get(mask, 0) + prob
        total = sum(clean.values())
        if abs(float(total) - 1.0) > 1e-12:
            raise ValueError(f"probabilities sum to {float(total):.15g}")
        object.__setattr__(self, "support", dict(sorted(clean.items())))

    @classmethod
    def from_weights(cls, ground_size: int, weights: dict) -> "DiscreteMeasure":
        total = sum(weights.values())
        if total <= 0:
            raise ValueError("weights must have positive total")
        return cls(ground_size, {m: w / total for m, w in weights.items()})

    @classmethod
    def from_sets(cls, ground_size: int, items: Iterable[tuple[Iterable[int], float]]) -> "DiscreteMeasure":
        support = {}
        for s, p in items:
            mask = _mask(s)
            support[mask] = support.get(mask, 0) + p
        return cls(ground_size, support)

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        masks = np.fromiter(self.support.keys(), dtype=object, count=len(self.support))
        probs = np.array([float(p) for p in self.support.values()])
        return masks, probs

    def indicator_matrix(self) -> np.ndarray:
        """Rows are support sets, columns ground elements."""
        out = np.zeros((len(self.support), self.ground_size), dtype=bool)
        for r, mask in enumerate(self.support):
            for i in range(self.ground_size):
                if mask >> i & 1:
                    out[r, i] = True
        return out

    def to_dict(self) -> dict:
        return {
            "ground_size": self.ground_size,
            "support": [{"set": _members(m), "prob": _num_json(p)} for m, p in self.support.items()],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data) -> "DiscreteMeasure":
        try:
            m = int(data["ground_size"])
            items = [(entry["set"], _num_from_json(entry["prob"])) for entry in data["support"]]
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed measure record: {exc}") from None
        return cls.from_sets(m, items)


def _mask(items: Iterable[int]) -> int:
    mask = 0
    for i in items:
        if mask >> int(i) & 1:
            raise ValueError(f"element {i} repeated")
        mask |= 1 << int(i)
    return mask


def _members(mask: int) -> list[int]:
    return [i for i in range(mask.bit_length()) if mask >> i & 1]


@dataclass(frozen=True)
class GroupPartition:
    groups: tuple

    def __post_init__(self):
        groups = tuple(tuple(sorted(int(i) for i in g)) for g in self.groups)
        seen = set()
        for k, g in enumerate(groups):
            for i in g:
                if i < 0:
                    raise ValueError(f"group {k} contains negative index {i}")
                if i in seen:
                    raise ValueError(f"element {i} appears in more than one group")
                seen.add(i)
        object.__setattr__(self, "groups", groups)

    @property
    def n(self) -> int:
        return len(self.groups)

    def masks(self) -> list[int]:
        return [_mask(g) for g in self.groups]

    def check_ground(self, m: int) -> None:
        for k, g in enumerate(self.groups):
            if g and g[-1] >= m:
                raise ValueError(f"group {k} has element {g[-1]} outside the ground set of size {m}")

    def to_dict(self) -> dict:
        return {"groups": [list(g) for g in self.groups]}

    @classmethod
    def from_dict(cls, data) -> "GroupPartition":
        try:
            return cls(tuple(tuple(g) for g in data["groups"]))
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed grouping record: {exc}") from None


# -- constructions ---------------------------------------------------------------------


def spanning_trees(G: WeightedGraph, limit: int = TREE_LIMIT) -> list[int]:
    """Edge masks of all spanning trees, by include/exclude search with union-find."""
    V, E = G.num_vertices, G.num_edges
    need = V - 1
    out: list[int] = []

    def find(parent, a):
        while parent[a] != a:
            a = parent[a]
        return a

    def rec(e, parent, chosen, mask):
        if chosen == need:
            out.append(mask)
            if len(out) > limit:
                raise ValueError(f"more than {limit} spanning trees")
            return
        if E - e < need - chosen:
            return
        u, w, _ = G.edges[e]
        a, b = find(parent, u), find(parent, w)
        if a != b:
            parent[a] = b
            rec(e + 1, parent, chosen + 1, mask | (1 << e))
            parent[a] = a
        rec(e + 1, parent, chosen, mask)

    rec(0, list(range(V)), 0, 0)
    return out


def spanning_tree_measure(G: WeightedGraph, limit: int = TREE_LIMIT) -> DiscreteMeasure:
    """``mu(T)`` proportional to the product of edge weights over spanning trees ``T``."""
    if not G.is_connected():
        raise ValueError("graph is disconnected")
    expected = G.tree_count()
    if expected > limit:
        raise ValueError(f"{expected} spanning trees exceed the limit {limit}")
    trees = spanning_trees(G, limit)
    if len(trees) != expected:
        raise RuntimeError(f"enumerated {len(trees)} trees, matrix-tree theorem gives {expected}")
    weights = {}
    for mask in trees:
        w = 1
        for i in _members(mask):
            w = w * G.edges[i][2]
        weights[mask] = w
    return DiscreteMeasure.from_weights(G.num_edges, weights)


def generating_polynomial(mu: DiscreteMeasure) -> SparsePolynomial:
    """``g(z) = sum_S mu(S) z^S`` in ``m`` variables."""
    m = mu.ground_size
    return SparsePolynomial(m, {tuple((mask >> i) & 1 for i in range(m)): p for mask, p in mu.support.items()})


def measure_from_polynomial(p: SparsePolynomial) -> DiscreteMeasure:
    """Measure whose generating polynomial is the multiaffine ``p`` (normalized to ``p(1) = 1``)."""
    weights = {}
    for e, c in p.terms.items():
        if any(x > 1 for x in e):
            raise ValueError("polynomial is not multiaffine")
        weights[_mask(i for i, x in enumerate(e) if x)] = c
    return DiscreteMeasure.from_weights(p.num_vars, weights)


def _counts(mu: DiscreteMeasure, P: GroupPartition) -> tuple[np.ndarray, list]:
    P.check_ground(mu.ground_size)
    gm = P.masks()
    probs = list(mu.support.values())
    C = np.array([[bin(mask & g).count("1") for g in gm] for mask in mu.support], dtype=np.int64)
    return C.reshape(len(probs), P.n), probs


def group_polynomial(mu: DiscreteMeasure, P: GroupPartition) -> SparsePolynomial:
    """Generating polynomial with each group's variables set to one shared variable, others to 1."""
    C, probs = _counts(mu, P)
    terms: dict = {}
    for row, p in zip(C, probs):
        key = tuple(int(v) for v in row)
        terms[key] = terms.get(key, 0) + p
    return SparsePolynomial(P.n, terms)


def expectations(mu: DiscreteMeasure, P: GroupPartition) -> list:
    C, probs = _counts(mu, P)
    return [sum((int(C[r, i]) * p for r, p in enumerate(probs)), 0 * probs[0]) for i in range(P.n)]


def exact_joint_probability(mu: DiscreteMeasure, P: GroupPartition, kappa: Sequence[int]):
    if len(kappa) != P.n:
        raise ValueError(f"kappa has length {len(kappa)}, grouping has {P.n} groups")
    C, probs = _counts(mu, P)
    target = np.asarray(kappa, dtype=np.int64)
    hit = np.all(C == target[None, :], axis=1)
    return sum((p for p, h in zip(probs, hit) if h), 0 * probs[0])


def condition(mu: DiscreteMeasure, event: Callable[[int], bool]) -> DiscreteMeasure:
    """Restrict to sets satisfying ``event(mask)`` and renormalize."""
    kept = {m: p for m, p in mu.support.items() if event(m)}
    if not kept:
        raise ValueError("conditioning event has probability zero")
    return DiscreteMeasure.from_weights(mu.ground_size, kept)


def condition_on_count(mu: DiscreteMeasure, elements: Iterable[int], value: int) -> DiscreteMeasure:
    mask = _mask(elements)
    return condition(mu, lambda s: bin(s & mask).count("1") == value)


# -- bounds ----------------------------------------------------------------------------


def _subset_sums(values: Sequence) -> tuple[list, list]:
    """For each ``k``, max and min of ``sum_S values`` over ``|S| = k`` (by sorting)."""
    top = sorted(values, reverse=True)
    bot = sorted(values)
    mx, mn, a, b = [], [], 0, 0
    for k in range(len(values)):
        a, b = a + top[k], b + bot[k]
        mx.append(a)
        mn.append(b)
    return mx, mn


def headline_prefactor(kappa: Sequence[int]) -> float:
    return math.exp(sum(-1 - 0.5 * math.log(k) for k in kappa if k > 0))


def kko_epsilon(mu: DiscreteMeasure, P: GroupPartition, kappa: Sequence[int]) -> float:
    """``min_S min(P[A_S >= kappa_S], P[A_S <= kappa_S])`` over nonempty ``S``, exactly."""
    n = P.n
    if n > MAX_GROUPS:
        raise ValueError(f"at most {MAX_GROUPS} groups supported")
    C, probs = _counts(mu, P)
    probs = np.array([float(p) for p in probs])
    kap = np.asarray(kappa, dtype=np.int64)
    best = 1.0
    for r in range(1, n + 1):
        for S in itertools.combinations(range(n), r):
            a = C[:, S].sum(axis=1)
            ks = kap[list(S)].sum()
            best = min(best, float(probs[a >= ks].sum()), float(probs[a <= ks].sum()))
    return best


@dataclass(frozen=True)
class ProbabilityBounds:
    strong: float
    lite: float
    headline: float
    headline_eps: float
    baseline: float | None
    exact: float | None
    profile: dict

    def as_report(self) -> dict:
        return {
            "exact": self.exact,
            "strong": self.strong,
            "lite": self.lite,
            "headline": self.headline,
            "headline_eps": self.headline_eps,
            "baseline_kko": self.baseline,
            "profile": self.profile,
        }


def sr_probability_bound(E: Sequence, kappa: Sequence[int], exact: float | None = None,
                         baseline_eps: float | None = None, baseline_total: float = 1.0) -> ProbabilityBounds:
    """Lower bounds on ``P[A = kappa]`` from the expectations ``E[A_i]``.

    ``strong`` is the prefactor times the two-term bound, ``lite`` the prefactor
    times the one-term product, ``headline`` is ``eps^n prod_{k_i>0} 1/(e sqrt k_i)``
    with ``eps = 1 - max_S |E[A_S] - kappa_S|``. The prior doubly exponential
    bound is evaluated at ``baseline_eps`` (default: the headline ``eps``)
    times ``baseline_total``, an estimate of ``P[A_[n] = kappa_[n]]``.
    """
    kappa = [int(k) for k in kappa]
    if len(E) != len(kappa):
        raise ValueError(f"E has length {len(E)}, kappa has {len(kappa)}")
    n = len(kappa)
    if n > MAX_GROUPS:
        raise ValueError(f"at most {MAX_GROUPS} groups supported")
    dev = [float(e) - k for e, k in zip(E, kappa)]
    mx, mn = _subset_sums(dev)
    prof = profile_from_sums(mx, mn)
    bad = prof.first_failure()
    if bad is not None:
        raise InvalidProfile(*bad)
    # float expectations of deterministic counts land a rounding error away from 0
    for which, vals in (("eps", prof.eps), ("delta", prof.delta)):
        for k, v in enumerate(vals, 1):
            if v <= PROFILE_TOL:
                raise InvalidProfile(which, k, v)
    pre = gurvits_prefactor(kappa)
    strong = pre * float(two_term_bound(prof))
    lite_eps = one_term_eps([float(e) for e in E], kappa)
    lite = pre * math.prod(lite_eps)
    eps = float(min(min(prof.eps), min(prof.delta)))
    headline = eps**n * headline_prefactor(kappa)
    beps = eps if baseline_eps is None else baseline_eps
    baseline = kko_doubly_exp_bound(beps, kappa) * float(baseline_total)
    return ProbabilityBounds(strong, lite, headline, eps, baseline, exact, prof.to_dict())


def measure_probability_bounds(mu: DiscreteMeasure, P: GroupPartition, kappa: Sequence[int]) -> ProbabilityBounds:
    """All bounds for an explicit measure, with the exact value and the prior baseline filled in."""
    E = expectations(mu, P)
    exact = float(exact_joint_probability(mu, P, kappa))
    C, probs = _counts(mu, P)
    total = float(sum(p for row, p in zip(C, probs) if int(row.sum()) == sum(kappa)))
    return sr_probability_bound(E, kappa, exact, kko_epsilon(mu, P, kappa), total)


# -- univariate rank sequences -----------------------------------------------------------


def rank_distribution(mu: DiscreteMeasure, F: Iterable[int]) -> list:
    """``P[|F cap T| = k]`` for ``k = 0..|F|``."""
    F = list(F)
    mask = _mask(F)
    out = [0] * (len(F) + 1)
    for s, p in mu.support.items():
        out[bin(s & mask).count("1")] += p
    return out


def _polish(coefs_low: np.ndarray, x: float, order: int = 0) -> float:
    """Newton refinement of a root of the ``order``-th derivative (simple there for a root of that multiplicity)."""
    f = np.polynomial.polynomial.Polynomial(coefs_low).deriv(order) if order else np.polynomial.polynomial.Polynomial(coefs_low)
    df = f.deriv()
    for _ in range(20):
        d = df(x)
        if d == 0:
            break
        x_new = x - f(x) / d
        if not np.isfinite(x_new):
            break
        if abs(f(x_new)) >= abs(f(x)):
            break
        x = x_new
    return x


def _clustered_roots(core: np.ndarray, roots: np.ndarray, rel: float = 1e-3) -> list[float]:
    """Real parts of ``roots`` with near-coincident roots merged into one root of higher multiplicity."""
    order = np.argsort(roots.real)
    clusters: list[list[complex]] = []
    for r in roots[order]:
        if clusters and abs(r - np.mean(clusters[-1])) <= rel * (1.0 + abs(r)):
            clusters[-1].append(r)
        else:
            clusters.append([r])
    out = []
    for c in clusters:
        x = _polish(core, float(np.mean(c).real), order=len(c) - 1)
        out.extend([x] * len(c))
    return out


def _reconstruct(params: list[float], size: int) -> np.ndarray:
    out = np.zeros(size)
    sd = sum_distribution(params)
    out[: len(sd)] = sd
    return out


def bernoulli_decomposition(mu: DiscreteMeasure, F: Iterable[int], imag_tol: float = 1e-8,
                            roundtrip_tol: float = 1e-9) -> list[float]:
    """Parameters ``p_i`` with ``sum_i Bernoulli(p_i)`` distributed as ``|F cap T|``.

    Roots ``-r_i`` of the rank polynomial give ``p_i = 1/(1 + r_i)``. Repeated
    roots split off the real axis by about the square root (or cube root) of
    machine precision, so two root sets are tried: each root polished on its
    own, and near-coincident roots merged and refined on the derivative where
    they are simple. The one with the better round trip is kept, and it is
    rejected only if that round trip fails.
    """
    dist = np.array([float(v) for v in rank_distribution(mu, F)])
    nz = np.nonzero(dist > 0)[0]
    lo, hi = int(nz[0]), int(nz[-1])
    params = [1.0] * lo
    core = dist[lo : hi + 1]
    if len(core) > 1:
        roots = np.roots(core[::-1])
        scale = 1.0 + np.abs(roots)
        best = None
        for real in (np.array([_polish(core, r) for r in np.sort(roots.real)]),
                     np.array(_clustered_roots(core, roots))):
            if np.any(real > imag_tol * scale.max()):
                continue
            cand = params + [float(1.0 / (1.0 + x)) for x in np.clip(-real, 0.0, None)]
            err = float(np.abs(_reconstruct(cand, len(dist)) - dist).max())
            if best is None or err < best[0]:
                best = (err, cand)
        if best is None:
            raise NotStronglyRayleigh(f"rank polynomial has a positive root {roots.real.max():.3g}")
        if best[0] > roundtrip_tol:
            raise NotStronglyRayleigh(
                f"rank polynomial is not real-rooted (max imaginary part {np.abs(roots.imag).max():.3g}, "
                f"reconstruction error {best[0]:.3g})"
            )
        params = best[1]
    params.sort(reverse=True)
    return params


def stability_falsifier(mu: DiscreteMeasure, trials: int = 200, seed: int = 0, tol: float = 1e-6):
    """Search for a line ``x + t v`` (``x`` real, ``v > 0``) on which ``g_mu`` has a nonreal root.

    Returns the offending ``(x, v)`` or ``None``. A polynomial is real stable
    iff every such restriction is real-rooted, so a hit disproves strong
    Rayleigh-ness; a miss is only evidence.
    """
    rng = np.random.default_rng(seed)
    ind = mu.indicator_matrix().astype(float)
    probs = np.array([float(p) for p in mu.support.values()])
    m = mu.ground_size
    deg = int(ind.sum(axis=1).max()) if len(probs) else 0
    if deg == 0:
        return None
    K = 2 * deg + 2
    t = np.exp(2j * np.pi * np.arange(K) / K)
    for _ in range(trials):
        x = rng.normal(size=m)
        v = rng.uniform(0.2, 1.0, size=m)
        Z = x[None, :] + t[:, None] * v[None, :]  # K x m
        vals = np.empty(K, dtype=complex)
        for k in range(K):
            vals[k] = probs @ np.prod(np.where(ind > 0, Z[k][None, :], 1.0), axis=1)
        coefs = np.fft.fft(vals) / K  # coefficient of t^j at index j
        c = coefs[: deg + 1].real
        c = np.trim_zeros(c[::-1], "f")
        if len(c) <= 1:
            continue
        roots = np.roots(c)
        # random x makes repeated roots, which split numerically, a null event
        if np.any(np.abs(roots.imag) > tol * (1.0 + np.abs(roots))):
            return x, v
    return None
