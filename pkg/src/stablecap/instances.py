"""Seeded random instances shared by the verification suites and the tests."""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from fractions import Fraction

import networkx as nx
import numpy as np

from .affine import RowStochasticMatrix, random_extreme_point
from .sr import GroupPartition, WeightedGraph


@dataclass(frozen=True)
class ChainInstance:
    seed: int
    kappa: tuple
    alpha: tuple
    matrix: RowStochasticMatrix


def random_chain_instance(seed: int, max_n: int = 5, max_d: int = 8) -> ChainInstance:
    """A vertex ``M`` of the polytope for some ``alpha`` within l1 distance 1 of an integer ``kappa``."""
    rng = random.Random(seed)
    n = rng.randint(1, max_n)
    d = rng.randint(max(1, n // 2), max_d)
    while True:
        kappa = [rng.randint(0, 2) for _ in range(n)]
        if sum(kappa) <= d:
            break
    radius = rng.uniform(0.0, 0.98)
    # deviation with exact rational entries so the vertex computation stays exact
    weights = [rng.random() for _ in range(n)]
    total = sum(weights) or 1.0
    dev = []
    for j in range(n):
        sign = 1 if (kappa[j] == 0 or rng.random() < 0.5) else -1
        dev.append(Fraction(round(radius * weights[j] / total * 10**6), 10**6) * sign)
    pos = sum(x for x in dev if x > 0)
    room = (d - sum(kappa)) + sum(-x for x in dev if x < 0)
    if pos > room:
        # shrink the positive part so that |alpha|_1 <= d
        dev = [x * room / pos if x > 0 else x for x in dev]
    alpha = [Fraction(k) + x for k, x in zip(kappa, dev)]
    M = random_extreme_point(n, d, alpha, seed)
    return ChainInstance(seed, tuple(kappa), tuple(alpha), M)


def random_row_stochastic(rng: np.random.Generator, d: int, n: int, sparsity: float = 0.0) -> RowStochasticMatrix:
    A = rng.random((d, n + 1))
    if sparsity:
        A[rng.random((d, n + 1)) < sparsity] = 0.0
        empty = A.sum(axis=1) == 0
        A[empty, rng.integers(0, n + 1, size=int(empty.sum()))] = 1.0
    return RowStochasticMatrix(A / A.sum(axis=1, keepdims=True))


def connected_graphs(max_vertices: int) -> list[nx.Graph]:
    """Connected graphs from the atlas with 2..max_vertices vertices (atlas covers up to 7)."""
    return [g for g in nx.graph_atlas_g() if 2 <= g.number_of_nodes() <= max_vertices and nx.is_connected(g)]


def graph_corpus(seed: int = 0, small_max: int = 5, extra_six: int = 40) -> list[WeightedGraph]:
    """All connected atlas graphs on at most ``small_max`` vertices with unit and with random
    weights, plus a seeded sample of six-vertex graphs with random weights."""
    rng = random.Random(seed)
    out = []
    for g in connected_graphs(small_max):
        edges = sorted(tuple(sorted(e)) for e in g.edges())
        out.append(WeightedGraph(g.number_of_nodes(), tuple((u, w, 1.0) for u, w in edges)))
        out.append(WeightedGraph(g.number_of_nodes(),
                                 tuple((u, w, round(rng.uniform(0.2, 3.0), 6)) for u, w in edges)))
    six = [g for g in connected_graphs(6) if g.number_of_nodes() == 6]
    for g in rng.sample(six, min(extra_six, len(six))):
        edges = sorted(tuple(sorted(e)) for e in g.edges())
        out.append(WeightedGraph(6, tuple((u, w, round(rng.uniform(0.2, 3.0), 6)) for u, w in edges)))
    return out


def groupings(m: int, max_groups: int = 3, limit: int | None = None, seed: int = 0) -> list[GroupPartition]:
    """Disjoint groupings of ``{0..m-1}`` into 1..max_groups nonempty groups (elements may be left out).

    Each element gets a label in ``0..max_groups`` (0 = unused); labellings are
    canonicalized so groups are ordered by smallest element. Exhaustive when the
    count is at most ``limit``, otherwise a seeded sample of ``limit``.
    """
    seen = set()
    out = []

    def canon(labels):
        groups = {}
        for i, lab in enumerate(labels):
            if lab:
                groups.setdefault(lab, []).append(i)
        return tuple(sorted(tuple(g) for g in groups.values()))

    total = (max_groups + 1) ** m
    if limit is None or total <= 4 * limit:
        for labels in itertools.product(range(max_groups + 1), repeat=m):
            key = canon(labels)
            if key and key not in seen:
                seen.add(key)
                out.append(key)
        if limit is not None and len(out) > limit:
            rng = random.Random(seed)
            out = sorted(rng.sample(out, limit))
    else:
        rng = random.Random(seed)
        while len(out) < limit:
            key = canon([rng.randint(0, max_groups) for _ in range(m)])
            if key and key not in seen:
                seen.add(key)
                out.append(key)
        out.sort()
    return [GroupPartition(g) for g in out]
