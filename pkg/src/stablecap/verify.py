"""Randomized invariant suites behind ``stablecap verify``.

Every work item derives its own seed from the suite seed and its index, owns
its state, and returns ``{check: passed}``. Items may run in a process pool;
results are sorted before they are reported, so output does not depend on
scheduling.
"""

from __future__ import annotations

import math
import random
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction

import networkx as nx
import numpy as np

from . import tsp_audit
from .affine import (
    RowStochasticMatrix,
    associated_polynomial,
    delta_tight_matrix,
    is_extreme,
    left_leaf_count,
    peel_leaf_column,
    random_extreme_point,
    restrict_zero_column,
    drop_coordinate,
)
from .bounds import (
    InvalidProfile,
    coefficient_bound,
    one_term_bound,
    profile_from,
    simple_bound,
    tightness_witness,
    two_term_bound,
)
from .capacity import capacity_value
from .instances import graph_corpus, groupings, random_chain_instance, random_row_stochastic
from .permanent import min_per_columns, min_per_exact, min_per_matrix, min_per_scan, permanent, permanent_naive
from .sr import (
    NotStronglyRayleigh,
    bernoulli_decomposition,
    expectations,
    measure_probability_bounds,
    rank_distribution,
    spanning_tree_measure,
)
from .bernoulli import sum_distribution

SUITES = ("bounds", "forest", "sr", "permanent", "tsp")
DEFAULT_COUNT = {"bounds": 100, "forest": 100, "sr": 20, "permanent": 20, "tsp": 1}
SLACK = 1e-8


def item_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, index]).generate_state(1, dtype=np.uint64)[0] % (2**63))


# -- bounds ---------------------------------------------------------------------------------


def bounds_item(s: int) -> dict:
    out = {}
    inst = random_chain_instance(s)
    p = associated_polynomial(inst.matrix)
    alpha = [float(a) for a in inst.alpha]
    cap = capacity_value(p, inst.kappa)
    two = float(two_term_bound(profile_from(inst.alpha, inst.kappa)))
    one = float(one_term_bound(inst.alpha, inst.kappa))
    simple = float(simple_bound(inst.alpha, inst.kappa))
    out["chain"] = cap + 1e-7 >= two >= one - 1e-12 and one >= simple - 1e-12 and simple >= 0
    coef = float(p.coefficient(inst.kappa))
    out["coefficient"] = coef >= coefficient_bound(alpha, inst.kappa, via="two_term") * (1 - 1e-9) - 1e-12

    rng = random.Random(s)
    n = rng.randint(1, 4)
    kappa = [rng.randint(1, 3) for _ in range(n)]
    w = [rng.random() for _ in range(n)]
    r = rng.uniform(0, 0.95)
    dev = [r * x / sum(w) for x in w]
    a = [k - x for k, x in zip(kappa, dev)]
    M = delta_tight_matrix(kappa, a)
    out["delta_tight"] = abs(capacity_value(associated_polynomial(M), kappa) - float(two_term_bound(profile_from(a, kappa)))) <= 1e-8

    eps = Fraction(rng.randint(1, 99), 100)
    n = rng.randint(1, 3)
    kappa = [rng.randint(1, 3) for _ in range(n)]
    q = tightness_witness(kappa, eps)
    out["tightness"] = (abs(capacity_value(q, kappa) - float(eps) ** n) <= 1e-7
                        and q.coefficient(kappa) == eps**n)
    return out


# -- forest ---------------------------------------------------------------------------------


def _support_graph(M: RowStochasticMatrix) -> nx.Graph:
    G = nx.Graph()
    G.add_nodes_from(("r", i) for i in range(M.d))
    G.add_nodes_from(("c", j) for j in range(M.n + 1))
    S = M.support()
    G.add_edges_from((("r", i), ("c", j)) for i, j in zip(*np.nonzero(S)))
    return G


def forest_item(s: int) -> dict:
    out = {}
    rng = np.random.default_rng(s)
    d, n = int(rng.integers(1, 7)), int(rng.integers(1, 5))
    samples = [random_row_stochastic(rng, d, n), random_row_stochastic(rng, d, n, sparsity=0.6)]
    alpha = rng.dirichlet(np.ones(n + 1)) * d
    V = random_extreme_point(n, d, alpha[:n], s)
    samples.append(V)
    out["extreme_matches_cycle_oracle"] = all(is_extreme(M) == nx.is_forest(_support_graph(M)) for M in samples)
    out["vertex_is_extreme"] = is_extreme(V)
    if np.all(V.support().sum(axis=0) > 0):
        out["left_leaves"] = left_leaf_count(V) >= d - (n + 1) + 1
    p = associated_polynomial(samples[1])
    grad = np.array([float(g) for g in p.gradient_at_one()])
    out["normalization"] = (abs(float(p.sum_of_coefficients()) - 1) <= 1e-10
                            and np.allclose(grad, samples[1].alpha, atol=1e-10))

    inst = random_chain_instance(s, max_n=3, max_d=5)
    A = inst.matrix
    B = random_extreme_point(A.n, A.d, inst.alpha, s + 1)
    caps = [capacity_value(associated_polynomial(X), inst.kappa)
            for X in (A, B, RowStochasticMatrix((A.rows + B.rows) / 2))]
    out["log_concavity"] = caps[2] >= math.sqrt(caps[0] * caps[1]) - SLACK

    inst = random_chain_instance(s + 7, max_n=4, max_d=6)
    M, kappa = inst.matrix, list(inst.kappa)
    zero_cols = [j for j in range(M.n) if kappa[j] == 0 and inst.alpha[j] < 1]
    if zero_cols and M.n >= 2:
        j = zero_cols[0]
        M2, factor = restrict_zero_column(M, j, kappa)
        lhs = capacity_value(associated_polynomial(M), kappa)
        rhs = factor * capacity_value(associated_polynomial(M2), drop_coordinate(kappa, j))
        out["restrict_zero_column"] = lhs >= rhs - SLACK and factor >= 1 - float(inst.alpha[j]) - 1e-12
    leaf_cols = [j for j in range(M.n) if M.support()[:, j].sum() == 1]
    if leaf_cols and M.n >= 2 and M.d >= 2:
        j = leaf_cols[0]
        kappa[j] = 1
        M2, factor = peel_leaf_column(M, j, kappa)
        lhs = capacity_value(associated_polynomial(M), kappa)
        rhs = factor * capacity_value(associated_polynomial(M2), drop_coordinate(kappa, j))
        out["peel_leaf_column"] = lhs >= rhs - SLACK
    return out


# -- strongly Rayleigh ----------------------------------------------------------------------


def valid_kappas(E, sizes):
    """Integer vectors within distance < 1 of ``E`` coordinatewise (candidates; profile checked later)."""
    ranges = [sorted({k for k in (math.floor(e), math.ceil(e)) if 0 <= k <= m}) for e, m in zip(E, sizes)]
    out = [()]
    for r in ranges:
        out = [k + (v,) for k in out for v in r]
    return out


def sr_graph_checks(G, seed: int, grouping_limit: int | None = 60) -> dict:
    """All bound and decomposition checks for one graph; counts, not booleans."""
    mu = spanning_tree_measure(G)
    m = G.num_edges
    res = {"instances": 0, "violations": 0, "beats_baseline": 0, "multi_group": 0,
           "decompositions": 0, "decomposition_failures": 0}
    for P in groupings(m, 3, limit=grouping_limit, seed=seed):
        E = expectations(mu, P)
        for kappa in valid_kappas(E, [len(g) for g in P.groups]):
            try:
                b = measure_probability_bounds(mu, P, kappa)
            except InvalidProfile:
                continue
            res["instances"] += 1
            if not (b.exact >= b.strong * (1 - 1e-9) - 1e-12 and b.strong >= b.lite * (1 - 1e-9) - 1e-15):
                res["violations"] += 1
            if P.n >= 2:
                res["multi_group"] += 1
                if b.strong > (b.baseline or 0.0):
                    res["beats_baseline"] += 1
    rng = random.Random(seed)
    subsets = [list(range(m))] + [sorted(rng.sample(range(m), rng.randint(1, m))) for _ in range(10)]
    for F in subsets:
        res["decompositions"] += 1
        try:
            params = bernoulli_decomposition(mu, F)
        except NotStronglyRayleigh:
            res["decomposition_failures"] += 1
            continue
        target = np.array([float(v) for v in rank_distribution(mu, F)])
        got = np.zeros(len(target))
        sd = sum_distribution(params)
        got[: len(sd)] = sd
        if np.abs(got - target).max() > 1e-9:
            res["decomposition_failures"] += 1
    return res


def sr_item(s: int) -> dict:
    corpus = graph_corpus(seed=0)
    G = corpus[s % len(corpus)]
    mu = spanning_tree_measure(G)
    res = sr_graph_checks(G, s, grouping_limit=20)
    return {
        "tree_count_matches_matrix_tree": len(mu.support) == G.tree_count(),
        "exact_above_strong_above_lite": res["violations"] == 0,
        "bernoulli_round_trip": res["decomposition_failures"] == 0,
    }


# -- permanent ------------------------------------------------------------------------------


def permanent_item(s: int) -> dict:
    rng = np.random.default_rng(s)
    n = int(rng.integers(1, 7))
    A = rng.random((n, n))
    out = {"ryser_matches_naive": math.isclose(permanent(A), permanent_naive(A), rel_tol=1e-10)}
    # Sinkhorn-balanced matrix: van der Waerden lower bound n!/n^n
    X = A + 0.05
    for _ in range(500):
        X /= X.sum(axis=1, keepdims=True)
        X /= X.sum(axis=0, keepdims=True)
    out["van_der_waerden"] = permanent(X) >= math.factorial(n) / n**n * (1 - 1e-9)
    # float Ryser loses relative accuracy on these tiny permanents, so compare exactly
    k = int(rng.integers(3, 9))
    eps = Fraction(1, k * k)
    sparse, rank = min_per_exact(k, 1)
    c = min_per_columns(k, eps)
    flat = [[x / (k + 1) for x in c] for _ in range(k + 1)]
    out["min_per_closed_form"] = (permanent(min_per_matrix(k, eps), exact=True) == sparse
                                  and permanent(flat, exact=True) == rank)
    if s % 5 == 0:
        J = [[Fraction(1, n)] * n for _ in range(n)]
        out["uniform_exact"] = permanent(J, exact=True) == Fraction(math.factorial(n), n**n)
    return out


def permanent_summary() -> dict:
    scan = min_per_scan(1.0, 60)
    return {"min_per_threshold": scan["threshold"], "scan_found_threshold": scan["threshold"] is not None}


# -- tsp ------------------------------------------------------------------------------------


def tsp_item(s: int) -> dict:
    audit = tsp_audit.appendix_bound_audit()
    consts = tsp_audit.lemma_constants()
    grid_ok = True
    for i in range(1001):
        x = i / 1000
        for case in ("above_half", "below_half"):
            if (case == "above_half") != (x >= 0.5) and x != 0.5:
                continue
            b = tsp_audit.vertex_pair_bound(x, case)
            grid_ok &= abs(b.strong - b.closed_form) <= 1e-15
    return {"audit_all_pass": bool(audit["all_pass"]), "minimum_p": consts["p"] == tsp_audit.D("1.5e-9"),
            "vertex_pair_closed_forms": bool(grid_ok)}


ITEMS = {"bounds": bounds_item, "forest": forest_item, "sr": sr_item, "permanent": permanent_item, "tsp": tsp_item}


def _run_item(args):
    suite, index, s = args
    try:
        checks = ITEMS[suite](s)
        error = None
    except Exception as exc:  # reported as a failure of this item, not a crash of the run
        checks, error = {}, f"{type(exc).__name__}: {exc}"
    return suite, index, s, checks, error


def run_suite(suite: str, seed: int = 0, count: int | None = None, jobs: int = 1) -> dict:
    """Run ``count`` items of one suite; returns a summary with failing seeds per check."""
    if suite not in ITEMS:
        raise ValueError(f"unknown suite {suite!r}")
    count = DEFAULT_COUNT[suite] if count is None else int(count)
    work = [(suite, i, item_seed(seed, i)) for i in range(count)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_item, work, chunksize=max(1, count // (4 * jobs))))
    else:
        results = [_run_item(w) for w in work]
    results.sort(key=lambda r: r[1])
    checks: dict[str, dict] = {}
    errors = []
    for _, index, s, res, error in results:
        if error is not None:
            errors.append({"index": index, "seed": s, "error": error})
        for name, ok in res.items():
            c = checks.setdefault(name, {"items": 0, "failing_seeds": []})
            c["items"] += 1
            if not ok:
                c["failing_seeds"].append(s)
    summary = {
        "suite": suite,
        "seed": seed,
        "count": count,
        "checks": {k: checks[k] for k in sorted(checks)},
        "errors": errors,
    }
    if suite == "permanent":
        summary.update(permanent_summary())
        if not summary["scan_found_threshold"]:
            errors.append({"index": -1, "seed": seed, "error": "min_per scan found no threshold"})
    if suite == "tsp":
        summary["p"] = str(tsp_audit.lemma_constants()["p"])
    summary["passed"] = not errors and all(not c["failing_seeds"] for c in checks.values())
    return summary


def run(suite: str = "all", seed: int = 0, count: int | None = None, jobs: int = 1) -> dict:
    names = SUITES if suite == "all" else (suite,)
    results = [run_suite(name, seed, count, jobs) for name in names]
    return {"seed": seed, "suites": results, "passed": all(r["passed"] for r in results)}
