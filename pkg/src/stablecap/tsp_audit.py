"""Arithmetic audit of the probability constants feeding the metric TSP approximation factor.

Everything here is decimal arithmetic on stated constants and expectation
intervals; the graph-theoretic inputs are taken as given.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from decimal import Decimal, localcontext
from fractions import Fraction
from itertools import combinations

from .bernoulli import extremal_bernoulli
from .bounds import profile_from, two_term_bound
from .capacity import gurvits_prefactor
from .poly import SparsePolynomial, product

D = Decimal
PREC = 50


def _exp(x) -> Decimal:
    with localcontext() as ctx:
        ctx.prec = PREC
        return D(x).exp()


@dataclass(frozen=True)
class TSPConstants:
    eps_half: str = "0.0002"
    eps_eta: str = "1e-10"
    p_threshold: str = "1e-4"

    def __post_init__(self):
        if self.half > D("0.0002"):
            raise ValueError("eps_half must be at most 0.0002")
        if self.eta > self.half**2:
            raise ValueError("eps_eta must be at most eps_half^2")
        if self.half <= 0 or self.eta < 0:
            raise ValueError("constants must be positive")

    @property
    def half(self) -> Decimal:
        return D(self.eps_half)

    @property
    def eleven(self) -> Decimal:
        with localcontext() as ctx:
            ctx.prec = PREC
            return self.half / 12

    @property
    def eta(self) -> Decimal:
        return D(self.eps_eta)


# -- vertex-pair bounds --------------------------------------------------------------------


@dataclass(frozen=True)
class VertexPairBound:
    x_e: float
    case: str
    strong: float
    closed_form: float
    kappa: tuple
    expectations: tuple


def vertex_pair_bound(x_e: float, case: str) -> VertexPairBound:
    """Bound on ``P[A = kappa]`` for ``E = (x_e, 2 - x_e, 2 - x_e)``.

    ``above_half`` uses ``kappa = (1, 1, 1)``, ``below_half`` uses ``(0, 2, 2)``.
    At ``x_e = 1/2`` the profile degenerates and the bound is 0.
    """
    if not 0 <= x_e <= 1:
        raise ValueError("x_e must lie in [0, 1]")
    E = (x_e, 2 - x_e, 2 - x_e)
    if case == "above_half":
        if x_e < 0.5:
            raise ValueError("above_half needs x_e >= 1/2")
        kappa = (1, 1, 1)
        closed = math.exp(-3) * x_e**2 * (2 * x_e - 1)
    elif case == "below_half":
        if x_e > 0.5:
            raise ValueError("below_half needs x_e <= 1/2")
        kappa = (0, 2, 2)
        closed = 4 * math.exp(-4) * (1 - x_e) ** 2 * (1 - 2 * x_e)
    else:
        raise ValueError(f"unknown case {case!r}")
    prof = profile_from(E, kappa)
    strong = gurvits_prefactor(kappa) * float(two_term_bound(prof)) if prof.valid else 0.0
    return VertexPairBound(x_e, case, strong, closed, kappa, E)


# -- the six constants and the final factor ------------------------------------------------


def lemma_constants(c: TSPConstants = TSPConstants()) -> dict:
    """The six probability lower bounds and their minimum ``p``."""
    e2 = c.half**2
    k = D("0.01") / c.half  # P[...] >= 0.01 >= k * eps_half
    items = [
        {"item": 1, "source": "prior bound, unchanged", "value": D("1.5e-9"), "assumed": False},
        {"item": 2, "source": "0.039 eps_half^2", "value": D("0.039") * e2, "assumed": False},
        {"item": 3, "source": "0.038 eps_half^2", "value": D("0.038") * e2, "assumed": False},
        {"item": 4, "source": "0.001 (min(100, k) - 0.2) eps_half^2", "value": D("0.001") * (min(D(100), k) - D("0.2")) * e2,
         "assumed": False},
        {"item": 5, "source": "0.0485 eps_half^2", "value": D("0.0485") * e2, "assumed": False},
        {"item": 6, "source": "stated to remain above 1.5e-9; proof not given", "value": D("1.5e-9"), "assumed": True},
    ]
    p = min(it["value"] for it in items)
    return {"items": items, "p": p}


@dataclass(frozen=True)
class ApproximationFactor:
    p: Decimal
    gap: Decimal  # 9.7e-17 p^2
    gap_from_eps_p: Decimal  # (1.56e-6 p)^2 / 25000
    gap_full: Decimal  # eps_P beta / 6 - eps_P eta / 100 with eta = eps_P / 750
    relative_disagreement: Decimal
    eta_branch_ok: bool

    @property
    def factor(self) -> Decimal:
        return D("1.5") - self.gap


def approximation_factor(p) -> ApproximationFactor:
    """``3/2 - 9.7e-17 p^2`` with the two forms it is derived from."""
    p = D(str(p))
    if p > D("1e-4"):
        raise ValueError("the approximation factor formula needs p <= 1e-4")
    if p < 0:
        raise ValueError("p must be nonnegative")
    with localcontext() as ctx:
        ctx.prec = PREC
        gap = D("9.7e-17") * p * p
        eps_p = D("1.56e-6") * p
        alt = eps_p * eps_p / 25000
        eta = min(D("1e-12"), eps_p / 750)
        beta = eta / (4 + 2 * eta)
        full = eps_p * beta / 6 - eps_p * eta / 100
        rel = abs(gap - alt) / alt if alt else D(0)
    return ApproximationFactor(p, gap, alt, full, rel, eps_p / 750 < D("1e-12"))


# -- bound chains for the bundle cases -----------------------------------------------------


def lite_eps_from_intervals(intervals: dict, n: int) -> list[Decimal]:
    """``eps_k = 1 - max_{|S|<=k} max|E_S - kappa_S|`` over interval-bounded deviations.

    ``intervals`` maps sorted index tuples to ``(lo, hi)`` bounds on ``E[A_S] - kappa_S``.
    """
    out = []
    worst = D(0)
    for k in range(1, n + 1):
        for S in combinations(range(n), k):
            lo, hi = intervals[S]
            worst = max(worst, abs(lo), abs(hi))
        out.append(1 - worst)
    return out


def _intervals_low_top_bundle(e: Decimal) -> dict:
    # variables A, B, V - 1 with kappa = (1, 1, 1)
    return {
        (0,): (D("-0.5"), D("0.5")),
        (1,): (D("-0.5"), D("0.5")),
        (2,): (D("-0.5"), D("0.01")),
        (0, 1): (D("-0.5"), D("0.01")),
        (0, 2): (-1 + D("1.8") * e, D("0.01")),
        (1, 2): (-1 + D("1.8") * e, D("0.01")),
        (0, 1, 2): (-1 + D("1.75") * e, D("-0.49")),
    }


def _intervals_high_top_bundle(e: Decimal) -> dict:
    return {
        (0,): (D("-0.5"), D("0.5")),
        (1,): (D("-0.5"), D("0.5")),
        (2,): (D("-0.005"), D("0.5")),
        (0, 1): (D("-0.005"), D("0.5")),
        (0, 2): (D("-0.01"), 1 - D("1.75") * e),
        (1, 2): (D("-0.01"), 1 - D("1.75") * e),
        (0, 1, 2): (D("-0.01"), 1 - D("1.75") * e),
    }


def _intervals_two_mass_bundle() -> dict:
    # X, Y in [0.995, 1.51], X + Y in [2.495, 2.999]; kappa = (1, 1)
    return {
        (0,): (D("-0.005"), D("0.51")),
        (1,): (D("-0.005"), D("0.51")),
        (0, 1): (D("0.495"), D("0.999")),
    }


def _tight_example_coefficient(gamma: Fraction) -> tuple[Fraction, Fraction, tuple]:
    """Coefficients of ``w y z`` and ``x y z^2`` plus the expectations of the SR tightness example."""
    half = Fraction(1, 2)
    # variable order x, y, z, w
    f1 = SparsePolynomial.monomial((0, 0, 1, 0), Fraction(1))
    f2 = SparsePolynomial(4, {(0, 0, 0, 0): half + gamma, (0, 0, 0, 1): half - gamma})
    f3 = SparsePolynomial(4, {(1, 0, 0, 0): half, (0, 0, 1, 0): half})
    f4 = SparsePolynomial(4, {(1, 0, 0, 0): gamma, (0, 0, 1, 0): gamma, (0, 1, 0, 0): 1 - 2 * gamma})
    f5 = SparsePolynomial(4, {(0, 0, 0, 0): 1 - 2 * gamma, (0, 1, 0, 0): 2 * gamma})
    p = product([f1, f2, f3, f4, f5])
    grad = p.gradient_at_one()
    # A = {w, x}, B = {y}, V = {w, z}
    exps = (grad[3] + grad[0], grad[1], grad[3] + grad[2])
    return p.coefficient((0, 1, 1, 1)), p.coefficient((1, 1, 2, 0)), exps


def _text(v):
    if isinstance(v, (list, tuple)):
        return [str(x) for x in v]
    return str(v)


def _item(name: str, claimed, computed, ok: bool, kind: str = ">=") -> dict:
    return {"name": name, "claimed": _text(claimed), "computed": _text(computed), "relation": kind, "pass": bool(ok)}


def appendix_bound_audit(c: TSPConstants = TSPConstants()) -> dict:
    """Replay each constant chain; returns ``{"items": [...], "all_pass": bool, "assumptions": [...]}``."""
    e = c.half
    e11 = c.eleven
    eta = c.eta
    em2, em3 = _exp(-2), _exp(-3)
    items = []

    with localcontext() as ctx:
        ctx.prec = PREC
        # top bundle with x_e <= 1/2 - eps
        lite = lite_eps_from_intervals(_intervals_low_top_bundle(e), 3)
        claimed = [D("0.5"), D("1.8") * e, D("1.75") * e]
        items.append(_item("low top bundle: one-term eps from expectation table", claimed, lite,
                           all(a >= b for a, b in zip(lite, claimed))))
        v = D("0.5") * em3 * D("0.5") * D("1.8") * D("1.75")
        items.append(_item("low top bundle: chain 0.5 e^-3 0.5 1.8 1.75", D("0.0392"), v, v >= D("0.0392")))
        items.append(_item("low top bundle: constant 0.0392 covers 0.039", D("0.039"), D("0.0392"), D("0.0392") >= D("0.039")))
        v_tab = D("0.5") * em3 * lite[0] * lite[1] * lite[2] / (e * e)
        items.append(_item("low top bundle: chain from table eps", D("0.039"), v_tab, v_tab >= D("0.039")))

        # top bundle with x_e >= 1/2 + eps
        lite = lite_eps_from_intervals(_intervals_high_top_bundle(e), 3)
        claimed = [D("0.5"), D("1.75") * e, D("1.75") * e]
        items.append(_item("high top bundle: one-term eps from expectation table", claimed, lite,
                           all(a >= b for a, b in zip(lite, claimed))))
        v = D("0.5") * em3 * D("0.5") * D("1.75") * D("1.75")
        items.append(_item("high top bundle: chain 0.5 e^-3 0.5 1.75^2", D("0.038"), v, v >= D("0.038")))

        # one of two half bundles, via the parameterized bound
        k = D("0.01") / e
        items.append(_item("one of two bundles: P >= 0.01 gives k >= 50", D(50), k, k >= 50))
        v = D("0.001") * (min(D(100), k) - D("0.2"))
        items.append(_item("one of two bundles: constant 0.001 (50 - 0.2)", D("0.0498"), v, v >= D("0.0498")))
        v = D("0.4") * e - 2 * e11 - eta
        items.append(_item("one of two, parameterized: 0.4 eps - 2 eps11 - eps_eta >= 0.22 eps", D("0.22") * e, v, v >= D("0.22") * e))
        v = D("0.147") * D("0.63")
        items.append(_item("one of two, parameterized: 0.147 * 0.63 >= 0.092", D("0.092"), v, v >= D("0.092")))
        v = D("0.092") * D("0.12") * D("0.2") * D("0.498")
        items.append(_item("one of two, parameterized: 0.092 * 0.12 * 0.2 * 0.498 >= 0.001", D("0.001"), v, v >= D("0.001")))

        # half bundle with mass on both A and B
        lo1, hi1 = 1 - 3 * e11, D("1.5") + e + 2 * e11 + 3 * eta
        items.append(_item("bundle with A and B mass: E[X], E[Y] interval inside [0.995, 1.51]", "[0.995, 1.51]", f"[{lo1}, {hi1}]",
                           lo1 >= D("0.995") and hi1 <= D("1.51"), "subset"))
        lo2, hi2 = D("2.5") - 3 * e11 - 3 * e, 3 + 2 * e + 2 * e11 + 4 * eta
        items.append(_item("bundle with A and B mass: E[X+Y] interval inside [2.495, 3.01]", "[2.495, 3.01]", f"[{lo2}, {hi2}]",
                           lo2 >= D("2.495") and hi2 <= D("3.01"), "subset"))
        lite = lite_eps_from_intervals(_intervals_two_mass_bundle(), 2)
        claimed = [D("0.49"), D("0.001")]
        items.append(_item("bundle with A and B mass: one-term eps when E[X+Y] <= 2.999", claimed, lite,
                           all(a >= b for a, b in zip(lite, claimed))))
        v = em2 * lite[0] * lite[1]
        items.append(_item("bundle with A and B mass: e^-2 0.49 0.001 >= 0.06 eps", D("0.06") * e, v, v >= D("0.06") * e))
        v = (e - 2 * eta) / (D("0.5") + D("1.3") * e)
        items.append(_item("bundle with A and B mass: (eps - 2 eps_eta)/(1/2 + 1.3 eps) >= 1.99 eps", D("1.99") * e, v, v >= D("1.99") * e))
        v = e + 3 * e11
        items.append(_item("bundle with A and B mass: eps + 3 eps11 <= 1.3 eps", D("1.3") * e, v, v <= D("1.3") * e, "<="))
        v = D("0.0498") * D("1.99") * D("0.49")
        items.append(_item("bundle with A and B mass: chain 0.0498 * 1.99 * 0.49", D("0.0485"), v, v >= D("0.0485")))
        v = D("0.5") * D("0.245") * D("0.77")
        items.append(_item("bundle with A and B mass: (1/2)(0.245)(0.77) >= 0.094", D("0.094"), v, v >= D("0.094")))
        v = D("0.094") * D("0.001")
        items.append(_item("bundle with A and B mass: 0.094 * 0.001 >= 0.06 eps", D("0.06") * e, v, v >= D("0.06") * e))
        v = D("0.362") + D("0.112")
        items.append(_item("bundle with A and B mass: 0.362 + 0.112 = 0.474", D("0.474"), v, v >= D("0.474")))
        v = D("0.2") * D("0.249")
        items.append(_item("bundle with A and B mass: (0.2 eps)(0.249) = 0.0498 eps", D("0.0498"), v, v >= D("0.0498")))

    # Hoeffding steps, at most three Bernoullis with mean in [1.48, 1.52]
    fine = [Fraction(1480 + i, 1000) for i in range(0, 41)]
    ge1 = min(extremal_bernoulli([0, 1, 1, 1], 3, q, "min")[0] for q in fine)
    le1 = min(extremal_bernoulli([1, 1, 0, 0], 3, q, "min")[0] for q in fine)
    items.append(_item("bundle with A and B mass: min P[S >= 1], 3 Bernoullis, mean in [1.48, 1.52]", "0.869", float(ge1), ge1 >= Fraction(869, 1000)))
    items.append(_item("bundle with A and B mass: min P[S <= 1], 3 Bernoullis, mean in [1.48, 1.52]", "0.422", float(le1), le1 >= Fraction(422, 1000)))
    items.append(_item("bundle with A and B mass: 0.995 * min P[S >= 1] >= 0.864", "0.864", float(ge1 * Fraction(995, 1000)),
                       ge1 * Fraction(995, 1000) >= Fraction(864, 1000)))
    items.append(_item("bundle with A and B mass: 0.995 * min P[S <= 1] >= 0.419", "0.419", float(le1 * Fraction(995, 1000)),
                       le1 * Fraction(995, 1000) >= Fraction(419, 1000)))

    # the strongly Rayleigh example showing the eps^2 rate is tight
    gamma = Fraction(1, 1000)
    c_wyz, c_xyzz, exps = _tight_example_coefficient(gamma)
    items.append(_item("tight SR example: expectations (A, B, V) = (1, 1, 2)", "(1, 1, 2)", tuple(str(x) for x in exps),
                       exps == (1, 1, 2), "=="))
    items.append(_item("tight SR example: coefficient of w y z", "0", str(c_wyz), c_wyz == 0, "=="))
    target = (1 + 2 * gamma) * gamma**2
    items.append(_item("tight SR example: coefficient of x y z^2 = (1 + 2 gamma) gamma^2", str(target), str(c_xyzz),
                       c_xyzz == target, "=="))

    # item list and final factor
    consts = lemma_constants(c)
    expected = {1: D("1.5e-9"), 2: D("1.56e-9"), 3: D("1.52e-9"), 4: D("1.992e-9"), 5: D("1.94e-9")}
    if c == TSPConstants():
        for it in consts["items"]:
            if it["item"] in expected:
                items.append(_item(f"item {it['item']} value", expected[it["item"]], it["value"],
                                   it["value"] == expected[it["item"]], "=="))
        items.append(_item("item 4 value >= 1.9e-9", D("1.9e-9"), consts["items"][3]["value"],
                           consts["items"][3]["value"] >= D("1.9e-9")))
        items.append(_item("item 5 value >= 1.9e-9", D("1.9e-9"), consts["items"][4]["value"],
                           consts["items"][4]["value"] >= D("1.9e-9")))
        items.append(_item("p = min of items", D("1.5e-9"), consts["p"], consts["p"] == D("1.5e-9"), "=="))
    af = approximation_factor(consts["p"])
    items.append(_item("gap 9.7e-17 p^2 vs (1.56e-6 p)^2 / 25000 within 1%", "0.01", af.relative_disagreement,
                       af.relative_disagreement <= D("0.01"), "<="))
    items.append(_item("full gap eps_P beta/6 - eps_P eta/100 >= eps_P^2 / 25000", af.gap_from_eps_p, af.gap_full,
                       af.gap_full >= af.gap_from_eps_p))
    items.append(_item("eta branch eps_P / 750 < 1e-12", "1e-12", D("1.56e-6") * consts["p"] / 750, af.eta_branch_ok, "<"))
    if c == TSPConstants():
        items.append(_item("final gap rounds to 2.18e-34", "2.18e-34", af.gap,
                           D("2.175e-34") <= af.gap < D("2.185e-34"), "~"))

    assumptions = ["item 6 bound is taken as stated (proof not provided)"]
    return {"items": items, "all_pass": all(it["pass"] for it in items), "assumptions": assumptions,
            "p": str(consts["p"])}


def audit_json(c: TSPConstants = TSPConstants()) -> str:
    return json.dumps(appendix_bound_audit(c), indent=2, sort_keys=True)
