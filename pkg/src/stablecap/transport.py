"""Exact transportation simplex.

Vertices of ``{X >= 0 : X 1 = supply, X^T 1 = demand}`` are the basic
feasible solutions, whose basic cells form a spanning tree of the complete
bipartite graph. Flows are kept as Fractions so the support is exact.
"""

from __future__ import annotations

from collections import deque
from fractions import Fraction
from typing import Sequence


def northwest_corner(supply: Sequence[Fraction], demand: Sequence[Fraction], row_order=None, col_order=None):
    """Basic feasible solution by the northwest-corner rule in the given orders.

    Returns ``(flow, basis)`` with ``flow`` a dict over basic cells (possibly
    zero-valued) and ``basis`` the list of those ``m + n - 1`` cells.
    """
    m, n = len(supply), len(demand)
    rows = list(row_order) if row_order is not None else list(range(m))
    cols = list(col_order) if col_order is not None else list(range(n))
    s = {r: Fraction(supply[r]) for r in rows}
    t = {c: Fraction(demand[c]) for c in cols}
    flow: dict[tuple[int, int], Fraction] = {}
    a = b = 0
    while True:
        r, c = rows[a], cols[b]
        x = min(s[r], t[c])
        flow[(r, c)] = x
        s[r] -= x
        t[c] -= x
        if a == m - 1 and b == n - 1:
            break
        if a == m - 1:
            b += 1
        elif b == n - 1:
            a += 1
        elif s[r] == 0:
            a += 1
        else:
            b += 1
    return flow, list(flow)


def _potentials(basis, cost, m, n):
    adj_r = {i: [] for i in range(m)}
    adj_c = {j: [] for j in range(n)}
    for i, j in basis:
        adj_r[i].append(j)
        adj_c[j].append(i)
    u: list = [None] * m
    v: list = [None] * n
    u[0] = 0
    queue = deque([("r", 0)])
    while queue:
        kind, k = queue.popleft()
        if kind == "r":
            for j in adj_r[k]:
                if v[j] is None:
                    v[j] = cost[k][j] - u[k]
                    queue.append(("c", j))
        else:
            for i in adj_c[k]:
                if u[i] is None:
                    u[i] = cost[i][k] - v[k]
                    queue.append(("r", i))
    return u, v


def _tree_path(basis, start_col, end_row, m, n):
    """Cells on the unique tree path from column node ``start_col`` to row node ``end_row``."""
    adj: dict = {}
    for i, j in basis:
        adj.setdefault(("r", i), []).append(("c", j))
        adj.setdefault(("c", j), []).append(("r", i))
    start, goal = ("c", start_col), ("r", end_row)
    prev = {start: None}
    queue = deque([start])
    while queue:
        node = queue.popleft()
        if node == goal:
            break
        for nxt in adj.get(node, []):
            if nxt not in prev:
                prev[nxt] = node
                queue.append(nxt)
    path_nodes = []
    node = goal
    while node is not None:
        path_nodes.append(node)
        node = prev[node]
    path_nodes.reverse()  # column start ... row goal
    cells = []
    for a, b in zip(path_nodes, path_nodes[1:]):
        if a[0] == "r":
            cells.append((a[1], b[1]))
        else:
            cells.append((b[1], a[1]))
    return cells


def solve(supply, demand, cost, row_order=None, col_order=None, max_pivots: int = 100_000):
    """Minimize ``sum cost[i][j] X[i][j]`` over the transportation polytope.

    Starts from the northwest corner in the given orders and pivots with
    Bland's rule. Returns the optimal flow as a dense list of Fractions.
    """
    m, n = len(supply), len(demand)
    if sum(map(Fraction, supply)) != sum(map(Fraction, demand)):
        raise ValueError("supply and demand totals differ")
    if any(Fraction(v) < 0 for v in list(supply) + list(demand)):
        raise ValueError("negative supply or demand")
    flow, basis = northwest_corner(supply, demand, row_order, col_order)
    basis_set = set(basis)
    for _ in range(max_pivots):
        u, v = _potentials(basis, cost, m, n)
        enter = None
        for i in range(m):
            for j in range(n):
                if (i, j) not in basis_set and cost[i][j] - u[i] - v[j] < 0:
                    enter = (i, j)
                    break
            if enter is not None:
                break
        if enter is None:
            break
        i0, j0 = enter
        path = _tree_path(basis, j0, i0, m, n)
        # cycle: enter (+), then path cells alternate -, +, ... starting from column j0
        minus = path[0::2]
        plus = path[1::2]
        theta = min(flow[c] for c in minus)
        leave = min((c for c in minus if flow[c] == theta))
        for c in minus:
            flow[c] -= theta
        for c in plus:
            flow[c] += theta
        flow[enter] = theta
        del flow[leave]
        basis.remove(leave)
        basis_set.discard(leave)
        basis.append(enter)
        basis_set.add(enter)
    else:
        raise RuntimeError("transportation simplex did not terminate")
    X = [[Fraction(0)] * n for _ in range(m)]
    for (i, j), x in flow.items():
        X[i][j] = x
    return X
