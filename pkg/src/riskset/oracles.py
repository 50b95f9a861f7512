"""Brute-force oracles used to validate the structured algorithms.

Each oracle recomputes a quantity by the most direct route available,
with no reuse of the code path it is checking.
"""
from __future__ import annotations

from ._rational import ONE, ZERO, Rat
from .lp import OPTIMAL, lp_min, solve_standard
from .riskmeasures import avar_loss

__all__ = [
    "avar_dual_lp",
    "vanilla_recursion_gap",
    "shp_stacked_feasible",
    "shp_stacked_support",
    "shp_matches_stacked",
]


def avar_dual_lp(probs, losses, lam):
    """``sup {E[z L] : 0 <= z <= 1/lam, E[z] = 1}`` by simplex."""
    k = len(probs)
    cap = ONE / Rat(lam)
    # variables z (k) and slacks (k): z + s = cap
    c = [-p * x for p, x in zip(probs, losses)] + [ZERO] * k
    A = [list(probs) + [ZERO] * k]
    b = [ONE]
    for j in range(k):
        row = [ZERO] * (2 * k)
        row[j] = ONE
        row[k + j] = ONE
        A.append(row)
        b.append(cap)
    res = solve_standard(c, A, b)
    return -res.value


def vanilla_recursion_gap(model, X):
    """Compare the one-shot root value with the value obtained by stepping.

    For a recursive family the root corner equals the root's one-step
    measure applied to the time-1 corners.  Returns the per-component
    differences (all zero when the recursion holds for ``X``).
    """
    tree = model.tree
    r0 = model.corners(X, 0)[0]
    r1 = model.corners(X, 1)
    out = []
    for i in range(tree.d):
        pairs = [(tree.p[c], r1[c][i]) for c in tree.children[0]]
        out.append(r0[i] - avar_loss(pairs, model.levels[0][i]))
    return tuple(out)


def _stacked_lp(model, X, n, homogeneous=False):
    """Columns/rows of ``u = X(l) + sum_{nodes on the path n..l} k``, ``k in K``.

    Solvency sets are taken from their generators: ``k = sum mu_v v +
    sum lam_r r`` with ``sum mu = 1`` per node.  With ``homogeneous`` the
    system describes the recession cone instead (``X = 0``, rays only).
    Returns ``(cols, A, b)`` for the equality system in ``(u, multipliers)``.
    """
    tree = model.tree
    d = tree.d
    nodes = [n]
    for s in range(tree.time[n] + 1, tree.T + 1):
        nodes.extend(tree.desc_at(n, s))
    cols = []  # (node, vector, is_vertex)
    for a in nodes:
        K = model.market[a]
        if not homogeneous:
            cols.extend((a, v, True) for v in K.vertices)
        cols.extend((a, r, False) for r in K.rays)
        cols.extend((a, l, False) for l in K.lines)
        cols.extend((a, tuple(-x for x in l), False) for l in K.lines)
    leaves = tree.leaves_under(n)
    A, b = [], []
    # rows: for each leaf and component, u_i - sum_{cols on path} g_i = X_i(l)
    for l in leaves:
        path = set(tree.path(n, l)) | {n}
        for i in range(d):
            row = [ZERO] * d + [(-g[i] if a in path else ZERO) for a, g, _ in cols]
            row[i] = ONE
            A.append(row)
            b.append(ZERO if homogeneous else X[l][i])
    for a in nodes:
        if not homogeneous and model.market[a].vertices:
            A.append([ZERO] * d + [(ONE if (c[0] == a and c[2]) else ZERO) for c in cols])
            b.append(ONE)
    return cols, A, b


def shp_stacked_feasible(model, X, n, u, homogeneous=False):
    """Is ``u`` a superhedging portfolio at ``n`` (full trading strategy LP)?

    With ``homogeneous``: is ``u`` a recession direction of that set?
    """
    d = model.tree.d
    cols, A, b = _stacked_lp(model, X, n, homogeneous)
    A_fixed = [row[d:] for row in A]
    b_fixed = [bi - sum((row[i] * u[i] for i in range(d)), ZERO) for row, bi in zip(A, b)]
    res = solve_standard([ZERO] * len(cols), A_fixed, b_fixed)
    return res.status == OPTIMAL


def shp_stacked_support(model, X, n, w):
    """``inf {w . u : u superhedges X at n}`` over full trading strategies."""
    d = model.tree.d
    cols, A, b = _stacked_lp(model, X, n)
    c = list(w) + [ZERO] * len(cols)
    res = lp_min(c, A_eq=A, b_eq=b, free=range(d))
    return res


def shp_matches_stacked(model, X, n, P):
    """Exact equality of ``P`` with the stacked-LP superhedging set at ``n``.

    ``P ⊆ stacked``: every vertex is feasible and every ray/line direction
    lies in the stacked recession cone.  ``stacked ⊆ P``: the stacked
    minimum of each facet normal of ``P`` meets its right-hand side.
    Returns ``(ok, reason)``.
    """
    if P.is_empty():
        ok = not shp_stacked_feasible_any(model, X, n)
        return ok, None if ok else "stacked set nonempty"
    for v in P.vertices:
        if not shp_stacked_feasible(model, X, n, v):
            return False, ("vertex", v)
    for r in list(P.rays) + list(P.lines) + [tuple(-x for x in l) for l in P.lines]:
        if not shp_stacked_feasible(model, X, n, r, homogeneous=True):
            return False, ("ray", r)
    for a, rhs in P.ineqs:
        res = shp_stacked_support(model, X, n, a)
        if res.status != OPTIMAL or res.value < rhs:
            return False, ("facet", a, rhs)
    for a, rhs in P.eqs:
        for sgn in (1, -1):
            res = shp_stacked_support(model, X, n, tuple(sgn * x for x in a))
            if res.status != OPTIMAL or res.value < sgn * rhs:
                return False, ("equality", a, rhs)
    return True, None


def shp_stacked_feasible_any(model, X, n):
    d = model.tree.d
    res = shp_stacked_support(model, X, n, (ZERO,) * d)
    return res.status == OPTIMAL

