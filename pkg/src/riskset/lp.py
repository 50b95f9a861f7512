"""Exact two-phase simplex (Bland's rule) over the rationals.

Everything here is dense and tableau based: the problems that show up in
this package have at most a few hundred columns and a few dozen rows, and
exactness matters far more than speed.  Bland's rule guarantees
termination, and because the pivot order is fully determined by column
indices the optimal basis (and therefore the extracted dual solution) is
reproducible run to run.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from ._rational import INF, NEG_INF, ONE, ZERO, Rat, to_rat

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


@dataclass
class LPResult:
    status: str
    value: object = None
    x: list | None = None
    duals: list | None = None
    ray: list | None = None
    basis: list = field(default_factory=list)

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


def _r(v):
    return v if type(v) is type(ONE) else to_rat(v)


def _pivot(T, r, j):
    prow = T[r]
    inv = ONE / prow[j]
    prow = [v * inv for v in prow]
    T[r] = prow
    for k, row in enumerate(T):
        if k == r:
            continue
        f = row[j]
        if f:
            T[k] = [a - f * b if b else a for a, b in zip(row, prow)]


def _run(T, basis, allowed, nrows):
    """Bland-rule simplex on tableau ``T`` whose last row holds reduced costs.

    Column ``-1`` is the right hand side.  Returns ``None`` on optimality or
    the entering column index when the problem is unbounded in it.
    """
    obj = T[nrows]
    while True:
        j = -1
        for col in allowed:
            if obj[col] < 0:
                j = col
                break
        if j < 0:
            return None
        best = None
        r = -1
        for i in range(nrows):
            a = T[i][j]
            if a > 0:
                ratio = T[i][-1] / a
                if best is None or ratio < best or (ratio == best and basis[i] < basis[r]):
                    best, r = ratio, i
        if r < 0:
            return j
        _pivot(T, r, j)
        basis[r] = j
        obj = T[nrows]


def solve_standard(c, A, b) -> LPResult:
    """Minimize ``c @ x`` subject to ``A @ x == b`` and ``x >= 0``.

    On optimality ``duals`` holds ``y`` with ``A^T y <= c`` and
    ``b @ y == value`` (strong duality, exactly).  On unboundedness ``ray``
    is a nonnegative direction ``d`` with ``A d == 0`` and ``c @ d < 0``.
    """
    c = [_r(v) for v in c]
    nrows = len(A)
    n = len(c)
    if nrows == 0:
        for j, cj in enumerate(c):
            if cj < 0:
                ray = [ZERO] * n
                ray[j] = ONE
                return LPResult(UNBOUNDED, NEG_INF, ray=ray)
        return LPResult(OPTIMAL, ZERO, x=[ZERO] * n, duals=[])
    sign = []
    T = []
    for i in range(nrows):
        row = [_r(v) for v in A[i]]
        rhs = _r(b[i])
        s = 1
        if rhs < 0:
            row = [-v for v in row]
            rhs = -rhs
            s = -1
        sign.append(s)
        art = [ZERO] * nrows
        art[i] = ONE
        T.append(row + art + [rhs])
    width = n + nrows
    # phase 1: minimize the sum of artificials
    obj = [ZERO] * (width + 1)
    for i in range(nrows):
        for j in range(n):
            obj[j] -= T[i][j]
        obj[-1] -= T[i][-1]
    T.append(obj)
    basis = [n + i for i in range(nrows)]
    _run(T, basis, range(n), nrows)
    if T[nrows][-1] != 0:
        return LPResult(INFEASIBLE, INF)
    # drive zero-level artificials out of the basis where possible
    for i in range(nrows):
        if basis[i] >= n:
            for j in range(n):
                if T[i][j] != 0:
                    _pivot(T, i, j)
                    basis[i] = j
                    break
    # phase 2
    obj = [ZERO] * (width + 1)
    for j in range(n):
        obj[j] = c[j]
    for i in range(nrows):
        cb = c[basis[i]] if basis[i] < n else ZERO
        if cb:
            obj = [a - cb * t for a, t in zip(obj, T[i])]
    T[nrows] = obj
    enter = _run(T, basis, range(n), nrows)
    if enter is not None:
        ray = [ZERO] * n
        ray[enter] = ONE
        for i in range(nrows):
            if basis[i] < n:
                ray[basis[i]] = -T[i][enter]
        return LPResult(UNBOUNDED, NEG_INF, ray=ray, basis=list(basis))
    x = [ZERO] * n
    for i in range(nrows):
        if basis[i] < n:
            x[basis[i]] = T[i][-1]
    value = sum((cj * xj for cj, xj in zip(c, x) if xj), ZERO)
    duals = [-T[nrows][n + i] * sign[i] for i in range(nrows)]
    return LPResult(OPTIMAL, value, x=x, duals=duals, basis=list(basis))


def lp_min(c, A_ge=(), b_ge=(), A_eq=(), b_eq=(), free=None) -> LPResult:
    """Minimize ``c @ x`` s.t. ``A_ge x >= b_ge``, ``A_eq x == b_eq``.

    ``free`` lists the indices of sign-unrestricted variables; all other
    variables are nonnegative.  ``duals`` is ``(y_ge, y_eq)`` with
    ``y_ge >= 0`` and ``A_ge^T y_ge + A_eq^T y_eq`` equal to ``c`` on free
    columns and ``<= c`` on nonnegative ones.
    """
    c = [_r(v) for v in c]
    n = len(c)
    free = sorted(set(free or ()))
    fpos = {j: k for k, j in enumerate(free)}
    m_ge, m_eq = len(A_ge), len(A_eq)
    ncols = n + len(free) + m_ge
    cols_c = c + [-c[j] for j in free] + [ZERO] * m_ge
    rows, rhs = [], []
    for i, (row, bi) in enumerate(zip(A_ge, b_ge)):
        row = [_r(v) for v in row]
        full = row + [-row[j] for j in free] + [ZERO] * m_ge
        full[n + len(free) + i] = -ONE
        rows.append(full)
        rhs.append(bi)
    for row, bi in zip(A_eq, b_eq):
        row = [_r(v) for v in row]
        rows.append(row + [-row[j] for j in free] + [ZERO] * m_ge)
        rhs.append(bi)
    res = solve_standard(cols_c, rows, rhs)
    if res.status == INFEASIBLE:
        return res
    if res.status == UNBOUNDED:
        d = res.ray
        ray = [d[j] - (d[n + fpos[j]] if j in fpos else ZERO) for j in range(n)]
        return LPResult(UNBOUNDED, NEG_INF, ray=ray)
    xs = res.x
    x = [xs[j] - (xs[n + fpos[j]] if j in fpos else ZERO) for j in range(n)]
    y = res.duals
    return LPResult(OPTIMAL, res.value, x=x, duals=(y[:m_ge], y[m_ge:m_ge + m_eq]),
                    basis=res.basis)


def cone_membership(generators, target) -> LPResult:
    """Is ``target`` a nonnegative combination of ``generators``?

    Phase-1 feasibility with zero objective; ``x`` holds the multipliers.
    """
    gens = list(generators)
    dim = len(target)
    if not gens:
        ok = all(v == 0 for v in target)
        return LPResult(OPTIMAL if ok else INFEASIBLE, ZERO if ok else INF, x=[] if ok else None)
    A = [[g[k] for g in gens] for k in range(dim)]
    return solve_standard([ZERO] * len(gens), A, list(target))
