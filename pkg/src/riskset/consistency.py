"""Penalties, cocycles, supermartingale and martingale checks, direct MPTC.

Minimal penalties are halfspaces, so they are stored as thresholds:

* unconditional: ``beta_t(Q, w) = {u in M_t : E[w . u] >= b}``;
* conditional: ``alpha_t(Q, w)(n) = {u in M : w(n) . u >= a(n)}``.

``+inf`` encodes the empty set and absorbs in sums.  With thresholds, every
set inclusion in the supermartingale statements becomes a comparison of
extended reals.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

from ._rational import INF, NEG_INF, ONE, ZERO, ext_add, ext_sub, fmt
from .duals import DualPair, in_Wt
from .lp import INFEASIBLE, UNBOUNDED, OPTIMAL, lp_min, solve_standard
from .polycalc import Polyhedron, _dot, contains, support_point, support_value
from .riskmeasures import (SHP, Entropic, RiskModel, _embed, _expand, leaf_vector,
                           risk_from_acceptance)
from .scenario import NodeVector, VectorMeasure, xi_node

__all__ = [
    "PenaltyValue",
    "CheckReport",
    "alpha",
    "beta",
    "alpha_stepped",
    "beta_stepped",
    "check_cocycle",
    "V_process",
    "Vc_process",
    "check_supermartingale",
    "check_martingale_worstcase",
    "find_worst_case_dual",
    "extract_dual_pair",
    "measure_from_masses",
    "check_mptc_direct",
    "node_support",
    "ENTROPIC_TOL",
]

ENTROPIC_TOL = 1e-9


def _x(v):
    """Format an extended real (exact or float) for reports."""
    if v is None:
        return None
    if isinstance(v, float):
        return "inf" if v == INF else "-inf" if v == NEG_INF else v
    return fmt(v)


@dataclass
class PenaltyValue:
    kind: str  # "unconditional" | "conditional"
    t: int
    b: object = None
    a: dict | None = None

    @property
    def empty(self):
        if self.kind == "unconditional":
            return self.b == INF
        return any(v == INF for v in self.a.values())

    def to_json(self):
        if self.kind == "unconditional":
            return {"kind": self.kind, "t": self.t, "b": _x(self.b)}
        return {"kind": self.kind, "t": self.t, "a": {str(n): _x(v) for n, v in self.a.items()}}


@dataclass
class CheckReport:
    name: str
    params: dict
    verdict: bool
    gap: object = None
    witness: object = None
    runtime: float = 0.0
    details: dict = field(default_factory=dict)

    def to_json(self):
        return {
            "check": self.name,
            "params": self.params,
            "verdict": "pass" if self.verdict else "fail",
            "gap": _x(self.gap) if not isinstance(self.gap, dict)
            else {str(k): _x(v) for k, v in self.gap.items()},
            "witness": _jsonable(self.witness),
            "details": _jsonable(self.details),
        }


def _jsonable(obj):
    if obj is None or isinstance(obj, (bool, int, str)):
        return obj
    if isinstance(obj, float):
        return _x(obj)
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if hasattr(obj, "to_json"):
        return obj.to_json()
    try:
        return fmt(obj)
    except (TypeError, ValueError, AttributeError):
        return str(obj)


# ---------------------------------------------------------------------------
# extended arithmetic helpers


def _is_float_model(model):
    return isinstance(model, Entropic)


def _mul(p, v):
    """``p * v`` for ``p > 0`` with ``v`` possibly infinite."""
    if v in (INF, NEG_INF):
        return v
    return p * v


def _esum(vals):
    acc = ZERO
    for v in vals:
        acc = ext_add(acc, v)
    return acc


def _ge(a, b, tol=0):
    """``a >= b`` on extended reals with an optional float tolerance."""
    if a == INF or b == NEG_INF:
        return True
    if b == INF or a == NEG_INF:
        return False
    return a >= b - tol


def _gap(a, b):
    g = ext_sub(a, b)
    if g is None:  # both +inf (empty == empty) or both -inf
        return ZERO
    return g


# ---------------------------------------------------------------------------
# penalties


def _leaf_weights(tree, n, s, ws):
    """Direction ``(P(c|n) w(c))_c`` over the time-``s`` descendants of ``n``."""
    out = []
    for c in tree.desc_at(n, s):
        p = tree.cond_prob(c, n)
        out.extend(p * x for x in ws[c])
    return tuple(out)


def _neg_support(A, c):
    """``-inf_{Y in A} c . Y`` (``+inf`` when unbounded, ``-inf`` when ``A`` is empty)."""
    A.vertices  # noqa: B018  (prefer the cached generator route)
    v = support_value(A, c)
    if v == INF:
        return NEG_INF
    if v == NEG_INF:
        return INF
    return -v


def _rel_entropy(pair, n, s):
    """``E^{Q_i}[log xi_{t,s}(Q_i) | n]`` per component (floats)."""
    tree = pair.tree
    out = []
    for i in range(tree.d):
        acc = 0.0
        for c in tree.desc_at(n, s):
            x = xi_node(pair.Q, n, c)[i]
            if x > 0:
                acc += float(tree.cond_prob(c, n) * x) * math.log(float(x))
        out.append(acc)
    return out


def _check_pair(pair, t):
    if pair.t != t:
        raise ValueError(f"pair is anchored at {pair.t}, expected {t}")
    ok = in_Wt(pair)
    if not ok:
        raise ValueError(f"pair outside the dual set: {ok.clause}")


def alpha(pair, model, t=None):
    """Conditional minimal penalty: node thresholds ``a(n)``."""
    return alpha_stepped(pair, model, pair.t if t is None else t, model.tree.T)


def alpha_stepped(pair, model, t, s):
    """Stepped conditional penalty ``alpha_{t,s}`` (``s = T`` gives ``alpha_t``).

    SHP models only admit equivalent measures in the conditional dual
    representation; other measures are rejected.
    """
    if isinstance(model, SHP) and not pair.Q.is_equivalent():
        raise ValueError("conditional SHP penalties use equivalent measures only")
    return _node_thresholds(pair, model, t, s)


def _node_thresholds(pair, model, t, s):
    _check_pair(pair, t)
    tree = model.tree
    a = {}
    if _is_float_model(model):
        w = pair.w
        for n in tree.nodes_at(t):
            H = _rel_entropy(pair, n, s)
            a[n] = sum(float(w[n][i]) / model.rates[i] * H[i] for i in range(tree.d))
        return PenaltyValue("conditional", t, a=a)
    ws = pair.w_at(s)
    for n in tree.nodes_at(t):
        A = model.acceptance(n) if s == tree.T else model.stepped_acceptance(n, s)
        a[n] = _neg_support(A, _leaf_weights(tree, n, s, ws))
    return PenaltyValue("conditional", t, a=a)


def beta(pair, model, t=None):
    """Unconditional minimal penalty threshold ``b``; ``+inf`` means empty."""
    return beta_stepped(pair, model, pair.t if t is None else t, model.tree.T)


def beta_stepped(pair, model, t, s):
    al = _node_thresholds(pair, model, t, s)
    tree = model.tree
    if _is_float_model(model):
        b = sum(float(tree.prob[n]) * v for n, v in al.a.items())
    else:
        b = _esum(_mul(tree.prob[n], v) for n, v in al.a.items())
    return PenaltyValue("unconditional", t, b=b)


def check_cocycle(pair, model, t, s, kind="beta"):
    """``b_t = b_{t,s} + b_s(Q, w_t^s)`` (node-wise for ``alpha``)."""
    t0 = time.perf_counter()
    tree = model.tree
    if pair.t < t:
        pair = pair.propagate(t)
    later = pair.propagate(s)
    tol = ENTROPIC_TOL if _is_float_model(model) else 0
    params = {"t": t, "s": s, "kind": kind}
    if kind == "beta":
        lhs = beta(pair, model).b
        step = beta_stepped(pair, model, t, s).b
        rest = beta(later, model).b
        rhs = ext_add(step, rest)
        gap = _gap(lhs, rhs)
        ok = _eq(lhs, rhs, tol)
        det = {"b_t": lhs, "b_ts": step, "b_s": rest}
        return CheckReport("cocycle_beta", params, ok, gap, None if ok else det,
                           time.perf_counter() - t0, det)
    lhs = alpha(pair, model).a
    step = alpha_stepped(pair, model, t, s).a
    rest = alpha(later, model).a
    gaps, bad = {}, None
    for n in tree.nodes_at(t):
        agg = _esum(_mul(tree.cond_prob(c, n), rest[c]) for c in tree.desc_at(n, s)) \
            if not tol else sum(float(tree.cond_prob(c, n)) * rest[c] for c in tree.desc_at(n, s))
        rhs = ext_add(step[n], agg)
        gaps[n] = _gap(lhs[n], rhs)
        if bad is None and not _eq(lhs[n], rhs, tol):
            bad = {"node": n, "a_t": lhs[n], "a_ts": step[n], "aggregated_a_s": agg}
    return CheckReport("cocycle_alpha", params, bad is None, gaps, bad,
                       time.perf_counter() - t0)


def _eq(a, b, tol):
    if a in (INF, NEG_INF) or b in (INF, NEG_INF):
        return a == b
    return abs(a - b) <= tol if tol else a == b


# ---------------------------------------------------------------------------
# supports of R_t(X)


_RISK_CACHE = {}


def _risk_process(model, X):
    key = (id(model), X)
    hit = _RISK_CACHE.get(key)
    if hit is None or hit[0] is not model:
        if len(_RISK_CACHE) > 256:
            _RISK_CACHE.clear()
        hit = (model, model.risk_process(X))
        _RISK_CACHE[key] = hit
    return hit[1]


def node_support(model, X, t, w):
    """``rho-hat_t(n) = inf_{u in R_t(X)(n)} w(n) . u`` for every time-``t`` node."""
    tree = model.tree
    m = tree.m
    rp = _risk_process(model, X)
    out = {}
    for n in tree.nodes_at(t):
        wn = w[n]
        if rp.kind == "box":
            r = rp.corner(t, n)
            if any(x < 0 for x in wn[:m]):
                out[n] = NEG_INF
            elif rp.backend == "float":
                out[n] = sum(float(a) * b for a, b in zip(wn[:m], r[:m]))
            else:
                out[n] = sum((a * b for a, b in zip(wn[:m], r[:m]) if a), ZERO)
        else:
            out[n] = support_value(rp.poly(t, n), wn)
    return out


# ---------------------------------------------------------------------------
# V and conditional V


@dataclass
class Threshold:
    """``{u : sum_n normal(n) . u(n) >= b}`` on the stacked time-``t`` space
    (unconditional), or node-wise ``{u : normal(n) . u >= b(n)}`` (conditional)."""

    t: int
    normal: dict
    b: object
    conditional: bool = False

    def contains_point(self, u):
        if self.conditional:
            return all(_ge(_dot(self.normal[n], u[n]), self.b[n]) for n in self.normal)
        return _ge(sum((_dot(self.normal[n], u[n]) for n in self.normal), ZERO), self.b)

    def to_json(self):
        return {"t": self.t, "conditional": self.conditional,
                "normal": {str(n): [_x(x) for x in v] for n, v in self.normal.items()},
                "b": _x(self.b) if not self.conditional
                else {str(n): _x(v) for n, v in self.b.items()}}


def _theta(pair, model, X, conditional):
    """Thresholds of ``V_t`` (or conditional ``V_t``) for a pair anchored at ``t``."""
    tree = model.tree
    t = pair.t
    rho = node_support(model, X, t, pair.w)
    a = (alpha(pair, model) if conditional
         else _node_thresholds(pair, model, t, tree.T)).a
    fl = _is_float_model(model)
    node_th = {n: (rho[n] + a[n] if fl else ext_add(rho[n], a[n])) for n in rho}
    if conditional:
        return node_th
    if fl:
        return sum(float(tree.prob[n]) * v for n, v in node_th.items())
    return _esum(_mul(tree.prob[n], v) for n, v in node_th.items())


def V_process(pair, model, X):
    """``V_t`` for ``t >= pair.t`` with the pair propagated along ``w_t^s``."""
    out = {}
    tree = model.tree
    for s in range(pair.t, tree.T + 1):
        ps = pair.propagate(s) if s > pair.t else pair
        normal = {n: tuple(tree.prob[n] * x for x in ps.w[n]) for n in tree.nodes_at(s)}
        out[s] = Threshold(s, normal, _theta(ps, model, X, False))
    return out


def Vc_process(pair, model, X):
    out = {}
    tree = model.tree
    for s in range(pair.t, tree.T + 1):
        ps = pair.propagate(s) if s > pair.t else pair
        out[s] = Threshold(s, dict(ps.w), _theta(ps, model, X, True), conditional=True)
    return out


def _violating_point(th, target):
    """A point of ``th`` outside the halfspace at level ``target > th.b``."""
    for n, nv in th.normal.items():
        for i, x in enumerate(nv):
            if x > 0:
                u = {k: tuple(ZERO for _ in v) for k, v in th.normal.items()}
                vec = [ZERO] * len(nv)
                vec[i] = th.b / x if not isinstance(th.b, float) else th.b / float(x)
                u[n] = tuple(vec)
                return u
    return None


def check_supermartingale(pair, model, X, t=None, s=None, kind="V"):
    """``V_t ⊆ E^Q[V_s | F_t]`` (kind ``V``) or node-wise for ``Vc``.

    The pair is propagated to ``t`` first if it is anchored earlier.  The
    default step is ``s = t + 1``.
    """
    t0 = time.perf_counter()
    tree = model.tree
    t = pair.t if t is None else t
    s = t + 1 if s is None else s
    if pair.t < t:
        pair = pair.propagate(t)
    later = pair.propagate(s)
    fl = _is_float_model(model)
    tol = ENTROPIC_TOL if fl else 0
    params = {"t": t, "s": s, "kind": kind}
    if kind == "V":
        th_t = _theta(pair, model, X, False)
        th_s = _theta(later, model, X, False)
        ok = _ge(th_t, th_s, tol)
        gap = _gap(th_t, th_s)
        witness = None
        if not ok:
            witness = {"theta_t": th_t, "theta_s": th_s}
            if th_t not in (INF, NEG_INF):
                normal = {n: tuple(tree.prob[n] * x for x in pair.w[n]) for n in tree.nodes_at(t)}
                Vt = Threshold(t, normal, th_t)
                EVs = Threshold(t, normal, th_s)
                u = _violating_point(Vt, th_s)
                if u is not None:
                    witness["u"] = u
                    witness["reverified"] = Vt.contains_point(u) and not EVs.contains_point(u)
                    if not fl:
                        witness["reverified_polyhedral"] = _reverify_stacked(
                            normal, th_t, th_s, u, tree.m)
            else:
                witness["decisive"] = "V_s empty while V_t is not"
        return CheckReport("supermartingale_V", params, ok, gap, witness,
                           time.perf_counter() - t0, {"theta_t": th_t, "theta_s": th_s})
    th_t = _theta(pair, model, X, True)
    th_s = _theta(later, model, X, True)
    gaps, bad = {}, None
    for n in tree.nodes_at(t):
        desc = tree.desc_at(n, s)
        if fl:
            agg = sum(float(tree.cond_prob(c, n)) * th_s[c] for c in desc)
        else:
            agg = _esum(_mul(tree.cond_prob(c, n), th_s[c]) for c in desc)
        gaps[n] = _gap(th_t[n], agg)
        if bad is None and not _ge(th_t[n], agg, tol):
            bad = {"node": n, "theta_t": th_t[n], "aggregated_theta_s": agg}
            wn = pair.w[n]
            if th_t[n] not in (INF, NEG_INF) and any(wn[:tree.m]):
                i = next(k for k in range(tree.m) if wn[k] > 0)
                u = [ZERO] * tree.d
                u[i] = th_t[n] / wn[i] if not fl else th_t[n] / float(wn[i])
                bad["u"] = tuple(u)
                if not fl:
                    from .polycalc import HalfspaceSet
                    Vt = HalfspaceSet(wn, th_t[n], tree.m).to_polyhedron()
                    EVs = HalfspaceSet(wn, agg, tree.m).to_polyhedron()
                    pt = Polyhedron.point(u, d=tree.d, mask=tree.m)
                    bad["reverified_polyhedral"] = (contains(Vt, pt)[0]
                                                   and not contains(EVs, pt)[0])
    return CheckReport("supermartingale_Vc", params, bad is None, gaps, bad,
                       time.perf_counter() - t0)


def _reverify_stacked(normal, th_t, th_s, u, m):
    """Rebuild both halfspaces as polyhedra on the stacked space and re-test."""
    nodes = sorted(normal)
    a = tuple(x for n in nodes for x in normal[n][:m])
    pt = tuple(x for n in nodes for x in u[n][:m])
    dim = len(a)
    if not any(a):
        return False
    Vt = Polyhedron.from_hrep([(a, th_t)], dim)
    EVs = Polyhedron.from_hrep([(a, th_s)], dim)
    P = Polyhedron.point(pt)
    return contains(Vt, P)[0] and not contains(EVs, P)[0]


# ---------------------------------------------------------------------------
# worst-case pairs


def _expected_loss(pair, X):
    """``E[w_t^T(Q, w) . (-X)]``."""
    tree = pair.tree
    wT = pair.w_at(tree.T)
    if isinstance(X[tree.leaves[0]][0], float):
        return -sum(float(tree.prob[l]) * sum(float(a) * b for a, b in zip(wT[l], X[l]))
                    for l in tree.leaves)
    return -sum((tree.prob[l] * _dot(wT[l], X[l]) for l in tree.leaves), ZERO)


def check_martingale_worstcase(pair, model, X, kind="V"):
    """Worst-case test at time 0 followed by the martingale property of ``V``.

    The pair is worst-case when ``rho_0(X; w) + b_0 = E[w_0^T . (-X)]``.  In
    that case ``theta_t`` must be constant in ``t``; each ``theta_t`` is also
    compared against the same expected loss (the per-time worst-case
    equality).
    """
    t0 = time.perf_counter()
    tree = model.tree
    fl = _is_float_model(model)
    tol = ENTROPIC_TOL if fl else 0
    if pair.t != 0:
        raise ValueError("worst-case pairs are anchored at time 0")
    loss = _expected_loss(pair, X)
    params = {"kind": kind}
    details = {"expected_loss": loss,
               "converse": "applicable" if tree.m == tree.d else "not applicable (m < d)"}
    b0 = beta(pair, model).b
    if b0 == INF:
        details["precondition"] = "beta_0 is empty"
        return CheckReport("martingale_worstcase", params, False, None,
                           {"precondition": "beta_0 empty"}, time.perf_counter() - t0, details)
    thetas = {}
    for t in range(tree.T + 1):
        pt = pair.propagate(t) if t else pair
        if kind == "V":
            thetas[t] = _theta(pt, model, X, False)
        else:
            th = _theta(pt, model, X, True)
            thetas[t] = th
    if kind == "V":
        worst = _eq(thetas[0], loss, tol)
        details["theta"] = thetas
        if not worst:
            details["precondition"] = "pair is not worst-case at time 0"
            return CheckReport("martingale_worstcase", params, False, _gap(thetas[0], loss),
                               {"precondition": "not worst-case", "theta_0": thetas[0]},
                               time.perf_counter() - t0, details)
        bad = next((t for t in thetas if not _eq(thetas[t], loss, tol)), None)
        gaps = {t: _gap(thetas[0], thetas[t]) for t in thetas}
        return CheckReport("martingale_worstcase", params, bad is None, gaps,
                           None if bad is None else {"time": bad, "theta": thetas[bad]},
                           time.perf_counter() - t0, details)
    # conditional: the node processes must aggregate exactly under Q
    gaps, bad = {}, None
    for t in range(tree.T):
        for n in tree.nodes_at(t):
            desc = tree.desc_at(n, t + 1)
            if fl:
                agg = sum(float(tree.cond_prob(c, n)) * thetas[t + 1][c] for c in desc)
            else:
                agg = _esum(_mul(tree.cond_prob(c, n), thetas[t + 1][c]) for c in desc)
            gaps[(t, n)] = _gap(thetas[t][n], agg)
            if bad is None and not _eq(thetas[t][n], agg, tol):
                bad = {"time": t, "node": n, "theta": thetas[t][n], "aggregated": agg}
    root_ok = _eq(thetas[0][0], loss, tol)
    if not root_ok and bad is None:
        bad = {"precondition": "not worst-case", "theta_0": thetas[0][0]}
    return CheckReport("martingale_worstcase_c", params, bad is None, gaps, bad,
                       time.perf_counter() - t0, details)


def _lp_rho(A, x, w, tree, K):
    """``inf {w . u : x + 1 (x) u in A}`` with dual extraction.

    ``A`` lives on ``K`` blocks of size ``d``.  Returns ``(status, value, u,
    Z)`` where ``Z`` is the block-space dual vector, i.e. the weights
    ``P(c|n) w_t^s(c)`` of the extracted pair.
    """
    d, m = tree.d, tree.m
    w = tuple(w[:m])
    if A.has_hrep or not A.has_vrep:
        G = [a for a, _ in A.ineqs] + [a for a, _ in A.eqs] + [tuple(-v for v in a)
                                                               for a, _ in A.eqs]
        h = [b for _, b in A.ineqs] + [b for _, b in A.eqs] + [-b for _, b in A.eqs]
        # dual: max (h - G x) . y  s.t.  sum_k G_{., (k,i)} y = w_i (i < m), y >= 0
        cost = [-(hb - _dot(g, x)) for g, hb in zip(G, h)]
        rows = [[sum((g[k * d + i] for k in range(K)), ZERO) for g in G] for i in range(m)]
        res = solve_standard(cost, rows, list(w))
        if res.status == UNBOUNDED:
            return "empty", INF, None, None
        if res.status == INFEASIBLE:
            R = Polyhedron.from_hrep([(_fold(a, K, d), b - _dot(a, x)) for a, b in zip(G, h)],
                                     d, m)
            if R.is_empty():
                return "empty", INF, None, None
            return "improper", NEG_INF, None, None
        y = res.x
        Z = [ZERO] * (d * K)
        for k, g in enumerate(G):
            if y[k]:
                for j, gv in enumerate(g):
                    if gv:
                        Z[j] += y[k] * gv
        u = tuple(-v for v in res.duals) + (ZERO,) * (d - m)
        return "optimal", -res.value, u, tuple(Z)
    # generator form: x + B u = sum mu_v v + sum lam_r r + sum nu_l l, sum mu = 1
    V, R, Ls = A.vertices, A.rays, A.lines
    nvar = m + len(V) + len(R) + 2 * len(Ls)
    c = list(w) + [ZERO] * (nvar - m)
    A_eq, b_eq = [], []
    for j in range(d * K):
        i = j % d
        row = [ZERO] * nvar
        if i < m:
            row[i] = ONE
        off = m
        for v in V:
            row[off] = -v[j]
            off += 1
        for r in R:
            row[off] = -r[j]
            off += 1
        for l in Ls:
            row[off] = -l[j]
            row[off + 1] = l[j]
            off += 2
        A_eq.append(row)
        b_eq.append(-x[j])
    A_eq.append([ZERO] * m + [ONE] * len(V) + [ZERO] * (nvar - m - len(V)))
    b_eq.append(ONE)
    res = lp_min(c, A_eq=A_eq, b_eq=b_eq, free=range(m))
    if res.status == INFEASIBLE:
        return "empty", INF, None, None
    if res.status == UNBOUNDED:
        return "improper", NEG_INF, None, None
    _, y_eq = res.duals
    u = tuple(res.x[:m]) + (ZERO,) * (d - m)
    return "optimal", res.value, u, tuple(y_eq[:d * K])


def _fold(a, K, d):
    return tuple(sum((a[k * d + i] for k in range(K)), ZERO) for i in range(d))


def extract_dual_pair(model, X, w, t, s=None):
    """Dual pair attaining ``rho_{t,s}(X; w)`` node by node, from LP duals.

    ``X`` is adapted at ``s`` (default ``T``) and ``w`` at ``t``.  At each
    time-``t`` node the dual optimum is a block vector ``Z >= 0`` over the
    time-``s`` descendants with ``sum_c Z_i(c) = w_i`` on eligible
    coordinates; ``Z_i / w_i`` is then the conditional law of ``Q_i`` on
    those descendants.  Non-eligible coordinates carry their own total mass
    as ``w_i`` (this is the ``m_perp`` part).  Transitions after ``s`` follow
    ``P``.  Returns ``(pair, values, points)``.
    """
    tree = model.tree
    s = tree.T if s is None else s
    if _is_float_model(model):
        if s != tree.T:
            raise ValueError("stepped entropic duals are not implemented")
        pair = _gibbs_pair(model, X, w)
        return pair, None, None
    d = tree.d
    masses = [dict() for _ in range(d)]
    wfull, values, points = {}, {}, {}
    for n in tree.nodes_at(t):
        A = model.acceptance(n) if s == tree.T else model.stepped_acceptance(n, s)
        desc = tree.desc_at(n, s)
        status, val, u, Z = _lp_rho(A, leaf_vector(X, n), w[n], tree, len(desc))
        if status == "improper":
            raise ValueError(f"rho is -inf at node {n} for this direction "
                             "(see scalarize.check_proper)")
        if status == "empty":
            raise ValueError(f"the risk set is empty at node {n}; no dual pair attains +inf")
        values[n], points[n] = val, u
        wn = []
        for i in range(d):
            tot = sum((Z[k * d + i] for k in range(len(desc))), ZERO)
            wi = w[n][i] if i < tree.m else tot
            wn.append(wi)
            for k, c in enumerate(desc):
                masses[i][c] = Z[k * d + i] / wi if wi > 0 else tree.cond_prob(c, n)
        wfull[n] = tuple(wn)
    Q = measure_from_masses(tree, masses, t, s)
    return DualPair(Q, NodeVector(tree, t, wfull), t), values, points


def find_worst_case_dual(model, X, w0):
    """Pair ``(Q, w)`` at time 0 attaining ``rho_0(X; w0)`` (LP duals or Gibbs tilt)."""
    w0 = tuple(w0)
    tree = model.tree
    w = NodeVector(tree, 0, {0: w0}, backend="exact")
    pair, _, _ = extract_dual_pair(model, X, w, 0)
    return pair


def measure_from_masses(tree, mass, t, s):
    """Transitions from conditional masses at time ``s`` below each time-``t`` node.

    Transitions between ``t`` and ``s`` come from the masses (``p`` where the
    parent mass vanishes); all others are those of ``P``.
    """
    q = []
    for mi in mass:
        node_mass = dict(mi)
        for u in range(s - 1, t - 1, -1):
            for n in tree.nodes_at(u):
                node_mass[n] = sum((node_mass[c] for c in tree.children[n]), ZERO)
        row = {}
        for n in range(1, tree.n_nodes):
            par = tree.parent[n]
            if t < tree.time[n] <= s and node_mass[par]:
                row[n] = node_mass[n] / node_mass[par]
            else:
                row[n] = tree.p[n]
        q.append(row)
    return VectorMeasure(tree, q)


def _gibbs_pair(model, X, w):
    """Entropic worst case: ``q_i(c|n) = p(c|n) exp(lam_i r_i(c)) / exp(lam_i r_i(n))``.

    Transitions are rounded to rationals (the last child takes the
    remainder so each row sums to one exactly).
    """
    from fractions import Fraction

    from ._rational import Rat

    tree = model.tree
    t = w.t
    r = model.corner_process(X)
    q = []
    for i in range(tree.d):
        lam = model.rates[i]
        row = {n: tree.p[n] for n in range(1, tree.n_nodes)}
        for u in range(t, tree.T):
            for n in tree.nodes_at(u):
                ch = tree.children[n]
                ws = [float(tree.p[c]) * math.exp(lam * (r[u + 1][c][i] - r[u][n][i]))
                      for c in ch]
                tot = sum(ws)
                vals = [Rat(Fraction(v / tot)) for v in ws[:-1]]
                vals.append(ONE - sum(vals, ZERO))
                row.update(zip(ch, vals))
        q.append(row)
    Q = VectorMeasure(tree, q)
    return DualPair(Q, w, t)


# ---------------------------------------------------------------------------
# direct MPTC


def _sum_support(parts, g):
    """Support of ``sum_k L_k(P_k)`` in direction ``g``; parts are (P, pullback)."""
    acc = ZERO
    for P, pull in parts:
        v = support_value(P, pull(g))
        acc = ext_add(acc, v) if v != NEG_INF else NEG_INF
        if acc == NEG_INF:
            return NEG_INF
    return acc


def _in_sum(parts_v, target, ray=False):
    """Is ``target`` in ``sum_k L_k(P_k)`` (or its recession cone when ``ray``)?

    ``parts_v`` lists ``(vertices, rays, lines)`` already mapped into the
    common space.  Solved as an LP feasibility problem.
    """
    cols, conv_groups = [], []
    for verts, rays, lines in parts_v:
        if not ray:
            start = len(cols)
            cols.extend(verts)
            conv_groups.append((start, len(cols)))
        cols.extend(rays)
        cols.extend(lines)
        cols.extend(tuple(-x for x in l) for l in lines)
    dim = len(target)
    A = [[col[j] for col in cols] for j in range(dim)]
    b = list(target)
    for start, end in conv_groups:
        A.append([ONE if start <= k < end else ZERO for k in range(len(cols))])
        b.append(ONE)
    if not cols:
        return all(v == 0 for v in target)
    res = solve_standard([ZERO] * len(cols), A, b)
    return res.status == OPTIMAL


def check_mptc_direct(model, X=None, t=0, s=None, spot_checks=True):
    """``A_t = A_{t,s} ⊕ A_s`` node by node, both containments certified.

    ``sum ⊆ A_t`` is checked facet by facet through support functions;
    ``A_t ⊆ sum`` generator by generator through LP feasibility.  With ``X``
    given, the recursion is spot-checked: for vertices ``Z`` of ``R_s(X)``
    the stepped set ``R_{t,s}(-Z)`` must lie inside ``R_t(X)``.
    """
    t0 = time.perf_counter()
    tree = model.tree
    s = t + 1 if s is None else s
    params = {"t": t, "s": s}
    details = {"nodes": {}}
    witness = None
    ok = True
    for n in tree.nodes_at(t):
        A = model.acceptance(n)
        step = model.stepped_acceptance(n, s)
        kids = tree.desc_at(n, s)
        parts = [(step, lambda g, n=n: _pull_expand(tree, n, s, g))]
        for c in kids:
            parts.append((model.acceptance(c), lambda g, c=c, n=n: _pull_embed(tree, n, c, g)))
        # sum ⊆ A
        fwd = None
        for a, b in A.ineqs:
            if not _ge(_sum_support(parts, a), b):
                fwd = {"direction": "sum not inside A_t", "node": n, "ineq": (a, b)}
                break
        if fwd is None:
            for a, b in A.eqs:
                if not (_ge(_sum_support(parts, a), b)
                        and _ge(_sum_support(parts, tuple(-x for x in a)), -b)):
                    fwd = {"direction": "sum not inside A_t", "node": n, "ineq": (a, b)}
                    break
        # A ⊆ sum
        mapped = [(tuple(_expand(tree, n, s, v) for v in step.vertices),
                   tuple(_expand(tree, n, s, r) for r in step.rays),
                   tuple(_expand(tree, n, s, l) for l in step.lines))]
        for c in kids:
            Ac = model.acceptance(c)
            mapped.append((tuple(_embed(tree, n, s, c, v) for v in Ac.vertices),
                           tuple(_embed(tree, n, s, c, r) for r in Ac.rays),
                           tuple(_embed(tree, n, s, c, l) for l in Ac.lines)))
        rev = None
        for v in A.vertices:
            if not _in_sum(mapped, v):
                rev = {"direction": "A_t not inside sum", "node": n, "kind": "vertex", "point": v}
                break
        if rev is None:
            for r in A.rays:
                if not _in_sum(mapped, r, ray=True):
                    rev = {"direction": "A_t not inside sum", "node": n, "kind": "ray",
                           "point": r}
                    break
        if rev is None:
            for l in A.lines:
                if not (_in_sum(mapped, l, ray=True)
                        and _in_sum(mapped, tuple(-x for x in l), ray=True)):
                    rev = {"direction": "A_t not inside sum", "node": n, "kind": "line",
                           "point": l}
                    break
        node_ok = fwd is None and rev is None
        details["nodes"][n] = {"sum_in_A": fwd is None, "A_in_sum": rev is None}
        if rev is not None and fwd is None:
            details["nodes"][n]["strict_inclusion"] = True
        if not node_ok and witness is None:
            witness = rev or fwd
            if rev is not None and fwd is None:
                witness["strict"] = True
        ok = ok and node_ok
    if X is not None and spot_checks:
        details["recursion_spot_check"] = _spot_check_recursion(model, X, t, s)
    return CheckReport("mptc_direct", params, ok, None, witness, time.perf_counter() - t0, details)


def _pull_expand(tree, n, s, g):
    """Adjoint of the copy-to-leaves map: leaf-space row -> reduced row."""
    from .riskmeasures import _lift_row
    return _lift_row(tree, n, s, g)


def _pull_embed(tree, n, c, g):
    """Restriction of a leaf-space row of ``n`` to the leaves of ``c``."""
    d = tree.d
    leaves = tree.leaves_under(n)
    pos = {l: k for k, l in enumerate(leaves)}
    out = []
    for l in tree.leaves_under(c):
        k = pos[l]
        out.extend(g[k * d:(k + 1) * d])
    return tuple(out)


def _spot_check_recursion(model, X, t, s):
    """``R_{t,s}(-Z) ⊆ R_t(X)`` for ``Z`` assembled from vertices of ``R_s(X)``."""
    tree = model.tree
    if not model.polyhedral:
        return None
    rp = _risk_process(model, X)
    results = []
    for n in tree.nodes_at(t):
        kids = tree.desc_at(n, s)
        choices = []
        for c in kids:
            P = rp.poly(s, c)
            if P.is_empty():
                choices = None
                break
            choices.append(P.vertices[:2])
        if choices is None:
            continue
        Rt = rp.poly(t, n)
        for k in range(2):
            Z = {c: ch[min(k, len(ch) - 1)] for c, ch in zip(kids, choices)}
            Zs = NodeVector(tree, s, {c: tuple(Z[c]) + (ZERO,) * (tree.d - len(Z[c]))
                                      for c in tree.nodes_at(s) if c in Z}
                            | {c: (ZERO,) * tree.d for c in tree.nodes_at(s) if c not in Z})
            step = model.stepped_acceptance(n, s)
            R_ts = risk_from_acceptance(step, -Zs, n)
            inside, _ = contains(Rt, R_ts)
            results.append({"node": n, "inside": inside})
    return results

