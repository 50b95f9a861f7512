"""Linear and conditional scalarizations with their dual representations.

``rho_t(X; w) = inf_{u in R_t(X)} E[w . u]`` decomposes node by node, so every
primal value is a probability-weighted sum of node supports.  Dual values
are ``E[(w + m_perp)_t^T . (-X)] - b_t(Q, w + m_perp)``; LP duality makes the
extracted pair attain the primal exactly.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from ._rational import INF, NEG_INF, ZERO, fmt
from .consistency import (_esum, _is_float_model, _mul, beta, beta_stepped, extract_dual_pair,
                          node_support)
from .duals import DualPair, OrthComplement, in_Wt
from .polycalc import _dot, recession_cone, support_point
from .riskmeasures import Entropic, risk_from_acceptance
from .scenario import NodeVector

__all__ = [
    "ScalarizationResult",
    "rho",
    "rho_dual_value",
    "rho_cond",
    "check_proper",
    "check_stepped_duality",
]


@dataclass
class ScalarizationResult:
    primal: object
    node_values: dict = field(default_factory=dict)
    u: dict | None = None
    pair: DualPair | None = None
    m_perp: OrthComplement | None = None
    dual: object = None
    gap: object = None
    details: dict = field(default_factory=dict)

    def to_json(self):
        def x(v):
            if v is None or isinstance(v, float):
                return v
            return fmt(v)

        return {
            "primal": x(self.primal),
            "node_values": {str(n): x(v) for n, v in self.node_values.items()},
            "dual": x(self.dual),
            "gap": x(self.gap),
            "pair": self.pair.to_json() if self.pair is not None else None,
        }


def _as_w(tree, w, t):
    if isinstance(w, NodeVector):
        if w.t != t:
            raise ValueError("w must be adapted at time t")
        return w
    return NodeVector.constant(tree, t, tuple(w))


def _split(pair_w, m):
    """``w + m_perp`` -> (eligible part, non-eligible part) as NodeVectors."""
    tree = pair_w.tree
    d = tree.d
    el = {n: tuple(v[:m]) + (ZERO,) * (d - m) for n, v in pair_w.items()}
    perp = {n: (ZERO,) * m + tuple(v[m:]) for n, v in pair_w.items()}
    return NodeVector(tree, pair_w.t, el), OrthComplement(NodeVector(tree, pair_w.t, perp))


def _aggregate(tree, vals, fl):
    if fl:
        return sum(float(tree.prob[n]) * v for n, v in vals.items())
    return _esum(_mul(tree.prob[n], v) for n, v in vals.items())


def rho_cond(model, X, w, t):
    """Node-wise ``essinf_{u in R_t(X)} w . u``."""
    tree = model.tree
    return node_support(model, X, t, _as_w(tree, w, t))


def rho(model, X, w, t=0, with_dual=True):
    """``rho_t(X; w)`` with an optimal ``u`` per node and the LP-extracted dual pair.

    Box families are evaluated at their corners; polyhedral ones through the
    node LPs.  The dual pair is only extracted when the value is finite.
    """
    tree = model.tree
    w = _as_w(tree, w, t)
    fl = _is_float_model(model)
    vals = node_support(model, X, t, w)
    primal = _aggregate(tree, vals, fl)
    res = ScalarizationResult(primal, vals)
    if not with_dual or primal in (INF, NEG_INF):
        return res
    pair, _, points = extract_dual_pair(model, X, w, t)
    res.pair = pair
    res.u = points
    el, perp = _split(pair.w, tree.m)
    res.m_perp = perp
    res.dual = rho_dual_value(model, X, el, pair, perp, t)
    res.gap = primal - res.dual
    return res


def rho_dual_value(model, X, w, pair, m_perp=None, t=None):
    """``E[(w + m_perp)_t^T . (-X)] - b_t(Q, w + m_perp)``.

    The measure is taken from ``pair``; its ``w`` must match ``w + m_perp``.
    Always at most :func:`rho` (weak duality); ``-inf`` when the penalty is
    empty.
    """
    tree = model.tree
    t = pair.t if t is None else t
    w = _as_w(tree, w, t)
    if m_perp is None:
        m_perp = OrthComplement.zero(tree, t)
    if tree.m == tree.d and any(any(v) for v in m_perp.m_perp.values()):
        raise ValueError("m_perp must vanish when every asset is eligible")
    full = w + m_perp.m_perp
    if any(tuple(pair.w[n]) != tuple(full[n]) for n in full):
        raise ValueError("pair.w does not equal w + m_perp")
    ok = in_Wt(pair)
    if not ok:
        raise ValueError(f"invalid pair: {ok.clause}")
    b = beta(pair, model).b
    if b == INF:
        return NEG_INF
    return _expected(pair, X, tree.T, _is_float_model(model)) - b


def _expected(pair, X, s, fl):
    """``E[w_t^s . (-X)]`` for ``X`` adapted at ``s``."""
    tree = pair.tree
    ws = pair.w_at(s)
    if fl:
        return -sum(float(tree.prob[c]) * sum(float(a) * float(b) for a, b in zip(ws[c], X[c]))
                    for c in tree.nodes_at(s))
    return -sum((tree.prob[c] * _dot(ws[c], X[c]) for c in tree.nodes_at(s)), ZERO)


def check_proper(model, w, t):
    """``w(n)`` lies in the dual cone of ``recc R_t(0)(n)`` at every time-``t`` node."""
    tree = model.tree
    w = _as_w(tree, w, t)
    m = tree.m
    if isinstance(model, Entropic):
        # float boxes: the recession cone is the orthant
        return all(x >= 0 for v in w.values() for x in v[:m])
    zero = NodeVector.constant(tree, tree.T, (ZERO,) * tree.d)
    sets = model.risk(zero, t)
    for n in tree.nodes_at(t):
        C = recession_cone(sets[n])
        wn = tuple(w[n])
        if any(_dot(wn, r) < 0 for r in C.rays) or any(_dot(wn, l) != 0 for l in C.lines):
            return False
    return True


def check_stepped_duality(model, X, w, t, s, pairs=()):
    """Stepped primal ``inf over R_{t,s}(X)`` against the stepped dual.

    ``X`` is adapted at ``s``.  The LP-extracted pair attains the primal;
    for every extra pair in ``pairs`` (valid at ``t``) the stepped dual value
    is at least the full dual value of the lifted position, since the stepped
    acceptance set is smaller.
    """
    tree = model.tree
    if X.t != s:
        raise ValueError("X must be adapted at s")
    if _is_float_model(model):
        raise TypeError("stepped duality is implemented for polyhedral families")
    w = _as_w(tree, w, t)
    vals, u = {}, {}
    for n in tree.nodes_at(t):
        R = risk_from_acceptance(model.stepped_acceptance(n, s), X, n)
        vals[n], u[n] = support_point(R, w[n])
    primal = _aggregate(tree, vals, False)
    res = ScalarizationResult(primal, vals, u)
    if primal in (INF, NEG_INF):
        return res
    pair, _, _ = extract_dual_pair(model, X, w, t, s)
    res.pair = pair
    res.dual = _stepped_dual(model, X, pair, t, s)
    res.gap = primal - res.dual
    XT = X.lift(tree.T)
    comparisons = []
    for p in pairs:
        sd = _stepped_dual(model, X, p, t, s)
        b = beta(p, model).b
        fd = NEG_INF if b == INF else _expected(p, XT, tree.T, False) - b
        comparisons.append({"stepped": sd, "full": fd, "ok": sd == INF or fd == NEG_INF
                            or (sd not in (NEG_INF,) and sd >= fd)})
    res.details["inclusion"] = comparisons
    res.details["inclusion_ok"] = all(c["ok"] for c in comparisons)
    return res


def _stepped_dual(model, X, pair, t, s):
    b = beta_stepped(pair, model, t, s).b
    if b == INF:
        return NEG_INF
    return _expected(pair, X, s, False) - b

