"""Dual pairs ``(Q, w)``: membership tests and deterministic sampling."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._rational import ONE, ZERO, Rat, fmt, to_rat
from .polycalc import _dot
from .scenario import NodeVector, VectorMeasure, w_ts, xi_node

__all__ = [
    "DualPair",
    "OrthComplement",
    "Verdict",
    "in_Wt",
    "in_Wt_max",
    "in_Wt_avar",
    "in_W_shp",
    "sample_dual_pairs",
]


@dataclass(frozen=True)
class Verdict:
    """Boolean outcome plus the first failing clause (and a witness if any)."""

    ok: bool
    clause: str = ""
    witness: object = None

    def __bool__(self):
        return self.ok


@dataclass(frozen=True)
class DualPair:
    Q: VectorMeasure
    w: NodeVector
    t: int

    def __post_init__(self):
        if self.w.t != self.t:
            raise ValueError("w must be adapted at the pair's time")
        if self.Q.tree != self.w.tree:
            raise ValueError("Q and w live on different trees")

    @property
    def tree(self):
        return self.w.tree

    def w_at(self, s):
        """``w_t^s(Q, w)``."""
        return w_ts(self.Q, self.w, s)

    def propagate(self, s):
        """The pair ``(Q', w_t^s(Q, w))`` at time ``s``.

        ``Q'`` agrees with ``P`` up to ``s`` and with ``Q`` afterwards, which
        is all that penalties at ``s`` ever look at.
        """
        tree = self.tree
        q = []
        for qi in self.Q.q:
            row = dict(qi)
            for u in range(1, s + 1):
                for n in tree.nodes_at(u):
                    row[n] = tree.p[n]
            q.append(row)
        return DualPair(VectorMeasure(tree, q), self.w_at(s), s)

    def to_json(self):
        return {"t": self.t, "w": {str(n): [fmt(x) for x in self.w[n]] for n in self.w},
                "Q": self.Q.to_json()}

    @classmethod
    def from_json(cls, tree, obj):
        t = obj["t"]
        w = NodeVector(tree, t, {int(k): v for k, v in obj["w"].items()})
        Q = VectorMeasure.from_json(tree, obj["Q"])
        return cls(Q, w, t)


@dataclass(frozen=True)
class OrthComplement:
    """``m_perp``: an ``F_t``-measurable vector on the non-eligible coordinates."""

    m_perp: NodeVector

    def __post_init__(self):
        m = self.m_perp.tree.m
        for n in self.m_perp:
            if any(self.m_perp[n][:m]):
                raise ValueError("m_perp must vanish on the eligible coordinates")

    @classmethod
    def zero(cls, tree, t):
        return cls(NodeVector.constant(tree, t, (ZERO,) * tree.d))


def in_Wt(pair):
    """Membership in the dual set at time ``t``, clause by clause."""
    tree = pair.tree
    m = tree.m
    w = pair.w
    for n in w:
        if any(x < 0 for x in w[n][:m]):
            return Verdict(False, "w not in (M_+)^+: negative eligible entry", n)
    if all(not any(w[n][:m]) for n in w):
        return Verdict(False, "w in M^perp: eligible part vanishes")
    wT = pair.w_at(tree.T)
    for l in wT:
        if any(x < 0 for x in wT[l]):
            return Verdict(False, "w_t^T(Q, w) not nonnegative", l)
    if not pair.Q.equals_reference_on(pair.t):
        return Verdict(False, "Q differs from P on F_t")
    return Verdict(True)


def in_Wt_max(pair, model):
    """``w_t^T(Q, w)`` in the dual cone of the (conical) acceptance set ``A_t``.

    Checked generator by generator: ``E[w_t^T . Y] >= 0`` for every extreme
    ray ``Y`` of every ``A_t(n)`` and ``= 0`` along its lines.
    """
    base = in_Wt(pair)
    if not base:
        return base
    tree = pair.tree
    wT = pair.w_at(tree.T)
    for n in tree.nodes_at(pair.t):
        A = model.acceptance(n)
        if any(any(v) for v in A.vertices):
            raise ValueError("acceptance set is not a cone; use the penalty route")
        c = _leaf_weights(tree, n, wT)
        for Y in A.rays:
            if _dot(c, Y) < 0:
                return Verdict(False, "E[w_t^T . Y] < 0 for a generator of A_t", (n, Y))
        for Y in A.lines:
            if _dot(c, Y) != 0:
                return Verdict(False, "E[w_t^T . Y] != 0 along a line of A_t", (n, Y))
    return Verdict(True)


def _leaf_weights(tree, n, wT):
    out = []
    for l in tree.leaves_under(n):
        p = tree.cond_prob(l, n)
        out.extend(p * x for x in wT[l])
    return tuple(out)


def in_Wt_avar(pair, levels):
    """Per component and step: ``w_i = 0`` or ``xi_{s,s+1}(Q_i) <= 1/lam_i``.

    The level used at a step is the one attached to the node the step leaves
    from.  ``levels`` maps internal nodes to per-component levels (or is a
    single scalar).
    """
    base = in_Wt(pair)
    if not base:
        return base
    tree = pair.tree
    Q = pair.Q
    for s in range(pair.t, tree.T):
        ws = pair.w_at(s)
        for a in tree.nodes_at(s):
            lv = levels[a] if isinstance(levels, dict) else levels
            if not isinstance(lv, (tuple, list)):
                lv = (lv,) * tree.d
            for i in range(tree.d):
                if ws[a][i] == 0:
                    continue
                cap = ONE / to_rat(lv[i])
                for c in tree.children[a]:
                    if xi_node(Q, a, c)[i] > cap:
                        return Verdict(False, f"xi exceeds 1/lambda in component {i}", (a, c))
    return Verdict(True)


def in_W_shp(pair, market):
    """``w_t^s(Q, w)(n)`` in the dual cone of ``K(n)`` for every node after ``t``."""
    base = in_Wt(pair)
    if not base:
        return base
    tree = pair.tree
    for s in range(pair.t, tree.T + 1):
        ws = pair.w_at(s)
        for n in tree.nodes_at(s):
            K = market[n] if isinstance(market, dict) else market
            for g in K.rays:
                if _dot(g, ws[n]) < 0:
                    return Verdict(False, "w_t^s not in K^+", (n, g))
            for g in K.lines:
                if _dot(g, ws[n]) != 0:
                    return Verdict(False, "w_t^s not orthogonal to a line of K", (n, g))
    return Verdict(True)


def _directions(m):
    """Nonzero 0/1 vectors on the eligible coordinates, in counting order."""
    return [tuple((k >> i) & 1 for i in range(m)) for k in range(1, 2 ** m)]


def _perturbed(tree, t, rng, radius):
    """Rational perturbation of ``p`` after time ``t`` (mass within ``p(1 +- 2r)``)."""
    q = {}
    for n in range(1, tree.n_nodes):
        q[n] = tree.p[n]
    for s in range(t, tree.T):
        for a in tree.nodes_at(s):
            ch = tree.children[a]
            ks = [int(v) for v in rng.integers(-8, 9, size=len(ch))]
            mean = sum((tree.p[c] * k for c, k in zip(ch, ks)), ZERO)
            for c, k in zip(ch, ks):
                q[c] = tree.p[c] * (ONE + radius * (k - mean) / 8)
    return q


def sample_dual_pairs(tree, t, count, seed, radius=Rat(1, 4), directions=None):
    """Deterministic battery of pairs in the dual set at time ``t``.

    The first pair is ``(P, 1)``.  The rest use one child stream of
    ``SeedSequence(seed)`` each, so any prefix of the battery is identical
    across runs and independent of ``count``.  Every pair is equivalent to
    ``P`` and passes :func:`in_Wt`.
    """
    radius = to_rat(radius)
    m = tree.m
    dirs = directions or _directions(m)
    one = tuple([ONE] * m + [ZERO] * (tree.d - m))
    out = [DualPair(VectorMeasure.reference(tree), NodeVector.constant(tree, t, one), t)]
    children = np.random.SeedSequence(seed).spawn(max(count - 1, 0))
    for k, ss in enumerate(children):
        rng = np.random.default_rng(ss)
        q = [_perturbed(tree, t, rng, radius) for _ in range(tree.d)]
        dvec = dirs[k % len(dirs)]
        wv = {}
        for n in tree.nodes_at(t):
            wts = [int(x) for x in rng.integers(1, 5, size=m)]
            wv[n] = tuple([Rat(b * x) for b, x in zip(dvec, wts)] + [ZERO] * (tree.d - m))
        pair = DualPair(VectorMeasure(tree, q), NodeVector(tree, t, wv), t)
        assert in_Wt(pair), "sampler produced a pair outside the dual set"
        out.append(pair)
    return out[:count]
