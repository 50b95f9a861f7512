"""Set-valued conditional risk measures on a scenario tree.

Every polyhedral model exposes its acceptance set at a node ``n`` as a
polyhedron in *leaf space*: one ``d``-block per leaf under ``n``, in the
order of ``tree.leaves_under(n)``.  Stepped sets use the same layout over
the time-``s`` descendants of ``n`` ("reduced coordinates").

Families:

* :class:`AVaR`: composed (recursive) or vanilla average value at risk with
  levels given per internal node and component;
* :class:`Entropic`: the restrictive entropic measure (float backend, closed
  form corners);
* :class:`SHP`: superhedging under proportional transaction costs;
* :class:`CustomOneStep`: arbitrary polyhedral one-step acceptance sets,
  composed backwards.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import _kernels
from ._rational import ONE, ZERO, Rat, fmt, integer_row, to_rat
from .polycalc import (Polyhedron, _dot, _fme, intersect, is_upper, minkowski_sum)
from .scenario import EXACT, FLOAT, NodeVector, ScenarioTree

__all__ = [
    "RiskModel",
    "AVaR",
    "Entropic",
    "SHP",
    "CustomOneStep",
    "SetProcess",
    "avar_loss",
    "avar_scalar_cond",
    "capped_simplex_extremes",
    "risk_avar",
    "risk_entropic",
    "risk_shp",
    "compose",
    "compose_generic",
    "acceptance_set",
    "stepped_acceptance",
    "risk_from_acceptance",
    "leaf_vector",
]


# ---------------------------------------------------------------------------
# leaf-space helpers


def leaf_vector(X, n, s=None):
    """Flatten the values of ``X`` below node ``n`` into a leaf-space tuple."""
    tree = X.tree
    s = X.t if s is None else s
    out = []
    for c in tree.desc_at(n, s):
        out.extend(X[c])
    return tuple(out)


def _lift_row(tree, n, s, row):
    """Row over the leaves under ``n`` -> row over the time-``s`` descendants."""
    d = tree.d
    leaves = tree.leaves_under(n)
    pos = {l: k for k, l in enumerate(leaves)}
    out = []
    for c in tree.desc_at(n, s):
        acc = [ZERO] * d
        for l in tree.leaves_under(c):
            base = pos[l] * d
            for i in range(d):
                v = row[base + i]
                if v:
                    acc[i] += v
        out.extend(acc)
    return tuple(out)


def _broadcast_ray(tree, n, m_node, vec):
    """Place ``vec`` on every leaf below ``m_node`` inside the leaf space of ``n``."""
    d = tree.d
    leaves = tree.leaves_under(n)
    under = set(tree.leaves_under(m_node))
    out = []
    for l in leaves:
        out.extend(vec if l in under else (ZERO,) * d)
    return tuple(out)


def _embed(tree, n, s, c, vec):
    """Embed a vector over the leaves of ``c`` into the leaf space of ``n``."""
    d = tree.d
    leaves = tree.leaves_under(n)
    mine = tree.leaves_under(c)
    pos = {l: k for k, l in enumerate(mine)}
    out = []
    for l in leaves:
        if l in pos:
            k = pos[l]
            out.extend(vec[k * d:(k + 1) * d])
        else:
            out.extend((ZERO,) * d)
    return tuple(out)


def _orthant_rows(dim):
    return [(tuple(ONE if i == j else ZERO for j in range(dim)), ZERO) for i in range(dim)]


# ---------------------------------------------------------------------------
# AV@R scalar pieces


def avar_loss(pairs, lam):
    """AV@R of a loss distribution given as ``[(prob, loss), ...]`` at level ``lam``.

    Rockafellar-Uryasev: ``min_q q + E[(L - q)^+] / lam``.  The objective is
    piecewise linear and convex in ``q`` with kinks at the atoms, so the
    minimum over the atoms is exact.
    """
    lam = lam if type(lam) is type(ONE) or isinstance(lam, float) else to_rat(lam)
    best = None
    for _, q in pairs:
        val = q + sum((p * (x - q) for p, x in pairs if x > q), ZERO) / lam
        if best is None or val < best:
            best = val
    return best


def avar_scalar_cond(tree, x, lam, t):
    """Node-wise ``AV@R_lam`` at time ``t`` of the scalar position ``x``.

    ``x`` maps the time-``s`` nodes to scalars; ``lam`` is a scalar or a map
    from time-``t`` nodes to levels.
    """
    s = tree.time[next(iter(x))]
    out = {}
    for n in tree.nodes_at(t):
        lv = lam[n] if isinstance(lam, dict) else lam
        pairs = [(tree.cond_prob(c, n), -x[c]) for c in tree.desc_at(n, s)]
        out[n] = avar_loss(pairs, lv)
    return out


def capped_simplex_extremes(p, lam):
    """Extreme points of ``{z in [0, 1/lam]^k : sum_c p_c z_c = 1}``."""
    cap = ONE / lam
    k = len(p)
    out = set()
    for j in range(k):
        others = [c for c in range(k) if c != j]
        for bits in itertools.product((ZERO, cap), repeat=k - 1):
            rest = ONE - sum((p[c] * b for c, b in zip(others, bits)), ZERO)
            zj = rest / p[j]
            if ZERO <= zj <= cap:
                z = [ZERO] * k
                for c, b in zip(others, bits):
                    z[c] = b
                z[j] = zj
                out.add(tuple(z))
    return sorted(out)


# ---------------------------------------------------------------------------
# set processes


@dataclass
class SetProcess:
    """Per time and node: a polyhedron, or a box corner (``corner + M_+``)."""

    tree: ScenarioTree
    kind: str  # "poly" or "box"
    backend: str = EXACT
    data: dict = field(default_factory=dict)
    mask: int | None = None

    def __getitem__(self, t):
        return self.data[t]

    @property
    def times(self):
        return sorted(self.data)

    def corner(self, t, n):
        if self.kind != "box":
            raise TypeError("not a box process")
        return self.data[t][n]

    def poly(self, t, n):
        v = self.data[t][n]
        if self.kind == "poly":
            return v
        if self.backend != EXACT:
            raise TypeError("float boxes have no exact polyhedron")
        return Polyhedron.orthant(self.tree.d, self.mask, corner=v)

    def to_json(self):
        out = {"kind": self.kind, "backend": self.backend, "times": {}}
        for t in self.times:
            sl = {}
            for n, v in sorted(self.data[t].items()):
                if self.kind == "box":
                    sl[str(n)] = list(v) if self.backend == FLOAT else [fmt(x) for x in v]
                else:
                    sl[str(n)] = v.to_json()
            out["times"][str(t)] = sl
        return out


# ---------------------------------------------------------------------------
# models


class RiskModel:
    """Base class; polyhedral subclasses implement :meth:`_acceptance`."""

    kind = "abstract"
    polyhedral = True
    coherent = False
    conditionally_coherent = False
    recursive = True

    def __init__(self, tree):
        self.tree = tree
        self._acc_cache = {}
        self._step_cache = {}

    @property
    def d(self):
        return self.tree.d

    @property
    def m(self):
        return self.tree.m

    # acceptance sets ------------------------------------------------------
    def acceptance(self, n):
        """``A_t(n)`` in the leaf space of ``n``."""
        if not self.polyhedral:
            raise TypeError(f"{self.kind} acceptance sets are not polyhedral")
        if n not in self._acc_cache:
            self._acc_cache[n] = self._acceptance(n)
        return self._acc_cache[n]

    def _acceptance(self, n):  # pragma: no cover - abstract
        raise NotImplementedError

    def stepped_acceptance(self, n, s):
        """``A_{t,s}(n)``: the F_s-measurable part of ``A_t(n)``, reduced coordinates."""
        key = (n, s)
        if key not in self._step_cache:
            tree = self.tree
            A = self.acceptance(n)
            dim = tree.d * len(tree.desc_at(n, s))
            if s == tree.T:
                self._step_cache[key] = A
            else:
                rows = [(_lift_row(tree, n, s, a), b) for a, b in A.ineqs]
                eqs = [(_lift_row(tree, n, s, a), b) for a, b in A.eqs]
                self._step_cache[key] = Polyhedron.from_hrep(rows, dim, eqs=eqs)
        return self._step_cache[key]

    def one_step(self, n):
        return self.stepped_acceptance(n, self.tree.time[n] + 1)

    # risk -----------------------------------------------------------------
    def risk(self, X, t):
        """``R_t(X)`` node-wise (dict node -> Polyhedron in ``R^d`` with mask ``m``)."""
        return {n: risk_from_acceptance(self.acceptance(n), X, n) for n in self.tree.nodes_at(t)}

    def risk_process(self, X):
        tree = self.tree
        sp = SetProcess(tree, "poly", EXACT, mask=tree.m)
        for t in range(tree.T + 1):
            sp.data[t] = self.risk(X, t)
        return sp

    def to_json(self):  # pragma: no cover - overridden
        return {"kind": self.kind}


def _levels(tree, levels):
    """Normalize AV@R levels to ``{internal node: tuple of d Rats}``."""
    out = {}
    for a in range(tree.n_nodes):
        if not tree.children[a]:
            continue
        lv = levels[a] if isinstance(levels, dict) else levels
        if not isinstance(lv, (tuple, list)):
            lv = (lv,) * tree.d
        lv = tuple(to_rat(x) for x in lv)
        if len(lv) != tree.d or any(not (ZERO < x <= ONE) for x in lv):
            raise ValueError(f"AV@R levels at node {a} must be d values in (0, 1]")
        out[a] = lv
    return out


class AVaR(RiskModel):
    """Average value at risk, composed over the tree or applied in one shot.

    Composed: ``r_T = -X`` and ``r_t(n) = AV@R_{lam(n)}(-r_{t+1})`` on the
    children.  Vanilla: ``r_t(n) = AV@R_{lam(n)}(X)`` over the leaves under
    ``n`` directly; this is not recursive in general.
    """

    coherent = True
    conditionally_coherent = True

    def __init__(self, tree, levels, composed=True):
        super().__init__(tree)
        self.levels = _levels(tree, levels)
        self.composed = composed
        self.recursive = composed
        self.kind = "avar" if composed else "avar_vanilla"

    # dual densities -------------------------------------------------------
    def _step_extremes(self, a, i):
        tree = self.tree
        return capped_simplex_extremes([tree.p[c] for c in tree.children[a]],
                                       self.levels[a][i])

    def composed_densities(self, n, i):
        """Products of per-step extreme densities below ``n`` (leaf -> density)."""
        tree = self.tree
        if not tree.children[n]:
            return [{n: ONE}]
        ch = tree.children[n]
        subs = [self.composed_densities(c, i) for c in ch]
        out = []
        for z in self._step_extremes(n, i):
            for combo in itertools.product(*subs):
                dens = {}
                for zc, sub in zip(z, combo):
                    for l, v in sub.items():
                        dens[l] = zc * v
                out.append(dens)
        return out

    def vanilla_densities(self, n, i):
        tree = self.tree
        leaves = tree.leaves_under(n)
        if not tree.children[n]:
            return [{n: ONE}]
        p = [tree.cond_prob(l, n) for l in leaves]
        return [dict(zip(leaves, z)) for z in capped_simplex_extremes(p, self.levels[n][i])]

    def _acceptance(self, n):
        tree = self.tree
        d = tree.d
        leaves = tree.leaves_under(n)
        dim = d * len(leaves)
        if not tree.children[n]:
            return Polyhedron.from_hrep(_orthant_rows(d), d)
        rows = set()
        for i in range(d):
            dens = self.composed_densities(n, i) if self.composed else self.vanilla_densities(n, i)
            for z in dens:
                row = [ZERO] * dim
                for k, l in enumerate(leaves):
                    row[k * d + i] = tree.cond_prob(l, n) * z[l]
                if any(row):
                    rows.add(_primitive(row))
        return Polyhedron.from_hrep([(r, ZERO) for r in sorted(rows)], dim)

    # corners --------------------------------------------------------------
    def corners(self, X, t):
        """Box corners ``r_t(n)`` with ``R_t(X)(n) = r_t(n) + R^d_+``."""
        tree = self.tree
        if self.composed:
            return self.corner_process(X)[t]
        out = {}
        for n in tree.nodes_at(t):
            if not tree.children[n]:
                out[n] = tuple(-x for x in X[n])
                continue
            pairs_i = [[(tree.cond_prob(l, n), -X[l][i]) for l in tree.leaves_under(n)]
                       for i in range(tree.d)]
            out[n] = tuple(avar_loss(pairs_i[i], self.levels[n][i]) for i in range(tree.d))
        return out

    def corner_process(self, X):
        tree = self.tree
        if X.t != tree.T:
            raise ValueError("X must be terminal")
        r = {tree.T: {l: tuple(-x for x in X[l]) for l in tree.leaves}}
        for t in range(tree.T - 1, -1, -1):
            if not self.composed:
                r[t] = self.corners(X, t)
                continue
            nxt = r[t + 1]
            cur = {}
            for n in tree.nodes_at(t):
                ch = tree.children[n]
                cur[n] = tuple(avar_loss([(tree.p[c], nxt[c][i]) for c in ch], self.levels[n][i])
                               for i in range(tree.d))
            r[t] = cur
        return r

    def risk(self, X, t):
        if self.m == self.d:
            return {n: Polyhedron.orthant(self.d, corner=c) for n, c in self.corners(X, t).items()}
        return super().risk(X, t)

    def risk_process(self, X):
        tree = self.tree
        if self.m != self.d:
            return super().risk_process(X)
        sp = SetProcess(tree, "box", EXACT, mask=tree.m)
        cp = self.corner_process(X)
        for t in range(tree.T + 1):
            sp.data[t] = cp[t]
        return sp

    def to_json(self):
        return {"kind": "avar", "composed": self.composed,
                "levels": {str(a): [fmt(x) for x in lv] for a, lv in sorted(self.levels.items())}}


def _primitive(row):
    return tuple(Rat(v) for v in integer_row(row))


class Entropic(RiskModel):
    """Restrictive entropic risk measure (float backend)."""

    kind = "entropic"
    polyhedral = False
    coherent = False

    def __init__(self, tree, rates):
        super().__init__(tree)
        if not isinstance(rates, (tuple, list)):
            rates = (rates,) * tree.d
        if len(rates) != tree.d:
            raise ValueError("need one rate per component")
        self.rates = tuple(float(Rat(r) if isinstance(r, str) else r) for r in rates)
        if any(not r > 0 for r in self.rates):
            raise ValueError("entropic rates must be positive")
        if tree.m != tree.d:
            raise ValueError("the entropic box representation needs m = d")

    @cached_property
    def _arrays(self):
        tree = self.tree
        idx = {}
        for t in range(tree.T + 1):
            for k, n in enumerate(tree.nodes_at(t)):
                idx[n] = k
        return idx

    def _terminal(self, X):
        tree = self.tree
        return np.array([[-float(x) for x in X[l]] for l in tree.leaves])

    def corners_direct(self, X, t):
        """``r_t(n) = (1/lam) log E[exp(-lam X) | n]`` straight from the leaves."""
        tree = self.tree
        idx = self._arrays
        vals = self._terminal(X)
        lam = np.array(self.rates)
        nodes = tree.nodes_at(t)
        group = np.array([idx[tree.anc(l, t)] for l in tree.leaves])
        logp = np.array([math.log(tree.cond_prob(l, tree.anc(l, t))) for l in tree.leaves])
        out = _kernels.grouped_lse(vals, group, logp, lam, len(nodes))
        return {n: tuple(float(v) for v in out[idx[n]]) for n in nodes}

    def corner_process(self, X):
        """Backward composition ``r_t = (1/lam) log E[exp(lam r_{t+1}) | F_t]``."""
        tree = self.tree
        idx = self._arrays
        lam = np.array(self.rates)
        cur = self._terminal(X)
        r = {tree.T: {l: tuple(float(v) for v in cur[idx[l]]) for l in tree.leaves}}
        for t in range(tree.T - 1, -1, -1):
            kids = tree.nodes_at(t + 1)
            group = np.array([idx[tree.parent[c]] for c in kids])
            logp = np.array([math.log(tree.p[c]) for c in kids])
            cur = _kernels.grouped_lse(cur, group, logp, lam, len(tree.nodes_at(t)))
            r[t] = {n: tuple(float(v) for v in cur[idx[n]]) for n in tree.nodes_at(t)}
        return r

    def corners(self, X, t):
        return self.corner_process(X)[t]

    def risk(self, X, t):
        raise TypeError("entropic sets are float boxes; use corners()")

    def risk_process(self, X):
        sp = SetProcess(self.tree, "box", FLOAT, mask=self.tree.m)
        sp.data = self.corner_process(X)
        return sp

    def to_json(self):
        return {"kind": "entropic", "rates": list(self.rates)}


class SHP(RiskModel):
    """Superhedging with proportional transaction costs: ``R_t(X) = SHP_t(-X)``.

    ``market`` maps every node to its solvency set ``K(n)``, a polyhedron in
    ``R^d`` containing ``R^d_+`` (a cone, or a convex region).
    """

    kind = "shp"

    def __init__(self, tree, market):
        super().__init__(tree)
        self.market = {}
        for n in range(tree.n_nodes):
            K = market[n] if isinstance(market, dict) else market
            if K.d != tree.d or K.mask != tree.d:
                raise ValueError("solvency sets live in the full R^d")
            if not is_upper(K) or K.is_empty():
                raise ValueError(f"solvency set at node {n} must contain R^d_+")
            self.market[n] = K
        self.conic = all(all(not any(v) for v in K.vertices) and not K.lines
                         for K in self.market.values())
        self.coherent = self.conic
        self.conditionally_coherent = self.conic

    def _acceptance(self, n):
        tree = self.tree
        d = tree.d
        dim = d * len(tree.leaves_under(n))
        rays, lines, vert_sets = [], [], []
        for t in range(tree.time[n], tree.T + 1):
            for mnode in tree.desc_at(n, t):
                K = self.market[mnode]
                rays.extend(_broadcast_ray(tree, n, mnode, r) for r in K.rays)
                lines.extend(_broadcast_ray(tree, n, mnode, l) for l in K.lines)
                vert_sets.append([_broadcast_ray(tree, n, mnode, v) for v in K.vertices])
        verts = set()
        for combo in itertools.product(*vert_sets):
            verts.add(tuple(sum(col, ZERO) for col in zip(*combo)))
        return Polyhedron.from_vrep(sorted(verts), rays, lines, d=dim)

    def shp_process(self, Y):
        """Backward recursion for ``SHP_t(Y)`` in full ``R^d`` (no eligibility)."""
        tree = self.tree
        out = {tree.T: {}}
        for l in tree.leaves:
            K = self.market[l]
            out[tree.T][l] = minkowski_sum(Polyhedron.point(Y[l]), K).canonical()
        for t in range(tree.T - 1, -1, -1):
            cur = {}
            for n in tree.nodes_at(t):
                inter = None
                for c in tree.children[n]:
                    S = out[t + 1][c]
                    inter = S if inter is None else intersect(inter, S)
                inter = inter.canonical()
                if inter.is_empty():
                    P = Polyhedron.empty(tree.d)
                    P.note = f"no superhedge at node {n}"
                    cur[n] = P
                    continue
                cur[n] = minkowski_sum(inter, self.market[n]).canonical()
            out[t] = cur
        return out

    def risk_process(self, X):
        tree = self.tree
        shp = self.shp_process(-X)
        sp = SetProcess(tree, "poly", EXACT, mask=tree.m)
        for t, sl in shp.items():
            sp.data[t] = {n: _restrict_eligible(P, tree.m) for n, P in sl.items()}
        return sp

    def risk(self, X, t):
        return self.risk_process(X)[t]

    def to_json(self):
        return {"kind": "shp",
                "market": {str(n): K.to_json() for n, K in sorted(self.market.items())}}


def _restrict_eligible(P, m):
    """``P ∩ M`` as a polyhedron with mask ``m``."""
    if P.is_empty():
        return Polyhedron.empty(P.d, m)
    return Polyhedron.from_hrep(P.ineqs, P.d, m, eqs=P.eqs)


class CustomOneStep(RiskModel):
    """Composed model built from per-node one-step acceptance sets.

    ``one_step[n]`` is a polyhedron over the children of internal node ``n``
    (reduced coordinates).  The terminal acceptance set is ``R^d_+``.
    """

    kind = "custom"
    coherent = False

    def __init__(self, tree, one_step):
        super().__init__(tree)
        self.steps = {}
        for n in range(tree.n_nodes):
            if not tree.children[n]:
                continue
            A = one_step[n]
            if A.d != tree.d * len(tree.children[n]):
                raise ValueError(f"one-step set at node {n} has the wrong dimension")
            if not is_upper(A):
                raise ValueError(f"one-step set at node {n} must be an upper set")
            self.steps[n] = A
        self.coherent = all(all(not any(v) for v in A.vertices) for A in self.steps.values())
        self.conditionally_coherent = self.coherent

    def _acceptance(self, n):
        tree = self.tree
        d = tree.d
        if not tree.children[n]:
            return Polyhedron.from_hrep(_orthant_rows(d), d)
        dim = d * len(tree.leaves_under(n))
        step = self.steps[n]
        s = tree.time[n] + 1
        lift = lambda v: _expand(tree, n, s, v)  # noqa: E731
        verts = [lift(v) for v in step.vertices]
        rays = [lift(r) for r in step.rays]
        lines = [lift(l) for l in step.lines]
        for c in tree.children[n]:
            Ac = self.acceptance(c)
            verts = sorted({tuple(x + y for x, y in zip(u, _embed(tree, n, s, c, v)))
                            for u in verts for v in Ac.vertices})
            rays += [_embed(tree, n, s, c, r) for r in Ac.rays]
            lines += [_embed(tree, n, s, c, l) for l in Ac.lines]
        return Polyhedron.from_vrep(verts, rays, lines, d=dim)

    def one_step(self, n):
        return self.steps[n]

    def risk(self, X, t):
        return compose_generic(self, X)[t]

    def risk_process(self, X):
        tree = self.tree
        sp = SetProcess(tree, "poly", EXACT, mask=tree.m)
        sp.data = compose_generic(self, X)
        return sp

    def to_json(self):
        return {"kind": "custom",
                "one_step": {str(n): A.to_json() for n, A in sorted(self.steps.items())}}


def _expand(tree, n, s, vec):
    """Reduced coordinates at ``s`` -> leaf space of ``n`` (copy to leaves)."""
    d = tree.d
    out = []
    for k, c in enumerate(tree.desc_at(n, s)):
        block = tuple(vec[k * d:(k + 1) * d])
        out.extend(block * len(tree.leaves_under(c)))
    return tuple(out)


# ---------------------------------------------------------------------------
# generic operations


def risk_from_acceptance(A, X, n):
    """``R(X)(n) = {u in M : X + u in A}`` for ``A`` over the descendants of ``n``
    at the time of ``X``.  The result has an H-rep in ``R^d`` with mask ``m``.
    """
    tree = X.tree
    d, m = tree.d, tree.m
    desc = tree.desc_at(n, X.t)
    x = leaf_vector(X, n)
    if A.d != d * len(desc):
        raise ValueError("acceptance set does not match the node's coordinates")
    if A.has_vrep and A.is_empty():
        return Polyhedron.empty(d, m)

    def fold(a):
        return tuple(sum((a[k * d + i] for k in range(len(desc))), ZERO) for i in range(d))

    rows = [(fold(a), b - _dot(a, x)) for a, b in A.ineqs]
    eqs = [(fold(a), b - _dot(a, x)) for a, b in A.eqs]
    return Polyhedron.from_hrep(rows, d, m, eqs=eqs)


def risk_avar(X, model, t):
    """Box slice of a composed or vanilla AV@R model at time ``t``."""
    return model.risk(X, t)


def risk_entropic(X, rates, t):
    """Direct closed-form entropic corners at time ``t``."""
    return Entropic(X.tree, rates).corners_direct(X, t)


def risk_shp(X, market):
    return SHP(X.tree, market).risk_process(X)


def acceptance_set(model, t):
    return {n: model.acceptance(n) for n in model.tree.nodes_at(t)}


def stepped_acceptance(model, t, s):
    return {n: model.stepped_acceptance(n, s) for n in model.tree.nodes_at(t)}


def compose(model, X):
    """All-times risk process by backward composition."""
    if isinstance(model, (AVaR, Entropic)) and model.tree.m == model.tree.d:
        if isinstance(model, AVaR) and not model.composed:
            raise ValueError("vanilla AV@R is not recursive; nothing to compose")
        return model.risk_process(X)
    if isinstance(model, SHP):
        return model.risk_process(X)
    sp = SetProcess(model.tree, "poly", EXACT, mask=model.tree.m)
    sp.data = compose_generic(model, X)
    return sp


def compose_generic(model, X):
    """Backward recursion through one-step acceptance sets with FME.

    ``R_t(n) = {u in M : exists z_c in R_{t+1}(c), (u - z_c)_c in A_{t,t+1}(n)}``;
    the ``z`` block is eliminated by Fourier-Motzkin.
    """
    tree = model.tree
    d, m = tree.d, tree.m
    out = {tree.T: {}}
    for l in tree.leaves:
        out[tree.T][l] = risk_from_acceptance(model.acceptance(l), X, l)
    for t in range(tree.T - 1, -1, -1):
        cur = {}
        for n in tree.nodes_at(t):
            ch = tree.children[n]
            k = len(ch)
            nv = m * (k + 1)
            rows, eqs = [], []
            dead = [c for c in ch if out[t + 1][c].is_empty()]
            if dead:
                P = Polyhedron.empty(d, m)
                P.note = f"empty at node {dead[0]}"
                cur[n] = P
                continue
            for j, c in enumerate(ch):
                Rc = out[t + 1][c]
                off = m * (j + 1)
                for a, b in Rc.ineqs:
                    row = [ZERO] * nv
                    row[off:off + m] = a[:m]
                    rows.append((tuple(row), b))
                for a, b in Rc.eqs:
                    row = [ZERO] * nv
                    row[off:off + m] = a[:m]
                    eqs.append((tuple(row), b))
            step = model.one_step(n)
            for bucket, src in ((rows, step.ineqs), (eqs, step.eqs)):
                for a, b in src:
                    row = [ZERO] * nv
                    for j in range(k):
                        g = a[j * d:j * d + m]
                        for i in range(m):
                            row[i] += g[i]
                            row[m * (j + 1) + i] -= g[i]
                    bucket.append((tuple(row), b))
            res = _fme(rows, eqs, nv, list(range(m, nv)))
            if res is None:
                P = Polyhedron.empty(d, m)
                P.note = f"empty at node {n}"
                cur[n] = P
                continue
            ineqs, eqs2 = res
            cur[n] = Polyhedron.from_hrep([(a[:m], b) for a, b in ineqs], d, m,
                                          eqs=[(a[:m], b) for a, b in eqs2])
        out[t] = cur
    return out

