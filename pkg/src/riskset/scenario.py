"""Finite scenario trees, adapted random vectors and vector measures.

Nodes are integers ``0..N-1``; node ``0`` is the root.  Probabilities are
exact rationals.  A :class:`NodeVector` is one ``d``-vector per node of a
fixed time slice and carries a backend tag (``"exact"`` or ``"float"``);
mixing backends raises.
"""
from __future__ import annotations

from collections.abc import Mapping
from functools import cached_property

from ._rational import ONE, ZERO, Rat, fmt, to_rat

EXACT = "exact"
FLOAT = "float"


class TreeError(ValueError):
    pass


class ScenarioTree:
    """Rooted tree with positive conditional probabilities on every edge."""

    def __init__(self, parents, probs, d, m=None):
        """``parents[i]`` is the parent of node ``i`` (None for the root) and
        ``probs[i]`` the conditional probability ``p(i | parent)``."""
        n = len(parents)
        if n == 0 or parents[0] is not None:
            raise TreeError("node 0 must be the root")
        self.d = int(d)
        self.m = self.d if m is None else int(m)
        if not 1 <= self.m <= self.d:
            raise TreeError("need 1 <= m <= d")
        self.parent = tuple(parents)
        children = [[] for _ in range(n)]
        for i, p in enumerate(parents):
            if i and (p is None or not 0 <= p < n or p == i):
                raise TreeError(f"node {i} has invalid parent {p!r}")
            if i:
                children[p].append(i)
        self.children = tuple(tuple(c) for c in children)
        time = [None] * n
        time[0] = 0
        order = [0]
        for a in order:
            for c in children[a]:
                time[c] = time[a] + 1
                order.append(c)
        if len(order) != n:
            raise TreeError("parent links do not form a tree rooted at 0")
        self.time = tuple(time)
        leaf_times = {time[i] for i in range(n) if not children[i]}
        if len(leaf_times) != 1:
            raise TreeError("all leaves must sit at the horizon T")
        self.T = leaf_times.pop()
        p = [ONE] * n
        for i in range(1, n):
            p[i] = to_rat(probs[i])
            if p[i] <= 0:
                raise TreeError(f"edge into node {i} has nonpositive probability")
        for a in range(n):
            if children[a] and sum((p[c] for c in children[a]), ZERO) != ONE:
                raise TreeError(f"children of node {a} do not sum to 1")
        self.p = tuple(p)
        prob = [ONE] * n
        for a in order[1:]:
            prob[a] = prob[parents[a]] * p[a]
        self.prob = tuple(prob)
        levels = [[] for _ in range(self.T + 1)]
        for a in order:
            levels[time[a]].append(a)
        self.levels = tuple(tuple(sorted(lv)) for lv in levels)

    # ---------------------------------------------------------------- queries
    @property
    def n_nodes(self):
        return len(self.parent)

    def nodes_at(self, t):
        self._check_time(t)
        return self.levels[t]

    @property
    def leaves(self):
        return self.levels[self.T]

    def _check_time(self, t):
        if not 0 <= t <= self.T:
            raise TreeError(f"time {t} outside 0..{self.T}")

    def anc(self, n, t):
        """Ancestor of ``n`` at time ``t`` (``n`` itself when ``t`` is its time)."""
        self._check_time(t)
        if t > self.time[n]:
            raise TreeError(f"node {n} at time {self.time[n]} has no ancestor at time {t}")
        while self.time[n] > t:
            n = self.parent[n]
        return n

    @cached_property
    def _desc(self):
        return {}

    def desc_at(self, n, s):
        """Descendants of ``n`` at time ``s`` in node order."""
        key = (n, s)
        cache = self._desc
        if key not in cache:
            self._check_time(s)
            if s < self.time[n]:
                raise TreeError(f"time {s} precedes node {n}")
            front = [n]
            for _ in range(s - self.time[n]):
                front = [c for a in front for c in self.children[a]]
            cache[key] = tuple(front)
        return cache[key]

    def leaves_under(self, n):
        return self.desc_at(n, self.T)

    def cond_prob(self, n, a):
        """``P(n | a)`` for ``a`` an ancestor of ``n``."""
        return self.prob[n] / self.prob[a]

    def path(self, a, n):
        """Nodes strictly after ``a`` up to and including ``n``."""
        out = []
        while n != a:
            out.append(n)
            n = self.parent[n]
            if n is None:
                raise TreeError(f"{a} is not an ancestor")
        return out[::-1]

    def is_internal(self, n):
        return bool(self.children[n])

    # --------------------------------------------------------------- builders
    @classmethod
    def regular(cls, T, branching, d, m=None, probs=None):
        """Complete tree with ``branching`` children per node.

        ``probs`` maps an internal node to its children's probabilities
        (uniform by default); it may also be a callable ``node -> list``.
        """
        parents, p = [None], [ONE]
        front = [0]
        for _ in range(T):
            nxt = []
            for a in front:
                if callable(probs):
                    ps = probs(a)
                elif probs is not None and a in probs:
                    ps = probs[a]
                else:
                    ps = [Rat(1, branching)] * branching
                for k in range(branching):
                    parents.append(a)
                    p.append(to_rat(ps[k]))
                    nxt.append(len(parents) - 1)
            front = nxt
        return cls(parents, p, d, m)

    @classmethod
    def random(cls, rng, T, max_children, d, m=None, min_children=2):
        """Random tree with rational probabilities (weights 1..4 normalized)."""
        parents, p = [None], [ONE]
        front = [0]
        for _ in range(T):
            nxt = []
            for a in front:
                k = int(rng.integers(min_children, max_children + 1))
                wts = [int(x) for x in rng.integers(1, 5, size=k)]
                tot = sum(wts)
                for wt in wts:
                    parents.append(a)
                    p.append(Rat(wt, tot))
                    nxt.append(len(parents) - 1)
            front = nxt
        return cls(parents, p, d, m)

    # ------------------------------------------------------------------ JSON
    def to_json(self):
        nodes = [{"id": 0, "parent": None}]
        for i in range(1, self.n_nodes):
            nodes.append({"id": i, "parent": self.parent[i], "p": fmt(self.p[i])})
        return {"d": self.d, "m": self.m, "nodes": nodes}

    @classmethod
    def from_json(cls, obj):
        nodes = sorted(obj["nodes"], key=lambda nd: nd["id"])
        if [nd["id"] for nd in nodes] != list(range(len(nodes))):
            raise TreeError("node ids must be 0..N-1")
        parents = [nd.get("parent") for nd in nodes]
        probs = [nd.get("p", "1") for nd in nodes]
        return cls(parents, probs, obj["d"], obj.get("m"))

    def __eq__(self, other):
        return (isinstance(other, ScenarioTree) and self.parent == other.parent
                and self.p == other.p and (self.d, self.m) == (other.d, other.m))

    def __hash__(self):
        return hash((self.parent, self.p, self.d, self.m))

    def __repr__(self):
        return f"ScenarioTree(T={self.T}, nodes={self.n_nodes}, d={self.d}, m={self.m})"


def _check_backend(values, backend):
    for v in values:
        for x in v:
            if backend == EXACT and isinstance(x, float):
                raise TypeError("float entry in an exact NodeVector")
            if backend == FLOAT and not isinstance(x, float):
                raise TypeError("non-float entry in a float NodeVector")


class NodeVector(Mapping):
    """An ``F_t``-measurable ``R^d`` vector: one tuple per time-``t`` node."""

    __slots__ = ("tree", "t", "_v", "backend")

    def __init__(self, tree, t, values, backend=EXACT):
        nodes = tree.nodes_at(t)
        if set(values) != set(nodes):
            raise TreeError(f"NodeVector at t={t} must cover exactly the nodes {nodes}")
        if backend == EXACT:
            v = {n: tuple(x if type(x) is type(ONE) else to_rat(x) for x in values[n])
                 for n in nodes}
        elif backend == FLOAT:
            v = {n: tuple(float(x) for x in values[n]) for n in nodes}
        else:
            raise ValueError(f"unknown backend {backend!r}")
        for n in nodes:
            if len(v[n]) != tree.d:
                raise TreeError(f"node {n}: expected dimension {tree.d}")
        self.tree, self.t, self._v, self.backend = tree, t, v, backend

    @classmethod
    def from_fn(cls, tree, t, fn, backend=EXACT):
        return cls(tree, t, {n: fn(n) for n in tree.nodes_at(t)}, backend)

    @classmethod
    def constant(cls, tree, t, vec, backend=EXACT):
        return cls.from_fn(tree, t, lambda _n: vec, backend)

    def __getitem__(self, n):
        return self._v[n]

    def __iter__(self):
        return iter(self.tree.nodes_at(self.t))

    def __len__(self):
        return len(self._v)

    def _same(self, other):
        if not isinstance(other, NodeVector):
            raise TypeError("expected a NodeVector")
        if other.backend != self.backend:
            raise TypeError("cannot mix exact and float NodeVectors")
        if other.tree is not self.tree and other.tree != self.tree:
            raise TreeError("NodeVectors live on different trees")
        if other.t != self.t:
            raise TreeError("NodeVectors live at different times")

    def __add__(self, other):
        self._same(other)
        return NodeVector(self.tree, self.t, {n: tuple(a + b for a, b in zip(self[n], other[n]))
                                              for n in self}, self.backend)

    def __sub__(self, other):
        return self + (-other)

    def __neg__(self):
        return NodeVector(self.tree, self.t, {n: tuple(-a for a in self[n]) for n in self},
                          self.backend)

    def __eq__(self, other):
        return (isinstance(other, NodeVector) and self.t == other.t
                and self.backend == other.backend and self._v == other._v)

    def __hash__(self):
        return hash((self.t, tuple(sorted(self._v.items()))))

    def scale(self, c):
        return NodeVector(self.tree, self.t, {n: tuple(c * a for a in self[n]) for n in self},
                          self.backend)

    def lift(self, s):
        """The same random vector viewed at a later time ``s`` (copied to descendants)."""
        tree = self.tree
        return NodeVector(tree, s, {n: self[tree.anc(n, self.t)] for n in tree.nodes_at(s)},
                          self.backend)

    def as_float(self):
        return NodeVector(self.tree, self.t, {n: tuple(float(x) for x in self[n]) for n in self},
                          FLOAT)

    def component(self, i):
        return {n: self[n][i] for n in self}

    def to_json(self):
        if self.backend == FLOAT:
            vals = {str(n): list(self[n]) for n in self}
        else:
            vals = {str(n): [fmt(x) for x in self[n]] for n in self}
        return {"t": self.t, "backend": self.backend, "values": vals}

    @classmethod
    def from_json(cls, tree, obj):
        backend = obj.get("backend", EXACT)
        vals = {int(k): v for k, v in obj["values"].items()}
        return cls(tree, obj["t"], vals, backend)

    def __repr__(self):
        return f"NodeVector(t={self.t}, {self.backend}, {dict(self._v)})"


class VectorMeasure:
    """``d`` probability measures on the tree given by transition probabilities."""

    __slots__ = ("tree", "q", "_mass")

    def __init__(self, tree, q):
        """``q[i][n]`` is ``q_i(n | parent(n))`` for every non-root node ``n``."""
        if len(q) != tree.d:
            raise TreeError(f"need {tree.d} component measures")
        comps = []
        for i, qi in enumerate(q):
            row = {}
            for n in range(1, tree.n_nodes):
                v = to_rat(qi[n]) if type(qi[n]) is not type(ONE) else qi[n]
                if v < 0:
                    raise TreeError(f"component {i}: negative transition into node {n}")
                row[n] = v
            for a in range(tree.n_nodes):
                ch = tree.children[a]
                if ch and sum((row[c] for c in ch), ZERO) != ONE:
                    raise TreeError(f"component {i}: transitions out of node {a} do not sum to 1")
            comps.append(row)
        self.tree = tree
        self.q = tuple(comps)
        mass = [[ONE] * tree.n_nodes for _ in range(tree.d)]
        for t in range(1, tree.T + 1):
            for n in tree.nodes_at(t):
                par = tree.parent[n]
                for i in range(tree.d):
                    mass[i][n] = mass[i][par] * self.q[i][n]
        self._mass = tuple(tuple(mi) for mi in mass)

    @classmethod
    def reference(cls, tree):
        row = {n: tree.p[n] for n in range(1, tree.n_nodes)}
        return cls(tree, [row] * tree.d)

    def mass(self, i, n):
        """``Q_i`` of the atom ``n`` (probability of reaching ``n``)."""
        return self._mass[i][n]

    def density(self, i, n):
        """``E[dQ_i/dP | F_t]`` at node ``n`` (``t`` = time of ``n``)."""
        return self._mass[i][n] / self.tree.prob[n]

    def is_equivalent(self):
        return all(v > 0 for qi in self.q for v in qi.values())

    def equals_reference_on(self, t):
        """True iff ``Q = P`` on ``F_t``, i.e. every transition up to ``t`` matches ``p``."""
        tree = self.tree
        return all(qi[n] == tree.p[n] for qi in self.q
                   for s in range(1, t + 1) for n in tree.nodes_at(s))

    def __eq__(self, other):
        return isinstance(other, VectorMeasure) and self.q == other.q and self.tree == other.tree

    def __hash__(self):
        return hash(tuple(tuple(sorted(qi.items())) for qi in self.q))

    def to_json(self):
        return [{str(n): fmt(v) for n, v in sorted(qi.items())} for qi in self.q]

    @classmethod
    def from_json(cls, tree, obj):
        return cls(tree, [{int(k): v for k, v in qi.items()} for qi in obj])

    def __repr__(self):
        return f"VectorMeasure(d={len(self.q)})"


# ---------------------------------------------------------------------------


def xi_node(Q, a, n):
    """``xi_{t,s}(Q)`` at node ``n`` relative to its ancestor ``a``."""
    tree = Q.tree
    out = []
    for i in range(tree.d):
        ma = Q.mass(i, a)
        if ma == 0:
            out.append(ONE)
        else:
            out.append((Q.mass(i, n) / ma) / (tree.prob[n] / tree.prob[a]))
    return tuple(out)


def xi(Q, t, s):
    """Density ratio ``xi_{t,s}(Q)`` as a NodeVector at time ``s``.

    Equals the ratio of the ``F_s`` and ``F_t`` densities of ``Q_i``, and 1
    wherever the time-``t`` density vanishes.
    """
    tree = Q.tree
    tree._check_time(t)
    tree._check_time(s)
    if t > s:
        raise TreeError("xi needs t <= s")
    return NodeVector(tree, s, {n: xi_node(Q, tree.anc(n, t), n) for n in tree.nodes_at(s)})


def cond_expect(Q, X, t):
    """``E^Q[X | F_t]`` componentwise, for ``X`` adapted at a time ``s >= t``."""
    tree = X.tree
    if Q.tree != tree:
        raise TreeError("measure and vector live on different trees")
    s = X.t
    if t > s:
        raise TreeError("cond_expect needs t <= s")
    exact = X.backend == EXACT
    out = {}
    for a in tree.nodes_at(t):
        acc = [ZERO if exact else 0.0] * tree.d
        for n in tree.desc_at(a, s):
            p = tree.cond_prob(n, a)
            x = xi_node(Q, a, n)
            if exact:
                for i in range(tree.d):
                    if X[n][i]:
                        acc[i] += p * x[i] * X[n][i]
            else:
                for i in range(tree.d):
                    acc[i] += float(p * x[i]) * X[n][i]
        out[a] = tuple(acc)
    return NodeVector(tree, t, out, X.backend)


def w_ts(Q, w, s):
    """``w_t^s(Q, w) = diag(w) xi_{t,s}(Q)`` for ``w`` adapted at ``t``."""
    tree = w.tree
    t = w.t
    if t > s:
        raise TreeError("w_ts needs t <= s")
    out = {}
    for n in tree.nodes_at(s):
        a = tree.anc(n, t)
        x = xi_node(Q, a, n)
        out[n] = tuple(wi * xi_ for wi, xi_ in zip(w[a], x))
    return NodeVector(tree, s, out, w.backend)


def cond_expect_set(Q, sets, s, t):
    """``E^Q[A | F_t]`` for a node-indexed family of polyhedra at time ``s``.

    At a time-``t`` node ``n`` this is the Minkowski sum over descendants
    ``c`` of ``P(c|n) diag(xi_{t,s}(c)) A(c)``.  Any empty descendant makes
    the result empty; ``note`` then records which nodes were empty.
    """
    from .polycalc import Polyhedron, linear_image_diag, minkowski_sum

    tree = Q.tree
    if t > s:
        raise TreeError("cond_expect_set needs t <= s")
    out = {}
    for a in tree.nodes_at(t):
        desc = tree.desc_at(a, s)
        empties = [c for c in desc if sets[c].is_empty()]
        first = sets[desc[0]]
        if empties:
            P = Polyhedron.empty(first.d, first.mask)
            P.note = f"empty at nodes {empties}"
            out[a] = P
            continue
        acc = None
        for c in desc:
            p = tree.cond_prob(c, a)
            scaled = linear_image_diag(sets[c], tuple(p * x for x in xi_node(Q, a, c)))
            acc = scaled if acc is None else minkowski_sum(acc, scaled)
        out[a] = acc
    return out
