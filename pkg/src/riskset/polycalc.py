"""Exact polyhedral calculus for closed convex upper sets.

A :class:`Polyhedron` lives in ``R^d`` but only its first ``mask``
coordinates are free; the remaining ones are identically zero (the eligible
subspace).  Internally every computation happens in the ``mask``-dimensional
core, and vectors are padded with zeros on the way out.

Both representations are kept lazily:

* H-rep: inequalities ``a @ x >= b`` plus equalities ``a @ x == b``;
* V-rep: vertices, rays and lines with ``P = conv(V) + cone(R) + span(L)``.

Conversion uses the integer double description method in :mod:`riskset.dd`.
The canonical form (minimal, reduced, gcd-normalized, sorted) makes set
equality a representational comparison.
"""
from __future__ import annotations

import itertools

from ._rational import INF, NEG_INF, ONE, ZERO, Rat, fmt, integer_row, to_rat
from .dd import cone_generators
from .lp import INFEASIBLE, UNBOUNDED, lp_min, solve_standard

__all__ = [
    "Polyhedron",
    "HalfspaceSet",
    "hrep_to_vrep",
    "vrep_to_hrep",
    "minkowski_sum",
    "minkowski_subtract",
    "intersect",
    "project_eligible",
    "project_vrep",
    "support_value",
    "support_point",
    "contains",
    "recession_cone",
]


def _vec(v):
    return tuple(to_rat(x) if type(x) is not type(ONE) else x for x in v)


def _dot(a, x):
    return sum((ai * xi for ai, xi in zip(a, x) if ai and xi), ZERO)


def _norm_row(a, b):
    """Positive rescaling of ``(a, b)`` to a primitive integer row."""
    ints = integer_row(list(a) + [b])
    return tuple(Rat(v) for v in ints[:-1]), Rat(ints[-1])


def _primitive_dir(r):
    return tuple(Rat(v) for v in integer_row(r))


def _rref(rows):
    """Reduced row echelon form of rational rows; returns (rows, pivots)."""
    rows = [list(r) for r in rows]
    pivots = []
    out = []
    ncols = len(rows[0]) if rows else 0
    col = 0
    for col in range(ncols):
        piv = next((i for i, r in enumerate(rows) if r[col] != 0), None)
        if piv is None:
            continue
        pr = rows.pop(piv)
        inv = ONE / pr[col]
        pr = [v * inv for v in pr]
        rows = [[a - r[col] * b for a, b in zip(r, pr)] if r[col] else r for r in rows]
        out = [[a - r[col] * b for a, b in zip(r, pr)] if r[col] else r for r in out]
        out.append(pr)
        pivots.append(col)
    order = sorted(range(len(out)), key=lambda i: pivots[i])
    return [tuple(out[i]) for i in order], [pivots[i] for i in order]


class Polyhedron:
    """A closed convex polyhedron in the eligible subspace ``R^mask x {0}``."""

    __slots__ = ("d", "mask", "_ineqs", "_eqs", "_verts", "_rays", "_lines", "_empty",
                 "_canon", "_vmin", "note")

    def __init__(self, d, mask=None):
        self.d = d
        self.mask = d if mask is None else mask
        if not 0 <= self.mask <= d:
            raise ValueError("mask must satisfy 0 <= mask <= d")
        self._ineqs = None
        self._eqs = None
        self._verts = None
        self._rays = None
        self._lines = None
        self._empty = None
        self._canon = None
        self._vmin = False
        self.note = None

    # ------------------------------------------------------------------ build
    @classmethod
    def from_hrep(cls, ineqs, d, mask=None, eqs=()):
        """``ineqs``/``eqs`` are ``(a, b)`` pairs; ``a`` has length ``d`` or ``mask``."""
        P = cls(d, mask)
        n = P.mask
        P._ineqs = tuple((_vec(a)[:n], to_rat(b)) for a, b in ineqs)
        P._eqs = tuple((_vec(a)[:n], to_rat(b)) for a, b in eqs)
        return P

    @classmethod
    def from_vrep(cls, vertices, rays=(), lines=(), d=None, mask=None):
        vertices = [_vec(v) for v in vertices]
        rays = [_vec(r) for r in rays]
        lines = [_vec(l) for l in lines]
        if d is None:
            d = len((vertices or rays or lines)[0])
        P = cls(d, mask)
        n = P.mask
        for v in itertools.chain(vertices, rays, lines):
            if len(v) not in (n, d) or any(v[n:]):
                raise ValueError("generator outside the eligible subspace")
        P._verts = tuple(v[:n] for v in vertices)
        P._rays = tuple(r[:n] for r in rays if any(r[:n]))
        P._lines = tuple(l[:n] for l in lines if any(l[:n]))
        P._empty = not P._verts
        return P

    @classmethod
    def empty(cls, d, mask=None):
        P = cls(d, mask)
        P._ineqs, P._eqs = (), ()
        P._verts, P._rays, P._lines = (), (), ()
        P._empty = True
        return P

    @classmethod
    def space(cls, d, mask=None):
        """The whole eligible subspace ``M``."""
        P = cls(d, mask)
        n = P.mask
        P._ineqs, P._eqs = (), ()
        P._verts = ((ZERO,) * n,)
        P._rays = ()
        P._lines = tuple(tuple(ONE if i == j else ZERO for j in range(n)) for i in range(n))
        P._empty = False
        return P

    @classmethod
    def orthant(cls, d, mask=None, corner=None):
        """``corner + (M ∩ R^d_+)``; the corner defaults to the origin."""
        P = cls(d, mask)
        n = P.mask
        c = _vec(corner)[:n] if corner is not None else (ZERO,) * n
        P._ineqs = tuple((tuple(ONE if i == j else ZERO for j in range(n)), c[i])
                         for i in range(n))
        P._eqs = ()
        P._verts = (c,)
        P._rays = tuple(tuple(ONE if i == j else ZERO for j in range(n)) for i in range(n))
        P._lines = ()
        P._empty = False
        return P

    @classmethod
    def point(cls, v, d=None, mask=None):
        v = _vec(v)
        return cls.from_vrep([v], d=d or len(v), mask=mask)

    def _like(self):
        return Polyhedron(self.d, self.mask)

    # -------------------------------------------------------------- accessors
    @property
    def n(self):
        """Core dimension (number of eligible coordinates)."""
        return self.mask

    def _need_h(self):
        if self._ineqs is None:
            self._ineqs, self._eqs = vrep_to_hrep(self._verts, self._rays, self._lines, self.n)

    def _need_v(self):
        if self._verts is None:
            out = hrep_to_vrep(self._ineqs, self._eqs, self.n)
            if out is None:
                self._verts, self._rays, self._lines = (), (), ()
                self._empty = True
            else:
                self._verts, self._rays, self._lines = out
                self._empty = False
            self._vmin = True

    @property
    def ineqs(self):
        self._need_h()
        return self._ineqs

    @property
    def eqs(self):
        self._need_h()
        return self._eqs

    @property
    def vertices(self):
        self._need_v()
        return self._verts

    @property
    def rays(self):
        self._need_v()
        return self._rays

    @property
    def lines(self):
        self._need_v()
        return self._lines

    @property
    def has_vrep(self):
        return self._verts is not None

    @property
    def has_hrep(self):
        return self._ineqs is not None

    def is_empty(self):
        if self._empty is None:
            if self._verts is not None:
                self._empty = not self._verts
            else:
                res = lp_min([ZERO] * self.n,
                             [a for a, _ in self._ineqs], [b for _, b in self._ineqs],
                             [a for a, _ in self._eqs], [b for _, b in self._eqs],
                             free=range(self.n))
                self._empty = res.status == INFEASIBLE
        return self._empty

    def is_space(self):
        if self.is_empty():
            return False
        c = self.canonical()
        return not c._ineqs and not c._eqs

    def pad(self, v):
        return tuple(v) + (ZERO,) * (self.d - self.n)

    # ------------------------------------------------------------ canonical
    def canonical(self):
        """Minimal, reduced, sorted copy with both representations."""
        if self._canon is not None:
            return self._canon
        if self.is_empty():
            C = Polyhedron.empty(self.d, self.mask)
            C._canon = C
            self._canon = C
            return C
        # a V-rep produced by DD is minimal and its polar gives the facets;
        # user-supplied generators go through one more round trip
        verts, rays, lines = self.vertices, self.rays, self.lines
        ineqs, eqs = vrep_to_hrep(verts, rays, lines, self.n)
        if not self._vmin:
            verts, rays, lines = hrep_to_vrep(ineqs, eqs, self.n)
        ineqs, eqs = _canon_h(ineqs, eqs, self.n)
        verts, rays, lines = _canon_v(verts, rays, lines, self.n)
        C = Polyhedron(self.d, self.mask)
        C._ineqs, C._eqs = ineqs, eqs
        C._verts, C._rays, C._lines = verts, rays, lines
        C._empty = False
        C._canon = C
        self._canon = C
        return C

    def __eq__(self, other):
        if not isinstance(other, Polyhedron):
            return NotImplemented
        if (self.d, self.mask) != (other.d, other.mask):
            return False
        a, b = self.canonical(), other.canonical()
        return (a._empty == b._empty and a._ineqs == b._ineqs and a._eqs == b._eqs)

    def __hash__(self):
        c = self.canonical()
        return hash((self.d, self.mask, c._empty, c._ineqs, c._eqs))

    def __repr__(self):
        if self._empty:
            return f"Polyhedron(empty, d={self.d}, mask={self.mask})"
        parts = []
        if self._ineqs is not None:
            parts.append(f"{len(self._ineqs)} ineqs")
        if self._verts is not None:
            parts.append(f"{len(self._verts)} verts, {len(self._rays)} rays")
        return f"Polyhedron(d={self.d}, mask={self.mask}, {', '.join(parts)})"

    # ---------------------------------------------------------------- JSON
    def to_json(self):
        c = self.canonical()
        pad = self.pad
        zeros = (ZERO,) * (self.d - self.n)
        rows = [[fmt(x) for x in tuple(a) + zeros] + [fmt(b)] for a, b in c._ineqs]
        for a, b in c._eqs:
            rows.append([fmt(x) for x in tuple(a) + zeros] + [fmt(b)])
            rows.append([fmt(-x) for x in tuple(a) + zeros] + [fmt(-b)])
        out = {
            "ineqs": rows,
            "vertices": [[fmt(x) for x in pad(v)] for v in c._verts],
            "rays": [[fmt(x) for x in pad(r)] for r in c._rays],
            "mask": self.mask,
            "empty": c._empty,
        }
        if c._lines:
            out["lines"] = [[fmt(x) for x in pad(l)] for l in c._lines]
        if self.note:
            out["note"] = self.note
        return out

    @classmethod
    def from_json(cls, obj, d=None):
        mask = obj["mask"]
        if obj.get("empty"):
            dim = d or len((obj.get("vertices") or obj.get("rays") or [[0] * mask])[0])
            return cls.empty(dim, mask)
        if obj.get("vertices"):
            return cls.from_vrep(obj["vertices"], obj.get("rays", ()), obj.get("lines", ()),
                                 d=d, mask=mask)
        ineqs = [(row[:-1], row[-1]) for row in obj["ineqs"]]
        dim = d or (len(obj["ineqs"][0]) - 1 if obj["ineqs"] else mask)
        return cls.from_hrep(ineqs, dim, mask)


def _canon_h(ineqs, eqs, n):
    if eqs:
        E, piv = _rref([tuple(a) + (b,) for a, b in eqs])
        E = [r for r in E if any(r[:n])]
        piv = [next(j for j in range(n) if r[j]) for r in E]
    else:
        E, piv = [], []
    out = set()
    for a, b in ineqs:
        row = list(a) + [b]
        for r, p in zip(E, piv):
            f = row[p]
            if f:
                row = [x - f * y for x, y in zip(row, r)]
        if not any(row[:n]):
            continue
        out.add(_norm_row(row[:n], row[n]))
    eq_rows = []
    for r in E:
        a, b = _norm_row(r[:n], r[n])
        # fix sign: first nonzero coefficient positive
        first = next(x for x in a if x)
        if first < 0:
            a, b = tuple(-x for x in a), -b
        eq_rows.append((a, b))
    return tuple(sorted(out)), tuple(sorted(eq_rows))


def _canon_v(verts, rays, lines, n):
    if lines:
        L, piv = _rref(lines)
    else:
        L, piv = [], []

    def reduce(v):
        v = list(v)
        for r, p in zip(L, piv):
            f = v[p]
            if f:
                v = [x - f * y for x, y in zip(v, r)]
        return v

    V = sorted({tuple(reduce(v)) for v in verts})
    R = sorted({_primitive_dir(reduce(r)) for r in rays if any(reduce(r))})
    Ls = sorted(_primitive_dir(l) for l in L)
    return tuple(V), tuple(R), tuple(Ls)


# ---------------------------------------------------------------------------
# representation conversion


def _blocks(rows, n):
    """Connected components of coordinates linked by shared row support."""
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for a in rows:
        sup = [j for j in range(n) if a[j]]
        for j in sup[1:]:
            ri, rj = find(sup[0]), find(j)
            if ri != rj:
                parent[ri] = rj
    groups = {}
    for j in range(n):
        groups.setdefault(find(j), []).append(j)
    return list(groups.values())


def hrep_to_vrep(ineqs, eqs, n):
    """Vertices, rays and lines of ``{x in R^n : ineqs, eqs}``; None if empty.

    The coordinates split into independent blocks whenever the constraint
    matrix is block diagonal; each block is enumerated on its own and the
    results are combined as a product.
    """
    rows = []
    for a, b in ineqs:
        if not any(a):
            if b > 0:
                return None
            continue
        rows.append((tuple(a), b, False))
    for a, b in eqs:
        if not any(a):
            if b != 0:
                return None
            continue
        rows.append((tuple(a), b, True))
    blocks = _blocks([r[0] for r in rows], n)
    pos = {}
    for k, blk in enumerate(blocks):
        for i, j in enumerate(blk):
            pos[j] = (k, i)
    per_block = [[] for _ in blocks]
    for a, b, is_eq in rows:
        j0 = next(j for j in range(n) if a[j])
        per_block[pos[j0][0]].append((a, b, is_eq))
    block_verts, rays, lines = [], [], []
    for blk, brows in zip(blocks, per_block):
        dim = len(blk)
        int_rows = []
        for a, b, is_eq in brows:
            r = integer_row([a[j] for j in blk] + [-b])
            int_rows.append(r)
            if is_eq:
                int_rows.append([-x for x in r])
        int_rows.append([0] * dim + [1])
        L, Rs = cone_generators(int_rows, dim + 1)
        verts = []
        for r in Rs:
            if r[-1] > 0:
                den = r[-1]
                verts.append(tuple(Rat(x, den) for x in r[:-1]))
            else:
                rays.append(_embed(blk, [Rat(x) for x in r[:-1]], n))
        if not verts:
            return None
        block_verts.append((blk, verts))
        for l in L:
            lines.append(_embed(blk, [Rat(x) for x in l[:-1]], n))
    vertices = []
    for combo in itertools.product(*[vs for _, vs in block_verts]):
        v = [ZERO] * n
        for (blk, _), part in zip(block_verts, combo):
            for j, x in zip(blk, part):
                v[j] = x
        vertices.append(tuple(v))
    return tuple(vertices), tuple(rays), tuple(lines)


def _embed(blk, vals, n):
    v = [ZERO] * n
    for j, x in zip(blk, vals):
        v[j] = x
    return tuple(v)


def vrep_to_hrep(verts, rays, lines, n):
    """Minimal H-rep ``(ineqs, eqs)`` of ``conv(verts) + cone(rays) + span(lines)``."""
    if not verts:
        # empty set: a single infeasible row
        return (((ZERO,) * n, ONE),), ()
    rows = []
    for v in verts:
        rows.append(integer_row(list(v) + [ONE]))
    for r in rays:
        rows.append(integer_row(list(r) + [ZERO]))
    for l in lines:
        li = integer_row(list(l) + [ZERO])
        rows.append(li)
        rows.append([-x for x in li])
    L, Rs = cone_generators(rows, n + 1)
    ineqs = []
    for r in Rs:
        a = tuple(Rat(x) for x in r[:-1])
        if any(a):
            ineqs.append((a, Rat(-r[-1])))
    eqs = []
    for l in L:
        a = tuple(Rat(x) for x in l[:-1])
        if any(a):
            eqs.append((a, Rat(-l[-1])))
    return tuple(ineqs), tuple(eqs)


# ---------------------------------------------------------------------------
# halfspaces


class HalfspaceSet:
    """``{u in M : w @ u >= b}``; ``b = +inf`` is the empty set, ``b = -inf`` is ``M``."""

    __slots__ = ("w", "b", "d", "mask")

    def __init__(self, w, b, mask=None):
        w = _vec(w)
        self.d = len(w)
        self.mask = self.d if mask is None else mask
        self.w = w[: self.mask] + (ZERO,) * (self.d - self.mask)
        self.b = b if b in (INF, NEG_INF) else to_rat(b)
        if self.b != NEG_INF and not any(self.w[: self.mask]):
            raise ValueError("degenerate halfspace: w vanishes on the eligible coordinates")

    def to_polyhedron(self):
        if self.b == INF:
            return Polyhedron.empty(self.d, self.mask)
        if self.b == NEG_INF:
            return Polyhedron.space(self.d, self.mask)
        return Polyhedron.from_hrep([(self.w, self.b)], self.d, self.mask)

    def contains_point(self, u):
        if self.b == INF:
            return False
        if self.b == NEG_INF:
            return True
        return _dot(self.w, _vec(u)) >= self.b

    def __repr__(self):
        return f"HalfspaceSet(w={[fmt(x) for x in self.w]}, b={fmt(self.b)}, mask={self.mask})"


def _as_poly(A):
    return A.to_polyhedron() if isinstance(A, HalfspaceSet) else A


def _same_space(A, B):
    if (A.d, A.mask) != (B.d, B.mask):
        raise ValueError(f"ambient mismatch: (d={A.d}, mask={A.mask}) vs (d={B.d}, mask={B.mask})")


# ---------------------------------------------------------------------------
# support functions


def _support_h(ineqs, eqs, w, n):
    """``inf {w @ x : ineqs, eqs}`` solved through its dual.

    Returns ``(value, point, multipliers)``; ``point`` attains the value when
    finite and ``multipliers`` are the (nonnegative) inequality weights of the
    dual optimum, so ``w = sum y_i a_i + sum z_j e_j`` exactly.
    """
    m_i, m_e = len(ineqs), len(eqs)
    cols = [a for a, _ in ineqs] + [a for a, _ in eqs] + [tuple(-x for x in a) for a, _ in eqs]
    cost = [-b for _, b in ineqs] + [-b for _, b in eqs] + [b for _, b in eqs]
    A = [[col[k] for col in cols] for k in range(n)]
    res = solve_standard(cost, A, list(w))
    if res.status == UNBOUNDED:
        return INF, None, None
    if res.status == INFEASIBLE:
        # dual infeasible: primal is unbounded below or empty
        feas = lp_min([ZERO] * n, [a for a, _ in ineqs], [b for _, b in ineqs],
                      [a for a, _ in eqs], [b for _, b in eqs], free=range(n))
        if feas.status == INFEASIBLE:
            return INF, None, None
        return NEG_INF, None, None
    point = tuple(-x for x in res.duals)
    return -res.value, point, res.x[:m_i]


def support_value(A, w):
    """``inf_{u in A} w @ u`` in the extended reals (``+inf`` iff ``A`` is empty)."""
    return support_point(A, w)[0]


def support_point(A, w):
    """Support value together with a minimizer (None when not finite)."""
    A = _as_poly(A)
    w = _vec(w)[: A.n]
    if A.has_vrep:
        if A.is_empty():
            return INF, None
        for r in A.rays:
            if _dot(w, r) < 0:
                return NEG_INF, None
        for l in A.lines:
            if _dot(w, l) != 0:
                return NEG_INF, None
        best = min(A.vertices, key=lambda v: _dot(w, v))
        return _dot(w, best), A.pad(best)
    val, pt, _ = _support_h(A.ineqs, A.eqs, w, A.n)
    return val, (A.pad(pt) if pt is not None else None)


# ---------------------------------------------------------------------------
# algebra


def minkowski_sum(A, B):
    """``A ⊕ B``: pairwise vertex sums, union of rays and lines."""
    A, B = _as_poly(A), _as_poly(B)
    _same_space(A, B)
    if A.is_empty() or B.is_empty():
        return Polyhedron.empty(A.d, A.mask)
    verts = {tuple(x + y for x, y in zip(u, v)) for u in A.vertices for v in B.vertices}
    P = Polyhedron.from_vrep(sorted(verts), A.rays + B.rays, A.lines + B.lines,
                             d=A.d, mask=A.mask)
    return P


def _in_recc(A, r):
    """Is direction ``r`` in the recession cone of nonempty ``A``?"""
    return (all(_dot(a, r) >= 0 for a, _ in A.ineqs)
            and all(_dot(a, r) == 0 for a, _ in A.eqs))


def minkowski_subtract(A, B):
    """``A -· B = {m in M : m + B ⊆ A}``.

    Empty when a ray or line of ``B`` escapes the recession cone of ``A``;
    otherwise the intersection of the translates ``A - v`` over the vertices
    of ``B``.  If ``B`` is empty the containment is vacuous and the result is
    the whole eligible subspace, with ``note`` set.
    """
    A, B = _as_poly(A), _as_poly(B)
    _same_space(A, B)
    if B.is_empty():
        P = Polyhedron.space(A.d, A.mask)
        P.note = "subtrahend empty: vacuous containment"
        return P
    if A.is_empty():
        return Polyhedron.empty(A.d, A.mask)
    for r in B.rays:
        if not _in_recc(A, r):
            return Polyhedron.empty(A.d, A.mask)
    for l in B.lines:
        if not (_in_recc(A, l) and _in_recc(A, tuple(-x for x in l))):
            return Polyhedron.empty(A.d, A.mask)
    ineqs, eqs = [], []
    for v in B.vertices:
        ineqs.extend((a, b - _dot(a, v)) for a, b in A.ineqs)
        eqs.extend((a, b - _dot(a, v)) for a, b in A.eqs)
    P = Polyhedron.from_hrep(ineqs, A.d, A.mask, eqs=eqs)
    return _prune(P)


def intersect(A, B):
    A, B = _as_poly(A), _as_poly(B)
    _same_space(A, B)
    if (A._empty is True) or (B._empty is True):
        return Polyhedron.empty(A.d, A.mask)
    return Polyhedron.from_hrep(A.ineqs + B.ineqs, A.d, A.mask, eqs=A.eqs + B.eqs)


def recession_cone(A):
    """``{r : A + r ⊆ A}`` as a homogeneous polyhedral cone."""
    A = _as_poly(A)
    if A.is_empty():
        raise ValueError("recession cone of the empty set is undefined")
    C = Polyhedron.from_hrep([(a, ZERO) for a, _ in A.ineqs], A.d, A.mask,
                             eqs=[(a, ZERO) for a, _ in A.eqs])
    if A.has_vrep:
        C._verts = ((ZERO,) * A.n,)
        C._rays, C._lines, C._empty = A.rays, A.lines, False
    return C


def contains(A, B):
    """Is ``B ⊆ A``?  Returns ``(ok, witness)``.

    The witness names a vertex, ray or line of ``B`` together with the
    violated row of ``A`` (``None`` when ``A`` is empty).
    """
    A, B = _as_poly(A), _as_poly(B)
    _same_space(A, B)
    if B.is_empty():
        return True, None
    if A.is_empty():
        return False, {"kind": "vertex", "point": B.pad(B.vertices[0]), "ineq": None}
    for v in B.vertices:
        for a, b in A.ineqs:
            if _dot(a, v) < b:
                return False, {"kind": "vertex", "point": B.pad(v), "ineq": (A.pad(a), b)}
        for a, b in A.eqs:
            if _dot(a, v) != b:
                return False, {"kind": "vertex", "point": B.pad(v), "ineq": (A.pad(a), b),
                               "equality": True}
    for kind, dirs in (("ray", B.rays), ("line", B.lines)):
        for r in dirs:
            for a, _ in A.ineqs:
                dr = _dot(a, r)
                if dr < 0 or (kind == "line" and dr != 0):
                    return False, {"kind": kind, "point": B.pad(r), "ineq": (A.pad(a), ZERO)}
            for a, _ in A.eqs:
                if _dot(a, r) != 0:
                    return False, {"kind": kind, "point": B.pad(r), "ineq": (A.pad(a), ZERO),
                                   "equality": True}
    return True, None


def verify_witness(A, witness):
    """Re-check a :func:`contains` witness against ``A``; True if it is a violation."""
    A = _as_poly(A)
    if witness is None:
        return False
    x = _vec(witness["point"])[: A.n]
    if A.is_empty():
        return witness["kind"] == "vertex"
    if witness["kind"] == "vertex":
        return (any(_dot(a, x) < b for a, b in A.ineqs)
                or any(_dot(a, x) != b for a, b in A.eqs))
    if witness["kind"] == "ray":
        return not _in_recc(A, x)
    return not (_in_recc(A, x) and _in_recc(A, tuple(-v for v in x)))


# ---------------------------------------------------------------------------
# projection


def _redundant(rows, k, n):
    """Is inequality ``k`` implied by the others?  (LP over the rest.)"""
    a, b = rows[k]
    rest = rows[:k] + rows[k + 1:]
    if not rest:
        return False
    val, _, _ = _support_h(rest, (), a, n)
    return val != NEG_INF and (val == INF or val >= b)


def _prune(P):
    """Drop duplicate and LP-redundant inequalities (equalities kept)."""
    if P.is_empty():
        return Polyhedron.empty(P.d, P.mask)
    seen = {}
    for a, b in P.ineqs:
        if not any(a):
            continue
        key, bb = _norm_row(a, b)
        if key in seen:
            seen[key] = max(seen[key], bb)
        else:
            seen[key] = bb
    rows = sorted(seen.items())
    if P.eqs:
        Q = Polyhedron.from_hrep(rows, P.d, P.mask, eqs=P.eqs)
        return Q
    k = 0
    while k < len(rows):
        if _redundant(rows, k, P.n):
            rows.pop(k)
        else:
            k += 1
    return Polyhedron.from_hrep(rows, P.d, P.mask)


def _fme(ineqs, eqs, n, drop):
    """Eliminate coordinates ``drop`` from a system over ``R^n`` (FME).

    Equalities are used for substitution first.  Redundant rows are removed
    by LP after every elimination step to keep the growth in check.
    """
    rows = [list(a) + [b] for a, b in ineqs]
    eq_rows = [list(a) + [b] for a, b in eqs]
    for j in drop:
        piv = next((r for r in eq_rows if r[j]), None)
        if piv is not None:
            eq_rows.remove(piv)
            inv = ONE / piv[j]
            piv = [x * inv for x in piv]
            rows = [[x - r[j] * y for x, y in zip(r, piv)] if r[j] else r for r in rows]
            eq_rows = [[x - r[j] * y for x, y in zip(r, piv)] if r[j] else r for r in eq_rows]
            continue
        pos = [r for r in rows if r[j] > 0]
        neg = [r for r in rows if r[j] < 0]
        new = [r for r in rows if r[j] == 0]
        for p in pos:
            for q in neg:
                a, c = p[j], -q[j]
                new.append([c * x + a * y for x, y in zip(p, q)])
        uniq = {}
        for r in new:
            if not any(r[:n]):
                if r[n] > 0:
                    return None
                continue
            key, b = _norm_row(r[:n], r[n])
            uniq[key] = max(uniq.get(key, b), b)
        rows = [list(a) + [b] for a, b in sorted(uniq.items())]
        k = 0
        pairs = [(tuple(r[:n]), r[n]) for r in rows]
        while k < len(pairs):
            rest = pairs[:k] + pairs[k + 1:]
            if rest and _implied(rest, [(tuple(e[:n]), e[n]) for e in eq_rows], pairs[k], n):
                pairs.pop(k)
            else:
                k += 1
        rows = [list(a) + [b] for a, b in pairs]
    return ([(tuple(r[:n]), r[n]) for r in rows], [(tuple(r[:n]), r[n]) for r in eq_rows])


def _implied(rows, eqs, row, n):
    a, b = row
    val, _, _ = _support_h(rows, eqs, a, n)
    return val == INF or (val != NEG_INF and val >= b)


def project_eligible(A, keep, mask=None):
    """Coordinate projection of ``A`` onto the coordinates listed in ``keep``.

    Uses Fourier-Motzkin elimination on the H-rep.  The result lives in
    ``R^len(keep)`` with eligible prefix ``mask`` (default: all of it); the
    kept coordinates beyond ``mask`` must project to zero.
    """
    A = _as_poly(A)
    keep = list(keep)
    out_d = len(keep)
    out_mask = out_d if mask is None else mask
    if A.is_empty():
        return Polyhedron.empty(out_d, out_mask)
    n = A.n
    drop = [j for j in range(n) if j not in keep]
    res = _fme(A.ineqs, A.eqs, n, drop)
    if res is None:
        return Polyhedron.empty(out_d, out_mask)
    ineqs, eqs = res
    idx = [k for k in keep if k < n]
    sub_i = [(tuple(a[k] for k in idx), b) for a, b in ineqs]
    sub_e = [(tuple(a[k] for k in idx), b) for a, b in eqs if any(a[k] for k in idx) or b]
    P = Polyhedron.from_hrep(sub_i, out_d, out_mask, eqs=sub_e)
    return P


def project_vrep(A, keep, mask=None):
    """Same projection via generators: independent cross-check of FME."""
    A = _as_poly(A)
    keep = list(keep)
    out_d = len(keep)
    out_mask = out_d if mask is None else mask
    if A.is_empty():
        return Polyhedron.empty(out_d, out_mask)
    full = lambda v: A.pad(v)  # noqa: E731
    pick = lambda v: tuple(full(v)[k] for k in keep)  # noqa: E731
    return Polyhedron.from_vrep([pick(v) for v in A.vertices], [pick(r) for r in A.rays],
                                [pick(l) for l in A.lines], d=out_d, mask=out_mask)


def scale(A, c):
    """``c * A`` for a nonnegative rational ``c`` (``0 * A = {0}`` when nonempty)."""
    A = _as_poly(A)
    c = to_rat(c)
    if c < 0:
        raise ValueError("negative scaling would break the upper-set property")
    if A.is_empty():
        return Polyhedron.empty(A.d, A.mask)
    if c == 0:
        return Polyhedron.point((ZERO,) * A.d, d=A.d, mask=A.mask)
    P = Polyhedron.from_vrep([tuple(c * x for x in v) for v in A.vertices], A.rays, A.lines,
                             d=A.d, mask=A.mask)
    return P


def linear_image_diag(A, diag):
    """Image of ``A`` under ``x -> diag(diag) x`` (nonnegative diagonal)."""
    A = _as_poly(A)
    diag = _vec(diag)[: A.n]
    if A.is_empty():
        return Polyhedron.empty(A.d, A.mask)
    f = lambda v: tuple(x * y for x, y in zip(v, diag))  # noqa: E731
    return Polyhedron.from_vrep([f(v) for v in A.vertices], [f(r) for r in A.rays],
                                [f(l) for l in A.lines], d=A.d, mask=A.mask)


def translate(A, v):
    A = _as_poly(A)
    v = _vec(v)[: A.n]
    if A.is_empty():
        return Polyhedron.empty(A.d, A.mask)
    P = Polyhedron(A.d, A.mask)
    if A.has_hrep:
        P._ineqs = tuple((a, b + _dot(a, v)) for a, b in A.ineqs)
        P._eqs = tuple((a, b + _dot(a, v)) for a, b in A.eqs)
    if A.has_vrep:
        P._verts = tuple(tuple(x + y for x, y in zip(u, v)) for u in A.vertices)
        P._rays, P._lines, P._empty = A.rays, A.lines, False
    return P


def is_upper(A):
    """Does ``A`` satisfy ``A = A + (M ∩ R^d_+)``?"""
    A = _as_poly(A)
    if A.is_empty():
        return True
    n = A.n
    return all(_in_recc(A, tuple(ONE if i == j else ZERO for j in range(n))) for i in range(n))

