"""Double description method on integer cones.

``cone_generators(rows, dim)`` returns a minimal generating system
(lineality basis + extreme rays) of ``{y : r @ y >= 0 for r in rows}``.
Rays are kept as primitive integer vectors, so all arithmetic is in Python
ints.  Adjacency uses the combinatorial test on zero sets stored as
bitmasks.
"""
from __future__ import annotations

import math


def _dot(a, b):
    return sum(x * y for x, y in zip(a, b) if x and y)


def _primitive(v):
    g = 0
    for x in v:
        if x:
            g = math.gcd(g, x)
            if g == 1:
                return list(v)
    if g > 1:
        return [x // g for x in v]
    return list(v)


def _combine(a, va, b, vb):
    """Return ``a*vb - b*va`` as a primitive vector (kills the current row)."""
    return _primitive([a * y - b * x for x, y in zip(va, vb)])


def cone_generators(rows, dim):
    """Generators of the polyhedral cone ``{y in R^dim : rows @ y >= 0}``.

    Returns ``(lines, rays)``; both lists of primitive integer vectors.
    """
    lines = [[1 if i == j else 0 for j in range(dim)] for i in range(dim)]
    rays: list[list[int]] = []
    zsets: list[int] = []
    processed = 0  # bitmask of processed rows (for new-ray zero sets)
    for k, a in enumerate(rows):
        bit = 1 << k
        if not any(a):
            processed |= bit
            zsets = [z | bit for z in zsets]
            continue
        vals = [_dot(a, l) for l in lines]
        piv = next((i for i, v in enumerate(vals) if v), None)
        if piv is not None:
            ell = lines[piv]
            av = vals[piv]
            if av < 0:
                ell = [-x for x in ell]
                av = -av
            new_lines = []
            for i, (l, v) in enumerate(zip(lines, vals)):
                if i == piv:
                    continue
                if v:
                    l = _primitive([av * x - v * y for x, y in zip(l, ell)])
                new_lines.append(l)
            new_rays = []
            for r in rays:
                v = _dot(a, r)
                if v:
                    r = _primitive([av * x - v * y for x, y in zip(r, ell)])
                new_rays.append(r)
            lines = new_lines
            rays = new_rays + [_primitive(ell)]
            # existing rays now lie on the hyperplane; ell lies strictly inside
            zsets = [z | bit for z in zsets] + [processed]
            processed |= bit
            continue
        vals = [_dot(a, r) for r in rays]
        pos = [i for i, v in enumerate(vals) if v > 0]
        neg = [i for i, v in enumerate(vals) if v < 0]
        zero = [i for i, v in enumerate(vals) if v == 0]
        out_rays = [rays[i] for i in pos] + [rays[i] for i in zero]
        out_z = [zsets[i] for i in pos] + [zsets[i] | bit for i in zero]
        if neg:
            need = dim - len(lines) - 2
            for p in pos:
                zp = zsets[p]
                for q in neg:
                    common = zp & zsets[q]
                    if bin(common).count("1") < need:
                        continue
                    adjacent = True
                    for r in range(len(rays)):
                        if r != p and r != q and (zsets[r] & common) == common:
                            adjacent = False
                            break
                    if not adjacent:
                        continue
                    out_rays.append(_combine(vals[p], rays[p], vals[q], rays[q]))
                    out_z.append(common | bit)
        rays, zsets = out_rays, out_z
        processed |= bit
    return lines, rays
