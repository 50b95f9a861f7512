"""Exact rational scalars and extended-real helpers.

``Rat`` is ``gmpy2.mpq`` when available (roughly 10x faster than
``fractions.Fraction``), otherwise ``Fraction``.  Both compare and hash
equal for equal values, so the rest of the package never cares which one
is active.
"""
from __future__ import annotations

import math
from fractions import Fraction
from numbers import Rational

try:  # pragma: no cover - exercised implicitly
    from gmpy2 import mpq as Rat
    HAVE_GMPY2 = True
except ImportError:  # pragma: no cover
    Rat = Fraction
    HAVE_GMPY2 = False

INF = math.inf
NEG_INF = -math.inf

ZERO = Rat(0)
ONE = Rat(1)


def to_rat(x):
    """Convert ints, Fractions, ``"p/q"`` strings and decimal strings to Rat.

    Floats are rejected: silently importing binary floats into exact code
    is how rounding errors get in.
    """
    if isinstance(x, bool):
        raise TypeError("bool is not a rational")
    if isinstance(x, str):
        return Rat(Fraction(x.strip()))
    if isinstance(x, float):
        raise TypeError(f"refusing float {x!r} in exact arithmetic; pass 'p/q' strings")
    if isinstance(x, (int, Fraction)) or type(x) is type(ONE):
        return Rat(x)
    if isinstance(x, Rational):
        return Rat(x.numerator, x.denominator)
    raise TypeError(f"cannot convert {type(x).__name__} to a rational")


def fmt(x) -> str:
    """Serialize an exact scalar as ``"p/q"`` (or ``"p"``); infinities as ``"inf"``."""
    if x == INF:
        return "inf"
    if x == NEG_INF:
        return "-inf"
    if isinstance(x, int):
        return str(x)
    num, den = int(x.numerator), int(x.denominator)
    return str(num) if den == 1 else f"{num}/{den}"


def parse_ext(s):
    """Inverse of :func:`fmt` for extended rationals."""
    if s in ("inf", "+inf"):
        return INF
    if s == "-inf":
        return NEG_INF
    return to_rat(s)


def is_exact(x) -> bool:
    return isinstance(x, (int, Fraction)) or type(x) is type(ONE)


def ext_add(a, b):
    """Extended addition where ``+inf`` absorbs everything (empty-set convention).

    ``(+inf) + (-inf)`` is ``+inf``: an empty summand makes a Minkowski sum
    empty no matter what the other summand is.
    """
    if a == INF or b == INF:
        return INF
    if a == NEG_INF or b == NEG_INF:
        return NEG_INF
    return a + b


def ext_sub(a, b):
    """``a - b`` on extended reals; returns ``None`` when undefined."""
    if a == b and a in (INF, NEG_INF):
        return None
    if a == INF or b == NEG_INF:
        return INF
    if a == NEG_INF or b == INF:
        return NEG_INF
    return a - b


def _den(v):
    return 1 if isinstance(v, int) else int(v.denominator)


def lcm_denominators(values) -> int:
    out = 1
    for v in values:
        den = _den(v)
        if den != 1:
            out = out * den // math.gcd(out, den)
    return out


def integer_row(values) -> list[int]:
    """Scale a rational vector to a primitive integer vector (same direction)."""
    values = list(values)
    L = lcm_denominators(values)
    ints = [int(v.numerator) * (L // _den(v)) if not isinstance(v, int) else v * L
            for v in values]
    g = 0
    for v in ints:
        if v:
            g = math.gcd(g, v)
    if g > 1:
        ints = [v // g for v in ints]
    return ints
