"""Convolution of interval sheaves on the line, its internal Hom, and the projection onto bars.

For ``I = <a,b>`` and ``J = <c,d>`` the stalk of ``1_I * 1_J`` at t is the
compactly supported cohomology of the fiber ``I ∩ (t - J)``. Along t that
fiber changes type only at ``a+c``, ``p = a+d``, ``q = b+c`` and ``b+d``,
so the product is a short list of intervals with those endpoints. The list
depends only on the four boundary flags and on the sign of ``p - q``; this is
:data:`RULE_TABLE`. Stalks alone do not fix the gluing of adjacent pieces,
so every entry is checked against the stalk oracle and against the Hom oracle
(through the adjunction with :func:`shom_star`) in the test suite.
"""

from __future__ import annotations

import math
from typing import Optional

from sbl.exact_linalg import F2, ChainComplex, GradedDims, relative_homology
from sbl.interval_algebra import (
    INF,
    IntervalSummand,
    Real,
    SheafOnR,
    interval,
    is_tamarkin_normal,
    sheaf,
)

# (left_closed, right_closed) of I, then of J  ->  case  ->  pieces.
# Case "lt": a+d < b+c, "eq": equal, "gt": a+d > b+c.
# Piece: (lo symbol, lo closed, hi symbol, hi closed, fiber degree g);
# symbols "ac" = a+c, "p" = a+d, "q" = b+c, "bd" = b+d. The summand shift
# is m + n - g for inputs 1_I[m], 1_J[n].
RULE_TABLE: dict[tuple[bool, bool, bool, bool], dict[str, tuple]] = {
    (True, True, True, True): {
        "lt": (("ac", True, "bd", True, 0),),
        "eq": (("ac", True, "bd", True, 0),),
        "gt": (("ac", True, "bd", True, 0),),
    },
    (True, True, True, False): {
        "lt": (("ac", True, "p", False, 0),),
        "eq": (("ac", True, "p", False, 0),),
        "gt": (("ac", True, "p", False, 0),),
    },
    (True, True, False, True): {
        "lt": (("q", False, "bd", True, 0),),
        "eq": (("p", False, "bd", True, 0),),
        "gt": (("q", False, "bd", True, 0),),
    },
    (True, True, False, False): {
        "lt": (("p", True, "q", True, 1),),
        "eq": (("p", True, "p", True, 1),),
        "gt": (("q", False, "p", False, 0),),
    },
    (True, False, True, True): {
        "lt": (("ac", True, "q", False, 0),),
        "eq": (("ac", True, "p", False, 0),),
        "gt": (("ac", True, "q", False, 0),),
    },
    (True, False, True, False): {
        "lt": (("ac", True, "p", False, 0), ("q", True, "bd", False, 1)),
        "eq": (("ac", True, "p", False, 0), ("p", True, "bd", False, 1)),
        "gt": (("ac", True, "q", False, 0), ("p", True, "bd", False, 1)),
    },
    (True, False, False, True): {"lt": (), "eq": (), "gt": ()},
    (True, False, False, False): {
        "lt": (("p", True, "bd", False, 1),),
        "eq": (("p", True, "bd", False, 1),),
        "gt": (("p", True, "bd", False, 1),),
    },
    (False, True, True, True): {
        "lt": (("p", False, "bd", True, 0),),
        "eq": (("p", False, "bd", True, 0),),
        "gt": (("p", False, "bd", True, 0),),
    },
    (False, True, True, False): {"lt": (), "eq": (), "gt": ()},
    (False, True, False, True): {
        "lt": (("ac", False, "p", True, 1), ("q", False, "bd", True, 0)),
        "eq": (("ac", False, "p", True, 1), ("p", False, "bd", True, 0)),
        "gt": (("ac", False, "q", True, 1), ("p", False, "bd", True, 0)),
    },
    (False, True, False, False): {
        "lt": (("ac", False, "q", True, 1),),
        "eq": (("ac", False, "p", True, 1),),
        "gt": (("ac", False, "q", True, 1),),
    },
    (False, False, True, True): {
        "lt": (("p", False, "q", False, 0),),
        "eq": (("p", True, "p", True, 1),),
        "gt": (("q", True, "p", True, 1),),
    },
    (False, False, True, False): {
        "lt": (("q", True, "bd", False, 1),),
        "eq": (("p", True, "bd", False, 1),),
        "gt": (("q", True, "bd", False, 1),),
    },
    (False, False, False, True): {
        "lt": (("ac", False, "p", True, 1),),
        "eq": (("ac", False, "p", True, 1),),
        "gt": (("ac", False, "p", True, 1),),
    },
    (False, False, False, False): {
        "lt": (("ac", False, "bd", False, 1),),
        "eq": (("ac", False, "bd", False, 1),),
        "gt": (("ac", False, "bd", False, 1),),
    },
}


def _add(x: Real, y: Real, when_undefined: Real) -> Real:
    # -inf + inf arises only when both fiber ends are open rays; either value works
    if math.isinf(x) and math.isinf(y) and (x > 0) != (y > 0):
        return when_undefined
    return x + y


def convolve_summands(s: IntervalSummand, u: IntervalSummand, table: Optional[dict] = None) -> list[IntervalSummand]:
    """``1_I[m] * 1_J[n]`` from the rule table."""
    table = RULE_TABLE if table is None else table
    a, b, c, d = s.left, s.right, u.left, u.right
    vals = {
        "ac": a + c,
        "p": _add(a, d, -INF),
        "q": _add(b, c, INF),
        "bd": b + d,
    }
    p, q = vals["p"], vals["q"]
    case = "eq" if p == q else ("lt" if p < q else "gt")
    out = []
    for lo, lc, hi, hc, g in table[(s.left_closed, s.right_closed, u.left_closed, u.right_closed)][case]:
        x, y = vals[lo], vals[hi]
        if x == INF or y == -INF:
            continue
        lc = lc and math.isfinite(x)
        hc = hc and math.isfinite(y)
        if x > y or (x == y and not (lc and hc)):
            continue
        out.append(IntervalSummand(x, lc, y, hc, s.shift + u.shift - g, s.mult * u.mult))
    return out


def convolve(F: SheafOnR, G: SheafOnR, table: Optional[dict] = None) -> SheafOnR:
    """Bilinear extension of the rule table."""
    if F.field != G.field:
        raise ValueError("convolution across different fields")
    out: list[IntervalSummand] = []
    for s in F.summands:
        for u in G.summands:
            out.extend(convolve_summands(s, u, table))
    return SheafOnR(tuple(out), F.field)


def gamma_c_interval(s: IntervalSummand) -> GradedDims:
    """Compactly supported cohomology of ``1_I[n]``: closed bounded in degree 0, open in degree 1."""
    if s.left_closed and s.right_closed:
        g = 0
    elif not s.left_closed and not s.right_closed:
        g = 1
    else:
        return GradedDims()
    return GradedDims({g - s.shift: s.mult})


def gamma_c_cellular(s: IntervalSummand) -> GradedDims:
    """Independent route: the cellular pair (closure, missing ends) of the compactified interval."""
    if s.is_point:
        c = ChainComplex({0: 1}, field=F2, step=-1)
        rel = relative_homology(c, {})
    else:
        # vertices: left end 0, right end 1; one edge with boundary both ends
        c = ChainComplex({0: 2, 1: 1}, {1: [[1], [1]]}, field=F2, step=-1)
        missing = [i for i, closed in enumerate((s.left_closed, s.right_closed)) if not closed]
        if len(missing) == 2 and s.left == -INF and s.right == INF:
            # both ends are the same added point: a circle relative to a point
            c = ChainComplex({0: 1, 1: 1}, {1: [[0]]}, field=F2, step=-1)
            missing = [0]
        rel = relative_homology(c, {0: missing})
    return GradedDims({k - s.shift: v * s.mult for k, v in rel.items()})


def fiber_interval(s: IntervalSummand, u: IntervalSummand, t: Real) -> Optional[IntervalSummand]:
    """``I ∩ (t - J)`` with shift m + n, or None when empty."""
    lo2, lo2c, hi2, hi2c = t - u.right, u.right_closed, t - u.left, u.left_closed
    if s.left > lo2:
        lo, lc = s.left, s.left_closed
    elif s.left < lo2:
        lo, lc = lo2, lo2c
    else:
        lo, lc = lo2, s.left_closed and lo2c
    if s.right < hi2:
        hi, hc = s.right, s.right_closed
    elif s.right > hi2:
        hi, hc = hi2, hi2c
    else:
        hi, hc = hi2, s.right_closed and hi2c
    lc = lc and math.isfinite(lo)
    hc = hc and math.isfinite(hi)
    if lo > hi or (lo == hi and not (lc and hc)):
        return None
    return IntervalSummand(lo, lc, hi, hc, s.shift + u.shift, s.mult * u.mult)


def convolve_stalk_oracle(F: SheafOnR, G: SheafOnR, t: Real, cellular: bool = False) -> GradedDims:
    """Stalk of F * G at t as compactly supported cohomology along the antidiagonal x + y = t."""
    gamma = gamma_c_cellular if cellular else gamma_c_interval
    out = GradedDims()
    for s in F.summands:
        for u in G.summands:
            f = fiber_interval(s, u, t)
            if f is not None:
                out = out + gamma(f)
    return out


UNIT = sheaf(interval(0, INF, "[)"))


def tamarkin_project(F: SheafOnR) -> SheafOnR:
    """``F * 1_[0,inf)``; the result consists of bars ``[a,b)`` only."""
    return convolve(F, SheafOnR(UNIT.summands, F.field))


def _shom_bar(s: IntervalSummand, u: IntervalSummand) -> list[IntervalSummand]:
    a, b, c, d = s.left, s.right, u.left, u.right
    shift = u.shift - s.shift
    mult = s.mult * u.mult
    if b == INF:
        return [IntervalSummand(c - a, True, d - a, False, shift, mult)]
    pieces = [
        (max(c - a, d - b), d - a, shift),
        (c - b, min(c - a, d - b), shift + 1),
    ]
    return [IntervalSummand(lo, True, hi, False, n, mult) for lo, hi, n in pieces if lo < hi]


def shom_star(F: SheafOnR, G: SheafOnR) -> SheafOnR:
    """Internal Hom right adjoint to convolution, on bars ``[a,b)``."""
    if not (is_tamarkin_normal(F) and is_tamarkin_normal(G)):
        raise ValueError("shom_star is only defined on bars [a,b)")
    out: list[IntervalSummand] = []
    for s in F.summands:
        for u in G.summands:
            out.extend(_shom_bar(s, u))
    return SheafOnR(tuple(out), F.field)


def descent_defect(F: SheafOnR) -> SheafOnR:
    """``F * 1_(0,inf)[1]``: equals F on the killed part and vanishes on projected objects."""
    return convolve(F, SheafOnR((interval(0, INF, "()", shift=1),), F.field))


def corrupt_table(case: tuple[bool, bool, bool, bool] = (True, False, True, False)) -> dict:
    """A copy of the rule table with one entry's degrees altered, for self-test fixtures."""
    bad = {k: dict(v) for k, v in RULE_TABLE.items()}
    bad[case] = {c: tuple(p[:4] + (p[4] + 1,) for p in pieces) for c, pieces in RULE_TABLE[case].items()}
    return bad


__all__ = [
    "RULE_TABLE",
    "UNIT",
    "convolve",
    "convolve_stalk_oracle",
    "convolve_summands",
    "corrupt_table",
    "descent_defect",
    "fiber_interval",
    "gamma_c_cellular",
    "gamma_c_interval",
    "shom_star",
    "tamarkin_project",
]
