"""Constructible sheaves on the real line as sums of shifted interval sheaves.

``IntervalSummand(a, ac, b, bc, shift, mult)`` encodes ``mult`` copies of
``1_I[shift]``. The stalk of ``1_I[n]`` sits in cohomological degree ``-n``.

The Hom oracle models a sheaf on a finite stratification (points ``x_i`` and
the open gaps between them) as a representation of the exit-path quiver:
one arrow from each point stratum to each adjacent open stratum, carrying the
generization map. This quiver is hereditary, so the standard projective
resolution gives every derived Hom as kernel and cokernel of one map::

    0 -> Hom(M,N) -> (+)_x Hom(M_x,N_x) --delta--> (+)_{a:x->y} Hom(M_x,N_y) -> Ext^1(M,N) -> 0
    delta(phi)_a = N_a phi_x - phi_y M_a
"""

from __future__ import annotations

import bisect
import json
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Any, Union

from sbl.exact_linalg import F2, Field, GradedDims, SparseMatrix, rank

Real = Union[int, Fraction, float]
INF = math.inf


def _coerce_endpoint(x: Any) -> Real:
    if isinstance(x, str):
        s = x.strip().lower()
        if s in ("inf", "+inf", "infinity"):
            return INF
        if s in ("-inf", "-infinity"):
            return -INF
        return Fraction(s) if "/" in s or "." not in s else float(s)
    if isinstance(x, bool):
        raise TypeError("boolean endpoint")
    if isinstance(x, Fraction):
        return x.numerator if x.denominator == 1 else x
    if isinstance(x, float) and x.is_integer():
        return int(x)
    return x


def _endpoint_json(x: Real) -> Any:
    if x == INF:
        return "inf"
    if x == -INF:
        return "-inf"
    if isinstance(x, Fraction):
        return str(x)
    return x


@dataclass(frozen=True)
class IntervalSummand:
    """``mult`` copies of ``1_I[shift]`` for I with the given endpoints and flags."""

    left: Real
    left_closed: bool
    right: Real
    right_closed: bool
    shift: int = 0
    mult: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "left", _coerce_endpoint(self.left))
        object.__setattr__(self, "right", _coerce_endpoint(self.right))
        a, b = self.left, self.right
        if isinstance(a, float) and math.isnan(a) or isinstance(b, float) and math.isnan(b):
            raise ValueError("NaN endpoint")
        if a == INF or b == -INF:
            raise ValueError(f"impossible interval endpoints ({a}, {b})")
        if (a == -INF and self.left_closed) or (b == INF and self.right_closed):
            raise ValueError("infinite endpoints must be open")
        if a > b:
            raise ValueError(f"left endpoint {a} exceeds right endpoint {b}")
        if a == b and not (self.left_closed and self.right_closed):
            raise ValueError("degenerate interval must be a closed point")
        if self.mult < 1:
            raise ValueError("multiplicity must be positive")

    @property
    def flags(self) -> str:
        return ("[" if self.left_closed else "(") + ("]" if self.right_closed else ")")

    @property
    def key(self) -> tuple:
        return (self.left, not self.left_closed, self.right, self.right_closed, self.shift)

    @property
    def is_point(self) -> bool:
        return self.left == self.right

    @property
    def stalk_degree(self) -> int:
        return -self.shift

    def contains(self, x: Real) -> bool:
        a, b = self.left, self.right
        if a < x < b:
            return True
        return (x == a and self.left_closed) or (x == b and self.right_closed)

    def finite_endpoints(self) -> list[Real]:
        return [x for x in (self.left, self.right) if math.isfinite(x)]

    def with_mult(self, m: int) -> "IntervalSummand":
        return replace(self, mult=m)

    def __str__(self) -> str:
        body = f"1_{self.flags[0]}{self.left},{self.right}{self.flags[1]}"
        if self.is_point:
            body = f"1_{{{self.left}}}"
        if self.shift:
            body += f"[{self.shift}]"
        return f"{self.mult}*{body}" if self.mult > 1 else body


def interval(a: Real, b: Real, flags: str = "[)", shift: int = 0, mult: int = 1) -> IntervalSummand:
    """Summand from a two-character flag string such as ``"[)"``."""
    if len(flags) != 2 or flags[0] not in "[(" or flags[1] not in "])":
        raise ValueError(f"bad flag string {flags!r}")
    return IntervalSummand(a, flags[0] == "[", b, flags[1] == "]", shift, mult)


@dataclass(frozen=True)
class SheafOnR:
    """Finite direct sum of shifted interval sheaves, always stored normalized."""

    summands: tuple[IntervalSummand, ...] = ()
    field: Field = field(default=F2)

    def __post_init__(self) -> None:
        merged: dict[tuple, IntervalSummand] = {}
        for s in self.summands:
            if not isinstance(s, IntervalSummand):
                raise TypeError("summands must be IntervalSummand")
            prev = merged.get(s.key)
            merged[s.key] = s if prev is None else prev.with_mult(prev.mult + s.mult)
        ordered = tuple(merged[k] for k in sorted(merged))
        object.__setattr__(self, "summands", ordered)

    @classmethod
    def of(cls, *summands: IntervalSummand, field: Field = F2) -> "SheafOnR":
        return cls(tuple(summands), field)

    def __add__(self, other: "SheafOnR") -> "SheafOnR":
        if other.field != self.field:
            raise ValueError("direct sum across different fields")
        return SheafOnR(self.summands + other.summands, self.field)

    def __iter__(self):
        return iter(self.summands)

    def __len__(self) -> int:
        return len(self.summands)

    def __bool__(self) -> bool:
        return bool(self.summands)

    def __str__(self) -> str:
        return " + ".join(str(s) for s in self.summands) or "0"

    def endpoints(self) -> list[Real]:
        return sorted({x for s in self.summands for x in s.finite_endpoints()})

    def expanded(self) -> list[IntervalSummand]:
        """One multiplicity-1 summand per copy."""
        return [s.with_mult(1) for s in self.summands for _ in range(s.mult)]

    def to_json(self) -> list[dict[str, Any]]:
        return [
            {
                "left": _endpoint_json(s.left),
                "left_closed": s.left_closed,
                "right": _endpoint_json(s.right),
                "right_closed": s.right_closed,
                "shift": s.shift,
                "mult": s.mult,
            }
            for s in self.summands
        ]

    @classmethod
    def from_json(cls, data: Any, field: Field = F2) -> "SheafOnR":
        if isinstance(data, (str, bytes)):
            data = json.loads(data)
        if not isinstance(data, list):
            raise ValueError("sheaf JSON must be a list of summands")
        out = []
        for item in data:
            if not isinstance(item, dict):
                raise ValueError("summand JSON must be an object")
            missing = {"left", "left_closed", "right", "right_closed"} - set(item)
            if missing:
                raise ValueError(f"summand JSON missing keys {sorted(missing)}")
            lc, rc = item["left_closed"], item["right_closed"]
            if not isinstance(lc, bool) or not isinstance(rc, bool):
                raise ValueError("closed flags must be booleans")
            shift, mult = item.get("shift", 0), item.get("mult", 1)
            if not isinstance(shift, int) or not isinstance(mult, int) or isinstance(shift, bool):
                raise ValueError("shift and mult must be integers")
            out.append(IntervalSummand(item["left"], lc, item["right"], rc, shift, mult))
        return cls(tuple(out), field)


def sheaf(*summands: IntervalSummand, field: Field = F2) -> SheafOnR:
    return SheafOnR(tuple(summands), field)


def point(c: Real, shift: int = 0) -> IntervalSummand:
    return IntervalSummand(c, True, c, True, shift)


ZERO = SheafOnR()


def normalize(F: SheafOnR | Iterable[IntervalSummand]) -> SheafOnR:
    """Canonical sorted and merged form; idempotent."""
    if isinstance(F, SheafOnR):
        return SheafOnR(F.summands, F.field)
    return SheafOnR(tuple(F))


def translate(F: SheafOnR, c: Real) -> SheafOnR:
    """Push forward along x -> x + c."""
    return SheafOnR(
        tuple(replace(s, left=s.left + c, right=s.right + c) for s in F.summands),
        F.field,
    )


def dshift(F: SheafOnR, n: int) -> SheafOnR:
    """Apply the shift functor [n]."""
    return SheafOnR(tuple(replace(s, shift=s.shift + n) for s in F.summands), F.field)


def is_tamarkin_normal(F: SheafOnR) -> bool:
    """Only bars ``[a,b)`` with a < b, including closed half-lines ``[a,inf)``."""
    return all(
        s.left_closed and not s.right_closed and math.isfinite(s.left) and s.left < s.right for s in F.summands
    )


# ---------------------------------------------------------------- quiver oracle


@dataclass(frozen=True)
class Stratum:
    lo: Real
    hi: Real

    @property
    def is_point(self) -> bool:
        return self.lo == self.hi

    def inside(self, s: IntervalSummand) -> bool:
        if self.is_point:
            return s.contains(self.lo)
        return s.left <= self.lo and self.hi <= s.right and not s.is_point


@dataclass
class ZigzagRep:
    """Graded representation of the exit-path quiver of a stratification.

    ``dims[p][x]`` is the stalk dimension in degree ``p`` on stratum ``x``;
    ``maps[p][(v, e)]`` is the generization matrix from point stratum ``v``
    to the adjacent open stratum ``e`` (shape ``dims[p][e] x dims[p][v]``).
    """

    points: list[Real]
    strata: list[Stratum]
    arrows: list[tuple[int, int]]
    dims: dict[int, list[int]]
    maps: dict[int, dict[tuple[int, int], list[list[int]]]]
    field: Field = F2

    def stalk(self, x: Real) -> GradedDims:
        idx = _locate(self.points, x)
        return GradedDims({p: d[idx] for p, d in self.dims.items()})


def stratification(points: Iterable[Real]) -> tuple[list[Real], list[Stratum], list[tuple[int, int]]]:
    pts = sorted({p for p in points if math.isfinite(p)})
    strata: list[Stratum] = []
    prev: Real = -INF
    for x in pts:
        strata.append(Stratum(prev, x))
        strata.append(Stratum(x, x))
        prev = x
    strata.append(Stratum(prev, INF))
    arrows = []
    for i in range(len(pts)):
        v = 2 * i + 1
        arrows.append((v, v - 1))
        arrows.append((v, v + 1))
    return pts, strata, arrows


def _locate(points: list[Real], x: Real) -> int:
    i = bisect.bisect_left(points, x)
    if i < len(points) and points[i] == x:
        return 2 * i + 1
    return 2 * i


def quiver_model(F: SheafOnR, extra_points: Sequence[Real] = ()) -> ZigzagRep:
    """Stratified model of F on the refinement by its endpoints and ``extra_points``."""
    pts, strata, arrows = stratification(list(F.endpoints()) + list(extra_points))
    by_degree: dict[int, list[IntervalSummand]] = {}
    for s in F.expanded():
        by_degree.setdefault(s.stalk_degree, []).append(s)
    dims: dict[int, list[int]] = {}
    maps: dict[int, dict[tuple[int, int], list[list[int]]]] = {}
    for p, summands in sorted(by_degree.items()):
        member = [[j for j, s in enumerate(summands) if st.inside(s)] for st in strata]
        dims[p] = [len(m) for m in member]
        maps[p] = {}
        for v, e in arrows:
            src, tgt = member[v], member[e]
            pos = {j: r for r, j in enumerate(src)}
            mat = [[0] * len(src) for _ in tgt]
            for r, j in enumerate(tgt):
                if j in pos:
                    mat[r][pos[j]] = 1
            maps[p][(v, e)] = mat
    return ZigzagRep(pts, strata, arrows, dims, maps, F.field)


def _hom_ext(m_dims, m_maps, n_dims, n_maps, arrows, fld: Field) -> tuple[int, int]:
    """(dim Hom, dim Ext^1) between two ungraded quiver representations."""
    # columns: entries of phi_x (N_x by M_x blocks); rows: one block per arrow
    col_off: list[int] = []
    total = 0
    for x in range(len(m_dims)):
        col_off.append(total)
        total += m_dims[x] * n_dims[x]
    trip = []
    row = 0
    arrow_rows = 0
    for a, (x, y) in enumerate(arrows):
        mx, ny = m_dims[x], n_dims[y]
        if mx == 0 or ny == 0:
            continue
        ma, na = m_maps[(x, y)], n_maps[(x, y)]
        nx, my = n_dims[x], m_dims[y]
        for i in range(ny):
            for j in range(mx):
                r = row + i * mx + j
                # (N_a phi_x)_{ij} = sum_k N_a[i][k] phi_x[k][j]
                for k in range(nx):
                    if na[i][k]:
                        trip.append((r, col_off[x] + k * mx + j, na[i][k]))
                # (phi_y M_a)_{ij} = sum_k phi_y[i][k] M_a[k][j]
                for k in range(my):
                    if ma[k][j]:
                        trip.append((r, col_off[y] + i * my + k, -ma[k][j]))
        row += mx * ny
        arrow_rows += mx * ny
    r = rank(SparseMatrix(row, total, tuple(trip)), fld) if row and total else 0
    return total - r, arrow_rows - r


def rhom_graded(F: SheafOnR, G: SheafOnR, extra_points: Sequence[Real] = ()) -> GradedDims:
    """Graded dimension of the derived global Hom from F to G."""
    if F.field != G.field:
        raise ValueError("rhom across different fields")
    pts = list(F.endpoints()) + list(G.endpoints()) + list(extra_points)
    rep_f = quiver_model(F, pts)
    rep_g = quiver_model(G, pts)
    out: dict[int, int] = {}
    for p, md in rep_f.dims.items():
        for q, nd in rep_g.dims.items():
            hom, ext = _hom_ext(md, rep_f.maps[p], nd, rep_g.maps[q], rep_f.arrows, F.field)
            out[q - p] = out.get(q - p, 0) + hom
            out[q - p + 1] = out.get(q - p + 1, 0) + ext
    return GradedDims(out)


def stalk(F: SheafOnR, x: Real) -> GradedDims:
    """Graded stalk dimensions of F at x."""
    out: dict[int, int] = {}
    for s in F.summands:
        if s.contains(x):
            out[s.stalk_degree] = out.get(s.stalk_degree, 0) + s.mult
    return GradedDims(out)


def convention_ledger() -> dict[str, Any]:
    """Hom-direction conventions as fixed by the oracle, not by hand."""
    half = lambda a: sheaf(interval(a, INF, "[)"))  # noqa: E731
    return {
        "stalk_degree_of_1_I[n]": -1,
        "Hom(1_[0,inf), 1_[1,inf))": rhom_graded(half(0), half(1)).to_json(),
        "Hom(1_[1,inf), 1_[0,inf))": rhom_graded(half(1), half(0)).to_json(),
        "Hom(1_[c,inf), 1_[a,inf)) nonzero iff": "c <= a",
        "sample_gamma(1_[0,inf), c) for c=-1,0,1": [
            rhom_graded(half(c), half(0)).to_json() for c in (-1, 0, 1)
        ],
        "sample_gamma(1_[0,1), c) for c=-1,0,1,2": [
            rhom_graded(half(c), sheaf(interval(0, 1, "[)"))).to_json() for c in (-1, 0, 1, 2)
        ],
    }


@dataclass
class HomComplex:
    """Two-term complex ``K0 -> K1`` computing RHom between representations.

    ``k0`` labels are ``(stratum, row, col)`` entries of ``phi_x``; ``k1``
    labels are ``(arrow, row, col)`` entries of the arrow components.
    """

    k0: list[tuple[int, int, int]]
    k1: list[tuple[int, int, int]]
    delta: list[list[Any]]
    field: Field

    def index0(self) -> dict[tuple[int, int, int], int]:
        return {lab: i for i, lab in enumerate(self.k0)}

    def index1(self) -> dict[tuple[int, int, int], int]:
        return {lab: i for i, lab in enumerate(self.k1)}


def hom_complex(m_dims, m_maps, n_dims, n_maps, arrows, fld: Field) -> HomComplex:
    """Full-index version of the resolution complex, functorial in the first argument."""
    k0 = [(x, i, j) for x in range(len(m_dims)) for i in range(n_dims[x]) for j in range(m_dims[x])]
    k1 = [(a, i, j) for a, (x, y) in enumerate(arrows) for i in range(n_dims[y]) for j in range(m_dims[x])]
    c0 = {lab: k for k, lab in enumerate(k0)}
    delta = [[fld(0)] * len(k0) for _ in k1]
    for r, (a, i, j) in enumerate(k1):
        x, y = arrows[a]
        na, ma = n_maps[(x, y)], m_maps[(x, y)]
        for k in range(n_dims[x]):
            if na[i][k]:
                delta[r][c0[(x, k, j)]] = fld.reduce(delta[r][c0[(x, k, j)]] + na[i][k])
        for k in range(m_dims[y]):
            if ma[k][j]:
                delta[r][c0[(y, i, k)]] = fld.reduce(delta[r][c0[(y, i, k)]] - ma[k][j])
    return HomComplex(k0, k1, delta, fld)


def precompose(
    f: Sequence[Sequence[Sequence[Any]]], arrows, target: HomComplex, source: HomComplex
) -> tuple[list[list[Any]], list[list[Any]]]:
    """Chain map ``K(M) -> K(M')`` induced by a morphism ``f: M' -> M``.

    ``f[x]`` is the matrix ``M'_x -> M_x``; ``target`` is K(M), ``source`` is K(M').
    Returns the K0 and K1 components as row-major matrices (K(M') rows).
    """
    fld = target.field
    i0 = target.index0()
    i1 = target.index1()
    mat0 = [[fld(0)] * len(target.k0) for _ in source.k0]
    for r, (x, i, j) in enumerate(source.k0):
        # (phi_x f_x)[i][j] = sum_k phi_x[i][k] f_x[k][j]
        for k in range(len(f[x])):
            if f[x][k][j]:
                mat0[r][i0[(x, i, k)]] = fld(f[x][k][j])
    mat1 = [[fld(0)] * len(target.k1) for _ in source.k1]
    for r, (a, i, j) in enumerate(source.k1):
        x, _ = arrows[a]
        for k in range(len(f[x])):
            if f[x][k][j]:
                mat1[r][i1[(a, i, k)]] = fld(f[x][k][j])
    return mat0, mat1
