"""Barcodes, the persistence reading ``c -> Hom(1_[c,inf), F)`` and action windows.

A bar ``(a, b, n)`` stands for ``1_[a,b)[-n]``. The Hom oracle fixes how it
reads as a persistence module (see ``interval_algebra.convention_ledger``)::

    Hom(1_[c,inf), 1_[a,inf)[-n]) = k in degree n      for c <= a
    Hom(1_[c,inf), 1_[a,b)[-n])   = k in degree n + 1  for a < c <= b

so every barcode vanishes as c -> +inf. Windows ``(a, b]`` read
``Hom(1_[-b,-a), F)``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Any, Optional

from sbl.exact_linalg import (
    F2,
    Field,
    GradedDims,
    apply,
    nullspace,
    rank,
    solve,
)
from sbl.interval_algebra import (
    INF,
    IntervalSummand,
    Real,
    SheafOnR,
    _endpoint_json,
    _coerce_endpoint,
    hom_complex,
    interval,
    is_tamarkin_normal,
    precompose,
    quiver_model,
    rhom_graded,
)


@dataclass(frozen=True, order=True)
class GradedInterval:
    """Bar ``[birth, death)`` in degree n, i.e. ``1_[birth,death)[-n]``."""

    birth: Real
    death: Real
    degree: int = 0
    mult: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "birth", _coerce_endpoint(self.birth))
        object.__setattr__(self, "death", _coerce_endpoint(self.death))
        if not math.isfinite(self.birth):
            raise ValueError("births must be finite")
        if not self.birth < self.death:
            raise ValueError(f"bar needs birth < death, got [{self.birth}, {self.death})")
        if self.mult < 1:
            raise ValueError("multiplicity must be positive")

    def as_summand(self) -> IntervalSummand:
        return interval(self.birth, self.death, "[)", shift=-self.degree, mult=self.mult)


@dataclass(frozen=True)
class Barcode:
    bars: tuple[GradedInterval, ...] = ()
    field: Field = field(default=F2)

    def __post_init__(self) -> None:
        merged: dict[tuple, int] = {}
        for b in self.bars:
            key = (b.birth, b.death, b.degree)
            merged[key] = merged.get(key, 0) + b.mult
        object.__setattr__(
            self, "bars", tuple(GradedInterval(a, d, n, m) for (a, d, n), m in sorted(merged.items()))
        )

    def to_sheaf(self) -> SheafOnR:
        return SheafOnR(tuple(b.as_summand() for b in self.bars), self.field)

    def translate(self, c: Real) -> "Barcode":
        return Barcode(tuple(GradedInterval(b.birth + c, b.death + c, b.degree, b.mult) for b in self.bars), self.field)

    def to_json(self) -> dict[str, Any]:
        return {
            "bars": [
                {"birth": _endpoint_json(b.birth), "death": _endpoint_json(b.death), "degree": b.degree, "mult": b.mult}
                for b in self.bars
            ]
        }

    @classmethod
    def from_json(cls, data: dict[str, Any], field: Field = F2) -> "Barcode":
        if not isinstance(data, dict) or not isinstance(data.get("bars"), list):
            raise ValueError('barcode JSON must be {"bars": [...]}')
        bars = []
        for b in data["bars"]:
            try:
                bars.append(GradedInterval(b["birth"], b["death"], int(b.get("degree", 0)), int(b.get("mult", 1))))
            except (KeyError, TypeError) as exc:
                raise ValueError(f"malformed bar {b!r}") from exc
        return cls(tuple(bars), field)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["birth", "death", "degree", "mult"])
        for b in self.bars:
            w.writerow([_endpoint_json(b.birth), _endpoint_json(b.death), b.degree, b.mult])
        return buf.getvalue()

    def to_svg(self, width: int = 480, row: int = 14) -> str:
        """One row per bar, colored by degree; infinite bars end in an arrow tip."""
        palette = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]
        finite = [x for b in self.bars for x in (b.birth, b.death) if math.isfinite(x)] or [0.0]
        lo, hi = float(min(finite)), float(max(finite))
        span = (hi - lo) or 1.0
        lo, hi = lo - 0.1 * span, hi + 0.2 * span
        sx = lambda x: 20 + (width - 40) * (float(x) - lo) / (hi - lo)  # noqa: E731
        height = max(1, len(self.bars)) * row + 30
        out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">']
        for k, b in enumerate(self.bars):
            y = 15 + k * row
            x0 = sx(b.birth)
            x1 = sx(b.death) if math.isfinite(b.death) else width - 20
            color = palette[b.degree % len(palette)]
            out.append(f'<line x1="{x0:.2f}" y1="{y}" x2="{x1:.2f}" y2="{y}" stroke="{color}" stroke-width="4"/>')
            out.append(f'<circle cx="{x0:.2f}" cy="{y}" r="3" fill="{color}"/>')
            if not math.isfinite(b.death):
                out.append(f'<polygon points="{x1:.2f},{y - 4} {x1 + 8:.2f},{y} {x1:.2f},{y + 4}" fill="{color}"/>')
            out.append(f'<text x="{width - 16}" y="{y + 4}" font-size="9">{b.degree}</text>')
        out.append("</svg>")
        return "\n".join(out)


def to_barcode(F: SheafOnR) -> Barcode:
    """Re-tag the bars of a projected sheaf; shift n becomes degree -n."""
    if not is_tamarkin_normal(F):
        raise ValueError("to_barcode needs bars [a,b) only (apply tamarkin_project first)")
    return Barcode(tuple(GradedInterval(s.left, s.right, -s.shift, s.mult) for s in F.summands), F.field)


def _as_sheaf(F: SheafOnR | Barcode) -> SheafOnR:
    return F.to_sheaf() if isinstance(F, Barcode) else F


def sample_gamma(F: SheafOnR | Barcode, c: Real) -> GradedDims:
    """``Hom(1_[c,inf), F)`` via the oracle."""
    F = _as_sheaf(F)
    return rhom_graded(SheafOnR((interval(c, INF, "[)"),), F.field), F)


def _bar_hom(x: Real, y: Real, b: GradedInterval) -> GradedDims:
    # Hom(1_[x,y), 1_[u,v)) = k if x <= u < y <= v ; k[-1] if u < x <= v < y
    u, v = b.birth, b.death
    if x <= u < y <= v:
        return GradedDims({b.degree: b.mult})
    if u < x <= v < y:
        return GradedDims({b.degree + 1: b.mult})
    return GradedDims()


def sample_gamma_bars(B: Barcode, c: Real) -> GradedDims:
    """Closed-form fast path of :func:`sample_gamma` for barcodes."""
    out = GradedDims()
    for b in B.bars:
        out = out + _bar_hom(c, INF, b)
    return out


@dataclass(frozen=True)
class TorsionVerdict:
    torsion: bool
    probe: Real
    value: GradedDims
    witness: Optional[GradedInterval] = None

    def __bool__(self) -> bool:
        return self.torsion


def is_torsion(B: Barcode) -> TorsionVerdict:
    """Vanishing of ``c -> Hom(1_[c,inf), B)`` beyond every endpoint, decided by the oracle."""
    ends = [x for b in B.bars for x in (b.birth, b.death) if math.isfinite(x)]
    probe = (max(ends) + 1) if ends else 0
    value = sample_gamma(B, probe)
    if not value:
        return TorsionVerdict(True, probe, value)
    witness = next(b for b in B.bars if sample_gamma(Barcode((b,), B.field), probe))
    return TorsionVerdict(False, probe, value, witness)


def _window_summand(a: Real, b: Real) -> IntervalSummand:
    if not a < b:
        raise ValueError(f"window needs a < b, got ({a}, {b}]")
    if not math.isfinite(b):
        raise ValueError("windows must have a finite right end")
    return interval(-b, -a if math.isfinite(a) else INF, "[)")


def window_dims(F: SheafOnR | Barcode, a: Real, b: Real) -> GradedDims:
    """``Hom(1_[-b,-a), F)`` for the window (a, b]; a may be -inf."""
    X = _window_summand(a, b)
    if isinstance(F, Barcode):
        out = GradedDims()
        for bar in F.bars:
            out = out + _bar_hom(X.left, X.right, bar)
        return out
    return rhom_graded(SheafOnR((X,), F.field), F)


# ------------------------------------------------------------ window sequences


def les_ranks(dims: list[int]) -> Optional[list[int]]:
    """Ranks forced by exactness of ``0 -> V_0 -> ... -> V_N -> 0``, or None if impossible.

    Exactness at V_i gives dim V_i = r_(i-1) + r_i with r_(-1) = 0, so the
    ranks are determined; they must be nonnegative, bounded by both ends,
    and the last one must vanish.
    """
    ranks = []
    prev = 0
    for i, d in enumerate(dims):
        r = d - prev
        nxt = dims[i + 1] if i + 1 < len(dims) else 0
        if r < 0 or r > min(d, nxt):
            return None
        ranks.append(r)
        prev = r
    return ranks if prev == 0 else None


def window_sequence(first: GradedDims, second: GradedDims, third: GradedDims) -> list[tuple[int, int, int]]:
    """Flatten ``... -> V1^k -> V2^k -> V3^k -> V1^(k+1) -> ...`` as (k, slot, dim)."""
    degs = set(first) | set(second) | set(third)
    if not degs:
        return []
    out = []
    for k in range(min(degs) - 1, max(degs) + 2):
        out += [(k, 0, first[k]), (k, 1, second[k]), (k, 2, third[k])]
    return out


def les_consistent(first: GradedDims, second: GradedDims, third: GradedDims) -> bool:
    seq = window_sequence(first, second, third)
    return les_ranks([d for _, _, d in seq]) is not None


@dataclass
class WindowLESReport:
    windows: dict[str, GradedDims]
    map_ranks: dict[str, GradedDims]
    exact: bool
    dims_consistent: bool
    euler_ok: bool

    @property
    def passed(self) -> bool:
        return self.exact and self.dims_consistent and self.euler_ok

    def to_json(self) -> dict[str, Any]:
        return {
            "windows": {k: v.to_json() for k, v in self.windows.items()},
            "map_ranks": {k: v.to_json() for k, v in self.map_ranks.items()},
            "exact": self.exact,
            "dims_consistent": self.dims_consistent,
            "euler_ok": self.euler_ok,
            "passed": self.passed,
        }


def _image_rank(fld, mat, basis) -> int:
    if not basis:
        return 0
    return rank([apply(mat, v, fld) for v in basis], fld)


def _h1_rank(fld, mat1, delta_tgt, n_tgt) -> int:
    """Rank of the map on cokernels induced by ``mat1``; ``delta_tgt`` has n_tgt rows."""
    base = rank(delta_tgt, fld) if delta_tgt and delta_tgt[0] else 0
    cols = [list(r) for r in zip(*delta_tgt)] if delta_tgt and delta_tgt[0] else []
    cols += [list(r) for r in zip(*mat1)] if mat1 and mat1[0] else []
    return (rank(cols, fld) if cols else 0) - base


def window_les_check(F: SheafOnR | Barcode, a: Real, b: Real, c: Real) -> WindowLESReport:
    """Window sequence ``(a,b] -> (a,c] -> (b,c] -> (a,b][1]`` with maps from the oracle.

    The sheaf sequence ``0 -> 1_[-c,-b) -> 1_[-c,-a) -> 1_[-b,-a) -> 0``
    gives a termwise exact sequence of resolution complexes; the connecting
    map is computed by the snake construction.
    """
    if not a < b < c:
        raise ValueError("window_les_check needs a < b < c")
    F = _as_sheaf(F)
    fld = F.field
    x1, x2, x3 = _window_summand(a, b), _window_summand(a, c), _window_summand(b, c)
    pts = F.endpoints() + [x for s in (x1, x2, x3) for x in s.finite_endpoints()]
    reps = [quiver_model(SheafOnR((s,), fld), pts) for s in (x1, x2, x3)]
    rep_f = quiver_model(F, pts)
    arrows = rep_f.arrows
    nstrata = len(rep_f.strata)
    dims_of = [r.dims.get(0, [0] * nstrata) for r in reps]
    maps_of = []
    for r, d in zip(reps, dims_of):
        if 0 in r.maps:
            maps_of.append(r.maps[0])
        else:
            maps_of.append({arr: [[0] * d[arr[0]] for _ in range(d[arr[1]])] for arr in arrows})

    def unit_map(src: list[int], tgt: list[int]) -> list[list[list[int]]]:
        # identity on strata where both windows are nonzero
        return [[[1 if (src[x] and tgt[x]) else 0] * src[x] for _ in range(tgt[x])] for x in range(nstrata)]

    pi = unit_map(dims_of[1], dims_of[0])  # 1_[-c,-a) -> 1_[-b,-a)
    iota = unit_map(dims_of[2], dims_of[1])  # 1_[-c,-b) -> 1_[-c,-a)

    names = ["(a,b]", "(a,c]", "(b,c]"]
    windows = {n: GradedDims() for n in names}
    ranks = {"pi": GradedDims(), "iota": GradedDims(), "connecting": GradedDims()}
    exact = True
    for p in sorted(rep_f.dims):
        nd, nm = rep_f.dims[p], rep_f.maps[p]
        K = [hom_complex(dims_of[i], maps_of[i], nd, nm, arrows, fld) for i in range(3)]
        ker = [nullspace(k.delta, len(k.k0), fld) if k.k0 else [] for k in K]
        rk = [rank(k.delta, fld) if k.k1 and k.k0 else 0 for k in K]
        h0 = [len(ker[i]) for i in range(3)]
        h1 = [len(K[i].k1) - rk[i] for i in range(3)]
        pi0, pi1 = precompose(pi, arrows, K[0], K[1])
        io0, io1 = precompose(iota, arrows, K[1], K[2])
        r_pi0 = _image_rank(fld, pi0, ker[0])
        r_io0 = _image_rank(fld, io0, ker[1])
        r_pi1 = _h1_rank(fld, pi1, K[1].delta, len(K[1].k1))
        r_io1 = _h1_rank(fld, io1, K[2].delta, len(K[2].k1))
        # snake: z in ker delta_3 -> lift y -> delta_2 y = pi1 w -> [w] in coker delta_1
        ws = []
        for z in ker[2]:
            y = solve(io0, z, len(K[1].k0), fld)
            if y is None:
                exact = False
                continue
            dy = apply(K[1].delta, y, fld) if K[1].k1 else []
            w = solve(pi1, dy, len(K[0].k1), fld) if K[0].k1 else []
            if w is None:
                exact = False
                continue
            ws.append(w)
        if ws and K[0].k1:
            base = rank(K[0].delta, fld) if K[0].k0 else 0
            cols = ([list(r) for r in zip(*K[0].delta)] if K[0].k0 else []) + ws
            r_conn = rank(cols, fld) - base
        else:
            r_conn = 0
        # exactness at the six spots of the degree-p block
        checks = [
            r_pi0 == h0[0],
            h0[1] - r_io0 == r_pi0,
            h0[2] - r_conn == r_io0,
            h1[0] - r_pi1 == r_conn,
            h1[1] - r_io1 == r_pi1,
            r_io1 == h1[2],
        ]
        exact = exact and all(checks)
        for i, n in enumerate(names):
            windows[n] = windows[n] + GradedDims({p: h0[i], p + 1: h1[i]})
        ranks["pi"] = ranks["pi"] + GradedDims({p: r_pi0, p + 1: r_pi1})
        ranks["iota"] = ranks["iota"] + GradedDims({p: r_io0, p + 1: r_io1})
        ranks["connecting"] = ranks["connecting"] + GradedDims({p: r_conn})
    w1, w2, w3 = (windows[n] for n in names)
    return WindowLESReport(
        windows=windows,
        map_ranks=ranks,
        exact=exact,
        dims_consistent=les_consistent(w1, w2, w3),
        euler_ok=w1.euler() - w2.euler() + w3.euler() == 0,
    )


__all__ = [
    "Barcode",
    "GradedInterval",
    "TorsionVerdict",
    "WindowLESReport",
    "is_torsion",
    "les_consistent",
    "les_ranks",
    "sample_gamma",
    "sample_gamma_bars",
    "to_barcode",
    "window_dims",
    "window_les_check",
    "window_sequence",
]
