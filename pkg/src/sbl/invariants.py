"""Action-window invariants of quadratic planar domains, assembled from stabilized GF homology.

Three columns of windowed invariants: ``out`` (the complement category,
read off the stabilized generating-function homology with unchanged
degrees), ``unit`` (``{0: 1}`` exactly when ``0 in (a, b]``) and ``in``
(the domain category, the cofiber of ``out -> unit``). The map
``out -> unit`` is the window map into the total window of the stabilized
complex; the total GF homology of a compactly supported Hamiltonian is
that of H = 0, so this is the continuation to H = 0 up to naturality.

Gradings are homological throughout: GF windows are sublevel-pair
homology, so in ``(a,b] -> (a,c] -> (b,c]`` and in ``out -> unit -> in``
the connecting map lowers degree by one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Optional, Sequence

import numpy as np

from sbl.dynamics import QuadraticDomain, reeb_spectrum
from sbl.exact_linalg import F2, ChainComplex, Field, GradedDims, SparseMatrix, relative_homology
from sbl.gf_engine import (
    DEFAULT_SCHEDULE,
    Indeterminate,
    InconsistentComplex,
    NoStabilization,
    WindowTouchesCriticalValue,
    stabilized_gf,
)
from sbl.persistence import les_consistent

N_DIM = 1  # half the real dimension of the plane


class InvariantError(ValueError):
    """A precondition of an invariant computation failed."""


@dataclass(frozen=True)
class DomainSpec:
    """Quadratic sublevel set ``{pi z^T A z / sqrt(det A) < capacity}`` of the plane."""

    form: tuple[tuple[float, float], tuple[float, float]] = ((1.0, 0.0), (0.0, 1.0))
    capacity: float = math.pi

    def __post_init__(self) -> None:
        quad = QuadraticDomain(self.form, self.capacity)  # validates the form and capacity
        object.__setattr__(self, "form", quad.form)

    @classmethod
    def ball(cls, capacity: float) -> "DomainSpec":
        return cls(capacity=capacity)

    @classmethod
    def from_quadratic(cls, q: QuadraticDomain) -> "DomainSpec":
        return cls(q.form, q.capacity)

    @property
    def quadratic(self) -> QuadraticDomain:
        return QuadraticDomain(self.form, self.capacity)

    @property
    def area(self) -> float:
        return self.capacity

    @property
    def min_period(self) -> float:
        return reeb_spectrum(self.quadratic, 1)[0]

    @property
    def delta(self) -> float:
        """Half the minimal positive spectrum value: the depth of the low window."""
        return self.min_period / 2

    def spectrum(self, upto: float) -> list[float]:
        """Boundary actions ``k c <= upto``."""
        if upto < self.min_period:
            return []
        return [t for t in reeb_spectrum(self.quadratic, int(upto / self.min_period) + 1) if t <= upto]

    def image(self, t: Any) -> "DomainSpec":
        return DomainSpec.from_quadratic(self.quadratic.image(t))

    def to_json(self) -> dict:
        return {"form": [list(r) for r in self.form], "capacity": self.capacity}

    @classmethod
    def from_json(cls, data: dict) -> "DomainSpec":
        form = data.get("form", [[1.0, 0.0], [0.0, 1.0]])
        return cls(tuple(tuple(float(x) for x in r) for r in form), float(data["capacity"]))


@dataclass
class InvariantReport:
    """Windowed invariant with its provenance; in bounds mode ``dims`` is None."""

    name: str
    window: tuple[float, float]
    dims: Optional[GradedDims]
    provenance: list[str]
    mode: str = "exact"
    bounds: Optional[tuple[GradedDims, GradedDims]] = None
    certificate: dict = field(default_factory=dict)

    @property
    def exact(self) -> bool:
        return self.mode == "exact"

    def require_exact(self) -> GradedDims:
        if not self.exact or self.dims is None:
            raise Indeterminate(f"{self.name}{_fmt_window(self.window)} is only known up to bounds", self.bounds)
        return self.dims

    def to_json(self) -> dict:
        out: dict[str, Any] = {
            "name": self.name,
            "window": [_num(x) for x in self.window],
            "mode": self.mode,
            "dims": None if self.dims is None else self.dims.to_json(),
            "provenance": list(self.provenance),
        }
        if self.bounds is not None:
            out["bounds"] = {"lower": self.bounds[0].to_json(), "upper": self.bounds[1].to_json()}
        if self.certificate:
            out["certificate"] = self.certificate
        return out


def _num(x: float) -> Any:
    return x if math.isfinite(x) else ("inf" if x > 0 else "-inf")


def _fmt_window(w: tuple[float, float]) -> str:
    return f"({w[0]:g}, {w[1]:g}]"


def _schedule_for(b: float, schedule: Optional[Sequence[float]]) -> tuple[float, ...]:
    if schedule is not None:
        return tuple(float(x) for x in schedule)
    alphas = list(DEFAULT_SCHEDULE)
    # truncation needs slopes beyond b / capacity; cofinal slopes grow like alpha / capacity
    while math.isfinite(b) and alphas[-1] < 6 * b:
        alphas.append(alphas[-1] * 1.5)
    return tuple(alphas)


def _check_window(U: DomainSpec, a: float, b: float) -> None:
    if not a < b:
        raise InvariantError(f"window needs a < b, got {_fmt_window((a, b))}")
    if b == math.inf:
        raise InvariantError("windows must have a finite right end")


def _unit_window(a: float, b: float) -> GradedDims:
    return GradedDims({0: 1}) if a < 0 <= b else GradedDims()


def _stabilized(U: DomainSpec, a: float, b: float, schedule, field: Field):
    return stabilized_gf(U.quadratic, a, b, _schedule_for(b, schedule), field=field)


def _bounds_from_trace(trace: list[dict]) -> Optional[tuple[GradedDims, GradedDims]]:
    dims = [GradedDims.from_json(e["dims"]) for e in trace if "dims" in e]
    return (dims[-1], dims[-1]) if dims and all(d == dims[-1] for d in dims[-2:]) else None


def hh_out_window(
    U: DomainSpec, a: float, b: float, schedule: Optional[Sequence[float]] = None, field: Field = F2
) -> InvariantReport:
    """Window invariant of the complement category: stabilized GF homology, same degrees."""
    _check_window(U, a, b)
    prov = ["stabilized generating-function homology over cofinal profiles (combinatorial backend)", "degree dictionary: identity"]
    try:
        res = _stabilized(U, a, b, schedule, field)
    except NoStabilization as exc:
        return InvariantReport("hh_out", (a, b), None, prov + [f"no stabilization: {exc}"], "bounds", _bounds_from_trace(exc.trace), {"trace": exc.trace})
    except Indeterminate as exc:
        return InvariantReport("hh_out", (a, b), None, prov + [f"indeterminate: {exc}"], "bounds", exc.bounds)
    return InvariantReport("hh_out", (a, b), res.dims, prov, certificate={"tail": res.certificate["tail"], "rule": res.certificate["rule"]})


def hh_in_window(
    U: DomainSpec, eps: float, L: float, schedule: Optional[Sequence[float]] = None, field: Field = F2
) -> InvariantReport:
    """Window invariant of the domain category on ``(eps, L]``: ``in_d = out_(d-1)`` since the unit vanishes there."""
    if not 0 < eps < L:
        raise InvariantError("need 0 < eps < L")
    if eps >= U.min_period:
        raise InvariantError(f"eps = {eps} is not below the minimal period {U.min_period}")
    out = hh_out_window(U, eps, L, schedule, field)
    prov = out.provenance + ["fiber sequence out -> unit -> in with unit window 0 on (eps, L]: in = out shifted up by one"]
    if not out.exact:
        bounds = None if out.bounds is None else (out.bounds[0].shift(1), out.bounds[1].shift(1))
        return InvariantReport("hh_in", (eps, L), None, prov, "bounds", bounds, out.certificate)
    return InvariantReport("hh_in", (eps, L), out.dims.shift(1), prov, certificate=out.certificate)


def homological_les_consistent(first: GradedDims, second: GradedDims, third: GradedDims) -> bool:
    """Rank-level exactness of ``first_k -> second_k -> third_k -> first_(k-1)``."""
    # read backwards this is the degree-raising sequence of (third, second, first)
    return les_consistent(third, second, first)


def _cofiber(out: GradedDims, unit: GradedDims, f_rank: GradedDims) -> GradedDims:
    # out_k -> unit_k -> in_k -> out_(k-1): in_k = coker f_k + ker f_(k-1)
    degs = set(out) | set(unit)
    res = {}
    for d in range(min(degs, default=0), max(degs, default=0) + 2):
        res[d] = (unit.get(d, 0) - f_rank.get(d, 0)) + (out.get(d - 1, 0) - f_rank.get(d - 1, 0))
    return GradedDims(res)


def _unit_map_rank(U: DomainSpec, a: float, b: float, schedule, field: Field) -> tuple[GradedDims, GradedDims, dict]:
    """``out^(a,b]`` and the rank of ``out^(a,b] -> unit^(a,b]``."""
    res = _stabilized(U, a, b, schedule, field)
    mid = _unit_window(a, b)
    if not mid:
        return res.dims, GradedDims(), {"tail": res.certificate["tail"]}
    cx = res.complex
    if any(g.t_action <= a for g in cx.generators):
        raise Indeterminate(f"the map to the unit needs a generator-free region below {a}", None)
    # with nothing at t <= a the window (a, b] is the filtered subcomplex (-inf, b]
    rank = cx.map_rank((-math.inf, b), (-math.inf, math.inf))
    if rank.get(0, 0) > 1 or any(k != 0 for k in rank):
        raise InconsistentComplex(f"map to the unit has rank {rank}")
    return res.dims, rank, {"tail": res.certificate["tail"], "alpha": res.certificate["tail"][-1]}


def hh_in_total(
    U: DomainSpec, a: float, b: float, schedule: Optional[Sequence[float]] = None, field: Field = F2
) -> InvariantReport:
    """Window invariant of the domain category on any ``(a, b]``, as the cofiber of ``out -> unit``."""
    _check_window(U, a, b)
    prov = ["stabilized generating-function homology over cofinal profiles (combinatorial backend)", "fiber sequence out -> unit -> in"]
    try:
        out, rank, cert = _unit_map_rank(U, a, b, schedule, field)
    except NoStabilization as exc:
        return InvariantReport("hh_in", (a, b), None, prov + [f"no stabilization: {exc}"], "bounds", None, {"trace": exc.trace})
    except Indeterminate as exc:
        return InvariantReport("hh_in", (a, b), None, prov + [f"indeterminate: {exc}"], "bounds", exc.bounds)
    mid = _unit_window(a, b)
    cert = {**cert, "out": out.to_json(), "unit": mid.to_json(), "unit_map_rank": rank.to_json()}
    return InvariantReport("hh_in", (a, b), _cofiber(out, mid, rank), prov, certificate=cert)


def hh_full(U: DomainSpec, L: float, schedule: Optional[Sequence[float]] = None, field: Field = F2) -> InvariantReport:
    """Invariant of the domain category on ``(-inf, L]``; cross-checked against the sequence of the pair (low window, high window)."""
    rep = hh_in_total(U, -math.inf, L, schedule, field)
    rep.name = "hh_full"
    if not rep.exact or L <= 0:
        return rep
    eps = min(U.delta, L / 2)
    rel = bm_homology(U, "open")
    rep.provenance.append(f"Borel-Moore homology of the domain, reindexed: {rel.to_json()}")
    if L > eps:
        tail = hh_in_window(U, eps, L, schedule, field)
        if tail.exact:
            ok = homological_les_consistent(rel, rep.dims, tail.dims)
            rep.certificate["relative_sequence_consistent"] = ok
            if not ok:
                raise InconsistentComplex(f"BM(U) -> full -> in{_fmt_window((eps, L))} is not exact at rank level")
    return rep


# ---------------------------------------------------------------- Borel-Moore homology, PL oracle


def _box_cells(n: int, field: Field) -> tuple[ChainComplex, dict[str, list], np.ndarray]:
    """Cubical complex of an n x n grid of squares on the unit box, cells indexed per dimension."""
    verts = [(i, j) for i in range(n + 1) for j in range(n + 1)]
    vid = {v: k for k, v in enumerate(verts)}
    edges = [((i, j), (i + 1, j)) for i in range(n) for j in range(n + 1)] + [((i, j), (i, j + 1)) for i in range(n + 1) for j in range(n)]
    eid = {e: k for k, e in enumerate(edges)}
    faces = [(i, j) for i in range(n) for j in range(n)]
    d1 = []
    for k, (p, q) in enumerate(edges):
        d1 += [(vid[q], k, 1), (vid[p], k, -1)]
    d2 = []
    for k, (i, j) in enumerate(faces):
        # counterclockwise boundary: bottom, right, -top, -left
        d2 += [
            (eid[((i, j), (i + 1, j))], k, 1),
            (eid[((i + 1, j), (i + 1, j + 1))], k, 1),
            (eid[((i, j + 1), (i + 1, j + 1))], k, -1),
            (eid[((i, j), (i, j + 1))], k, -1),
        ]
    cx = ChainComplex(
        {0: len(verts), 1: len(edges), 2: len(faces)},
        {1: SparseMatrix(len(verts), len(edges), tuple(d1)), 2: SparseMatrix(len(edges), len(faces), tuple(d2))},
        field,
        step=-1,
    )
    return cx, {"verts": verts, "edges": edges, "faces": faces}, np.array(faces, dtype=float)


def bm_homology(U: DomainSpec, region: str = "open", resolution: int = 24, field: Field = F2) -> GradedDims:
    """Borel-Moore homology of ``U``, its closed complement or the plane, in invariant degrees ``2 - k``.

    Locally finite chains on a region of the plane are the cellular chains
    of its one-point compactification relative to the added point. The
    model is an n x n grid on a box containing U with the box boundary
    collapsed to that point; U is approximated by the squares whose centers
    lie inside it.
    """
    if region not in ("open", "complement", "plane"):
        raise InvariantError(f"unknown region {region!r}")
    q = U.quadratic
    a = np.array(U.form)
    radius = 1.5 * math.sqrt(U.capacity * math.sqrt(np.linalg.det(a)) / (math.pi * np.linalg.eigvalsh(a).min()))
    cx, cells, faces = _box_cells(resolution, field)
    scale = 2 * radius / resolution
    centers = (faces + 0.5) * scale - radius
    inside = q.level(centers) < U.capacity
    outer_faces = [k for k, f in enumerate(cells["faces"]) if not inside[k]]
    n = resolution

    def on_shell_v(v):
        return v[0] in (0, n) or v[1] in (0, n)

    def on_shell_e(e):
        (p, r) = e
        return (p[0] == r[0] and p[0] in (0, n)) or (p[1] == r[1] and p[1] in (0, n))

    vid = {v: k for k, v in enumerate(cells["verts"])}
    eid = {e: k for k, e in enumerate(cells["edges"])}
    shell = {0: [k for k, v in enumerate(cells["verts"]) if on_shell_v(v)], 1: [k for k, e in enumerate(cells["edges"]) if on_shell_e(e)]}
    # closure of the outer squares
    out_e, out_v = set(shell[1]), set(shell[0])
    for k in outer_faces:
        i, j = cells["faces"][k]
        for e in (((i, j), (i + 1, j)), ((i + 1, j), (i + 1, j + 1)), ((i, j + 1), (i + 1, j + 1)), ((i, j), (i, j + 1))):
            out_e.add(eid[e])
        for v in ((i, j), (i + 1, j), (i, j + 1), (i + 1, j + 1)):
            out_v.add(vid[v])
    if region == "plane":
        raw = relative_homology(cx, shell)
    elif region == "open":
        raw = relative_homology(cx, {0: sorted(out_v), 1: sorted(out_e), 2: outer_faces})
    else:
        keep = {0: sorted(out_v), 1: sorted(out_e), 2: outer_faces}
        sub = cx.restricted(keep)
        pos = {d: {c: i for i, c in enumerate(keep[d])} for d in (0, 1)}
        raw = relative_homology(sub, {d: [pos[d][c] for c in shell[d]] for d in (0, 1)})
    return GradedDims({2 * N_DIM - k: v for k, v in raw.items()})


# ---------------------------------------------------------------- nine-diagram, capacities


@dataclass
class NineDiagramReport:
    entries: dict[str, GradedDims]
    rows: dict[str, bool]
    columns: dict[str, bool]
    identities: dict[str, bool]

    @property
    def passed(self) -> bool:
        return all(self.rows.values()) and all(self.columns.values()) and all(self.identities.values())

    def to_json(self) -> dict:
        return {
            "entries": {k: v.to_json() for k, v in self.entries.items()},
            "rows": self.rows,
            "columns": self.columns,
            "identities": self.identities,
            "passed": self.passed,
        }


def nine_diagram_check(
    U: DomainSpec, eps: float, L: float, delta: Optional[float] = None, schedule: Optional[Sequence[float]] = None, field: Field = F2
) -> NineDiagramReport:
    """All nine windowed entries at rank level and exactness of every row and column.

    Rows are the windows ``(-delta, eps] -> (-delta, L] -> (eps, L]``;
    columns are ``out -> unit -> in``. The ``out`` row and the two outer
    ``in`` entries are computed independently, so row exactness is a real check.
    """
    delta = U.delta if delta is None else delta
    if not (L > eps > 0 >= -delta):
        raise InvariantError("need L > eps > 0 >= -delta")
    if eps >= U.min_period:
        raise InvariantError(f"eps = {eps} is not below the minimal period {U.min_period}")
    windows = {"low": (-delta, eps), "mid": (-delta, L), "high": (eps, L)}
    out = {k: hh_out_window(U, a, b, schedule, field).require_exact() for k, (a, b) in windows.items()}
    unit = {k: _unit_window(a, b) for k, (a, b) in windows.items()}
    inn = {k: hh_in_total(U, a, b, schedule, field).require_exact() for k, (a, b) in windows.items()}
    in_high = hh_in_window(U, eps, L, schedule, field).require_exact()
    entries = {f"out{k}": v for k, v in out.items()} | {f"unit{k}": v for k, v in unit.items()} | {f"in{k}": v for k, v in inn.items()}
    rows = {name: homological_les_consistent(v["low"], v["mid"], v["high"]) for name, v in (("out", out), ("unit", unit), ("in", inn))}
    columns = {k: homological_les_consistent(out[k], unit[k], inn[k]) for k in windows}
    identities = {
        "unit row is an isomorphism then zero": unit["low"] == unit["mid"] == GradedDims({0: 1}) and unit["high"] == GradedDims(),
        "in on (eps, L] agrees with the shifted out window": in_high == inn["high"],
        "low in window is Borel-Moore homology of the domain": inn["low"] == bm_homology(U, "open", field=field),
        "low out window is Borel-Moore homology of the complement": out["low"] == bm_homology(U, "complement", field=field),
    }
    return NineDiagramReport(entries, rows, columns, identities)


@dataclass
class CapacityResult:
    k: int
    value: float
    bracket: tuple[float, float]
    before: GradedDims
    after: GradedDims
    probes: int

    def to_json(self) -> dict:
        return {
            "k": self.k,
            "capacity": self.value,
            "bracket": list(self.bracket),
            "before": self.before.to_json(),
            "after": self.after.to_json(),
            "probes": self.probes,
        }


class _Prober:
    """``L -> in(eps, L]`` with caching and nudging off the spectrum."""

    def __init__(self, U: DomainSpec, eps: float, schedule, field: Field):
        self.U, self.eps, self.schedule, self.field = U, eps, schedule, field
        self.cache: dict[float, GradedDims] = {}

    def __call__(self, L: float) -> GradedDims:
        if L in self.cache:
            return self.cache[L]
        last: Exception = InvariantError("no probe")
        for nudge in (0.0, 1e-6, -1e-6, 1e-5, -1e-5):
            try:
                rep = hh_in_window(self.U, self.eps, L + nudge, self.schedule, self.field)
            except WindowTouchesCriticalValue as exc:
                last = exc
                continue
            if rep.exact:
                self.cache[L] = rep.dims
                return rep.dims
            last = Indeterminate(f"probe at L = {L} did not stabilize", rep.bounds)
        raise last


def capacity(
    U: DomainSpec,
    k: int = 1,
    eps: Optional[float] = None,
    step: float = 0.25,
    tol: float = 2.5e-4,
    schedule: Optional[Sequence[float]] = None,
    field: Field = F2,
    l_max: float = 200.0,
) -> CapacityResult:
    """Location of the k-th change of ``L -> in(eps, L]``, by a scan of spacing ``step`` and bisection to ``tol``."""
    if k < 1:
        raise InvariantError("k must be at least 1")
    eps = min(0.1, U.min_period / 4) if eps is None else eps
    probe = _Prober(U, eps, schedule, field)
    lo = 2 * eps
    current = probe(lo)
    jumps = 0
    while True:
        hi = lo + step
        if hi > l_max:
            raise InvariantError(f"fewer than {k} spectral changes below {l_max}")
        nxt = probe(hi)
        if nxt != current:
            jumps += 1
            if jumps == k:
                break
            current = nxt
        lo = hi
    before, after = current, nxt
    while hi - lo > 2 * tol:
        mid = (lo + hi) / 2
        got = probe(mid)
        if got == before:
            lo = mid
        elif got == after:
            hi = mid
        else:
            raise InvariantError(f"two spectral changes inside one scan step near {mid}; decrease step")
    return CapacityResult(k, (lo + hi) / 2, (lo, hi), before, after, len(probe.cache))


def window_profile(U: DomainSpec, eps: float, Ls: Sequence[float], schedule: Optional[Sequence[float]] = None, field: Field = F2) -> list[InvariantReport]:
    """``in(eps, L]`` for each L; windows touching the spectrum are nudged by 1e-6."""
    out = []
    for L in Ls:
        try:
            out.append(hh_in_window(U, eps, L, schedule, field))
        except WindowTouchesCriticalValue:
            out.append(hh_in_window(U, eps, L + 1e-6, schedule, field))
    return out


__all__ = [
    "CapacityResult",
    "DomainSpec",
    "InvariantError",
    "InvariantReport",
    "NineDiagramReport",
    "bm_homology",
    "capacity",
    "hh_full",
    "hh_in_total",
    "hh_in_window",
    "hh_out_window",
    "homological_les_consistent",
    "nine_diagram_check",
    "window_profile",
]
