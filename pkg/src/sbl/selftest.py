"""Acceptance checks as seeded functions; the CLI self-test and the acceptance tests both run them.

Every check returns a :class:`Verdict` whose JSON holds only seeded,
deterministic data; wall-clock limits enter as booleans, never as times.
"""

from __future__ import annotations

import itertools
import json
import math
import random
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Optional, Sequence

import numpy as np

from sbl.convolution import RULE_TABLE, convolve, convolve_stalk_oracle, corrupt_table, shom_star, tamarkin_project
from sbl.dynamics import QuadraticDomain, RadialHamiltonian, RadialProfile, fixed_points, rotation, rotation_path, rs_index
from sbl.exact_linalg import F2, QQ, GradedDims
from sbl.gf_engine import DEFAULT_SCHEDULE, _step_norm, cofinal_profile, gf_build, gf_homology_window
from sbl.interval_algebra import INF, interval, point, rhom_graded, sheaf, stalk, translate
from sbl.invariants import CapacityResult, DomainSpec, bm_homology, capacity, hh_full, hh_out_window, nine_diagram_check
from sbl.oracles import rs_by_rotation_lift
from sbl.sampling import (
    probe_points,
    random_normal_form,
    random_radial_bump,
    random_sheaf,
    random_summand,
    random_symplectic_path,
    random_window,
)
from sbl.trace_model import random_split_idempotent, trace_retract_check

C = math.pi
FIXTURES = ("corrupt-rule-table",)


@dataclass
class Verdict:
    number: int
    name: str
    passed: bool
    detail: dict = field(default_factory=dict)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extra = f" ({self.detail['failure']})" if not self.passed and "failure" in self.detail else ""
        return f"[{status}] criterion {self.number:2d}: {self.name}{extra}"

    def to_json(self) -> dict:
        return {"number": self.number, "name": self.name, "passed": self.passed, "detail": self.detail}


@dataclass
class Context:
    """Seed, fixture and per-run caches shared by the checks of one self-test run."""

    seed: int = 0
    fixture: Optional[str] = None
    capacities: dict[int, CapacityResult] = field(default_factory=dict)

    @property
    def table(self) -> Optional[dict]:
        return corrupt_table() if self.fixture == "corrupt-rule-table" else None

    def rng(self, number: int) -> random.Random:
        return random.Random(1000 * self.seed + number)

    def ball_capacity(self, k: int) -> CapacityResult:
        if k not in self.capacities:
            self.capacities[k] = capacity(DomainSpec.ball(C), k)
        return self.capacities[k]


def _fail(detail: dict, message: str) -> dict:
    detail.setdefault("failure", message)
    return detail


def _frac(x: Any) -> str:
    return str(x) if not (isinstance(x, float) and math.isinf(x)) else ("inf" if x > 0 else "-inf")


# ---------------------------------------------------------------- sheaf side


def check_convolution_identities(ctx: Context) -> Verdict:
    rng = ctx.rng(1)
    start = time.perf_counter()
    bad: list[list[str]] = []
    for _ in range(100):
        a, b = Fraction(rng.randint(1, 24), 4), Fraction(rng.randint(1, 24), 4)
        c = Fraction(rng.randint(-24, 24), 4)
        G = random_sheaf(rng)
        cases = {
            "half-lines": (convolve(sheaf(interval(a, INF)), sheaf(interval(b, INF))), sheaf(interval(a + b, INF))),
            "open intervals": (
                convolve(sheaf(interval(-a, a, "()", 1)), sheaf(interval(-b, b, "()", 1))),
                sheaf(interval(-(a + b), a + b, "()", 1)),
            ),
            "closed with open": (convolve(sheaf(interval(-a, a, "[]")), sheaf(interval(-a, a, "()", 1))), sheaf(point(0))),
            "point translation": (convolve(sheaf(point(c)), G), translate(G, c)),
        }
        bad += [[name, _frac(a), _frac(b)] for name, (lhs, rhs) in cases.items() if lhs != rhs]
    fast = time.perf_counter() - start < 1.0
    detail = {"pairs": 100, "mismatches": len(bad), "within_time_limit": fast}
    if bad:
        _fail(detail, f"identity {bad[0][0]!r} fails at a = {bad[0][1]}, b = {bad[0][2]}")
    elif not fast:
        _fail(detail, "slower than 1 s")
    return Verdict(1, "convolution identities on 100 random pairs", not bad and fast, detail)


def check_rule_table(ctx: Context) -> Verdict:
    table = ctx.table
    bad_flags: list[tuple[bool, ...]] = []
    points = 0
    for idx, flags in enumerate(itertools.product([True, False], repeat=4)):
        rng = random.Random(1000 * ctx.seed + 100 + idx)
        wrong = False
        for _ in range(20):
            F = sheaf(random_summand(rng, flags=flags[:2], allow_point=False))
            G = sheaf(random_summand(rng, flags=flags[2:], allow_point=False))
            H = convolve(F, G, table=table)
            for t in probe_points(F, G, rng):
                points += 1
                wrong |= stalk(H, t) != convolve_stalk_oracle(F, G, t)
        if wrong:
            bad_flags.append(flags)
    detail: dict[str, Any] = {
        "flag_combinations": 16,
        "instances_per_combination": 20,
        "points_checked": points,
        "failing_entries": [list(f) for f in bad_flags],
        "table": "corrupted fixture" if table is not None else "shipped",
    }
    if bad_flags:
        _fail(detail, f"rule table entry {tuple(bad_flags[0])} disagrees with the stalk oracle")
    return Verdict(2, "rule table agrees with the stalk oracle", not bad_flags and len(RULE_TABLE) == 16, detail)


def check_unit_laws(ctx: Context) -> Verdict:
    rng = ctx.rng(3)
    unit = sheaf(point(0))
    bad = 0
    for _ in range(100):
        F = random_sheaf(rng)
        P = tamarkin_project(F)
        bad += not (convolve(unit, F) == F == convolve(F, unit) and tamarkin_project(P) == P)
    detail = {"sheaves": 100, "mismatches": bad}
    return Verdict(3, "unit laws and idempotent projection", bad == 0, detail if not bad else _fail(detail, f"{bad} sheaves fail"))


def check_adjunction(ctx: Context) -> Verdict:
    rng = ctx.rng(4)
    bad = 0
    for _ in range(50):
        X, G, H = (random_normal_form(rng) for _ in range(3))
        bad += rhom_graded(convolve(X, G), H) != rhom_graded(X, shom_star(G, H))
    detail = {"triples": 50, "mismatches": bad}
    return Verdict(4, "convolution / internal Hom adjunction", bad == 0, detail if not bad else _fail(detail, f"{bad} triples fail"))


def check_hom_filtration(ctx: Context) -> Verdict:
    rng = ctx.rng(5)
    bad = 0
    for _ in range(50):
        F, G = random_normal_form(rng), random_normal_form(rng)
        inner = shom_star(F, G)
        for _ in range(10):
            c = Fraction(rng.randint(-24, 24), 4)
            bad += rhom_graded(F, translate(G, c)) != rhom_graded(sheaf(interval(-c, INF)), inner)
    detail = {"pairs": 50, "values_of_c": 10, "mismatches": bad}
    return Verdict(5, "Hom of a translate is a window of the internal Hom", bad == 0, detail if not bad else _fail(detail, f"{bad} cases fail"))


# ---------------------------------------------------------------- dynamics and generating functions


def check_rs_indices(ctx: Context) -> Verdict:
    rows = []
    for theta in (0.25, 0.75, 1.5, 2.5):
        got, ref = rs_index(rotation_path(theta)), rs_by_rotation_lift(rotation_path(theta))
        rows.append({"path": f"rotation {theta}", "crossing_forms": str(got), "rotation_lift": str(ref), "ok": got == ref})
    for k in range(20):
        path = random_symplectic_path(1000 * ctx.seed + k)
        got, ref = rs_index(path), rs_by_rotation_lift(path)
        rows.append({"path": f"random {k}", "crossing_forms": str(got), "rotation_lift": str(ref), "ok": got == ref})
    ident = rs_index(lambda t: np.eye(2))
    half_integers = all(Fraction(r["crossing_forms"]).denominator in (1, 2) for r in rows)
    ok = all(r["ok"] for r in rows) and ident == 0 and half_integers
    detail: dict[str, Any] = {"paths": rows, "identity_path": str(ident)}
    if not ok:
        first = next((r["path"] for r in rows if not r["ok"]), "identity path")
        _fail(detail, f"{first} disagrees with the rotation-lift oracle")
    return Verdict(6, "Robbin-Salamon indices against the rotation-lift oracle", ok, detail)


def _min_steps(H: RadialHamiltonian) -> int:
    n = 1
    while _step_norm(H, n) >= 0.9:
        n *= 2
    return n + 1


def check_gf_critical_values(ctx: Context) -> Verdict:
    ball = QuadraticDomain.ball(C)
    rows = []
    for alpha in (20.0, 30.0, 45.0, 67.5, 101.25):
        H = RadialHamiltonian(cofinal_profile(C, alpha), ball)
        G = gf_build(H, _min_steps(H))
        cps = G.critical_points()
        err = max(abs(v - o.t_action) for v, _, o in cps)
        rows.append({"alpha": alpha, "steps": G.steps, "critical_points": len(cps), "orbits": len(fixed_points(H)), "max_error_ok": err < 1e-6})
    ok = all(r["max_error_ok"] and r["critical_points"] == r["orbits"] for r in rows)
    detail: dict[str, Any] = {"profiles": rows}
    return Verdict(7, "GF critical values equal orbit actions on cofinal profiles", ok, detail if ok else _fail(detail, "critical value off by more than 1e-6"))


def check_quadratic_pair_law(ctx: Context) -> Verdict:
    rng = ctx.rng(8)
    zero = RadialHamiltonian(RadialProfile.zero())
    start = time.perf_counter()
    rows = []
    for res in (256, 384, 512):
        for _ in range(4):
            a = -INF if rng.random() < 0.25 else rng.choice([-1, 1]) * Fraction(rng.randint(1, 20), 10)
            b = rng.choice([-1, 1]) * Fraction(rng.randint(1, 20), 10)
            a, b = (a, b) if a < b else (b, a) if b != a else (a, a + 1)
            got = gf_homology_window(zero, float(a), float(b), backend="grid", resolution=res)
            expected = GradedDims({0: 1}) if a < 0 < b else GradedDims()
            rows.append({"resolution": res, "window": [_frac(a), _frac(b)], "dims": got.to_json(), "ok": got == expected})
    fast = time.perf_counter() - start < 30.0
    ok = all(r["ok"] for r in rows) and fast
    detail: dict[str, Any] = {"windows": rows, "within_time_limit": fast}
    if not ok:
        _fail(detail, "pair law fails" if not all(r["ok"] for r in rows) else "slower than 30 s")
    return Verdict(8, "H = 0 pair law on 256^2 to 512^2 grids", ok, detail)


def check_cross_backend(ctx: Context) -> Verdict:
    rows = []
    for k in range(20):
        seed = 1000 * ctx.seed + k
        H = random_radial_bump(seed)
        a, b = random_window(H, seed)
        grid, comb = gf_homology_window(H, a, b, backend="grid"), gf_homology_window(H, a, b)
        rows.append({"seed": seed, "window": [_frac(a), _frac(b)], "grid": grid.to_json(), "combinatorial": comb.to_json(), "ok": grid == comb})
    ok = all(r["ok"] for r in rows)
    detail: dict[str, Any] = {"instances": rows}
    return Verdict(9, "grid and combinatorial backends agree", ok, detail if ok else _fail(detail, "backends disagree"))


# ---------------------------------------------------------------- invariants


def check_ball_spectrum(ctx: Context) -> Verdict:
    start = time.perf_counter()
    rows = []
    for k in (1, 2, 3):
        res = ctx.ball_capacity(k)
        rows.append({"k": k, "change_at": round(res.value, 6), "ok": abs(res.value - k * C) < 1e-3, **{x: getattr(res, x).to_json() for x in ("before", "after")}})
    chained = all(rows[i]["after"] == rows[i + 1]["before"] for i in range(2))
    fast = time.perf_counter() - start < 600.0
    ok = all(r["ok"] for r in rows) and chained and fast
    detail: dict[str, Any] = {"changes": rows, "consecutive": chained, "within_time_limit": fast}
    if not ok:
        _fail(detail, "spectral change away from k pi" if not all(r["ok"] for r in rows) else "changes not consecutive or too slow")
    return Verdict(10, "ball window invariants change exactly at pi, 2 pi, 3 pi", ok, detail)


def check_low_window(ctx: Context) -> Verdict:
    ball = DomainSpec.ball(C)
    eps = 0.05
    full = hh_full(ball, eps).require_exact()
    low = hh_out_window(ball, -ball.delta, eps).require_exact()
    bm_u, bm_c = bm_homology(ball, "open"), bm_homology(ball, "complement")
    ok = full == GradedDims({0: 1}) == bm_u and low == GradedDims() == bm_c
    detail: dict[str, Any] = {"full": full.to_json(), "low_out": low.to_json(), "bm_open": bm_u.to_json(), "bm_complement": bm_c.to_json()}
    return Verdict(11, "low window equals Borel-Moore homology", ok, detail if ok else _fail(detail, "low window mismatch"))


def check_negative_windows(ctx: Context) -> Verdict:
    rng = ctx.rng(12)
    ball = DomainSpec.ball(C)
    rows = []
    for _ in range(10):
        L = -round(rng.uniform(0.01, 20.0), 6)
        rep = hh_full(ball, L)
        immediate = rep.certificate.get("tail") == list(DEFAULT_SCHEDULE[:3])
        rows.append({"L": L, "dims": None if rep.dims is None else rep.dims.to_json(), "ok": rep.dims == GradedDims() and immediate})
    ok = all(r["ok"] for r in rows)
    detail: dict[str, Any] = {"levels": rows}
    return Verdict(12, "negative windows vanish and stabilize immediately", ok, detail if ok else _fail(detail, "nonzero or late negative window"))


def check_nine_diagram(ctx: Context) -> Verdict:
    L = round(C * (1.1 + 0.8 * ctx.rng(13).random()), 6)
    rep = nine_diagram_check(DomainSpec.ball(C), 0.1, L)
    detail = {"L": L, **rep.to_json()}
    return Verdict(13, "nine-diagram exact at rank level for L in (pi, 2 pi)", rep.passed, detail if rep.passed else _fail(detail, "row, column or identity fails"))


def check_capacities(ctx: Context) -> Verdict:
    rows = [{"k": k, "capacity": round(ctx.ball_capacity(k).value, 6), "ok": abs(ctx.ball_capacity(k).value - k * C) < 1e-3} for k in (1, 2, 3)]
    rng = np.random.default_rng(ctx.seed)
    s = np.array([[1.0, rng.uniform(-1, 1)], [0.0, 1.0]])
    lam = math.exp(rng.uniform(-0.5, 0.5))
    t = rotation(rng.uniform(0, 2 * math.pi)) @ np.diag([lam, 1 / lam]) @ s
    images = {"sheared ellipse": DomainSpec.ball(C).image(t), "ellipse (2, 0.5, 0.5, 1)": DomainSpec(((2.0, 0.5), (0.5, 1.0)), C)}
    base = ctx.ball_capacity(1).value
    inv = {name: capacity(U, 1).value == base for name, U in images.items()}
    ok = all(r["ok"] for r in rows) and all(inv.values())
    detail: dict[str, Any] = {"ball": rows, "linear_symplectic_images_equal": inv}
    return Verdict(14, "capacities k pi and linear symplectic invariance", ok, detail if ok else _fail(detail, "capacity table mismatch"))


def check_trace_model(ctx: Context) -> Verdict:
    rng = ctx.rng(15)
    counts = {}
    for fld in (QQ, F2):
        good = 0
        for _ in range(200):
            n = rng.randint(1, 6)
            k = rng.randint(0, n)
            e = random_split_idempotent(n, k, fld, rng.randint(0, 10**9))
            rep = trace_retract_check(e, fld, seed=rng.randint(0, 10**9))
            good += rep.passed and rep.rank == k and rep.trace_e == fld(k)
        counts[fld.tag] = good
    ok = all(v == 200 for v in counts.values())
    detail: dict[str, Any] = {"passing_per_field": counts}
    return Verdict(15, "trace of a split idempotent equals the trace of its retract", ok, detail if ok else _fail(detail, "trace mismatch"))


CHECKS: dict[int, Callable[[Context], Verdict]] = {
    1: check_convolution_identities,
    2: check_rule_table,
    3: check_unit_laws,
    4: check_adjunction,
    5: check_hom_filtration,
    6: check_rs_indices,
    7: check_gf_critical_values,
    8: check_quadratic_pair_law,
    9: check_cross_backend,
    10: check_ball_spectrum,
    11: check_low_window,
    12: check_negative_windows,
    13: check_nine_diagram,
    14: check_capacities,
    15: check_trace_model,
}
# seeded checks cheap enough to run twice inside one self-test
REPLAYED = (1, 2, 3, 4, 5, 9, 11, 12, 15)


def check_determinism(ctx: Context, first: dict[int, Verdict]) -> Verdict:
    replay = Context(ctx.seed, ctx.fixture)
    same = [n for n in REPLAYED if n in first and _dump(CHECKS[n](replay).to_json()) == _dump(first[n].to_json())]
    compared = [n for n in REPLAYED if n in first]
    ok = same == compared
    detail: dict[str, Any] = {"replayed": compared, "identical": same}
    return Verdict(16, "seeded checks replay byte-identically", ok, detail if ok else _fail(detail, "replay differs"))


def _dump(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def run_selftest(
    seed: int = 0, only: Optional[Sequence[int]] = None, fixture: Optional[str] = None, progress: Optional[Callable[[Verdict], None]] = None
) -> dict:
    """Run the selected checks in order; criterion 16 replays the cheap seeded ones."""
    if fixture is not None and fixture not in FIXTURES:
        raise ValueError(f"unknown fixture {fixture!r}; known: {', '.join(FIXTURES)}")
    wanted = sorted(set(only) if only else set(CHECKS) | {16})
    if any(n not in CHECKS and n != 16 for n in wanted):
        raise ValueError(f"criteria are numbered 1 to 16, got {wanted}")
    ctx = Context(seed, fixture)
    verdicts: dict[int, Verdict] = {}
    for n in wanted:
        v = check_determinism(ctx, verdicts) if n == 16 else CHECKS[n](ctx)
        verdicts[n] = v
        if progress is not None:
            progress(v)
    return {
        "seed": seed,
        "fixture": fixture,
        "criteria": [verdicts[n].to_json() for n in wanted],
        "verdicts": {str(n): verdicts[n].passed for n in wanted},
        "passed": all(v.passed for v in verdicts.values()),
    }


def report_bytes(report: dict) -> bytes:
    return (json.dumps(report, sort_keys=True, indent=2) + "\n").encode()


__all__ = ["CHECKS", "Context", "FIXTURES", "Verdict", "report_bytes", "run_selftest"]
