from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.polynomial import Polynomial

from sbl.dynamics import (
    QuadraticDomain,
    RadialHamiltonian,
    RadialProfile,
    bump_profile,
    fixed_points,
    smoothstep,
)
from sbl.exact_linalg import F2, QQ, GradedDims
from sbl.sampling import cleared_window_ends, random_radial_bump, random_window
from sbl.gf_engine import (
    FilteredComplex,
    Generator,
    GFError,
    InconsistentComplex,
    Indeterminate,
    NoStabilization,
    StepTooLarge,
    WindowTouchesCriticalValue,
    _grid_values,
    _staircase,
    cofinal_profile,
    continuation_map,
    gf_build,
    gf_homology_window,
    morse_bott_complex,
    orbit_generators,
    stabilized_gf,
    sublevel_pair_homology,
)
from sbl.persistence import les_consistent

C = math.pi
BALL = QuadraticDomain.ball(C)
ELLIPSE = QuadraticDomain(((2.0, 0.3), (0.3, 1.0)), C)
ZERO = RadialHamiltonian(RadialProfile.zero(), BALL)


def _bump(height: float, s1: float = 0.5, s2: float = 2.5, domain: QuadraticDomain = BALL) -> RadialHamiltonian:
    return RadialHamiltonian(bump_profile(height, s1, s2), domain)


def _cubic(height: float, end: float = 2.5) -> RadialHamiltonian:
    # h = height (1 - s/end)^3: nondegenerate center, C^2 at the support end
    return RadialHamiltonian(RadialProfile((0.0, end), (tuple((height * Polynomial([1.0, -1.0 / end]) ** 3).coef),), height), BALL)


def _fall(hi: float, lo: float, width: float) -> tuple[float, ...]:
    return tuple((lo + (hi - lo) * (1 - smoothstep(2)(Polynomial([0.0, 1.0 / width])))).coef)


TWO_LEVEL = RadialHamiltonian(
    RadialProfile((0.0, 0.5, 1.5, 2.0, 3.0), ((0.02,), _fall(0.02, 0.005, 1.0), (0.005,), _fall(0.005, 0.0, 1.0)), 0.02),
    BALL,
)


def _neg(d: GradedDims) -> GradedDims:
    # the homological triple sequence read with degrees reversed is the cohomological one
    return GradedDims({-k: v for k, v in d.items()})


# ---------------------------------------------------------------- building


@pytest.mark.parametrize("steps", [1, 2, 3])
def test_zero_hamiltonian_is_reference_form(steps):
    G = gf_build(ZERO, steps)
    x = np.random.default_rng(steps).normal(size=(50, G.dim)) * 2
    assert np.allclose(G(x), G.reference_form(x), atol=0)
    assert G.n_steps % 2 == 1 and G.index == G.n_steps - 1


def test_grid_zero_pair_law():
    G = gf_build(ZERO)
    assert sublevel_pair_homology(G, -0.5, 0.5) == GradedDims({0: 1})
    assert sublevel_pair_homology(G, 0.2, 0.5) == GradedDims()
    assert sublevel_pair_homology(G, -0.5, -0.2) == GradedDims()
    assert sublevel_pair_homology(G, -0.5, 0.5, resolution=24, method="exact") == GradedDims({0: 1})
    G3 = gf_build(ZERO, fiber=1)
    assert sublevel_pair_homology(G3, -0.5, 0.5, resolution=(12, 12, 5)) == GradedDims({0: 1})


@pytest.mark.parametrize("a, b, expected", [(-1.0, 1.0, {0: 1}), (0.5, 1.0, {}), (-math.inf, -0.5, {})])
def test_identity_hamiltonian_windows(a, b, expected):
    assert gf_homology_window(ZERO, a, b) == GradedDims(expected)
    assert gf_homology_window(ZERO, a, b, backend="grid") == GradedDims(expected)


@pytest.mark.parametrize("H", [_bump(0.01), _bump(-0.01), _cubic(0.01), _bump(0.008, domain=ELLIPSE)])
def test_critical_values_match_actions(H):
    G = gf_build(H)
    t_values = sorted({round(o.t_action, 12) for o in fixed_points(H)} | {0.0})
    for value, x, orbit in G.critical_points():
        assert value == pytest.approx(orbit.t_action, abs=1e-8)
        assert np.abs(G.gradient(x)).max() < 1e-8
    assert np.allclose(G.critical_values(), t_values, atol=1e-8)


@pytest.mark.parametrize("H", [_cubic(0.01), _bump(-0.01)])
def test_doubling_steps_keeps_critical_values(H):
    ref = sorted(v for v, _, _ in gf_build(H, 1).critical_points())
    for steps in (2, 4):
        got = sorted(v for v, _, _ in gf_build(H, steps).critical_points())
        assert np.allclose(got, ref, atol=1e-8)


@pytest.mark.parametrize("steps", [1, 2, 3, 5])
def test_morse_index_minus_shift_is_normalized_degree(steps):
    H = _cubic(0.01)
    G = gf_build(H, steps)
    (degree,) = [g.degree for g in orbit_generators(H)[0] if g.label == "center"]
    _, x, _ = next(c for c in G.critical_points() if c[2].label == "center")
    h = 1e-4
    hess = np.array([(G.gradient(x + h * e) - G.gradient(x - h * e)) / (2 * h) for e in np.eye(G.dim)])
    eig = np.linalg.eigvalsh((hess + hess.T) / 2)
    assert np.abs(eig).min() > 1e-3
    assert int(np.sum(eig < 0)) - G.degree_shift == degree


def test_step_too_large_and_dimension_limit():
    with pytest.raises(StepTooLarge):
        gf_build(_bump(0.5, 0.2, 1.0))
    G = gf_build(_bump(0.01), 3)
    with pytest.raises(GFError, match="dimension"):
        sublevel_pair_homology(G, 0.005, 0.1)


def test_window_touching_critical_value_is_rejected():
    G = gf_build(_bump(0.01))
    with pytest.raises(WindowTouchesCriticalValue) as err:
        sublevel_pair_homology(G, 0.0002, 0.1)
    assert err.value.value == 0.0
    with pytest.raises(WindowTouchesCriticalValue):
        morse_bott_complex(_bump(0.01), 0.01, 0.1)


def test_grid_values_independent_of_thread_count(monkeypatch):
    G = gf_build(_bump(0.01, domain=ELLIPSE))
    monkeypatch.setenv("SBL_THREADS", "1")
    one = _grid_values(G, (65, 65))[0]
    monkeypatch.setenv("SBL_THREADS", "4")
    four = _grid_values(G, (65, 65))[0]
    assert np.array_equal(one, four)


# ---------------------------------------------------------------- grid backend


@pytest.mark.parametrize("seed", range(4))
def test_planar_fast_path_matches_exact_cubical(seed):
    H = random_radial_bump(seed)
    G = gf_build(H)
    ends = cleared_window_ends(H)
    for a, b in [(ends[0], ends[1]), (ends[1], ends[2]), (ends[0], ends[2])]:
        fast = sublevel_pair_homology(G, a, b, resolution=96, method="graph")
        assert fast == sublevel_pair_homology(G, a, b, resolution=96, method="exact")
    a, b = (ends[0], ends[1]) if H.profile.h(0.0) < 0 else (ends[1], ends[2])
    assert sublevel_pair_homology(G, a, b, resolution=64, method="exact", field=QQ) == sublevel_pair_homology(G, a, b, resolution=64)


@pytest.mark.parametrize("H", [_bump(0.01), _bump(-0.01), _bump(0.01, domain=ELLIPSE)])
def test_grid_refinement_is_stable(H):
    G = gf_build(H)
    for a, b in [(-0.005, 0.005), (0.005, 0.1), (-0.1, 0.005)]:
        assert sublevel_pair_homology(G, a, b, resolution=128) == sublevel_pair_homology(G, a, b, resolution=256)


@pytest.mark.parametrize("height, a, b", [(0.01, 0.005, 0.1), (-0.01, -0.005, 0.005), (-0.01, -0.2, -0.005)])
def test_fiber_stabilization_keeps_homology(height, a, b):
    H = _bump(height)
    planar = sublevel_pair_homology(gf_build(H), a, b)
    assert planar != GradedDims()
    assert sublevel_pair_homology(gf_build(H, fiber=1), a, b) == planar


@pytest.mark.parametrize("seed", range(20))
def test_grid_agrees_with_combinatorial_on_random_windows(seed):
    H = random_radial_bump(seed)
    a, b = random_window(H, seed)
    assert gf_homology_window(H, a, b, backend="grid") == gf_homology_window(H, a, b)


# ---------------------------------------------------------------- combinatorial backend


def test_bump_generators_and_exterior_rule():
    up = orbit_generators(_bump(0.01))[0]
    assert [(g.label, g.degree) for g in up] == [("plateau", 0)]
    down = orbit_generators(_bump(-0.01))[0]
    assert sorted((g.label, g.degree) for g in down) == [("exterior-high", 0), ("exterior-low", -1), ("plateau", -2)]


def test_negative_bump_staircase():
    cx = morse_bott_complex(_bump(-0.01), -0.005, 0.005)
    assert cx.rule == "staircase" and cx.total_ok
    (i, j), = cx.entries
    assert (cx.generators[i].label, cx.generators[j].label) == ("exterior-low", "plateau")
    assert cx.homology(-math.inf, math.inf) == GradedDims({0: 1})
    assert cx.homology(-0.005, 0.005) == GradedDims({-1: 1, 0: 1})


def test_lacunary_window_ranks_are_generator_counts():
    cx = morse_bott_complex(TWO_LEVEL, 0.01, 0.1)
    assert cx.rule == "lacunary" and cx.status == "exact"
    assert cx.homology() == cx.counts() == GradedDims({0: 1})


def test_degenerate_set_in_window_is_indeterminate():
    cx = morse_bott_complex(TWO_LEVEL, 0.002, 0.01)
    assert cx.status == "indeterminate"
    with pytest.raises(Indeterminate) as err:
        cx.homology()
    assert err.value.bounds is None


def test_empty_window():
    cx = morse_bott_complex(RadialHamiltonian(cofinal_profile(C, 10.0), BALL), 50.0, 60.0)
    assert cx.window_generators() == []
    assert cx.homology() == GradedDims()


def test_single_family_window_on_cofinal_profile():
    H = RadialHamiltonian(cofinal_profile(C, 10.0), BALL)
    cx = morse_bott_complex(H, 0.1, C + 0.1)
    gens = cx.window_generators()
    assert len(gens) == 2 and gens[0].manifold == gens[1].manifold
    assert sorted(g.degree for g in gens) == [0, 1]
    assert all(g.winding == -1 for g in gens)


@pytest.mark.parametrize("alpha", [20.0, 45.0, 67.5])
def test_cofinal_complexes_are_consistent(alpha):
    H = RadialHamiltonian(cofinal_profile(C, alpha), BALL)
    cx = morse_bott_complex(H, 0.1, 2.5 * C)
    cx.check()
    assert cx.rule in ("staircase", "truncation")
    assert cx.homology(-math.inf, math.inf) == GradedDims({0: 1})
    assert cx.homology(0.1, 2.5 * C) == GradedDims({0: 1, 3: 1})
    assert cx.to_json()["convention"].startswith("homological")


def test_truncated_complex_refuses_windows_above_its_floor():
    H = RadialHamiltonian(cofinal_profile(C, 20.0), BALL)
    cx = morse_bott_complex(H, 0.1, 1.5 * C)
    assert cx.rule == "truncation"
    with pytest.raises(GFError, match="validity"):
        cx.homology(0.1, cx.valid[1] + 1.0)


def test_forbidden_forced_entry_is_inconsistent():
    # total homology {0: 1} forces d(x2) = x1, but x2 sits below x1 in t
    gens = [Generator("x0", 0, 1.0, 0), Generator("x1", 1, 2.0, 1), Generator("x2", 2, 1.5, 2)]
    with pytest.raises(InconsistentComplex):
        _staircase(gens)
    assert _staircase([Generator("x0", 0, 1.0, 0)]) == {}


def test_window_maps_of_filtered_complex():
    gens = [Generator("e", -1, 0.0, 0), Generator("c", -2, -0.01, 1), Generator("f", 0, 0.0, 0)]
    cx = FilteredComplex(gens, {(0, 1): 1}, F2, "exact", "staircase", (-1.0, 1.0), total_ok=True)
    cx.check()
    assert cx.homology(-0.02, -0.005) == GradedDims({-2: 1})
    assert cx.map_rank((-0.02, -0.005), (-0.02, 0.005)) == GradedDims()
    assert cx.map_rank((-0.005, 0.005), (-0.005, 1.0)) == GradedDims({-1: 1, 0: 1})


@settings(max_examples=40, deadline=None)
@given(st.lists(st.sampled_from([0.1, 0.5 * C, 1.5 * C, 2.5 * C, 3.5 * C]), min_size=3, max_size=3, unique=True))
def test_window_triples_satisfy_exactness(ends):
    a, b, c = sorted(ends)
    cx = morse_bott_complex(RadialHamiltonian(cofinal_profile(C, 20.0), BALL), a, c)
    first, second, third = cx.homology(a, b), cx.homology(a, c), cx.homology(b, c)
    assert les_consistent(_neg(first), _neg(second), _neg(third))


def test_grid_window_triple_satisfies_exactness():
    G = gf_build(_bump(-0.01))
    a, b, c = -0.1, -0.005, 0.005
    dims = [sublevel_pair_homology(G, *w) for w in [(a, b), (a, c), (b, c)]]
    assert les_consistent(*map(_neg, dims))


# ---------------------------------------------------------------- continuation


def test_continuation_identity_and_zero_groups():
    H = RadialHamiltonian(cofinal_profile(C, 10.0), BALL)
    same = continuation_map(H, H, 0.1, 1.5 * C)
    assert same.is_isomorphism and same.ranks == GradedDims({0: 1, 1: 1})
    below = continuation_map(_bump(0.012), _bump(0.006), -0.2, -0.1)
    assert below.ranks == below.source == below.target == GradedDims()


def test_continuation_of_consecutive_cofinal_profiles_is_iso():
    H = RadialHamiltonian(cofinal_profile(C, 13.5), BALL)
    K = RadialHamiltonian(cofinal_profile(C, 9.0), BALL)
    cont = continuation_map(H, K, 0.1, C + 0.1)
    assert cont.is_isomorphism and cont.ranks == GradedDims({0: 1, 1: 1})


def test_continuation_requires_monotonicity():
    with pytest.raises(GFError, match="monotonicity"):
        continuation_map(_bump(0.006), _bump(0.012), 0.003, 0.1)
    with pytest.raises(GFError, match="monotonicity"):
        continuation_map(_bump(0.006), _bump(0.012), 0.003, 0.1, backend="grid", resolution=64)


@pytest.mark.parametrize(
    "H, K, a, b, resolution",
    [
        (_bump(0.012), _bump(0.012), -0.006, 0.006, 64),
        (_bump(0.012), _bump(0.012), 0.006, 0.1, 64),
        (_bump(-0.006), _bump(-0.012), -0.1, -0.009, 128),
    ],
)
def test_grid_continuation_matches_combinatorial(H, K, a, b, resolution):
    grid = continuation_map(H, K, a, b, backend="grid", resolution=resolution)
    comb = continuation_map(H, K, a, b)
    assert (grid.ranks, grid.source, grid.target) == (comb.ranks, comb.source, comb.target)


# ---------------------------------------------------------------- stabilization


@pytest.mark.parametrize(
    "a, b, expected",
    [
        (-3.0, -0.1, {}),
        (0.1, 0.5 * C, {}),
        (0.1, 1.5 * C, {0: 1, 1: 1}),
        (0.1, 2.5 * C, {0: 1, 3: 1}),
    ],
)
def test_stabilized_ball_windows(a, b, expected):
    res = stabilized_gf(BALL, a, b)
    assert res.dims == GradedDims(expected)
    assert len(res.certificate["tail"]) == 3


def test_negative_window_stabilizes_immediately():
    res = stabilized_gf(BALL, -3.0, -0.1, alphas=(4.0, 6.0, 9.0))
    assert res.certificate["tail"] == [4.0, 6.0, 9.0]


@pytest.mark.parametrize("k", [1, 2])
def test_stabilized_output_only_changes_across_the_spectrum(k):
    values = [stabilized_gf(BALL, 0.1, (k + f) * C).dims for f in (0.2, 0.5, 0.8)]
    assert values[0] == values[1] == values[2]
    assert stabilized_gf(BALL, 0.1, (k - 0.2) * C).dims != values[0]


def test_window_just_below_a_period_waits_for_the_orbit_to_settle():
    # cofinal orbit actions approach C from below; at alpha = 4, 6, 9 they already lie under 3.1414
    res = stabilized_gf(BALL, 0.1, 3.1414)
    assert res.dims == GradedDims()
    assert res.certificate["tail"][0] > 9.0
    assert any(e["status"] == "unsettled" for e in res.certificate["trace"])


def test_ellipse_windows_depend_only_on_capacity():
    ellipse = QuadraticDomain(((3.0, 1.0), (1.0, 1.0)), C)
    assert stabilized_gf(ellipse, 0.1, 1.5 * C).dims == stabilized_gf(BALL, 0.1, 1.5 * C).dims


def test_no_stabilization_reports_trace():
    with pytest.raises(NoStabilization) as err:
        stabilized_gf(BALL, 0.1, 1.5 * C, alphas=(4.0, 6.0))
    assert [e["alpha"] for e in err.value.trace] == [4.0, 6.0]


def test_stabilization_preconditions():
    with pytest.raises(WindowTouchesCriticalValue):
        stabilized_gf(BALL, 0.1, C)
    with pytest.raises(GFError, match="C\\^1-small"):
        stabilized_gf(BALL, 0.1, 1.5 * C, backend="grid")
    with pytest.raises(GFError, match="increase"):
        stabilized_gf(BALL, 0.1, 1.5 * C, alphas=(9.0, 4.0, 6.0))
