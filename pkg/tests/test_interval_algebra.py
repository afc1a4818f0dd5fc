from __future__ import annotations

import json
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sbl.interval_algebra import (
    INF,
    IntervalSummand,
    SheafOnR,
    convention_ledger,
    dshift,
    interval,
    normalize,
    point,
    quiver_model,
    rhom_graded,
    sheaf,
    stalk,
    translate,
)
from strategies import sheaves, small_sheaves


def test_normalize_merges_multiplicity():
    F = normalize([interval(0, 1), interval(0, 1)])
    assert F.summands == (interval(0, 1, mult=2),)


def test_normalize_empty_and_point():
    assert normalize([]) == SheafOnR()
    P = sheaf(point(0))
    assert normalize(P) == P
    assert P.summands[0].is_point


@pytest.mark.parametrize(
    "args",
    [
        (1, True, 0, True),
        (0, True, 0, False),
        (-INF, True, 0, False),
        (0, True, INF, True),
        (INF, False, INF, False),
    ],
)
def test_summand_invariants_rejected(args):
    with pytest.raises(ValueError):
        IntervalSummand(*args)


@settings(max_examples=100, deadline=None)
@given(sheaves)
def test_normalize_idempotent(F):
    assert normalize(normalize(F)) == normalize(F)


def test_translate_examples():
    assert translate(sheaf(interval(0, INF)), 3) == sheaf(interval(3, INF))


@settings(max_examples=100, deadline=None)
@given(sheaves, st.fractions(-5, 5, max_denominator=4), st.fractions(-5, 5, max_denominator=4))
def test_translate_group_action(F, a, b):
    assert translate(F, 0) == F
    assert translate(translate(F, a), b) == translate(F, a + b)


@settings(max_examples=50, deadline=None)
@given(sheaves, st.integers(-3, 3))
def test_dshift_inverse(F, n):
    assert dshift(dshift(F, n), -n) == F
    assert dshift(sheaf(point(0)), 0) == sheaf(point(0))


def test_dshift_open_interval():
    a = 2
    assert dshift(sheaf(interval(-a, a, "()")), 1) == sheaf(interval(-a, a, "()", shift=1))


def test_quiver_model_half_open():
    rep = quiver_model(sheaf(interval(0, 1, "[)")))
    assert [(s.lo, s.hi) for s in rep.strata] == [(-INF, 0), (0, 0), (0, 1), (1, 1), (1, INF)]
    assert rep.dims == {0: [0, 1, 1, 0, 0]}


def test_quiver_model_point_and_line():
    assert quiver_model(sheaf(point(0))).dims == {0: [0, 1, 0]}
    rep = quiver_model(sheaf(interval(-INF, INF, "()")), extra_points=[0, 1])
    assert rep.dims == {0: [1] * 5}
    assert all(m == [[1]] for m in rep.maps[0].values())


def test_quiver_model_stalk_degrees_follow_shift():
    rep = quiver_model(sheaf(interval(0, 1, "[]", shift=2)))
    assert rep.stalk(Fraction(1, 2)) == {-2: 1}


def test_rhom_half_lines_direction():
    assert rhom_graded(sheaf(interval(0, INF)), sheaf(interval(1, INF))) == {0: 1}
    assert rhom_graded(sheaf(interval(1, INF)), sheaf(interval(0, INF))) == {}


def test_rhom_disjoint_points():
    assert rhom_graded(sheaf(point(0)), sheaf(point(1))) == {}


def test_rhom_local_cohomology_of_point():
    # sections supported at an interior point of an open interval sit in degree 1
    assert rhom_graded(sheaf(point(0)), sheaf(interval(-1, 1, "()"))) == {1: 1}
    assert rhom_graded(sheaf(interval(-1, 1, "()")), sheaf(point(0))) == {0: 1}


def test_rhom_half_open_bar_is_fiber_of_half_lines():
    # 1_[0,1) = fib(1_[0,inf) -> 1_[1,inf)): Hom(1_[c,inf), -) has a class in degree 1 for 0 < c <= 1
    bar = sheaf(interval(0, 1))
    samples = [rhom_graded(sheaf(interval(c, INF)), bar) for c in (-1, 0, Fraction(1, 2), 1, 2)]
    assert samples == [{}, {}, {1: 1}, {1: 1}, {}]


@settings(max_examples=60, deadline=None)
@given(small_sheaves)
def test_rhom_self_contains_identities(F):
    assert rhom_graded(F, F)[0] >= len(F.summands)


@settings(max_examples=60, deadline=None)
@given(small_sheaves, small_sheaves, st.lists(st.fractions(-8, 8, max_denominator=3), max_size=4))
def test_rhom_refinement_invariant(F, G, extra):
    assert rhom_graded(F, G, extra) == rhom_graded(F, G)


@settings(max_examples=60, deadline=None)
@given(small_sheaves, small_sheaves, small_sheaves)
def test_rhom_additive(F, F2_, G):
    assert rhom_graded(F + F2_, G) == rhom_graded(F, G) + rhom_graded(F2_, G)


@settings(max_examples=60, deadline=None)
@given(small_sheaves, small_sheaves, st.integers(-2, 2))
def test_rhom_shift(F, G, n):
    # RHom(F[n], G) = RHom(F, G)[-n]: a class in degree d moves to d + n
    assert rhom_graded(dshift(F, n), G) == rhom_graded(F, G).shift(n)


@settings(max_examples=60, deadline=None)
@given(small_sheaves, small_sheaves, st.fractions(-5, 5, max_denominator=4))
def test_rhom_translation_invariant(F, G, c):
    assert rhom_graded(translate(F, c), translate(G, c)) == rhom_graded(F, G)


def test_json_roundtrip():
    F = sheaf(interval(-INF, Fraction(1, 2), "()", shift=1, mult=2), point(3), interval(0, INF))
    data = json.loads(json.dumps(F.to_json()))
    assert SheafOnR.from_json(data) == F
    assert data[0]["left"] == "-inf"


@pytest.mark.parametrize("bad", ['{"left": 0}', '[{"left": 0, "right": 1}]', '[{"left":0,"left_closed":1,"right":1,"right_closed":true}]'])
def test_json_rejects(bad):
    with pytest.raises(ValueError):
        SheafOnR.from_json(bad)


def test_stalk():
    F = sheaf(interval(0, 1, "[)", shift=1), interval(0, 2, "(]"))
    assert stalk(F, 0) == {-1: 1}
    assert stalk(F, 1) == {0: 1}


def test_convention_ledger_is_generated_by_oracle():
    led = convention_ledger()
    assert led["Hom(1_[0,inf), 1_[1,inf))"] == {"0": 1}
    assert led["Hom(1_[1,inf), 1_[0,inf))"] == {}


def test_random_field_tag_mismatch_rejected():
    from sbl.exact_linalg import QQ

    with pytest.raises(ValueError):
        rhom_graded(sheaf(point(0)), SheafOnR((point(0),), QQ))
