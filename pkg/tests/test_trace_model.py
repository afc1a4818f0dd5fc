from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sbl.exact_linalg import F2, QQ, identity, matmul, trace
from sbl.trace_model import (
    NotIdempotent,
    random_matrix,
    random_split_idempotent,
    split_idempotent,
    trace_retract_check,
)

FIELDS = [F2, QQ]


@pytest.mark.parametrize("field", FIELDS)
@pytest.mark.parametrize("n", [1, 2, 4])
def test_identity_splits_as_identity(field, n):
    d = split_idempotent(identity(n, field), field)
    assert d.r == identity(n, field) and d.i == identity(n, field)


@pytest.mark.parametrize("field", FIELDS)
def test_zero_matrix_has_rank_zero_split(field):
    d = split_idempotent([[0, 0, 0]] * 3, field)
    assert d.rank == 0
    assert trace_retract_check([[0, 0, 0]] * 3, field).passed


def test_diagonal_projector_split():
    d = split_idempotent([[1, 0, 0], [0, 1, 0], [0, 0, 0]], QQ)
    assert d.rank == 2
    assert matmul(d.r, d.i, QQ) == identity(2, QQ)


def test_rank_one_diagonal_trace():
    rep = trace_retract_check([[1, 0], [0, 0]], QQ)
    assert rep.trace_e == 1 == rep.trace_retract and rep.rank == 1


def test_oblique_projector_split():
    # projection onto the x-axis along (1, 1)
    d = split_idempotent([[1, -1], [0, 0]], QQ)
    assert d.rank == 1
    assert matmul(d.i, d.r, QQ) == d.e


@pytest.mark.parametrize("field", FIELDS)
def test_non_idempotents_are_rejected(field):
    with pytest.raises(NotIdempotent):
        split_idempotent([[0, 1], [0, 0]], field)
    with pytest.raises(ValueError):
        split_idempotent([[1, 0]], field)


def test_over_f2_trace_is_rank_mod_two():
    e = random_split_idempotent(6, 2, F2, seed=1)
    rep = trace_retract_check(e, F2)
    assert rep.rank == 2 and rep.trace_e == 0 == rep.trace_retract


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(FIELDS), st.integers(1, 6), st.data())
def test_random_idempotent_traces_match_retract(field, n, data):
    rank = data.draw(st.integers(0, n))
    seed = data.draw(st.integers(0, 10**6))
    e = random_split_idempotent(n, rank, field, seed)
    assert matmul(e, e, field) == e
    rep = trace_retract_check(e, field, seed=seed)
    assert rep.passed
    assert rep.rank == rank
    assert rep.trace_e == field(rank)


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(FIELDS), st.integers(1, 5), st.integers(1, 5), st.integers(0, 10**6))
def test_trace_commutes(field, p, q, seed):
    rng = random.Random(seed)
    a, b = random_matrix(p, q, field, rng), random_matrix(q, p, field, rng)
    assert trace(matmul(a, b, field), field) == trace(matmul(b, a, field), field)


def test_random_split_rejects_bad_rank():
    with pytest.raises(ValueError):
        random_split_idempotent(3, 4)
