from __future__ import annotations

import itertools
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sbl.exact_linalg import (
    F2,
    QQ,
    ChainComplex,
    Field,
    GradedDims,
    SparseMatrix,
    homology,
    induced_map_rank,
    mapping_cone,
    matmul,
    rank,
    relative_homology,
    rref,
)


def _det(m: list[list[Fraction]]) -> Fraction:
    if not m:
        return Fraction(1)
    total = Fraction(0)
    for j, v in enumerate(m[0]):
        if v:
            minor = [row[:j] + row[j + 1 :] for row in m[1:]]
            total += (-1) ** j * v * _det(minor)
    return total


def minor_rank(m: list[list[int]]) -> int:
    """Largest nonvanishing minor, the brute-force oracle over Q."""
    rows, cols = len(m), len(m[0]) if m else 0
    for k in range(min(rows, cols), 0, -1):
        for ri in itertools.combinations(range(rows), k):
            for ci in itertools.combinations(range(cols), k):
                if _det([[Fraction(m[i][j]) for j in ci] for i in ri]) != 0:
                    return k
    return 0


def test_field_rejects_composite():
    with pytest.raises(ValueError):
        Field(4)


def test_field_rejects_float():
    with pytest.raises(TypeError):
        QQ(0.5)
    with pytest.raises(TypeError):
        rank([[0.5, 1.0]], QQ)


def test_field_coerces_fraction_mod_p():
    assert Field(5)(Fraction(1, 2)) == 3


@pytest.mark.parametrize(
    "matrix, field, expected",
    [
        ([[1, 0, 0], [0, 1, 0], [0, 0, 1]], F2, 3),
        ([[0] * 5] * 2, F2, 0),
        ([], F2, 0),
        ([[1, 2], [2, 4]], QQ, 1),
        ([[1, 1], [1, 1]], F2, 1),
        ([[2, 0], [0, 1]], F2, 1),
        ([[2, 0], [0, 1]], QQ, 2),
    ],
)
def test_rank_examples(matrix, field, expected):
    assert rank(matrix, field) == expected


def test_rank_matches_minor_oracle_on_example():
    assert rank([[1, 2], [2, 4]], QQ) == minor_rank([[1, 2], [2, 4]]) == 1


small_int_matrix = st.integers(1, 4).flatmap(
    lambda r: st.integers(1, 4).flatmap(
        lambda c: st.lists(st.lists(st.integers(-3, 3), min_size=c, max_size=c), min_size=r, max_size=r)
    )
)


@settings(max_examples=60, deadline=None)
@given(small_int_matrix)
def test_rank_over_q_matches_minors(m):
    assert rank(m, QQ) == minor_rank(m)


@settings(max_examples=80, deadline=None)
@given(small_int_matrix, st.sampled_from([F2, Field(3), QQ]), st.randoms(use_true_random=False))
def test_rank_invariant_under_permutation_and_transpose(m, field, rnd):
    rows = list(m)
    rnd.shuffle(rows)
    transposed = [list(col) for col in zip(*m)]
    assert rank(rows, field) == rank(m, field) == rank(transposed, field)


def test_sparse_triplets_sum_duplicates():
    sm = SparseMatrix.from_triplets(2, 2, [(0, 0, 1), (0, 0, 1), (1, 1, 1)])
    assert rank(sm, F2) == 1
    assert rank(sm, QQ) == 2


def test_homology_single_cell():
    assert homology(ChainComplex({0: 1})) == {0: 1}


def test_homology_exact_pair():
    assert homology(ChainComplex({0: 1, 1: 1}, {0: [[1]]})) == {}


def triangle_circle() -> ChainComplex:
    # simplicial triangle: vertices a,b,c ; edges ab, bc, ca
    boundary = [[1, 0, 1], [1, 1, 0], [0, 1, 1]]
    return ChainComplex({0: 3, 1: 3}, {1: boundary}, step=-1)


def test_circle_two_cells_matches_triangle_oracle():
    two_cell = ChainComplex({0: 1, 1: 1}, {1: [[0]]}, step=-1)
    assert homology(two_cell) == homology(triangle_circle()) == {0: 1, 1: 1}


def test_circle_over_q_with_signs():
    boundary = [[-1, 0, 1], [1, -1, 0], [0, 1, -1]]
    c = ChainComplex({0: 3, 1: 3}, {1: boundary}, field=QQ, step=-1)
    assert homology(c) == {0: 1, 1: 1}


def disk() -> ChainComplex:
    # vertex v, edge e (loop), face f with boundary e
    return ChainComplex({0: 1, 1: 1, 2: 1}, {1: [[0]], 2: [[1]]}, step=-1)


def test_disk_relative_boundary():
    assert relative_homology(disk(), {0: [0], 1: [0]}) == {2: 1}


def test_disk_relative_triangulated_oracle():
    # triangle with its face: relative to the three edges and vertices
    c = ChainComplex(
        {0: 3, 1: 3, 2: 1},
        {1: [[1, 0, 1], [1, 1, 0], [0, 1, 1]], 2: [[1], [1], [1]]},
        step=-1,
    )
    assert relative_homology(c, {0: [0, 1, 2], 1: [0, 1, 2]}) == {2: 1}


def test_relative_trivial_cases():
    c = disk()
    assert relative_homology(c, {0: [0], 1: [0], 2: [0]}) == {}
    assert relative_homology(c, {}) == homology(c)


def test_relative_rejects_non_closed():
    with pytest.raises(ValueError):
        relative_homology(disk(), {2: [0]})


def test_homology_rejects_nonzero_square():
    bad = ChainComplex({0: 1, 1: 1, 2: 1}, {0: [[1]], 1: [[1]]})
    with pytest.raises(ValueError):
        homology(bad)


def test_shape_mismatch_rejected():
    with pytest.raises(ValueError):
        ChainComplex({0: 2, 1: 1}, {0: [[1, 0, 1]]})


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(0, 3), min_size=2, max_size=4), st.randoms(use_true_random=False))
def test_euler_characteristic_matches(dims, rnd):
    # random complex built as d = B A with B A = 0 forced by splitting through a kernel
    field = QQ
    n = len(dims)
    diffs = {}
    for k in range(n - 1):
        diffs[k] = [[0] * dims[k] for _ in range(dims[k + 1])]
    # place a random partial matching: disjoint pivots keep d^2 = 0
    used_src: set[tuple[int, int]] = set()
    used_tgt: set[tuple[int, int]] = set()
    for k in range(n - 1):
        for j in range(dims[k]):
            for i in range(dims[k + 1]):
                if (k, j) in used_tgt or (k + 1, i) in used_src:
                    continue
                if (k, j) in used_src or (k + 1, i) in used_tgt:
                    continue
                if rnd.random() < 0.5:
                    diffs[k][i][j] = rnd.choice([1, 2, -1])
                    used_src.add((k, j))
                    used_tgt.add((k + 1, i))
    c = ChainComplex(dict(enumerate(dims)), diffs, field=field)
    h = homology(c)
    assert h.euler() == c.euler_characteristic()


def test_graded_dims_normalizes():
    g = GradedDims({0: 1, 1: 0, 2: 3})
    assert g == {0: 1, 2: 3}
    assert g.shift(-1) == {-1: 1, 1: 3}
    assert g[7] == 0
    assert GradedDims.from_json(g.to_json()) == g
    with pytest.raises(ValueError):
        GradedDims({0: -1})


def test_rref_pivots():
    m, piv = rref([[1, 2, 3], [2, 4, 7]], QQ)
    assert piv == [0, 2]
    assert m[0] == [1, 2, 0]


# ---------------------------------------------------------------- induced maps


def _identity_map(c: ChainComplex, scale: int = 1) -> dict[int, list[list[int]]]:
    return {k: [[scale if i == j else 0 for j in range(n)] for i in range(n)] for k, n in c.dims.items()}


def test_inclusion_of_boundary_circle_into_disk():
    # circle = vertex + loop edge, the subcomplex of disk() without the face
    circle = ChainComplex({0: 1, 1: 1}, {1: [[0]]}, step=-1)
    maps = {0: [[1]], 1: [[1]]}
    assert induced_map_rank(circle, disk(), maps) == {0: 1}
    assert homology(mapping_cone(circle, disk(), maps)) == {2: 1}


def test_point_into_circle_and_zero_map():
    point = ChainComplex({0: 1}, step=-1)
    circle = triangle_circle()
    assert induced_map_rank(point, circle, {0: [[1], [0], [0]]}) == {0: 1}
    assert induced_map_rank(circle, circle, {}) == {}


def test_non_chain_map_rejected():
    # the face alone is not a chain map disk -> disk: d f != f d in degree 2
    with pytest.raises(ValueError):
        induced_map_rank(disk(), disk(), {2: [[1]]})


def _matching_complex(dims: list[int], field: Field, step: int, rnd) -> ChainComplex:
    # disjoint pivots make every composite of two differentials vanish
    n = len(dims)
    d, used = {}, set()
    for k in range(n):
        tgt = k + step
        if not 0 <= tgt < n:
            continue
        d[k] = [[0] * dims[k] for _ in range(dims[tgt])]
        for j in range(dims[k]):
            for i in range(dims[tgt]):
                if (k, j) in used or (tgt, i) in used or rnd.random() < 0.5:
                    continue
                d[k][i][j] = rnd.choice([1, 2, -1])
                used |= {(k, j), (tgt, i)}
    return ChainComplex(dict(enumerate(dims)), d, field=field, step=step)


def _dense(c: ChainComplex, k: int) -> list[list[int]]:
    rows = c.dims.get(k + c.step, 0)
    cols = c.differential(k).cols
    out = [[0] * len(cols) for _ in range(rows)]
    for j, col in enumerate(cols):
        items = {i: 1 for i in range(rows) if col >> i & 1} if isinstance(col, int) else col
        for i, v in items.items():
            out[i][j] = v
    return out


@settings(max_examples=60, deadline=None)
@given(
    st.lists(st.integers(1, 3), min_size=2, max_size=4),
    st.sampled_from([F2, Field(3), QQ]),
    st.sampled_from([1, -1]),
    st.integers(0, 1),
    st.randoms(use_true_random=False),
)
def test_homotopic_maps_have_equal_ranks(dims, field, step, scale, rnd):
    # f = scale * id + d h + h d with h_k: C^k -> C^(k - step) induces scale * id
    c = _matching_complex(dims, field, step, rnd)
    n = len(dims)
    h = {k: [[rnd.choice([0, 1, -1]) for _ in range(dims[k])] for _ in range(dims[k - step])] for k in range(n) if 0 <= k - step < n}
    f = {}
    for k in range(n):
        total = [[field(scale if i == j else 0) for j in range(dims[k])] for i in range(dims[k])]
        terms = []
        if k in h:
            terms.append(matmul(_dense(c, k - step), h[k], field))
        if k + step in h:
            terms.append(matmul(h[k + step], _dense(c, k), field))
        for t in terms:
            total = [[field(x + y) for x, y in zip(r1, r2)] for r1, r2 in zip(total, t)]
        f[k] = total
    expected = homology(c) if scale else GradedDims()
    assert induced_map_rank(c, c, f) == expected
