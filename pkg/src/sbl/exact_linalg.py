"""Exact linear algebra over a prime field or the rationals.

Matrices are accepted as nested sequences, integer numpy arrays or
:class:`SparseMatrix` triplets. Internally every matrix is a list of sparse
columns: a Python ``int`` bitmask over F_2, a ``dict`` row -> value otherwise.
Floats are rejected everywhere; scalars stay exact.
"""

from __future__ import annotations

from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Integral, Rational
from typing import Any, Union

Scalar = Union[int, Fraction]


def _is_prime(p: int) -> bool:
    if p < 2:
        return False
    i = 2
    while i * i <= p:
        if p % i == 0:
            return False
        i += 1
    return True


class Field:
    """Coefficient field: ``Field(p)`` for F_p with p prime, ``Field(0)`` for Q."""

    __slots__ = ("char",)

    def __init__(self, char: int = 2):
        char = int(char)
        if char != 0 and not _is_prime(char):
            raise ValueError(f"field characteristic must be 0 or prime, got {char}")
        self.char = char

    @classmethod
    def from_tag(cls, tag: str) -> "Field":
        tag = tag.strip().lower()
        if tag in ("q", "qq", "rationals", "0"):
            return cls(0)
        if tag.startswith("f"):
            tag = tag[1:]
        return cls(int(tag))

    @property
    def tag(self) -> str:
        return "q" if self.char == 0 else f"f{self.char}"

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Field) and other.char == self.char

    def __hash__(self) -> int:
        return hash(("Field", self.char))

    def __repr__(self) -> str:
        return "QQ" if self.char == 0 else f"GF({self.char})"

    def __call__(self, x: Any) -> Scalar:
        if isinstance(x, bool):
            x = int(x)
        if isinstance(x, float):
            raise TypeError("floating-point scalars are not allowed in exact linear algebra")
        if self.char == 0:
            if isinstance(x, (Integral, Rational)):
                return Fraction(x)
            if hasattr(x, "item"):
                return self(x.item())
            raise TypeError(f"cannot coerce {type(x).__name__} into QQ")
        p = self.char
        if isinstance(x, Integral):
            return int(x) % p
        if isinstance(x, Rational):
            den = int(x.denominator) % p
            if den == 0:
                raise ZeroDivisionError(f"denominator divisible by {p}")
            return int(x.numerator) * pow(den, -1, p) % p
        if hasattr(x, "item"):
            return self(x.item())
        raise TypeError(f"cannot coerce {type(x).__name__} into GF({p})")

    def inv(self, x: Scalar) -> Scalar:
        if x == 0:
            raise ZeroDivisionError("inverse of zero")
        if self.char == 0:
            return 1 / Fraction(x)
        return pow(int(x), -1, self.char)

    def reduce(self, x: Scalar) -> Scalar:
        return x if self.char == 0 else x % self.char


F2 = Field(2)
QQ = Field(0)


class GradedDims(dict):
    """Finitely supported map degree -> rank; zero entries are dropped."""

    def __init__(self, data: Mapping[Any, int] | Iterable[tuple[Any, int]] | None = None, **kw: int):
        super().__init__()
        src = dict(data) if data is not None else {}
        src.update(kw)
        for k, v in src.items():
            k = int(k)
            v = int(v)
            if v < 0:
                raise ValueError(f"negative rank {v} in degree {k}")
            if v:
                super().__setitem__(k, super().get(k, 0) + v)

    def __setitem__(self, key: int, value: int) -> None:
        if value < 0:
            raise ValueError("negative rank")
        if value:
            super().__setitem__(int(key), int(value))
        else:
            super().pop(int(key), None)

    def __missing__(self, key: int) -> int:
        return 0

    def __add__(self, other: Mapping[int, int]) -> "GradedDims":
        out = dict(self)
        for k, v in other.items():
            out[k] = out.get(k, 0) + v
        return GradedDims(out)

    def shift(self, n: int) -> "GradedDims":
        """Move every rank from degree k to degree k + n."""
        return GradedDims({k + n: v for k, v in self.items()})

    def total(self) -> int:
        return sum(self.values())

    def euler(self) -> int:
        return sum((-1) ** (k % 2) * v for k, v in self.items())

    def to_json(self) -> dict[str, int]:
        return {str(k): v for k, v in sorted(self.items())}

    @classmethod
    def from_json(cls, data: Mapping[str, int]) -> "GradedDims":
        return cls({int(k): v for k, v in data.items()})

    def __repr__(self) -> str:
        return "{" + ", ".join(f"{k}: {v}" for k, v in sorted(self.items())) + "}"


@dataclass(frozen=True)
class SparseMatrix:
    """Triplet-form matrix; duplicate entries are summed in the target field."""

    nrows: int
    ncols: int
    triplets: tuple[tuple[int, int, Any], ...] = field(default=())

    @classmethod
    def from_triplets(cls, nrows: int, ncols: int, triplets: Iterable[tuple[int, int, Any]]) -> "SparseMatrix":
        return cls(nrows, ncols, tuple(triplets))


MatrixLike = Union[Sequence[Sequence[Any]], SparseMatrix, Any]


@dataclass
class _Cols:
    nrows: int
    cols: list
    field: Field


def _columns(m: MatrixLike, fld: Field, shape: tuple[int, int] | None = None) -> _Cols:
    """Convert any accepted matrix form into sparse columns over ``fld``."""
    if isinstance(m, _Cols):
        return m
    binary = fld.char == 2
    if isinstance(m, SparseMatrix):
        nrows, ncols = m.nrows, m.ncols
        cols: list = [0 if binary else {} for _ in range(ncols)]
        for i, j, v in m.triplets:
            if not (0 <= i < nrows and 0 <= j < ncols):
                raise ValueError(f"triplet ({i},{j}) outside {nrows}x{ncols}")
            x = fld(v)
            if binary:
                if x:
                    cols[j] ^= 1 << i
            else:
                y = fld.reduce(cols[j].get(i, 0) + x)
                if y:
                    cols[j][i] = y
                else:
                    cols[j].pop(i, None)
    else:
        if hasattr(m, "dtype") and getattr(m.dtype, "kind", "") == "f":
            raise TypeError("floating-point matrices are not allowed in exact linear algebra")
        rows = [list(r) for r in m]
        nrows = len(rows)
        ncols = len(rows[0]) if nrows else (shape[1] if shape else 0)
        if any(len(r) != ncols for r in rows):
            raise ValueError("ragged matrix")
        cols = [0 if binary else {} for _ in range(ncols)]
        for i, r in enumerate(rows):
            for j, v in enumerate(r):
                x = fld(v)
                if x:
                    if binary:
                        cols[j] |= 1 << i
                    else:
                        cols[j][i] = x
    if shape is not None and (nrows, len(cols)) != tuple(shape):
        if not (nrows == 0 and len(cols) == 0 and 0 in shape):
            raise ValueError(f"matrix shape {(nrows, len(cols))} does not match declared {tuple(shape)}")
        nrows, cols = shape[0], [0 if binary else {} for _ in range(shape[1])]
    return _Cols(nrows, cols, fld)


def _rank_cols(c: _Cols) -> int:
    """Column-reduction rank with pivot on the lowest nonzero row."""
    fld = c.field
    if fld.char == 2:
        pivots: dict[int, int] = {}
        r = 0
        for col in c.cols:
            while col:
                low = col.bit_length() - 1
                other = pivots.get(low)
                if other is None:
                    pivots[low] = col
                    r += 1
                    break
                col ^= other
        return r
    pivots_d: dict[int, dict] = {}
    r = 0
    for col in c.cols:
        col = dict(col)
        while col:
            low = max(col)
            other = pivots_d.get(low)
            if other is None:
                inv = fld.inv(col[low])
                pivots_d[low] = {i: fld.reduce(v * inv) for i, v in col.items()}
                r += 1
                break
            factor = col[low]
            for i, v in other.items():
                y = fld.reduce(col.get(i, 0) - factor * v)
                if y:
                    col[i] = y
                else:
                    col.pop(i, None)
    return r


def rank(matrix: MatrixLike, field: Field = F2) -> int:
    """Rank of an exact matrix over ``field``; the empty matrix has rank 0."""
    return _rank_cols(_columns(matrix, field))


def _compose(a: _Cols, b: _Cols) -> _Cols:
    """Columns of a @ b."""
    fld = a.field
    out: list = []
    if fld.char == 2:
        for col in b.cols:
            acc = 0
            while col:
                low = col & -col
                acc ^= a.cols[low.bit_length() - 1]
                col ^= low
            out.append(acc)
    else:
        for col in b.cols:
            acc: dict = {}
            for k, v in col.items():
                for i, w in a.cols[k].items():
                    y = fld.reduce(acc.get(i, 0) + v * w)
                    if y:
                        acc[i] = y
                    else:
                        acc.pop(i, None)
            out.append(acc)
    return _Cols(a.nrows, out, fld)


def _is_zero(c: _Cols) -> bool:
    return not any(c.cols)


def _support(col: Any) -> Iterable[int]:
    if isinstance(col, int):
        while col:
            low = col & -col
            yield low.bit_length() - 1
            col ^= low
    else:
        yield from col.keys()


class ChainComplex:
    """Finite complex with ``d[k]: C^k -> C^(k+step)``.

    ``step=+1`` is the cohomological convention (the default); cellular
    chain complexes use ``step=-1``. ``d[k]`` has shape
    ``(dims[k+step], dims[k])``; missing differentials are zero.
    """

    def __init__(
        self,
        dims: Mapping[int, int],
        differentials: Mapping[int, MatrixLike] | None = None,
        field: Field = F2,
        step: int = 1,
    ):
        if step not in (1, -1):
            raise ValueError("step must be +1 or -1")
        self.field = field
        self.step = step
        self.dims = {int(k): int(v) for k, v in dims.items() if int(v) > 0}
        if any(v < 0 for v in dims.values()):
            raise ValueError("negative chain dimension")
        self.d: dict[int, _Cols] = {}
        for k, m in (differentials or {}).items():
            k = int(k)
            shape = (self.dims.get(k + step, 0), self.dims.get(k, 0))
            self.d[k] = _columns(m, field, shape)

    def differential(self, k: int) -> _Cols:
        got = self.d.get(k)
        if got is not None:
            return got
        binary = self.field.char == 2
        return _Cols(self.dims.get(k + self.step, 0), [0 if binary else {} for _ in range(self.dims.get(k, 0))], self.field)

    def degrees(self) -> list[int]:
        return sorted(self.dims)

    def check_square_zero(self) -> None:
        for k in self.degrees():
            first = self.differential(k)
            second = self.differential(k + self.step)
            if first.cols and second.cols and not _is_zero(_compose(second, first)):
                raise ValueError(f"d^2 != 0 starting in degree {k}")

    def euler_characteristic(self) -> int:
        return sum((-1) ** (k % 2) * v for k, v in self.dims.items())

    def restricted(self, keep: Mapping[int, Sequence[int]]) -> "ChainComplex":
        """The complex spanned by the kept basis vectors, rows outside dropped."""
        binary = self.field.char == 2
        new_d: dict[int, SparseMatrix] = {}
        dims = {k: len(v) for k, v in keep.items()}
        for k, cols in keep.items():
            target = keep.get(k + self.step, [])
            row_index = {r: i for i, r in enumerate(target)}
            trip = []
            src = self.differential(k)
            for j, c in enumerate(cols):
                col = src.cols[c]
                if binary:
                    for r in _support(col):
                        if r in row_index:
                            trip.append((row_index[r], j, 1))
                else:
                    for r, v in col.items():
                        if r in row_index:
                            trip.append((row_index[r], j, v))
            new_d[k] = SparseMatrix(len(target), len(cols), tuple(trip))
        return ChainComplex(dims, new_d, self.field, self.step)


def homology(c: ChainComplex) -> GradedDims:
    """Per-degree dim ker - dim im; rejects complexes with d^2 != 0."""
    c.check_square_zero()
    ranks = {k: _rank_cols(c.differential(k)) for k in c.degrees()}
    out = {}
    for k, n in c.dims.items():
        out[k] = n - ranks.get(k, 0) - ranks.get(k - c.step, 0)
    return GradedDims(out)


def relative_homology(c: ChainComplex, sub: Mapping[int, Iterable[int]]) -> GradedDims:
    """Homology of the quotient C/A for a differential-closed basis subset A."""
    chosen = {int(k): set(v) for k, v in sub.items()}
    for k, idx in chosen.items():
        n = c.dims.get(k, 0)
        if any(not (0 <= i < n) for i in idx):
            raise ValueError(f"selection index out of range in degree {k}")
        target = chosen.get(k + c.step, set())
        src = c.differential(k)
        for i in idx:
            if any(r not in target for r in _support(src.cols[i])):
                raise ValueError(f"selection is not closed under the differential (degree {k}, cell {i})")
    keep = {k: [i for i in range(n) if i not in chosen.get(k, set())] for k, n in c.dims.items()}
    return homology(c.restricted(keep))


def _entries(c: _Cols) -> Iterable[tuple[int, int, Scalar]]:
    for j, col in enumerate(c.cols):
        if isinstance(col, int):
            for i in _support(col):
                yield i, j, 1
        else:
            for i, v in col.items():
                yield i, j, v


def mapping_cone(src: ChainComplex, dst: ChainComplex, maps: Mapping[int, MatrixLike]) -> ChainComplex:
    """``Cone^k = src^(k+step) + dst^k`` with ``d(c, x) = (-d c, f c + d x)``."""
    if src.field != dst.field or src.step != dst.step:
        raise ValueError("chain map between complexes of different fields or conventions")
    fld, s = src.field, src.step
    degrees = set(dst.dims) | {k - s for k in src.dims}
    dims = {k: src.dims.get(k + s, 0) + dst.dims.get(k, 0) for k in degrees}
    diffs = {}
    for k in degrees:
        top = src.dims.get(k + s, 0)  # offset of the dst block in Cone^k
        top_next = src.dims.get(k + 2 * s, 0)
        trip = [(i, j, fld.reduce(-v)) for i, j, v in _entries(src.differential(k + s))]
        if k + s in maps and src.dims.get(k + s, 0) and dst.dims.get(k + s, 0):
            f = _columns(maps[k + s], fld, (dst.dims[k + s], src.dims[k + s]))
            trip += [(top_next + i, j, v) for i, j, v in _entries(f)]
        trip += [(top_next + i, top + j, v) for i, j, v in _entries(dst.differential(k))]
        diffs[k] = SparseMatrix(dims.get(k + s, 0), dims[k], tuple(trip))
    return ChainComplex(dims, diffs, fld, s)


def induced_map_rank(src: ChainComplex, dst: ChainComplex, maps: Mapping[int, MatrixLike]) -> GradedDims:
    """Per-degree rank of the map on homology induced by the chain map ``maps[k]: src^k -> dst^k``.

    The long exact sequence of the mapping cone gives
    ``h^k(Cone) = h^k(dst) - r_k + h^(k+step)(src) - r_(k+step)``, solved for
    the ranks ``r`` starting where ``r_(k+step) = 0``; only sparse ranks are needed.
    """
    hs, hd, hc = homology(src), homology(dst), homology(mapping_cone(src, dst, maps))
    s = src.step
    degrees = sorted(set(hs) | set(hd) | set(hc))
    if not degrees:
        return GradedDims()
    order = range(degrees[0] - 1, degrees[-1] + 2) if s == -1 else range(degrees[-1] + 1, degrees[0] - 2, -1)
    r: dict[int, int] = {}
    for k in order:
        r[k] = hd.get(k, 0) + hs.get(k + s, 0) - r.get(k + s, 0) - hc.get(k, 0)
        if not 0 <= r[k] <= min(hs.get(k, 0), hd.get(k, 0)):
            raise ValueError(f"maps do not form a chain map (inconsistent rank {r[k]} in degree {k})")
    return GradedDims({k: v for k, v in r.items() if v})


def to_dense(m: MatrixLike, field: Field = F2) -> list[list[Scalar]]:
    """Dense row-major copy over ``field``."""
    c = _columns(m, field)
    out = [[field(0)] * len(c.cols) for _ in range(c.nrows)]
    for j, col in enumerate(c.cols):
        if isinstance(col, int):
            for i in _support(col):
                out[i][j] = 1
        else:
            for i, v in col.items():
                out[i][j] = v
    return out


def matmul(a: Sequence[Sequence[Scalar]], b: Sequence[Sequence[Scalar]], field: Field = F2) -> list[list[Scalar]]:
    if a and b and len(a[0]) != len(b):
        raise ValueError("shape mismatch in matmul")
    ncols = len(b[0]) if b else 0
    return [
        [field.reduce(sum((field(a[i][k]) * field(b[k][j]) for k in range(len(b))), field(0))) for j in range(ncols)]
        for i in range(len(a))
    ]


def identity(n: int, field: Field = F2) -> list[list[Scalar]]:
    return [[field(1 if i == j else 0) for j in range(n)] for i in range(n)]


def trace(a: Sequence[Sequence[Scalar]], field: Field = F2) -> Scalar:
    if any(len(r) != len(a) for r in a):
        raise ValueError("trace of a non-square matrix")
    return field.reduce(sum((field(a[i][i]) for i in range(len(a))), field(0)))


def rref(a: Sequence[Sequence[Any]], field: Field = F2) -> tuple[list[list[Scalar]], list[int]]:
    """Reduced row echelon form and pivot columns."""
    m = [[field(x) for x in row] for row in a]
    pivots: list[int] = []
    r = 0
    ncols = len(m[0]) if m else 0
    for j in range(ncols):
        piv = next((i for i in range(r, len(m)) if m[i][j] != 0), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        inv = field.inv(m[r][j])
        m[r] = [field.reduce(x * inv) for x in m[r]]
        for i in range(len(m)):
            if i != r and m[i][j] != 0:
                f = m[i][j]
                m[i] = [field.reduce(x - f * y) for x, y in zip(m[i], m[r])]
        pivots.append(j)
        r += 1
        if r == len(m):
            break
    return m, pivots


def nullspace(a: Sequence[Sequence[Any]], ncols: int, field: Field = F2) -> list[list[Scalar]]:
    """Basis of the right kernel as column vectors (returned as lists)."""
    if not a:
        return [[field(1 if i == j else 0) for i in range(ncols)] for j in range(ncols)]
    m, piv = rref(a, field)
    free = [j for j in range(ncols) if j not in piv]
    basis = []
    for f in free:
        v = [field(0)] * ncols
        v[f] = field(1)
        for r, pc in enumerate(piv):
            v[pc] = field.reduce(-m[r][f])
        basis.append(v)
    return basis


def solve(a: Sequence[Sequence[Any]], b: Sequence[Any], ncols: int, field: Field = F2) -> list[Scalar] | None:
    """One solution x of a x = b, or None."""
    if not a:
        return [field(0)] * ncols if all(field(x) == 0 for x in b) else None
    aug = [list(r) + [b[i]] for i, r in enumerate(a)]
    m, piv = rref(aug, field)
    if ncols in piv:
        return None
    x = [field(0)] * ncols
    for r, pc in enumerate(piv):
        x[pc] = m[r][ncols]
    return x


def apply(a: Sequence[Sequence[Scalar]], v: Sequence[Scalar], field: Field = F2) -> list[Scalar]:
    return [field.reduce(sum((field(r[j]) * field(v[j]) for j in range(len(v))), field(0))) for r in a]


def columns_to_rows(cols: Sequence[Sequence[Scalar]], nrows: int) -> list[list[Scalar]]:
    """Assemble column vectors into a row-major matrix."""
    return [[c[i] for c in cols] for i in range(nrows)]
