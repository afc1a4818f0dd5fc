"""Matrix model of traces of idempotents and of their retracts.

An idempotent ``e`` on ``k^n`` splits as ``e = i r`` with ``r i = id`` on
its image; the trace of ``e`` then equals the trace of the identity of the
retract, by commutativity of the trace. Over a field of characteristic p that
trace is the rank of ``e`` reduced mod p, and equality holds in the field.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Any, Sequence

from sbl.exact_linalg import F2, Field, identity, matmul, rref, trace

Matrix = list[list[Any]]


class NotIdempotent(ValueError):
    pass


def _as_matrix(a: Sequence[Sequence[Any]], field: Field) -> Matrix:
    m = [[field(x) for x in row] for row in a]
    if any(len(row) != len(m) for row in m):
        raise ValueError("expected a square matrix")
    return m


@dataclass(frozen=True)
class SplitIdempotentDatum:
    """``e = i r`` with ``i: k^rank -> k^n`` injective and ``r i = id``."""

    e: Matrix
    r: Matrix
    i: Matrix
    field: Field

    @property
    def n(self) -> int:
        return len(self.e)

    @property
    def rank(self) -> int:
        return len(self.r)

    def check(self) -> None:
        f = self.field
        if self.rank == 0:
            if any(x != 0 for row in self.e for x in row):
                raise AssertionError("rank-0 split of a nonzero matrix")
            return
        if matmul(self.i, self.r, f) != self.e:
            raise AssertionError("e != i r")
        if matmul(self.r, self.i, f) != identity(self.rank, f):
            raise AssertionError("r i != id")


def split_idempotent(e: Sequence[Sequence[Any]], field: Field = F2) -> SplitIdempotentDatum:
    """Column-space factorization: ``i`` is the pivot columns of e, ``r`` the nonzero rows of rref(e)."""
    m = _as_matrix(e, field)
    if matmul(m, m, field) != m:
        raise NotIdempotent("e e != e")
    reduced, pivots = rref(m, field) if m else ([], [])
    r = [list(reduced[k]) for k in range(len(pivots))]
    i = [[m[row][c] for c in pivots] for row in range(len(m))]
    datum = SplitIdempotentDatum(m, r, i, field)
    datum.check()
    return datum


@dataclass(frozen=True)
class TraceReport:
    trace_e: Any
    trace_retract: Any
    rank: int
    commutativity: bool

    @property
    def passed(self) -> bool:
        return self.trace_e == self.trace_retract and self.commutativity

    def to_json(self) -> dict:
        return {
            "trace_e": str(self.trace_e),
            "trace_retract": str(self.trace_retract),
            "rank": self.rank,
            "commutativity": self.commutativity,
            "passed": self.passed,
        }


def trace_retract_check(
    e: Sequence[Sequence[Any]], field: Field = F2, pairs: int = 3, seed: int = 0
) -> TraceReport:
    """``Tr(e) = Tr(r i) = Tr(id_rank)``, plus ``Tr(AB) = Tr(BA)`` on random rectangular pairs."""
    d = split_idempotent(e, field)
    t_ri = trace(matmul(d.r, d.i, field), field) if d.rank else field(0)
    t_e = trace(d.e, field) if d.n else field(0)
    if t_ri != field(d.rank):
        raise AssertionError("trace of the retract identity differs from its rank")
    rng = random.Random(seed)
    comm = True
    for _ in range(pairs):
        p, q = rng.randint(1, 5), rng.randint(1, 5)
        a = random_matrix(p, q, field, rng)
        b = random_matrix(q, p, field, rng)
        comm &= trace(matmul(a, b, field), field) == trace(matmul(b, a, field), field)
    return TraceReport(t_e, t_ri, d.rank, comm)


def random_matrix(rows: int, cols: int, field: Field, rng: random.Random, span: int = 3) -> Matrix:
    return [[field(rng.randint(-span, span)) for _ in range(cols)] for _ in range(rows)]


def _inverse(p: Matrix, field: Field) -> Matrix | None:
    n = len(p)
    reduced, pivots = rref([row + ident for row, ident in zip(p, identity(n, field))], field)
    if pivots[:n] != list(range(n)):
        return None
    return [row[n:] for row in reduced]


def random_split_idempotent(n: int, rank: int, field: Field = F2, seed: int = 0) -> Matrix:
    """``P diag(1^rank, 0) P^-1`` for a random invertible P."""
    if not 0 <= rank <= n:
        raise ValueError("need 0 <= rank <= n")
    rng = random.Random(seed)
    while True:
        p = random_matrix(n, n, field, rng)
        p_inv = _inverse(p, field)
        if p_inv is not None:
            break
    i = [row[:rank] for row in p]
    r = p_inv[:rank]
    if rank == 0:
        return [[field(0)] * n for _ in range(n)]
    return matmul(i, r, field)


__all__ = [
    "NotIdempotent",
    "SplitIdempotentDatum",
    "TraceReport",
    "random_matrix",
    "random_split_idempotent",
    "split_idempotent",
    "trace_retract_check",
]
