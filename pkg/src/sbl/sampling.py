"""Seeded random inputs shared by the self-test and the test suite."""

from __future__ import annotations

import random
from fractions import Fraction
from typing import Optional

import numpy as np

from sbl.dynamics import QuadraticDomain, RadialHamiltonian, SymplecticPath, bump_profile, piecewise_exp_path
from sbl.interval_algebra import INF, IntervalSummand, SheafOnR, interval


def random_endpoint(rng: random.Random, lo: int = -6, hi: int = 6, denom: int = 2) -> Fraction:
    return Fraction(rng.randint(lo * denom, hi * denom), denom)


def random_summand(
    rng: random.Random,
    flags: Optional[tuple[bool, bool]] = None,
    allow_infinite: bool = True,
    allow_point: bool = True,
    shift_range: int = 2,
) -> IntervalSummand:
    """A random ``1_I[n]``; ``flags`` pins (left_closed, right_closed)."""
    while True:
        a = random_endpoint(rng)
        b = a + Fraction(rng.randint(0 if allow_point else 1, 8), 2)
        lc, rc = flags if flags is not None else (rng.random() < 0.5, rng.random() < 0.5)
        if allow_infinite and not lc and rng.random() < 0.15:
            a = -INF
        if allow_infinite and not rc and rng.random() < 0.15:
            b = INF
        if a == b and not (lc and rc):
            continue
        return IntervalSummand(a, lc, b, rc, rng.randint(-shift_range, shift_range))


def random_sheaf(rng: random.Random, max_terms: int = 3, **kw) -> SheafOnR:
    return SheafOnR(tuple(random_summand(rng, **kw) for _ in range(rng.randint(0, max_terms))))


def random_bar(rng: random.Random, infinite_prob: float = 0.3, shift_range: int = 1) -> IntervalSummand:
    a = random_endpoint(rng, -4, 4)
    b = INF if rng.random() < infinite_prob else a + Fraction(rng.randint(1, 8), 2)
    return interval(a, b, "[)", shift=rng.randint(-shift_range, shift_range))


def random_normal_form(rng: random.Random, min_terms: int = 1, max_terms: int = 2) -> SheafOnR:
    return SheafOnR(tuple(random_bar(rng) for _ in range(rng.randint(min_terms, max_terms))))


def probe_points(F: SheafOnR, G: SheafOnR, rng: random.Random, n: int = 50) -> list[Fraction]:
    """Sums of endpoints, points a third away from them, then random sixths up to n points."""
    ends = [x + y for x in F.endpoints() + [0] for y in G.endpoints() + [0]]
    pts = set(ends) | {e + Fraction(1, 3) for e in ends} | {e - Fraction(1, 3) for e in ends}
    while len(pts) < n:
        pts.add(Fraction(rng.randint(-80, 80), 6))
    return sorted(pts)


def random_symplectic_path(seed: int, pieces: int = 3) -> SymplecticPath:
    """Concatenated exponentials of random symmetric generators times J0."""
    rng = np.random.default_rng(seed)
    gens = []
    for _ in range(pieces):
        a = rng.normal(size=(2, 2)) * 4
        gens.append(a + a.T)
    return piecewise_exp_path(gens)


def random_radial_bump(seed: int, domain: Optional[QuadraticDomain] = None) -> RadialHamiltonian:
    """A C^1-small bump of either sign: height in +-[0.006, 0.012], plateau end in [0.2, 0.6]."""
    rng = np.random.default_rng(seed)
    sign = 1 if rng.random() < 0.5 else -1
    s1 = float(rng.uniform(0.2, 0.6))
    prof = bump_profile(sign * float(rng.uniform(0.006, 0.012)), s1, s1 + float(rng.uniform(2.0, 2.4)))
    return RadialHamiltonian(prof, domain or QuadraticDomain())


def cleared_window_ends(H: RadialHamiltonian) -> list[float]:
    """Three window ends well away from the critical values 0 and h(0) of a bump."""
    h0 = float(H.profile.h(0.0))
    return sorted([-0.05, h0 / 2, (h0 - 0.05) if h0 < 0 else (h0 + 0.05)])


def random_window(H: RadialHamiltonian, seed: int) -> tuple[float, float]:
    """A window with ends drawn from :func:`cleared_window_ends`; the left end may be -inf."""
    ends = cleared_window_ends(H)
    i, j = sorted(np.random.default_rng(100 + seed).choice(len(ends) + 1, size=2, replace=False))
    return (-INF if i == 0 else ends[i - 1], ends[j - 1])
