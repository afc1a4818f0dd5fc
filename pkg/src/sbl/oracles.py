"""Robbin-Salamon indices by the lifted rotation function, independent of crossing forms."""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from sbl.dynamics import rotation


def _rho_angle(m: np.ndarray) -> float:
    # rotation function: Krein-positive eigenvalue when elliptic, sign of the eigenvalues when hyperbolic
    tr = float(np.trace(m))
    if abs(tr) > 2:
        return 0.0 if tr > 0 else math.pi
    vals, vecs = np.linalg.eig(m)
    for lam, v in zip(vals, vecs.T):
        re, im = np.real(v), np.imag(v)
        if re[0] * im[1] - re[1] * im[0] < 0:
            return float(np.angle(lam))
    return float(np.angle(vals[0]))


def cz_by_rotation_lift(path, samples: int = 20000) -> int:
    """Conley-Zehnder index of a path from I with nondegenerate endpoint, via the lifted rotation function."""
    ts = np.linspace(0.0, 1.0, samples + 1)
    angles = np.unwrap([_rho_angle(path(float(t))) for t in ts])
    delta = (angles[-1] - angles[0]) / math.pi
    end = path(1.0)
    if abs(float(np.trace(end))) > 2:
        return int(round(delta))
    return 2 * math.floor(delta / 2) + 1


def rs_by_rotation_lift(path, eps: float = 1e-3, samples: int = 20000) -> Fraction:
    """Robbin-Salamon index as the mean of the two indices of the path extended by a small +-rotation."""
    total = 0
    for sign in (1, -1):

        def extended(t: float, sign=sign) -> np.ndarray:
            if t <= 0.5:
                return path(2 * t)
            return path(1.0) @ rotation(sign * eps * (2 * t - 1))

        total += cz_by_rotation_lift(extended, samples)
    return Fraction(total, 2)


__all__ = ["cz_by_rotation_lift", "rs_by_rotation_lift"]
