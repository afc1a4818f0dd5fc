"""Independent oracles shared by the test modules."""

from __future__ import annotations

import numpy as np

from sbl.oracles import cz_by_rotation_lift, rs_by_rotation_lift

__all__ = ["cz_by_rotation_lift", "dense_integer_slope_levels", "rs_by_rotation_lift"]


def dense_integer_slope_levels(dh, k: int, lo: float, hi: float, n: int = 200001) -> list[float]:
    """Levels where ``dh(s) - k`` changes sign on a dense grid."""
    s = np.linspace(lo, hi, n)
    v = dh(s) - k
    idx = np.nonzero(np.sign(v[:-1]) * np.sign(v[1:]) < 0)[0]
    return [float(0.5 * (s[i] + s[i + 1])) for i in idx]
