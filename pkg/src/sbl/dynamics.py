"""Autonomous Hamiltonian dynamics on the plane: flows, actions, fixed points and indices.

Conventions, fixed once for the whole package:

* ``omega = dx ^ dy`` and ``i_X omega = -dH``, so ``X_H = J0 grad H`` with
  ``J0 = [[0, -1], [1, 0]]``. A radial ``H = h(pi |z|^2)`` rotates the circle
  of enclosed area s counterclockwise by ``2 pi h'(s)`` per unit time.
* ``S = int lambda(x') - H dt`` with ``lambda = (x dy - y dx) / 2``; every
  interface reports ``t = -S`` unless suffixed ``_S``.
* Degrees are ``n - CZ`` with ``n = 1``. A degenerate circle family splits
  into two generators with ``CZ = RS -+ 1/2``.

Domains are ellipses ``{Q(z) < c}``; a linear symplectic change of variables
makes them round, and radial Hamiltonians are written in those coordinates.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Any, Callable, Optional, Sequence, Union

import numpy as np
from numpy.polynomial import Polynomial
from scipy.integrate import solve_ivp
from scipy.interpolate import RectBivariateSpline
from scipy.linalg import expm, sqrtm
from scipy.optimize import brentq, minimize_scalar

J0 = np.array([[0.0, -1.0], [1.0, 0.0]])
_ZERO_COEF = 1e-13


def n_threads() -> int:
    """Worker count from ``SBL_THREADS`` (default 1); affects runtime only."""
    try:
        return max(1, int(os.environ.get("SBL_THREADS", "1")))
    except ValueError:
        return 1


def rotation(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s], [s, c]])


# --------------------------------------------------------------------------- profiles


def _trim(p: Polynomial) -> Polynomial:
    coef = np.array(p.coef, dtype=float)
    coef[np.abs(coef) < 1e-15] = 0.0
    return Polynomial(coef)


def _is_zero_on(p: Polynomial, width: float) -> bool:
    """Whether p vanishes identically, judged in the variable rescaled to the piece width."""
    q = p(Polynomial([0.0, width]))
    return bool(np.all(np.abs(q.coef) < _ZERO_COEF))


@lru_cache(maxsize=512)
def _derived_pieces(coeffs: tuple[tuple[float, ...], ...], order: int) -> tuple[Polynomial, ...]:
    return tuple(Polynomial(c).deriv(order) if order else Polynomial(c) for c in coeffs)


@dataclass(frozen=True)
class RadialProfile:
    """Piecewise-polynomial ``h`` on ``[0, inf)``, zero from the last break on.

    ``coeffs[i]`` are ascending coefficients in ``u = s - breaks[i]`` valid on
    ``[breaks[i], breaks[i+1])``; ``len(breaks) == len(coeffs) + 1``.
    """

    breaks: tuple[float, ...]
    coeffs: tuple[tuple[float, ...], ...]
    alpha: Optional[float] = None

    def __post_init__(self) -> None:
        b = tuple(float(x) for x in self.breaks)
        c = tuple(tuple(float(x) for x in row) for row in self.coeffs)
        if len(b) != len(c) + 1:
            raise ValueError("need one more break than polynomial pieces")
        if b and b[0] != 0.0:
            raise ValueError("the first break must be 0")
        if any(y <= x for x, y in zip(b, b[1:])):
            raise ValueError("breaks must increase strictly")
        object.__setattr__(self, "breaks", b)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zero(cls) -> "RadialProfile":
        return cls((0.0,), ())

    @property
    def support_end(self) -> float:
        return self.breaks[-1] if self.breaks else 0.0

    @property
    def pieces(self) -> list[Polynomial]:
        return [Polynomial(c) for c in self.coeffs]

    def is_zero(self) -> bool:
        return all(all(abs(x) < _ZERO_COEF for x in row) for row in self.coeffs)

    def _eval(self, s: Any, order: int) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        out = np.zeros_like(s)
        if not self.coeffs:
            return out
        idx = np.searchsorted(np.array(self.breaks), s, side="right") - 1
        idx = np.clip(idx, 0, None)
        for i, p in enumerate(_derived_pieces(self.coeffs, order)):
            mask = (idx == i) & (s < self.breaks[-1])
            if np.any(mask):
                out[mask] = p(s[mask] - self.breaks[i])
        return out

    def h(self, s: Any) -> Any:
        return self._eval(s, 0)

    def dh(self, s: Any) -> Any:
        return self._eval(s, 1)

    def d2h(self, s: Any) -> Any:
        return self._eval(s, 2)

    def local_piece(self, i: int, start: float) -> Polynomial:
        """Piece i re-expanded in ``u = s - start``; zero beyond the support."""
        if i >= len(self.coeffs):
            return Polynomial([0.0])
        p = self.pieces[i]
        return _trim(p(Polynomial([start - self.breaks[i], 1.0])))

    def mix(self, other: "RadialProfile", lam: float) -> "RadialProfile":
        """``(1 - lam) * self + lam * other`` on the common refinement of breaks."""
        breaks = sorted(set(self.breaks) | set(other.breaks))
        coeffs = []
        for start in breaks[:-1]:
            parts = []
            for prof in (self, other):
                i = int(np.searchsorted(np.array(prof.breaks), start, side="right") - 1)
                parts.append(prof.local_piece(i, start))
            coeffs.append(tuple(_trim((1 - lam) * parts[0] + lam * parts[1]).coef))
        alpha = None
        if self.alpha is not None and other.alpha is not None:
            alpha = (1 - lam) * self.alpha + lam * other.alpha
        return RadialProfile(tuple(breaks), tuple(coeffs), alpha)

    def continuity_defects(self) -> tuple[float, float, float]:
        """Largest jumps of h, h' and h'' across the interior breaks and the support end."""
        jumps = [0.0, 0.0, 0.0]
        for i, x in enumerate(self.breaks[1:], start=1):
            left = self.pieces[i - 1]
            right = self.pieces[i] if i < len(self.coeffs) else Polynomial([0.0])
            u = x - self.breaks[i - 1]
            for order in range(3):
                lv = left.deriv(order)(u) if order else left(u)
                rv = right.deriv(order)(0.0) if order else right(0.0)
                jumps[order] = max(jumps[order], abs(lv - rv))
        return tuple(jumps)  # type: ignore[return-value]

    def to_json(self) -> dict:
        pieces = [{"start": b, "coeffs": list(c)} for b, c in zip(self.breaks, self.coeffs)]
        return {"pieces": pieces, "end": self.support_end, "alpha": self.alpha}

    @classmethod
    def from_json(cls, data: dict) -> "RadialProfile":
        try:
            pieces = data["pieces"]
            breaks = [float(p["start"]) for p in pieces] + [float(data["end"])]
            coeffs = [tuple(float(x) for x in p["coeffs"]) for p in pieces]
        except (KeyError, TypeError) as exc:
            raise ValueError(f"bad profile JSON: {exc}") from None
        if not pieces:
            return cls.zero()
        return cls(tuple(breaks), tuple(coeffs), data.get("alpha"))


def smoothstep(order: int) -> Polynomial:
    """Degree ``2 order + 1`` polynomial from 0 to 1 on [0, 1] with ``order`` vanishing derivatives at both ends."""
    x = Polynomial([0.0, 1.0])
    total = Polynomial([0.0])
    for k in range(order + 1):
        total = total + math.comb(order + k, k) * math.comb(2 * order + 1, order - k) * (-x) ** k
    return x ** (order + 1) * total


def bump_profile(alpha: float, s1: float, s2: float, order: int = 2) -> RadialProfile:
    """Plateau ``alpha`` on ``[0, s1]`` falling to 0 at ``s2`` by a smoothstep; C^order overall."""
    if not 0 < s1 < s2:
        raise ValueError("need 0 < s1 < s2")
    w = s2 - s1
    fall = alpha * (1 - smoothstep(order)(Polynomial([0.0, 1.0 / w])))
    return RadialProfile((0.0, s1, s2), ((alpha,), tuple(fall.coef)), alpha)


def _hermite(p0: float, m0: float, width: float) -> Polynomial:
    # value p0 and slope m0 at u = 0, value and slope 0 at u = width
    t = Polynomial([0.0, 1.0 / width])
    return p0 * (2 * t**3 - 3 * t**2 + 1) + width * m0 * (t**3 - 2 * t**2 + t)


def _cofinal_one(c: float, alpha: float, d_scale: float, e_scale: float, beta: float) -> RadialProfile:
    d = d_scale / alpha
    e = e_scale / alpha**3
    s1, s2 = d * c, 2 * d * c
    s4 = (1 - e) * c
    s3 = s4 - e * c
    if not s2 < s3:
        raise ValueError(f"infeasible shape parameters for alpha={alpha}: plateau and boundary layer overlap")
    w1, w2, eta = s2 - s1, s3 - s2, s4 - s3
    # h' = -M * phi with phi: smoothstep 0 -> 1, then 1 - beta (u/w2)^2, then a Hermite layer to 0
    for _ in range(50):
        layer = _hermite(1 - beta, -2 * beta / w2, eta)
        area = w1 / 2 + w2 * (1 - beta / 3) + float(layer.integ()(eta))
        slope = alpha / area
        if abs(slope - round(slope)) > 0.02:
            break
        beta *= 1.05
    else:
        raise ValueError("could not make the maximal slope non-integral")
    x = Polynomial([0.0, 1.0 / w1])
    piece_b = alpha - slope * ((w1 * (x**3 - x**4 / 2)))
    hb = float(piece_b(w1))
    u = Polynomial([0.0, 1.0])
    piece_c = hb - slope * (u - beta * u**3 / (3 * w2**2))
    hc = float(piece_c(w2))
    piece_d = hc - slope * layer.integ()
    return RadialProfile(
        (0.0, s1, s2, s3, s4),
        ((alpha,), tuple(piece_b.coef), tuple(piece_c.coef), tuple(piece_d.coef)),
        alpha,
    )


def cofinal_profiles(
    c: float,
    alphas: Sequence[float],
    d_scale: float = 0.2,
    e_scale: float = 0.05,
    beta: float = 0.1,
) -> list[RadialProfile]:
    """Radial profiles with plateau ``alpha`` near 0, concave then convex fall, zero near ``s = c``.

    The plateau ends at ``d c`` with ``d = d_scale / alpha``, h is strictly
    convex and decreasing on ``(2 d c, (1 - e) c)`` with ``e = e_scale / alpha^3``,
    and vanishes from ``(1 - e) c`` on. The family is checked to be pointwise
    increasing in alpha and to have non-integral maximal slope.
    """
    if c <= 0:
        raise ValueError("capacity must be positive")
    if any(a <= 0 for a in alphas) or any(y <= x for x, y in zip(alphas, alphas[1:])):
        raise ValueError("alphas must be positive and increasing")
    out = [_cofinal_one(c, a, d_scale, e_scale, beta) for a in alphas]
    grid = np.linspace(0.0, c * 1.01, 4001)
    for lo, hi in zip(out, out[1:]):
        pts = np.concatenate([grid, lo.breaks, hi.breaks])
        if np.any(lo.h(pts) > hi.h(pts) + 1e-12):
            raise ValueError(f"infeasible shape parameters: profiles for alpha={lo.alpha}, {hi.alpha} are not nested")
    return out


def truncated_profile(prof: RadialProfile, s_cut: float) -> RadialProfile:
    """Replace h on ``[0, s_cut]`` by its tangent line at ``s_cut`` (C^1 gluing)."""
    value, slope = float(prof.h(s_cut)), float(prof.dh(s_cut))
    breaks = [0.0, s_cut]
    coeffs = [(value - slope * s_cut, slope)]
    for i, b in enumerate(prof.breaks[:-1]):
        nxt = prof.breaks[i + 1]
        if nxt <= s_cut:
            continue
        start = max(b, s_cut)
        if start > s_cut:
            breaks.append(start)
        coeffs.append(tuple(prof.local_piece(i, start).coef))
    breaks.append(prof.support_end)
    breaks = sorted(set(breaks))
    return RadialProfile(tuple(breaks), tuple(coeffs[: len(breaks) - 1]), prof.alpha)


# --------------------------------------------------------------------------- domains and Hamiltonians


@dataclass(frozen=True)
class QuadraticDomain:
    """``{z : pi z^T A z / sqrt(det A) < capacity}``; the enclosed area equals the capacity."""

    form: tuple[tuple[float, float], tuple[float, float]] = ((1.0, 0.0), (0.0, 1.0))
    capacity: float = math.pi

    def __post_init__(self) -> None:
        a = np.array(self.form, dtype=float)
        if a.shape != (2, 2) or not np.allclose(a, a.T):
            raise ValueError("form must be a symmetric 2x2 matrix")
        if np.linalg.eigvalsh(a).min() <= 0:
            raise ValueError("form must be positive definite")
        if self.capacity <= 0:
            raise ValueError("capacity must be positive")
        object.__setattr__(self, "form", tuple(tuple(float(x) for x in row) for row in a))

    @classmethod
    def ball(cls, capacity: float) -> "QuadraticDomain":
        return cls(capacity=capacity)

    @property
    def normalizer(self) -> np.ndarray:
        """Symplectic L with ``pi |L z|^2`` the level; it is the square root of ``A / sqrt(det A)``."""
        a = np.array(self.form)
        return np.real(sqrtm(a / math.sqrt(np.linalg.det(a))))

    def level(self, z: Any) -> Any:
        w = np.asarray(z, dtype=float) @ self.normalizer.T
        return math.pi * np.sum(w * w, axis=-1)

    def image(self, t: Any) -> "QuadraticDomain":
        """The domain ``T(U)`` for a linear symplectic T."""
        t = np.asarray(t, dtype=float)
        if abs(np.linalg.det(t) - 1) > 1e-9:
            raise ValueError("linear map is not symplectic")
        ti = np.linalg.inv(t)
        a = ti.T @ np.array(self.form) @ ti
        return QuadraticDomain(tuple(map(tuple, (a + a.T) / 2)), self.capacity)

    def to_json(self) -> dict:
        return {"form": [list(r) for r in self.form], "capacity": self.capacity}


@dataclass(frozen=True)
class RadialHamiltonian:
    """``H(z) = h(level(z))`` for a quadratic level function."""

    profile: RadialProfile
    domain: QuadraticDomain = field(default_factory=QuadraticDomain)

    def __call__(self, z: Any) -> Any:
        return self.profile.h(self.domain.level(z))

    def gradient(self, z: Any) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        l = self.domain.normalizer
        w = z @ l.T
        slope = self.profile.dh(math.pi * np.sum(w * w, axis=-1))
        return (2 * math.pi * np.asarray(slope)[..., None]) * (w @ l)

    def support_radius(self) -> float:
        """Euclidean radius of the smallest disk containing the support."""
        a = np.array(self.domain.form)
        scale = math.sqrt(np.linalg.det(a))
        return math.sqrt(self.profile.support_end * scale / (math.pi * np.linalg.eigvalsh(a).min()))

    def to_json(self) -> dict:
        return {
            "type": "radial",
            "capacity": self.domain.capacity,
            "form": [list(r) for r in self.domain.form],
            "profile": self.profile.to_json(),
            "alpha": self.profile.alpha,
        }


@dataclass
class SampledHamiltonian:
    """Bicubic interpolant of grid values on ``box = (xmin, xmax, ymin, ymax)``; zero outside."""

    box: tuple[float, float, float, float]
    nx: int
    ny: int
    values: np.ndarray

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.nx, self.ny):
            raise ValueError("values must have shape (nx, ny)")
        xs = np.linspace(self.box[0], self.box[1], self.nx)
        ys = np.linspace(self.box[2], self.box[3], self.ny)
        self._spline = RectBivariateSpline(xs, ys, self.values, kx=3, ky=3, s=0)

    @classmethod
    def from_function(cls, f: Callable[[np.ndarray], np.ndarray], box, nx: int, ny: int) -> "SampledHamiltonian":
        xs = np.linspace(box[0], box[1], nx)
        ys = np.linspace(box[2], box[3], ny)
        gx, gy = np.meshgrid(xs, ys, indexing="ij")
        return cls(tuple(box), nx, ny, f(np.stack([gx, gy], axis=-1)))

    def _inside(self, z: np.ndarray) -> np.ndarray:
        x0, x1, y0, y1 = self.box
        return (z[..., 0] >= x0) & (z[..., 0] <= x1) & (z[..., 1] >= y0) & (z[..., 1] <= y1)

    def __call__(self, z: Any) -> Any:
        z = np.asarray(z, dtype=float)
        out = np.asarray(self._spline.ev(z[..., 0], z[..., 1]))
        return np.where(self._inside(z), out, 0.0)

    def gradient(self, z: Any) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        gx = self._spline.ev(z[..., 0], z[..., 1], dx=1)
        gy = self._spline.ev(z[..., 0], z[..., 1], dy=1)
        g = np.stack([gx, gy], axis=-1)
        return np.where(self._inside(z)[..., None], g, 0.0)

    def hessian(self, z: Any) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        hxx = self._spline.ev(z[..., 0], z[..., 1], dx=2)
        hxy = self._spline.ev(z[..., 0], z[..., 1], dx=1, dy=1)
        hyy = self._spline.ev(z[..., 0], z[..., 1], dy=2)
        h = np.stack([np.stack([hxx, hxy], axis=-1), np.stack([hxy, hyy], axis=-1)], axis=-2)
        return np.where(self._inside(z)[..., None, None], h, 0.0)

    def to_json(self) -> dict:
        return {"type": "sampled", "box": list(self.box), "nx": self.nx, "ny": self.ny, "values": self.values.tolist()}


HamiltonianSpec = Union[RadialHamiltonian, SampledHamiltonian]


def hamiltonian_from_json(data: dict) -> HamiltonianSpec:
    kind = data.get("type")
    if kind == "radial":
        form = data.get("form", [[1.0, 0.0], [0.0, 1.0]])
        dom = QuadraticDomain(tuple(map(tuple, form)), float(data.get("capacity", math.pi)))
        return RadialHamiltonian(RadialProfile.from_json(data["profile"]), dom)
    if kind == "sampled":
        return SampledHamiltonian(tuple(data["box"]), int(data["nx"]), int(data["ny"]), np.array(data["values"]))
    raise ValueError(f"unknown Hamiltonian type {kind!r}")


# --------------------------------------------------------------------------- flows and actions


def _vector_field(H: SampledHamiltonian) -> Callable:
    def rhs(_t: float, y: np.ndarray) -> np.ndarray:
        g = H.gradient(y[:2])
        return np.array([-g[1], g[0]])

    return rhs


def _sampled_flow_many(H: SampledHamiltonian, pts: np.ndarray, t: float) -> np.ndarray:
    # all points as one system; the shared step control only tightens each trajectory
    def rhs(_t: float, y: np.ndarray) -> np.ndarray:
        z = y.reshape(-1, 2)
        g = H.gradient(z)
        return np.stack([-g[:, 1], g[:, 0]], axis=-1).ravel()

    sol = solve_ivp(rhs, (0.0, t), pts.ravel(), method="RK45", rtol=1e-10, atol=1e-12)
    if not sol.success:
        raise RuntimeError(f"integration failed: {sol.message}")
    return sol.y[:, -1].reshape(pts.shape)


def flow_time1(H: HamiltonianSpec, z: Any, t: float = 1.0) -> np.ndarray:
    """Time-t flow of ``X_H``; closed form for radial H, RK45 integration otherwise."""
    z = np.asarray(z, dtype=float)
    if isinstance(H, RadialHamiltonian):
        l = H.domain.normalizer
        w = z @ l.T
        theta = 2 * math.pi * H.profile.dh(math.pi * np.sum(w * w, axis=-1)) * t
        c, s = np.cos(theta), np.sin(theta)
        rot = np.stack([c * w[..., 0] - s * w[..., 1], s * w[..., 0] + c * w[..., 1]], axis=-1)
        return rot @ np.linalg.inv(l).T
    if z.ndim > 1:
        return _sampled_flow_many(H, z.reshape(-1, 2), t).reshape(z.shape)
    sol = solve_ivp(_vector_field(H), (0.0, t), z, method="RK45", rtol=1e-10, atol=1e-12)
    if not sol.success:
        raise RuntimeError(f"integration failed: {sol.message}")
    return sol.y[:, -1]


def _flow_with_jacobian(H: SampledHamiltonian, z: np.ndarray, t: float = 1.0, dense: bool = False):
    def rhs(_t: float, y: np.ndarray) -> np.ndarray:
        g = H.gradient(y[:2])
        hess = H.hessian(y[:2])
        psi = y[2:].reshape(2, 2)
        return np.concatenate([[-g[1], g[0]], (J0 @ hess @ psi).ravel()])

    y0 = np.concatenate([z, np.eye(2).ravel()])
    sol = solve_ivp(rhs, (0.0, t), y0, method="RK45", rtol=1e-10, atol=1e-12, dense_output=dense)
    if not sol.success:
        raise RuntimeError(f"integration failed: {sol.message}")
    return sol


def _flow_with_jacobian_many(H: SampledHamiltonian, pts: np.ndarray, t: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    # endpoints and Jacobians of the time-t map for all points as one system
    m = len(pts)

    def rhs(_t: float, y: np.ndarray) -> np.ndarray:
        z = y[: 2 * m].reshape(m, 2)
        psi = y[2 * m :].reshape(m, 2, 2)
        g = H.gradient(z)
        hess = H.hessian(z)
        dz = np.stack([-g[:, 1], g[:, 0]], axis=-1)
        return np.concatenate([dz.ravel(), (J0 @ hess @ psi).ravel()])

    y0 = np.concatenate([pts.ravel(), np.tile(np.eye(2).ravel(), m)])
    sol = solve_ivp(rhs, (0.0, t), y0, method="RK45", rtol=1e-10, atol=1e-12)
    if not sol.success:
        raise RuntimeError(f"integration failed: {sol.message}")
    y = sol.y[:, -1]
    return y[: 2 * m].reshape(m, 2), y[2 * m :].reshape(m, 2, 2)


def flow_jacobian(H: HamiltonianSpec, z: Any, t: float = 1.0) -> np.ndarray:
    """``d phi_t`` at z: closed form for radial H, variational equation otherwise."""
    z = np.asarray(z, dtype=float)
    if isinstance(H, RadialHamiltonian):
        l = H.domain.normalizer
        w = l @ z
        s = math.pi * float(w @ w)
        theta = 2 * math.pi * float(H.profile.dh(s)) * t
        kappa = 4 * math.pi**2 * float(H.profile.d2h(s)) * t
        inner = rotation(theta) @ (np.eye(2) + kappa * J0 @ np.outer(w, w))
        return np.linalg.inv(l) @ inner @ l
    return _flow_with_jacobian(H, z, t).y[2:, -1].reshape(2, 2)


def action_by_quadrature(H: HamiltonianSpec, z: Any, t: float = 1.0) -> float:
    """``int_0^t lambda(x') - H dt`` along the integrated orbit from z (lambda = (x dy - y dx)/2)."""

    def rhs(_t: float, y: np.ndarray) -> np.ndarray:
        g = H.gradient(y[:2])
        vx, vy = -g[1], g[0]
        return np.array([vx, vy, 0.5 * (y[0] * vy - y[1] * vx)])

    y0 = np.concatenate([np.asarray(z, dtype=float), [0.0]])
    sol = solve_ivp(rhs, (0.0, t), y0, method="DOP853", rtol=1e-12, atol=1e-13)
    if not sol.success:
        raise RuntimeError(f"quadrature did not converge: {sol.message}")
    return float(sol.y[2, -1] - t * float(H(np.asarray(z, dtype=float))))


# --------------------------------------------------------------------------- Robbin-Salamon index


@dataclass
class SymplecticPath:
    """A path of 2x2 symplectic matrices with its derivative; ``breaks`` mark corners."""

    value: Callable[[float], np.ndarray]
    derivative: Optional[Callable[[float], np.ndarray]] = None
    breaks: tuple[float, ...] = ()

    def __call__(self, t: float) -> np.ndarray:
        return np.asarray(self.value(t), dtype=float)

    def deriv(self, t: float, side: int = 1) -> np.ndarray:
        if self.derivative is not None:
            return np.asarray(self.derivative(t), dtype=float)
        h = 1e-6
        lo, hi = (t - h, t + h)
        if side > 0 and t + h > 1:
            lo, hi = t - h, t
        if side < 0 and t - h < 0:
            lo, hi = t, t + h
        return (self(hi) - self(lo)) / (hi - lo)


def rotation_path(theta: float) -> SymplecticPath:
    """``t -> rotation(2 pi theta t)``."""
    w = 2 * math.pi * theta
    return SymplecticPath(lambda t: rotation(w * t), lambda t: w * J0 @ rotation(w * t))


def sheared_rotation_path(theta: float, kappa: float, wobble: float = 0.0) -> SymplecticPath:
    """``t -> rotation(2 pi theta t + wobble sin(pi t)) (I + t kappa J0 e1 e1^T)``.

    With ``wobble = 0`` this is the linearized radial flow on a circle. A small
    wobble is a homotopy rel endpoints, used when ``theta = 0`` makes every
    time a non-regular crossing.
    """
    w = 2 * math.pi * theta
    n = J0 @ np.outer([1.0, 0.0], [1.0, 0.0])

    def value(t: float) -> np.ndarray:
        return rotation(w * t + wobble * math.sin(math.pi * t)) @ (np.eye(2) + t * kappa * n)

    def derivative(t: float) -> np.ndarray:
        speed = w + wobble * math.pi * math.cos(math.pi * t)
        r = rotation(w * t + wobble * math.sin(math.pi * t))
        return speed * J0 @ r @ (np.eye(2) + t * kappa * n) + kappa * r @ n

    return SymplecticPath(value, derivative)


def exp_traceless(a: np.ndarray) -> np.ndarray:
    """``exp(a)`` for traceless 2x2 a, by ``a^2 = -det(a) I``."""
    det = float(np.linalg.det(a))
    if det > 1e-14:
        r = math.sqrt(det)
        return math.cos(r) * np.eye(2) + (math.sin(r) / r) * a
    if det < -1e-14:
        r = math.sqrt(-det)
        return math.cosh(r) * np.eye(2) + (math.sinh(r) / r) * a
    return expm(a)


def piecewise_exp_path(generators: Sequence[Any], durations: Optional[Sequence[float]] = None) -> SymplecticPath:
    """Concatenation of ``exp(J0 S_i u)`` segments (S_i symmetric), durations summing to 1."""
    gens = [np.asarray(s, dtype=float) for s in generators]
    for s in gens:
        if not np.allclose(s, s.T):
            raise ValueError("generators must be symmetric")
    k = len(gens)
    durs = np.full(k, 1.0 / k) if durations is None else np.asarray(durations, dtype=float)
    if abs(durs.sum() - 1) > 1e-12:
        raise ValueError("durations must sum to 1")
    starts = np.concatenate([[0.0], np.cumsum(durs)[:-1]])
    bases = [np.eye(2)]
    for s, d in zip(gens, durs):
        bases.append(exp_traceless(d * J0 @ s) @ bases[-1])

    def locate(t: float) -> int:
        return int(min(np.searchsorted(starts, t, side="right") - 1, k - 1))

    def value(t: float) -> np.ndarray:
        i = locate(t)
        return exp_traceless((t - starts[i]) * J0 @ gens[i]) @ bases[i]

    def derivative(t: float) -> np.ndarray:
        i = locate(t)
        return J0 @ gens[i] @ value(t)

    return SymplecticPath(value, derivative, tuple(float(x) for x in starts[1:]))


def _crossings(path: SymplecticPath, t0: float, t1: float, samples: int, tol: float) -> list[tuple[float, np.ndarray]]:
    # kernel of dimension 1: simple zeros of det(Psi - I) = 2 - tr Psi;
    # kernel of dimension 2 (Psi = I): zeros of |Psi - I|^2, which are double zeros of the determinant
    ts = np.unique(np.concatenate([np.linspace(t0, t1, samples + 1), [b for b in path.breaks if t0 < b < t1]]))
    mats = [path(float(t)) for t in ts]
    f = np.array([2.0 - np.trace(m) for m in mats])
    g = np.array([np.sum((m - np.eye(2)) ** 2) for m in mats])

    def det_minus_one(t: float) -> float:
        return 2.0 - float(np.trace(path(t)))

    def dist2(t: float) -> float:
        return float(np.sum((path(t) - np.eye(2)) ** 2))

    identity_times: list[float] = []
    for i in range(1, len(ts) - 1):
        if g[i] <= g[i - 1] and g[i] <= g[i + 1]:
            res = minimize_scalar(dist2, bounds=(ts[i - 1], ts[i + 1]), method="bounded", options={"xatol": 1e-14})
            if math.sqrt(res.fun) < tol:
                identity_times.append(float(res.x))
    simple: list[float] = []
    for i in range(len(ts) - 1):
        if f[i] * f[i + 1] < 0:
            simple.append(brentq(det_minus_one, ts[i], ts[i + 1], xtol=1e-15, rtol=1e-15))
        elif f[i] == 0.0 and t0 < ts[i] < t1:
            simple.append(float(ts[i]))
    out: list[tuple[float, np.ndarray]] = []
    for t in (t0, t1):
        m = path(t)
        svals, vt = np.linalg.svd(m - np.eye(2))[1:]
        ker = vt[svals < tol * max(1.0, float(np.linalg.norm(m)))]
        if ker.shape[0]:
            out.append((t, ker))
    interior = [t for t in identity_times if min(t - t0, t1 - t) > 1e-9]
    for t in interior:
        out.append((t, np.eye(2)))
    for t in simple:
        if min(t - t0, t1 - t) <= 1e-9 or any(abs(t - u) < 1e-7 for u in interior):
            continue
        vt = np.linalg.svd(path(t) - np.eye(2))[2]
        out.append((t, vt[-1:]))
    return sorted(out, key=lambda x: x[0])


def rs_index(
    path: Union[SymplecticPath, Callable[[float], np.ndarray]],
    t0: float = 0.0,
    t1: float = 1.0,
    samples: int = 4096,
    tol: float = 1e-7,
) -> Fraction:
    """Robbin-Salamon index by crossing forms, half weights at ``t0`` and ``t1``.

    A crossing is a time where 1 is an eigenvalue; its form is
    ``v -> <S v, v>`` on ``ker(Psi - I)`` with ``S = -J0 Psi' Psi^{-1}``.
    Non-regular crossings raise ValueError.
    """
    if not isinstance(path, SymplecticPath):
        path = SymplecticPath(path)
    for t in np.linspace(t0, t1, 33):
        m = path(float(t))
        if abs(np.linalg.det(m) - 1) > 1e-8 * max(1.0, float(np.abs(m).max()) ** 2):
            raise ValueError("path is not symplectic (determinant differs from 1)")
    start = path(t0)
    if all(np.allclose(path(float(t)), start, atol=1e-12) for t in np.linspace(t0, t1, 33)):
        return Fraction(0)  # constant paths have index zero
    halves = 0
    for t, ker in _crossings(path, t0, t1, samples, tol):
        m = path(t)
        side = -1 if t >= t1 else 1
        s = -J0 @ path.deriv(t, side) @ np.linalg.inv(m)
        q = ker @ ((s + s.T) / 2) @ ker.T
        ev = np.linalg.eigvalsh(q)
        if np.any(np.abs(ev) < 1e-9 * max(1.0, float(np.abs(s).max()))):
            raise ValueError(f"non-regular crossing at t={t:.6g}")
        sign = int(np.sum(ev > 0) - np.sum(ev < 0))
        endpoint = t == t0 or t == t1
        halves += sign if endpoint else 2 * sign
    return Fraction(halves, 2)


# --------------------------------------------------------------------------- fixed points


@dataclass(frozen=True)
class OrbitDatum:
    """A 1-periodic orbit or Morse-Bott family of them.

    ``kind`` is ``"constant"`` or ``"circle-family"`` (or ``"degenerate"`` for
    flagged pieces). ``label`` names the region: ``plateau``, ``center``,
    ``exterior``, ``family``, ``everything``, ``annulus`` or ``point``. For a
    family, ``degree`` is the lower of the two split degrees.
    """

    kind: str
    winding: int
    level: float
    action_S: float
    t_action: float
    rs_index: Optional[Fraction]
    degree: Optional[int]
    nondegenerate: bool
    label: str = ""
    point: Optional[tuple[float, float]] = None
    convexity: int = 0

    @property
    def split_degrees(self) -> tuple[int, ...]:
        if self.degree is None:
            return ()
        if self.kind == "circle-family":
            return (self.degree, self.degree + 1)
        return (self.degree,)

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "label": self.label,
            "winding": self.winding,
            "level": self.level,
            "action_S": self.action_S,
            "t_action": self.t_action,
            "rs_index": None if self.rs_index is None else str(self.rs_index),
            "degree": self.degree,
            "nondegenerate": self.nondegenerate,
        }


@lru_cache(maxsize=None)
def family_rs_index(winding: int, convexity: int) -> Fraction:
    """Index of the linearized return path of a circle family.

    For fixed sign of the shear the endpoint kernel stays one-dimensional, so
    the index depends only on the winding and that sign; the representative
    shear is +-1.
    """
    wobble = 0.1 if winding == 0 else 0.0
    return rs_index(sheared_rotation_path(winding, float(convexity), wobble))


def _family_datum(prof: RadialProfile, s0: float, k: int) -> OrbitDatum:
    hval = float(prof.h(s0))
    curv = float(prof.d2h(s0))
    S = k * s0 - hval
    nondeg = abs(curv) > 1e-12
    rs = family_rs_index(k, int(np.sign(curv))) if nondeg else None
    degree = None if rs is None else int(1 - (rs + Fraction(1, 2)))
    return OrbitDatum("circle-family", k, s0, S, -S, rs, degree, nondeg, "family", convexity=int(np.sign(curv)))


def _constant_datum(prof: RadialProfile, label: str, level: float) -> OrbitDatum:
    hval = float(prof.h(level))
    if label == "exterior":
        return OrbitDatum("constant", 0, level, -hval, hval, Fraction(0), None, False, "exterior")
    # a flat plateau counts as the index of a C^2-small Morse perturbation: max or min
    after = float(prof.h(prof.breaks[2])) if len(prof.breaks) > 2 else 0.0
    rs = Fraction(-1) if after < hval else Fraction(1)
    return OrbitDatum("constant", 0, level, -hval, hval, rs, int(1 - rs), False, label)


def _center_datum(prof: RadialProfile) -> OrbitDatum:
    slope = float(prof.dh(0.0))
    hval = float(prof.h(0.0))
    nondeg = abs(slope - round(slope)) > 1e-12
    rs = rs_index(rotation_path(slope)) if nondeg else None
    degree = None if rs is None else int(1 - rs)
    return OrbitDatum("constant", 0, 0.0, -hval, hval, rs, degree, nondeg, "center")


def real_roots(p: Polynomial, lo: float, hi: float) -> list[float]:
    """Real roots of p in ``[lo, hi]``, isolated in the rescaled variable so thin pieces stay well conditioned."""
    w = hi - lo
    q = p(Polynomial([lo, w]))
    scale = float(np.max(np.abs(q.coef))) if q.coef.size else 0.0
    if scale == 0.0:
        return []
    q = Polynomial(np.where(np.abs(q.coef) < _ZERO_COEF * scale, 0.0, q.coef))
    if q.degree() < 1:
        return []
    dq = q.deriv()
    out = []
    for r in q.roots():
        if abs(r.imag) > 1e-6:
            continue
        v = float(r.real)
        for _ in range(6):
            d = float(dq(v))
            if d == 0:
                break
            v -= float(q(v)) / d
        if not (-1e-9 <= v <= 1 + 1e-9 and abs(float(q(v))) <= 1e-9 * scale):
            continue
        v = min(max(v, 0.0), 1.0)
        # a multiple root at an endpoint splits numerically; snap it back
        for edge in (0.0, 1.0):
            if np.abs(q(np.linspace(v, edge, 65))).max() <= 1e-9 * scale:
                v = edge
                break
        if all(abs(v - x) > 1e-9 for x in out):
            out.append(v)
    return [lo + w * v for v in sorted(out)]


def _radial_fixed_points(H: RadialHamiltonian) -> list[OrbitDatum]:
    prof = H.profile
    if prof.is_zero():
        return [OrbitDatum("constant", 0, 0.0, 0.0, 0.0, Fraction(0), None, False, "everything")]
    out: list[OrbitDatum] = []
    widths = [hi - lo for lo, hi in zip(prof.breaks, prof.breaks[1:])]
    flat = [_is_zero_on(p.deriv(), w) for p, w in zip(prof.pieces, widths)]
    if flat[0]:
        out.append(_constant_datum(prof, "plateau", 0.0))
    else:
        out.append(_center_datum(prof))
    levels: list[float] = []
    for i, p in enumerate(prof.pieces):
        lo, hi = prof.breaks[i], prof.breaks[i + 1]
        w = hi - lo
        dp = p.deriv()
        if flat[i]:
            if i > 0:
                out.append(OrbitDatum("degenerate", 0, lo, -float(p(0)), float(p(0)), None, None, False, "annulus"))
            continue
        ext = [float(dp(0.0)), float(dp(w))] + [float(dp(x)) for x in real_roots(dp.deriv(), 0.0, w)]
        for k in range(math.ceil(min(ext) - 1e-12), math.floor(max(ext) + 1e-12) + 1):
            shifted = dp - k
            if _is_zero_on(shifted, w):
                out.append(OrbitDatum("degenerate", k, lo, float("nan"), float("nan"), None, None, False, "annulus"))
                continue
            for u in real_roots(shifted, 0.0, w):
                s0 = lo + u
                if s0 < 1e-12:
                    continue  # the center, recorded above
                if u < 1e-10 and i > 0 and _is_zero_on(prof.pieces[i - 1].deriv() - k, widths[i - 1]):
                    continue  # edge of a degenerate piece, flagged there
                if u > w - 1e-10 and i + 1 < len(flat) and _is_zero_on(prof.pieces[i + 1].deriv() - k, widths[i + 1]):
                    continue
                if any(abs(s0 - x) < 1e-9 * max(1.0, s0) for x in levels):
                    continue
                if k == 0:
                    left_flat = u < 1e-10 and i > 0 and flat[i - 1]
                    right_flat = u > w - 1e-10 and (i + 1 == len(flat) or flat[i + 1])
                    if left_flat or right_flat or (u < 1e-10 and i == 0):
                        continue
                levels.append(s0)
                out.append(_family_datum(prof, s0, k))
    out.append(_constant_datum(prof, "exterior", prof.support_end))
    return out


def _newton_fixed_points(H: SampledHamiltonian, seeds: np.ndarray, iters: int = 30) -> list[Optional[np.ndarray]]:
    z = np.array(seeds, dtype=float)
    done: list[Optional[np.ndarray]] = [None] * len(z)
    active = np.arange(len(z))
    for _ in range(iters):
        if active.size == 0:
            break
        ends, jacs = _flow_with_jacobian_many(H, z[active])
        keep = []
        for a, end, jac in zip(active, ends, jacs):
            g = end - z[a]
            if np.linalg.norm(g) < 1e-11:
                done[a] = z[a].copy()
                continue
            z[a] = z[a] + np.linalg.lstsq(jac - np.eye(2), -g, rcond=1e-10)[0]
            if np.all(np.isfinite(z[a])) and H._inside(z[a]):
                keep.append(a)
        active = np.array(keep, dtype=int)
    if active.size:
        ends = flow_time1(H, z[active].reshape(-1, 2))
        for a, end in zip(active, ends):
            if np.linalg.norm(end - z[a]) < 1e-9:
                done[a] = z[a].copy()
    return done


def sampled_fixed_points(H: SampledHamiltonian, seeds_per_axis: int = 15, flat_tol: float = 1e-9) -> list[OrbitDatum]:
    """Newton from a seed grid; points where H is locally flat (the exterior) are dropped."""
    x0, x1, y0, y1 = H.box
    xs = np.linspace(x0, x1, seeds_per_axis + 2)[1:-1]
    ys = np.linspace(y0, y1, seeds_per_axis + 2)[1:-1]
    seeds = np.array([[x, y] for x in xs for y in ys])
    # seeds where H is flat are fixed already and carry no information
    live = [s for s in seeds if not (np.linalg.norm(H.gradient(s)) < flat_tol and abs(float(H(s))) < flat_tol)]
    found = _newton_fixed_points(H, np.array(live).reshape(-1, 2)) if live else []
    pts: list[np.ndarray] = []
    for z in found:
        if z is None or not H._inside(z):
            continue
        if np.linalg.norm(H.gradient(z)) < flat_tol and abs(float(H(z))) < flat_tol:
            continue
        if any(np.linalg.norm(z - p) < 1e-6 for p in pts):
            continue
        pts.append(z)

    def datum(z: np.ndarray) -> OrbitDatum:
        psi1 = flow_jacobian(H, z)
        nondeg = abs(np.linalg.det(psi1 - np.eye(2))) > 1e-8
        S = action_by_quadrature(H, z)
        rs = None
        if nondeg:
            sol = _flow_with_jacobian(H, z, dense=True)
            rs = rs_index(SymplecticPath(lambda t: sol.sol(t)[2:].reshape(2, 2)), samples=512)
        degree = None if rs is None else int(1 - rs)
        return OrbitDatum("constant", 0, float("nan"), S, -S, rs, degree, nondeg, "point", (float(z[0]), float(z[1])))

    with ThreadPoolExecutor(max_workers=n_threads()) as pool:
        return list(pool.map(datum, pts))


def orbit_spectrum(prof: RadialProfile) -> list[tuple[int, float, float]]:
    """``(winding, level, t_action)`` of every fixed circle and constant set, without indices.

    Cheap enough for homotopy certificates; a degenerate piece appears once at its start.
    """
    out = [(0, 0.0, float(prof.h(0.0)))]
    if prof.is_zero():
        return out
    for i, p in enumerate(prof.pieces):
        lo, hi = prof.breaks[i], prof.breaks[i + 1]
        w = hi - lo
        dp = p.deriv()
        if _is_zero_on(dp, w):
            out.append((0, lo, float(p(0.0))))
            continue
        ext = [float(dp(0.0)), float(dp(w))] + [float(dp(x)) for x in real_roots(dp.deriv(), 0.0, w)]
        for k in range(math.ceil(min(ext) - 1e-12), math.floor(max(ext) + 1e-12) + 1):
            shifted = dp - k
            if _is_zero_on(shifted, w):
                out.append((k, lo, float(p(0.0)) - k * lo))
                continue
            for u in real_roots(shifted, 0.0, w):
                out.append((k, lo + u, float(p(u)) - k * (lo + u)))
    end = prof.support_end
    out.append((0, end, 0.0))
    # a root on a break is found from both sides; the one at the support end is the exterior
    kept: list[tuple[int, float, float]] = []
    for rec in out:
        k, s, _ = rec
        tol = 1e-9 * max(1.0, end)
        if k == 0 and abs(s - end) <= tol and rec is not out[-1]:
            continue
        if any(k == k2 and abs(s - s2) <= tol for k2, s2, _ in kept) and s > 0:
            continue
        kept.append(rec)
    return kept


def fixed_points(H: HamiltonianSpec, **kw: Any) -> list[OrbitDatum]:
    """Fixed points of the time-1 map with actions, indices and nondegeneracy flags."""
    if isinstance(H, RadialHamiltonian):
        return _radial_fixed_points(H)
    return sampled_fixed_points(H, **kw)


def action_S(H: HamiltonianSpec, orbit: OrbitDatum) -> float:
    """Symplectic action ``S``: exact for radial orbits, quadrature for sampled ones."""
    if isinstance(H, RadialHamiltonian):
        if orbit.kind == "circle-family":
            return orbit.winding * orbit.level - float(H.profile.h(orbit.level))
        return -float(H.profile.h(orbit.level))
    if orbit.point is None:
        raise ValueError("sampled orbits need a base point")
    return action_by_quadrature(H, orbit.point)


def reeb_spectrum(domain: Union[QuadraticDomain, float], k_max: int) -> list[float]:
    """Actions ``k c`` of the closed Reeb orbits on the boundary ellipse, ``1 <= k <= k_max``."""
    c = domain if isinstance(domain, (int, float)) else domain.capacity
    return [k * float(c) for k in range(1, k_max + 1)]


__all__ = [
    "J0",
    "HamiltonianSpec",
    "OrbitDatum",
    "QuadraticDomain",
    "RadialHamiltonian",
    "RadialProfile",
    "SampledHamiltonian",
    "SymplecticPath",
    "action_S",
    "action_by_quadrature",
    "bump_profile",
    "cofinal_profiles",
    "family_rs_index",
    "fixed_points",
    "flow_jacobian",
    "exp_traceless",
    "flow_time1",
    "hamiltonian_from_json",
    "n_threads",
    "orbit_spectrum",
    "piecewise_exp_path",
    "real_roots",
    "reeb_spectrum",
    "rotation",
    "rotation_path",
    "rs_index",
    "sampled_fixed_points",
    "sheared_rotation_path",
    "smoothstep",
    "truncated_profile",
]
