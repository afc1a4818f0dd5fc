"""Generating-function homology of planar Hamiltonian maps.

Two backends compute the window groups ``G^(a,b]``. The grid backend takes
relative cubical homology of sublevel pairs of a broken generating function.
The combinatorial backend builds a filtered Morse-Bott complex for radial
Hamiltonians. On C^1-small radial Hamiltonians both apply and serve as
cross-checks. The stabilized limit runs over cofinal profiles of a domain.

Degrees are normalized so that ``H = 0`` gives ``{0: 1}`` on windows
containing 0. The combinatorial differential is homological: it lowers the
degree by one and strictly lowers ``t_action``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Optional, Sequence, Union

import numpy as np
from numpy.polynomial import Polynomial
from scipy.optimize import brentq
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components, maximum_bipartite_matching

from sbl.dynamics import (
    J0,
    HamiltonianSpec,
    OrbitDatum,
    QuadraticDomain,
    RadialHamiltonian,
    RadialProfile,
    SampledHamiltonian,
    _flow_with_jacobian_many,
    cofinal_profiles,
    fixed_points,
    flow_time1,
    n_threads,
    orbit_spectrum,
    real_roots,
)
from sbl.exact_linalg import F2, ChainComplex, Field, GradedDims, SparseMatrix, homology, induced_map_rank

# ||d psi - I|| < 1 makes z -> (z + psi(z)) / 2 a diffeomorphism, so the midpoint GF exists
STEP_THRESHOLD = 1.0
BOX_MARGIN = 1.25
_T_TOL = 1e-9


class GFError(ValueError):
    """A precondition of the GF pipeline failed."""


class StepTooLarge(GFError):
    """A single step of the broken flow is not C^1-small; use more steps."""


class WindowTouchesCriticalValue(GFError):
    def __init__(self, value: float, clearance: float):
        super().__init__(f"window touches critical value {value:.12g} (required clearance {clearance:.3g})")
        self.value = value
        self.clearance = clearance


class Indeterminate(GFError):
    """A differential entry is neither forced to zero nor determined; only bounds are sound."""

    def __init__(self, message: str, bounds: Optional[tuple[GradedDims, GradedDims]] = None):
        super().__init__(message)
        self.bounds = bounds


class NoStabilization(GFError):
    def __init__(self, message: str, trace: list[dict]):
        super().__init__(message)
        self.trace = trace


class InconsistentComplex(RuntimeError):
    """The forced structure contradicts the known total homology; conventions are falsified."""


# --------------------------------------------------------------------------- step generating functions


class RadialStepGF:
    """Midpoint generating function of ``phi^H_{1/steps}`` for radial H.

    The step satisfies ``psi(z) - z = J0 grad S((z + psi(z)) / 2)``. In the
    normalized variable it is a rotation by ``theta(s) = 2 pi h'(s) / steps``,
    and ``S = g(pi |m|^2)`` with ``sigma(s) = s cos^2(theta / 2)`` and
    ``g(sigma(s)) = h(s) / steps - s (theta - sin theta) / (2 pi)``.
    """

    def __init__(self, H: RadialHamiltonian, steps: int):
        self.H = H
        self.steps = steps
        self.profile = H.profile
        self.normalizer = H.domain.normalizer
        prof = self.profile
        grid = [np.linspace(lo, hi, 2049) for lo, hi in zip(prof.breaks, prof.breaks[1:])]
        s = np.unique(np.concatenate(grid)) if grid else np.array([0.0])
        if np.any(self._dsigma(s) <= 0):
            raise StepTooLarge(f"midpoint map folds with {steps} steps; use more steps")
        self._s = s
        self._sigma = self._sigma_of(s)

    def _theta(self, s: np.ndarray) -> np.ndarray:
        return 2 * math.pi * self.profile.dh(s) / self.steps

    def _sigma_of(self, s: np.ndarray) -> np.ndarray:
        return s * np.cos(self._theta(s) / 2) ** 2

    def _dsigma(self, s: np.ndarray) -> np.ndarray:
        th = self._theta(s)
        dth = 2 * math.pi * self.profile.d2h(s) / self.steps
        return np.cos(th / 2) ** 2 - s * np.sin(th / 2) * np.cos(th / 2) * dth

    def s_of_sigma(self, sigma: np.ndarray) -> np.ndarray:
        sigma = np.asarray(sigma, dtype=float)
        out = sigma.copy()
        inside = sigma < self._sigma[-1]
        if np.any(inside):
            s = np.interp(sigma[inside], self._sigma, self._s)
            for _ in range(4):
                s = np.clip(s - (self._sigma_of(s) - sigma[inside]) / self._dsigma(s), 0.0, self._s[-1])
            out[inside] = s
        return out

    def _level(self, m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        w = m @ self.normalizer.T
        return w, math.pi * np.sum(w * w, axis=-1)

    def __call__(self, m: Any) -> np.ndarray:
        _, sigma = self._level(np.asarray(m, dtype=float))
        s = self.s_of_sigma(sigma)
        th = self._theta(s)
        return self.profile.h(s) / self.steps - s * (th - np.sin(th)) / (2 * math.pi)

    def gradient(self, m: Any) -> np.ndarray:
        w, sigma = self._level(np.asarray(m, dtype=float))
        th = self._theta(self.s_of_sigma(sigma))
        return (2 * np.tan(th / 2))[..., None] * (w @ self.normalizer)

    def lipschitz(self) -> float:
        # |grad_w S| = 2 |tan(theta/2)| |w|; the 2% margin covers the sampling of s
        th = self._theta(self._s)
        lip = float(np.max(2 * np.abs(np.tan(th / 2)) * np.sqrt(self._sigma / math.pi))) if self._s.size else 0.0
        return 1.02 * lip * float(np.linalg.norm(self.normalizer, 2))


class SampledStepGF:
    """Midpoint generating function of one step of a sampled Hamiltonian.

    The midpoint equation is solved by Newton on the variational flow and S is
    integrated along rays from outside the box, where it vanishes. Evaluation
    is expensive; it serves critical-value checks, not dense grids.
    """

    def __init__(self, H: SampledHamiltonian, steps: int, nodes: int = 24):
        self.H = H
        self.steps = steps
        x0, x1, y0, y1 = H.box
        self.outer = math.hypot(max(abs(x0), abs(x1)), max(abs(y0), abs(y1)))
        self._gl = np.polynomial.legendre.leggauss(nodes)

    def _preimage(self, m: np.ndarray) -> np.ndarray:
        z = m.copy()
        for _ in range(30):
            ends, jacs = _flow_with_jacobian_many(self.H, z, 1.0 / self.steps)
            g = (z + ends) / 2 - m
            if np.max(np.abs(g)) < 1e-13:
                break
            z = z - np.linalg.solve((np.eye(2) + jacs) / 2, g[..., None])[..., 0]
        return z

    def gradient(self, m: Any) -> np.ndarray:
        m = np.asarray(m, dtype=float)
        flat = m.reshape(-1, 2)
        z = self._preimage(flat)
        ends = flow_time1(self.H, z, 1.0 / self.steps)
        return ((ends - z) @ J0).reshape(m.shape)  # -J0 (psi(z) - z) as rows

    def __call__(self, m: Any) -> np.ndarray:
        m = np.asarray(m, dtype=float)
        flat = m.reshape(-1, 2)
        r = np.linalg.norm(flat, axis=-1)
        out = np.zeros(len(flat))
        live = r < self.outer
        if np.any(live):
            x, wts = self._gl
            rl = r[live][:, None]
            u = np.where(rl > 0, flat[live] / np.where(rl > 0, rl, 1.0), np.array([1.0, 0.0]))
            lo, hi = r[live], np.full(live.sum(), self.outer)
            radii = (hi - lo)[:, None] * (x[None, :] + 1) / 2 + lo[:, None]
            pts = radii[..., None] * u[:, None, :]
            g = self.gradient(pts.reshape(-1, 2)).reshape(pts.shape)
            radial = np.sum(g * u[:, None, :], axis=-1)
            out[live] = -(hi - lo) / 2 * (radial @ wts)
        return out.reshape(m.shape[:-1])

    def lipschitz(self) -> float:
        raise GFError("no certified Lipschitz bound for sampled Hamiltonians; the grid backend needs a radial H")


class _IdentityStep:
    def __call__(self, m: Any) -> np.ndarray:
        return np.zeros(np.asarray(m).shape[:-1])

    def gradient(self, m: Any) -> np.ndarray:
        return np.zeros(np.asarray(m).shape)

    def lipschitz(self) -> float:
        return 0.0


def _step_norm(H: HamiltonianSpec, steps: int) -> float:
    """Largest ``||d phi_{1/steps} - I||`` over a sample of the support."""
    if isinstance(H, RadialHamiltonian):
        if H.profile.is_zero():
            return 0.0
        l = H.domain.normalizer
        s = np.linspace(0.0, H.profile.support_end, 2001)
        theta = 2 * math.pi * np.asarray(H.profile.dh(s)) / steps
        kappa = 4 * math.pi**2 * np.asarray(H.profile.d2h(s)) / steps
        worst = 0.0
        for phi in np.linspace(0.0, math.pi, 9):
            w = np.sqrt(s / math.pi)[:, None] * np.array([math.cos(phi), math.sin(phi)])
            c, sn = np.cos(theta), np.sin(theta)
            rot = np.stack([np.stack([c, -sn], -1), np.stack([sn, c], -1)], -2)
            shear = np.eye(2) + kappa[:, None, None] * (J0 @ (w[:, :, None] * w[:, None, :]))
            jac = np.linalg.inv(l) @ (rot @ shear) @ l
            worst = max(worst, float(np.max(np.linalg.norm(jac - np.eye(2), ord=2, axis=(-2, -1)))))
        return worst
    x0, x1, y0, y1 = H.box
    pts = np.array([[x, y] for x in np.linspace(x0, x1, 21) for y in np.linspace(y0, y1, 21)])
    _, jacs = _flow_with_jacobian_many(H, pts, 1.0 / steps)
    return float(max(np.linalg.norm(j - np.eye(2), 2) for j in jacs))


# --------------------------------------------------------------------------- broken generating functions


@dataclass
class BrokenGF:
    """Discrete action of the broken flow, optionally stabilized by ``-xi^2``.

    Variables are the break points ``z_1..z_N`` (cyclic) followed by ``fiber``
    stabilizing coordinates, and
    ``F = sum_j S_j((z_j + z_{j+1}) / 2) + (1/2) sum_j z_j^T J0 z_{j+1} - |xi|^2``.
    The defects of a critical point alternate in sign around the cycle, so
    an odd step count is required; even requests get one identity step.
    Where every midpoint lies outside the support, F equals the reference
    quadratic form, whose index is ``n_steps - 1 + fiber``.
    """

    H: HamiltonianSpec
    steps: int
    n_steps: int
    fiber: int
    step_gfs: list
    radius: float
    fiber_radius: float = 1.0

    @property
    def dim(self) -> int:
        return 2 * self.n_steps + self.fiber

    @property
    def index(self) -> int:
        return self.n_steps - 1 + self.fiber

    @property
    def degree_shift(self) -> int:
        """Raw sublevel degree minus normalized degree."""
        return 2 + self.index

    def box(self) -> list[tuple[float, float]]:
        return [(-self.radius, self.radius)] * (2 * self.n_steps) + [(-self.fiber_radius, self.fiber_radius)] * self.fiber

    def _split(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        z = x[..., : 2 * self.n_steps].reshape(x.shape[:-1] + (self.n_steps, 2))
        return z, x[..., 2 * self.n_steps :]

    def reference_form(self, x: Any) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        z, xi = self._split(x)
        nxt = np.roll(z, -1, axis=-2)
        return 0.5 * np.sum(z * (nxt @ J0.T), axis=(-1, -2)) - np.sum(xi * xi, axis=-1)

    def __call__(self, x: Any) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        z, _ = self._split(x)
        mid = (z + np.roll(z, -1, axis=-2)) / 2
        total = self.reference_form(x)
        for step, idx in self._step_groups():
            total = total + np.sum(step(mid[..., idx, :]), axis=-1)
        return total

    def _step_groups(self) -> list[tuple[Any, list[int]]]:
        # steps share one GF object; evaluating each object once over its slots is vectorized
        groups: dict[int, tuple[Any, list[int]]] = {}
        for j, step in enumerate(self.step_gfs):
            groups.setdefault(id(step), (step, []))[1].append(j)
        return list(groups.values())

    def gradient(self, x: Any) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        z, xi = self._split(x)
        mid = (z + np.roll(z, -1, axis=-2)) / 2
        a = np.empty_like(mid)
        for step, idx in self._step_groups():
            a[..., idx, :] = step.gradient(mid[..., idx, :])
        g = (a + np.roll(a, 1, axis=-2)) / 2 + 0.5 * (np.roll(z, -1, axis=-2) - np.roll(z, 1, axis=-2)) @ J0.T
        return np.concatenate([g.reshape(x.shape[:-1] + (2 * self.n_steps,)), -2 * xi], axis=-1)

    def orbit_point(self, z0: Any) -> np.ndarray:
        """The critical point over a fixed point ``z0``: its broken orbit, fiber 0."""
        pts = [np.asarray(z0, dtype=float)]
        for step in self.step_gfs[:-1]:
            last = pts[-1]
            pts.append(last.copy() if isinstance(step, _IdentityStep) else flow_time1(self.H, last, 1.0 / self.steps))
        return np.concatenate([np.concatenate(pts), np.zeros(self.fiber)])

    def critical_points(self) -> list[tuple[float, np.ndarray, OrbitDatum]]:
        """``(value, point, orbit)`` per fixed-point record, with a representative point for sets."""
        out = []
        for o in fixed_points(self.H):
            if o.point is not None:
                z0 = np.array(o.point)
            elif isinstance(self.H, RadialHamiltonian):
                w = np.array([0.0, math.sqrt(max(o.level, 0.0) / math.pi)])
                z0 = np.linalg.solve(self.H.domain.normalizer, w)
            else:
                continue
            x = self.orbit_point(z0)
            out.append((float(self(x)), x, o))
        return out

    def critical_values(self) -> list[float]:
        if isinstance(self.H, RadialHamiltonian):
            vals = [t for _, _, t in orbit_spectrum(self.H.profile)]
        else:
            vals = [v for v, _, _ in self.critical_points()]
        return sorted(set(vals) | {0.0})

    def lipschitz(self) -> float:
        """Lipschitz bound of F on the box (sup norm of the gradient)."""
        if self.n_steps != 1:
            raise GFError("Lipschitz certificate implemented for one-step functions only")
        return math.hypot(self.step_gfs[0].lipschitz(), 2 * self.fiber_radius * self.fiber)


def gf_build(H: HamiltonianSpec, steps: int = 1, fiber: int = 0) -> BrokenGF:
    """Broken GF of ``phi^H_1`` with ``steps`` C^1-small steps; ``fiber`` adds ``-xi^2`` directions."""
    if steps < 1:
        raise GFError("need at least one step")
    if fiber not in (0, 1):
        raise GFError("fiber must be 0 or 1")
    norm = _step_norm(H, steps)
    if norm >= STEP_THRESHOLD:
        raise StepTooLarge(f"||d phi_(1/{steps}) - I|| = {norm:.3g} >= {STEP_THRESHOLD}; use more steps")
    if isinstance(H, RadialHamiltonian):
        step = RadialStepGF(H, steps)
        radius = BOX_MARGIN * max(H.support_radius(), 1e-3) if not H.profile.is_zero() else 1.0
    else:
        step = SampledStepGF(H, steps)
        x0, x1, y0, y1 = H.box
        radius = max(abs(x0), abs(x1), abs(y0), abs(y1))
    gfs: list = [step] * steps
    if steps % 2 == 0:
        gfs.append(_IdentityStep())
    gf = BrokenGF(H, steps, len(gfs), fiber, gfs, radius)
    if fiber and gf.n_steps == 1 and isinstance(step, RadialStepGF):
        # -xi^2 has gradient 2|xi|, so this radius adds about 12% to the Lipschitz bound
        gf.fiber_radius = max(step.lipschitz() / 4, 1e-6)
    return gf


# --------------------------------------------------------------------------- cubical sublevel homology


def _axis_counts(G: BrokenGF, resolution: Union[int, Sequence[int], None]) -> tuple[int, ...]:
    """Grid points per axis; the fiber axes are exact quadratics and default to 5 points."""
    if resolution is None:
        resolution = 256 if G.dim == 2 else 72
    if isinstance(resolution, (int, np.integer)):
        counts = (int(resolution),) * (2 * G.n_steps) + (5,) * G.fiber
    else:
        counts = tuple(int(r) for r in resolution)
    if len(counts) != G.dim or min(counts) < 4:
        raise GFError(f"need {G.dim} axis resolutions of at least 4, got {counts}")
    return counts


def _grid_values(G: BrokenGF, counts: Sequence[int]) -> tuple[np.ndarray, float, float]:
    """Vertex values, the largest spacing and the cell diameter."""
    axes = [np.linspace(lo, hi, n) for (lo, hi), n in zip(G.box(), counts)]
    shape = tuple(len(a) for a in axes)
    flat = np.stack([m.ravel() for m in np.meshgrid(*axes, indexing="ij")], axis=-1)
    chunks = np.array_split(np.arange(len(flat)), max(1, n_threads()))
    out = np.empty(len(flat))
    with ThreadPoolExecutor(max_workers=n_threads()) as pool:
        # each chunk writes its own slice, so the result is independent of scheduling
        for idx, vals in zip(chunks, pool.map(lambda ix: G(flat[ix]), chunks)):
            out[idx] = vals
    steps = [(hi - lo) / (n - 1) for (lo, hi), n in zip(G.box(), counts)]
    return out.reshape(shape), max(steps), math.sqrt(sum(h * h for h in steps))


def _boundary_mask(shape: tuple[int, ...]) -> np.ndarray:
    m = np.zeros(shape, dtype=bool)
    for ax in range(len(shape)):
        idx = [slice(None)] * len(shape)
        idx[ax] = 0
        m[tuple(idx)] = True
        idx[ax] = -1
        m[tuple(idx)] = True
    return m


def _components(n: int, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    graph = coo_matrix((np.ones(len(a), dtype=np.int8), (a, b)), shape=(n, n))
    return connected_components(graph, directed=False)[1]


def pair_homology_2d(values: np.ndarray, a: float, b: float) -> GradedDims:
    """Raw ``H_*({F <= b} u shell, {F <= a} u shell)`` on a vertex grid, by graph components.

    Cells enter a sublevel when all their vertices do; the shell is the box
    boundary. ``rank d1`` is the number of relative vertices minus the
    components that avoid the subcomplex; cycles of ``d2`` are the dual
    components of relative squares that never meet a one-sided relative edge.
    Torsion-free in the plane, so the answer holds over every field.
    """
    nx, ny = values.shape
    shell = _boundary_mask(values.shape)
    vb, va = values <= b, values <= a
    xv, av = vb | shell, va | shell
    ids = np.arange(nx * ny).reshape(nx, ny)

    def edges(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return m[:-1, :] & m[1:, :], m[:, :-1] & m[:, 1:]

    shell_h = np.zeros((nx - 1, ny), dtype=bool)
    shell_h[:, [0, -1]] = True
    shell_v = np.zeros((nx, ny - 1), dtype=bool)
    shell_v[[0, -1], :] = True
    bh, bv = edges(vb)
    ah, avv = edges(va)
    xh, xvv = bh | shell_h, bv | shell_v
    rel_h, rel_v = xh & ~(ah | shell_h), xvv & ~(avv | shell_v)

    def squares(m: np.ndarray) -> np.ndarray:
        return m[:-1, :-1] & m[1:, :-1] & m[:-1, 1:] & m[1:, 1:]

    rel_sq = squares(vb) & ~squares(va)
    n_v = int(np.sum(xv & ~av))
    n_e = int(rel_h.sum() + rel_v.sum())
    n_s = int(rel_sq.sum())

    src = np.concatenate([ids[:-1, :][xh], ids[:, :-1][xvv]])
    dst = np.concatenate([ids[1:, :][xh], ids[:, 1:][xvv]])
    lab = _components(nx * ny, src, dst)
    grounded = np.zeros(lab.max() + 1, dtype=bool)
    grounded[lab[av.ravel()]] = True
    free = np.unique(lab[(xv & ~av).ravel()])
    free = int(np.sum(~grounded[free]))
    rank1 = n_v - free

    sq_ids = np.arange((nx - 1) * (ny - 1)).reshape(nx - 1, ny - 1)
    # interior horizontal edge (i, j) separates squares (i, j-1) and (i, j)
    eh = rel_h[:, 1:-1]
    below, above = rel_sq[:, :-1], rel_sq[:, 1:]
    link_h = eh & below & above
    # interior vertical edge (i, j) separates squares (i-1, j) and (i, j)
    ev = rel_v[1:-1, :]
    left, right = rel_sq[:-1, :], rel_sq[1:, :]
    link_v = ev & left & right
    src = np.concatenate([sq_ids[:, :-1][link_h], sq_ids[:-1, :][link_v]])
    dst = np.concatenate([sq_ids[:, 1:][link_h], sq_ids[1:, :][link_v]])
    dual = _components(sq_ids.size, src, dst)
    bad = np.zeros(dual.max() + 1, dtype=bool)
    one_sided = np.concatenate(
        [
            sq_ids[:, :-1][eh & below & ~above],
            sq_ids[:, 1:][eh & above & ~below],
            sq_ids[:-1, :][ev & left & ~right],
            sq_ids[1:, :][ev & right & ~left],
        ]
    )
    bad[dual[one_sided]] = True
    comps = np.unique(dual[rel_sq.ravel()])
    ker2 = int(np.sum(~bad[comps]))
    rank2 = n_s - ker2
    return GradedDims({0: n_v - rank1, 1: n_e - rank1 - rank2, 2: ker2})


def _cell_values(values: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, tuple[int, ...]]:
    # doubled grid: odd coordinates are edge directions; a cell's value is the max over its vertices
    d = values.ndim
    dshape = tuple(2 * n - 1 for n in values.shape)
    cell = np.full(dshape, -np.inf)
    cell[tuple(slice(0, None, 2) for _ in range(d))] = values
    for ax in range(d):
        odd, lo, hi = [slice(None)] * d, [slice(None)] * d, [slice(None)] * d
        odd[ax], lo[ax], hi[ax] = slice(1, None, 2), slice(0, -1, 2), slice(2, None, 2)
        cell[tuple(odd)] = np.maximum(cell[tuple(lo)], cell[tuple(hi)])
    coords = np.indices(dshape).reshape(d, -1).T
    on_shell = np.any((coords == 0) | (coords == np.array(dshape) - 1), axis=1)
    return cell.ravel(), coords, on_shell, dshape


def _relative_cells(values: np.ndarray, a: float, b: float) -> dict[int, dict[int, int]]:
    flat, coords, on_shell, _ = _cell_values(values)
    rel = ((flat <= b) | on_shell) & ~((flat <= a) | on_shell)
    dims_of = np.sum(coords % 2, axis=1)
    out: dict[int, list[int]] = {}
    for c in np.flatnonzero(rel):
        out.setdefault(int(dims_of[c]), []).append(int(c))
    return {k: {c: i for i, c in enumerate(v)} for k, v in out.items()}


def cubical_complex(values: np.ndarray, a: float, b: float, field: Field = F2) -> tuple[ChainComplex, dict[int, dict[int, int]]]:
    """Relative cellular chains of ``({F <= b} u shell, {F <= a} u shell)`` on a grid of any dimension.

    Returns the complex and, per dimension, the map from doubled-grid cell id to basis index.
    """
    _, coords, _, dshape = _cell_values(values)
    index = _relative_cells(values, a, b)
    d = values.ndim
    strides = [int(np.prod(dshape[i + 1 :])) for i in range(d)]
    mats = {}
    for k, cells in index.items():
        if k == 0:
            continue
        faces = index.get(k - 1, {})
        trip = []
        for c, j in cells.items():
            odd_seen = 0
            for ax in range(d):
                if coords[c][ax] % 2 == 0:
                    continue
                sign = -1 if odd_seen % 2 else 1
                odd_seen += 1
                for off, sgn in ((-1, -sign), (1, sign)):
                    f = c + off * strides[ax]
                    if f in faces:
                        trip.append((faces[f], j, sgn))
        mats[k] = SparseMatrix(len(faces), len(cells), tuple(trip))
    return ChainComplex({k: len(v) for k, v in index.items()}, mats, field, step=-1), index


@dataclass(frozen=True)
class GridCertificate:
    resolution: tuple[int, ...]
    spacing: float
    lipschitz: float
    oscillation: float
    nearest_critical_gap: float

    def to_json(self) -> dict:
        return dict(self.__dict__)


def sublevel_pair_homology(
    G: BrokenGF,
    a: float,
    b: float,
    resolution: Union[int, Sequence[int], None] = None,
    field: Field = F2,
    method: str = "auto",
    return_certificate: bool = False,
) -> Union[GradedDims, tuple[GradedDims, GridCertificate]]:
    """``G^(a,b]`` from the relative cubical homology of the sublevel pair, normalized degrees.

    Windows must clear every critical value by twice the per-cell
    oscillation bound (Lipschitz bound times cell diameter).
    """
    if G.dim > 3:
        raise GFError(f"grid backend needs dimension <= 3, got {G.dim} (N = {G.steps} steps)")
    if not a < b:
        raise GFError("need a < b")
    counts = _axis_counts(G, resolution)
    vals, spacing, diameter = _grid_values(G, counts)
    lip = G.lipschitz()
    osc = lip * diameter
    gaps = [abs(c - e) for c in G.critical_values() for e in (a, b) if math.isfinite(e)]
    gap = min(gaps) if gaps else math.inf
    for c in G.critical_values():
        for e in (a, b):
            if math.isfinite(e) and abs(c - e) <= 2 * osc:
                raise WindowTouchesCriticalValue(c, 2 * osc)
    lo = -math.inf if a == -math.inf else a
    if method == "auto":
        method = "graph" if G.dim == 2 else "exact"
    if method == "graph":
        if G.dim != 2:
            raise GFError("graph method is planar only")
        raw = pair_homology_2d(vals, lo, b)
    elif method == "exact":
        raw = homology(cubical_complex(vals, lo, b, field)[0])
    else:
        raise GFError(f"unknown method {method!r}")
    dims = raw.shift(-G.degree_shift)
    cert = GridCertificate(counts, spacing, lip, osc, gap)
    return (dims, cert) if return_certificate else dims


# --------------------------------------------------------------------------- combinatorial backend


@dataclass(frozen=True)
class Generator:
    """A split generator of the Morse-Bott complex; ``manifold`` indexes its critical set."""

    label: str
    degree: int
    t_action: float
    manifold: int
    winding: int = 0

    def to_json(self) -> dict:
        return dict(self.__dict__)


def _edge_sign(prof: RadialProfile) -> int:
    """Sign of h just inside the support end, read from the lowest nonvanishing Taylor term."""
    for i in range(len(prof.coeffs) - 1, -1, -1):
        p = prof.pieces[i]
        w = prof.breaks[i + 1] - prof.breaks[i]
        q = p(Polynomial([w, -w]))  # h(end - w v) for v in [0, 1]
        scale = float(np.max(np.abs(q.coef)))
        if scale < 1e-300:
            continue
        for c in q.coef:
            if abs(c) > 1e-9 * scale:  # h(end) = 0 up to rounding
                return int(np.sign(c))
    return 0


def orbit_generators(H: RadialHamiltonian) -> tuple[list[Generator], list[OrbitDatum], list[OrbitDatum]]:
    """Generators of the split Morse-Bott model, the orbit records, and the records it cannot split.

    A nondegenerate point or plateau of Floer degree d gives degree ``d - 2``;
    a circle family gives the pair ``d - 2, d - 1``. The exterior contributes
    nothing when h > 0 near the support end and the pair ``-1, 0`` when h < 0.
    """
    orbits = fixed_points(H)
    gens: list[Generator] = []
    unknown: list[OrbitDatum] = []
    for m, o in enumerate(orbits):
        if o.label == "everything":
            gens.append(Generator("identity", 0, 0.0, m))
        elif o.label == "exterior":
            if _edge_sign(H.profile) < 0:
                gens += [Generator("exterior-low", -1, 0.0, m), Generator("exterior-high", 0, 0.0, m)]
        elif o.kind == "circle-family" and o.degree is not None:
            gens += [
                Generator(f"family{o.winding:+d}-low", o.degree - 2, o.t_action, m, o.winding),
                Generator(f"family{o.winding:+d}-high", o.degree - 1, o.t_action, m, o.winding),
            ]
        elif o.kind == "constant" and o.degree is not None:
            gens.append(Generator(o.label, o.degree - 2, o.t_action, m))
        else:
            unknown.append(o)
    return gens, orbits, unknown


def _allowed(gens: Sequence[Generator], i: int, j: int) -> bool:
    g, h = gens[i], gens[j]
    return g.degree == h.degree + 1 and g.t_action > h.t_action + _T_TOL and g.manifold != h.manifold


def _staircase(gens: Sequence[Generator]) -> Optional[dict[tuple[int, int], int]]:
    """The differential forced by total homology ``{0: 1}`` when every degree has at most one generator.

    With ``n_d`` in ``{0, 1}`` the ranks follow from ``h_d = n_d - r_d - r_(d+1)``.
    Returns None when some degree has two generators.
    """
    by_deg: dict[int, int] = {}
    for i, g in enumerate(gens):
        if g.degree in by_deg:
            return None
        by_deg[g.degree] = i
    if not by_deg:
        raise InconsistentComplex("empty complex cannot carry total homology {0: 1}")
    lo, hi = min(min(by_deg), 0), max(max(by_deg), 0)
    entries = {}
    r = 0  # rank of the differential out of degree d (into d - 1)
    for d in range(lo, hi + 1):
        n = 1 if d in by_deg else 0
        nxt = n - (1 if d == 0 else 0) - r
        if nxt not in (0, 1) or (nxt == 1 and (d + 1) not in by_deg):
            raise InconsistentComplex(f"no differential gives total homology {{0: 1}} (degree {d})")
        if nxt:
            i, j = by_deg[d + 1], by_deg[d]
            if not _allowed(gens, i, j):
                raise InconsistentComplex(f"forced entry {gens[i].label} -> {gens[j].label} violates the filtration")
            entries[(i, j)] = 1
        r = nxt
    return entries


def _piece_min(p: Polynomial, w: float) -> float:
    cands = [0.0, w] + real_roots(p.deriv(), 0.0, w) if p.degree() > 0 else [0.0]
    return min(float(p(u)) for u in cands)


def _intercept_min(prof: RadialProfile, s_cut: float) -> float:
    """Minimum over ``[0, s_cut]`` of ``T = h - s h'``, the action of an orbit at level s."""
    best = math.inf
    for i, p in enumerate(prof.pieces):
        lo = prof.breaks[i]
        if lo >= s_cut:
            break
        w = min(prof.breaks[i + 1], s_cut) - lo
        T = p - Polynomial([lo, 1.0]) * p.deriv()
        best = min(best, _piece_min(T, w))
    return best


def _convex_tail(prof: RadialProfile) -> Optional[int]:
    """First piece of the longest final run of pieces with h'' >= 0."""
    start = None
    for i in range(len(prof.coeffs) - 1, -1, -1):
        w = prof.breaks[i + 1] - prof.breaks[i]
        d2 = prof.pieces[i].deriv(2)
        scale = max(1.0, float(np.max(np.abs(d2.coef)))) if d2.coef.size else 1.0
        if _piece_min(d2, w) < -1e-9 * scale:
            break
        start = i
    return start


def _truncation_model(H: RadialHamiltonian, gens, orbits, unknown, b: float):
    """Replace everything inside a cut level by one center orbit above the window.

    The cut is where ``h' = -(K + 1/2)`` in the convex tail; the truncated
    profile is the tangent line there. Along ``h_lam = (1 - lam) h + lam h_cut``
    every orbit inside the cut has action at least the minimum of ``T`` over
    the inner region (T is affine in lam), so windows ending below it see the
    same generators throughout and the window groups agree.
    """
    prof = H.profile
    i0 = _convex_tail(prof)
    if i0 is None:
        return None
    s0, end = prof.breaks[i0], prof.support_end
    mu_max = -float(prof.pieces[i0].deriv()(0.0))
    k = 0
    while k + 0.5 < mu_max - 1e-9:
        slope = -(k + 0.5)
        s_cut = brentq(lambda s: float(prof.dh(s)) - slope, s0, end - 1e-15 * end, xtol=1e-15, rtol=1e-15)
        t_c = float(prof.h(s_cut)) - slope * s_cut
        floor = min(_intercept_min(prof, s_cut), t_c)
        if floor > b + _T_TOL:
            if any(o.level > s_cut for o in unknown):
                return None
            keep = [g for g in gens if orbits[g.manifold].level > s_cut]
            center = Generator("truncation-center", 2 * k, t_c, len(orbits))
            cert = {"cut_level": s_cut, "cut_slope": slope, "center_t": t_c, "inner_action_floor": floor}
            return keep + [center], cert, floor
        k += 1
    return None


@dataclass
class FilteredComplex:
    """Generators with degrees and t_actions and a homological differential.

    ``entries[(i, j)]`` is the coefficient of generator j in the boundary of
    generator i; it lowers the degree by one and strictly lowers t_action.
    Windows ``(a, b]`` with ``valid[0] <= a`` and ``b <= valid[1]`` are those
    whose subquotient equals the one of H; ``total_ok`` marks complexes whose
    full homology is that of H as well.
    """

    generators: list[Generator]
    entries: dict[tuple[int, int], int]
    field: Field
    status: str
    rule: str
    window: tuple[float, float]
    valid: tuple[float, float] = (-math.inf, math.inf)
    total_ok: bool = False
    unknown: list[tuple[int, int]] = field(default_factory=list)
    certificate: dict = field(default_factory=dict)
    degenerate: list[OrbitDatum] = field(default_factory=list)

    def indices(self, a: float, b: float) -> list[int]:
        return [i for i, g in enumerate(self.generators) if a < g.t_action <= b]

    def window_generators(self, a: Optional[float] = None, b: Optional[float] = None) -> list[Generator]:
        a, b = self._bounds(a, b)
        return [self.generators[i] for i in self.indices(a, b)]

    def _bounds(self, a: Optional[float], b: Optional[float]) -> tuple[float, float]:
        return (self.window[0] if a is None else a, self.window[1] if b is None else b)

    def _check_valid(self, a: float, b: float) -> None:
        if a == -math.inf and b == math.inf and self.total_ok:
            return
        if a < self.valid[0] - _T_TOL or b > self.valid[1] + _T_TOL:
            raise GFError(f"window ({a}, {b}] is outside the validity range {self.valid} of this complex")

    def check(self) -> None:
        for (i, j), v in self.entries.items():
            if v and not _allowed(self.generators, i, j):
                raise InconsistentComplex(f"entry {i} -> {j} violates degree, filtration or manifold rules")
        cx, _ = self.chain_complex(-math.inf, math.inf)
        cx.check_square_zero()

    def chain_complex(self, a: float, b: float) -> tuple[ChainComplex, dict[int, dict[int, int]]]:
        idx = self.indices(a, b)
        basis: dict[int, dict[int, int]] = {}
        for i in idx:
            d = self.generators[i].degree
            basis.setdefault(d, {})[i] = len(basis.get(d, {}))
        mats = {}
        for d, cols in basis.items():
            rows = basis.get(d - 1, {})
            trip = [(rows[j], cols[i], v) for (i, j), v in self.entries.items() if i in cols and j in rows and v]
            mats[d] = SparseMatrix(len(rows), len(cols), tuple(trip))
        dims = {d: len(v) for d, v in basis.items()}
        return ChainComplex(dims, mats, self.field, step=-1), basis

    def counts(self, a: Optional[float] = None, b: Optional[float] = None) -> GradedDims:
        a, b = self._bounds(a, b)
        return GradedDims(_count(self.generators[i].degree for i in self.indices(a, b)))

    def bounds(self, a: Optional[float] = None, b: Optional[float] = None) -> tuple[GradedDims, GradedDims]:
        """Rank bounds from the allowed pattern: the term rank of each differential caps its rank."""
        a, b = self._bounds(a, b)
        idx = self.indices(a, b)
        n = self.counts(a, b)
        term = {}
        for d in n:
            src = [i for i in idx if self.generators[i].degree == d]
            dst = [j for j in idx if self.generators[j].degree == d - 1]
            if not src or not dst:
                continue
            pairs = [(p, q) for p, i in enumerate(src) for q, j in enumerate(dst) if _allowed(self.generators, i, j)]
            if not pairs:
                continue
            m = coo_matrix((np.ones(len(pairs)), tuple(zip(*pairs))), shape=(len(src), len(dst))).tocsr()
            term[d] = int(np.sum(maximum_bipartite_matching(m, perm_type="column") >= 0))
        lower = GradedDims({d: max(0, v - term.get(d, 0) - term.get(d + 1, 0)) for d, v in n.items()})
        return lower, n

    def homology(self, a: Optional[float] = None, b: Optional[float] = None) -> GradedDims:
        a, b = self._bounds(a, b)
        self._check_valid(a, b)
        if self.status != "exact":
            split_free = [o.label for o in self.degenerate if math.isnan(o.t_action) or a < o.t_action <= b]
            if split_free:
                raise Indeterminate(f"window ({a}, {b}] contains degenerate critical sets {split_free}; no bounds", None)
            inside = set(self.indices(a, b))
            if any(i in inside and j in inside for i, j in self.unknown):
                raise Indeterminate(f"window ({a}, {b}] has undetermined differential entries", self.bounds(a, b))
        return homology(self.chain_complex(a, b)[0])

    def map_rank(self, src: tuple[float, float], dst: tuple[float, float]) -> GradedDims:
        """Rank of the natural map ``G^(a,b] -> G^(a',b']`` for ``a <= a' < b <= b'``."""
        (a, b), (a2, b2) = src, dst
        if not (a <= a2 < b <= b2):
            raise GFError("window map needs a <= a' < b <= b'")
        self._check_valid(a, b)
        self._check_valid(a2, b2)
        if self.status != "exact":
            raise Indeterminate("window maps need a determined differential")
        c1, basis1 = self.chain_complex(a, b)
        c2, basis2 = self.chain_complex(a2, b2)
        maps = {}
        for d, cols in basis1.items():
            rows = basis2.get(d, {})
            maps[d] = SparseMatrix(len(rows), len(cols), tuple((rows[i], c, 1) for i, c in cols.items() if i in rows))
        return induced_map_rank(c1, c2, maps)

    def to_json(self) -> dict:
        return {
            "generators": [g.to_json() for g in self.generators],
            "entries": [[i, j, v] for (i, j), v in sorted(self.entries.items())],
            "field": self.field.tag,
            "status": self.status,
            "rule": self.rule,
            "window": [_num(x) for x in self.window],
            "valid": [_num(x) for x in self.valid],
            "total_ok": self.total_ok,
            "certificate": {k: _num(v) for k, v in self.certificate.items()},
            "convention": "homological: the differential lowers degree by 1 and strictly lowers t_action",
        }


def _num(x: Any) -> Any:
    if isinstance(x, float) and not math.isfinite(x):
        return "inf" if x > 0 else "-inf"
    return x


def _count(degrees) -> dict[int, int]:
    out: dict[int, int] = {}
    for d in degrees:
        out[d] = out.get(d, 0) + 1
    return out


def _check_clear(values: Sequence[float], a: float, b: float, tol: float = 1e-7) -> None:
    for t in values:
        for e in (a, b):
            if math.isfinite(e) and math.isfinite(t) and abs(t - e) <= tol * max(1.0, abs(t)):
                raise WindowTouchesCriticalValue(t, tol)


def morse_bott_complex(H: RadialHamiltonian, a: float = -math.inf, b: float = math.inf, field: Field = F2) -> FilteredComplex:
    """Filtered Morse-Bott complex of a radial Hamiltonian for the window ``(a, b]``.

    Differential entries are never guessed. In order of preference:
    ``staircase`` (at most one generator per degree, so total homology
    ``{0: 1}`` forces every entry), ``truncation`` (the staircase of a
    truncated Hamiltonian that agrees with H on windows below a certified
    action floor), ``lacunary`` (no entry inside the window is allowed).
    Otherwise the complex is flagged indeterminate.
    """
    if not isinstance(H, RadialHamiltonian):
        raise GFError("the combinatorial backend needs a radial Hamiltonian")
    if not a < b:
        raise GFError("need a < b")
    _check_clear([t for _, _, t in orbit_spectrum(H.profile)], a, b)
    gens, orbits, unknown = orbit_generators(H)
    window = (a, b)
    if not unknown:
        entries = _staircase(gens)
        if entries is not None:
            cx = FilteredComplex(gens, entries, field, "exact", "staircase", window, total_ok=True)
            cx.check()
            return cx
    model = _truncation_model(H, gens, orbits, unknown, b) if math.isfinite(b) else None
    if model is not None:
        mgens, cert, floor = model
        entries = _staircase(mgens)
        if entries is not None:
            cx = FilteredComplex(mgens, entries, field, "exact", "truncation", window, (-math.inf, floor), True, certificate=cert)
            cx.check()
            return cx
    idx = [i for i, g in enumerate(gens) if a < g.t_action <= b]
    bad = [o for o in unknown if math.isnan(o.t_action) or a < o.t_action <= b]
    pairs = [(i, j) for i in idx for j in idx if _allowed(gens, i, j)]
    if not pairs and not bad:
        return FilteredComplex(gens, {}, field, "exact", "lacunary", window, window)
    return FilteredComplex(gens, {}, field, "indeterminate", "undetermined", window, window, unknown=pairs, degenerate=unknown)


# --------------------------------------------------------------------------- windows, continuation, stabilization


def gf_homology_window(
    H: HamiltonianSpec,
    a: float,
    b: float,
    backend: str = "combinatorial",
    field: Field = F2,
    steps: int = 1,
    resolution: Optional[int] = None,
) -> GradedDims:
    """``G^(a,b](phi^H)`` in normalized degrees from either backend."""
    if backend == "grid":
        return sublevel_pair_homology(gf_build(H, steps), a, b, resolution, field)
    if backend == "combinatorial":
        return morse_bott_complex(H, a, b, field).homology(a, b)
    raise GFError(f"unknown backend {backend!r}")


def _profile_difference_min(p: RadialProfile, q: RadialProfile) -> float:
    """``min (h_p - h_q)`` over ``[0, inf)``, exact on the common refinement."""
    breaks = sorted(set(p.breaks) | set(q.breaks))
    best = 0.0  # both vanish beyond their supports
    for lo, hi in zip(breaks, breaks[1:]):
        parts = []
        for prof in (p, q):
            i = int(np.searchsorted(np.array(prof.breaks), lo, side="right") - 1)
            parts.append(prof.local_piece(i, lo))
        best = min(best, _piece_min(parts[0] - parts[1], hi - lo))
    return best


@lru_cache(maxsize=256)
def _homotopy_spectra(lower: RadialProfile, upper: RadialProfile, samples: int) -> tuple[tuple[tuple[int, float], ...], ...]:
    out = []
    for lam in np.linspace(0.0, 1.0, samples):
        prof = lower.mix(upper, float(lam))
        out.append(tuple((k, t) for k, _, t in orbit_spectrum(prof)))
    return tuple(out)


@dataclass(frozen=True)
class ContinuationResult:
    ranks: GradedDims
    source: GradedDims
    target: GradedDims
    certificate: dict

    @property
    def is_isomorphism(self) -> bool:
        return self.ranks == self.source == self.target

    def to_json(self) -> dict:
        return {
            "ranks": self.ranks.to_json(),
            "source": self.source.to_json(),
            "target": self.target.to_json(),
            "isomorphism": self.is_isomorphism,
            "certificate": self.certificate,
        }


def continuation_map(
    H: HamiltonianSpec,
    K: HamiltonianSpec,
    a: float,
    b: float,
    backend: str = "combinatorial",
    field: Field = F2,
    resolution: Optional[int] = None,
    samples: int = 17,
) -> ContinuationResult:
    """Ranks of ``G^(a,b](H) -> G^(a,b](K)`` for ``H >= K``.

    grid: inclusion of cubical sublevel pairs, after checking
    ``F_H >= F_K`` at every grid vertex. combinatorial: along the monotone
    homotopy from K to H the window ends stay off the spectrum and the
    windings inside the window stay fixed (checked on ``samples`` values of
    the homotopy parameter), so the map is the continuation isomorphism.
    """
    if backend == "grid":
        return _grid_continuation(H, K, a, b, field, resolution or 96)
    if backend != "combinatorial":
        raise GFError(f"unknown backend {backend!r}")
    if not (isinstance(H, RadialHamiltonian) and isinstance(K, RadialHamiltonian)):
        raise GFError("the combinatorial backend needs radial Hamiltonians")
    if H.domain != K.domain:
        raise GFError("continuation between different domains")
    gap = _profile_difference_min(H.profile, K.profile)
    if gap < -1e-12:
        raise GFError(f"monotonicity certificate failure: min(H - K) = {gap:.3g}")
    src = morse_bott_complex(H, a, b, field).homology(a, b)
    dst = morse_bott_complex(K, a, b, field).homology(a, b)
    cert = {"min_difference": gap, "samples": samples}
    if H.profile == K.profile:
        return ContinuationResult(src, src, dst, {**cert, "rule": "identity"})
    spectra = _homotopy_spectra(K.profile, H.profile, samples)
    inside = None
    crossed = False
    for spec in spectra:
        try:
            _check_clear([t for _, t in spec], a, b)
        except WindowTouchesCriticalValue:
            crossed = True
            break
        # coincident records (same winding, same action) are one critical set
        now = sorted(k for k, _ in {(k, round(t, 8)) for k, t in spec if a < t <= b})
        if inside is not None and now != inside:
            crossed = True
            break
        inside = now
    if crossed:
        cap = GradedDims({d: min(v, dst.get(d, 0)) for d, v in src.items()})
        if cap.total() == 0:
            return ContinuationResult(GradedDims(), src, dst, {**cert, "rule": "zero by degree"})
        raise Indeterminate("the homotopy moves the spectrum across a window end", (GradedDims(), cap))
    if src != dst:
        raise InconsistentComplex("certified homotopy between complexes with different window groups")
    return ContinuationResult(src, src, dst, {**cert, "rule": "homotopy", "windings": inside})


def _grid_continuation(H, K, a, b, field: Field, resolution: int) -> ContinuationResult:
    gh, gk = gf_build(H), gf_build(K)
    radius = max(gh.radius, gk.radius)
    gh.radius = gk.radius = radius
    counts = _axis_counts(gh, resolution)
    vh, _, diameter = _grid_values(gh, counts)
    vk, _, _ = _grid_values(gk, counts)
    if np.any(vh < vk):
        raise GFError("monotonicity certificate failure: F_H < F_K at a grid vertex")
    osc = max(gh.lipschitz(), gk.lipschitz()) * diameter
    for g in (gh, gk):
        for c in g.critical_values():
            for e in (a, b):
                if math.isfinite(e) and abs(c - e) <= 2 * osc:
                    raise WindowTouchesCriticalValue(c, 2 * osc)
    ch, ih = cubical_complex(vh, a, b, field)
    ck, ik = cubical_complex(vk, a, b, field)
    maps = {}
    for d, cols in ih.items():
        rows = ik.get(d, {})
        maps[d] = SparseMatrix(len(rows), len(cols), tuple((rows[c], j, 1) for c, j in cols.items() if c in rows))
    shift = gh.degree_shift
    ranks = induced_map_rank(ch, ck, maps).shift(-shift)
    src, dst = homology(ch).shift(-shift), homology(ck).shift(-shift)
    return ContinuationResult(ranks, src, dst, {"rule": "inclusion", "resolution": resolution, "oscillation": osc})


DEFAULT_SCHEDULE = (4.0, 6.0, 9.0, 13.5, 20.0, 30.0, 45.0, 67.5)


@lru_cache(maxsize=512)
def cofinal_profile(capacity: float, alpha: float) -> RadialProfile:
    return cofinal_profiles(capacity, [alpha])[0]


@dataclass(frozen=True)
class StabilizedResult:
    dims: GradedDims
    certificate: dict
    complex: FilteredComplex
    hamiltonian: RadialHamiltonian

    def to_json(self) -> dict:
        return {"dims": self.dims.to_json(), "certificate": self.certificate}


def _unsettled_orbit(prof: RadialProfile, capacity: float, a: float, b: float) -> Optional[tuple[int, float]]:
    """A boundary orbit on the other side of a window end than its limiting period, if any.

    Near the boundary the winding-k orbits of cofinal profiles have actions
    increasing to ``|k| capacity``; until each one is on the same side of
    both window ends as its limit, later profiles still change the window.
    """
    for k, _, t in orbit_spectrum(prof):
        limit = abs(k) * capacity
        if k == 0 or t > limit * (1 + 1e-9):
            continue
        if (a < t <= b) != (a < limit <= b):
            return (k, t)
    return None


def stabilized_gf(
    domain: QuadraticDomain,
    a: float,
    b: float,
    alphas: Sequence[float] = DEFAULT_SCHEDULE,
    backend: str = "combinatorial",
    field: Field = F2,
    spectrum_tol: float = 1e-7,
) -> StabilizedResult:
    """``varprojlim_alpha G^(a,b](phi^{H_alpha})`` over cofinal profiles of the domain.

    Stabilized once three consecutive terms are determined, spectrally
    settled, equal, and joined by continuation isomorphisms; the certificate
    records the whole trace.
    """
    from sbl.dynamics import reeb_spectrum

    if backend != "combinatorial":
        raise GFError("cofinal profiles are not C^1-small; only the combinatorial backend reaches them")
    if not a < b:
        raise GFError("need a < b")
    if list(alphas) != sorted(alphas):
        raise GFError("schedule must increase")
    top = max(abs(x) for x in (a, b) if math.isfinite(x)) if any(math.isfinite(x) for x in (a, b)) else 0.0
    spec = [0.0] + reeb_spectrum(domain, int(top / domain.capacity) + 2)
    _check_clear(spec, a, b, spectrum_tol)
    trace: list[dict] = []
    streak: list[tuple[float, RadialHamiltonian, GradedDims, FilteredComplex]] = []
    for alpha in alphas:
        H = RadialHamiltonian(cofinal_profile(domain.capacity, float(alpha)), domain)
        entry: dict[str, Any] = {"alpha": float(alpha)}
        try:
            cx = morse_bott_complex(H, a, b, field)
            dims = cx.homology(a, b)
        except (Indeterminate, WindowTouchesCriticalValue) as exc:
            entry["status"] = type(exc).__name__
            trace.append(entry)
            streak = []
            continue
        entry.update(status="determined", rule=cx.rule, dims=dims.to_json())
        late = _unsettled_orbit(H.profile, domain.capacity, a, b)
        if late is not None:
            entry["status"] = "unsettled"
            entry["unsettled_orbit"] = list(late)
            trace.append(entry)
            streak = []
            continue
        if streak:
            prev_alpha, prev_H, prev_dims, _ = streak[-1]
            try:
                iso = continuation_map(H, prev_H, a, b, field=field).is_isomorphism
            except Indeterminate:
                iso = False
            entry["continuation_iso"] = iso
            if not (iso and dims == prev_dims):
                streak = []
        streak.append((float(alpha), H, dims, cx))
        trace.append(entry)
        if len(streak) == 3:
            cert = {"tail": [s[0] for s in streak], "trace": trace, "rule": cx.rule}
            return StabilizedResult(dims, cert, cx, H)
    raise NoStabilization(f"window ({a}, {b}] did not stabilize over schedule {list(alphas)}", trace)


__all__ = [
    "BOX_MARGIN",
    "DEFAULT_SCHEDULE",
    "STEP_THRESHOLD",
    "BrokenGF",
    "ContinuationResult",
    "FilteredComplex",
    "GFError",
    "Generator",
    "GridCertificate",
    "InconsistentComplex",
    "Indeterminate",
    "NoStabilization",
    "RadialStepGF",
    "SampledStepGF",
    "StabilizedResult",
    "StepTooLarge",
    "WindowTouchesCriticalValue",
    "cofinal_profile",
    "continuation_map",
    "cubical_complex",
    "gf_build",
    "gf_homology_window",
    "morse_bott_complex",
    "orbit_generators",
    "pair_homology_2d",
    "stabilized_gf",
    "sublevel_pair_homology",
]
