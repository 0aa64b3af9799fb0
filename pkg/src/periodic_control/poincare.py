"""Projection of the phase-extended system to the Poincare sphere.

The state space R^d is attached to the north pole of the unit sphere in
R^{d+1}; the induced system lives on the closed upper hemisphere, with the
equator (last coordinate zero) invariant and encoding the behavior at
infinity.  The embedding

    e(tau, x) = (tau, (x, 1) / sqrt(1 + |x|^2))

is a conjugacy between the original controlled dynamics and the projected
field, so trajectories, reachable sets, and control sets transport through
it.  Only the upper hemisphere and the equator are ever produced.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .control_set import ControlSetSandwich
from .directions import sample_directions
from .errors import SignalDomainError
from .periodic_system import ControlSignal, PeriodicSystem, _readonly
from .reachable import radial_boundary_points

TOL_EQUATOR = 1e-12
_UNIT_TOL = 1e-10


@dataclass(frozen=True)
class SpherePoint:
    """Point (tau, s) with s on the unit sphere in R^{d+1}."""

    tau: float
    s: np.ndarray

    def __post_init__(self):
        s = np.atleast_1d(np.asarray(self.s, dtype=float))
        if abs(np.linalg.norm(s) - 1.0) > _UNIT_TOL:
            raise ValueError("sphere point must have unit norm (tolerance 1e-10)")
        object.__setattr__(self, "s", _readonly(s))

    @property
    def state_dim(self) -> int:
        return self.s.shape[0] - 1

    @property
    def hemisphere(self) -> str:
        last = self.s[-1]
        if abs(last) <= TOL_EQUATOR:
            return "equator"
        return "upper" if last > 0 else "lower"


@dataclass(frozen=True)
class SphereTrajectory:
    """Sampled sphere trajectory with its control and integration diagnostics.

    ``max_norm_drift`` is the largest |norm - 1| observed before any
    renormalization; ``max_renorm_shift`` the largest displacement applied
    by renormalizing.
    """

    times: np.ndarray
    states: np.ndarray
    control: ControlSignal
    max_norm_drift: float
    max_renorm_shift: float
    period: float

    def __post_init__(self):
        object.__setattr__(self, "times", _readonly(self.times))
        object.__setattr__(self, "states", _readonly(self.states))

    def __len__(self) -> int:
        return self.times.shape[0]

    def point(self, i: int) -> SpherePoint:
        s = self.states[i]
        return SpherePoint(tau=float(self.times[i] % self.period), s=s / np.linalg.norm(s))

    def __iter__(self):
        for i in range(len(self)):
            yield float(self.times[i]), self.point(i)


@dataclass(frozen=True)
class ProjectedControlSet:
    """Embedded boundary samples of the control-set fibers.

    Each row of the point arrays is (tau, s_1, ..., s_{d+1}).  The equator
    intersection is reported through the limit directions of the center
    subspace; it is empty exactly when the control set is bounded.
    """

    inner_points: np.ndarray
    outer_points: np.ndarray
    equator_points: np.ndarray
    bounded: bool
    min_upper_component: float | None


def embed(tau: float, x) -> SpherePoint:
    """Central-projection embedding into the open upper hemisphere."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    ext = np.concatenate([x, [1.0]])
    return SpherePoint(tau=float(tau), s=ext / np.linalg.norm(ext))


def unembed(point: SpherePoint, tol_equator: float = TOL_EQUATOR) -> tuple[float, np.ndarray]:
    """Inverse embedding; defined strictly inside the upper hemisphere."""
    last = point.s[-1]
    if last <= tol_equator:
        raise ValueError("unembed requires a point strictly in the upper hemisphere")
    return point.tau, point.s[:-1] / last


def _projected_linear_field(a_mat: np.ndarray, s: np.ndarray) -> np.ndarray:
    a_s = a_mat @ s
    return a_s - (s @ a_s) * s


def _sphere_field(a_mat: np.ndarray, b_mat: np.ndarray, u: np.ndarray,
                  s_full: np.ndarray) -> np.ndarray:
    """Projected drift plus control terms; tangent at unit-norm states."""
    d = a_mat.shape[0]
    s, z = s_full[:d], s_full[d]
    quad = s @ (a_mat @ s)
    out = np.empty(d + 1)
    out[:d] = _projected_linear_field(a_mat, s)
    out[d] = -quad * z
    bu = b_mat @ u
    c = s @ bu
    out[:d] += (-c * z) * s + bu * z
    out[d] += -c * z * z
    return out


def sphere_vector_field(sys: PeriodicSystem, tau: float, point: SpherePoint,
                        u, check_control: bool = True) -> np.ndarray:
    """Vector field of the induced system on the sphere at phase tau.

    The result is orthogonal to the state (tangency); the control terms
    vanish on the equator, which is invariant.
    """
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if check_control and not sys.control_range.contains(u):
        raise ValueError(f"control value {u} outside the control range")
    if point.state_dim != sys.dim:
        raise ValueError("sphere point dimension does not match the system")
    a_mat, b_mat = sys.eval_coeffs(tau)
    return _sphere_field(a_mat, b_mat, u, point.s)


def equator_vector_field(sys: PeriodicSystem, tau: float, s) -> np.ndarray:
    """Uncontrolled projective field (A - s^T A s I) s on the unit sphere S^{d-1}."""
    s = np.atleast_1d(np.asarray(s, dtype=float))
    if abs(np.linalg.norm(s) - 1.0) > 1e-9:
        raise ValueError("equator state must have unit norm")
    a_mat, _ = sys.eval_coeffs(tau)
    return _projected_linear_field(a_mat, s)


def _integration_grid(sys: PeriodicSystem, tau0: float, u: ControlSignal,
                      t_end: float, step: float) -> np.ndarray:
    # exact breakpoints first, then near-uniform sub-steps inside each span,
    # so control and coefficient switches are never displaced by float drift
    specials = {0.0, float(t_end)}
    for b in u.breakpoints:
        if 0.0 < b < t_end:
            specials.add(float(b))
    T = sys.period
    for b in sys.boundaries[:-1]:
        first = (b - tau0) % T
        t = first if first > 1e-12 else T
        while t < t_end:
            specials.add(float(t))
            t += T
    anchors = sorted(specials)
    grid = []
    for a, b in zip(anchors[:-1], anchors[1:]):
        if b - a <= 1e-12:
            continue
        nsub = max(1, int(np.ceil((b - a) / step - 1e-9)))
        grid.extend(np.linspace(a, b, nsub + 1)[:-1].tolist())
    grid.append(float(t_end))
    return np.array(grid)


def integrate_sphere(sys: PeriodicSystem, p0: SpherePoint, u: ControlSignal,
                     t_end: float, step: float,
                     renormalize: bool = True) -> SphereTrajectory:
    """Classical fourth-order integration of the projected system.

    Steps are split at control and coefficient breakpoints so the field is
    smooth inside every step; the state is pulled back to the unit sphere
    after each step when ``renormalize`` is set, and both the
    pre-renormalization norm drift and the applied shift are recorded.
    """
    if step <= 0:
        raise ValueError("integration step must be positive")
    if t_end < 0:
        raise ValueError("t_end must be nonnegative")
    if not u.covers(0.0, t_end):
        raise SignalDomainError("control signal must cover [0, t_end]")
    tau0 = p0.tau % sys.period
    grid = _integration_grid(sys, tau0, u, t_end, step)
    states = np.empty((grid.size, sys.dim + 1))
    s = p0.s.copy()
    states[0] = s
    max_drift = 0.0
    max_shift = 0.0
    for i in range(grid.size - 1):
        a, b = grid[i], grid[i + 1]
        h = b - a
        a_mat, b_mat = sys.eval_coeffs(tau0 + a)
        uval = u.value(a)
        k1 = _sphere_field(a_mat, b_mat, uval, s)
        k2 = _sphere_field(a_mat, b_mat, uval, s + (h / 2) * k1)
        k3 = _sphere_field(a_mat, b_mat, uval, s + (h / 2) * k2)
        k4 = _sphere_field(a_mat, b_mat, uval, s + h * k3)
        s = s + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        norm = np.linalg.norm(s)
        max_drift = max(max_drift, abs(norm - 1.0))
        if renormalize:
            renormed = s / norm
            max_shift = max(max_shift, float(np.linalg.norm(renormed - s)))
            s = renormed
        states[i + 1] = s
    return SphereTrajectory(times=grid, states=states, control=u,
                            max_norm_drift=max_drift, max_renorm_shift=max_shift,
                            period=sys.period)


def equator_equilibria(sys: PeriodicSystem, tau: float = 0.0,
                       n_grid: int = 720) -> np.ndarray:
    """Equilibria of the equator field for planar systems (d = 2).

    Finds zeros of the angular speed by bisection on a uniform angle grid;
    returns unit vectors in R^2, one row per equilibrium.
    """
    if sys.dim != 2:
        raise ValueError("equator equilibria search is implemented for d = 2")
    a_mat, _ = sys.eval_coeffs(tau)

    def omega(theta: float) -> float:
        s = np.array([np.cos(theta), np.sin(theta)])
        t = np.array([-np.sin(theta), np.cos(theta)])
        return float(t @ (a_mat @ s))

    thetas = np.linspace(0.0, 2.0 * np.pi, n_grid + 1)
    roots = []
    for i in range(n_grid):
        lo, hi = thetas[i], thetas[i + 1]
        f_lo, f_hi = omega(lo), omega(hi)
        if f_lo == 0.0:
            roots.append(lo)
            continue
        if f_lo * f_hi < 0:
            for _ in range(80):
                mid = 0.5 * (lo + hi)
                f_mid = omega(mid)
                if f_lo * f_mid <= 0:
                    hi = mid
                else:
                    lo, f_lo = mid, f_mid
            roots.append(0.5 * (lo + hi))
    pts = [np.array([np.cos(t), np.sin(t)]) for t in roots]
    out = []
    for p in pts:  # drop near-duplicates from adjacent panels
        if all(np.linalg.norm(p - q) > 1e-6 for q in out):
            out.append(p)
    return np.array(out) if out else np.zeros((0, 2))


def project_control_set(sandwich: ControlSetSandwich, samples: int = 64,
                        seed: int = 0) -> ProjectedControlSet:
    """Embed boundary samples of the sandwich fibers into the sphere.

    Boundary points are radial sections of the outer polyhedral hull
    defined by the sampled support values; unbounded (center) directions
    contribute no finite boundary and are represented instead by the
    equator limit points of the center subspace.  For bounded control sets
    every projected point stays a positive distance from the equator.
    """
    d = sandwich.dim
    rays = sample_directions(d, samples, seed=seed)
    inner_rows = []
    outer_rows = []
    equator_rows = []
    min_upper = None
    for fiber in sandwich.fibers:
        finite = ~fiber.unbounded_mask & np.isfinite(fiber.inner)
        if np.any(finite):
            for kind, sup, rows in (("inner", fiber.inner, inner_rows),
                                    ("outer", fiber.outer, outer_rows)):
                pts = radial_boundary_points(fiber.directions[finite], sup[finite], rays)
                for x in pts:
                    s = embed(fiber.tau, x).s
                    rows.append(np.concatenate([[fiber.tau], s]))
                    last = float(s[-1])
                    min_upper = last if min_upper is None else min(min_upper, last)
        if fiber.center_basis.shape[1]:
            cdirs = sample_directions(fiber.center_basis.shape[1],
                                      max(2, min(samples, 16)), seed=seed)
            for c in cdirs:
                w = fiber.center_basis @ c
                w = w / np.linalg.norm(w)
                equator_rows.append(np.concatenate([[fiber.tau], w, [0.0]]))
    width = d + 2
    inner_points = np.array(inner_rows) if inner_rows else np.zeros((0, width))
    outer_points = np.array(outer_rows) if outer_rows else np.zeros((0, width))
    equator_points = np.array(equator_rows) if equator_rows else np.zeros((0, width))
    bounded = not sandwich.unbounded
    if bounded and min_upper is not None and min_upper <= 0:
        raise AssertionError("bounded control set projected onto the equator")
    return ProjectedControlSet(inner_points=inner_points, outer_points=outer_points,
                               equator_points=equator_points, bounded=bounded,
                               min_upper_component=min_upper)
