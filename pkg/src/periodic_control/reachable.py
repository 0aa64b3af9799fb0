"""Reachable/controllable set approximation via support functions.

The reachable set from the origin is convex, so it is represented by
sampled values of its support function
``h(p) = int supp_U(B(s)^T X(t_f, s)^T p) ds``.  The integrand is evaluated
on a composite Simpson grid (matching the fourth-order integrator used
elsewhere) with the transposed propagators built by one backward sweep per
window, so batches of directions cost a single matrix product per grid
point.  Multi-period horizons are decomposed into repeated one-period
windows: the direction vector is pulled back through the transposed
monodromy once per period, which makes k-sweeps incremental and allows
re-projection onto an invariant annihilator to suppress unstable roundoff
growth.

Controllable sets are reachable sets of the time-reversed system and reuse
the same machinery.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.linalg import expm

from .directions import sample_directions
from .errors import MissingCertificateError
from .periodic_system import (ControlRange, ControlSignal, PeriodicSystem,
                              _readonly, solve, time_reverse)

DEFAULT_QUAD_STEP = 0.01
DIVERGENCE_FACTOR = 1e3
_NORM_CAP = 1e100
_TINY = 1e-30


# ---------------------------------------------------------------------------
# convex set representation


@dataclass(frozen=True)
class ConvexSetApprox:
    """A convex set sampled as (unit direction, support value) pairs.

    ``diverged`` optionally marks directions whose support kept growing at
    the iteration horizon (the honest signal for an unbounded direction).
    """

    directions: np.ndarray
    supports: np.ndarray
    symmetric: bool = False
    diverged: np.ndarray | None = None

    def __post_init__(self):
        dirs = np.atleast_2d(np.asarray(self.directions, dtype=float))
        sup = np.atleast_1d(np.asarray(self.supports, dtype=float))
        if dirs.shape[0] != sup.shape[0]:
            raise ValueError("one support value per direction required")
        if dirs.shape[0]:
            norms = np.linalg.norm(dirs, axis=1)
            if np.any(np.abs(norms - 1.0) > 1e-12):
                raise ValueError("directions must be unit vectors (tolerance 1e-12)")
            if not np.all(np.isfinite(sup)):
                raise ValueError("support values must be finite")
        object.__setattr__(self, "directions", _readonly(dirs))
        object.__setattr__(self, "supports", _readonly(sup))
        if self.diverged is not None:
            flags = np.asarray(self.diverged, dtype=bool)
            flags.setflags(write=False)
            object.__setattr__(self, "diverged", flags)

    @property
    def dim(self) -> int:
        return self.directions.shape[1]

    def validate_invariants(self, tol: float = 1e-9) -> None:
        """Spot-check symmetry pairing and subadditivity on stored directions."""
        dirs, sup = self.directions, self.supports
        n = dirs.shape[0]
        if self.symmetric:
            for i in range(n):
                match = np.where(np.all(np.abs(dirs + dirs[i]) <= 1e-12, axis=1))[0]
                for j in match:
                    if abs(sup[i] - sup[j]) > tol:
                        raise ValueError(
                            f"symmetry violated: h(p)={sup[i]}, h(-p)={sup[j]}")
        for i in range(n):
            for j in range(i, n):
                q = dirs[i] + dirs[j]
                norm = np.linalg.norm(q)
                if norm < 1e-12:
                    continue
                match = np.where(np.all(np.abs(dirs - q / norm) <= 1e-12, axis=1))[0]
                for k in match:
                    if sup[k] * norm > sup[i] + sup[j] + tol:
                        raise ValueError(
                            "subadditivity violated on stored direction triple "
                            f"({i}, {j}, {k})")


@dataclass(frozen=True)
class AutonomizedPoint:
    """State (tau, x) of the phase-extended system on S^1 x R^d."""

    tau: float
    x: np.ndarray
    period: float | None = None

    def __post_init__(self):
        x = np.atleast_1d(np.asarray(self.x, dtype=float))
        object.__setattr__(self, "x", _readonly(x))
        if self.period is not None:
            if not (0.0 <= self.tau < self.period):
                raise ValueError("phase must lie in [0, period)")


@dataclass(frozen=True)
class ReachCertificate:
    """Endpoint of phi(kT + tau; tau, 0, control) with its witness control."""

    tau: float
    periods: int
    control: ControlSignal
    endpoint: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "endpoint",
                           _readonly(np.atleast_1d(np.asarray(self.endpoint, dtype=float))))


class GramianResult(NamedTuple):
    gramian: np.ndarray
    controllable: bool
    condition: float


# ---------------------------------------------------------------------------
# quadrature over one window


class _SupportQuadrature:
    """Composite Simpson rule for s -> supp_U(B(s)^T X(t1, s)^T q) on [t0, t1].

    Grid points are generated per coefficient piece (panel endpoints plus
    midpoints) and X(t1, s)^T is accumulated by one backward sweep of
    half-step exponentials, so construction costs one small expm per piece
    and evaluation is a batched matmul over all directions at once.
    """

    __slots__ = ("weights", "phi_t", "b_stack", "length")

    def __init__(self, sys: PeriodicSystem, t0: float, t1: float, quad_step: float):
        pieces = list(sys.pieces(t0, t1))
        self.length = t1 - t0
        d = sys.dim
        s_vals: list[float] = []
        weights: list[float] = []
        seg_of_point: list[int] = []
        halfsteps: list[np.ndarray | None] = []  # propagator from previous point
        half_cache: dict[tuple[int, float], np.ndarray] = {}
        for a, b, idx in reversed(pieces):
            nsub = max(1, math.ceil((b - a) / quad_step))
            h = (b - a) / nsub
            key = (idx, h)
            e_half_t = half_cache.get(key)
            if e_half_t is None:
                e_half_t = expm(sys.segment_matrices(idx)[0].T * (h / 2.0))
                half_cache[key] = e_half_t
            npts = 2 * nsub + 1
            w = np.zeros(npts)
            w[0:npts - 2:2] += h / 6.0
            w[1:npts - 1:2] += 4.0 * h / 6.0
            w[2:npts:2] += h / 6.0
            for i in range(npts):
                s_vals.append(b - i * (h / 2.0))
                weights.append(float(w[i]))
                seg_of_point.append(idx)
                # None: same point as the previous entry (anchor or junction)
                halfsteps.append(e_half_t if i > 0 else None)
        n = len(s_vals)
        phi_t = np.empty((n, d, d))
        if n:
            phi_t[0] = np.eye(d)
            for i in range(1, n):
                step = halfsteps[i]
                phi_t[i] = phi_t[i - 1] if step is None else step @ phi_t[i - 1]
        self.phi_t = phi_t
        self.weights = np.asarray(weights)
        self.b_stack = np.stack([sys.segment_matrices(i)[1] for i in seg_of_point]) \
            if n else np.zeros((0, d, sys.input_dim))

    def evaluate(self, q_cols: np.ndarray, control_range: ControlRange,
                 chunk: int = 1024) -> np.ndarray:
        """Integral values for each direction column of ``q_cols`` (d, n)."""
        ncol = q_cols.shape[1]
        if self.weights.size == 0 or ncol == 0:
            return np.zeros(ncol)
        out = np.empty(ncol)
        for start in range(0, ncol, chunk):
            cols = q_cols[:, start:start + chunk]
            w = self.phi_t @ cols                       # (npts, d, c)
            g = np.einsum("pdm,pdc->pcm", self.b_stack, w)
            sup = control_range.support(g)              # (npts, c)
            out[start:start + chunk] = self.weights @ sup
        return out


def _window_quadrature(sys: PeriodicSystem, t0: float, t1: float,
                       quad_step: float) -> _SupportQuadrature:
    key = ("quad", round(t0, 12), round(t1, 12), quad_step)
    hit = sys._cache.get(key)
    if hit is None:
        hit = _SupportQuadrature(sys, t0, t1, quad_step)
        sys._cache[key] = hit
    return hit


# ---------------------------------------------------------------------------
# multi-period support profiles


def support_profile(sys: PeriodicSystem, directions: np.ndarray, *,
                    k_max: int, end_phase: float, start_time: float | None = None,
                    reproject: np.ndarray | None = None,
                    quad_step: float = DEFAULT_QUAD_STEP):
    """Support values of R_{kT + end_phase}(start_time, 0) for a k sweep.

    Returns ``(k_values, H, overflowed)`` where ``H[i, j]`` is the support
    in direction ``directions[j]`` at ``k = k_values[i]``; directions need
    not be normalized (supports are positively homogeneous) and zero
    columns yield zero.  ``reproject`` is applied to the pulled-back
    directions after every period (used to hold them in an invariant
    annihilator subspace); ``overflowed`` marks columns abandoned after
    their pullback norm exceeded the overflow cap.
    """
    T = sys.period
    p_cols = np.atleast_2d(np.asarray(directions, dtype=float)).T.copy()
    if p_cols.shape[0] != sys.dim:
        raise ValueError("directions must have the system dimension")
    tau_e = float(end_phase) % T
    t0 = tau_e if start_time is None else float(start_time)
    if not 0.0 <= t0 <= T + 1e-12:
        raise ValueError("start_time must lie within one period")
    delta = tau_e - t0
    c_off = 0 if delta >= -1e-12 else -1
    r = delta - c_off * T
    if r < 0:  # guard tiny negatives
        r = 0.0
    k_min = max(0, -c_off)
    if k_max < k_min:
        raise ValueError(f"k_max must be at least {k_min} for this window")
    n_max = k_max + c_off

    period_quad = _window_quadrature(sys, tau_e, tau_e + T, quad_step)
    head_quad = _window_quadrature(sys, t0, t0 + r, quad_step) if r > 1e-12 else None

    m_t = sys.fundamental(T + tau_e, tau_e).T
    n_dirs = p_cols.shape[1]
    overflowed = np.zeros(n_dirs, dtype=bool)
    q = p_cols if reproject is None else reproject @ p_cols
    q_list = [q.copy()]
    for _ in range(n_max):
        q = m_t @ q
        if reproject is not None:
            q = reproject @ q
        norms = np.linalg.norm(q, axis=0)
        too_big = norms > _NORM_CAP
        if np.any(too_big):
            overflowed |= too_big
            q[:, too_big] = 0.0
        q_list.append(q.copy())

    cum = np.zeros((n_max + 1, n_dirs))
    if n_max > 0:
        stacked = np.hstack(q_list[:n_max])
        j_vals = period_quad.evaluate(stacked, sys.control_range).reshape(n_max, n_dirs)
        cum[1:] = np.cumsum(j_vals, axis=0)

    k_values = np.arange(k_min, k_max + 1)
    h = np.empty((k_values.size, n_dirs))
    if head_quad is not None:
        idx = [k + c_off for k in k_values]
        stacked = np.hstack([q_list[i] for i in idx])
        heads = head_quad.evaluate(stacked, sys.control_range).reshape(len(idx), n_dirs)
    else:
        heads = np.zeros((k_values.size, n_dirs))
    for row, k in enumerate(k_values):
        h[row] = cum[k + c_off] + heads[row]
    if np.any(overflowed):
        h[:, overflowed] = np.inf
    return k_values, h, overflowed


# ---------------------------------------------------------------------------
# operations


def _vanloan_gramian_block(a_mat: np.ndarray, bbt: np.ndarray, h: float) -> np.ndarray:
    """int_0^h e^{-A s} B B^T e^{-A^T s} ds via one block exponential."""
    d = a_mat.shape[0]
    block = np.zeros((2 * d, 2 * d))
    block[:d, :d] = -a_mat
    block[:d, d:] = bbt
    block[d:, d:] = a_mat.T
    big = expm(block * h)
    g = big[:d, d:] @ expm(-a_mat.T * h)
    return 0.5 * (g + g.T)


def controllability_gramian(sys: PeriodicSystem, horizon: float,
                            tol_rank: float = 1e-10) -> GramianResult:
    """Gramian W = int_0^H X(s,0)^{-1} B(s) B(s)^T X(s,0)^{-T} ds.

    ``controllable`` reports whether W is (numerically) nonsingular, which
    for horizons of at least d periods is equivalent to controllability of
    the system with unconstrained controls; a horizon of d*T is the
    canonical choice.
    """
    if horizon <= 0:
        raise ValueError("gramian horizon must be positive")
    d = sys.dim
    w = np.zeros((d, d))
    z = np.eye(d)  # X(a, 0)^{-1} for the current piece start a
    for a, b, idx in sys.pieces(0.0, float(horizon)):
        a_mat, b_mat = sys.segment_matrices(idx)
        block = _vanloan_gramian_block(a_mat, b_mat @ b_mat.T, b - a)
        w += z @ block @ z.T
        z = z @ expm(-a_mat * (b - a))
    w = 0.5 * (w + w.T)
    eigs = np.linalg.eigvalsh(w)
    largest = float(eigs[-1])
    smallest = float(eigs[0])
    controllable = bool(largest > 0 and smallest > tol_rank * largest)
    condition = float("inf") if smallest <= 0 else largest / smallest
    return GramianResult(w, controllable, condition)


def _check_direction(p: np.ndarray, dim: int) -> np.ndarray:
    p = np.atleast_1d(np.asarray(p, dtype=float))
    if p.shape != (dim,):
        raise ValueError(f"direction must have dimension {dim}")
    norm = np.linalg.norm(p)
    if norm < 1e-12:
        raise ValueError("direction must be nonzero")
    return p / norm


def support_reachable(sys: PeriodicSystem, tau: float, k: int, p,
                      quad_step: float = DEFAULT_QUAD_STEP) -> float:
    """Support of the reachable set R_{kT+tau}(tau, 0) in unit direction p."""
    if k < 0:
        raise ValueError("period count k must be nonnegative")
    p = _check_direction(p, sys.dim)
    _, h, _ = support_profile(sys, p[None, :], k_max=int(k),
                              end_phase=tau, start_time=None, quad_step=quad_step)
    return float(h[-1, 0])


def _reversed_cached(sys: PeriodicSystem, mu: float) -> PeriodicSystem:
    key = ("rev", round(float(mu) % sys.period, 12))
    hit = sys._cache.get(key)
    if hit is None:
        hit = time_reverse(sys, mu)
        sys._cache[key] = hit
    return hit


def support_controllable(sys: PeriodicSystem, tau: float, k: int, p,
                         quad_step: float = DEFAULT_QUAD_STEP) -> float:
    """Support of the controllable set C_{-kT+tau}(tau, 0) in direction p.

    Computed as the reachable support of the time-reversed system at the
    matching phase (reversal at mu = 2*tau - kT, which only depends on
    mu mod T).
    """
    if k < 0:
        raise ValueError("period count k must be nonnegative")
    p = _check_direction(p, sys.dim)
    rsys = _reversed_cached(sys, 2.0 * (float(tau) % sys.period))
    _, h, _ = support_profile(rsys, p[None, :], k_max=int(k),
                              end_phase=tau, start_time=None, quad_step=quad_step)
    return float(h[-1, 0])


def reach_endpoint(sys: PeriodicSystem, tau: float, k: int,
                   control: ControlSignal) -> ReachCertificate:
    """Simulate phi(kT + tau; tau, 0, control) and wrap it as a certificate."""
    tau = float(tau) % sys.period
    endpoint = solve(sys, k * sys.period + tau, tau, np.zeros(sys.dim), control)
    return ReachCertificate(tau=tau, periods=int(k), control=control, endpoint=endpoint)


def semigroup_check(sys: PeriodicSystem, cert_x: ReachCertificate,
                    cert_y: ReachCertificate, directions: np.ndarray | None = None,
                    tol: float = 1e-6,
                    quad_step: float = DEFAULT_QUAD_STEP) -> bool:
    """Verify x + X(kT+tau, tau) y lies in the (k+l)-period reachable set.

    Both points must carry witness controls; the certificates are
    re-simulated before the support comparison.  ``tol`` must dominate the
    quadrature error of the support values.
    """
    for cert in (cert_x, cert_y):
        if not isinstance(cert, ReachCertificate):
            raise MissingCertificateError(
                "semigroup_check needs ReachCertificate inputs with stored controls")
    if abs(cert_x.tau - cert_y.tau) > 1e-12:
        raise ValueError("certificates must share their phase")
    tau = cert_x.tau
    for cert in (cert_x, cert_y):
        redo = solve(sys, cert.periods * sys.period + tau, tau,
                     np.zeros(sys.dim), cert.control)
        if np.linalg.norm(redo - cert.endpoint) > 1e-8 * max(1.0, np.linalg.norm(redo)):
            raise MissingCertificateError("certificate endpoint does not match its control")
    k, l = cert_x.periods, cert_y.periods
    z = cert_x.endpoint + sys.fundamental(k * sys.period + tau, tau) @ cert_y.endpoint
    if directions is None:
        directions = sample_directions(sys.dim)
    directions = np.atleast_2d(np.asarray(directions, dtype=float))
    _, h, _ = support_profile(sys, directions, k_max=k + l,
                              end_phase=tau, start_time=None, quad_step=quad_step)
    return bool(np.all(directions @ z <= h[-1] + tol))


def reachable_fiber(sys: PeriodicSystem, tau: float, k_max: int,
                    directions: np.ndarray | None = None,
                    quad_step: float = DEFAULT_QUAD_STEP,
                    seed: int = 0) -> ConvexSetApprox:
    """Fiber of the autonomized reachable set from (0, 0) at phase tau.

    Per direction the supports of R_{kT+tau}(0, 0) increase with k, so the
    value at ``k_max`` is the running supremum; a direction is flagged as
    diverged when its final increment still exceeds ``DIVERGENCE_FACTOR``
    times the first positive one (or when the pullback overflowed).
    """
    if k_max < 0:
        raise ValueError("k_max must be nonnegative")
    if directions is None:
        directions = sample_directions(sys.dim, seed=seed)
    directions = np.atleast_2d(np.asarray(directions, dtype=float))
    _, h, overflow = support_profile(sys, directions, k_max=int(k_max),
                                     end_phase=tau, start_time=0.0,
                                     quad_step=quad_step)
    supports = h[-1].copy()
    diverged = overflow.copy()
    if h.shape[0] >= 2:
        inc = np.diff(h, axis=0)
        last = inc[-1]
        first = np.empty(inc.shape[1])
        for j in range(inc.shape[1]):
            positive = inc[:, j][inc[:, j] > _TINY]
            first[j] = positive[0] if positive.size else np.inf
        diverged |= last > DIVERGENCE_FACTOR * first
    # keep the stored representation finite; divergence lives in the flag
    bad = ~np.isfinite(supports)
    if np.any(bad):
        finite_rows = h[:, bad]
        finite_rows = np.where(np.isfinite(finite_rows), finite_rows, 0.0)
        supports[bad] = finite_rows.max(axis=0)
        diverged[bad] = True
    return ConvexSetApprox(directions=directions, supports=supports,
                           symmetric=sys.control_range.is_symmetric(),
                           diverged=diverged)


def radial_boundary_points(directions: np.ndarray, supports: np.ndarray,
                           rays: np.ndarray) -> np.ndarray:
    """Boundary samples of {x : <p_i, x> <= h_i} along the given unit rays.

    Rays on which the outer polyhedron is unbounded are dropped.
    """
    dirs = np.atleast_2d(np.asarray(directions, dtype=float))
    sup = np.atleast_1d(np.asarray(supports, dtype=float))
    rays = np.atleast_2d(np.asarray(rays, dtype=float))
    pts = []
    for ray in rays:
        dens = dirs @ ray
        mask = dens > 1e-12
        if not np.any(mask):
            continue
        finite = np.isfinite(sup[mask])
        if not np.any(finite):
            continue
        t = np.min(sup[mask][finite] / dens[mask][finite])
        pts.append(t * ray)
    return np.array(pts) if pts else np.zeros((0, dirs.shape[1]))
