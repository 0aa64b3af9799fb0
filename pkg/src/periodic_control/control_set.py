"""Inner and outer approximation of the unique control set of the
autonomized system.

When the system with unconstrained controls is controllable, the
phase-extended system has a unique control set with nonvoid interior whose
fiber at phase tau decomposes along the spectral splitting as

    (bounded stable component)  +  E_tau^0  +  (bounded unstable component),

where the stable component is the limit of the reachable-set projections
onto E^- along E^{+,0} and the unstable component is its mirror under time
reversal.  Both components are computed as convergent support-function
iterations over whole periods; center directions are carried symbolically
as unbounded subspace directions, and the interior of the control set is
unbounded exactly when the center subspace is nontrivial.

``inner`` fibers report the monotone iteration at its stopping index;
``outer`` fibers add a geometric tail extrapolated from the last increment
ratio, so the inner/outer gap contracts to the quadrature level as the
iteration converges.  The conservative one-sided bounds obtained by
weighting the components with Y = X(dT + tau, tau) (inner) and its inverse
(outer) are also evaluated and reported as ``bound_inner``/``bound_outer``
without interpretation; their gap does not contract.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .directions import sample_directions
from .errors import HypothesisViolatedError, NumericalConditioningError
from .floquet import FloquetDecomposition, floquet_spaces, DEFAULT_TOL_CENTER, DEFAULT_TOL_GROUP
from .periodic_system import PeriodicSystem, _readonly
from .reachable import (ConvexSetApprox, DEFAULT_QUAD_STEP, controllability_gramian,
                        support_profile, _reversed_cached)

DEFAULT_K_MAX = 64
DEFAULT_TOL_CONV = 1e-8
_CENTER_DIR_TOL = 1e-9


@dataclass(frozen=True)
class PhaseFiber:
    """Per-phase slice of the control set sandwich."""

    tau: float
    directions: np.ndarray
    inner: np.ndarray
    outer: np.ndarray
    bound_inner: np.ndarray
    bound_outer: np.ndarray
    unbounded_mask: np.ndarray
    center_basis: np.ndarray
    stable_basis: np.ndarray
    unstable_basis: np.ndarray
    y_matrix: np.ndarray
    y_inverse: np.ndarray
    k_minus: int
    k_plus: int
    basis_condition: float
    stable_component: ConvexSetApprox
    unstable_component: ConvexSetApprox

    def __post_init__(self):
        for name in ("directions", "inner", "outer", "bound_inner", "bound_outer",
                     "center_basis", "stable_basis", "unstable_basis",
                     "y_matrix", "y_inverse"):
            object.__setattr__(self, name, _readonly(getattr(self, name)))
        mask = np.asarray(self.unbounded_mask, dtype=bool)
        mask.setflags(write=False)
        object.__setattr__(self, "unbounded_mask", mask)


@dataclass(frozen=True)
class ControlSetSandwich:
    """Sandwich approximation of the unique control set over a phase grid."""

    tau_grid: np.ndarray
    fibers: tuple[PhaseFiber, ...]
    directions: np.ndarray
    unbounded: bool
    center_dim: int
    dim: int
    period: float
    k_max: int
    tol_conv: float
    quad_step: float

    def __post_init__(self):
        object.__setattr__(self, "tau_grid", _readonly(self.tau_grid))
        object.__setattr__(self, "directions", _readonly(self.directions))

    def fiber_at(self, tau: float) -> PhaseFiber:
        idx = int(np.argmin(np.abs(self.tau_grid - tau)))
        return self.fibers[idx]


# ---------------------------------------------------------------------------
# helpers


def _oblique_transpose(target: np.ndarray, complement: np.ndarray):
    """Transpose of the projection onto span(target) along span(complement).

    Returns ``(P^T, cond)`` where ``P = [V 0] [V W]^{-1}``; the condition
    number of the combined basis is reported because it controls the
    accuracy of the splitting.
    """
    d = target.shape[0]
    r = target.shape[1]
    if r == 0:
        return np.zeros((d, d)), 1.0
    if complement.shape[1] == 0:
        return np.eye(d), 1.0
    m = np.hstack([target, complement])
    cond = float(np.linalg.cond(m))
    p = target @ np.linalg.inv(m)[:r, :]
    return p.T, cond


def _annihilator_projector(complement: np.ndarray) -> np.ndarray | None:
    """Orthogonal projector onto the annihilator of an orthonormal block."""
    if complement.shape[1] == 0:
        return None
    return np.eye(complement.shape[0]) - complement @ complement.T


def _converged_row(k_values: np.ndarray, h: np.ndarray, tol_conv: float):
    """First sweep row whose largest per-direction increment is below tol.

    Returns ``(row_index, increments_at_row)`` or ``(None, last_increments)``.
    """
    if h.shape[1] == 0 or h.shape[0] == 1:
        return h.shape[0] - 1, np.zeros(h.shape[1])
    inc = np.diff(h, axis=0)
    for row in range(1, h.shape[0]):
        if np.max(inc[row - 1]) < tol_conv:
            return row, inc[row - 1]
    return None, inc[-1]


def _tail_estimate(h: np.ndarray, row: int) -> np.ndarray:
    """Geometric tail bound per direction from the last increment ratio."""
    n = h.shape[1]
    if n == 0 or row < 2:
        return np.zeros(n)
    d_last = h[row] - h[row - 1]
    d_prev = h[row - 1] - h[row - 2]
    tail = np.zeros(n)
    for j in range(n):
        if d_last[j] <= 0:
            continue
        ratio = d_last[j] / d_prev[j] if d_prev[j] > 0 else 0.0
        ratio = min(max(ratio, 0.0), 0.999)
        tail[j] = d_last[j] * ratio / (1.0 - ratio)
    return tail


def _component_sweep(sweep_sys: PeriodicSystem, q_cols: np.ndarray, *,
                     end_phase: float, start_time: float, reproject,
                     k_max: int, tol_conv: float, quad_step: float, what: str):
    """Run a support sweep and stop at its convergence row."""
    k_values, h, overflow = support_profile(
        sweep_sys, q_cols.T, k_max=k_max, end_phase=end_phase,
        start_time=start_time, reproject=reproject, quad_step=quad_step)
    if np.any(overflow):
        raise NumericalConditioningError(
            f"{what}: direction pullback overflowed; the spectral splitting "
            "is too ill-conditioned for this horizon")
    row, inc = _converged_row(k_values, h, tol_conv)
    if row is None:
        raise NumericalConditioningError(
            f"{what}: support iteration did not converge within k_max="
            f"{k_max} (last increment {np.max(inc):.3e}, tol {tol_conv:.1e}); "
            "increase k_max or loosen tol_conv")
    return int(k_values[row]), h, row


# ---------------------------------------------------------------------------
# bounded components


def _component(sys: PeriodicSystem, decomposition: FloquetDecomposition,
               which: str, k_max: int, directions: np.ndarray | None,
               tol_conv: float, quad_step: float, seed: int = 0) -> ConvexSetApprox:
    tau = decomposition.tau
    if which == "minus":
        target, complement = decomposition.stable, decomposition.center_unstable
        sweep_sys, end_phase, start_time = sys, tau, 0.0
    else:
        target, complement = decomposition.unstable, decomposition.center_stable
        sweep_sys = _reversed_cached(sys, tau)
        end_phase, start_time = 0.0, tau
    r = target.shape[1]
    symmetric = sys.control_range.is_symmetric()
    if r == 0:
        return ConvexSetApprox(directions=np.zeros((0, 0)), supports=np.zeros(0),
                               symmetric=symmetric)
    coords = sample_directions(r, seed=seed) if directions is None \
        else np.atleast_2d(np.asarray(directions, dtype=float))
    pi_t, _ = _oblique_transpose(target, complement)
    q_cols = pi_t @ (target @ coords.T)
    _, h, row = _component_sweep(
        sweep_sys, q_cols, end_phase=end_phase, start_time=start_time,
        reproject=_annihilator_projector(complement), k_max=k_max,
        tol_conv=tol_conv, quad_step=quad_step,
        what=f"bounded component ({which}) at tau={tau:g}")
    return ConvexSetApprox(directions=coords, supports=h[row], symmetric=symmetric)


def bounded_component_minus(sys: PeriodicSystem, tau: float,
                            k_max: int = DEFAULT_K_MAX,
                            directions: np.ndarray | None = None,
                            tol_conv: float = DEFAULT_TOL_CONV,
                            quad_step: float = DEFAULT_QUAD_STEP,
                            decomposition: FloquetDecomposition | None = None
                            ) -> ConvexSetApprox:
    """Bounded stable component of the control set fiber at phase tau.

    Limit of the reachable sets from phase 0 projected onto E^- along
    E^{+,0}, sampled over directions in E^- coordinates; the iteration has
    a geometric rate driven by the stable contraction and stops when every
    per-direction increment falls below ``tol_conv``.  Trivial E^- yields
    the zero set (an empty, zero-dimensional approximation).
    """
    decomp = decomposition or floquet_spaces(sys, tau)
    return _component(sys, decomp, "minus", k_max, directions, tol_conv, quad_step)


def bounded_component_plus(sys: PeriodicSystem, tau: float,
                           k_max: int = DEFAULT_K_MAX,
                           directions: np.ndarray | None = None,
                           tol_conv: float = DEFAULT_TOL_CONV,
                           quad_step: float = DEFAULT_QUAD_STEP,
                           decomposition: FloquetDecomposition | None = None
                           ) -> ConvexSetApprox:
    """Bounded unstable component: mirror of the stable component under
    time reversal (controllable sets), projected onto E^+ along E^{-,0}."""
    decomp = decomposition or floquet_spaces(sys, tau)
    return _component(sys, decomp, "plus", k_max, directions, tol_conv, quad_step)


# ---------------------------------------------------------------------------
# the sandwich


def control_set_sandwich(sys: PeriodicSystem, tau_grid=16,
                         k_max: int = DEFAULT_K_MAX,
                         directions: np.ndarray | None = None,
                         tol_conv: float = DEFAULT_TOL_CONV,
                         quad_step: float = DEFAULT_QUAD_STEP,
                         tol_group: float = DEFAULT_TOL_GROUP,
                         tol_center: float = DEFAULT_TOL_CENTER,
                         gramian_tol_rank: float = 1e-10,
                         seed: int = 0) -> ControlSetSandwich:
    """Assemble per-phase inner/outer fibers of the unique control set.

    Requires the system with unconstrained controls to be controllable
    (Gramian test over [0, dT]) and the control range to contain the
    origin in its interior; violations raise
    :class:`HypothesisViolatedError` since uniqueness is not guaranteed
    without them.
    """
    if not sys.control_range.contains_origin_interior():
        raise HypothesisViolatedError(
            "control range must contain the origin in its interior")
    gram = controllability_gramian(sys, sys.dim * sys.period, tol_rank=gramian_tol_rank)
    if not gram.controllable:
        raise HypothesisViolatedError(
            "system with unconstrained controls is not controllable "
            f"(gramian condition estimate {gram.condition:.3e}); "
            "the unique-control-set characterization does not apply")

    T = sys.period
    d = sys.dim
    if np.isscalar(tau_grid):
        taus = np.arange(int(tau_grid)) * (T / int(tau_grid))
    else:
        taus = np.sort(np.asarray(tau_grid, dtype=float) % T)
    if directions is None:
        directions = sample_directions(d, seed=seed)
    dirs = np.atleast_2d(np.asarray(directions, dtype=float))
    n = dirs.shape[0]

    fibers = []
    center_dim = 0
    for tau in taus:
        decomp = floquet_spaces(sys, tau, tol_group, tol_center)
        center_dim = decomp.center_dim
        w0 = decomp.center
        unbounded_mask = (np.linalg.norm(dirs @ w0, axis=1) > _CENTER_DIR_TOL) \
            if w0.shape[1] else np.zeros(n, dtype=bool)

        y = sys.fundamental(d * T + tau, tau)
        y_inv = np.linalg.inv(y)

        pi_m_t, cond_m = _oblique_transpose(decomp.stable, decomp.center_unstable)
        pi_p_t, cond_p = _oblique_transpose(decomp.unstable, decomp.center_stable)
        basis_condition = max(cond_m, cond_p)

        dm = decomp.stable_dim
        dp = decomp.unstable_dim
        coords_m = sample_directions(dm, seed=seed) if dm else np.zeros((0, 0))
        coords_p = sample_directions(dp, seed=seed) if dp else np.zeros((0, 0))

        p_cols = dirs.T
        # stacked sweeps: fiber directions | Y-weighted | Y^{-1}-weighted | coords
        q_minus = np.hstack([
            pi_m_t @ p_cols,
            pi_m_t @ (y.T @ p_cols),
            pi_m_t @ (y_inv.T @ p_cols),
            pi_m_t @ (decomp.stable @ coords_m.T) if dm else np.zeros((d, 0)),
        ])
        q_plus = np.hstack([
            pi_p_t @ p_cols,
            pi_p_t @ (y_inv.T @ p_cols),
            pi_p_t @ (y.T @ p_cols),
            pi_p_t @ (decomp.unstable @ coords_p.T) if dp else np.zeros((d, 0)),
        ])

        k_minus, h_m, row_m = _component_sweep(
            sys, q_minus, end_phase=tau, start_time=0.0,
            reproject=_annihilator_projector(decomp.center_unstable),
            k_max=k_max, tol_conv=tol_conv, quad_step=quad_step,
            what=f"stable component at tau={tau:g}")
        rsys = _reversed_cached(sys, tau)
        k_plus, h_p, row_p = _component_sweep(
            rsys, q_plus, end_phase=0.0, start_time=tau,
            reproject=_annihilator_projector(decomp.center_stable),
            k_max=k_max, tol_conv=tol_conv, quad_step=quad_step,
            what=f"unstable component at tau={tau:g}")

        vm = h_m[row_m]
        vp = h_p[row_p]
        tail_m = _tail_estimate(h_m, row_m)
        tail_p = _tail_estimate(h_p, row_p)

        inner = vm[:n] + vp[:n]
        outer = inner + tail_m[:n] + tail_p[:n]
        bound_inner = vm[n:2 * n] + vp[n:2 * n]
        bound_outer = (vm[2 * n:3 * n] + tail_m[2 * n:3 * n]
                       + vp[2 * n:3 * n] + tail_p[2 * n:3 * n])
        for arr in (inner, outer, bound_inner, bound_outer):
            arr[unbounded_mask] = np.inf

        symmetric = sys.control_range.is_symmetric()
        stable_component = ConvexSetApprox(
            directions=coords_m, supports=vm[3 * n:], symmetric=symmetric)
        unstable_component = ConvexSetApprox(
            directions=coords_p, supports=vp[3 * n:], symmetric=symmetric)

        fibers.append(PhaseFiber(
            tau=float(tau), directions=dirs, inner=inner, outer=outer,
            bound_inner=bound_inner, bound_outer=bound_outer,
            unbounded_mask=unbounded_mask, center_basis=w0,
            stable_basis=decomp.stable, unstable_basis=decomp.unstable,
            y_matrix=y, y_inverse=y_inv, k_minus=k_minus, k_plus=k_plus,
            basis_condition=basis_condition,
            stable_component=stable_component,
            unstable_component=unstable_component))

    return ControlSetSandwich(
        tau_grid=taus, fibers=tuple(fibers), directions=dirs,
        unbounded=center_dim > 0, center_dim=center_dim, dim=d, period=T,
        k_max=k_max, tol_conv=tol_conv, quad_step=quad_step)


def scalar_classification(sandwich: ControlSetSandwich) -> str:
    """Trichotomy for d = 1: 'stable', 'unstable', or 'unbounded'.

    Exactly one case holds depending on the sign of the single Floquet
    exponent: the control set is bounded inside the stable component,
    bounded inside the unstable component, or equals the whole cylinder.
    """
    if sandwich.dim != 1:
        raise ValueError("scalar classification requires a one-dimensional system")
    if sandwich.unbounded:
        return "unbounded"
    fiber = sandwich.fibers[0]
    if fiber.stable_basis.shape[1] == 1:
        return "stable"
    return "unstable"
