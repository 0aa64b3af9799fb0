"""Quasi-affine systems x' = A(v) x + B(v) u analyzed by freezing periodic
parameter signals.

Freezing a periodic parameter signal v produces a periodic linear control
system; when every frozen system is controllable without constraints and
hyperbolic (no Floquet multiplier on the unit circle), the quasi-affine
system has a unique control set whose closure is the union of the
phase-projected frozen control sets over all periodic v.  A finite family
of signals therefore yields an inner approximation of that union; local
accessibility is a declared hypothesis recorded in the result metadata,
not verified algorithmically.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .control_set import (ControlSetSandwich, DEFAULT_K_MAX, DEFAULT_TOL_CONV,
                          control_set_sandwich)
from .directions import sample_directions
from .errors import HypothesisViolatedError
from .floquet import DEFAULT_TOL_CENTER, floquet_spectrum
from .periodic_system import (BoxRange, ControlRange, ControlSignal,
                              PeriodicSystem, PolytopeRange, _readonly, solve)
from .reachable import DEFAULT_QUAD_STEP, radial_boundary_points

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# parameter signals and input maps


@dataclass(frozen=True)
class PeriodicParameterSignal:
    """Piecewise-constant periodic parameter signal on [0, T_v)."""

    period: float
    breakpoints: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        bp = np.asarray(self.breakpoints, dtype=float)
        vals = np.atleast_2d(np.asarray(self.values, dtype=float))
        if bp.ndim != 1 or bp.size < 2 or abs(bp[0]) > 1e-12:
            raise ValueError("breakpoints must start at 0")
        if abs(bp[-1] - self.period) > 1e-12:
            raise ValueError("breakpoints must end at the period")
        if np.any(np.diff(bp) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        if vals.shape[0] != bp.size - 1:
            raise ValueError("one value per segment required")
        object.__setattr__(self, "breakpoints", _readonly(bp))
        object.__setattr__(self, "values", _readonly(vals))

    @staticmethod
    def constant(value, period: float) -> "PeriodicParameterSignal":
        value = np.atleast_1d(np.asarray(value, dtype=float))
        return PeriodicParameterSignal(period=float(period),
                                       breakpoints=np.array([0.0, float(period)]),
                                       values=value[None, :])

    @staticmethod
    def from_values(values, period: float) -> "PeriodicParameterSignal":
        vals = np.atleast_2d(np.asarray(values, dtype=float))
        n = vals.shape[0]
        return PeriodicParameterSignal(period=float(period),
                                       breakpoints=np.linspace(0.0, float(period), n + 1),
                                       values=vals)

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @property
    def n_segments(self) -> int:
        return self.values.shape[0]


class InputMap:
    """Parameter-dependent input matrix B(v)."""

    def __call__(self, v: np.ndarray) -> np.ndarray:
        raise NotImplementedError


class ConstantInputMap(InputMap):
    def __init__(self, b0):
        self.b0 = _readonly(np.atleast_2d(np.asarray(b0, dtype=float)))

    def __call__(self, v):
        return self.b0


class AffineInputMap(InputMap):
    """B(v) = B0 + sum_i v_i B_i."""

    def __init__(self, b0, terms):
        self.b0 = _readonly(np.atleast_2d(np.asarray(b0, dtype=float)))
        self.terms = tuple(_readonly(np.atleast_2d(np.asarray(t, dtype=float)))
                           for t in terms)
        for t in self.terms:
            if t.shape != self.b0.shape:
                raise ValueError("input map terms must share the base shape")

    def __call__(self, v):
        v = np.atleast_1d(np.asarray(v, dtype=float))
        out = self.b0.copy()
        for vi, t in zip(v, self.terms):
            out += vi * t
        return out


class TableInputMap(InputMap):
    """Multilinear interpolation of B over a rectangular grid of v samples."""

    def __init__(self, axes, values):
        self.axes = tuple(np.asarray(a, dtype=float) for a in axes)
        self.values = np.asarray(values, dtype=float)
        self._interp = RegularGridInterpolator(self.axes, self.values,
                                               method="linear", bounds_error=True)

    def __call__(self, v):
        v = np.atleast_1d(np.asarray(v, dtype=float))
        return np.asarray(self._interp(v[None, :])[0], dtype=float)


class QuasiAffineSystem:
    """System x' = (A0 + sum v_i A_i) x + B(v) u with (u, v) in U x V."""

    def __init__(self, a0, a_terms, input_map: InputMap,
                 control_range: ControlRange, parameter_range: ControlRange):
        self.a0 = _readonly(np.atleast_2d(np.asarray(a0, dtype=float)))
        self.a_terms = tuple(_readonly(np.atleast_2d(np.asarray(t, dtype=float)))
                             for t in a_terms)
        d = self.a0.shape[0]
        if self.a0.shape != (d, d) or any(t.shape != (d, d) for t in self.a_terms):
            raise ValueError("A matrices must be square and share their shape")
        if not isinstance(parameter_range, (BoxRange, PolytopeRange)):
            raise ValueError("parameter range must be a compact box or polytope")
        if not parameter_range.contains_origin_interior():
            raise ValueError("parameter range must contain 0 in its interior")
        if parameter_range.dim != len(self.a_terms):
            raise ValueError("parameter dimension must match the number of A terms")
        self.input_map = input_map
        self.control_range = control_range
        self.parameter_range = parameter_range
        self.dim = d
        self.parameter_dim = parameter_range.dim

    def a_of(self, v) -> np.ndarray:
        v = np.atleast_1d(np.asarray(v, dtype=float))
        out = self.a0.copy()
        for vi, t in zip(v, self.a_terms):
            out += vi * t
        return out

    def b_of(self, v) -> np.ndarray:
        return self.input_map(v)


# ---------------------------------------------------------------------------
# operations


def freeze_periodic(qsys: QuasiAffineSystem,
                    v: PeriodicParameterSignal) -> PeriodicSystem:
    """Periodic linear system obtained by freezing a periodic parameter signal.

    The segmentation is inherited from the signal; values outside the
    parameter range are rejected.
    """
    if v.dim != qsys.parameter_dim:
        raise ValueError("signal dimension does not match the parameter range")
    segs = []
    for j in range(v.n_segments):
        val = v.values[j]
        if not qsys.parameter_range.contains(val):
            raise ValueError(f"parameter value {val} outside the parameter range")
        segs.append((float(v.breakpoints[j]), float(v.breakpoints[j + 1]),
                     qsys.a_of(val), qsys.b_of(val)))
    return PeriodicSystem(segs, qsys.control_range)


def periodic_fixed_point(sys_v: PeriodicSystem, u: ControlSignal,
                         tol_center: float = DEFAULT_TOL_CENTER) -> np.ndarray:
    """Initial value of the unique dT-periodic solution under a dT-periodic u.

    Solves (I - X(dT, 0)) y = phi(dT; 0, 0, u).  Requires hyperbolicity:
    any Floquet multiplier within ``tol_center`` of the unit circle raises
    :class:`HypothesisViolatedError` (the periodic solution is then not
    guaranteed unique).
    """
    d = sys_v.dim
    t_total = d * sys_v.period
    groups = floquet_spectrum(sys_v.period_matrix, sys_v.period, tol_center=tol_center)
    for g in groups:
        if g.classification == "center":
            raise HypothesisViolatedError(
                "hyperbolicity violated: Floquet multiplier of modulus "
                f"{float(np.mean(np.abs(g.multipliers))):.12g} lies on the unit "
                f"circle within tolerance {tol_center}")
    forced = solve(sys_v, t_total, 0.0, np.zeros(d), u)
    x_dt = sys_v.fundamental(t_total, 0.0)
    return np.linalg.solve(np.eye(d) - x_dt, forced)


def generate_family(qsys: QuasiAffineSystem, period: float = 1.0,
                    n_segments=(1, 2, 4), include_center: bool = True,
                    max_signals: int = 64) -> tuple[PeriodicParameterSignal, ...]:
    """Default finite family: piecewise-constant signals with values at the
    parameter-range vertices (and center), deduplicated up to constant
    refinement, in deterministic order, capped at ``max_signals``."""
    if isinstance(qsys.parameter_range, BoxRange):
        lo, hi = qsys.parameter_range.lower, qsys.parameter_range.upper
        vertices = [np.array(c) for c in itertools.product(*zip(lo, hi))]
    else:
        vertices = [v.copy() for v in qsys.parameter_range.vertices]
    values = list(vertices)
    if include_center:
        values.append(np.zeros(qsys.parameter_dim))
    signals = []
    seen = set()
    for n_seg in n_segments:
        for combo in itertools.product(range(len(values)), repeat=int(n_seg)):
            # canonical form: merge equal adjacent values, so refinements of
            # a constant signal do not reappear
            merged = [combo[0]]
            for c in combo[1:]:
                if c != merged[-1]:
                    merged.append(c)
            key = (n_seg if len(merged) > 1 else 1, tuple(merged))
            if key in seen:
                continue
            seen.add(key)
            vals = np.array([values[c] for c in combo])
            signals.append(PeriodicParameterSignal.from_values(vals, period))
            if len(signals) >= max_signals:
                return tuple(signals)
    return tuple(signals)


@dataclass(frozen=True)
class FrozenAnalysis:
    """Outcome of the control-set computation for one frozen signal."""

    signal: PeriodicParameterSignal
    sandwich: ControlSetSandwich | None
    skip_reason: str | None = None


@dataclass(frozen=True)
class UnionControlSet:
    """Union of phase-projected frozen control sets over a finite family.

    ``envelope`` holds per-direction support maxima over the family and
    the phase grid (exact for the support envelope of the union);
    ``cloud`` keeps per-signal boundary samples, preserving any
    non-convexity of the union.  A finite family under-approximates the
    union over all periodic parameter signals.
    """

    analyses: tuple[FrozenAnalysis, ...]
    directions: np.ndarray
    envelope: np.ndarray
    cloud: np.ndarray
    metadata: dict = field(default_factory=dict)


def union_control_set(qsys: QuasiAffineSystem, family, *,
                      tau_grid=8, k_max: int = DEFAULT_K_MAX,
                      directions: np.ndarray | None = None,
                      tol_conv: float = DEFAULT_TOL_CONV,
                      quad_step: float = DEFAULT_QUAD_STEP,
                      tol_center: float = DEFAULT_TOL_CENTER,
                      boundary_samples: int = 32,
                      seed: int = 0) -> UnionControlSet:
    """Per-signal control sets plus their phase-projected union.

    Signals whose frozen system fails the controllability or
    hyperbolicity hypothesis are skipped with a log entry rather than
    aborting the family.
    """
    family = tuple(family)
    if not family:
        raise ValueError("family of parameter signals must be nonempty")
    if directions is None:
        directions = sample_directions(qsys.dim, seed=seed)
    dirs = np.atleast_2d(np.asarray(directions, dtype=float))
    rays = sample_directions(qsys.dim, boundary_samples, seed=seed)

    analyses = []
    envelope = np.full(dirs.shape[0], -np.inf)
    cloud_rows = []
    skipped = []
    for i, signal in enumerate(family):
        sys_v = freeze_periodic(qsys, signal)
        try:
            groups = floquet_spectrum(sys_v.period_matrix, sys_v.period,
                                      tol_center=tol_center)
            if any(g.classification == "center" for g in groups):
                raise HypothesisViolatedError(
                    "frozen system has a Floquet multiplier on the unit circle")
            sandwich = control_set_sandwich(
                sys_v, tau_grid=tau_grid, k_max=k_max, directions=dirs,
                tol_conv=tol_conv, quad_step=quad_step, tol_center=tol_center,
                seed=seed)
        except HypothesisViolatedError as exc:
            logger.warning("skipping family member %d: %s", i, exc)
            skipped.append({"index": i, "reason": str(exc)})
            analyses.append(FrozenAnalysis(signal=signal, sandwich=None,
                                           skip_reason=str(exc)))
            continue
        # phase projection: per-direction max of fiber supports over the grid
        per_dir = np.max(np.vstack([f.inner for f in sandwich.fibers]), axis=0)
        envelope = np.maximum(envelope, per_dir)
        for fiber in sandwich.fibers:
            pts = radial_boundary_points(fiber.directions, fiber.inner, rays)
            for x in pts:
                cloud_rows.append(np.concatenate([[float(i), fiber.tau], x]))
        analyses.append(FrozenAnalysis(signal=signal, sandwich=sandwich))
    if np.all(np.isinf(envelope)):
        raise HypothesisViolatedError(
            "every family member was skipped; no union approximation available")
    cloud = np.array(cloud_rows) if cloud_rows else np.zeros((0, qsys.dim + 2))
    metadata = {
        "local_accessibility": "assumed (declared hypothesis, not verified)",
        "family_size": len(family),
        "skipped": skipped,
        "approximation": "inner (finite family under-approximates the union)",
    }
    return UnionControlSet(analyses=tuple(analyses), directions=_readonly(dirs),
                           envelope=_readonly(envelope), cloud=_readonly(cloud),
                           metadata=metadata)
