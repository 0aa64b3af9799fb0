"""T-periodic linear control systems with piecewise-constant coefficients.

The state equation is ``x'(t) = A(t) x(t) + B(t) u(t)`` with ``A``, ``B``
T-periodic and piecewise constant on an explicit segmentation of ``[0, T)``,
and controls constrained to a bounded convex range ``U``.  Fundamental
matrices are assembled from exact per-segment matrix exponentials, so
propagation accuracy is limited only by the dense ``expm`` kernel; smooth
coefficients must be pre-sampled onto a segmentation by the caller.

Evaluation is right-continuous at segment boundaries.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm
from scipy.optimize import linprog

from .errors import SignalDomainError

_BOUNDARY_TOL = 1e-12
_VALUE_TOL = 1e-9


def _readonly(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=float, copy=True)
    out.setflags(write=False)
    return out


def _require_finite(a: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{what} must have finite entries")


def _matrix_from_record(data, rows: int, cols: int) -> np.ndarray:
    """Accept a nested list or a flat row-major list of length rows*cols."""
    arr = np.asarray(data, dtype=float)
    if arr.ndim == 1:
        if arr.size != rows * cols:
            raise ValueError(f"flat matrix needs {rows * cols} entries, got {arr.size}")
        arr = arr.reshape(rows, cols)
    if arr.shape != (rows, cols):
        raise ValueError(f"matrix shape {arr.shape} does not match ({rows}, {cols})")
    return arr


# ---------------------------------------------------------------------------
# control ranges


class ControlRange:
    """Bounded convex set of admissible control values.

    Concrete variants: :class:`BoxRange`, :class:`BallRange`,
    :class:`PolytopeRange`.  All variants expose the support function
    ``h(q) = max {<q, u> : u in U}`` in vectorized form, membership tests,
    and a maximizing control for certificate construction.
    """

    dim: int

    def support(self, q: np.ndarray) -> np.ndarray:
        """Support values for directions stacked along the last axis."""
        raise NotImplementedError

    def contains(self, u: np.ndarray, tol: float = _VALUE_TOL) -> bool:
        raise NotImplementedError

    def maximizer(self, q: np.ndarray) -> np.ndarray:
        """A control attaining the support value in direction ``q``."""
        raise NotImplementedError

    def is_symmetric(self) -> bool:
        """Whether U = -U."""
        raise NotImplementedError

    def contains_origin_interior(self, margin: float = 0.0) -> bool:
        raise NotImplementedError

    def to_record(self) -> dict:
        raise NotImplementedError

    @staticmethod
    def from_record(record: dict) -> "ControlRange":
        kind = record.get("type")
        if kind == "box":
            return BoxRange(record["lower"], record["upper"])
        if kind == "ball":
            return BallRange(float(record["radius"]), int(record["dim"]))
        if kind == "polytope":
            return PolytopeRange(record["vertices"])
        raise ValueError(f"unknown control range type: {kind!r}")

    @staticmethod
    def box(lower, upper) -> "BoxRange":
        return BoxRange(lower, upper)

    @staticmethod
    def ball(radius: float, dim: int) -> "BallRange":
        return BallRange(radius, dim)

    @staticmethod
    def polytope(vertices) -> "PolytopeRange":
        return PolytopeRange(vertices)

    @staticmethod
    def symmetric_box(radius: float, dim: int) -> "BoxRange":
        r = float(radius)
        return BoxRange([-r] * dim, [r] * dim)


class BoxRange(ControlRange):
    """Per-coordinate interval bounds ``lower_i <= u_i <= upper_i``."""

    def __init__(self, lower, upper):
        self.lower = _readonly(np.atleast_1d(np.asarray(lower, dtype=float)))
        self.upper = _readonly(np.atleast_1d(np.asarray(upper, dtype=float)))
        if self.lower.shape != self.upper.shape or self.lower.ndim != 1:
            raise ValueError("box bounds must be 1-d arrays of equal length")
        _require_finite(self.lower, "box bounds")
        _require_finite(self.upper, "box bounds")
        if np.any(self.lower > self.upper):
            raise ValueError("box lower bounds must not exceed upper bounds")
        self.dim = self.lower.shape[0]

    def support(self, q):
        q = np.asarray(q, dtype=float)
        return np.maximum(q * self.upper, q * self.lower).sum(axis=-1)

    def contains(self, u, tol=_VALUE_TOL):
        u = np.asarray(u, dtype=float)
        return bool(np.all(u >= self.lower - tol) and np.all(u <= self.upper + tol))

    def maximizer(self, q):
        q = np.asarray(q, dtype=float)
        return np.where(q >= 0.0, self.upper, self.lower)

    def is_symmetric(self):
        return bool(np.allclose(self.lower, -self.upper, atol=1e-14))

    def contains_origin_interior(self, margin=0.0):
        return bool(np.all(self.lower < -margin) and np.all(self.upper > margin))

    def to_record(self):
        return {"type": "box", "lower": self.lower.tolist(), "upper": self.upper.tolist()}


class BallRange(ControlRange):
    """Euclidean ball of given radius centered at the origin."""

    def __init__(self, radius: float, dim: int):
        radius = float(radius)
        if not np.isfinite(radius) or radius < 0:
            raise ValueError("ball radius must be finite and nonnegative")
        self.radius = radius
        self.dim = int(dim)
        if self.dim < 1:
            raise ValueError("ball dimension must be >= 1")

    def support(self, q):
        q = np.asarray(q, dtype=float)
        return self.radius * np.linalg.norm(q, axis=-1)

    def contains(self, u, tol=_VALUE_TOL):
        return bool(np.linalg.norm(np.asarray(u, dtype=float)) <= self.radius + tol)

    def maximizer(self, q):
        q = np.asarray(q, dtype=float)
        norm = np.linalg.norm(q)
        if norm < 1e-300:
            return np.zeros(self.dim)
        return (self.radius / norm) * q

    def is_symmetric(self):
        return True

    def contains_origin_interior(self, margin=0.0):
        return self.radius > margin

    def to_record(self):
        return {"type": "ball", "radius": self.radius, "dim": self.dim}


class PolytopeRange(ControlRange):
    """Convex hull of an explicit, nonempty vertex list."""

    def __init__(self, vertices):
        v = np.atleast_2d(np.asarray(vertices, dtype=float))
        if v.size == 0:
            raise ValueError("polytope needs at least one vertex")
        _require_finite(v, "polytope vertices")
        self.vertices = _readonly(v)
        self.dim = v.shape[1]

    def support(self, q):
        q = np.asarray(q, dtype=float)
        return (q @ self.vertices.T).max(axis=-1)

    def contains(self, u, tol=_VALUE_TOL):
        # feasibility LP for hull membership: V^T lam = u, sum lam = 1, lam >= 0
        u = np.asarray(u, dtype=float)
        nv = self.vertices.shape[0]
        a_eq = np.vstack([self.vertices.T, np.ones((1, nv))])
        b_eq = np.concatenate([u, [1.0]])
        res = linprog(np.zeros(nv), A_eq=a_eq, b_eq=b_eq, bounds=(0, None), method="highs")
        if res.success:
            return True
        # retry with slack for boundary points
        res = linprog(
            np.zeros(nv),
            A_eq=np.vstack([self.vertices.T, np.ones((1, nv))]),
            b_eq=np.concatenate([u, [1.0]]),
            bounds=(0, None),
            method="highs",
            options={"primal_feasibility_tolerance": max(tol, 1e-9)},
        )
        return bool(res.success)

    def maximizer(self, q):
        q = np.asarray(q, dtype=float)
        return self.vertices[int(np.argmax(self.vertices @ q))].copy()

    def is_symmetric(self):
        for v in self.vertices:
            if not np.any(np.all(np.abs(self.vertices + v) <= 1e-12, axis=1)):
                return False
        return True

    def contains_origin_interior(self, margin=0.0):
        # 0 interior iff the support is positive in every direction
        probe = np.vstack([np.eye(self.dim), -np.eye(self.dim)])
        return bool(np.all(self.support(probe) > margin))

    def to_record(self):
        return {"type": "polytope", "vertices": self.vertices.tolist()}


# ---------------------------------------------------------------------------
# control signals


@dataclass(frozen=True)
class ControlSignal:
    """Piecewise-constant control over a finite horizon.

    ``breakpoints`` has length n+1 and partitions the horizon; ``values``
    holds one m-vector per sub-interval.  Evaluation is right-continuous;
    the right endpoint takes the final value.
    """

    breakpoints: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        bp = np.asarray(self.breakpoints, dtype=float)
        vals = np.atleast_2d(np.asarray(self.values, dtype=float))
        if bp.ndim != 1 or bp.size < 2:
            raise ValueError("need at least one signal segment")
        if np.any(np.diff(bp) <= 0):
            raise ValueError("signal breakpoints must be strictly increasing")
        if vals.shape[0] != bp.size - 1:
            raise ValueError("one value row per signal segment required")
        _require_finite(bp, "signal breakpoints")
        _require_finite(vals, "signal values")
        object.__setattr__(self, "breakpoints", _readonly(bp))
        object.__setattr__(self, "values", _readonly(vals))

    @staticmethod
    def constant(value, t_start: float, t_end: float) -> "ControlSignal":
        value = np.atleast_1d(np.asarray(value, dtype=float))
        return ControlSignal(np.array([t_start, t_end]), value[None, :])

    @staticmethod
    def zero(dim: int, t_start: float, t_end: float) -> "ControlSignal":
        return ControlSignal.constant(np.zeros(dim), t_start, t_end)

    @staticmethod
    def from_values(t_start: float, t_end: float, values) -> "ControlSignal":
        """Equal-length segments spanning [t_start, t_end] with the given values."""
        vals = np.atleast_2d(np.asarray(values, dtype=float))
        n = vals.shape[0]
        return ControlSignal(np.linspace(t_start, t_end, n + 1), vals)

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @property
    def horizon(self) -> tuple[float, float]:
        return float(self.breakpoints[0]), float(self.breakpoints[-1])

    def covers(self, t0: float, t1: float, tol: float = _BOUNDARY_TOL) -> bool:
        lo, hi = self.horizon
        scale = max(1.0, abs(t0), abs(t1))
        return lo <= t0 + tol * scale and hi >= t1 - tol * scale

    def value(self, t: float) -> np.ndarray:
        lo, hi = self.horizon
        scale = max(1.0, abs(lo), abs(hi))
        if t < lo - _BOUNDARY_TOL * scale or t > hi + _BOUNDARY_TOL * scale:
            raise SignalDomainError(f"time {t} outside signal horizon [{lo}, {hi}]")
        idx = bisect_right(self.breakpoints.tolist(), t) - 1
        idx = min(max(idx, 0), self.values.shape[0] - 1)
        return self.values[idx].copy()

    def shifted(self, dt: float) -> "ControlSignal":
        """Signal w with w(s) = u(s + dt)."""
        return ControlSignal(self.breakpoints - dt, self.values)

    def blend(self, other: "ControlSignal", alpha: float) -> "ControlSignal":
        """Pointwise convex combination alpha*self + (1-alpha)*other."""
        lo, hi = self.horizon
        olo, ohi = other.horizon
        if abs(lo - olo) > 1e-10 or abs(hi - ohi) > 1e-10:
            raise SignalDomainError("blend requires matching horizons")
        bp = np.union1d(self.breakpoints, other.breakpoints)
        mids = 0.5 * (bp[:-1] + bp[1:])
        vals = np.array([alpha * self.value(t) + (1 - alpha) * other.value(t) for t in mids])
        return ControlSignal(bp, vals)


# ---------------------------------------------------------------------------
# the system itself


@dataclass(frozen=True)
class FundamentalMatrix:
    """Principal fundamental solution block X(target, source)."""

    source: float
    target: float
    matrix: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "matrix", _readonly(self.matrix))


class PeriodicSystem:
    """T-periodic linear control system on an explicit segmentation.

    Parameters
    ----------
    segments:
        Iterable of ``(t_start, t_end, A, B)`` with the sub-intervals
        partitioning ``[0, T)`` exactly (contiguous, strictly increasing,
        starting at 0); ``A`` is d x d and ``B`` is d x m.
    control_range:
        The admissible control set U.

    Instances are immutable after construction (internal caches memoize
    derived matrices only); all operations are pure functions of their
    inputs and safe for concurrent use.
    """

    def __init__(self, segments, control_range: ControlRange, label: str | None = None):
        segs = []
        for item in segments:
            t0, t1, a_mat, b_mat = item
            a_mat = np.atleast_2d(np.asarray(a_mat, dtype=float))
            b_mat = np.asarray(b_mat, dtype=float)
            if b_mat.ndim == 1:
                b_mat = b_mat[:, None]
            segs.append((float(t0), float(t1), a_mat, b_mat))
        if not segs:
            raise ValueError("need at least one coefficient segment")
        segs.sort(key=lambda s: s[0])
        d = segs[0][2].shape[0]
        m = segs[0][3].shape[1]
        if abs(segs[0][0]) > _BOUNDARY_TOL:
            raise ValueError("first segment must start at t = 0")
        prev_end = 0.0
        for t0, t1, a_mat, b_mat in segs:
            if a_mat.shape != (d, d) or b_mat.shape != (d, m):
                raise ValueError("inconsistent coefficient shapes across segments")
            _require_finite(a_mat, "A(t)")
            _require_finite(b_mat, "B(t)")
            if t1 <= t0:
                raise ValueError("segment endpoints must be strictly increasing")
            if abs(t0 - prev_end) > _BOUNDARY_TOL * max(1.0, abs(prev_end)):
                raise ValueError("segments must partition the period without gaps or overlaps")
            prev_end = t1
        if control_range.dim != m:
            raise ValueError("control range dimension does not match B(t) columns")

        self._boundaries = np.array([s[0] for s in segs] + [segs[-1][1]])
        self._A = tuple(_readonly(s[2]) for s in segs)
        self._B = tuple(_readonly(s[3]) for s in segs)
        self._dim = d
        self._input_dim = m
        self._period = float(segs[-1][1])
        self._control_range = control_range
        self.label = label

        # exact per-segment propagators and prefix products X(b_i, 0)
        exps = [expm(self._A[i] * (self._boundaries[i + 1] - self._boundaries[i]))
                for i in range(len(segs))]
        prefixes = [np.eye(d)]
        for e in exps:
            prefixes.append(e @ prefixes[-1])
        self._segment_expm = tuple(_readonly(e) for e in exps)
        self._prefix = tuple(_readonly(p) for p in prefixes)
        self._period_matrix = self._prefix[-1]
        self._period_inverse = _readonly(np.linalg.inv(self._period_matrix))
        # memo caches for derived matrices; benign to race, never mutated entries
        self._cache: dict = {}

    @staticmethod
    def from_record(record: dict, control_range: ControlRange | None = None) -> "PeriodicSystem":
        """Build a system from a parsed definition record.

        Expected fields: ``dimension``, ``period``, ``segments`` (each with
        ``t_start``, ``t_end``, ``A``, ``B``; matrices nested or flat
        row-major), and ``control_range`` unless one is passed explicitly.
        """
        d = int(record["dimension"])
        m = int(record.get("input_dim", 0))
        segs = []
        for seg in record["segments"]:
            a_mat = _matrix_from_record(seg["A"], d, d)
            if not m:
                m = np.asarray(seg["B"], dtype=float).size // d
            b_mat = _matrix_from_record(seg["B"], d, m)
            segs.append((float(seg["t_start"]), float(seg["t_end"]), a_mat, b_mat))
        if control_range is None:
            control_range = ControlRange.from_record(record["control_range"])
        system = PeriodicSystem(segs, control_range, label=record.get("label"))
        period = record.get("period")
        if period is not None and abs(system.period - float(period)) > _BOUNDARY_TOL:
            raise ValueError("declared period does not match the segment span")
        return system

    def to_record(self) -> dict:
        return {
            "dimension": self.dim,
            "input_dim": self.input_dim,
            "period": self.period,
            "segments": [
                {"t_start": t0, "t_end": t1, "A": a.tolist(), "B": b.tolist()}
                for t0, t1, a, b in self.segments()
            ],
            "control_range": self.control_range.to_record(),
        }

    # -- basic properties ---------------------------------------------------

    @property
    def dim(self) -> int:
        return self._dim

    @property
    def input_dim(self) -> int:
        return self._input_dim

    @property
    def period(self) -> float:
        return self._period

    @property
    def control_range(self) -> ControlRange:
        return self._control_range

    @property
    def n_segments(self) -> int:
        return len(self._A)

    @property
    def boundaries(self) -> np.ndarray:
        return self._boundaries.copy()

    @property
    def period_matrix(self) -> np.ndarray:
        """X(T, 0)."""
        return self._period_matrix

    def segment_matrices(self, index: int) -> tuple[np.ndarray, np.ndarray]:
        return self._A[index], self._B[index]

    def segments(self):
        for i in range(self.n_segments):
            yield (float(self._boundaries[i]), float(self._boundaries[i + 1]),
                   self._A[i], self._B[i])

    # -- evaluation ----------------------------------------------------------

    def _segment_index(self, t_local: float) -> int:
        idx = bisect_right(self._boundaries.tolist(), t_local) - 1
        return min(max(idx, 0), self.n_segments - 1)

    def eval_coeffs(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        """(A(t mod T), B(t mod T)), right-continuous at boundaries."""
        if not np.isfinite(t):
            raise ValueError("evaluation time must be finite")
        r = float(t) % self._period
        i = self._segment_index(r)
        return self._A[i], self._B[i]

    def pieces(self, t0: float, t1: float):
        """Yield maximal sub-intervals of [t0, t1] with constant coefficients.

        Produces ``(a, b, segment_index)`` ascending; degenerate slivers
        below the boundary tolerance are merged away.
        """
        if t1 <= t0:
            return
        scale = max(1.0, abs(t0), abs(t1))
        tol = _BOUNDARY_TOL * scale
        t = float(t0)
        while t < t1 - tol:
            r = t % self._period
            i = self._segment_index(r)
            seg_end = self._boundaries[i + 1]
            remaining = seg_end - r
            if remaining <= tol:
                # landed (numerically) on a boundary: move into the next segment
                i = (i + 1) % self.n_segments
                remaining = self._boundaries[i + 1] - self._boundaries[i]
            b = min(t + remaining, t1)
            if b - t > tol:
                yield (t, b, i)
            t = b

    # -- propagators ----------------------------------------------------------

    def _partial_expm(self, seg_index: int, h: float) -> np.ndarray:
        key = ("pexp", seg_index, h)
        hit = self._cache.get(key)
        if hit is None:
            hit = expm(self._A[seg_index] * h)
            self._cache[key] = hit
        return hit

    def propagator_from_zero(self, t: float) -> np.ndarray:
        """X(t, 0) for any real t."""
        k = int(np.floor(t / self._period))
        r = t - k * self._period
        if r >= self._period:  # guard the floating edge r == T
            r -= self._period
            k += 1
        i = self._segment_index(r)
        part = self._partial_expm(i, r - self._boundaries[i]) @ self._prefix[i]
        if k == 0:
            return part
        if k > 0:
            return part @ np.linalg.matrix_power(self._period_matrix, k)
        return part @ np.linalg.matrix_power(self._period_inverse, -k)

    def fundamental(self, t: float, s: float) -> np.ndarray:
        """X(t, s) with the cocycle property X(t, r) X(r, s) = X(t, s)."""
        if not (np.isfinite(t) and np.isfinite(s)):
            raise ValueError("fundamental matrix times must be finite")
        if t == s:
            return np.eye(self._dim)
        xt = self.propagator_from_zero(t)
        xs = self.propagator_from_zero(s)
        # X(t, s) = X(t, 0) X(s, 0)^{-1}, via a solve on the transposed system
        return np.linalg.solve(xs.T, xt.T).T


# ---------------------------------------------------------------------------
# module-level operations


def eval_coeffs(sys: PeriodicSystem, t: float) -> tuple[np.ndarray, np.ndarray]:
    """Coefficients (A(t mod T), B(t mod T)); right-continuous at boundaries."""
    return sys.eval_coeffs(t)


def fundamental_matrix(sys: PeriodicSystem, t: float, s: float) -> FundamentalMatrix:
    """Principal fundamental solution X(t, s) with X(s, s) = I."""
    return FundamentalMatrix(source=float(s), target=float(t), matrix=sys.fundamental(t, s))


def _expm_with_integral(a_mat: np.ndarray, h: float) -> tuple[np.ndarray, np.ndarray]:
    """(e^{Ah}, int_0^h e^{A sigma} dsigma) via one block exponential."""
    d = a_mat.shape[0]
    block = np.zeros((2 * d, 2 * d))
    block[:d, :d] = a_mat * h
    block[:d, d:] = np.eye(d) * h
    big = expm(block)
    return big[:d, :d], big[:d, d:]


def _check_signal(sys: PeriodicSystem, u: ControlSignal, lo: float, hi: float) -> None:
    if u.dim != sys.input_dim:
        raise SignalDomainError(
            f"signal dimension {u.dim} does not match control dimension {sys.input_dim}")
    if not u.covers(lo, hi):
        raise SignalDomainError(
            f"signal horizon {u.horizon} does not cover [{lo}, {hi}]")
    for v in u.values:
        if not sys.control_range.contains(v):
            raise ValueError(f"control value {v} outside the control range")


def _merge_breaks(pieces, breaks, lo, hi):
    """Split coefficient pieces at additional breakpoints inside (lo, hi)."""
    inner = sorted({float(b) for b in breaks if lo < b < hi})
    out = []
    for a, b, idx in pieces:
        cuts = [a] + [c for c in inner if a < c < b] + [b]
        for j in range(len(cuts) - 1):
            if cuts[j + 1] - cuts[j] > _BOUNDARY_TOL * max(1.0, abs(hi), abs(lo)):
                out.append((cuts[j], cuts[j + 1], idx))
    return out


def solve(sys: PeriodicSystem, t: float, t0: float, x0, u: ControlSignal) -> np.ndarray:
    """Trajectory value phi(t; t0, x0, u) of the controlled system.

    Evaluates the variation-of-parameters form exactly per piece on which
    coefficients and control are simultaneously constant; both time
    directions are supported.
    """
    x = np.atleast_1d(np.asarray(x0, dtype=float)).copy()
    if x.shape != (sys.dim,):
        raise ValueError(f"state must have dimension {sys.dim}")
    if t == t0:
        return x
    lo, hi = (t0, t) if t > t0 else (t, t0)
    _check_signal(sys, u, lo, hi)
    pieces = _merge_breaks(sys.pieces(lo, hi), u.breakpoints.tolist(), lo, hi)
    if t > t0:
        for a, b, idx in pieces:
            a_mat, b_mat = sys.segment_matrices(idx)
            e_mat, p_mat = _expm_with_integral(a_mat, b - a)
            x = e_mat @ x + p_mat @ (b_mat @ u.value(a))
    else:
        for a, b, idx in reversed(pieces):
            a_mat, b_mat = sys.segment_matrices(idx)
            e_mat, p_mat = _expm_with_integral(-a_mat, b - a)
            x = e_mat @ x - p_mat @ (b_mat @ u.value(a))
    return x


def solve_trajectory(sys: PeriodicSystem, times, t0: float, x0,
                     u: ControlSignal) -> np.ndarray:
    """States phi(times[i]; t0, x0, u) for ascending times with times[0] >= t0."""
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0:
        raise ValueError("need a nonempty 1-d array of output times")
    if np.any(np.diff(times) < 0) or times[0] < t0 - _BOUNDARY_TOL:
        raise ValueError("output times must ascend and start at or after t0")
    x = np.atleast_1d(np.asarray(x0, dtype=float)).copy()
    hi = float(times[-1])
    if hi > t0:
        _check_signal(sys, u, t0, hi)
    out = np.empty((times.size, sys.dim))
    cursor = t0
    k = 0
    while k < times.size and times[k] <= cursor + _BOUNDARY_TOL:
        out[k] = x
        k += 1
    if k >= times.size:
        return out
    pieces = _merge_breaks(sys.pieces(t0, hi),
                           list(u.breakpoints) + list(times), t0, hi)
    for a, b, idx in pieces:
        a_mat, b_mat = sys.segment_matrices(idx)
        e_mat, p_mat = _expm_with_integral(a_mat, b - a)
        x = e_mat @ x + p_mat @ (b_mat @ u.value(a))
        cursor = b
        while k < times.size and times[k] <= cursor + _BOUNDARY_TOL:
            out[k] = x
            k += 1
    while k < times.size:  # trailing repeats of the final time
        out[k] = x
        k += 1
    return out


def time_reverse(sys: PeriodicSystem, mu: float = 0.0) -> PeriodicSystem:
    """The reversed system with coefficients (-A(mu - t), -B(mu - t)).

    Trajectories of the result traverse the original trajectories backward,
    so its reachable sets realize the controllable sets of the original.
    The segmentation of one period is rebuilt from the reflected boundaries;
    only ``mu mod T`` matters.
    """
    T = sys.period
    bounds = sys.boundaries
    mapped = sorted({(mu - b) % T for b in bounds})
    cuts = [0.0]
    for c in mapped:
        if c - cuts[-1] > _BOUNDARY_TOL:
            cuts.append(float(c))
    if T - cuts[-1] > _BOUNDARY_TOL:
        cuts.append(T)
    else:
        cuts[-1] = T
    segs = []
    for j in range(len(cuts) - 1):
        mid = 0.5 * (cuts[j] + cuts[j + 1])
        a_mat, b_mat = sys.eval_coeffs((mu - mid) % T)
        segs.append((cuts[j], cuts[j + 1], -a_mat, -b_mat))
    # merge adjacent pieces with identical coefficients
    merged = [segs[0]]
    for seg in segs[1:]:
        t0p, t1p, ap, bp = merged[-1]
        if np.array_equal(ap, seg[2]) and np.array_equal(bp, seg[3]):
            merged[-1] = (t0p, seg[1], ap, bp)
        else:
            merged.append(seg)
    return PeriodicSystem(merged, sys.control_range)
