"""Floquet analysis of the homogeneous part x' = A(t) x.

Monodromy matrices, multiplier/exponent spectra, and the real invariant
subspaces per exponent group.  Subspace bases come from sorted real Schur
forms (orthogonal similarity with diagonal blocks selected by multiplier
modulus), so defective monodromy matrices are handled without forming
generalized eigenvectors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import NumericalConditioningError, ToleranceConflictError
from .periodic_system import PeriodicSystem, _readonly

DEFAULT_TOL_GROUP = 1e-9
DEFAULT_TOL_CENTER = 1e-8

_STABLE, _CENTER, _UNSTABLE = "stable", "center", "unstable"


@dataclass(frozen=True)
class FloquetGroup:
    """One exponent group: eigenvalues of the monodromy sharing |mu|."""

    exponent: float
    multiplicity: int
    multipliers: np.ndarray
    classification: str
    basis: np.ndarray | None = None

    def __post_init__(self):
        mults = np.asarray(self.multipliers, dtype=complex)
        mults.setflags(write=False)
        object.__setattr__(self, "multipliers", mults)
        if self.basis is not None:
            object.__setattr__(self, "basis", _readonly(self.basis))


@dataclass(frozen=True)
class FloquetDecomposition:
    """Spectral data of the homogeneous part at one phase.

    Bases are orthonormal column blocks; ``stable``/``center``/``unstable``
    span E^-, E^0, E^+ and ``center_stable``/``center_unstable`` span the
    direct sums E^{-,0} and E^{+,0}.
    """

    tau: float
    period: float
    monodromy: np.ndarray
    groups: tuple[FloquetGroup, ...]
    stable: np.ndarray
    center: np.ndarray
    unstable: np.ndarray
    center_stable: np.ndarray
    center_unstable: np.ndarray
    tol_group: float
    tol_center: float

    def __post_init__(self):
        for name in ("monodromy", "stable", "center", "unstable",
                     "center_stable", "center_unstable"):
            object.__setattr__(self, name, _readonly(getattr(self, name)))

    @property
    def dim(self) -> int:
        return self.monodromy.shape[0]

    @property
    def stable_dim(self) -> int:
        return self.stable.shape[1]

    @property
    def center_dim(self) -> int:
        return self.center.shape[1]

    @property
    def unstable_dim(self) -> int:
        return self.unstable.shape[1]


def monodromy(sys: PeriodicSystem, tau: float = 0.0) -> np.ndarray:
    """Period map X(T + tau, tau); its eigenvalues do not depend on tau."""
    tau = float(tau) % sys.period
    return sys.fundamental(sys.period + tau, tau)


def _group_indices(moduli: np.ndarray, tol_group: float) -> list[np.ndarray]:
    order = np.argsort(moduli)
    groups: list[list[int]] = [[int(order[0])]]
    for idx in order[1:]:
        prev = groups[-1][-1]
        gap = moduli[idx] - moduli[prev]
        if gap <= tol_group * max(moduli[idx], moduli[prev], 1e-300):
            groups[-1].append(int(idx))
        else:
            groups.append([int(idx)])
    return [np.array(g) for g in groups]


def _classify_modulus(m: float, tol_center: float) -> str:
    if m < 1.0 - tol_center:
        return _STABLE
    if m > 1.0 + tol_center:
        return _UNSTABLE
    return _CENTER


def floquet_spectrum(monodromy_matrix: np.ndarray, period: float,
                     tol_group: float = DEFAULT_TOL_GROUP,
                     tol_center: float = DEFAULT_TOL_CENTER) -> tuple[FloquetGroup, ...]:
    """Exponent groups (lambda_j, d_j) of a monodromy matrix.

    Eigenvalues mu are grouped when their moduli agree within the relative
    tolerance ``tol_group``; exponents are log|mu| / period and groups are
    returned sorted ascending by exponent.  Raises for singular input
    (violates monodromy invertibility) and raises
    :class:`ToleranceConflictError` when a modulus group straddles the unit
    circle under ``tol_center``.
    """
    m = np.atleast_2d(np.asarray(monodromy_matrix, dtype=float))
    if period <= 0:
        raise ValueError("period must be positive")
    if tol_group <= 0:
        raise ValueError("tol_group must be positive")
    eigs = np.linalg.eigvals(m)
    moduli = np.abs(eigs)
    if np.min(moduli) < 1e-300:
        raise ValueError("singular monodromy matrix has no Floquet exponents")
    groups = []
    for idx in _group_indices(moduli, tol_group):
        mults = eigs[idx]
        classes = {_classify_modulus(float(x), tol_center) for x in np.abs(mults)}
        if len(classes) > 1:
            raise ToleranceConflictError(
                "multiplier group with moduli "
                f"{sorted(float(x) for x in np.abs(mults))} straddles the unit "
                f"circle: grouping tolerance {tol_group} and center tolerance "
                f"{tol_center} are inconsistent")
        modulus = float(np.mean(np.abs(mults)))
        groups.append(FloquetGroup(
            exponent=float(np.log(modulus) / period),
            multiplicity=int(idx.size),
            multipliers=mults,
            classification=classes.pop(),
        ))
    return tuple(groups)


def _invariant_basis(m: np.ndarray, lo: float, hi: float, expect: int) -> np.ndarray:
    """Orthonormal basis of the sum of generalized eigenspaces with |mu| in (lo, hi]."""
    d = m.shape[0]
    if expect == 0:
        return np.zeros((d, 0))
    if expect == d:
        return np.eye(d)

    def select(re, im):
        mod = np.hypot(re, im)
        return bool(lo < mod <= hi)

    try:
        _, z, sdim = sla.schur(m, output="real", sort=select)
    except sla.LinAlgError as exc:  # pragma: no cover - LAPACK reorder failure
        raise NumericalConditioningError(f"Schur reordering failed: {exc}") from exc
    if sdim != expect:
        raise NumericalConditioningError(
            f"Schur reordering selected {sdim} eigenvalues, expected {expect}; "
            "the modulus groups are too close to separate")
    return z[:, :expect]


def floquet_spaces(sys: PeriodicSystem, tau: float = 0.0,
                   tol_group: float = DEFAULT_TOL_GROUP,
                   tol_center: float = DEFAULT_TOL_CENTER) -> FloquetDecomposition:
    """Full spectral decomposition at phase tau.

    Returns the exponent groups with orthonormal bases of the real
    invariant subspaces, together with the stable/center/unstable splits
    and their pairwise direct sums.
    """
    tau = float(tau) % sys.period
    m = monodromy(sys, tau)
    groups = floquet_spectrum(m, sys.period, tol_group, tol_center)

    # modulus cuts between consecutive groups (geometric midpoints)
    reps = [float(np.mean(np.abs(g.multipliers))) for g in groups]
    cuts = [0.0]
    for j in range(len(reps) - 1):
        cuts.append(float(np.sqrt(reps[j] * reps[j + 1])))
    cuts.append(np.inf)

    with_bases = []
    for j, g in enumerate(groups):
        basis = _invariant_basis(m, cuts[j], cuts[j + 1], g.multiplicity)
        with_bases.append(FloquetGroup(g.exponent, g.multiplicity, g.multipliers,
                                       g.classification, basis))

    def union_basis(wanted: set[str]) -> np.ndarray:
        idx = [j for j, g in enumerate(groups) if g.classification in wanted]
        count = sum(groups[j].multiplicity for j in idx)
        if not idx:
            return np.zeros((sys.dim, 0))
        # classifications are contiguous in the modulus ordering
        return _invariant_basis(m, cuts[idx[0]], cuts[idx[-1] + 1], count)

    stable = union_basis({_STABLE})
    center = union_basis({_CENTER})
    unstable = union_basis({_UNSTABLE})
    center_stable = union_basis({_STABLE, _CENTER})
    center_unstable = union_basis({_CENTER, _UNSTABLE})
    if stable.shape[1] + center.shape[1] + unstable.shape[1] != sys.dim:
        raise NumericalConditioningError("spectral split dimensions do not sum to d")

    return FloquetDecomposition(
        tau=tau, period=sys.period, monodromy=m, groups=tuple(with_bases),
        stable=stable, center=center, unstable=unstable,
        center_stable=center_stable, center_unstable=center_unstable,
        tol_group=tol_group, tol_center=tol_center)


def transport_subspace(sys: PeriodicSystem, basis_at_0: np.ndarray,
                       tau: float) -> np.ndarray:
    """Orthonormal basis of X(tau, 0) * span(basis_at_0).

    Builds the subbundle fibers at phase tau from their representation at
    phase 0; rank loss (impossible for an invertible propagator, checked
    defensively) raises :class:`NumericalConditioningError`.
    """
    basis = np.atleast_2d(np.asarray(basis_at_0, dtype=float))
    if basis.shape[0] != sys.dim:
        raise ValueError("basis rows must match the system dimension")
    if basis.shape[1] == 0:
        return np.zeros((sys.dim, 0))
    moved = sys.fundamental(float(tau), 0.0) @ basis
    q, r = np.linalg.qr(moved)
    diag = np.abs(np.diag(r))
    if np.any(diag < 1e-12 * max(1.0, diag.max())):
        raise NumericalConditioningError("rank loss while transporting subspace")
    return q


def principal_angles(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Principal angles between the column spans of u and v (radians)."""
    if u.shape[1] == 0 or v.shape[1] == 0:
        if u.shape[1] == v.shape[1]:
            return np.zeros(0)
        raise ValueError("cannot compare a trivial and a nontrivial subspace")
    return sla.subspace_angles(u, v)
