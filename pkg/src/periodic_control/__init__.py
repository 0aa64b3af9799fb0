"""Controllability analysis for periodic linear control systems.

Floquet spectral decompositions, support-function approximation of
reachable and controllable sets, inner/outer estimation of the unique
control set of the phase-extended system, projection to the Poincare
sphere, and frozen-parameter analysis of quasi-affine systems.
"""

__version__ = "0.1.0"

from .errors import (ConfigError, HypothesisViolatedError,
                     MissingCertificateError, NumericalConditioningError,
                     PeriodicControlError, SignalDomainError,
                     ToleranceConflictError)
from .periodic_system import (BallRange, BoxRange, ControlRange, ControlSignal,
                              FundamentalMatrix, PeriodicSystem, PolytopeRange,
                              eval_coeffs, fundamental_matrix, solve,
                              solve_trajectory, time_reverse)
from .floquet import (FloquetDecomposition, FloquetGroup, floquet_spaces,
                      floquet_spectrum, monodromy, principal_angles,
                      transport_subspace)
from .reachable import (AutonomizedPoint, ConvexSetApprox, GramianResult,
                        ReachCertificate, controllability_gramian,
                        reach_endpoint, reachable_fiber, semigroup_check,
                        support_controllable, support_profile,
                        support_reachable)
from .control_set import (ControlSetSandwich, PhaseFiber,
                          bounded_component_minus, bounded_component_plus,
                          control_set_sandwich, scalar_classification)
from .poincare import (ProjectedControlSet, SpherePoint, SphereTrajectory,
                       embed, equator_equilibria, equator_vector_field,
                       integrate_sphere, project_control_set,
                       sphere_vector_field, unembed)
from .quasi_affine import (AffineInputMap, ConstantInputMap,
                           FrozenAnalysis, InputMap, PeriodicParameterSignal,
                           QuasiAffineSystem, TableInputMap, UnionControlSet,
                           freeze_periodic, generate_family,
                           periodic_fixed_point, union_control_set)
from .directions import sample_directions

__all__ = [name for name in dir() if not name.startswith("_")]
