"""Guaranteed maximum-norm a posteriori error bounds for 1D linear
parabolic problems, P1 finite elements in space and six time-stepping
schemes."""

from .elliptic import EllipticEstimate, MeshTooCoarseError, estimate_elliptic, solve_elliptic
from .estimator import EstimatorReport, EstimatorWeights, estimate, weights
from .fem1d import SpatialMesh, TriDiagMatrix, assemble_mass, assemble_stiffness, load_vector
from .integrators import Discretisation, SchemeId, Trajectory, integrate
from .metrics import (
    ConvergenceRow,
    ReferenceSolution,
    convergence_study,
    measure_error,
    reference_solution,
    run_scheme,
)
from .problem import (
    GreenBounds,
    Problem,
    ProblemError,
    TimeMesh,
    builtin_test_problem,
    get_problem,
    manufactured_problem,
)
from .reconstruction import ReconstructionData, reconstruct

__version__ = "0.1.0"

__all__ = [
    "ConvergenceRow",
    "Discretisation",
    "EllipticEstimate",
    "EstimatorReport",
    "EstimatorWeights",
    "GreenBounds",
    "MeshTooCoarseError",
    "Problem",
    "ProblemError",
    "ReconstructionData",
    "ReferenceSolution",
    "SchemeId",
    "SpatialMesh",
    "TimeMesh",
    "Trajectory",
    "TriDiagMatrix",
    "assemble_mass",
    "assemble_stiffness",
    "builtin_test_problem",
    "convergence_study",
    "estimate",
    "estimate_elliptic",
    "get_problem",
    "integrate",
    "load_vector",
    "manufactured_problem",
    "measure_error",
    "reconstruct",
    "reference_solution",
    "run_scheme",
    "solve_elliptic",
    "weights",
]
