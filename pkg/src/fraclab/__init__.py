"""Numerical laboratory for the directional-infimum fractional operator.

Discretizes the infimum (over ray directions) of one-dimensional fractional
Laplacians with a monotone positive-weight scheme, and solves the associated
elliptic, parabolic and principal-eigenvalue Dirichlet problems on strictly
convex planar domains.
"""

from .errors import (
    CflViolation,
    ConfigError,
    DegenerateStart,
    FracLabError,
    InsufficientData,
    InvalidGamma,
    InvalidOrder,
    InvalidTolerance,
    LengthMismatch,
    NoInteriorNodes,
    NonpositiveNorms,
    NonpositiveTruncation,
    NotConverged,
    OutsideUnitBall,
    SandwichViolated,
)
from .geometry import BarrierGeom, ConvexDomain, Grid2, barrier_geom, build_grid, inner_ball_radius
from .quadrature import FracOrder, RayQuadrature, apply_ray, make_weights, tail_integral
from .operator import (
    DirectionSet,
    Field,
    OperatorEngine,
    OperatorEval,
    affine_exterior,
    apply_lambda1,
    apply_lambdaN,
    constant_exterior,
    eval_ray_value,
    function_exterior,
    zero_exterior,
)
from .elliptic import EllipticProblem, SolveReport, is_s_convex, s_convex_envelope, solve_elliptic
from .parabolic import ParabolicProblem, ParabolicTrace, cfl_step, evolve, step
from .spectral import (
    EigenPair,
    SegmentEigenPair,
    maximal_eigenpair_from_duality,
    principal_eigenpair,
    segment_eigenpair_1d,
)
from .analysis import (
    BarrierReport,
    DecayFit,
    HolderSpec,
    SandwichReport,
    asymp_sandwich_check,
    check_barrier_v,
    check_barrier_w,
    fit_decay,
    holder_seminorm,
)

__version__ = "0.1.0"
