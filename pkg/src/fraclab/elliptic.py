"""Dirichlet solver for the directional-infimum operator.

Solves  -Lambda(u) = f in the domain, u = g outside, where Lambda is the
infimum over directions of the ray integral.  The operator is of Bellman
type, so the primary method is Howard policy iteration: freeze the
minimizing direction per node, solve the resulting linear monotone system
exactly, re-minimize, and repeat until the policy is stable.  Explicit
pseudo-time marching serves as a fallback when policies cycle without
reaching the tolerance.
"""

import time
import warnings
from dataclasses import dataclass, field as dfield

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .errors import InvalidTolerance
from .operator import Field, OperatorEngine
from .quadrature import FracOrder, _eval_closure

__all__ = ["EllipticProblem", "SolveReport", "solve_elliptic", "s_convex_envelope", "is_s_convex"]


@dataclass
class EllipticProblem:
    """Problem data for  -Lambda(u) = f in the domain, u = g outside."""

    domain: object
    grid: object
    order: FracOrder
    f: object
    g: object
    dirs: object

    def __post_init__(self):
        if not isinstance(self.order, FracOrder):
            self.order = FracOrder(self.order)

    def f_interior(self):
        if callable(self.f):
            vals = np.asarray(self.f(self.grid.interior_points), dtype=float)
        else:
            vals = np.asarray(self.f, dtype=float)
            if vals.ndim == 0:
                vals = np.full(self.grid.num_interior, float(vals))
        if vals.shape != (self.grid.num_interior,):
            raise ValueError("f must provide one value per interior node")
        return vals


@dataclass
class SolveReport:
    iterations: int
    residual: float
    method: str
    wall_time: float
    converged: bool
    residual_history: list = dfield(default_factory=list)
    notes: str = ""


def _frozen_solve(engine, field, policy, f, cache):
    """Solve the frozen-direction linear system with an LU cache.

    The matrix and the known (exterior) vector depend only on the policy
    and on g, so repeated solves with a stable policy reuse the factors.
    """
    key = (policy.tobytes(), id(field.g))
    hit = cache.get(key) if cache is not None else None
    if hit is None:
        A, known = engine.policy_system(field, policy)
        lu = lu_factor(A, overwrite_a=True, check_finite=False)
        hit = (lu, known)
        if cache is not None:
            cache[key] = hit
    lu, known = hit
    return lu_solve(lu, -f - known, check_finite=False)


def solve_elliptic(problem, tol=None, max_outer=30, inner="lu", u0=None,
                   engine=None, cache=None, pseudo_time_cap=40000):
    """Policy iteration with pseudo-time fallback.

    Returns (field, report); on failure the best iterate is returned with
    report.converged = False rather than raising.
    """
    t_start = time.perf_counter()
    grid = problem.grid
    if tol is not None and tol <= 0.0:
        raise InvalidTolerance(f"tol must be positive, got {tol}")
    if grid.num_interior == 0:
        warnings.warn("grid has no interior nodes; returning exterior data")
        vals = _eval_closure(problem.g, grid.node_points()).reshape(grid.shape)
        rep = SolveReport(0, 0.0, "degenerate", time.perf_counter() - t_start, True)
        return Field(grid, vals, problem.g, impose_exterior=False), rep

    f = problem.f_interior()
    if tol is None:
        tol = 1e-6 * (1.0 + float(np.max(np.abs(f))))
    if engine is None:
        engine = OperatorEngine(grid, problem.dirs, problem.order)
    if cache is None:
        cache = {}

    if u0 is None:
        init = _eval_closure(problem.g, grid.node_points()).reshape(grid.shape)
        u = Field(grid, init, problem.g, impose_exterior=False)
    else:
        u = Field(grid, u0.values, problem.g)

    history = []
    recent_policies = []
    best = None
    method = "policy"
    notes = ""
    for outer in range(max_outer):
        ev = engine.lambda1(u)
        resid = float(np.max(np.abs(ev.values + f)))
        history.append(resid)
        if best is None or resid < best[0]:
            best = (resid, u)
        policy = ev.argmin.astype(np.int64)
        pol_bytes = policy.tobytes()
        if resid <= tol:
            # the residual is computed with the fully re-minimized operator,
            # so it certifies the nonlinear equation directly
            rep = SolveReport(outer, resid, method, time.perf_counter() - t_start,
                              True, history, notes)
            return u, rep
        if pol_bytes in recent_policies[:-1]:
            if resid <= 10.0 * tol:
                notes = "policy tie cycle accepted near tolerance"
                rep = SolveReport(outer, resid, method, time.perf_counter() - t_start,
                                  True, history, notes)
                return u, rep
            notes = "policy cycling; fell back to pseudo-time"
            break
        recent_policies.append(pol_bytes)
        recent_policies = recent_policies[-3:]
        if inner == "lu":
            u_int = _frozen_solve(engine, u, policy, f, cache)
        elif inner == "jacobi":
            u_int = _jacobi_solve(engine, u, policy, f)
        else:
            raise ValueError(f"unknown inner solver {inner!r}")
        u = u.with_interior(u_int)
    else:
        notes = notes or "outer iteration budget exhausted; pseudo-time fallback"

    # pseudo-time fallback: explicit monotone marching on u_t = Lambda(u) + f
    method = "pseudo-time"
    dt = engine.cfl_dt
    resid = np.inf
    for _ in range(pseudo_time_cap):
        ev = engine.lambda1(u)
        resid = float(np.max(np.abs(ev.values + f)))
        if resid <= tol:
            break
        u = u.with_interior(u.interior_values() + dt * (ev.values + f))
    history.append(resid)
    if best is None or resid < best[0]:
        best = (resid, u)
    converged = resid <= tol
    resid_best, u_best = best
    rep = SolveReport(len(history), resid_best, method,
                      time.perf_counter() - t_start, converged, history, notes)
    return u_best, rep


def _jacobi_solve(engine, field, policy, f, damping=0.9, rtol=1e-8, max_sweeps=200000):
    """Damped Jacobi sweeps on the frozen-direction system (matrix form).

    Kept as a reference inner solver; the dense factorization is the default
    because the Jacobi contraction rate degrades like the far-field mass over
    the center mass at desk scales.
    """
    A, known = engine.policy_system(field, policy)
    rhs = -f - known
    d = np.diag(A).copy()
    u = field.interior_values().copy()
    scale = float(np.max(np.abs(rhs))) + 1e-30
    for _ in range(max_sweeps):
        r = rhs - A @ u
        u += damping * r / d
        if float(np.max(np.abs(r))) <= rtol * scale:
            break
    return u


def s_convex_envelope(domain, g, order, dirs, grid=None, h=0.05, tol=None,
                      engine=None, return_report=False):
    """Largest function below the data whose every ray integral is nonnegative.

    Solves the homogeneous Dirichlet problem (f = 0) and checks the convexity
    postcondition Lambda(z) >= -10 tol on interior nodes.
    """
    from .geometry import build_grid

    if grid is None:
        grid = build_grid(domain, h)
    problem = EllipticProblem(domain, grid, order, 0.0, g, dirs)
    z, rep = solve_elliptic(problem, tol=tol, engine=engine)
    check_tol = 10.0 * (tol if tol is not None else 1e-6)
    ok, viols = is_s_convex(z, problem.order, dirs, tol=check_tol, engine=engine)
    if not ok:
        warnings.warn(f"envelope postcondition violated at {len(viols)} nodes "
                      f"(worst {min(v[2] for v in viols):.3e})")
    if return_report:
        return z, rep
    return z


def is_s_convex(u, order, dirs, tol=1e-8, engine=None):
    """True iff every interior ray-infimum value is >= -tol.

    Returns (flag, violations); each violation is ((ix, iy), (x, y), value).
    """
    if engine is None:
        engine = OperatorEngine(u.grid, dirs, order)
    ev = engine.lambda1(u)
    bad = np.nonzero(ev.values < -tol)[0]
    violations = [
        (tuple(u.grid.interior_ij[i]), tuple(u.grid.interior_points[i]), float(ev.values[i]))
        for i in bad
    ]
    return len(bad) == 0, violations
