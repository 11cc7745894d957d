"""Principal eigenpair of the directional-infimum operator.

The pair (mu, phi) with -Lambda(phi) = mu phi, phi = 0 outside, phi <= 0, is
computed by inverse power iteration on the nonpositive cone: each step
applies the solution operator of the homogeneous Dirichlet problem and
renormalizes in the sup norm.  Convergence is certified a posteriori by the
eigen-residual, never by iteration count.
"""

from dataclasses import dataclass, field as dfield

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .errors import DegenerateStart, NotConverged
from .elliptic import EllipticProblem, solve_elliptic
from .operator import Field, OperatorEngine, zero_exterior
from .quadrature import FracOrder, make_weights

__all__ = [
    "EigenPair",
    "SegmentEigenPair",
    "principal_eigenpair",
    "maximal_eigenpair_from_duality",
    "segment_eigenpair_1d",
]


@dataclass
class EigenPair:
    """Eigenvalue estimate with sup-normalized eigenfunction and certificate."""

    mu: float
    phi: Field
    residual: float
    mu_trace: np.ndarray
    iterations: int
    converged: bool
    order: FracOrder
    dirs: object
    kind: str = "inf"


def _default_start(grid):
    """Nonpositive bump centered at the deepest interior node."""
    pts = grid.interior_points
    _, dist = grid.domain.nearest_boundary(pts)
    i0 = int(np.argmax(dist))
    c = pts[i0]
    rho = float(dist[i0])
    r2 = ((pts[:, 0] - c[0]) ** 2 + (pts[:, 1] - c[1]) ** 2) / rho ** 2
    return -np.maximum(1.0 - r2, 0.0) ** 2


def principal_eigenpair(domain, grid, order, dirs, tol=1e-4, max_iter=150,
                        start=None, engine=None, elliptic_tol=None):
    """Inverse power iteration v -> T(v) / ||T(v)||, T the solution map.

    Stops when successive eigenvalue estimates agree to tol relatively and
    the residual ||Lambda(phi) + mu phi||_inf is below 10 tol.  Raises
    NotConverged (with the best pair attached) otherwise.
    """
    if not isinstance(order, FracOrder):
        order = FracOrder(order)
    if engine is None:
        engine = OperatorEngine(grid, dirs, order)
    g0 = zero_exterior()
    v = np.asarray(start, dtype=float) if start is not None else _default_start(grid)
    nv = float(np.max(np.abs(v))) if v.size else 0.0
    if nv == 0.0:
        raise DegenerateStart("start vector is identically zero")
    v = v / nv
    if elliptic_tol is None:
        elliptic_tol = min(1e-9, tol * 1e-3)

    cache = {}
    warm = None
    mu = np.inf
    mu_trace = []
    best = None
    for it in range(1, max_iter + 1):
        problem = EllipticProblem(domain, grid, order, v, g0, dirs)
        w_field, rep = solve_elliptic(problem, tol=elliptic_tol, u0=warm,
                                      engine=engine, cache=cache)
        w = w_field.interior_values()
        nw = float(np.max(np.abs(w)))
        if nw == 0.0:
            raise DegenerateStart("solution map returned the zero field")
        mu_new = 1.0 / nw
        v = w / nw
        mu_trace.append(mu_new)
        # warm start for the next solve: w scales by ~1/(mu*nw)
        warm = Field(grid, w_field.values / (nw * mu_new), g0, impose_exterior=False)
        if np.isfinite(mu) and abs(mu_new - mu) <= tol * abs(mu_new):
            phi = Field.from_interior(grid, v, g0)
            resid = float(np.max(np.abs(engine.lambda1(phi).values + mu_new * v)))
            pair = EigenPair(mu_new, phi, resid, np.asarray(mu_trace), it, True,
                             order, dirs)
            if best is None or resid < best.residual:
                best = pair
            if resid <= 10.0 * tol:
                return pair
        mu = mu_new
    phi = Field.from_interior(grid, v, g0)
    resid = float(np.max(np.abs(engine.lambda1(phi).values + mu * v)))
    pair = EigenPair(mu, phi, resid, np.asarray(mu_trace), max_iter, False, order, dirs)
    if best is not None and best.residual < resid:
        pair = best
        pair.converged = False
    raise NotConverged(
        f"eigen iteration residual {pair.residual:.3e} after {max_iter} iterations",
        best=pair,
    )


def maximal_eigenpair_from_duality(pair, engine=None):
    """Dual pair for the maximal operator: (mu, -phi) with recomputed residual.

    Since the supremum of the negated field equals minus the infimum, the
    residual must match the input pair's to machine precision.
    """
    psi = pair.phi.negated()
    if engine is None:
        engine = OperatorEngine(psi.grid, pair.dirs, pair.order)
    evN = engine.lambdaN(psi)
    resid = float(np.max(np.abs(evN.values + pair.mu * psi.interior_values())))
    return EigenPair(pair.mu, psi, resid, pair.mu_trace.copy(), pair.iterations,
                     pair.converged, pair.order, pair.dirs, kind="sup")


@dataclass
class SegmentEigenPair:
    """Principal pair of the 1D fractional Dirichlet problem on [-r, r].

    Sign convention: the eigenfunction is nonnegative.  values covers the
    whole 1D grid line (zeros outside the segment).
    """

    mu: float
    xs: np.ndarray
    values: np.ndarray
    residual: float
    mu_trace: np.ndarray
    converged: bool
    r: float
    h_r: float
    order: FracOrder
    interior: np.ndarray = dfield(repr=False, default=None)

    def interp(self, x):
        """Linear interpolation on the line, zero beyond the grid."""
        return np.interp(np.asarray(x, dtype=float), self.xs, self.values,
                         left=0.0, right=0.0)


def _segment_matrix(r, order, h_r, pad=4):
    import math

    half = math.ceil(r / h_r - 1e-12) + pad
    L = half * h_r
    n = 2 * half
    xs = -L + (np.arange(n) + 0.5) * h_r
    interior = np.abs(xs) < r
    idx = np.nonzero(interior)[0]
    ni = len(idx)
    K = int(math.ceil(2.0 * r / h_r)) + 2
    q = make_weights(order, h_r, K)
    rank = -np.ones(n, dtype=np.int64)
    rank[idx] = np.arange(ni)
    A = np.zeros((ni, ni))
    for k in range(1, K + 1):
        w = q.weights[k - 1]
        for sgn in (k, -k):
            nbr = idx + sgn
            ok = (nbr >= 0) & (nbr < n)
            cols = rank[nbr[ok]]
            inside = cols >= 0
            rows = np.arange(ni)[ok][inside]
            A[rows, cols[inside]] += w
    A[np.arange(ni), np.arange(ni)] -= q.center_mass
    return xs, interior, idx, A, q


def segment_eigenpair_1d(r, order, h_r, tol=1e-4, max_iter=500, pad=4):
    """1D inverse power iteration; exact node hits, so no interpolation.

    The single-direction operator is linear here, and the negated system
    matrix is a strictly dominant M-matrix whose inverse preserves the
    positive cone.
    """
    if not isinstance(order, FracOrder):
        order = FracOrder(order)
    if r <= 0.0:
        raise ValueError("segment half-length must be positive")
    xs, interior, idx, A, q = _segment_matrix(r, order, h_r, pad)
    ni = len(idx)
    if ni == 0:
        raise DegenerateStart("no interior nodes on the segment")
    lu = lu_factor(-A, check_finite=False)
    v = np.maximum(1.0 - (xs[idx] / r) ** 2, 0.0) ** 2
    v /= np.max(np.abs(v))
    mu = np.inf
    mu_trace = []
    converged = False
    for _ in range(max_iter):
        w = lu_solve(lu, v, check_finite=False)
        nw = float(np.max(np.abs(w)))
        mu_new = 1.0 / nw
        v = w / nw
        mu_trace.append(mu_new)
        if np.isfinite(mu) and abs(mu_new - mu) <= tol * abs(mu_new):
            resid = float(np.max(np.abs(A @ v + mu_new * v)))
            if resid <= 10.0 * tol:
                mu = mu_new
                converged = True
                break
        mu = mu_new
    resid = float(np.max(np.abs(A @ v + mu * v)))
    full = np.zeros(len(xs))
    full[idx] = v
    pair = SegmentEigenPair(mu, xs, full, resid, np.asarray(mu_trace), converged,
                            float(r), float(h_r), order, interior)
    if not converged:
        raise NotConverged(f"segment eigen residual {resid:.3e}", best=pair)
    return pair


def slab_from_segment(pair):
    """Exterior closure extending the 1D eigenfunction constantly across x2."""
    from .operator import function_exterior

    return function_exterior(lambda pts: pair.interp(pts[:, 0]))
