"""Directional-infimum fractional operator on grid fields.

The operator evaluated here is the infimum over unit directions of the
one-dimensional fractional second-difference integral along the ray through
a node; its supremum counterpart is the dual maximal operator.  Sampling
along rays uses bilinear interpolation inside the box (nonnegative
coefficients, so the scheme stays monotone) and direct evaluation of the
exterior-data closure outside the box.
"""

import math
from dataclasses import dataclass

import numpy as np

from .quadrature import FracOrder, make_weights, tail_integral, _eval_closure

__all__ = [
    "DirectionSet",
    "Field",
    "OperatorEval",
    "OperatorEngine",
    "zero_exterior",
    "constant_exterior",
    "affine_exterior",
    "function_exterior",
    "eval_ray_value",
    "apply_lambda1",
    "apply_lambdaN",
]


class DirectionSet:
    """M unit directions with angles uniformly spaced in [0, pi).

    Only a half circle is needed: the symmetrized ray integral is invariant
    under theta -> -theta.
    """

    def __init__(self, M=64):
        M = int(M)
        if M < 8:
            raise ValueError("at least 8 directions are required")
        self.M = M
        self.angles = np.arange(M) * (math.pi / M)
        self.vectors = np.column_stack([np.cos(self.angles), np.sin(self.angles)])

    def __len__(self):
        return self.M


class _ZeroClosure:
    is_zero = True

    def __call__(self, pts):
        pts = np.asarray(pts, dtype=float)
        n = pts.shape[0] if pts.ndim else 1
        return np.zeros(n)


class _ConstClosure:
    def __init__(self, c):
        self.c = float(c)
        self.is_zero = self.c == 0.0

    def __call__(self, pts):
        pts = np.asarray(pts, dtype=float)
        n = pts.shape[0] if pts.ndim else 1
        return np.full(n, self.c)


class _AffineClosure:
    is_zero = False

    def __init__(self, a0, ax, ay):
        self.a0, self.ax, self.ay = float(a0), float(ax), float(ay)

    def __call__(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return self.a0 + self.ax * pts[:, 0] + self.ay * pts[:, 1]


class _FuncClosure:
    is_zero = False

    def __init__(self, fn):
        self.fn = fn

    def __call__(self, pts):
        return np.asarray(self.fn(np.atleast_2d(np.asarray(pts, dtype=float))), dtype=float)


class _NegatedClosure:
    def __init__(self, g):
        self.inner = g
        self.is_zero = getattr(g, "is_zero", False)

    def __call__(self, pts):
        return -np.asarray(self.inner(pts), dtype=float)


def zero_exterior():
    return _ZeroClosure()


def constant_exterior(c):
    return _ConstClosure(c)


def affine_exterior(a0, ax, ay):
    return _AffineClosure(a0, ax, ay)


def function_exterior(fn):
    """Wrap a vectorized callable (N, 2) -> (N,) as exterior data."""
    return _FuncClosure(fn)


class Field:
    """Grid function together with its exterior-data closure.

    Exterior-in-box nodes always carry the closure's nodal values (the
    Dirichlet condition); `with_interior` preserves that pinning.
    """

    def __init__(self, grid, values, g, impose_exterior=True):
        self.grid = grid
        self.g = g
        self.values = np.array(values, dtype=float).reshape(grid.shape)
        if impose_exterior:
            self.impose_exterior()

    @classmethod
    def from_function(cls, grid, fn, g):
        vals = np.asarray(fn(grid.node_points()), dtype=float).reshape(grid.shape)
        return cls(grid, vals, g)

    @classmethod
    def from_interior(cls, grid, interior_values, g):
        vals = np.zeros(grid.n * grid.n)
        vals[grid.interior_flat] = np.asarray(interior_values, dtype=float)
        return cls(grid, vals.reshape(grid.shape), g)

    def impose_exterior(self):
        ext = self.grid.exterior_flat()
        pts = self.grid.node_points()[ext]
        flat = self.values.ravel()
        flat[ext] = _eval_closure(self.g, pts)
        self.values = flat.reshape(self.grid.shape)

    def interior_values(self):
        return self.values.ravel()[self.grid.interior_flat]

    def with_interior(self, interior_values):
        vals = self.values.ravel().copy()
        vals[self.grid.interior_flat] = np.asarray(interior_values, dtype=float)
        return Field(self.grid, vals.reshape(self.grid.shape), self.g,
                     impose_exterior=False)

    def negated(self):
        return Field(self.grid, -self.values, _NegatedClosure(self.g),
                     impose_exterior=False)

    def copy(self):
        return Field(self.grid, self.values.copy(), self.g, impose_exterior=False)

    def sup_norm_interior(self, reference=None):
        vals = self.interior_values()
        if reference is not None:
            vals = vals - np.asarray(reference, dtype=float)
        return float(np.max(np.abs(vals))) if len(vals) else 0.0


@dataclass
class OperatorEval:
    """Per-interior-node operator values and the minimizing direction index."""

    values: np.ndarray
    argmin: np.ndarray
    sup_values: np.ndarray | None = None

    def as_grid(self, grid, fill=np.nan):
        out = np.full(grid.n * grid.n, fill)
        out[grid.interior_flat] = self.values
        return out.reshape(grid.shape)


def _default_sample_count(domain, h_r):
    # T = K h_r must exceed the domain diameter so every tail point is
    # genuinely exterior, where the closure is the true solution value.
    return int(math.ceil(2.0 * domain.max_semiaxis / h_r)) + 2


class OperatorEngine:
    """Vectorized ray scanning over all interior nodes and directions.

    Geometry is uniform across nodes: the sample offset k h_r theta has the
    same fractional cell coordinates for every node, so one gather with a
    constant index shift serves a whole (direction, k) pair.
    """

    def __init__(self, grid, dirs, order, h_r=None, K=None):
        if not isinstance(order, FracOrder):
            order = FracOrder(order)
        self.grid = grid
        self.dirs = dirs
        self.order = order
        self.h_r = float(h_r) if h_r is not None else grid.h
        self.K = int(K) if K is not None else _default_sample_count(grid.domain, self.h_r)
        self.quad = make_weights(order, self.h_r, self.K)
        ks = np.arange(1, self.K + 1, dtype=float)
        # signed sample distances: +k h_r then -k h_r
        self._taus = np.concatenate([ks, -ks]) * self.h_r
        self._w2 = np.concatenate([self.quad.weights, self.quad.weights])
        self._ii = grid.interior_ij[:, 0].astype(np.int64)
        self._jj = grid.interior_ij[:, 1].astype(np.int64)
        self._xi = grid.interior_points[:, 0]
        self._yi = grid.interior_points[:, 1]
        self._ext_cache = {}

    # -- sampling geometry ------------------------------------------------

    def _shift_data(self, m):
        """Integer shifts and fractional weights for all samples of one direction."""
        theta = self.dirs.vectors[m]
        gx = self._taus * theta[0] / self.grid.h
        gy = self._taus * theta[1] / self.grid.h
        P = np.floor(gx).astype(np.int64)
        Q = np.floor(gy).astype(np.int64)
        return P, Q, gx - P, gy - Q

    def _gather(self, V, m):
        """In-box bilinear samples (2K, ni), with out-of-box mask."""
        n = self.grid.n
        P, Q, fx, fy = self._shift_data(m)
        IX = self._ii[None, :] + P[:, None]
        IY = self._jj[None, :] + Q[:, None]
        mask = (IX >= 0) & (IX <= n - 2) & (IY >= 0) & (IY <= n - 2)
        np.clip(IX, 0, n - 2, out=IX)
        np.clip(IY, 0, n - 2, out=IY)
        flat = IX * n + IY
        fx = fx[:, None]
        fy = fy[:, None]
        S = ((1.0 - fx) * (1.0 - fy) * V[flat]
             + fx * (1.0 - fy) * V[flat + n]
             + (1.0 - fx) * fy * V[flat + 1]
             + fx * fy * V[flat + n + 1])
        return S, mask

    # -- exterior data ----------------------------------------------------

    def exterior_matrix(self, g):
        """Per-direction constant contribution of the closure (out-of-box
        samples plus the far-field rule), cached per closure object."""
        key = id(g)
        hit = self._ext_cache.get(key)
        if hit is not None and hit[0] is g:
            return hit[1]
        ni = self.grid.num_interior
        M = self.dirs.M
        C = np.zeros((M, ni))
        if not getattr(g, "is_zero", False):
            n = self.grid.n
            T = self.quad.T
            sigma = self.quad.tail_sigma
            tw = self.quad.tail_weights
            taus_tail = T / sigma
            tail_scale = T ** (-2.0 * self.order.s)
            node_idx = np.broadcast_to(np.arange(ni), (2 * self.K, ni))
            for m in range(M):
                theta = self.dirs.vectors[m]
                P, Q, _, _ = self._shift_data(m)
                IX = self._ii[None, :] + P[:, None]
                IY = self._jj[None, :] + Q[:, None]
                out = ~((IX >= 0) & (IX <= n - 2) & (IY >= 0) & (IY <= n - 2))
                if out.any():
                    px = self._xi[None, :] + (self._taus * theta[0])[:, None]
                    py = self._yi[None, :] + (self._taus * theta[1])[:, None]
                    pts = np.column_stack([px[out], py[out]])
                    gv = _eval_closure(g, pts)
                    wk = np.broadcast_to(self._w2[:, None], out.shape)[out]
                    np.add.at(C[m], node_idx[out], wk * gv)
                # far field, tau = +-T/sigma
                for sign in (1.0, -1.0):
                    px = self._xi[None, :] + sign * taus_tail[:, None] * theta[0]
                    py = self._yi[None, :] + sign * taus_tail[:, None] * theta[1]
                    gv = _eval_closure(g, np.column_stack([px.ravel(), py.ravel()]))
                    C[m] += tail_scale * (tw @ gv.reshape(len(sigma), ni))
        self._ext_cache[key] = (g, C)
        return C

    # -- operator values --------------------------------------------------

    def direction_values(self, field):
        """Ray-integral values I_theta(u) for every direction: (M, ni)."""
        V = field.values.ravel()
        u_int = V[self.grid.interior_flat]
        C = self.exterior_matrix(field.g)
        I = np.empty((self.dirs.M, self.grid.num_interior))
        for m in range(self.dirs.M):
            S, mask = self._gather(V, m)
            S *= mask
            I[m] = self._w2 @ S
        I += C
        I -= self.quad.center_mass * u_int[None, :]
        return I

    def lambda1(self, field):
        I = self.direction_values(field)
        return OperatorEval(I.min(axis=0), I.argmin(axis=0))

    def lambdaN(self, field):
        I = self.direction_values(field)
        return OperatorEval(I.max(axis=0), I.argmax(axis=0))

    def both(self, field):
        I = self.direction_values(field)
        return OperatorEval(I.min(axis=0), I.argmin(axis=0), I.max(axis=0))

    @property
    def cfl_dt(self):
        """Largest step keeping u + dt*Lambda(u) a monotone update."""
        return 0.9 / self.quad.center_mass

    # -- frozen-policy linear system --------------------------------------

    def policy_system(self, field, policy):
        """Dense matrix and constant vector of the frozen-direction operator.

        I_policy(u)(x_i) = (A @ u_int)[i] + known[i]; columns over exterior
        nodes are folded into `known` using the field's pinned values.
        """
        grid = self.grid
        n = grid.n
        ni = grid.num_interior
        V = field.values.ravel()
        C = self.exterior_matrix(field.g)
        A = np.zeros((ni, ni))
        known = C[policy, np.arange(ni)].copy()
        rank = grid.interior_rank
        for m in np.unique(policy):
            rows = np.nonzero(policy == m)[0]
            P, Q, fx, fy = self._shift_data(m)
            IX = grid.interior_ij[rows, 0][None, :] + P[:, None]
            IY = grid.interior_ij[rows, 1][None, :] + Q[:, None]
            mask = (IX >= 0) & (IX <= n - 2) & (IY >= 0) & (IY <= n - 2)
            np.clip(IX, 0, n - 2, out=IX)
            np.clip(IY, 0, n - 2, out=IY)
            base = IX * n + IY
            fxc = fx[:, None]
            fyc = fy[:, None]
            rows_b = np.broadcast_to(rows, mask.shape)
            corners = (
                (base, (1.0 - fxc) * (1.0 - fyc)),
                (base + n, fxc * (1.0 - fyc)),
                (base + 1, (1.0 - fxc) * fyc),
                (base + n + 1, fxc * fyc),
            )
            for flat, cw in corners:
                coeff = np.broadcast_to(self._w2[:, None], mask.shape) * cw * mask
                cols = rank[flat]
                inside = (cols >= 0) & mask
                np.add.at(A, (rows_b[inside], cols[inside]), coeff[inside])
                ext = (cols < 0) & mask
                if ext.any():
                    np.add.at(known, rows_b[ext], coeff[ext] * V[flat[ext]])
        A[np.arange(ni), np.arange(ni)] -= self.quad.center_mass
        return A, known


def _hull_mask(grid, pts):
    ixf = np.floor((pts[:, 0] - grid.xs[0]) / grid.h).astype(np.int64)
    iyf = np.floor((pts[:, 1] - grid.ys[0]) / grid.h).astype(np.int64)
    n = grid.n
    return (ixf >= 0) & (ixf <= n - 2) & (iyf >= 0) & (iyf <= n - 2)


def bilinear(grid, values, pts):
    """Bilinear interpolation of nodal values at arbitrary points (clamped)."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    n = grid.n
    gx = (pts[:, 0] - grid.xs[0]) / grid.h
    gy = (pts[:, 1] - grid.ys[0]) / grid.h
    ix = np.clip(np.floor(gx).astype(np.int64), 0, n - 2)
    iy = np.clip(np.floor(gy).astype(np.int64), 0, n - 2)
    fx = np.clip(gx - ix, 0.0, 1.0)
    fy = np.clip(gy - iy, 0.0, 1.0)
    V = values.ravel()
    flat = ix * n + iy
    return ((1 - fx) * (1 - fy) * V[flat] + fx * (1 - fy) * V[flat + n]
            + (1 - fx) * fy * V[flat + 1] + fx * fy * V[flat + n + 1])


def eval_ray_value(field, x, theta, order, h_r=None, K=None):
    """Reference single-node, single-direction ray integral.

    Samples the field at x +- k h_r theta (bilinear inside the box, closure
    outside) and adds the far-field rule.  The engine reproduces this value
    up to floating-point summation order.
    """
    grid = field.grid
    if not isinstance(order, FracOrder):
        order = FracOrder(order)
    h_r = float(h_r) if h_r is not None else grid.h
    K = int(K) if K is not None else _default_sample_count(grid.domain, h_r)
    q = make_weights(order, h_r, K)
    x = np.asarray(x, dtype=float)
    theta = np.asarray(theta, dtype=float)
    theta = theta / math.hypot(theta[0], theta[1])
    ks = np.arange(1, K + 1)[:, None] * h_r
    pts_plus = x[None, :] + ks * theta[None, :]
    pts_minus = x[None, :] - ks * theta[None, :]
    center = float(bilinear(grid, field.values, x[None, :])[0])

    def sample(pts):
        vals = np.empty(len(pts))
        mask = _hull_mask(grid, pts)
        if mask.any():
            vals[mask] = bilinear(grid, field.values, pts[mask])
        if (~mask).any():
            vals[~mask] = _eval_closure(field.g, pts[~mask])
        return vals

    core = float(q.weights @ (sample(pts_plus) + sample(pts_minus) - 2.0 * center))
    return core + tail_integral(order, field.g, x, theta, q.T, center)


def apply_lambda1(field, dirs, order, h_r=None, K=None):
    """Infimum of the ray integrals over the direction set, with argmin.

    Ties break deterministically to the smallest direction index.
    """
    return OperatorEngine(field.grid, dirs, order, h_r, K).lambda1(field)


def apply_lambdaN(field, dirs, order, h_r=None, K=None):
    """Supremum counterpart of apply_lambda1 (dual maximal operator)."""
    return OperatorEngine(field.grid, dirs, order, h_r, K).lambdaN(field)
