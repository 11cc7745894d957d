"""Strictly convex planar domains, Cartesian grids, and ray-root geometry.

Domains are balls and ellipses (the two strictly convex families with a
closed-form osculating-ball radius).  Grids are cell-centered so that no
node ever sits exactly at the domain center or on a symmetry axis, and the
box always extends a padding margin of whole cells beyond the domain.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import NoInteriorNodes, OutsideUnitBall

__all__ = [
    "ConvexDomain",
    "Grid2",
    "BarrierGeom",
    "build_grid",
    "inner_ball_radius",
    "barrier_geom",
]


@dataclass(frozen=True)
class ConvexDomain:
    """Ball or rotated ellipse, described by semi-axes a >= b > 0.

    The boundary is parametrized in the body frame as
    (a cos t, b sin t), then rotated by `rotation` and shifted by `center`.
    """

    kind: str
    center: tuple = (0.0, 0.0)
    a: float = 1.0
    b: float = 1.0
    rotation: float = 0.0

    def __post_init__(self):
        if self.kind not in ("ball", "ellipse"):
            raise ValueError(f"unknown domain kind {self.kind!r}")
        if not (math.isfinite(self.a) and math.isfinite(self.b)):
            raise ValueError("semi-axes must be finite")
        if not (self.a >= self.b > 0.0):
            raise ValueError("semi-axes must satisfy a >= b > 0")
        if self.kind == "ball" and self.a != self.b:
            raise ValueError("a ball needs equal semi-axes")

    @classmethod
    def ball(cls, radius=1.0, center=(0.0, 0.0)):
        return cls("ball", tuple(center), float(radius), float(radius), 0.0)

    @classmethod
    def ellipse(cls, a, b, center=(0.0, 0.0), rotation=0.0):
        return cls("ellipse", tuple(center), float(a), float(b), float(rotation))

    @property
    def max_semiaxis(self):
        return self.a

    def _to_body(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        shifted = pts - np.asarray(self.center, dtype=float)
        c, s = math.cos(self.rotation), math.sin(self.rotation)
        # rotate world -> body by -rotation
        bx = c * shifted[:, 0] + s * shifted[:, 1]
        by = -s * shifted[:, 0] + c * shifted[:, 1]
        return bx, by

    def _to_world(self, bx, by):
        c, s = math.cos(self.rotation), math.sin(self.rotation)
        wx = c * bx - s * by + self.center[0]
        wy = s * bx + c * by + self.center[1]
        return np.stack([wx, wy], axis=-1)

    def level(self, pts):
        """(x/a)^2 + (y/b)^2 - 1 in the body frame; negative inside."""
        bx, by = self._to_body(pts)
        return (bx / self.a) ** 2 + (by / self.b) ** 2 - 1.0

    def contains(self, pts):
        """Strict interior test (boundary points report False)."""
        return self.level(pts) < 0.0

    def boundary_points(self, angles):
        t = np.asarray(angles, dtype=float)
        return self._to_world(self.a * np.cos(t), self.b * np.sin(t))

    def outward_normal(self, angles):
        """Unit outward normal at the boundary point of parameter angle."""
        t = np.asarray(angles, dtype=float)
        nx = np.cos(t) / self.a
        ny = np.sin(t) / self.b
        norm = np.hypot(nx, ny)
        c, s = math.cos(self.rotation), math.sin(self.rotation)
        wx = c * (nx / norm) - s * (ny / norm)
        wy = s * (nx / norm) + c * (ny / norm)
        return np.stack([wx, wy], axis=-1)

    def nearest_boundary(self, pts):
        """Nearest boundary point and distance for each query point.

        For the ball this is radial; for the ellipse the tangency equation
        (x - b(t)) . b'(t) = 0 is solved by a few vectorized Newton sweeps
        from four starting angles, keeping the closest root.
        """
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        if self.kind == "ball" or self.a == self.b:
            rel = pts - np.asarray(self.center, dtype=float)
            r = np.hypot(rel[:, 0], rel[:, 1])
            safe = np.where(r > 1e-300, r, 1.0)
            proj = np.asarray(self.center, dtype=float) + self.a * rel / safe[:, None]
            proj[r <= 1e-300] = np.asarray(self.center) + np.array([self.a, 0.0])
            dist = np.abs(self.a - r)
            return proj, dist
        bx, by = self._to_body(pts)
        a, b = self.a, self.b
        best_t = None
        best_d2 = None
        starts = np.arctan2(a * by, b * bx)
        for shift in (0.0, 0.5 * math.pi, -0.5 * math.pi, math.pi):
            t = starts + shift
            for _ in range(40):
                ct, st = np.cos(t), np.sin(t)
                # f(t) = d/dt |p - boundary(t)|^2 / 2
                f = (a * ct - bx) * (-a * st) + (b * st - by) * (b * ct)
                df = a * a * st * st - (a * ct - bx) * a * ct + b * b * ct * ct - (b * st - by) * b * st
                stepv = f / np.where(np.abs(df) > 1e-14, df, 1e-14)
                t = t - np.clip(stepv, -0.5, 0.5)
            ct, st = np.cos(t), np.sin(t)
            d2 = (a * ct - bx) ** 2 + (b * st - by) ** 2
            if best_t is None:
                best_t, best_d2 = t, d2
            else:
                take = d2 < best_d2
                best_t = np.where(take, t, best_t)
                best_d2 = np.where(take, d2, best_d2)
        proj = self._to_world(a * np.cos(best_t), b * np.sin(best_t))
        return proj, np.sqrt(best_d2)

    def to_dict(self):
        return {
            "kind": self.kind,
            "center": list(self.center),
            "a": self.a,
            "b": self.b,
            "rotation": self.rotation,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(d["kind"], tuple(d.get("center", (0.0, 0.0))),
                   float(d["a"]), float(d["b"]), float(d.get("rotation", 0.0)))


def inner_ball_radius(domain):
    """Interior-sphere radius: largest R with B_R(z - R nu(z)) inside the domain.

    Balls are their own osculating ball (R = radius); for an ellipse the
    binding contact is at the ends of the major axis, where the radius of
    curvature is minimal, giving R = b^2 / a.
    """
    if domain.kind == "ball" or domain.a == domain.b:
        return domain.a
    return domain.b ** 2 / domain.a


class Grid2:
    """Cell-centered Cartesian grid on a square box around a domain.

    Nodes sit at center + (-L + (i + 1/2) h, -L + (j + 1/2) h).  A node is
    classified interior iff it lies in the open domain; everything else in
    the box is exterior-in-box and will carry Dirichlet data.
    """

    def __init__(self, domain, h, pad=4):
        if h <= 0.0:
            raise ValueError("spacing h must be positive")
        if pad < 4:
            raise ValueError("pad must be at least 4 cells")
        self.domain = domain
        self.h = float(h)
        self.pad = int(pad)
        half_cells = math.ceil(domain.max_semiaxis / h - 1e-12) + pad
        self.L = half_cells * self.h
        self.n = 2 * half_cells
        offs = -self.L + (np.arange(self.n) + 0.5) * self.h
        self.xs = domain.center[0] + offs
        self.ys = domain.center[1] + offs
        X, Y = np.meshgrid(self.xs, self.ys, indexing="ij")
        self.X, self.Y = X, Y
        pts = np.column_stack([X.ravel(), Y.ravel()])
        self.is_interior = domain.contains(pts).reshape(self.n, self.n)
        self.interior_ij = np.argwhere(self.is_interior)
        self.interior_flat = self.interior_ij[:, 0] * self.n + self.interior_ij[:, 1]
        self.interior_points = pts[self.interior_flat]
        # flat-node -> interior-rank map (-1 on exterior nodes)
        self.interior_rank = -np.ones(self.n * self.n, dtype=np.int64)
        self.interior_rank[self.interior_flat] = np.arange(len(self.interior_flat))

    @property
    def shape(self):
        return (self.n, self.n)

    @property
    def num_interior(self):
        return len(self.interior_flat)

    def node_points(self):
        return np.column_stack([self.X.ravel(), self.Y.ravel()])

    def exterior_flat(self):
        mask = np.ones(self.n * self.n, dtype=bool)
        mask[self.interior_flat] = False
        return np.nonzero(mask)[0]


def build_grid(domain, h, pad=4):
    """Build the cell-centered grid; fails if no node lands inside the domain."""
    grid = Grid2(domain, h, pad)
    if grid.num_interior == 0:
        raise NoInteriorNodes(
            f"spacing h={h} leaves no node inside the domain (a={domain.a}, b={domain.b})"
        )
    return grid


@dataclass(frozen=True)
class BarrierGeom:
    """Ray geometry of the unit-ball barrier at point x along direction theta.

    d is the boundary-gap function (1 - |x|^2)_+, mu the normalized ray/point
    alignment, and t0 < 0 < t1 the parameters where the ray exits the ball,
    i.e. the roots of t^2 + 2 <x,theta> t - d.
    """

    x: tuple
    theta: tuple
    d: float
    mu: float
    t0: float
    t1: float


def barrier_geom(x, theta):
    """Compute d, mu and the exit roots t0 < 0 < t1 for a unit-ball ray.

    Raises OutsideUnitBall unless |x| < 1.  theta is normalized internally.
    """
    x = np.asarray(x, dtype=float)
    theta = np.asarray(theta, dtype=float)
    r2 = float(x @ x)
    if r2 >= 1.0:
        raise OutsideUnitBall(f"|x| = {math.sqrt(r2):.6f} >= 1")
    tn = math.hypot(theta[0], theta[1])
    if tn == 0.0:
        raise ValueError("direction must be nonzero")
    theta = theta / tn
    d = 1.0 - r2
    dot = float(x @ theta)
    r = math.sqrt(r2)
    mu = dot / r if r > 0.0 else 0.0
    disc = math.sqrt(d + dot * dot)
    t0 = -dot - disc
    t1 = -dot + disc
    return BarrierGeom(tuple(x), tuple(theta), d, mu, t0, t1)
