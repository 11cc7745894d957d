"""Explicit monotone time stepping for u_t = Lambda(u) with exterior data.

The step size is limited so that the update is a convex combination of the
old values plus nonnegatively weighted exterior data, which carries the
comparison principle and the sup-norm bound verbatim to the discrete flow.
The minimizing direction is recomputed every step (it depends on the state).
"""

from dataclasses import dataclass, field as dfield

import numpy as np

from .errors import CflViolation
from .operator import Field, OperatorEngine
from .quadrature import FracOrder

__all__ = ["ParabolicProblem", "ParabolicTrace", "cfl_step", "step", "evolve"]


@dataclass
class ParabolicProblem:
    """Evolution data: u(.,0) = u0 inside, u = g outside, run to t_end."""

    domain: object
    grid: object
    order: FracOrder
    dirs: object
    u0: Field
    g: object
    t_end: float

    def __post_init__(self):
        if not isinstance(self.order, FracOrder):
            self.order = FracOrder(self.order)
        if self.t_end <= 0.0:
            raise ValueError("t_end must be positive")
        ext = self.grid.exterior_flat()
        pts = self.grid.node_points()[ext]
        from .quadrature import _eval_closure

        gap = np.max(np.abs(self.u0.values.ravel()[ext] - _eval_closure(self.g, pts))) if len(ext) else 0.0
        if gap > 1e-10 * (1.0 + np.max(np.abs(self.u0.values))):
            raise ValueError("initial data must agree with the exterior data outside the domain")


@dataclass
class ParabolicTrace:
    """Sampled sup-norm history, with optional field snapshots."""

    times: np.ndarray
    sup_norms: np.ndarray
    dt: float
    snapshots: list = dfield(default_factory=list)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.sup_norms = np.asarray(self.sup_norms, dtype=float)
        if len(self.times) > 1 and not np.all(np.diff(self.times) > 0):
            raise ValueError("sample times must be strictly increasing")


def cfl_step(u, dirs, order, h_r=None, K=None):
    """Largest stable explicit step: 0.9 over the total center coefficient."""
    return OperatorEngine(u.grid, dirs, order, h_r, K).cfl_dt


def step(u, dt, dirs, order, g=None, engine=None):
    """One explicit update u <- u + dt * Lambda(u); exterior nodes reset to g."""
    if g is not None and g is not u.g:
        u = Field(u.grid, u.values, g)
    if engine is None:
        engine = OperatorEngine(u.grid, dirs, order)
    if dt > engine.cfl_dt * (1.0 + 1e-12):
        raise CflViolation(f"dt={dt} exceeds the monotone bound {engine.cfl_dt}")
    ev = engine.lambda1(u)
    return u.with_interior(u.interior_values() + dt * ev.values)


def evolve(problem, reference=None, sample_every=10, snapshot_every=None,
           engine=None, dt=None):
    """March to t_end recording ||u - reference||_inf at sampled times.

    reference may be a Field or an interior-value array; None compares
    against zero.  snapshot_every stores full node arrays every that many
    steps (plus the initial and final states).
    """
    grid = problem.grid
    if engine is None:
        engine = OperatorEngine(grid, problem.dirs, problem.order)
    stable = engine.cfl_dt
    if dt is None:
        dt = stable
    elif dt > stable * (1.0 + 1e-12):
        raise CflViolation(f"dt={dt} exceeds the monotone bound {stable}")
    if reference is None:
        ref = None
    elif isinstance(reference, Field):
        ref = reference.interior_values()
    else:
        ref = np.asarray(reference, dtype=float)

    u = Field(grid, problem.u0.values, problem.g)
    n_steps = max(1, int(np.ceil(problem.t_end / dt)))
    times = [0.0]
    norms = [u.sup_norm_interior(ref)]
    snapshots = []
    if snapshot_every is not None:
        snapshots.append((0.0, u.values.copy()))
    for i in range(1, n_steps + 1):
        ev = engine.lambda1(u)
        u = u.with_interior(u.interior_values() + dt * ev.values)
        t = i * dt
        if i % sample_every == 0 or i == n_steps:
            times.append(t)
            norms.append(u.sup_norm_interior(ref))
        if snapshot_every is not None and (i % snapshot_every == 0 or i == n_steps):
            snapshots.append((t, u.values.copy()))
    return ParabolicTrace(np.asarray(times), np.asarray(norms), dt, snapshots)
