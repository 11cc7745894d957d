"""Executable checks of the structural estimates behind the scheme.

Barrier inequalities are evaluated on the exact closed-form barriers with
adaptive 1D quadrature (never through the grid operator: the statements are
about exact functions).  Decay rates come from least squares on log sup-norm
traces; Holder seminorms are exact maxima over node pairs.
"""

import math
import warnings
from dataclasses import dataclass, field as dfield

import numpy as np
from scipy.integrate import quad, IntegrationWarning

from .errors import (
    InsufficientData,
    InvalidGamma,
    NonpositiveNorms,
    SandwichViolated,
)
from .geometry import barrier_geom
from .operator import bilinear
from .quadrature import FracOrder

__all__ = [
    "HolderSpec",
    "DecayFit",
    "BarrierReport",
    "SandwichReport",
    "check_barrier_w",
    "check_barrier_v",
    "holder_seminorm",
    "fit_decay",
    "asymp_sandwich_check",
    "reference_symmetrized_integral",
]

QUAD_TOL = 1e-8


def _quad(fn, lo, hi, points=None, budget=QUAD_TOL):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        val, err = quad(fn, lo, hi, points=points, limit=400,
                        epsabs=1e-11, epsrel=1e-11)
    if err > budget * (1.0 + abs(val)):
        raise RuntimeError(f"reference quadrature error {err:.2e} above budget")
    return val


def _singular_panel(delta, s, eps, nodes=24):
    """int_0^eps delta(t) t^(-1-2s) dt by Gauss-Jacobi with weight t^(1-2s).

    The bounded factor delta(t)/t^2 is analytic on a disk reaching past eps
    whenever eps stays below half the distance to the nearest kink, so the
    rule converges spectrally; its nodes also stay clear of the region where
    the float second difference drowns in cancellation.
    """
    from scipy.special import roots_jacobi

    beta = 1.0 - 2.0 * s
    xi, w = roots_jacobi(nodes, 0.0, beta)
    t = 0.5 * eps * (1.0 + xi)
    vals = np.array([delta(tk) / (tk * tk) for tk in t])
    return (0.5 * eps) ** (beta + 1.0) * float(w @ vals)


def reference_symmetrized_integral(delta, s, cut, breakpoints=(), beyond=0.0,
                                   budget=QUAD_TOL):
    """High-accuracy quadrature of int_0^inf delta(tau) tau^(-1-2s) dtau.

    delta must be the symmetrized second difference (O(tau^2) at zero) and
    constantly equal to `beyond` for tau >= cut, where the remaining mass is
    added in closed form.  breakpoints name interior kinks of delta; the
    kernel singularity is handled by a weighted Gauss rule on the panel up
    to half the first kink, and adaptive panels cover the rest.
    """
    pts = sorted(p for p in breakpoints if 0.0 < p < cut)
    eps = 0.5 * (pts[0] if pts else cut)

    def integrand(t):
        return delta(t) * t ** (-1.0 - 2.0 * s)

    val = _singular_panel(delta, s, eps)
    edges = [eps] + pts + [cut]
    for lo, hi in zip(edges, edges[1:]):
        if hi > lo * (1.0 + 1e-14):
            val += _quad(integrand, lo, hi, budget=budget)
    return val + beyond * cut ** (-2.0 * s) / (2.0 * s)


@dataclass
class BarrierReport:
    """Sampled barrier values against the fitted power-law bound."""

    s: float
    gamma: float
    points: np.ndarray = dfield(repr=False)
    thetas: np.ndarray = dfield(repr=False)
    gaps: np.ndarray = dfield(repr=False)
    values: np.ndarray = dfield(repr=False)
    bound_values: np.ndarray = dfield(repr=False)
    max_violation: float
    constant: float
    universal_integral: float | None = None


def _require_gamma(order, gamma, allow_zero=False):
    lo_ok = gamma > 0.0 or (allow_zero and gamma == 0.0)
    if not (lo_ok and gamma < 2.0 * order.s - 1.0):
        raise InvalidGamma(
            f"gamma must lie in (0, 2s-1) = (0, {2 * order.s - 1:.3f}), got {gamma}"
        )


def barrier_w_ray_integral(x, theta, gamma, s):
    """Exact ray integral of the gap barrier d(x)^gamma at (x, theta).

    Along the ray the barrier is ((tau - t0)(t1 - tau))_+^gamma with the
    exit roots t0 < 0 < t1, so the integrand has compact support beyond
    which the far field is pure center mass.
    """
    geo = barrier_geom(x, theta)
    t0, t1, d = geo.t0, geo.t1, geo.d
    f0 = d ** gamma

    def fray(t):
        q = (t - t0) * (t1 - t)
        return q ** gamma if q > 0.0 else 0.0

    near = min(t1, -t0)
    cut = max(t1, -t0)

    def delta(t):
        return fray(t) + fray(-t) - 2.0 * f0

    return reference_symmetrized_integral(delta, s, cut, breakpoints=(near,),
                                          beyond=-2.0 * f0)


def check_barrier_w(order, gamma, samples=1000, seed=0, radius=0.99):
    """Negativity check of the gap-barrier ray integrals in the unit ball.

    Fits the largest c with I <= -c d(x)^(gamma-2s) over the sample set;
    max_violation is the largest raw integral (negative on success).
    """
    if not isinstance(order, FracOrder):
        order = FracOrder(order)
    _require_gamma(order, gamma)
    rng = np.random.default_rng(seed)
    rr = radius * np.sqrt(rng.random(samples))
    aa = rng.random(samples) * 2.0 * math.pi
    pts = np.column_stack([rr * np.cos(aa), rr * np.sin(aa)])
    ta = rng.random(samples) * 2.0 * math.pi
    thetas = np.column_stack([np.cos(ta), np.sin(ta)])
    s = order.s
    vals = np.empty(samples)
    gaps = np.empty(samples)
    for i in range(samples):
        gaps[i] = 1.0 - pts[i] @ pts[i]
        vals[i] = barrier_w_ray_integral(pts[i], thetas[i], gamma, s)
    scaled = -vals * gaps ** (2.0 * s - gamma)
    c = float(np.min(scaled))
    bounds = -c * gaps ** (gamma - 2.0 * s)
    return BarrierReport(s, gamma, pts, thetas, gaps, vals, bounds,
                         float(np.max(vals)), c)


def check_barrier_v(order, gamma):
    """Universal integral of the cusp barrier |x|^gamma along its own axis.

    The ray integral scales exactly as |x|^(gamma-2s) times
    int_R (|1+t|^gamma - 1) |t|^(-1-2s) dt, which is finite and negative for
    0 < gamma < 2s - 1 (and vanishes at gamma = 0 and gamma = 2s - 1).
    """
    if not isinstance(order, FracOrder):
        order = FracOrder(order)
    _require_gamma(order, gamma, allow_zero=True)
    s = order.s
    if gamma == 0.0:
        u = 0.0
    else:

        def delta(t):
            return abs(1.0 + t) ** gamma + abs(1.0 - t) ** gamma - 2.0

        def integrand(t):
            return delta(t) * t ** (-1.0 - 2.0 * s)

        u = reference_symmetrized_integral(delta, s, 2.0, breakpoints=(1.0,)) \
            + _quad(integrand, 2.0, np.inf)
    empty = np.empty(0)
    return BarrierReport(s, gamma, empty, empty, empty, empty, empty,
                         u, -u, universal_integral=u)


@dataclass
class HolderSpec:
    """Exact gamma-Holder seminorm over interior node pairs."""

    gamma: float
    seminorm: float
    pair_a: tuple
    pair_b: tuple


def holder_seminorm(field, gamma, chunk=512):
    """Max over all interior node pairs of |u(x)-u(y)| / |x-y|^gamma."""
    if not (0.0 < gamma < 1.0):
        raise InvalidGamma(f"gamma must lie in (0, 1), got {gamma}")
    pts = field.grid.interior_points
    vals = field.interior_values()
    n = len(pts)
    best = 0.0
    best_pair = (0, 0)
    for start in range(0, n, chunk):
        stop = min(start + chunk, n)
        dx = pts[start:stop, None, 0] - pts[None, :, 0]
        dy = pts[start:stop, None, 1] - pts[None, :, 1]
        dist = np.hypot(dx, dy)
        np.fill_diagonal(dist[:, start:stop], np.inf)
        quot = np.abs(vals[start:stop, None] - vals[None, :]) / dist ** gamma
        k = int(np.argmax(quot))
        i, j = divmod(k, n)
        if quot[i, j] > best:
            best = float(quot[i, j])
            best_pair = (start + i, j)
    return HolderSpec(gamma, best,
                      tuple(pts[best_pair[0]]), tuple(pts[best_pair[1]]))


@dataclass
class DecayFit:
    """Least-squares exponential rate over a trailing trace window."""

    t_start: float
    t_end: float
    rate: float
    log_intercept: float
    r_squared: float


def fit_decay(trace, window_fraction=0.5):
    """Fit log ||u - z|| ~ log C - mu t on the trailing window of the trace."""
    if not (0.0 < window_fraction <= 1.0):
        raise ValueError("window_fraction must lie in (0, 1]")
    t = np.asarray(trace.times, dtype=float)
    y = np.asarray(trace.sup_norms, dtype=float)
    n = len(t)
    k0 = int(math.floor(n * (1.0 - window_fraction)))
    t, y = t[k0:], y[k0:]
    if len(t) < 10:
        raise InsufficientData(f"only {len(t)} samples in the fit window")
    if np.any(y <= 0.0):
        dead = np.nonzero(y <= 0.0)[0][0]
        raise NonpositiveNorms("trace reached zero inside the window",
                               extinction_time=float(t[dead]))
    ly = np.log(y)
    slope, intercept = np.polyfit(t, ly, 1)
    fitted = slope * t + intercept
    ss_res = float(np.sum((ly - fitted) ** 2))
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0.0 else 1.0
    return DecayFit(float(t[0]), float(t[-1]), float(-slope), float(intercept), r2)


@dataclass
class SandwichReport:
    """Smallest constants closing the two-sided eigenfunction envelope."""

    mu: float
    c_lower: float
    c_upper: float
    n_snapshots: int
    worst_lower: tuple | None = None
    worst_upper: tuple | None = None


def asymp_sandwich_check(trace, z, enlarged):
    """Find the smallest C1, C2 with
    C1 e^(-mu t) phi_R <= u - z <= C2 e^(-mu t) (-phi_R) at all snapshots.

    phi_R is the enlarged-domain eigenfunction interpolated onto the grid of
    z; it must be strictly negative there, otherwise no finite constant
    exists and SandwichViolated is raised.
    """
    if not trace.snapshots:
        raise ValueError("trace carries no snapshots; rerun evolve with snapshot_every")
    grid = z.grid
    pts = grid.interior_points
    phi = bilinear(enlarged.phi.grid, enlarged.phi.values, pts)
    if np.any(phi >= 0.0):
        k = int(np.argmax(phi))
        raise SandwichViolated(
            "enlarged eigenfunction is not strictly negative on the domain",
            worst=(tuple(pts[k]), float(phi[k])),
        )
    psi = -phi
    z_int = z.interior_values()
    mu = enlarged.mu
    c1 = 0.0
    c2 = 0.0
    worst_lo = None
    worst_hi = None
    for t, snap in trace.snapshots:
        v = snap.ravel()[grid.interior_flat] - z_int
        grow = math.exp(mu * t)
        neg = v < 0.0
        if neg.any():
            req = v[neg] * grow / phi[neg]
            k = int(np.argmax(req))
            if req[k] > c1:
                c1 = float(req[k])
                worst_lo = (float(t), tuple(pts[neg][k]))
        pos = v > 0.0
        if pos.any():
            req = v[pos] * grow / psi[pos]
            k = int(np.argmax(req))
            if req[k] > c2:
                c2 = float(req[k])
                worst_hi = (float(t), tuple(pts[pos][k]))
    if not (math.isfinite(c1) and math.isfinite(c2)):
        raise SandwichViolated("no finite sandwich constants", worst=(worst_lo, worst_hi))
    return SandwichReport(mu, c1, c2, len(trace.snapshots), worst_lo, worst_hi)
