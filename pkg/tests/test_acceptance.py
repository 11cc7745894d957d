"""Acceptance suite: one test per criterion, one printed verdict line each.

Desk configuration throughout: unit disk, h = 0.05, M = 64, s = 0.75.
Heavy artifacts (eigenpairs, traces, refined solves) are session fixtures so
related criteria share them.
"""

import math

import numpy as np
import pytest

import fraclab as fl
from fraclab.analysis import check_barrier_v, check_barrier_w
from fraclab.elliptic import EllipticProblem, solve_elliptic
from fraclab.operator import bilinear
from fraclab.parabolic import ParabolicProblem, ParabolicTrace, evolve
from fraclab.spectral import segment_eigenpair_1d, slab_from_segment

from conftest import rng_for

S = 0.75
H = 0.05
M = 64


def _report(name, detail):
    print(f"\n[ACCEPTANCE] {name}: PASS ({detail})")


@pytest.fixture(scope="session")
def desk():
    dom = fl.ConvexDomain.ball(1.0)
    grid = fl.build_grid(dom, H)
    dirs = fl.DirectionSet(M)
    engine = fl.OperatorEngine(grid, dirs, S)
    return dom, grid, dirs, engine


@pytest.fixture(scope="session")
def eig_base(desk):
    dom, grid, dirs, engine = desk
    return fl.principal_eigenpair(dom, grid, S, dirs, tol=1e-4, engine=engine)


@pytest.fixture(scope="session")
def eig_refined(desk, eig_base):
    dom, _, dirs, _ = desk
    grid2 = fl.build_grid(dom, H / 2)
    start = bilinear(eig_base.phi.grid, eig_base.phi.values, grid2.interior_points)
    return fl.principal_eigenpair(dom, grid2, S, dirs, tol=1e-4, start=start)


@pytest.fixture(scope="session")
def eig_more_dirs(desk, eig_base):
    dom, grid, _, _ = desk
    dirs2 = fl.DirectionSet(2 * M)
    return fl.principal_eigenpair(dom, grid, S, dirs2, tol=1e-4,
                                  start=eig_base.phi.interior_values())


@pytest.fixture(scope="session")
def eig_double_domain(desk, eig_base):
    _, _, dirs, _ = desk
    dom2 = fl.ConvexDomain.ball(2.0)
    grid2 = fl.build_grid(dom2, H)
    start = bilinear(eig_base.phi.grid, eig_base.phi.values,
                     grid2.interior_points / 2.0)
    return fl.principal_eigenpair(dom2, grid2, S, dirs, tol=1e-4, start=start)


@pytest.fixture(scope="session")
def eig_enlarged(desk, eig_base):
    _, _, dirs, _ = desk
    dom_R = fl.ConvexDomain.ball(1.25)
    grid_R = fl.build_grid(dom_R, H)
    start = bilinear(eig_base.phi.grid, eig_base.phi.values,
                     grid_R.interior_points / 1.25)
    return fl.principal_eigenpair(dom_R, grid_R, S, dirs, tol=1e-4, start=start)


@pytest.fixture(scope="session")
def decay_run(desk):
    dom, grid, dirs, engine = desk
    g0 = fl.zero_exterior()
    r2 = (grid.interior_points ** 2).sum(1) / 0.49
    u0 = fl.Field.from_interior(grid, -np.maximum(1.0 - r2, 0.0) ** 2, g0)
    problem = ParabolicProblem(dom, grid, S, dirs, u0, g0, 1.2)
    return evolve(problem, sample_every=5, snapshot_every=20, engine=engine)


@pytest.fixture(scope="session")
def holder_solves(desk):
    """Elliptic solutions with bounded f and Holder exterior data at h, h/2."""
    dom, _, dirs, _ = desk
    gamma = 0.3
    g = fl.function_exterior(lambda p: ((p ** 2).sum(1)) ** (gamma / 2.0))
    out = {}
    for h in (H, H / 2):
        grid = fl.build_grid(dom, h)
        problem = EllipticProblem(dom, grid, S, -0.5, g, dirs)
        u, rep = solve_elliptic(problem, tol=1e-8)
        assert rep.converged
        out[h] = u
    return gamma, out


def test_monotone_scheme_soundness(desk):
    rng = rng_for("acc-weights")
    for _ in range(100):
        s = 0.05 + 0.9 * rng.random()
        h_r = 10 ** rng.uniform(-2, 0)
        K = int(rng.integers(2, 200))
        q = fl.make_weights(s, h_r, K)
        assert np.all(q.weights > 0)
    dom, grid, dirs, engine = desk
    worst = 0.0
    for a0, ax, ay in ((0.3, 0.5, -0.2), (-1.0, 0.0, 2.0), (0.0, -1.3, 0.7)):
        g = fl.affine_exterior(a0, ax, ay)
        u = fl.Field.from_function(grid, lambda p: a0 + ax * p[:, 0] + ay * p[:, 1], g)
        worst = max(worst, float(np.max(np.abs(engine.lambda1(u).values))))
    assert worst <= 1e-8
    _report("monotone scheme soundness",
            f"100 weight draws positive; affine residual {worst:.2e} <= 1e-8")


def test_duality(desk):
    dom, grid, dirs, engine = desk
    rng = rng_for("acc-duality")
    closures = [fl.affine_exterior(*rng.normal(size=3)) for _ in range(5)]
    worst = 0.0
    for i in range(50):
        g = closures[i % len(closures)]
        u = fl.Field.from_interior(grid, rng.normal(size=grid.num_interior), g)
        e1 = engine.lambda1(u)
        eN = engine.lambdaN(u.negated())
        gap = float(np.max(np.abs(eN.values + e1.values)))
        worst = max(worst, gap)
        assert np.array_equal(eN.argmin, e1.argmin)
    assert worst <= 1e-12
    _report("duality", f"50 random fields, max |sup(-u) + inf(u)| = {worst:.2e} <= 1e-12")


def test_comparison_principle_parabolic(desk):
    dom, grid, dirs, engine = desk
    rng = rng_for("acc-comparison-parabolic")
    dt = engine.cfl_dt
    worst = -np.inf
    for _ in range(50):
        a0, ax, ay = rng.normal(size=3) * 0.3
        lift = rng.random() * 0.5
        g_lo = fl.affine_exterior(a0, ax, ay)
        g_hi = fl.affine_exterior(a0 + lift, ax, ay)
        base = rng.normal(size=grid.num_interior)
        u = fl.Field.from_interior(grid, base, g_lo)
        v = fl.Field.from_interior(grid, base + rng.random(grid.num_interior), g_hi)
        for _ in range(5):
            u = u.with_interior(u.interior_values() + dt * engine.lambda1(u).values)
            v = v.with_interior(v.interior_values() + dt * engine.lambda1(v).values)
            gap = float(np.max(u.interior_values() - v.interior_values()))
            worst = max(worst, gap)
            assert gap <= 1e-10
    _report("comparison principle (parabolic)",
            f"50 ordered pairs, 5 steps each, max overshoot {worst:.2e} <= 1e-10")


def test_comparison_principle_elliptic(desk):
    dom, grid, dirs, engine = desk
    rng = rng_for("acc-comparison-elliptic")
    worst = -np.inf
    for _ in range(50):
        base_f = rng.normal(size=grid.num_interior)
        gap_f = rng.random(grid.num_interior)
        a0, ax, ay = rng.normal(size=3) * 0.3
        lift = rng.random() * 0.5
        g_lo = fl.affine_exterior(a0, ax, ay)
        g_hi = fl.affine_exterior(a0 + lift, ax, ay)
        u, r1 = solve_elliptic(EllipticProblem(dom, grid, S, base_f, g_lo, dirs),
                               tol=1e-11, engine=engine)
        v, r2 = solve_elliptic(EllipticProblem(dom, grid, S, base_f + gap_f, g_hi, dirs),
                               tol=1e-11, engine=engine, u0=u)
        assert r1.converged and r2.converged
        gap = float(np.max(u.interior_values() - v.interior_values()))
        worst = max(worst, gap)
        assert gap <= 1e-10
    _report("comparison principle (elliptic)",
            f"50 ordered pairs, max overshoot {worst:.2e} <= 1e-10")


def test_strong_maximum_principle(desk):
    dom, grid, dirs, engine = desk
    rng = rng_for("acc-smp")
    g0 = fl.zero_exterior()
    worst_interior_max = -np.inf
    for trial in range(8):
        f = -rng.random(grid.num_interior) * 0.3
        f[rng.random(grid.num_interior) < 0.8] = 0.0
        if trial == 0:
            f[:] = 0.0
        u, rep = solve_elliptic(EllipticProblem(dom, grid, S, f, g0, dirs),
                                tol=1e-11, engine=engine)
        assert rep.converged
        iv = u.interior_values()
        if np.all(f == 0.0):
            assert np.max(np.abs(iv)) <= 1e-11
        else:
            assert np.max(iv) < -1e-12
            worst_interior_max = max(worst_interior_max, float(np.max(iv)))
    _report("strong maximum principle",
            f"zero data -> zero field; else strictly negative "
            f"(least-negative interior value {worst_interior_max:.2e})")


def test_eigenpair_certificate(desk, eig_base, eig_refined, eig_more_dirs,
                               eig_double_domain):
    assert eig_base.residual <= 1e-3
    assert np.max(eig_base.phi.interior_values()) < -1e-10
    d_h = abs(eig_refined.mu - eig_base.mu) / eig_base.mu
    d_m = abs(eig_more_dirs.mu - eig_base.mu) / eig_base.mu
    assert d_h <= 0.02
    assert d_m <= 0.02
    ratio = eig_double_domain.mu / eig_base.mu
    target = 2.0 ** (-2 * S)
    assert abs(ratio - target) <= 0.05 * target
    _report("eigenpair certificate",
            f"mu1 = {eig_base.mu:.4f}, residual {eig_base.residual:.2e} <= 1e-3, "
            f"h/2 drift {d_h:.3%}, 2M drift {d_m:.3%}, "
            f"scaling ratio {ratio:.4f} vs {target:.4f}")


def test_decay_rate_identification(desk, eig_base, decay_run):
    dom, grid, dirs, engine = desk
    for _, snap in decay_run.snapshots:
        assert snap.ravel()[grid.interior_flat].max() <= 1e-10
    fit = fl.fit_decay(decay_run, 0.5)
    ratio = fit.rate / eig_base.mu
    assert abs(ratio - 1.0) <= 0.10
    _report("decay-rate identification",
            f"fitted {fit.rate:.4f} vs mu1 {eig_base.mu:.4f} "
            f"(ratio {ratio:.4f}, R^2 {fit.r_squared:.6f}); solution <= 0 throughout")


def test_finite_time_ordering_affine_data(desk):
    dom, grid, dirs, engine = desk
    g = fl.affine_exterior(0.3, 0.2, -0.1)
    z, zrep = solve_elliptic(EllipticProblem(dom, grid, S, 0.0, g, dirs),
                             tol=1e-10, engine=engine)
    assert zrep.converged
    zi = z.interior_values()
    r2 = (grid.interior_points ** 2).sum(1) / 0.49
    bump = 0.8 * np.maximum(1.0 - r2, 0.0) ** 2
    u = fl.Field.from_interior(grid, zi + bump, g)
    dt = engine.cfl_dt
    t_reached = None
    for i in range(1, 2001):
        u = u.with_interior(u.interior_values() + dt * engine.lambda1(u).values)
        if i % 5 == 0:
            overshoot = float(np.max(u.interior_values() - zi))
            if overshoot <= 1e-6:
                t_reached = i * dt
                break
    assert t_reached is not None
    _report("finite-time ordering (affine data)",
            f"positive part below 1e-6 at t = {t_reached:.3f}")


def test_barrier_suite(holder_solves):
    worst = -np.inf
    constants = {}
    for gamma in (0.1, 0.3, 0.45):
        rep = check_barrier_w(S, gamma, samples=1000, seed=11)
        assert rep.max_violation < 0.0
        assert rep.constant > 0.0
        worst = max(worst, rep.max_violation)
        constants[gamma] = rep.constant
    vrep = check_barrier_v(S, 0.3)
    assert vrep.universal_integral < 0.0

    gamma, sols = holder_solves
    dom = fl.ConvexDomain.ball(1.0)
    g_fun = lambda p: ((p ** 2).sum(1)) ** (gamma / 2.0)
    cs = {}
    for h, u in sols.items():
        pts = u.grid.interior_points
        proj, dist = dom.nearest_boundary(pts)
        gz = g_fun(proj)
        ratio = (gz - u.interior_values()) / dist ** gamma
        cs[h] = max(0.0, float(np.max(ratio)))
    drift = abs(cs[H] - cs[H / 2]) / cs[H / 2]
    assert drift <= 0.20
    _report("barrier suite",
            f"3000 gap-barrier samples all negative (worst {worst:.3f}); "
            f"universal integral {vrep.universal_integral:.4f} < 0; "
            f"boundary constant {cs[H]:.3f} -> {cs[H/2]:.3f} (drift {drift:.1%})")


def test_holder_regularity(holder_solves):
    gamma, sols = holder_solves
    semis = {h: fl.holder_seminorm(u, gamma).seminorm for h, u in sols.items()}
    growth = semis[H / 2] / semis[H]
    assert growth <= 1.10
    _report("Holder regularity",
            f"gamma=0.3 seminorm {semis[H]:.4f} -> {semis[H/2]:.4f} "
            f"(growth {growth:.4f} <= 1.10)")


def test_sandwich_and_lower_bound(desk, decay_run, eig_enlarged):
    dom, grid, dirs, engine = desk
    g0 = fl.zero_exterior()
    z0 = fl.Field.from_interior(grid, np.zeros(grid.num_interior), g0)
    rep = fl.asymp_sandwich_check(decay_run, z0, eig_enlarged)
    assert math.isfinite(rep.c_lower) and math.isfinite(rep.c_upper)

    # lower-bound construction: slab data from the 1D segment eigenfunction
    r = 0.95
    seg = segment_eigenpair_1d(r, S, H, tol=1e-7)
    g = slab_from_segment(seg)
    z, zrep = solve_elliptic(EllipticProblem(dom, grid, S, 0.0, g, dirs),
                             tol=1e-9, engine=engine)
    assert zrep.converged
    u0 = fl.Field.from_function(grid, lambda p: seg.interp(p[:, 0]), g)
    problem = ParabolicProblem(dom, grid, S, dirs, u0, g, 6.0 / seg.mu)
    trace = evolve(problem, sample_every=5, snapshot_every=5, engine=engine)

    pts = grid.interior_points
    i0 = int(np.argmin((pts ** 2).sum(1)))
    flat = grid.interior_flat[i0]
    z_center = z.values.ravel()[flat]
    times = np.array([t for t, _ in trace.snapshots])
    vals = np.array([snap.ravel()[flat] - z_center for _, snap in trace.snapshots])
    pos = vals > 0
    probe = ParabolicTrace(times[pos], vals[pos], trace.dt)
    fit = fl.fit_decay(probe, 0.5)
    ratio = fit.rate / seg.mu
    assert abs(ratio - 1.0) <= 0.10
    # the fitted bound u(center, t) - z(center) >= K1 e^(-K2 t) with K1 > 0
    k1 = float(np.min(vals[pos] * np.exp(fit.rate * times[pos])))
    assert k1 > 0.0
    _report("sandwich + lower bound",
            f"sandwich constants C1={rep.c_lower:.3f}, C2={rep.c_upper:.3f} finite; "
            f"center rate {fit.rate:.4f} vs segment {seg.mu:.4f} "
            f"(ratio {ratio:.4f}), K1={k1:.4f} > 0")
