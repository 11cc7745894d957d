"""Experiment orchestration: config parsing, runs, CSV/JSON artifacts.

Subcommands: elliptic | parabolic | eigen | barrier | regularity | decay |
lowerbound | envelope.  Every run writes report.json plus CSV data files
into the output directory; all randomness flows from the single seed, so a
repeated run with the same config is byte-identical.
"""

import argparse
import json
import math
import sys
import time
from dataclasses import dataclass, field as dfield, asdict
from pathlib import Path

import numpy as np

from .errors import ConfigError, FracLabError, NonpositiveNorms
from .geometry import ConvexDomain, build_grid
from .operator import (
    DirectionSet,
    Field,
    OperatorEngine,
    affine_exterior,
    constant_exterior,
    function_exterior,
    zero_exterior,
)
from .elliptic import EllipticProblem, is_s_convex, solve_elliptic
from .parabolic import ParabolicProblem, evolve
from .spectral import principal_eigenpair, segment_eigenpair_1d, slab_from_segment
from .analysis import check_barrier_v, check_barrier_w, fit_decay, holder_seminorm

SUBCOMMANDS = ("elliptic", "parabolic", "eigen", "barrier", "regularity",
               "decay", "lowerbound", "envelope")

_DEFAULTS = dict(s=0.75, gamma=0.3, h=0.05, directions=64, seed=42,
                 t_end=1.2, tol=None, a=1.0, b=None, domain="ball",
                 rotation=0.0, g="zero", f="neg-one", out="out",
                 window_fraction=0.5, sample_every=10)


@dataclass
class RunConfig:
    subcommand: str
    domain: str = "ball"
    a: float = 1.0
    b: float | None = None
    rotation: float = 0.0
    s: float = 0.75
    gamma: float = 0.3
    h: float = 0.05
    directions: int = 64
    tol: float | None = None
    t_end: float = 1.2
    seed: int = 42
    out: str = "out"
    g: str = "zero"
    f: str = "neg-one"
    window_fraction: float = 0.5
    sample_every: int = 10

    def domain_obj(self):
        b = self.a if self.b is None else self.b
        if self.domain == "ball":
            return ConvexDomain.ball(self.a)
        return ConvexDomain.ellipse(self.a, b, rotation=self.rotation)

    def to_dict(self):
        d = asdict(self)
        d["domain_spec"] = self.domain_obj().to_dict()
        return d


def _parse_value(raw):
    raw = raw.strip()
    for cast in (int, float):
        try:
            return cast(raw)
        except ValueError:
            pass
    return raw


def _read_config_file(path):
    out = {}
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line without '=': {line!r}")
        key, val = line.split("=", 1)
        out[key.strip().replace("-", "_")] = _parse_value(val)
    return out


def _build_parser():
    ap = argparse.ArgumentParser(prog="fraclab", description=__doc__)
    sub = ap.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", default=None, help="flat key=value file; flags override")
        p.add_argument("--domain", choices=("ball", "ellipse"), default=None)
        p.add_argument("--a", type=float, default=None)
        p.add_argument("--b", type=float, default=None)
        p.add_argument("--rotation", type=float, default=None)
        p.add_argument("--s", type=float, default=None)
        p.add_argument("--gamma", type=float, default=None)
        p.add_argument("--h", type=float, default=None)
        p.add_argument("--directions", type=int, default=None)
        p.add_argument("--t-end", dest="t_end", type=float, default=None)
        p.add_argument("--tol", type=float, default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", default=None)
        p.add_argument("--g", default=None, help="exterior data: zero|one|affine|quadratic|cusp")
        p.add_argument("--f", default=None, help="forcing: zero|neg-one|one")
        p.add_argument("--window-fraction", dest="window_fraction", type=float, default=None)
        p.add_argument("--sample-every", dest="sample_every", type=int, default=None)
    return ap


def parse_config(argv):
    """Parse flags (plus optional config file) into a validated RunConfig."""
    ns = _build_parser().parse_args(argv)
    values = dict(_DEFAULTS)
    if ns.config:
        values.update(_read_config_file(ns.config))
    for key in values:
        flag = getattr(ns, key, None)
        if flag is not None:
            values[key] = flag
    cfg = RunConfig(subcommand=ns.subcommand, **values)
    _validate(cfg)
    return cfg


def _validate(cfg):
    if not (0.0 < cfg.s < 1.0):
        raise ConfigError(f"s must lie in (0,1), got {cfg.s}")
    if cfg.h <= 0.0:
        raise ConfigError(f"h must be positive, got {cfg.h}")
    if cfg.directions < 8:
        raise ConfigError(f"directions must be >= 8, got {cfg.directions}")
    if cfg.a <= 0.0 or (cfg.b is not None and not (cfg.a >= cfg.b > 0)):
        raise ConfigError("semi-axes must satisfy a >= b > 0")
    if cfg.t_end <= 0.0:
        raise ConfigError(f"t_end must be positive, got {cfg.t_end}")
    if cfg.tol is not None and cfg.tol <= 0.0:
        raise ConfigError(f"tol must be positive, got {cfg.tol}")
    if not (0.0 < cfg.window_fraction <= 1.0):
        raise ConfigError("window_fraction must lie in (0, 1]")
    if cfg.subcommand in ("barrier", "regularity"):
        hi = 2.0 * cfg.s - 1.0
        if not (0.0 < cfg.gamma < hi):
            raise ConfigError(
                f"{cfg.subcommand} needs gamma in (0, 2s-1) = (0, {hi:.3f}), got {cfg.gamma}"
            )
    if cfg.subcommand == "regularity" and cfg.s <= 0.5:
        raise ConfigError("regularity run needs s > 1/2")


def _closure(name, cfg):
    if name == "zero":
        return zero_exterior()
    if name == "one":
        return constant_exterior(1.0)
    if name == "affine":
        return affine_exterior(0.3, 0.5, -0.2)
    if name == "quadratic":
        return function_exterior(lambda p: p[:, 0] ** 2 + p[:, 1] ** 2)
    if name == "cusp":
        gamma = cfg.gamma
        return function_exterior(lambda p: (p[:, 0] ** 2 + p[:, 1] ** 2) ** (gamma / 2.0))
    raise ConfigError(f"unknown exterior data {name!r}")


def _forcing(name):
    if name == "zero":
        return 0.0
    if name == "neg-one":
        return -1.0
    if name == "one":
        return 1.0
    raise ConfigError(f"unknown forcing {name!r}")


def _fmt(x):
    return f"{x:.12g}"


def write_grid_csv(path, grid, values):
    vals = np.asarray(values, dtype=float).ravel()
    pts = grid.node_points()
    lines = ["x,y,value"]
    lines += [f"{_fmt(p[0])},{_fmt(p[1])},{_fmt(v)}" for p, v in zip(pts, vals)]
    Path(path).write_text("\n".join(lines) + "\n")


def write_trace_csv(path, times, norms):
    lines = ["t,sup_norm"]
    lines += [f"{_fmt(t)},{_fmt(v)}" for t, v in zip(times, norms)]
    Path(path).write_text("\n".join(lines) + "\n")


def _report(outdir, cfg, results, failures, units=None):
    payload = {
        "subcommand": cfg.subcommand,
        "config": cfg.to_dict(),
        "results": results,
        "failures": failures,
        "units": units or {
            "lengths": "dimensionless domain units",
            "operator values": "value * length^(-2s)",
            "rates": "inverse time",
        },
    }
    (Path(outdir) / "report.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _bump(grid, center=(0.0, 0.0), rho=0.7, sign=-1.0):
    pts = grid.interior_points
    r2 = ((pts[:, 0] - center[0]) ** 2 + (pts[:, 1] - center[1]) ** 2) / rho ** 2
    return sign * np.maximum(1.0 - r2, 0.0) ** 2


def run(cfg):
    """Execute the configured experiment. Returns the process exit status."""
    outdir = Path(cfg.out)
    outdir.mkdir(parents=True, exist_ok=True)
    np.random.seed(cfg.seed)  # module-level fallback; experiments use default_rng
    t0 = time.perf_counter()
    failures = []
    results = {}
    try:
        handler = _HANDLERS[cfg.subcommand]
        results = handler(cfg, outdir, failures)
    except FracLabError as exc:
        failures.append(f"{type(exc).__name__}: {exc}")
    results["wall_time_s"] = round(time.perf_counter() - t0, 3)
    _report(outdir, cfg, results, failures)
    return 0 if not failures else 2


def _setup(cfg):
    dom = cfg.domain_obj()
    grid = build_grid(dom, cfg.h)
    dirs = DirectionSet(cfg.directions)
    return dom, grid, dirs


def _run_elliptic(cfg, outdir, failures):
    dom, grid, dirs = _setup(cfg)
    g = _closure(cfg.g, cfg)
    problem = EllipticProblem(dom, grid, cfg.s, _forcing(cfg.f), g, dirs)
    u, rep = solve_elliptic(problem, tol=cfg.tol)
    write_grid_csv(outdir / "solution.csv", grid, u.values)
    if not rep.converged:
        failures.append(f"NotConverged: residual {rep.residual:.3e}")
    from .operator import bilinear

    center_val = float(bilinear(grid, u.values, np.array([dom.center]))[0])
    return {
        "residual": rep.residual,
        "iterations": rep.iterations,
        "method": rep.method,
        "converged": rep.converged,
        "value_at_center": center_val,
    }


def _run_envelope(cfg, outdir, failures):
    dom, grid, dirs = _setup(cfg)
    name = cfg.g if cfg.g != "zero" else "quadratic"
    g = _closure(name, cfg)
    problem = EllipticProblem(dom, grid, cfg.s, 0.0, g, dirs)
    z, rep = solve_elliptic(problem, tol=cfg.tol)
    ok, viols = is_s_convex(z, problem.order, dirs, tol=10.0 * (cfg.tol or 1e-6))
    write_grid_csv(outdir / "solution.csv", grid, z.values)
    if not rep.converged:
        failures.append(f"NotConverged: residual {rep.residual:.3e}")
    if not ok:
        failures.append(f"EnvelopeNotConvex: {len(viols)} nodes")
    return {
        "residual": rep.residual,
        "iterations": rep.iterations,
        "converged": rep.converged,
        "s_convex": ok,
        "violations": len(viols),
        "exterior_data": name,
    }


def _run_parabolic(cfg, outdir, failures):
    dom, grid, dirs = _setup(cfg)
    g = _closure(cfg.g, cfg)
    u0 = Field.from_interior(grid, _bump(grid, rho=0.7 * dom.a), g)
    problem = ParabolicProblem(dom, grid, cfg.s, dirs, u0, g, cfg.t_end)
    trace = evolve(problem, sample_every=cfg.sample_every)
    write_trace_csv(outdir / "trace.csv", trace.times, trace.sup_norms)
    return {"dt": trace.dt, "steps": int(round(trace.times[-1] / trace.dt)),
            "final_sup_norm": float(trace.sup_norms[-1])}


def _run_eigen(cfg, outdir, failures):
    dom, grid, dirs = _setup(cfg)
    pair = principal_eigenpair(dom, grid, cfg.s, dirs, tol=cfg.tol or 1e-4)
    write_grid_csv(outdir / "phi.csv", grid, pair.phi.values)
    return {
        "mu": pair.mu,
        "residual": pair.residual,
        "iterations": pair.iterations,
        "converged": pair.converged,
    }


def _run_barrier(cfg, outdir, failures):
    rep = check_barrier_w(cfg.s, cfg.gamma, samples=1000, seed=cfg.seed)
    vrep = check_barrier_v(cfg.s, cfg.gamma)
    lines = ["x1,x2,angle,d,value,bound"]
    for p, th, d, v, b in zip(rep.points, rep.thetas, rep.gaps, rep.values, rep.bound_values):
        ang = math.atan2(th[1], th[0])
        lines.append(",".join(_fmt(t) for t in (p[0], p[1], ang, d, v, b)))
    (outdir / "barrier.csv").write_text("\n".join(lines) + "\n")
    if rep.max_violation >= 0.0:
        failures.append(f"BarrierSignViolation: max value {rep.max_violation:.3e}")
    if vrep.universal_integral >= 0.0:
        failures.append("UniversalIntegralNonnegative")
    return {
        "gamma": cfg.gamma,
        "c2": rep.constant,
        "max_value": rep.max_violation,
        "samples": len(rep.values),
        "universal_integral": vrep.universal_integral,
    }


def _run_regularity(cfg, outdir, failures):
    dom, grid, dirs = _setup(cfg)
    g = _closure("cusp", cfg)
    semis = []
    for h in (cfg.h, cfg.h / 2.0):
        gr = build_grid(dom, h)
        problem = EllipticProblem(dom, gr, cfg.s, _forcing(cfg.f), g, dirs)
        u, rep = solve_elliptic(problem, tol=cfg.tol)
        if not rep.converged:
            failures.append(f"NotConverged at h={h}")
        semis.append((h, holder_seminorm(u, cfg.gamma).seminorm))
    lines = ["h,seminorm"] + [f"{_fmt(h)},{_fmt(sm)}" for h, sm in semis]
    (outdir / "refine.csv").write_text("\n".join(lines) + "\n")
    ratio = semis[1][1] / semis[0][1]
    if ratio > 1.1:
        failures.append(f"SeminormGrowth: ratio {ratio:.3f} > 1.1")
    return {"gamma": cfg.gamma, "seminorm_h": semis[0][1],
            "seminorm_h2": semis[1][1], "ratio": ratio}


def _run_decay(cfg, outdir, failures):
    dom, grid, dirs = _setup(cfg)
    pair = principal_eigenpair(dom, grid, cfg.s, dirs, tol=cfg.tol or 1e-4)
    write_grid_csv(outdir / "phi.csv", grid, pair.phi.values)
    g0 = zero_exterior()
    u0 = Field.from_interior(grid, _bump(grid, rho=0.7 * dom.a), g0)
    problem = ParabolicProblem(dom, grid, cfg.s, dirs, u0, g0, cfg.t_end)
    trace = evolve(problem, sample_every=cfg.sample_every)
    write_trace_csv(outdir / "trace.csv", trace.times, trace.sup_norms)
    try:
        fit = fit_decay(trace, cfg.window_fraction)
    except NonpositiveNorms as exc:
        failures.append(f"NonpositiveNorms: extinction at t={exc.extinction_time}")
        return {"mu1": pair.mu, "extinction_time": exc.extinction_time}
    ratio = fit.rate / pair.mu
    if abs(ratio - 1.0) > 0.10:
        failures.append(f"DecayRateMismatch: fitted/mu1 = {ratio:.4f}")
    return {
        "mu1": pair.mu,
        "eigen_residual": pair.residual,
        "fitted_rate": fit.rate,
        "ratio": ratio,
        "r_squared": fit.r_squared,
        "fit_window": [fit.t_start, fit.t_end],
    }


def _run_lowerbound(cfg, outdir, failures):
    dom, grid, dirs = _setup(cfg)
    r = 0.95 * dom.a
    seg = segment_eigenpair_1d(r, cfg.s, cfg.h, tol=1e-6)
    g = slab_from_segment(seg)
    problem0 = EllipticProblem(dom, grid, cfg.s, 0.0, g, dirs)
    z, zrep = solve_elliptic(problem0, tol=cfg.tol)
    u0 = Field.from_function(grid, lambda p: seg.interp(p[:, 0]), g)
    t_end = min(cfg.t_end, 6.0 / seg.mu)
    problem = ParabolicProblem(dom, grid, cfg.s, dirs, u0, g, t_end)
    trace = evolve(problem, sample_every=cfg.sample_every,
                   snapshot_every=cfg.sample_every)
    # deviation from the stationary state at the node nearest the center
    pts = grid.interior_points
    i0 = int(np.argmin((pts[:, 0] - dom.center[0]) ** 2 + (pts[:, 1] - dom.center[1]) ** 2))
    flat = grid.interior_flat[i0]
    z0 = z.values.ravel()[flat]
    times = np.array([t for t, _ in trace.snapshots])
    vals = np.array([snap.ravel()[flat] - z0 for _, snap in trace.snapshots])
    write_trace_csv(outdir / "trace.csv", times, vals)
    pos = vals > 0
    if pos.sum() < 10:
        failures.append("LowerBoundProbeNonpositive")
        return {"mu_segment": seg.mu}
    from .parabolic import ParabolicTrace

    probe = ParabolicTrace(times[pos], vals[pos], trace.dt)
    fit = fit_decay(probe, cfg.window_fraction)
    ratio = fit.rate / seg.mu
    if abs(ratio - 1.0) > 0.10:
        failures.append(f"LowerBoundRateMismatch: fitted/mu_segment = {ratio:.4f}")
    return {
        "r": r,
        "mu_segment": seg.mu,
        "fitted_rate": fit.rate,
        "ratio": ratio,
        "z_at_center": float(z0),
        "z_residual": zrep.residual,
    }


_HANDLERS = {
    "elliptic": _run_elliptic,
    "envelope": _run_envelope,
    "parabolic": _run_parabolic,
    "eigen": _run_eigen,
    "barrier": _run_barrier,
    "regularity": _run_regularity,
    "decay": _run_decay,
    "lowerbound": _run_lowerbound,
}


def main(argv=None):
    try:
        cfg = parse_config(argv if argv is not None else sys.argv[1:])
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    status = run(cfg)
    report = Path(cfg.out) / "report.json"
    print(f"{cfg.subcommand}: {'ok' if status == 0 else 'FAILED'} -> {report}")
    return status


if __name__ == "__main__":
    sys.exit(main())
