"""Render one figure per request from on-disk run artifacts."""

import json
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

KINDS = ("decay", "eigenfunction", "barrier", "regularity")


class MissingArtifact(Exception):
    """A required CSV/JSON input file is absent."""


class ParseError(Exception):
    """An input file exists but does not match its documented format."""


@dataclass(frozen=True)
class FigureRequest:
    artifact_dir: str
    kind: str
    out_path: str

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ParseError(f"unknown figure kind {self.kind!r}; expected one of {KINDS}")


def _require(path):
    if not Path(path).is_file():
        raise MissingArtifact(f"missing artifact {path}")
    return Path(path)


def _read_csv(path, columns):
    raw = _require(path).read_text().strip().splitlines()
    if not raw or raw[0].split(",") != list(columns):
        raise ParseError(f"{path}: expected header {','.join(columns)}")
    try:
        data = np.array([[float(v) for v in line.split(",")] for line in raw[1:]])
    except ValueError as exc:
        raise ParseError(f"{path}: non-numeric row ({exc})") from exc
    if data.ndim != 2 or data.shape[1] != len(columns):
        raise ParseError(f"{path}: ragged rows")
    return data


def _read_report(dirpath):
    path = _require(Path(dirpath) / "report.json")
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc})") from exc


def _decay_figure(dirpath):
    data = _read_csv(Path(dirpath) / "trace.csv", ("t", "sup_norm"))
    report = _read_report(dirpath)
    results = report.get("results", {})
    mu = results.get("mu1")
    fig, ax = plt.subplots(figsize=(6, 4))
    t, y = data[:, 0], data[:, 1]
    pos = y > 0
    ax.semilogy(t[pos], y[pos], marker=".", lw=1.2, label="sup-norm trace")
    if mu is not None and pos.sum() >= 2:
        # reference slope anchored at the start of the trailing window
        k0 = int(np.searchsorted(t[pos], 0.5 * t[pos][-1]))
        k0 = min(k0, pos.sum() - 2)
        t_ref = t[pos][k0:]
        y_ref = y[pos][k0] * np.exp(-mu * (t_ref - t_ref[0]))
        ax.semilogy(t_ref, y_ref, "--", lw=1.5,
                    label=f"reference slope exp(-{mu:.3f} t)")
    ax.set_xlabel("t")
    ax.set_ylabel("||u - z||_inf")
    ax.legend()
    fitted = results.get("fitted_rate")
    title = "exponential decay"
    if fitted is not None:
        title += f" (fitted rate {fitted:.3f})"
    ax.set_title(title)
    fig.tight_layout()
    return fig


def _eigenfunction_figure(dirpath):
    data = _read_csv(Path(dirpath) / "phi.csv", ("x", "y", "value"))
    xs = np.unique(data[:, 0])
    ys = np.unique(data[:, 1])
    if len(xs) * len(ys) != len(data):
        raise ParseError("phi.csv does not cover a full rectangular grid")
    order = np.lexsort((data[:, 1], data[:, 0]))
    grid = data[order, 2].reshape(len(xs), len(ys))
    vmax = float(np.max(np.abs(grid)))
    vmax = vmax if vmax > 0 else 1.0
    fig, ax = plt.subplots(figsize=(5.4, 4.6))
    mesh = ax.pcolormesh(xs, ys, grid.T, cmap="RdBu_r", vmin=-vmax, vmax=vmax,
                         shading="nearest")
    fig.colorbar(mesh, ax=ax, label="phi")
    ax.set_aspect("equal")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_title("principal eigenfunction")
    fig.tight_layout()
    return fig


def _barrier_figure(dirpath):
    data = _read_csv(Path(dirpath) / "barrier.csv",
                     ("x1", "x2", "angle", "d", "value", "bound"))
    d, val, bound = data[:, 3], data[:, 4], data[:, 5]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.scatter(d, val, s=6, alpha=0.5, label="ray integrals")
    order = np.argsort(d)
    ax.plot(d[order], bound[order], color="crimson", lw=1.5,
            label="fitted power-law bound")
    ax.axhline(0.0, color="black", lw=0.8)
    ax.set_xlabel("boundary gap d(x)")
    ax.set_ylabel("ray integral")
    ax.set_yscale("symlog")
    ax.legend()
    ax.set_title("gap-barrier negativity")
    fig.tight_layout()
    return fig


def _regularity_figure(dirpath):
    data = _read_csv(Path(dirpath) / "refine.csv", ("h", "seminorm"))
    fig, ax = plt.subplots(figsize=(5.4, 4))
    hs, sem = data[:, 0], data[:, 1]
    ax.plot(hs, sem, marker="o")
    for h, v in zip(hs, sem):
        ax.annotate(f"{v:.3f}", (h, v), textcoords="offset points", xytext=(4, 6))
    if len(sem) >= 2 and sem[0] != 0:
        ax.set_title(f"Holder seminorm under refinement (ratio {sem[-1] / sem[0]:.3f})")
    else:
        ax.set_title("Holder seminorm under refinement")
    ax.set_xlabel("h")
    ax.set_ylabel("seminorm")
    ax.invert_xaxis()
    fig.tight_layout()
    return fig


_BUILDERS = {
    "decay": _decay_figure,
    "eigenfunction": _eigenfunction_figure,
    "barrier": _barrier_figure,
    "regularity": _regularity_figure,
}


def build_figure(kind, artifact_dir):
    """Construct (and return) the matplotlib figure for one artifact dir."""
    if kind not in KINDS:
        raise ParseError(f"unknown figure kind {kind!r}")
    if not Path(artifact_dir).is_dir():
        raise MissingArtifact(f"artifact directory {artifact_dir} does not exist")
    return _BUILDERS[kind](artifact_dir)


def render(request):
    """Write the requested figure; returns the output path."""
    fig = build_figure(request.kind, request.artifact_dir)
    out = Path(request.out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return str(out)
