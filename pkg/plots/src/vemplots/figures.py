"""Figure rendering for the wave-solver CSV artifacts.

Everything here is postprocessing: the renderers read the documented
CSV layouts (errors.csv, slice_*.csv, snapshot_*.csv), draw, and write
an image.  No physics is recomputed; every number on a figure traces
back to a CSV field.  Output is deterministic for fixed inputs: the
SVG hash salt is pinned, timestamps are stripped from the metadata,
and the backend version is recorded in their place.
"""

from __future__ import annotations

import os
import warnings
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

ERRORS_HEADER = "h_max,h_mean,tau,E1,E0,seconds"
SLICE_HEADER = "s,u,z"
SNAPSHOT_HEADER = "x,y,u,z"

# pinned salt makes SVG element ids reproducible run to run
_HASH_SALT = "vemplots"


class PlotError(Exception):
    """Bad or missing input data; the CLI maps this to a nonzero exit."""


@dataclass
class FigureSpec:
    """One figure request.

    kind selects the renderer: "convergence" wants a single errors.csv
    in `inputs`; "slice" wants the trapezoidal-scheme CSV followed by
    the composite-scheme CSV; "snapshot" wants one snapshot CSV.  The
    reference slopes on convergence figures are k and k+1.
    """

    kind: str
    inputs: tuple
    out: str
    k: int | None = None
    xlabel: str | None = None
    ylabel: str | None = None
    field_name: str = "u"


@dataclass
class RenderResult:
    """What was drawn: output path, the plotted series, and the scalar
    annotations (fitted slopes or total variations)."""

    out: str
    series: dict
    annotations: dict = field(default_factory=dict)
    backend: str = f"matplotlib {matplotlib.__version__}"


def _read_csv(path: str, header: str) -> np.ndarray:
    if not os.path.exists(path):
        raise PlotError(f"input file not found: {path}")
    with open(path) as fh:
        first = fh.readline().strip()
        if first != header:
            raise PlotError(f"{path}: expected header '{header}', got '{first}'")
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")  # emptiness is reported below
                data = np.loadtxt(fh, delimiter=",", ndmin=2)
        except ValueError as exc:
            raise PlotError(f"{path}: unparsable data ({exc})") from None
    if data.size == 0:
        raise PlotError(f"{path}: no data rows")
    if data.shape[1] != header.count(",") + 1:
        raise PlotError(f"{path}: expected {header.count(',') + 1} columns")
    return data


def read_errors(path: str) -> dict:
    """Columns of an errors.csv as a dict of arrays."""
    data = _read_csv(path, ERRORS_HEADER)
    names = ERRORS_HEADER.split(",")
    return {name: data[:, j] for j, name in enumerate(names)}


def read_slice(path: str):
    data = _read_csv(path, SLICE_HEADER)
    return data[:, 0], data[:, 1], data[:, 2]


def read_snapshot(path: str):
    data = _read_csv(path, SNAPSHOT_HEADER)
    return data[:, 0], data[:, 1], data[:, 2], data[:, 3]


def fitted_slope(h: np.ndarray, err: np.ndarray) -> float:
    """Log-log slope through the end points of a refinement curve.

    This equals the average of the per-refinement log2 rates that the
    solver tabulates in rates.csv, so the figure annotation and the
    table agree by construction.  A least-squares fit would weight the
    interior points differently and drift from the tabulated rates.
    """
    h = np.asarray(h, dtype=float)
    err = np.asarray(err, dtype=float)
    if len(h) < 2:
        raise PlotError("need at least two mesh sizes to fit a slope")
    if np.any(err <= 0.0) or np.any(h <= 0.0):
        raise PlotError("errors and mesh sizes must be positive for a log-log fit")
    return float(np.log(err[0] / err[-1]) / np.log(h[0] / h[-1]))


def total_variation(values: np.ndarray) -> float:
    return float(np.abs(np.diff(values)).sum())


def _save(fig, out: str) -> None:
    ext = os.path.splitext(out)[1].lower()
    version = f"matplotlib {matplotlib.__version__}"
    if ext == ".svg":
        metadata = {"Date": None, "Creator": version}
    elif ext == ".pdf":
        metadata = {"CreationDate": None, "Creator": version}
    elif ext == ".png":
        metadata = {"Software": version}
    else:
        raise PlotError(f"unsupported image format '{ext}' (use .svg, .pdf or .png)")
    directory = os.path.dirname(out)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with plt.rc_context({"svg.hashsalt": _HASH_SALT}):
        fig.savefig(out, metadata=metadata, dpi=150)
    plt.close(fig)


def render_convergence(spec: FigureSpec) -> RenderResult:
    """Log-log error-vs-h curves, one per time step, with dashed h^k and
    h^(k+1) reference slopes and the fitted slope of the smallest-step
    curve annotated on each panel."""
    if spec.k is None:
        raise PlotError("convergence figures need the polynomial degree k")
    (path,) = spec.inputs
    cols = read_errors(path)
    taus = np.unique(cols["tau"])
    tau_min = taus.min()

    fig, axes = plt.subplots(1, 2, figsize=(9.0, 3.8))
    slopes = {}
    series = {}
    for ax, norm, ref_order in ((axes[0], "E1", spec.k), (axes[1], "E0", spec.k + 1)):
        for tau in taus:
            sel = cols["tau"] == tau
            order = np.argsort(cols["h_mean"][sel])[::-1]  # coarse to fine
            h = cols["h_mean"][sel][order]
            e = cols[norm][sel][order]
            ax.loglog(h, e, marker="o", label=f"tau = {tau:g}")
            if tau == tau_min:
                if len(np.unique(h)) < 2:
                    raise PlotError(
                        f"{path}: need at least two mesh sizes at the smallest "
                        f"time step to plot convergence"
                    )
                slopes[norm] = fitted_slope(h, e)
                series[norm] = (h, e)
                # dashed reference through the finest point, shifted down
                ref = 0.6 * e[-1] * (h / h[-1]) ** ref_order
                ax.loglog(h, ref, "k--", linewidth=0.8, label=f"h^{ref_order}")
                ax.annotate(
                    f"slope {slopes[norm]:.2f}",
                    xy=(h[len(h) // 2], e[len(h) // 2]),
                    textcoords="offset points",
                    xytext=(8, 4),
                    fontsize=9,
                )
        ax.set_xlabel(spec.xlabel or "mesh size h")
        ax.set_ylabel(spec.ylabel or f"relative {norm} error")
        ax.legend(fontsize=8)
        ax.grid(True, which="both", linewidth=0.3, alpha=0.5)
    fig.tight_layout()
    _save(fig, spec.out)
    return RenderResult(spec.out, series, slopes)


def render_slice(spec: FigureSpec) -> RenderResult:
    """Overlay the two schemes' diagonal profiles: displacement on the
    top panel, velocity below, with the velocity total variations
    (recomputed from the CSV columns) printed on the figure."""
    newmark_path, bathe_path = spec.inputs
    s_n, u_n, z_n = read_slice(newmark_path)
    s_b, u_b, z_b = read_slice(bathe_path)
    if len(s_n) != len(s_b) or not np.allclose(s_n, s_b, rtol=0.0, atol=1e-12):
        raise PlotError(
            f"sample grids differ between {newmark_path} and {bathe_path}"
        )

    fig, (ax_u, ax_z) = plt.subplots(2, 1, figsize=(7.0, 6.0), sharex=True)
    ax_u.plot(s_n, u_n, label="newmark")
    ax_u.plot(s_b, u_b, label="bathe")
    ax_u.set_ylabel(spec.ylabel or "u")
    ax_u.legend(fontsize=8)
    tv = {"newmark": total_variation(z_n), "bathe": total_variation(z_b)}
    ax_z.plot(s_n, z_n, label=f"newmark (TV {tv['newmark']:.4g})")
    ax_z.plot(s_b, z_b, label=f"bathe (TV {tv['bathe']:.4g})")
    ax_z.set_ylabel("z")
    ax_z.set_xlabel(spec.xlabel or "diagonal arc length")
    ax_z.legend(fontsize=8)
    fig.tight_layout()
    _save(fig, spec.out)
    series = {
        "s": s_n,
        "u_newmark": u_n,
        "u_bathe": u_b,
        "z_newmark": z_n,
        "z_bathe": z_b,
    }
    return RenderResult(spec.out, series, tv)


def render_snapshot(spec: FigureSpec) -> RenderResult:
    """Scattered-field heatmap of one snapshot CSV (u by default)."""
    (path,) = spec.inputs
    x, y, u, z = read_snapshot(path)
    if spec.field_name not in ("u", "z"):
        raise PlotError(f"unknown snapshot field '{spec.field_name}'")
    values = u if spec.field_name == "u" else z
    if len(x) < 3:
        raise PlotError(f"{path}: too few points for a heatmap")

    fig, ax = plt.subplots(figsize=(5.2, 4.4))
    im = ax.tripcolor(x, y, values, shading="gouraud")
    ax.set_aspect("equal")
    ax.set_xlabel(spec.xlabel or "x")
    ax.set_ylabel(spec.ylabel or "y")
    fig.colorbar(im, ax=ax, label=spec.field_name)
    fig.tight_layout()
    _save(fig, spec.out)
    return RenderResult(spec.out, {"x": x, "y": y, spec.field_name: values})


_RENDERERS = {
    "convergence": render_convergence,
    "slice": render_slice,
    "snapshot": render_snapshot,
}


def render(spec: FigureSpec) -> RenderResult:
    if spec.kind not in _RENDERERS:
        raise PlotError(f"unknown figure kind '{spec.kind}'")
    return _RENDERERS[spec.kind](spec)
