"""Figure pipeline for the polygonal wave solver's CSV artifacts."""

from .figures import (
    FigureSpec,
    PlotError,
    RenderResult,
    fitted_slope,
    read_errors,
    read_slice,
    read_snapshot,
    render,
    render_convergence,
    render_slice,
    render_snapshot,
    total_variation,
)

__all__ = [
    "FigureSpec",
    "PlotError",
    "RenderResult",
    "fitted_slope",
    "read_errors",
    "read_slice",
    "read_snapshot",
    "render",
    "render_convergence",
    "render_slice",
    "render_snapshot",
    "total_variation",
]
