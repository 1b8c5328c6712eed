"""Static figures for CLI reports, rendered off-screen to PNG files.

Figures are built on :class:`matplotlib.figure.Figure` directly, so no
global pyplot state or display backend is involved.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

_FLOOR = 1e-17  # keeps exact zeros visible on log axes


def _save(fig, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    FigureCanvasAgg(fig)
    fig.savefig(path, dpi=120, bbox_inches="tight")
    return path


def _bar_log(ax, labels, values, tol):
    vals = np.maximum(np.asarray(values, dtype=float), _FLOOR)
    colors = ["tab:green" if v < tol else "tab:red" for v in values]
    ax.bar(range(len(vals)), vals, color=colors)
    ax.set_xticks(range(len(vals)))
    ax.set_xticklabels(labels, rotation=30, ha="right")
    ax.set_yscale("log")
    ax.axhline(tol, color="k", lw=0.8, ls="--", label=f"tolerance {tol:.0e}")
    ax.legend(loc="upper left", fontsize=8)


def residual_bars(residuals, tol, path, title):
    """Bar chart of named residuals on a log scale with the pass threshold."""
    fig = Figure(figsize=(6.0, 3.6))
    ax = fig.add_subplot()
    _bar_log(ax, list(residuals), list(residuals.values()), tol)
    ax.set_ylabel("max-norm residual")
    ax.set_title(title)
    return _save(fig, path)


def spectral_sweep(ts, curvatures, agreements, tol, path):
    fig = Figure(figsize=(6.0, 3.6))
    ax = fig.add_subplot()
    ax.semilogy(ts, np.maximum(curvatures, _FLOOR), "o-", label="curvature of d_t")
    ax.semilogy(ts, np.maximum(agreements, _FLOOR), "s--", label="route disagreement")
    ax.axhline(tol, color="k", lw=0.8, ls=":", label="tolerance")
    ax.set_xlabel("t")
    ax.set_ylabel("max-norm")
    ax.legend(fontsize=8)
    ax.set_title("spectral family")
    return _save(fig, path)


def surface_chart(points, path, title, stride=5):
    """Wireframe of an affine chart ``(ny, nx, 3)``."""
    fig = Figure(figsize=(5.5, 5.0))
    ax = fig.add_subplot(projection="3d")
    X, Y, Z = (points[..., k] for k in range(3))
    ax.plot_wireframe(X, Y, Z, rstride=stride, cstride=stride, linewidth=0.5, color="tab:blue")
    ax.set_title(title)
    return _save(fig, path)


def metric_panels(grid, g, K, T, path):
    """Heat maps of the metric entries, Gaussian curvature and Chebyshev norm."""
    fig = Figure(figsize=(10.0, 6.0))
    extent = (grid.xs[0], grid.xs[-1], grid.ys[0], grid.ys[-1])
    panels = [("g_11", g[..., 0, 0]), ("g_12", g[..., 0, 1]), ("g_22", g[..., 1, 1]),
              ("Gaussian curvature", K), ("|T|", T)]
    for k, (name, data) in enumerate(panels, start=1):
        ax = fig.add_subplot(2, 3, k)
        im = ax.imshow(data, origin="lower", extent=extent, aspect="auto", cmap="viridis")
        fig.colorbar(im, ax=ax, shrink=0.8)
        ax.set_title(name, fontsize=9)
    return _save(fig, path)


__all__ = ["metric_panels", "residual_bars", "spectral_sweep", "surface_chart"]
