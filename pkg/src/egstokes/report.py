"""Figures written next to the CSV output of the experiment drivers."""
from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import matplotlib.tri as mtri  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "figure.dpi": 110,
    "savefig.dpi": 150,
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "legend.frameon": False,
}

MARKERS = {"D": "o", "L": "s", "U": "^"}
COLORS = {"D": "C0", "L": "C1", "U": "C2"}


def _save(fig, path) -> Path:
    path = Path(path)
    fig.savefig(path, bbox_inches="tight")
    plt.close(fig)
    return path


def plot_convergence(rows: Sequence, path, title: str = "") -> Path:
    """Log-log error against h with a first-order reference slope."""
    h = np.array([r.h for r in rows])
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(4.2, 3.4))
        ax.loglog(h, [r.energy_error for r in rows], "o-", label="velocity, energy norm")
        ax.loglog(h, [r.dg_h1_error for r in rows], "d:", label="velocity, broken $H^1$")
        ax.loglog(h, [r.pressure_error for r in rows], "s-", label="pressure, $L^2$")
        if len(h) > 1:
            ref = rows[0].energy_error * h / h[0]
            ax.loglog(h, 0.5 * ref, "k--", lw=0.8, label="$O(h)$")
        ax.set_xlabel("h")
        ax.set_ylabel("error")
        ax.invert_xaxis()
        if title:
            ax.set_title(title)
        ax.legend(fontsize=7)
        return _save(fig, path)


def plot_iterations(rows: Sequence, path, title: str = "") -> Path:
    """Outer iteration counts per preconditioner across the cases of a study."""
    kinds = list(dict.fromkeys(r.preconditioner for r in rows))
    values = sorted({r.value for r in rows}, reverse=True)
    case = rows[0].case if rows else ""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(4.4, 3.4))
        for k in kinds:
            pts = [(r.value, r.iterations) for r in rows if r.preconditioner == k and r.iterations >= 0]
            if not pts:
                continue
            x, y = zip(*sorted(pts, reverse=True))
            ls = "-" if k.startswith("B") else "--"
            fill = "full" if k.startswith("B") else "none"
            ax.plot(x, y, ls, marker=MARKERS.get(k[-1], "o"), color=COLORS.get(k[-1]),
                    fillstyle=fill, label=k)
        if case in ("h", "mu") and len(values) > 1:
            ax.set_xscale("log")
            ax.minorticks_off()
            ax.set_xticks(values)
            if case == "h":
                ax.set_xticklabels([f"1/{round(1 / v)}" for v in values])
            else:
                ax.set_xticklabels([f"{v:g}" for v in values])
            ax.invert_xaxis()
        ax.set_xlabel({"h": "h", "mu": r"$\mu$"}.get(case, case))
        ax.set_ylabel("outer FGMRES iterations")
        ax.set_ylim(bottom=0)
        if title:
            ax.set_title(title)
        ax.legend(ncol=2, fontsize=7)
        return _save(fig, path)


def plot_channel(mesh, u: np.ndarray, p: np.ndarray, path, title: str = "") -> Path:
    """Speed, streamlines and pressure of a channel solution."""
    nv = mesh.n_vertices
    tri = mtri.Triangulation(mesh.vertices[:, 0], mesh.vertices[:, 1], mesh.cells)
    ux, uy = u[:nv], u[nv:2 * nv]
    speed = np.hypot(ux, uy)
    with plt.rc_context(STYLE | {"axes.grid": False}):
        fig, axes = plt.subplots(1, 3, figsize=(11, 3.4))
        c0 = axes[0].tripcolor(tri, speed, shading="gouraud", cmap="viridis")
        fig.colorbar(c0, ax=axes[0], shrink=0.8)
        axes[0].set_title("|u|")

        gx, gy = np.meshgrid(np.linspace(0, 1, 120), np.linspace(0, 1, 120))
        interp_x = mtri.LinearTriInterpolator(tri, ux)
        interp_y = mtri.LinearTriInterpolator(tri, uy)
        vx = np.ma.filled(interp_x(gx, gy), np.nan)
        vy = np.ma.filled(interp_y(gx, gy), np.nan)
        axes[1].streamplot(gx, gy, vx, vy, density=1.2, linewidth=0.6, color="k", arrowsize=0.6)
        axes[1].set_title("streamlines")

        c2 = axes[2].tripcolor(tri, facecolors=np.asarray(p), cmap="coolwarm")
        fig.colorbar(c2, ax=axes[2], shrink=0.8)
        axes[2].set_title("p")
        for ax in axes:
            ax.set_aspect("equal")
            ax.set_xlim(0, 1)
            ax.set_ylim(0, 1)
            ax.set_xticks([])
            ax.set_yticks([])
        if title:
            fig.suptitle(title)
        return _save(fig, path)


def plot_infsup(rows: Sequence, path) -> Path:
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(4.0, 3.0))
        ax.semilogx([r.h for r in rows], [r.beta for r in rows], "o-")
        ax.invert_xaxis()
        ax.set_xlabel("h")
        ax.set_ylabel(r"$\beta_h$")
        ax.set_ylim(bottom=0)
        return _save(fig, path)
