"""Deterministic contour figures from snapshot files.

Figures are driven by a TOML spec; a two-snapshot spec renders the
side-by-side comparison layout (panel a / panel b).
"""
from __future__ import annotations

import sys
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .snapshots import Snapshot, read_snapshot, schlieren  # noqa: E402

FIELDS = ("density", "pressure", "schlieren")


@dataclass
class FigureSpec:
    snapshots: list
    field: str = "density"
    levels: int = 30
    output: str = "figure.png"
    titles: list = None
    cmap: str = "viridis"
    dpi: int = 150

    def __post_init__(self):
        if self.field not in FIELDS:
            raise ValueError(f"unknown field {self.field!r}; "
                             f"choose from {FIELDS}")
        if not 1 <= len(self.snapshots) <= 2:
            raise ValueError("give one or two snapshot paths")
        if self.titles is None:
            self.titles = [Path(p).stem for p in self.snapshots]


def load_figure_spec(path) -> FigureSpec:
    raw = Path(path).read_bytes()
    doc = tomllib.loads(raw.decode("utf-8"))
    fig = doc.get("figure", doc)
    return FigureSpec(
        snapshots=list(fig["snapshots"]),
        field=fig.get("field", "density"),
        levels=int(fig.get("levels", 30)),
        output=str(fig.get("output", "figure.png")),
        titles=list(fig["titles"]) if "titles" in fig else None,
        cmap=str(fig.get("cmap", "viridis")),
        dpi=int(fig.get("dpi", 150)))


def _field_data(snap: Snapshot, name: str):
    if name == "density":
        return snap.W[0]
    if name == "pressure":
        return snap.W[3]
    return schlieren(snap.W[0], snap.dx, snap.dy)


def render(spec: FigureSpec) -> str:
    """Write the figure; returns the output path.

    Deterministic: fixed backend, colormap, and contour levels; the
    interface is overlaid from the phi = 0 contour.
    """
    snaps = [read_snapshot(p) for p in spec.snapshots]
    if len(snaps) == 2 and snaps[0].grid_signature() != snaps[1].grid_signature():
        raise ValueError("paired snapshots live on different grids: "
                         f"{snaps[0].grid_signature()} vs "
                         f"{snaps[1].grid_signature()}")
    data = [_field_data(s, spec.field) for s in snaps]
    lo = min(float(d.min()) for d in data)
    hi = max(float(d.max()) for d in data)
    if hi <= lo:
        hi = lo + 1.0
    levels = np.linspace(lo, hi, spec.levels)

    n = len(snaps)
    width = 4.8 * n
    height = 4.8 * snaps[0].ny * snaps[0].dy / (snaps[0].nx * snaps[0].dx)
    height = min(max(height, 1.6), 6.0)
    fig, axes = plt.subplots(1, n, figsize=(width, height + 0.7),
                             squeeze=False)
    for ax, snap, d, title in zip(axes[0], snaps, data, spec.titles):
        x, y = snap.cell_centers()
        ax.contourf(x, y, d.T, levels=levels, cmap=spec.cmap)
        ax.contour(x, y, snap.phi.T, levels=[0.0], colors="k",
                   linewidths=1.0)
        ax.set_title(f"{title}  (t = {snap.time:g})", fontsize=9)
        ax.set_aspect("equal")
        ax.set_xlabel("x")
        ax.set_ylabel("y")
    fig.tight_layout()
    out = Path(spec.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, dpi=spec.dpi)
    plt.close(fig)
    return str(out)
