"""Reader for mmflow snapshot files.

Deliberately standalone: these scripts consume snapshot files only, so
they work against any producer of the same format (see the solver's
docs/formats.md for the schema).
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

MAGIC = "mmflow-snapshot"
SUPPORTED_MAJOR = 1


@dataclass
class Snapshot:
    time: float
    W: np.ndarray      # (4, nx, ny): rho, ux, uy, p
    phi: np.ndarray    # (nx, ny)
    nx: int
    ny: int
    dx: float
    dy: float
    x0: float
    y0: float
    meta: dict

    def cell_centers(self):
        x = self.x0 + (np.arange(self.nx) + 0.5) * self.dx
        y = self.y0 + (np.arange(self.ny) + 0.5) * self.dy
        return x, y

    def grid_signature(self):
        return (self.nx, self.ny, self.dx, self.dy, self.x0, self.y0)


def read_snapshot(path) -> Snapshot:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"snapshot file not found: {path}")
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines or not lines[0].startswith(f"# {MAGIC} "):
        raise ValueError(f"{path}: not a snapshot file")
    version = lines[0].split()[-1]
    if int(version.split(".")[0]) != SUPPORTED_MAJOR:
        raise ValueError(f"{path}: unsupported snapshot schema {version}")
    meta = {}
    body = 1
    for line in lines[1:]:
        if not line.startswith("#"):
            break
        body += 1
        text = line[1:].strip()
        if "=" in text:
            key, _, val = text.partition("=")
            meta[key.strip()] = val.strip()
    nx = int(meta["nx"])
    ny = int(meta["ny"])
    data = np.loadtxt(lines[body:], ndmin=2)
    if data.shape[0] != nx * ny:
        raise ValueError(f"{path}: row count {data.shape[0]} != {nx * ny}")
    ii = data[:, 0].astype(int)
    jj = data[:, 1].astype(int)
    phi = np.empty((nx, ny))
    W = np.empty((4, nx, ny))
    phi[ii, jj] = data[:, 4]
    for comp in range(4):
        W[comp, ii, jj] = data[:, 6 + comp]
    return Snapshot(time=float(meta["time"]), W=W, phi=phi, nx=nx, ny=ny,
                    dx=float(meta["dx"]), dy=float(meta["dy"]),
                    x0=float(meta["x0"]), y0=float(meta["y0"]), meta=meta)


def schlieren(rho, dx, dy, k=15.0):
    """exp(-k |grad rho| / max |grad rho|); ones for a uniform field."""
    gx, gy = np.gradient(rho, dx, dy)
    mag = np.hypot(gx, gy)
    peak = float(mag.max())
    if peak <= 0.0:
        return np.ones_like(rho)
    return np.exp(-k * mag / peak)
