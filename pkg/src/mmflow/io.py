"""Scenario files, snapshot files, and derived-field export.

Scenario files are TOML with a fixed section set; snapshots are plain
text, one row per cell, with all floats printed to 17 significant digits
so a read-back reproduces the arrays bit for bit.  docs/formats.md in the
repository root describes both layouts.
"""
from __future__ import annotations

import re
import sys
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import sim
from .eos import MaterialEos
from .errors import ScenarioError
from .fvm import BoundaryCondition
from .levelset import GridGeometry, LevelSetField
from .sim import Scenario, ShockSpec, rankine_hugoniot_post_shock

SNAPSHOT_MAGIC = "mmflow-snapshot"
SNAPSHOT_VERSION = (1, 0)

_SECTIONS = {"domain", "grid", "medium", "interface", "shock",
             "boundaries", "numerics", "output"}
_KEYS = {
    "domain": {"a", "b", "c", "d"},
    "grid": {"nx", "ny"},
    "medium": {"gamma", "p_inf", "rho", "ux", "uy", "p"},
    "interface": {"shape", "center", "radius", "point", "normal"},
    "shock": {"medium", "mach", "p_post", "position", "direction"},
    "boundaries": {"left", "right", "bottom", "top", "piston_speed"},
    "numerics": {"cfl", "flux", "gfm", "limiter", "geometry",
                 "band_width", "k_ac"},
    "output": {"name", "t_end", "snapshots"},
}

_NUMERICS_DEFAULTS = {"cfl": 0.45, "flux": "grp", "gfm": "grp",
                      "limiter": "minmod", "geometry": "planar",
                      "band_width": 4, "k_ac": 0.1}


def _require(cond, msg):
    if not cond:
        raise ScenarioError(msg)


def _check_keys(section, table, allowed):
    unknown = set(table) - allowed
    _require(not unknown,
             f"unknown key(s) in [{section}]: {', '.join(sorted(unknown))}")


def parse_scenario(path) -> Scenario:
    """Parse and validate a scenario file into a Scenario."""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario file {path}: {exc}") from exc
    try:
        doc = tomllib.loads(raw.decode("utf-8"))
    except tomllib.TOMLDecodeError as exc:
        msg = str(exc)
        m = re.search(r"at line (\d+)", msg)
        if m:
            lineno = int(m.group(1))
            lines = raw.decode("utf-8").splitlines()
            if 0 < lineno <= len(lines):
                msg += f": {lines[lineno - 1].strip()!r}"
        raise ScenarioError(f"{path}: {msg}") from exc
    return scenario_from_dict(doc, name_default=path.stem)


def scenario_from_dict(doc, name_default="scenario") -> Scenario:
    unknown = set(doc) - _SECTIONS
    _require(not unknown, f"unknown section(s): {', '.join(sorted(unknown))}")
    for sec in ("domain", "grid", "medium", "interface", "boundaries",
                "numerics", "output"):
        _require(sec in doc, f"missing section [{sec}]")
    dom = doc["domain"]
    _check_keys("domain", dom, _KEYS["domain"])
    a, b, c, d = (float(dom[k]) for k in ("a", "b", "c", "d"))
    _require(b > a and d > c, "domain must have positive extent")

    gr = doc["grid"]
    _check_keys("grid", gr, _KEYS["grid"])
    nx, ny = int(gr["nx"]), int(gr["ny"])

    media = doc["medium"]
    _require(set(media) == {"1", "2"},
             "need [medium.1] and [medium.2] and nothing else")
    eos = {}
    states = {}
    for k in ("1", "2"):
        tab = media[k]
        _check_keys(f"medium.{k}", tab, _KEYS["medium"])
        gamma = float(tab["gamma"])
        _require(gamma > 1.0, "gamma must exceed 1")
        p_inf = float(tab.get("p_inf", 0.0))
        _require(p_inf >= 0.0, "p_inf must be non-negative")
        eos[k] = MaterialEos(gamma, p_inf)
        states[k] = tuple(float(tab[q]) for q in ("rho", "ux", "uy", "p"))
        _require(states[k][0] > 0.0, f"medium {k} density must be positive")

    itab = doc["interface"]
    _check_keys("interface", itab, _KEYS["interface"])
    shape = itab.get("shape", "circle")
    if shape == "circle":
        cx, cy = (float(v) for v in itab["center"])
        radius = float(itab["radius"])
        _require(radius > 0.0, "interface radius must be positive")

        def phi_fn(X, Y):
            return np.hypot(X - cx, Y - cy) - radius
    elif shape == "plane":
        px, py = (float(v) for v in itab["point"])
        nx_, ny_ = (float(v) for v in itab["normal"])
        nn = np.hypot(nx_, ny_)
        _require(nn > 0.0, "interface normal must be nonzero")

        def phi_fn(X, Y):
            return ((X - px) * nx_ + (Y - py) * ny_) / nn
    else:
        raise ScenarioError(f"unknown interface shape {shape!r}")

    shock = None
    if "shock" in doc:
        stab = doc["shock"]
        _check_keys("shock", stab, _KEYS["shock"])
        _require(int(stab.get("medium", 2)) == 2,
                 "shock initialization is supported in medium 2 only")
        pre = states["2"]
        spec = ShockSpec(pre[0], pre[1], pre[3],
                         mach=float(stab["mach"]) if "mach" in stab else None,
                         p_post=float(stab["p_post"]) if "p_post" in stab else None,
                         direction=float(stab.get("direction", -1.0)))
        post, speed, piston = rankine_hugoniot_post_shock(spec, eos["2"])
        shock = {"position": float(stab["position"]), "post": post,
                 "piston": piston}

    btab = doc["boundaries"]
    _check_keys("boundaries", btab, _KEYS["boundaries"])
    piston_speed = btab.get("piston_speed", "auto")
    if piston_speed == "auto":
        piston_speed = shock["piston"] if shock else 0.0
    bc = BoundaryCondition(left=btab.get("left", "wall"),
                           right=btab.get("right", "wall"),
                           bottom=btab.get("bottom", "wall"),
                           top=btab.get("top", "wall"),
                           piston_speed=float(piston_speed))

    ntab = dict(_NUMERICS_DEFAULTS)
    _check_keys("numerics", doc["numerics"], _KEYS["numerics"])
    ntab.update(doc["numerics"])

    otab = doc["output"]
    _check_keys("output", otab, _KEYS["output"])
    t_end = float(otab["t_end"])
    snaps = tuple(float(s) for s in otab.get("snapshots", ()))
    name = str(otab.get("name", name_default))

    w1 = states["1"]
    w2 = states["2"]

    def initial(X, Y):
        W = np.empty((4,) + X.shape)
        phi = phi_fn(X, Y)
        inside = phi < 0.0
        for comp in range(4):
            W[comp] = np.where(inside, w1[comp], w2[comp])
        if shock is not None:
            behind = (X > shock["position"]) & ~inside
            post = shock["post"]
            W[0] = np.where(behind, post[0], W[0])
            W[1] = np.where(behind, post[1], W[1])
            W[3] = np.where(behind, post[2], W[3])
        return W, phi

    return Scenario(
        name=name,
        domain=(a, b, c, d), grid=(nx, ny),
        eos1=eos["1"], eos2=eos["2"],
        initial=initial, bc=bc,
        cfl=float(ntab["cfl"]), t_end=t_end, snapshot_times=snaps,
        flux_mode=str(ntab["flux"]).upper(),
        gfm_mode=str(ntab["gfm"]).upper(),
        geometry=str(ntab["geometry"]),
        limiter=str(ntab["limiter"]),
        band_width=int(ntab["band_width"]),
        k_ac=float(ntab["k_ac"]))


# ---------------------------------------------------------------------------
# Snapshot files

def write_snapshot(path, time, W, ls: LevelSetField, meta=None):
    """One row per cell: i j x y phi medium rho ux uy p; 17 digits."""
    grid = ls.grid
    meta = meta or {}
    nx, ny = grid.nx, grid.ny
    if W.shape != (4, nx, ny) or ls.phi.shape != (nx, ny):
        raise ScenarioError(
            f"inconsistent shapes: W {W.shape}, phi {ls.phi.shape}, "
            f"grid {(nx, ny)}")
    X, Y = grid.mesh()
    medium = np.where(ls.phi < 0.0, 1, 2)
    ii, jj = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
    header = [
        f"# {SNAPSHOT_MAGIC} {SNAPSHOT_VERSION[0]}.{SNAPSHOT_VERSION[1]}",
        f"# time = {time:.17g}",
        f"# nx = {nx}",
        f"# ny = {ny}",
        f"# dx = {grid.dx:.17g}",
        f"# dy = {grid.dy:.17g}",
        f"# x0 = {grid.x0:.17g}",
        f"# y0 = {grid.y0:.17g}",
    ]
    for key in ("scenario", "flux_mode", "gfm_mode", "geometry", "step"):
        if key in meta:
            header.append(f"# {key} = {meta[key]}")
    header.append("# columns: i j x y phi medium rho ux uy p")
    cols = [ii.ravel(), jj.ravel()]
    fcols = [X.ravel(), Y.ravel(), ls.phi.ravel()]
    icols2 = [medium.ravel()]
    wcols = [W[k].ravel() for k in range(4)]
    lines = header
    fmt = "%.17g"
    for n in range(nx * ny):
        lines.append(
            f"{cols[0][n]} {cols[1][n]} "
            f"{fcols[0][n]:.17g} {fcols[1][n]:.17g} {fcols[2][n]:.17g} "
            f"{icols2[0][n]} "
            f"{wcols[0][n]:.17g} {wcols[1][n]:.17g} {wcols[2][n]:.17g} "
            f"{wcols[3][n]:.17g}")
    try:
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write snapshot {path}: {exc}") from exc


def read_snapshot(path):
    """Read a snapshot file back into (time, W, phi, grid, meta)."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot read snapshot {path}: {exc}") from exc
    lines = text.splitlines()
    if not lines or not lines[0].startswith(f"# {SNAPSHOT_MAGIC} "):
        raise ScenarioError(f"{path}: not a snapshot file")
    version = lines[0].split()[-1]
    major = int(version.split(".")[0])
    if major != SNAPSHOT_VERSION[0]:
        raise ScenarioError(
            f"{path}: unsupported snapshot schema version {version}")
    meta = {}
    ncomment = 1
    for line in lines[1:]:
        if not line.startswith("#"):
            break
        ncomment += 1
        body = line[1:].strip()
        if "=" in body:
            key, _, val = body.partition("=")
            meta[key.strip()] = val.strip()
    nx = int(meta["nx"])
    ny = int(meta["ny"])
    data = np.loadtxt(lines[ncomment:], ndmin=2)
    if data.shape[0] != nx * ny:
        raise ScenarioError(
            f"{path}: row count {data.shape[0]} != nx*ny = {nx * ny}")
    grid = GridGeometry(nx, ny, float(meta["dx"]), float(meta["dy"]),
                        float(meta["x0"]), float(meta["y0"]))
    ii = data[:, 0].astype(int)
    jj = data[:, 1].astype(int)
    phi = np.empty((nx, ny))
    W = np.empty((4, nx, ny))
    phi[ii, jj] = data[:, 4]
    for k in range(4):
        W[k, ii, jj] = data[:, 6 + k]
    return float(meta["time"]), W, phi, grid, meta


def write_snapshot_vtk(path, time, W, ls: LevelSetField):
    """Legacy-VTK structured-points volume for external viewers."""
    grid = ls.grid
    nx, ny = grid.nx, grid.ny
    out = [
        "# vtk DataFile Version 3.0",
        f"mmflow snapshot t={time:.17g}",
        "ASCII",
        "DATASET STRUCTURED_POINTS",
        f"DIMENSIONS {nx} {ny} 1",
        f"ORIGIN {grid.x0 + 0.5 * grid.dx:.17g} {grid.y0 + 0.5 * grid.dy:.17g} 0",
        f"SPACING {grid.dx:.17g} {grid.dy:.17g} 1",
        f"POINT_DATA {nx * ny}",
    ]
    fields = [("rho", W[0]), ("ux", W[1]), ("uy", W[2]), ("p", W[3]),
              ("phi", ls.phi)]
    for name, arr in fields:
        out.append(f"SCALARS {name} double 1")
        out.append("LOOKUP_TABLE default")
        out.extend(f"{v:.17g}" for v in arr.T.ravel())
    Path(path).write_text("\n".join(out) + "\n", encoding="utf-8")


def schlieren(rho, dx=1.0, dy=1.0, k=15.0):
    """exp(-k * |grad rho| / max |grad rho|); all ones for uniform fields."""
    rho = np.asarray(rho, dtype=float)
    if rho.shape[0] < 3 or rho.shape[1] < 3:
        raise ScenarioError("schlieren needs at least a 3x3 grid")
    gx, gy = np.gradient(rho, dx, dy)
    mag = np.hypot(gx, gy)
    peak = float(np.max(mag))
    if peak <= 0.0:
        return np.ones_like(rho)
    return np.exp(-k * mag / peak)


def render_scenario_toml(sc: Scenario, interface: dict, media_states: dict,
                         shock: dict = None) -> str:
    """Canonical TOML text for a Scenario built from file-style inputs."""
    a, b, c, d = sc.domain
    lines = ["[domain]"]
    for key, val in (("a", a), ("b", b), ("c", c), ("d", d)):
        lines.append(f"{key} = {val!r}")
    lines += ["", "[grid]", f"nx = {sc.grid[0]}", f"ny = {sc.grid[1]}"]
    for k, eos in (("1", sc.eos1), ("2", sc.eos2)):
        st = media_states[k]
        lines += ["", f"[medium.{k}]", f"gamma = {eos.gamma!r}",
                  f"p_inf = {eos.p_inf!r}", f"rho = {st[0]!r}",
                  f"ux = {st[1]!r}", f"uy = {st[2]!r}", f"p = {st[3]!r}"]
    lines += ["", "[interface]"]
    for key, val in interface.items():
        if isinstance(val, (list, tuple)):
            lines.append(f"{key} = [{', '.join(repr(float(v)) for v in val)}]")
        elif isinstance(val, str):
            lines.append(f'{key} = "{val}"')
        else:
            lines.append(f"{key} = {val!r}")
    if shock:
        lines += ["", "[shock]"]
        for key, val in shock.items():
            lines.append(f"{key} = {val!r}" if not isinstance(val, str)
                         else f'{key} = "{val}"')
    lines += ["", "[boundaries]",
              f'left = "{sc.bc.left}"', f'right = "{sc.bc.right}"',
              f'bottom = "{sc.bc.bottom}"', f'top = "{sc.bc.top}"',
              f"piston_speed = {sc.bc.piston_speed!r}"]
    lines += ["", "[numerics]", f"cfl = {sc.cfl!r}",
              f'flux = "{sc.flux_mode.lower()}"',
              f'gfm = "{sc.gfm_mode.lower()}"',
              f'limiter = "{sc.limiter}"', f'geometry = "{sc.geometry}"',
              f"band_width = {sc.band_width}", f"k_ac = {sc.k_ac!r}"]
    lines += ["", "[output]", f'name = "{sc.name}"', f"t_end = {sc.t_end!r}"]
    snaps = ", ".join(repr(float(s)) for s in sc.snapshot_times)
    lines.append(f"snapshots = [{snaps}]")
    return "\n".join(lines) + "\n"
