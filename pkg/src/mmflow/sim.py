"""Multimedium driver: scenarios, shock initialization, and the main loop.

Each step: classify regions from phi, build ghost states (RP- or
GRP-based), advance the two single-medium problems on their real+ghost
regions, advect and reinitialize the level set with the interface star
velocity, and recompose the global field by the sign of phi.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import fvm, gfm, levelset
from .eos import MaterialEos, sound_speed
from .errors import DomainError, FlowError, ScenarioError
from .fvm import BoundaryCondition, FieldGrid
from .levelset import GridGeometry, LevelSetField
from .state import cons_to_prim_arrays, prim_to_cons_arrays


@dataclass(frozen=True)
class ShockSpec:
    """Normal shock into a resting pre-state: Mach number or post pressure."""

    pre_rho: float
    pre_u: float
    pre_p: float
    mach: float = None
    p_post: float = None
    direction: float = -1.0  # propagation sign along the shock axis

    def __post_init__(self):
        if (self.mach is None) == (self.p_post is None):
            raise ScenarioError("give exactly one of mach or p_post")
        if self.mach is not None and self.mach < 1.0:
            raise ScenarioError(f"shock Mach number must be >= 1, got {self.mach}")


def rankine_hugoniot_post_shock(spec: ShockSpec, eos: MaterialEos):
    """Post-shock state from the stiffened-gas jump conditions.

    Returns (post: (rho, u, p), shock_speed, piston_speed); velocities in
    the lab frame where the pre-state is at rest up to pre_u, and the
    shock runs in ``direction``.
    """
    g = eos.gamma
    pi0 = spec.pre_p + eos.p_inf
    if pi0 <= 0.0 or spec.pre_rho <= 0.0:
        raise DomainError("invalid pre-shock state")
    c0 = math.sqrt(g * pi0 / spec.pre_rho)
    if spec.mach is not None:
        M2 = spec.mach ** 2
    else:
        pi1 = spec.p_post + eos.p_inf
        if pi1 < pi0:
            raise DomainError("p_post below pre-shock pressure: expansion "
                              "shocks are inadmissible")
        M2 = 1.0 + (g + 1.0) / (2.0 * g) * (pi1 / pi0 - 1.0)
    M = math.sqrt(M2)
    pi1 = pi0 * (1.0 + 2.0 * g / (g + 1.0) * (M2 - 1.0))
    rho1 = spec.pre_rho * (g + 1.0) * M2 / ((g - 1.0) * M2 + 2.0)
    du = 2.0 * c0 / (g + 1.0) * (M - 1.0 / M)
    u1 = spec.pre_u + spec.direction * du
    shock_speed = spec.pre_u + spec.direction * M * c0
    post = (rho1, u1, pi1 - eos.p_inf)
    return post, shock_speed, u1


@dataclass
class Scenario:
    name: str
    domain: tuple            # (a, b, c, d)
    grid: tuple              # (nx, ny)
    eos1: MaterialEos
    eos2: MaterialEos
    initial: callable        # (X, Y) -> (W (4,nx,ny), phi (nx,ny))
    bc: BoundaryCondition
    cfl: float = 0.45
    t_end: float = 0.0
    snapshot_times: tuple = ()
    flux_mode: str = "GRP"
    gfm_mode: str = "GRP"
    geometry: str = "planar"
    limiter: str = "minmod"
    band_width: int = levelset.DEFAULT_BAND_WIDTH
    k_ac: float = 0.1
    reinit_every: int = 8  # geometric reinit erodes curvature slightly;
    #                        advection alone preserves the SDF well short-term

    def __post_init__(self):
        nx, ny = self.grid
        if nx < 4 or ny < 4:
            raise ScenarioError("grid must be at least 4x4")
        if not self.t_end > 0.0:
            raise ScenarioError("end time must be positive")
        ts = tuple(self.snapshot_times)
        if list(ts) != sorted(ts) or (ts and (ts[0] < 0 or ts[-1] > self.t_end)):
            raise ScenarioError("snapshot times must be sorted within [0, t_end]")
        if self.flux_mode not in ("RP", "GRP") or self.gfm_mode not in ("RP", "GRP"):
            raise ScenarioError("flux/gfm modes must be 'RP' or 'GRP'")
        if self.geometry not in ("planar", "axisymmetric"):
            raise ScenarioError(f"unknown geometry {self.geometry!r}")

    def geometry_grid(self) -> GridGeometry:
        a, b, c, d = self.domain
        nx, ny = self.grid
        return GridGeometry(nx, ny, (b - a) / nx, (d - c) / ny, a, c)


@dataclass
class RunReport:
    steps: int = 0
    final_time: float = 0.0
    clamp_count: int = 0
    degenerate_fits: int = 0
    grad_limit_count: int = 0
    midpoint_limit_count: int = 0
    mass_history: list = field(default_factory=list)
    snapshots_written: int = 0


# ---------------------------------------------------------------------------
# Built-in scenarios

HELIUM_AIR = dict(
    eos1=MaterialEos(1.648, 0.0),       # helium bubble
    eos2=MaterialEos(1.4, 0.0),         # air
    helium=(0.2163, 0.0, 0.0, 1e5),
    air_pre=(1.189, 0.0, 0.0, 1e5),
    mach=1.25,
    center=(0.425, 0.0),
    radius=0.025,
    shock_z=0.45,
)

WATER_AIR = dict(
    eos1=MaterialEos(1.4, 0.0),         # air bubble
    eos2=MaterialEos(4.4, 6450.0),      # water (fitted stiffened gas)
    air=(0.001, 0.0, 0.0, 1.0),
    water_pre=(1.0, 0.0, 0.0, 1.0),
    p_post=19000.0,
    center=(9.0, 0.0),                  # (z, r)
    radius=3.0,
    shock_z=12.0,
)


def build_scenario(name: str, grid=None, flux_mode="GRP", gfm_mode="GRP",
                   cfl=0.45, t_end=None, snapshot_times=None) -> Scenario:
    """Named scenarios; ``grid`` overrides the default resolution."""
    if name == "shock-helium-bubble":
        return _shock_helium_bubble(grid, flux_mode, gfm_mode, cfl,
                                    t_end, snapshot_times)
    if name == "bubble-collapse-water":
        return _bubble_collapse_water(grid, flux_mode, gfm_mode, cfl,
                                      t_end, snapshot_times)
    if name == "manufactured-linear":
        return _manufactured_linear(grid, flux_mode, gfm_mode, cfl,
                                    t_end, snapshot_times)
    if name == "static-bubble":
        return _static_bubble(grid, flux_mode, gfm_mode, cfl,
                              t_end, snapshot_times)
    raise ScenarioError(f"unknown scenario {name!r}")


def _shock_helium_bubble(grid, flux_mode, gfm_mode, cfl, t_end, snaps):
    """Planar shock in air hitting a resting helium bubble on the axis.

    The long axis is z (grid x); r runs over the half-width with a
    reflective axis at r=0.  The shock starts at z=0.45 moving toward
    z=0; the right boundary is a piston at the post-shock speed.
    """
    p = HELIUM_AIR
    spec = ShockSpec(p["air_pre"][0], 0.0, p["air_pre"][3], mach=p["mach"],
                     direction=-1.0)
    post, _, piston = rankine_hugoniot_post_shock(spec, p["eos2"])

    def initial(X, Y):
        W = np.empty((4,) + X.shape)
        behind = X > p["shock_z"]
        W[0] = np.where(behind, post[0], p["air_pre"][0])
        W[1] = np.where(behind, post[1], 0.0)
        W[2] = 0.0
        W[3] = np.where(behind, post[2], p["air_pre"][3])
        inside = (X - p["center"][0]) ** 2 + (Y - p["center"][1]) ** 2 \
            <= p["radius"] ** 2
        W[0] = np.where(inside, p["helium"][0], W[0])
        W[1] = np.where(inside, 0.0, W[1])
        W[3] = np.where(inside, p["helium"][3], W[3])
        phi = np.hypot(X - p["center"][0], Y - p["center"][1]) - p["radius"]
        return W, phi

    return Scenario(
        name="shock-helium-bubble",
        domain=(0.0, 0.55, 0.0, 0.0445),
        grid=grid or (550, 45),
        eos1=p["eos1"], eos2=p["eos2"],
        initial=initial,
        bc=BoundaryCondition(left="wall", right="piston", bottom="axis",
                             top="wall", piston_speed=piston),
        cfl=cfl, t_end=1594e-6 if t_end is None else t_end,
        snapshot_times=tuple(snaps) if snaps is not None
        else (223e-6, 350e-6, 600e-6, 1594e-6),
        flux_mode=flux_mode, gfm_mode=gfm_mode, geometry="axisymmetric")


def _bubble_collapse_water(grid, flux_mode, gfm_mode, cfl, t_end, snaps):
    """Shock-induced collapse of an air bubble in water; shock from z-top."""
    p = WATER_AIR
    spec = ShockSpec(p["water_pre"][0], 0.0, p["water_pre"][3],
                     p_post=p["p_post"], direction=-1.0)
    post, _, piston = rankine_hugoniot_post_shock(spec, p["eos2"])

    def initial(X, Y):
        W = np.empty((4,) + X.shape)
        behind = X > p["shock_z"]
        W[0] = np.where(behind, post[0], p["water_pre"][0])
        W[1] = np.where(behind, post[1], 0.0)
        W[2] = 0.0
        W[3] = np.where(behind, post[2], p["water_pre"][3])
        inside = (X - p["center"][0]) ** 2 + (Y - p["center"][1]) ** 2 \
            <= p["radius"] ** 2
        W[0] = np.where(inside, p["air"][0], W[0])
        W[1] = np.where(inside, 0.0, W[1])
        W[3] = np.where(inside, p["air"][3], W[3])
        phi = np.hypot(X - p["center"][0], Y - p["center"][1]) - p["radius"]
        return W, phi

    return Scenario(
        name="bubble-collapse-water",
        domain=(0.0, 15.0, 0.0, 6.0),   # z along x, r along y
        grid=grid or (150, 60),
        eos1=p["eos1"], eos2=p["eos2"],
        initial=initial,
        bc=BoundaryCondition(left="wall", right="piston", bottom="axis",
                             top="wall", piston_speed=piston),
        cfl=cfl, t_end=0.02342 if t_end is None else t_end,
        snapshot_times=tuple(snaps) if snaps is not None
        else (0.012, 0.020, 0.02298, 0.02342),
        flux_mode=flux_mode, gfm_mode=gfm_mode, geometry="axisymmetric")


def _manufactured_linear(grid, flux_mode, gfm_mode, cfl, t_end, snaps):
    """Globally linear field, identical media: isolates interface errors."""
    eos = MaterialEos(1.4, 0.0)

    def initial(X, Y):
        W = np.empty((4,) + X.shape)
        W[0] = 1.0 + 0.08 * X + 0.05 * Y
        W[1] = 0.02 + 0.03 * X - 0.02 * Y
        W[2] = 0.01 - 0.02 * X + 0.03 * Y
        W[3] = 2.0 + 0.05 * X - 0.04 * Y
        phi = X - 0.52 * np.max(X) - 0.013
        return W, phi

    return Scenario(
        name="manufactured-linear",
        domain=(0.0, 1.0, 0.0, 1.0),
        grid=grid or (48, 48),
        eos1=eos, eos2=eos,
        initial=initial,
        bc=BoundaryCondition(left="extrapolate", right="extrapolate",
                             bottom="extrapolate", top="extrapolate"),
        cfl=cfl, t_end=t_end or 0.02,
        snapshot_times=tuple(snaps or ()),
        flux_mode=flux_mode, gfm_mode=gfm_mode, geometry="planar")


def _static_bubble(grid, flux_mode, gfm_mode, cfl, t_end, snaps):
    """Two media at rest with equal pressure: exact equilibrium contact."""
    eos1 = MaterialEos(1.648, 0.0)
    eos2 = MaterialEos(1.4, 0.0)

    def initial(X, Y):
        W = np.empty((4,) + X.shape)
        inside = (X - 0.5) ** 2 + (Y - 0.5) ** 2 <= 0.2 ** 2
        W[0] = np.where(inside, 0.2163, 1.189)
        W[1] = 0.0
        W[2] = 0.0
        W[3] = 1e5
        phi = np.hypot(X - 0.5, Y - 0.5) - 0.2
        return W, phi

    return Scenario(
        name="static-bubble",
        domain=(0.0, 1.0, 0.0, 1.0),
        grid=grid or (40, 40),
        eos1=eos1, eos2=eos2,
        initial=initial,
        bc=BoundaryCondition(),
        cfl=cfl, t_end=t_end or 1e-3,
        snapshot_times=tuple(snaps or ()),
        flux_mode=flux_mode, gfm_mode=gfm_mode, geometry="planar")


# ---------------------------------------------------------------------------
# Main loop

def _composed_dt(W, medium1, sc: Scenario, grid) -> float:
    """CFL step over the composed field with per-cell medium EOS."""
    rho, ux, uy, p = W
    g = np.where(medium1, sc.eos1.gamma, sc.eos2.gamma)
    pinf = np.where(medium1, sc.eos1.p_inf, sc.eos2.p_inf)
    c = np.sqrt(g * (p + pinf) / rho)
    smax = float(np.max(np.hypot(ux, uy) + c))
    if not np.isfinite(smax) or smax <= 0.0:
        raise FlowError("non-finite wave speeds in composed field")
    return sc.cfl * min(grid.dx, grid.dy) / smax


def run(sc: Scenario, sinks=(), max_steps=10_000_000) -> RunReport:
    """Execute the scenario; sinks are callables (t, W, phi, meta) -> None."""
    grid = sc.geometry_grid()
    X, Y = grid.mesh()
    W, phi0 = sc.initial(X, Y)
    ls = levelset.reinitialize(LevelSetField(np.asarray(phi0, float), grid),
                               sc.band_width, full=True)
    report = RunReport()
    t = 0.0
    targets = sorted(set(list(sc.snapshot_times) + [sc.t_end]))
    pending = [s for s in targets if s > 0.0]

    def emit(time_now, Wc, lsf):
        meta = {"scenario": sc.name, "flux_mode": sc.flux_mode,
                "gfm_mode": sc.gfm_mode, "geometry": sc.geometry,
                "step": report.steps}
        for sink in sinks:
            sink(time_now, Wc, lsf, meta)
        report.snapshots_written += 1

    if 0.0 in sc.snapshot_times:
        emit(0.0, W, ls)

    while t < sc.t_end and report.steps < max_steps:
        # a medium may disappear entirely (the level set cannot hold
        # sub-cell filaments); the run then continues single-medium
        sign = np.sign(ls.phi)
        vanished = 0
        if np.all(sign >= 0.0):
            vanished = 1
        elif np.all(sign < 0.0):
            vanished = 2
        medium1 = ls.phi < 0.0

        if not vanished:
            region = levelset.classify(ls, sc.band_width)
            ghosts = gfm.build_ghost_states(W, ls, region, sc.eos1, sc.eos2,
                                            sc.gfm_mode, sc.geometry)
            report.clamp_count += ghosts.clamp_count
            report.degenerate_fits += ghosts.degenerate_fits
            report.grad_limit_count += ghosts.grad_limit_count

        dt = _composed_dt(W, medium1, sc, grid)
        if pending and t + dt >= pending[0] - 1e-15 * max(1.0, pending[0]):
            dt = pending[0] - t
            t_next = pending.pop(0)
        else:
            t_next = t + dt

        diag = {}
        if vanished:
            eos = sc.eos2 if vanished == 1 else sc.eos1
            fk = fvm.step_single_medium(
                FieldGrid(prim_to_cons_arrays(W, eos), grid), eos, sc.bc,
                dt, sc.flux_mode, limiter=sc.limiter, geometry=sc.geometry,
                k_ac=sc.k_ac, t=t, diag=diag)
            W = cons_to_prim_arrays(fk.U, eos)
        else:
            new_fields = {}
            for k, eos in ((1, sc.eos1), (2, sc.eos2)):
                Wk = W.copy()
                cells = ghosts.cells1 if k == 1 else ghosts.cells2
                gvals = ghosts.ghost1 if k == 1 else ghosts.ghost2
                Wk[:, cells[0], cells[1]] = gvals
                active = region.medium_mask(k) | region.ghost_band(k)
                Uk = prim_to_cons_arrays(Wk, eos)
                fk = fvm.step_single_medium(
                    FieldGrid(Uk, grid), eos, sc.bc, dt, sc.flux_mode,
                    limiter=sc.limiter, geometry=sc.geometry, active=active,
                    k_ac=sc.k_ac, t=t, diag=diag)
                new_fields[k] = fk.U

            # level-set advection velocity: fluid velocity away from the
            # band, interface star velocity inside it
            vel_u = W[1].copy()
            vel_v = W[2].copy()
            bi, bj = ghosts.band_cells
            vel_u[bi, bj] = ghosts.band_velocity[0]
            vel_v[bi, bj] = ghosts.band_velocity[1]
            ls = levelset.advect(ls, (vel_u, vel_v), dt)
            if (report.steps + 1) % sc.reinit_every == 0 and \
                    np.any(ls.phi < 0.0) and np.any(ls.phi >= 0.0):
                ls = levelset.reinitialize(ls, sc.band_width)

            medium1_new = ls.phi < 0.0
            U1 = cons_to_prim_arrays(new_fields[1], sc.eos1, where=medium1_new)
            U2 = cons_to_prim_arrays(new_fields[2], sc.eos2,
                                     where=~medium1_new)
            W = np.where(medium1_new[None], U1, U2)

        report.midpoint_limit_count += diag.get("midpoint_limited", 0)
        t = t_next
        report.steps += 1
        report.final_time = t
        if sc.geometry == "axisymmetric":
            mass = float(np.sum(2 * np.pi * Y * W[0]) * grid.dx * grid.dy)
        else:
            mass = float(np.sum(W[0]) * grid.dx * grid.dy)
        report.mass_history.append((t, mass))
        if t in sc.snapshot_times:
            emit(t, W, ls)
    return report
