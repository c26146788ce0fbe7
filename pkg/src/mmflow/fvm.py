"""Second-order finite-volume stepper for one medium on the structured grid.

Unsplit conservative update with either the exact-Riemann (RP) flux or the
generalized-Riemann (GRP) flux on MUSCL-reconstructed face states, the
axisymmetric geometric source averaged over the four face midpoints, and
wall / piston / outflow / axis boundary conditions via a two-cell halo.

Arrays carry the component axis first: U, W have shape (4, nx, ny) with
x along axis 1 and y along axis 2.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .eos import MaterialEos
from .errors import DomainError, FlowError
from .grp import DEFAULT_K_AC, face_flux_grp_arrays
from .levelset import GridGeometry
from .riemann import face_flux_rp_arrays
from .state import cons_to_prim_arrays, prim_to_cons_arrays


@dataclass
class FieldGrid:
    """Per-cell conserved states plus grid metadata."""

    U: np.ndarray  # (4, nx, ny)
    grid: GridGeometry


@dataclass
class SlopeField:
    """Limited primitive slopes per unit length, x and y directions."""

    sx: np.ndarray  # (4, nx+2, ny+2), one halo ring
    sy: np.ndarray


@dataclass(frozen=True)
class BoundaryCondition:
    """Per-edge kinds: 'wall', 'outflow', 'piston', 'axis'."""

    left: str = "wall"
    right: str = "wall"
    bottom: str = "wall"
    top: str = "wall"
    piston_speed: float = 0.0

    def __post_init__(self):
        kinds = {"wall", "outflow", "piston", "axis", "extrapolate"}
        for edge in (self.left, self.right, self.bottom, self.top):
            if edge not in kinds:
                raise FlowError(f"unknown boundary kind {edge!r}")
        if not np.isfinite(self.piston_speed):
            raise FlowError("piston speed must be finite")


def compute_dt(field: FieldGrid, eos: MaterialEos, cfl: float) -> float:
    """dt = cfl * min(dx, dy) / max(|V| + c)."""
    if not 0.0 < cfl <= 1.0:
        raise FlowError(f"cfl must lie in (0, 1], got {cfl}")
    W = cons_to_prim_arrays(field.U, eos)
    return compute_dt_primitive(W, field.grid, eos.gamma, eos.p_inf, cfl)


def compute_dt_primitive(W, grid: GridGeometry, g, pinf, cfl: float) -> float:
    rho, ux, uy, p = W
    c = np.sqrt(g * (p + pinf) / rho)
    smax = np.max(np.hypot(ux, uy) + c)
    if not np.isfinite(smax) or smax <= 0.0:
        raise FlowError(f"non-finite wave speeds (max |V|+c = {smax})")
    return cfl * min(grid.dx, grid.dy) / smax


# ---------------------------------------------------------------------------
# Reconstruction

def _minmod3(a, b, c):
    """Zero unless a, b, c share a sign; then the smallest magnitude."""
    pos = (a > 0) & (b > 0) & (c > 0)
    neg = (a < 0) & (b < 0) & (c < 0)
    m = np.minimum(np.abs(a), np.minimum(np.abs(b), np.abs(c)))
    return np.where(pos, m, np.where(neg, -m, 0.0))


def _vanleer(a, b):
    ab = a * b
    return np.where(ab > 0.0, 2.0 * ab / np.where(ab > 0, a + b, 1.0), 0.0)


def _slope_1d(q, axis, h, limiter):
    """Limited slope per unit length along ``axis`` of a padded array."""
    fwd = np.diff(q, axis=axis)
    if axis == 1:
        dm = fwd[:, :-1, :]
        dp = fwd[:, 1:, :]
    else:
        dm = fwd[:, :, :-1]
        dp = fwd[:, :, 1:]
    if limiter == "minmod":
        s = _minmod3(dp, dm, 0.5 * (dp + dm))
    elif limiter == "vanleer":
        s = _vanleer(dp, dm)
    elif limiter == "central":
        s = 0.5 * (dp + dm)
    else:
        raise FlowError(f"unknown limiter {limiter!r}")
    return s / h


def reconstruct_slopes(Wpad, grid: GridGeometry, limiter="minmod") -> SlopeField:
    """Slopes for all cells including one halo ring.

    Wpad: (4, nx+4, ny+4) primitive array with boundary halos applied.
    """
    sx = _slope_1d(Wpad, 1, grid.dx, limiter)[:, :, 1:-1]
    sy = _slope_1d(Wpad, 2, grid.dy, limiter)[:, 1:-1, :]
    return SlopeField(sx, sy)


# ---------------------------------------------------------------------------
# Boundary conditions

def _mirror_edge(Wpad, side, ucomp, reflect_speed=None):
    """Fill two ghost layers by mirroring; negate the normal velocity.

    reflect_speed: when set (piston), ghost u = 2*speed - interior u.
    """
    if side == "left":
        src = Wpad[:, 2:4, :]
        ghost = src[:, ::-1, :].copy()
    elif side == "right":
        src = Wpad[:, -4:-2, :]
        ghost = src[:, ::-1, :].copy()
    elif side == "bottom":
        src = Wpad[:, :, 2:4]
        ghost = src[:, :, ::-1].copy()
    else:
        src = Wpad[:, :, -4:-2]
        ghost = src[:, :, ::-1].copy()
    if reflect_speed is None:
        ghost[ucomp] = -ghost[ucomp]
    else:
        ghost[ucomp] = 2.0 * reflect_speed - ghost[ucomp]
    if side == "left":
        Wpad[:, 0:2, :] = ghost
    elif side == "right":
        Wpad[:, -2:, :] = ghost
    elif side == "bottom":
        Wpad[:, :, 0:2] = ghost
    else:
        Wpad[:, :, -2:] = ghost


def _outflow_edge(Wpad, side):
    if side == "left":
        Wpad[:, 0:2, :] = Wpad[:, 2:3, :]
    elif side == "right":
        Wpad[:, -2:, :] = Wpad[:, -3:-2, :]
    elif side == "bottom":
        Wpad[:, :, 0:2] = Wpad[:, :, 2:3]
    else:
        Wpad[:, :, -2:] = Wpad[:, :, -3:-2]


def _extrapolate_edge(Wpad, side):
    """First-order extrapolation halo: preserves linear fields exactly."""
    if side == "left":
        e, i1 = Wpad[:, 2, :], Wpad[:, 3, :]
        Wpad[:, 1, :] = 2 * e - i1
        Wpad[:, 0, :] = 3 * e - 2 * i1
    elif side == "right":
        e, i1 = Wpad[:, -3, :], Wpad[:, -4, :]
        Wpad[:, -2, :] = 2 * e - i1
        Wpad[:, -1, :] = 3 * e - 2 * i1
    elif side == "bottom":
        e, i1 = Wpad[:, :, 2], Wpad[:, :, 3]
        Wpad[:, :, 1] = 2 * e - i1
        Wpad[:, :, 0] = 3 * e - 2 * i1
    else:
        e, i1 = Wpad[:, :, -3], Wpad[:, :, -4]
        Wpad[:, :, -2] = 2 * e - i1
        Wpad[:, :, -1] = 3 * e - 2 * i1


def apply_bc(W, bc: BoundaryCondition):
    """Primitive (4, nx, ny) -> padded (4, nx+4, ny+4) with halos filled."""
    Wpad = np.pad(W, ((0, 0), (2, 2), (2, 2)), mode="edge")
    for side, kind in (("left", bc.left), ("right", bc.right)):
        if kind in ("wall", "axis"):
            _mirror_edge(Wpad, side, 1)
        elif kind == "piston":
            _mirror_edge(Wpad, side, 1, reflect_speed=bc.piston_speed)
        elif kind == "extrapolate":
            _extrapolate_edge(Wpad, side)
        else:
            _outflow_edge(Wpad, side)
    for side, kind in (("bottom", bc.bottom), ("top", bc.top)):
        if kind in ("wall", "axis"):
            _mirror_edge(Wpad, side, 2)
        elif kind == "piston":
            _mirror_edge(Wpad, side, 2, reflect_speed=bc.piston_speed)
        elif kind == "extrapolate":
            _extrapolate_edge(Wpad, side)
        else:
            _outflow_edge(Wpad, side)
    return Wpad


# ---------------------------------------------------------------------------
# Axisymmetric geometric source

def axisymmetric_source(r, rho, u_r, u_z, p, eos: MaterialEos):
    """Conserved source -(1/r)[rho*u_r, rho*u_r^2, rho*u_r*u_z, u_r*(E+p)].

    Component order (mass, radial momentum, axial momentum, energy).
    Callers must keep r away from the axis; at an exact-axis face the
    mirror condition forces u_r = 0 and the term is dropped.
    """
    E = (p + eos.gamma * eos.p_inf) / (eos.gamma - 1.0) \
        + 0.5 * rho * (u_r ** 2 + u_z ** 2)
    inv_r = 1.0 / r
    return np.stack(np.broadcast_arrays(
        -inv_r * rho * u_r,
        -inv_r * rho * u_r ** 2,
        -inv_r * rho * u_r * u_z,
        -inv_r * u_r * (E + p)))


def _source_cons_grid(Wf, r, g, pinf, axis):
    """Conserved source at face states; Wf is in-frame (rho,u_n,u_t,p).

    axis=1: x-faces (normal along z); axis=2: y-faces (normal along r).
    Grid order returned: (mass, x-momentum, y-momentum, energy).
    """
    rho, un, ut, p = Wf
    if axis == 1:
        u_z, u_r = un, ut
    else:
        u_z, u_r = -ut, un
    E = (p + g * pinf) / (g - 1.0) + 0.5 * rho * (un ** 2 + ut ** 2)
    with np.errstate(divide="ignore", invalid="ignore"):
        inv_r = np.where(np.abs(r) > 1e-300, 1.0 / r, 0.0)
    m = -inv_r * rho * u_r
    return np.stack([m, m * u_z, m * u_r, -inv_r * u_r * (E + p)])


# ---------------------------------------------------------------------------
# Single-medium step

def _face_states_x(Wpad, slopes: SlopeField, grid):
    WL = Wpad[:, 1:-2, 2:-2] + 0.5 * grid.dx * slopes.sx[:, :-1, 1:-1]
    WR = Wpad[:, 2:-1, 2:-2] - 0.5 * grid.dx * slopes.sx[:, 1:, 1:-1]
    GL = slopes.sy[:, :-1, 1:-1]
    GR = slopes.sy[:, 1:, 1:-1]
    return WL, WR, GL, GR


def _face_states_y(Wpad, slopes: SlopeField, grid):
    WB = Wpad[:, 2:-2, 1:-2] + 0.5 * grid.dy * slopes.sy[:, 1:-1, :-1]
    WT = Wpad[:, 2:-2, 2:-1] - 0.5 * grid.dy * slopes.sy[:, 1:-1, 1:]
    GB = slopes.sx[:, 1:-1, :-1]
    GT = slopes.sx[:, 1:-1, 1:]
    return WB, WT, GB, GT


def _to_frame_y(W4):
    """(rho, ux, uy, p) -> in-frame for n=(0,1), t=(-1,0)."""
    return np.stack([W4[0], W4[2], -W4[1], W4[3]])


def _prim_source_frame(Wf, r, g, pinf, axis, geometry):
    """Primitive source rate of the in-frame state at radius r."""
    if geometry != "axisymmetric":
        return np.zeros_like(Wf)
    rho, un, ut, p = Wf
    u_r = ut if axis == 1 else un
    c2 = g * (p + pinf) / rho
    with np.errstate(divide="ignore", invalid="ignore"):
        inv_r = np.where(np.abs(r) > 1e-300, 1.0 / r, 0.0)
    zero = np.zeros_like(rho)
    # geometric source has no primitive velocity component
    return np.stack([-inv_r * rho * u_r, zero, zero, -inv_r * rho * c2 * u_r])


def step_single_medium(field: FieldGrid, eos: MaterialEos,
                       bc: BoundaryCondition, dt: float, flux_mode: str,
                       *, limiter: str = "minmod", geometry: str = "planar",
                       active=None, k_ac: float = DEFAULT_K_AC,
                       t: float = 0.0, diag: dict = None):
    """One conservative step; returns the updated FieldGrid.

    flux_mode 'RP': Godunov flux of the reconstructed face states, source
    at the t_n face states.  'GRP': second-order flux F(u^{n+1/2}) with
    tangential/source effects in the H-term, source at mid-time states.
    When ``active`` (bool (nx,ny)) is given, only faces touching the
    dilated active set are solved and only interior active cells updated.
    """
    if flux_mode not in ("RP", "GRP"):
        raise FlowError(f"unknown flux mode {flux_mode!r}")
    grid = field.grid
    nx, ny = grid.nx, grid.ny
    W = cons_to_prim_arrays(field.U, eos, where=active)
    Wpad = apply_bc(W, bc)
    slopes = reconstruct_slopes(Wpad, grid, limiter)
    g, pinf = eos.gamma, eos.p_inf
    mesh = max(grid.dx, grid.dy)
    axisym = geometry == "axisymmetric"

    if active is None:
        fx_mask = None
        fy_mask = None
        upd_mask = None
    else:
        # only faces between two active cells are solved; cells missing a
        # face (the outermost ghost ring) keep their old values, which the
        # ghost-state construction refreshes next step anyway
        act = np.pad(active, 1, mode="edge")  # halo cells follow the edge
        fx_mask = act[:-1, 1:-1] & act[1:, 1:-1]
        fy_mask = act[1:-1, :-1] & act[1:-1, 1:]
        upd_mask = (active & fx_mask[:-1, :] & fx_mask[1:, :]
                    & fy_mask[:, :-1] & fy_mask[:, 1:])

    x, y = grid.cell_centers()
    yc = y[None, :]
    r_xface = np.broadcast_to(yc, (nx + 1, ny)) if axisym else None
    yf = grid.y0 + np.arange(ny + 1) * grid.dy
    r_yface = np.broadcast_to(yf[None, :], (nx, ny + 1)) if axisym else None

    def solve_direction(axis):
        if axis == 1:
            WLg, WRg, GLg, GRg = _face_states_x(Wpad, slopes, grid)
            WL, WR = WLg, WRg
            GL, GR = GLg, GRg
            SL = slopes.sx[:, :-1, 1:-1]
            SR = slopes.sx[:, 1:, 1:-1]
            rfc = r_xface
            mask = fx_mask
        else:
            WBg, WTg, GBg, GTg = _face_states_y(Wpad, slopes, grid)
            WL = _to_frame_y(WBg)
            WR = _to_frame_y(WTg)
            GL = -_to_frame_y(GBg)
            GR = -_to_frame_y(GTg)
            SL = _to_frame_y(slopes.sy[:, 1:-1, :-1])
            SR = _to_frame_y(slopes.sy[:, 1:-1, 1:])
            rfc = r_yface
            mask = fy_mask

        shape = WL.shape[1:]
        if mask is not None:
            sel = np.nonzero(mask)
            WLs = WL[:, sel[0], sel[1]]
            WRs = WR[:, sel[0], sel[1]]
        else:
            sel = None
            WLs = WL.reshape(4, -1)
            WRs = WR.reshape(4, -1)

        if flux_mode == "RP":
            flux_s, Wf_s = face_flux_rp_arrays(WLs, WRs, g, pinf, g, pinf)
            nlim = 0
        else:
            if sel is not None:
                SLs = SL[:, sel[0], sel[1]]
                SRs = SR[:, sel[0], sel[1]]
                GLs = GL[:, sel[0], sel[1]]
                GRs = GR[:, sel[0], sel[1]]
                rs = rfc[sel] if axisym else None
            else:
                SLs = SL.reshape(4, -1)
                SRs = SR.reshape(4, -1)
                GLs = GL.reshape(4, -1)
                GRs = GR.reshape(4, -1)
                rs = rfc.reshape(-1) if axisym else None
            from .grp import tangential_rate_arrays
            rateL = -tangential_rate_arrays(WLs, g, pinf, GLs)
            rateR = -tangential_rate_arrays(WRs, g, pinf, GRs)
            if axisym:
                rateL += _prim_source_frame(WLs, rs, g, pinf, axis, geometry)
                rateR += _prim_source_frame(WRs, rs, g, pinf, axis, geometry)
            flux_s, Wf_s, nlim = face_flux_grp_arrays(
                WLs, WRs, SLs, SRs, rateL, rateR, dt, g, pinf, g, pinf,
                mesh, k_ac, context=f"(axis {axis}, t={t:.6g})")

        flux = np.zeros((4,) + shape)
        Wface = np.zeros((4,) + shape)
        Wface[0] = 1.0
        Wface[3] = 1.0
        if sel is not None:
            flux[:, sel[0], sel[1]] = flux_s
            Wface[:, sel[0], sel[1]] = Wf_s
        else:
            flux = flux_s.reshape((4,) + shape)
            Wface = Wf_s.reshape((4,) + shape)
        if diag is not None:
            diag["midpoint_limited"] = diag.get("midpoint_limited", 0) + nlim
        return flux, Wface

    Fx, Wfx = solve_direction(1)
    Fy_frame, Wfy = solve_direction(2)
    # rotate y-face flux back to grid components: mom_x = -mom_eta, mom_y = mom_xi
    Fy = np.stack([Fy_frame[0], -Fy_frame[2], Fy_frame[1], Fy_frame[3]])

    dF = (Fx[:, 1:, :] - Fx[:, :-1, :]) / grid.dx \
        + (Fy[:, :, 1:] - Fy[:, :, :-1]) / grid.dy

    Unew = field.U - dt * dF
    if axisym:
        Sx = _source_cons_grid(Wfx, r_xface, g, pinf, 1)
        Sy = _source_cons_grid(Wfy, r_yface, g, pinf, 2)
        Sbar = 0.25 * (Sx[:, 1:, :] + Sx[:, :-1, :]
                       + Sy[:, :, 1:] + Sy[:, :, :-1])
        Unew = Unew + dt * Sbar

    check = upd_mask if upd_mask is not None else np.ones((nx, ny), bool)
    if upd_mask is not None:
        Unew = np.where(upd_mask[None, :, :], Unew, field.U)
    rho_n = Unew[0]
    eint = Unew[3] - 0.5 * (Unew[1] ** 2 + Unew[2] ** 2) / np.where(
        rho_n > 0, rho_n, 1.0)
    peff = (g - 1.0) * eint - g * pinf + pinf
    bad = check & (~(rho_n > 0.0) | ~(peff > 0.0))
    if np.any(bad):
        ii, jj = np.nonzero(bad)
        raise DomainError(
            f"cell ({int(ii[0])},{int(jj[0])}) left the physical domain at "
            f"t={t:.6g} (mode {flux_mode}): rho={rho_n[ii[0], jj[0]]:.6g}")
    return FieldGrid(Unew, grid)
