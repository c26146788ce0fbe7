"""Ghost-fluid-state construction at the material interface.

For every cell in the interface band: fit a one-sided linear model of the
primitive state per medium around the cell's own foot point (weighted
least squares over real cells of the owning medium only), rotate into the
interface frame, solve the two-material Riemann problem there, and assign
ghost states to the cell: the constant star state (RP mode) or its linear
extrapolation from the foot point with star gradients recovered from the
two-material GRP (GRP mode).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .eos import MaterialEos
from .errors import DomainError
from .grp import star_derivatives_arrays, tangential_rate_arrays
from . import levelset
from scipy.spatial import cKDTree

from .levelset import LevelSetField, RegionMap, interface_geometry_arrays
from .riemann import StarState, solve_star_arrays
from .state import InterfaceFrame, PrimitiveState

FIT_RADIUS_CELLS = 3.0


@dataclass
class InterfaceSample:
    """Fitted per-side states and Cartesian gradients at one foot point."""

    w1: np.ndarray        # (4,) medium-1 primitive state at the foot point
    w2: np.ndarray
    grad1: np.ndarray     # (2, 4): d/dx and d/dy of each variable
    grad2: np.ndarray
    degenerate1: bool = False
    degenerate2: bool = False


@dataclass
class StarDerivatives:
    """Temporal and spatial star-state derivatives, per side, in-frame."""

    ddt_left: np.ndarray   # (4,) material d/dt of (rho, u_xi, u_eta, p)
    ddt_right: np.ndarray
    grad_xi_left: np.ndarray
    grad_xi_right: np.ndarray
    grad_eta_left: np.ndarray
    grad_eta_right: np.ndarray


@dataclass
class GhostAssignment:
    """Ghost values per medium plus interface-velocity data for the level set."""

    ghost1: np.ndarray        # (4, n1) values for medium-1 ghost cells
    cells1: tuple             # (ii, jj) indices of those cells
    ghost2: np.ndarray
    cells2: tuple
    band_cells: tuple         # all band cells (ii, jj)
    band_velocity: np.ndarray  # (2, nb) u* n at each band cell's foot point
    clamp_count: int = 0
    degenerate_fits: int = 0
    grad_limit_count: int = 0


def _fit_side_batched(W, mask_side, grid, foot_x, foot_y, radius):
    """Weighted linear LS fit of all 4 variables around each foot point.

    W: (4, nx, ny) composed primitive field; mask_side: real cells of the
    owning medium.  Returns (w0 (4,n), gx (4,n), gy (4,n), degenerate (n,),
    n_cells (n,)).
    """
    nx, ny = grid.nx, grid.ny
    kx = max(int(np.ceil(radius / grid.dx)), 1)
    ky = max(int(np.ceil(radius / grid.dy)), 1)
    fi = np.clip(((foot_x - grid.x0) / grid.dx - 0.5).round().astype(int), 0, nx - 1)
    fj = np.clip(((foot_y - grid.y0) / grid.dy - 0.5).round().astype(int), 0, ny - 1)
    ox = np.arange(-kx, kx + 1)
    oy = np.arange(-ky, ky + 1)
    OX, OY = np.meshgrid(ox, oy, indexing="ij")
    ci = fi[:, None] + OX.ravel()[None, :]          # (n, m)
    cj = fj[:, None] + OY.ravel()[None, :]
    inside = (ci >= 0) & (ci < nx) & (cj >= 0) & (cj < ny)
    cii = np.clip(ci, 0, nx - 1)
    cjj = np.clip(cj, 0, ny - 1)
    ok = inside & mask_side[cii, cjj]
    xc = grid.x0 + (cii + 0.5) * grid.dx
    yc = grid.y0 + (cjj + 0.5) * grid.dy
    rx = xc - foot_x[:, None]
    ry = yc - foot_y[:, None]
    d2 = rx ** 2 + ry ** 2
    ok &= d2 <= radius ** 2
    eps2 = (1e-6 * min(grid.dx, grid.dy)) ** 2
    wgt = np.where(ok, 1.0 / (d2 + eps2), 0.0)
    n_cells = np.count_nonzero(ok, axis=1)

    vals = W[:, cii, cjj]                            # (4, n, m)
    X = np.stack([np.ones_like(rx), rx, ry], axis=-1)  # (n, m, 3)
    Xw = X * wgt[:, :, None]
    A = np.matmul(X.transpose(0, 2, 1), Xw)          # (n, 3, 3)
    b = np.matmul(Xw.transpose(0, 2, 1), vals.transpose(1, 2, 0))  # (n, 3, 4)

    # scale-normalized rank check on the 3x3 normal matrix
    diag = np.sqrt(np.maximum(np.einsum("nii->ni", A), 1e-300))
    D = diag[:, :, None] * diag[:, None, :]
    An = A / D
    det = np.linalg.det(An)
    degenerate = (np.abs(det) < 1e-10) | (n_cells < 3)
    A_safe = np.where(degenerate[:, None, None], np.eye(3)[None], A)
    sol = np.linalg.solve(A_safe, b)                 # (n, 3, 4)
    wsum = np.maximum(np.sum(wgt, axis=1), 1e-300)
    mean = np.einsum("nm,knm->nk", wgt, vals) / wsum[:, None]
    w0 = np.where(degenerate[:, None], mean, sol[:, 0, :]).T
    gx = np.where(degenerate[:, None], 0.0, sol[:, 1, :]).T
    gy = np.where(degenerate[:, None], 0.0, sol[:, 2, :]).T
    return w0, gx, gy, degenerate & (n_cells >= 3), n_cells


def fit_interface_sample(W, mask1, mask2, grid, foot, frame: InterfaceFrame,
                         radius=None) -> InterfaceSample:
    """Single-foot-point fit (both sides); thin wrapper over the batch path."""
    radius = radius or FIT_RADIUS_CELLS * max(grid.dx, grid.dy)
    fx = np.array([foot[0]])
    fy = np.array([foot[1]])
    out = {}
    for k, mask in ((1, mask1), (2, mask2)):
        w0, gx, gy, degen, n = _fit_side_batched(W, mask, grid, fx, fy, radius)
        if n[0] < 3:
            raise DomainError(
                f"fewer than 3 medium-{k} cells within the fit radius of "
                f"foot point {foot}")
        out[k] = (w0[:, 0], np.stack([gx[:, 0], gy[:, 0]]), bool(degen[0]))
    return InterfaceSample(out[1][0], out[2][0], out[1][1], out[2][1],
                           out[1][2], out[2][2])


def _rotate_state_and_grads(w0, gx, gy, nx, ny):
    """Rotate fitted states/gradients into the frame: returns (w~, d/dxi, d/deta).

    w0, gx, gy: (4, n); nx, ny: (n,) normals.  In-frame components are
    (rho, u_xi, u_eta, p); directional derivatives d/dxi = n.grad,
    d/deta = t.grad applied to the in-frame components.
    """
    tx, ty = -ny, nx

    def frame_components(a):
        return np.stack([a[0], a[1] * nx + a[2] * ny,
                         a[1] * tx + a[2] * ty, a[3]])

    wf = frame_components(w0)
    gxf = frame_components(gx)
    gyf = frame_components(gy)
    g_xi = gxf * nx + gyf * ny
    g_eta = gxf * tx + gyf * ty
    return wf, g_xi, g_eta


def _grads_to_cartesian(g_xi, g_eta, nx, ny):
    """Inverse of _rotate_state_and_grads for the gradient pair."""
    tx, ty = -ny, nx
    gxf = g_xi * nx + g_eta * tx
    gyf = g_xi * ny + g_eta * ty

    def unframe(a):
        return np.stack([a[0], a[1] * nx + a[2] * tx,
                         a[1] * ny + a[2] * ty, a[3]])

    return unframe(gxf), unframe(gyf)


def solve_interface_rp(sample: InterfaceSample, eos1: MaterialEos,
                       eos2: MaterialEos, frame: InterfaceFrame) -> StarState:
    """Two-material star solve at the foot point (medium 1 on xi < 0)."""
    nx = np.array([frame.nx])
    ny = np.array([frame.ny])
    w1f, _, _ = _rotate_state_and_grads(sample.w1[:, None],
                                        sample.grad1[0][:, None],
                                        sample.grad1[1][:, None], nx, ny)
    w2f, _, _ = _rotate_state_and_grads(sample.w2[:, None],
                                        sample.grad2[0][:, None],
                                        sample.grad2[1][:, None], nx, ny)
    ps, us, r1, r2 = solve_star_arrays(
        w1f[0], w1f[1], w1f[3], eos1.gamma, eos1.p_inf,
        w2f[0], w2f[1], w2f[3], eos2.gamma, eos2.p_inf)
    return StarState(float(ps[0]), float(us[0]), float(r1[0]), float(r2[0]))


def solve_interface_grp(sample: InterfaceSample, eos1: MaterialEos,
                        eos2: MaterialEos, frame: InterfaceFrame,
                        source1=None, source2=None):
    """Two-material GRP: star state plus temporal/spatial star derivatives."""
    nx = np.array([frame.nx])
    ny = np.array([frame.ny])
    w1f, s1xi, s1eta = _rotate_state_and_grads(
        sample.w1[:, None], sample.grad1[0][:, None],
        sample.grad1[1][:, None], nx, ny)
    w2f, s2xi, s2eta = _rotate_state_and_grads(
        sample.w2[:, None], sample.grad2[0][:, None],
        sample.grad2[1][:, None], nx, ny)
    src1 = np.zeros((4, 1)) if source1 is None else np.asarray(source1, float).reshape(4, 1)
    src2 = np.zeros((4, 1)) if source2 is None else np.asarray(source2, float).reshape(4, 1)
    rate1 = src1 - tangential_rate_arrays(w1f, eos1.gamma, eos1.p_inf, s1eta)
    rate2 = src2 - tangential_rate_arrays(w2f, eos2.gamma, eos2.p_inf, s2eta)
    out = star_derivatives_arrays(w1f, w2f, s1xi, s2xi, rate1, rate2,
                                  eos1.gamma, eos1.p_inf,
                                  eos2.gamma, eos2.p_inf)
    star = StarState(float(out["p_star"][0]), float(out["u_star"][0]),
                     float(out["rho_star_left"][0]),
                     float(out["rho_star_right"][0]))
    der = StarDerivatives(
        ddt_left=np.array([out["DrhoDt_left"][0], out["DuDt"][0],
                           out["DutDt"][0], out["DpDt"][0]]),
        ddt_right=np.array([out["DrhoDt_right"][0], out["DuDt"][0],
                            out["DutDt"][0], out["DpDt"][0]]),
        grad_xi_left=out["grad_xi_left"][:, 0],
        grad_xi_right=out["grad_xi_right"][:, 0],
        grad_eta_left=s1eta[:, 0],
        grad_eta_right=s2eta[:, 0],
    )
    return star, der


# ---------------------------------------------------------------------------
# Batched full-band pipeline (the driver-facing entry point)

def build_ghost_states(W, ls: LevelSetField, region: RegionMap,
                       eos1: MaterialEos, eos2: MaterialEos,
                       mode: str, geometry: str = "planar",
                       fit_radius_cells: float = FIT_RADIUS_CELLS
                       ) -> GhostAssignment:
    """Construct ghost states for every band cell (mode 'RP' or 'GRP')."""
    grid = ls.grid
    band = region.band()
    ii, jj, fx, fy, nxv, nyv = interface_geometry_arrays(ls, band)
    radius = fit_radius_cells * max(grid.dx, grid.dy)

    res = {}
    clamp = 0
    degen = 0
    grad_limits = 0
    for k, eos in ((1, eos1), (2, eos2)):
        mask = region.medium_mask(k)
        if not np.any(mask):
            raise DomainError(f"medium {k} has no cells left")
        w0, gx, gy, dg, n = _fit_side_batched(W, mask, grid, fx, fy, radius)
        # thin filaments of a deforming medium can starve the stencil;
        # widen it progressively, then fall back to the nearest real cell
        widen = radius
        for _ in range(3):
            short = n < 3
            if not np.any(short):
                break
            widen *= 2.0
            ks = np.nonzero(short)[0]
            w0s, gxs, gys, dgs, ns = _fit_side_batched(
                W, mask, grid, fx[ks], fy[ks], widen)
            w0[:, ks] = w0s
            gx[:, ks] = gxs
            gy[:, ks] = gys
            dg[ks] = dgs | (ns >= 3)  # widened fits count as degraded
            n[ks] = ns
        short = n < 3
        if np.any(short):
            mi, mj = np.nonzero(mask)
            mx = grid.x0 + (mi + 0.5) * grid.dx
            my = grid.y0 + (mj + 0.5) * grid.dy
            tree = cKDTree(np.column_stack([mx, my]))
            ks = np.nonzero(short)[0]
            _, nearest = tree.query(np.column_stack([fx[ks], fy[ks]]), k=1)
            w0[:, ks] = W[:, mi[nearest], mj[nearest]]
            gx[:, ks] = 0.0
            gy[:, ks] = 0.0
            dg[ks] = True
        degen += int(np.count_nonzero(dg))
        # floors on the fitted interface state itself
        rho_f = 1e-8 * max(float(np.median(w0[0])), 1e-30)
        pe_f = 1e-8 * max(float(np.median(w0[3] + eos.p_inf)), 1e-30)
        bad = (w0[0] < rho_f) | (w0[3] + eos.p_inf < pe_f)
        clamp += int(np.count_nonzero(bad))
        w0[0] = np.maximum(w0[0], rho_f)
        w0[3] = np.maximum(w0[3], pe_f - eos.p_inf)
        res[k] = (w0, gx, gy)

    w1f, s1xi, s1eta = _rotate_state_and_grads(res[1][0], res[1][1],
                                               res[1][2], nxv, nyv)
    w2f, s2xi, s2eta = _rotate_state_and_grads(res[2][0], res[2][1],
                                               res[2][2], nxv, nyv)

    if mode == "RP":
        ps, us, r1, r2 = solve_star_arrays(
            w1f[0], w1f[1], w1f[3], eos1.gamma, eos1.p_inf,
            w2f[0], w2f[1], w2f[3], eos2.gamma, eos2.p_inf)
        stars = {"p_star": ps, "u_star": us,
                 "rho_star_left": r1, "rho_star_right": r2}
        der = None
    elif mode == "GRP":
        rate1 = -tangential_rate_arrays(w1f, eos1.gamma, eos1.p_inf, s1eta)
        rate2 = -tangential_rate_arrays(w2f, eos2.gamma, eos2.p_inf, s2eta)
        if geometry == "axisymmetric":
            rate1 += _axisym_rate_frame(w1f, fy, nxv, nyv, eos1, grid)
            rate2 += _axisym_rate_frame(w2f, fy, nxv, nyv, eos2, grid)
        stars = star_derivatives_arrays(w1f, w2f, s1xi, s2xi, rate1, rate2,
                                        eos1.gamma, eos1.p_inf,
                                        eos2.gamma, eos2.p_inf)
        # recovered gradients can be violent right after a strong shock
        # reaches the interface; cap them so the linear extrapolation stays
        # within one state-scale across the extrapolation length
        L = (levelset.DEFAULT_BAND_WIDTH + 1) * max(grid.dx, grid.dy)
        for key, rho_s, eos in (("grad_xi_left", stars["rho_star_left"], eos1),
                                ("grad_xi_right", stars["rho_star_right"], eos2)):
            pi_s = stars["p_star"] + eos.p_inf
            c_s = np.sqrt(eos.gamma * pi_s / rho_s)
            cap = np.stack([rho_s, c_s, c_s, pi_s]) / L
            g = stars[key]
            grad_limits += int(np.count_nonzero(np.abs(g) > cap))
            stars[key] = np.clip(g, -cap, cap)
        der = stars
    else:
        raise DomainError(f"unknown gfm mode {mode!r}")

    us = stars["u_star"]
    band_velocity = np.stack([us * nxv, us * nyv])

    xc = grid.x0 + (ii + 0.5) * grid.dx
    yc = grid.y0 + (jj + 0.5) * grid.dy
    dxc = xc - fx
    dyc = yc - fy
    tx, ty = -nyv, nxv

    out = {}
    for k, eos, rho_s, w_self in ((1, eos1, stars["rho_star_left"], (w1f, s1eta)),
                                  (2, eos2, stars["rho_star_right"], (w2f, s2eta))):
        ut_k = w_self[0][2]  # fitted side-k tangential velocity
        u_gx = us * nxv + ut_k * tx
        u_gy = us * nyv + ut_k * ty
        ghost = np.stack([rho_s, u_gx, u_gy, stars["p_star"] * np.ones_like(rho_s)])
        if mode == "GRP":
            g_xi = der["grad_xi_left"] if k == 1 else der["grad_xi_right"]
            g_eta = w_self[1]
            gxc, gyc = _grads_to_cartesian(g_xi, g_eta, nxv, nyv)
            ghost = ghost + gxc * dxc[None, :] + gyc * dyc[None, :]
            rho_f = 1e-8 * max(float(np.median(rho_s)), 1e-30)
            pe_f = 1e-8 * max(float(np.median(stars["p_star"] + eos.p_inf)), 1e-30)
            badr = ghost[0] < rho_f
            badp = ghost[3] + eos.p_inf < pe_f
            clamp += int(np.count_nonzero(badr | badp))
            ghost[0] = np.maximum(ghost[0], rho_f)
            ghost[3] = np.maximum(ghost[3], pe_f - eos.p_inf)
        out[k] = ghost

    # ghost cells of medium k live on the opposite side's band
    gsel1 = region.ghost_band(1)[ii, jj]
    gsel2 = region.ghost_band(2)[ii, jj]
    return GhostAssignment(
        ghost1=out[1][:, gsel1], cells1=(ii[gsel1], jj[gsel1]),
        ghost2=out[2][:, gsel2], cells2=(ii[gsel2], jj[gsel2]),
        band_cells=(ii, jj), band_velocity=band_velocity,
        clamp_count=clamp, degenerate_fits=degen,
        grad_limit_count=grad_limits)


def _axisym_rate_frame(wf, r_foot, nxv, nyv, eos: MaterialEos, grid):
    """Geometric-source primitive rate at the foot point, in-frame.

    The radial velocity is rebuilt from the in-frame components; the
    radius is floored half a cell off the axis, where symmetry drives the
    source to zero anyway.
    """
    rho, un, ut, p = wf
    u_r = un * nyv + ut * nxv  # grid y-velocity from frame components
    c2 = eos.gamma * (p + eos.p_inf) / rho
    r = np.maximum(np.abs(r_foot), 0.5 * grid.dy)
    zero = np.zeros_like(rho)
    return np.stack([-rho * u_r / r, zero, zero, -rho * c2 * u_r / r])


def assign_ghost_rp(W, ls: LevelSetField, region: RegionMap,
                    eos1: MaterialEos, eos2: MaterialEos,
                    geometry: str = "planar") -> GhostAssignment:
    """Constant (star-state) ghost assignment for both media."""
    return build_ghost_states(W, ls, region, eos1, eos2, "RP", geometry)


def assign_ghost_grp(W, ls: LevelSetField, region: RegionMap,
                     eos1: MaterialEos, eos2: MaterialEos,
                     geometry: str = "planar") -> GhostAssignment:
    """Linearly distributed ghost assignment for both media."""
    return build_ghost_states(W, ls, region, eos1, eos2, "GRP", geometry)
