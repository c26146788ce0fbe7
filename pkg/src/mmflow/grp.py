"""Generalized Riemann problem solvers and second-order interface fluxes.

Given piecewise-linear initial data (states plus slopes on each side of an
interface) the GRP solver returns the instantaneous time derivative of the
solution at the interface, which upgrades the Godunov flux to second order
in time: F = F(u* + dt/2 * du/dt).

Two resolutions are implemented, following the direct Eulerian GRP of
Ben-Artzi & Li:

* acoustic case (small jump): characteristic upwind projections
  Lambda+/Lambda- of the one-sided slopes at the arithmetic-mean state;
* genuinely nonlinear case: the time derivative is resolved through the
  actual wave pattern.  Each wave contributes one linear relation between
  the material derivatives (Du/Dt)* and (Dp/Dt)* at the contact: a shock
  by differentiating the Rankine-Hugoniot conditions along its path, a
  rarefaction by transporting characteristic data through the fan in
  characteristic coordinates (this carries the entropy variation).

Tangential-flux and source effects enter through the projected H-term,
added to the quasi-1D derivative on each side with the I+/I- upwind
projectors.

All formulas are written on the shifted pressure pi = p + p_inf, where a
stiffened gas is formally a perfect gas.  The working basis is primitive
(rho, u_xi, u_eta, p); arrays have the component axis first.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .eos import MaterialEos
from .errors import ConvergenceError, DomainError
from .riemann import (RiemannInput, StarState, euler_flux_1d,
                      euler_flux_2d_frame, interface_flux_rp,
                      sample_arrays, solve_star_arrays, star_density_arrays,
                      wave_speeds_arrays)
from .state import PrimitiveState

DEFAULT_K_AC = 0.1


@dataclass(frozen=True)
class SlopeVector:
    """Spatial derivative of the primitive state along one axis."""

    drho: float
    dux: float
    duy: float
    dp: float

    def as_array(self):
        return np.array([self.drho, self.dux, self.duy, self.dp])


@dataclass(frozen=True)
class EigenDecomposition:
    """lam ordered (u-c, u, u, u+c); A = R @ diag(lam) @ Rinv."""

    lam: np.ndarray
    R: np.ndarray
    Rinv: np.ndarray


@dataclass(frozen=True)
class TangentialSourceTerm:
    """Projected tangential-flux/source contributions H(x-0), H(x+0)."""

    left: np.ndarray
    right: np.ndarray

    @classmethod
    def zero(cls):
        return cls(np.zeros(4), np.zeros(4))

    def total(self):
        return self.left + self.right


@dataclass(frozen=True)
class TimeDerivative:
    """d/dt of (rho, u_xi, u_eta, p) at the interface, primitive basis."""

    values: np.ndarray
    basis: str = "primitive"


@dataclass(frozen=True)
class GrpInput:
    """Riemann data augmented with one-sided spatial slopes."""

    riemann: RiemannInput
    slope_left: SlopeVector
    slope_right: SlopeVector


# ---------------------------------------------------------------------------
# Eigenstructure of the primitive quasi-1D system

def flux_jacobian_primitive(w: PrimitiveState, eos: MaterialEos):
    """A(w) for w_t + A w_x = 0 in variables (rho, u, u_eta, p)."""
    c2 = eos.gamma * (w.p + eos.p_inf) / w.rho
    u = w.ux
    return np.array([
        [u, w.rho, 0.0, 0.0],
        [0.0, u, 0.0, 1.0 / w.rho],
        [0.0, 0.0, u, 0.0],
        [0.0, w.rho * c2, 0.0, u],
    ])


def eigendecomposition(w: PrimitiveState, eos: MaterialEos) -> EigenDecomposition:
    c2 = eos.gamma * (w.p + eos.p_inf) / w.rho
    if not c2 > 0.0 or not np.isfinite(c2):
        raise DomainError(f"degenerate eigensystem: c^2 = {c2}")
    c = np.sqrt(c2)
    rho, u = w.rho, w.ux
    lam = np.array([u - c, u, u, u + c])
    R = np.array([
        [rho, 1.0, 0.0, rho],
        [-c, 0.0, 0.0, c],
        [0.0, 0.0, 1.0, 0.0],
        [rho * c2, 0.0, 0.0, rho * c2],
    ])
    Rinv = np.array([
        [0.0, -0.5 / c, 0.0, 0.5 / (rho * c2)],
        [1.0, 0.0, 0.0, -1.0 / c2],
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 0.5 / c, 0.0, 0.5 / (rho * c2)],
    ])
    return EigenDecomposition(lam, R, Rinv)


def characteristic_project_arrays(rho, u, c, V, weights):
    """R diag(weights(lam)) Rinv @ V in closed form, vectorized.

    V has shape (4, ...); weights maps an eigenvalue array to weight array.
    """
    v0, v1, v2, v3 = V
    c2 = c * c
    a1 = -0.5 * v1 / c + 0.5 * v3 / (rho * c2)  # strength of (u-c) wave
    a2 = v0 - v3 / c2                           # entropy wave
    a3 = v2                                     # shear wave
    a4 = 0.5 * v1 / c + 0.5 * v3 / (rho * c2)   # (u+c) wave
    w1 = weights(u - c)
    w2 = weights(u)
    w4 = weights(u + c)
    out0 = w1 * a1 * rho + w2 * a2 + w4 * a4 * rho
    out1 = -w1 * a1 * c + w4 * a4 * c
    out2 = w2 * a3
    out3 = w1 * a1 * rho * c2 + w4 * a4 * rho * c2
    return np.stack([out0, out1, out2, out3])


def _lam_plus(lam):
    return np.maximum(lam, 0.0)


def _lam_minus(lam):
    return np.minimum(lam, 0.0)


def _i_plus(lam):
    return 0.5 * (1.0 + np.sign(lam))


def _i_minus(lam):
    return 0.5 * (1.0 - np.sign(lam))


# ---------------------------------------------------------------------------
# Case classification

def jump_indicator_arrays(WL, WR, eps=1e-30):
    dW = WR - WL
    return np.sqrt(np.sum(dW * dW, axis=0)) / (np.sqrt(np.sum(
        (0.5 * (WL + WR)) ** 2, axis=0)) + eps)


def classify_case(left: PrimitiveState, right: PrimitiveState,
                  mesh_scale: float, k_ac: float = DEFAULT_K_AC) -> str:
    """'acoustic' when the relative jump is below k_ac * mesh_scale."""
    WL = np.array([[left.rho], [left.ux], [left.uy], [left.p]])
    WR = np.array([[right.rho], [right.ux], [right.uy], [right.p]])
    ind = jump_indicator_arrays(WL, WR)[0]
    return "acoustic" if ind < k_ac * mesh_scale else "nonlinear"


# ---------------------------------------------------------------------------
# Acoustic solver

def acoustic_derivative(mid: PrimitiveState, eos: MaterialEos,
                        slope_left: SlopeVector, slope_right: SlopeVector,
                        h: TangentialSourceTerm) -> TimeDerivative:
    """du/dt = -R L+ Rinv sL - R L- Rinv sR plus the projected H terms."""
    c2 = eos.gamma * (mid.p + eos.p_inf) / mid.rho
    if not c2 > 0.0 or not np.isfinite(c2):
        raise DomainError(f"degenerate eigensystem: c^2 = {c2}")
    c = np.sqrt(c2)
    sL = slope_left.as_array()[:, None]
    sR = slope_right.as_array()[:, None]
    dd = (-characteristic_project_arrays(mid.rho, mid.ux, c, sL, _lam_plus)
          - characteristic_project_arrays(mid.rho, mid.ux, c, sR, _lam_minus))
    return TimeDerivative(dd[:, 0] + h.total())


def build_h_term(left: PrimitiveState, right: PrimitiveState,
                 grad_eta_left, grad_eta_right,
                 source_left, source_right,
                 eig: EigenDecomposition,
                 eos_left: MaterialEos, eos_right: MaterialEos
                 ) -> TangentialSourceTerm:
    """H = -R I(+/-) Rinv (A_eta w_eta - S), one-sided, primitive rates.

    grad_eta_*: d/deta of (rho, u_xi, u_eta, p); source_*: primitive
    source rate 4-vectors; eig: eigensystem at the local interface state.
    """
    WL = np.array([left.rho, left.ux, left.uy, left.p])[:, None]
    WR = np.array([right.rho, right.ux, right.uy, right.p])[:, None]
    adv_l = tangential_rate_arrays(WL, eos_left.gamma, eos_left.p_inf,
                                   np.asarray(grad_eta_left, float)[:, None])
    adv_r = tangential_rate_arrays(WR, eos_right.gamma, eos_right.p_inf,
                                   np.asarray(grad_eta_right, float)[:, None])
    rate_l = np.asarray(source_left, float) - adv_l[:, 0]
    rate_r = np.asarray(source_right, float) - adv_r[:, 0]
    Ip = eig.R @ np.diag(_i_plus(eig.lam)) @ eig.Rinv
    Im = eig.R @ np.diag(_i_minus(eig.lam)) @ eig.Rinv
    return TangentialSourceTerm(Ip @ rate_l, Im @ rate_r)


def tangential_rate_arrays(W, g, pinf, Geta):
    """-(A_eta w_eta) + S as a primitive rate: here only the A_eta part.

    W: (4, ...) in-frame state; Geta: (4, ...) d/deta of (rho,u_xi,u_eta,p).
    Returns A_eta(W) @ Geta.
    """
    rho, u, v, p = W
    drho, du, dv, dp = Geta
    c2 = g * (p + pinf) / rho
    return np.stack([
        v * drho + rho * dv,
        v * du,
        v * dv + dp / rho,
        v * dp + rho * c2 * dv,
    ])


def h_term_arrays(W0, g, pinf, rateL, rateR):
    """Projected H contributions at the interface state W0 (vectorized)."""
    rho, u, v, p = W0
    c = np.sqrt(g * (p + pinf) / rho)
    hl = characteristic_project_arrays(rho, u, c, rateL, _i_plus)
    hr = characteristic_project_arrays(rho, u, c, rateR, _i_minus)
    return hl, hr


# ---------------------------------------------------------------------------
# Nonlinear (genuinely nonlinear) GRP resolution
#
# Left-wave relation: a * (Du/Dt)* + b * (Dpi/Dt)* = d, with the material
# derivative following the contact.  For the right wave the problem is
# mirrored (x -> -x, u -> -u).

def _left_relation_arrays(rho_a, u_a, p_a, drho, du, dp, g, pinf,
                          p_star, u_star, rho_s):
    """Both branches of the left-wave relation, plus transport auxiliaries.

    Returns dict of arrays: a, b, d, shock mask, and the pieces needed to
    recover the density gradient behind the wave once (Du/Dt, Dpi/Dt) are
    known, and the passive-scalar gradient transport factor.
    """
    pi_a = p_a + pinf
    pi_s = p_star + pinf
    c_a = np.sqrt(g * pi_a / rho_a)
    c_s = np.sqrt(g * pi_s / rho_s)
    shock = p_star > p_a
    mu2 = (g - 1.0) / (g + 1.0)

    with np.errstate(invalid="ignore", divide="ignore"):
        # --- shock branch: differentiate u* = u_a - Phi(pi*; rho_a, pi_a)
        A = 2.0 / ((g + 1.0) * rho_a)
        sig = u_a - c_a * np.sqrt((g + 1.0) / (2.0 * g) * pi_s / pi_a
                                  + (g - 1.0) / (2.0 * g))
        den = pi_s + mu2 * pi_a
        q = np.sqrt(A / den)
        Phi = (pi_s - pi_a) * q
        Phi_p = q * (1.0 - (pi_s - pi_a) / (2.0 * den))
        Phi_pa = -q * (1.0 + mu2 * (pi_s - pi_a) / (2.0 * den))
        Phi_ra = -Phi / (2.0 * rho_a)
        Du_a = (sig - u_a) * du - dp / rho_a
        Dpi_a = (sig - u_a) * dp - rho_a * c_a ** 2 * du
        Drho_a = (sig - u_a) * drho - rho_a * du
        a_s = 1.0 - rho_s * (sig - u_star) * Phi_p
        b_s = Phi_p - (sig - u_star) / (rho_s * c_s ** 2)
        d_s = Du_a - Phi_ra * Drho_a - Phi_pa * Dpi_a
        trans_s = (sig - u_a) / (sig - u_star)

        # --- rarefaction branch: transport through the fan
        omega = np.maximum(c_s / c_a, 1e-300)
        theta_L = (dp / rho_a - c_a ** 2 * drho / rho_a) / (g - 1.0)
        dmu = -c_a * du - dp / rho_a          # directional du along u-c
        e1 = (g + 1.0) / (2.0 * (g - 1.0))
        e2 = 2.0 * g / (g - 1.0)
        d_r = (omega ** e1 * dmu
               + (g - 1.0) / (3.0 * g - 1.0) * theta_L
               * (omega ** e2 - omega ** e1))
        a_r = np.ones_like(d_r)
        b_r = 1.0 / (rho_s * c_s)
        trans_r = omega ** (2.0 / (g - 1.0))
        # entropy slope transported to the tail (for rho_x behind the fan)
        A_a = pi_a / rho_a ** g
        dA = A_a * (dp / pi_a - g * drho / rho_a)
        A_x_star = dA * trans_r

        # density-Hugoniot partials (for rho_x behind the shock)
        Hden = pi_a + mu2 * pi_s
        H_p = rho_a * pi_a * (1.0 - mu2 ** 2) / Hden ** 2
        H_pa = -rho_a * pi_s * (1.0 - mu2 ** 2) / Hden ** 2
        H_ra = (pi_s + mu2 * pi_a) / Hden

    return {
        "shock": shock,
        "a": np.where(shock, a_s, a_r),
        "b": np.where(shock, b_s, b_r),
        "d": np.where(shock, d_s, d_r),
        "sig": sig,
        "Drho_a": Drho_a,
        "Dpi_a": Dpi_a,
        "H_p": H_p, "H_pa": H_pa, "H_ra": H_ra,
        "A_x_star": A_x_star,
        "A_a": pi_a / rho_a ** g,
        "trans": np.where(shock, trans_s, trans_r),
        "c_s": c_s,
    }


def _rho_x_star_arrays(aux, rho_s, u_star, DuDt, DpiDt, g):
    """Density gradient behind the wave on the relation's own side."""
    c_s = aux["c_s"]
    with np.errstate(invalid="ignore", divide="ignore"):
        # shock: differentiate the density Hugoniot along the shock path
        Dpi_b = DpiDt - (aux["sig"] - u_star) * rho_s * DuDt
        Drho_b = (aux["H_p"] * Dpi_b + aux["H_ra"] * aux["Drho_a"]
                  + aux["H_pa"] * aux["Dpi_a"])
        DrhoDt = DpiDt / c_s ** 2
        rho_x_s = (Drho_b - DrhoDt) / (aux["sig"] - u_star)
        # rarefaction: isentropic relation with the transported entropy slope
        pi_x = -rho_s * DuDt
        pi_s = rho_s * c_s ** 2 / g
        rho_x_r = rho_s / g * (pi_x / pi_s - aux["A_x_star"] / aux["A_a"])
    return np.where(aux["shock"], rho_x_s, rho_x_r)


def _fan_interior_arrays(rho_a, u_a, p_a, drho, du, dv, dp, g, pinf):
    """State and d/dt at x=0 inside a left transonic rarefaction fan."""
    pi_a = p_a + pinf
    c_a = np.sqrt(g * pi_a / rho_a)
    with np.errstate(invalid="ignore", divide="ignore"):
        c0 = np.maximum((2.0 * c_a + (g - 1.0) * u_a) / (g + 1.0), 1e-300)
        om = c0 / c_a
        e1 = (g + 1.0) / (2.0 * (g - 1.0))
        e2 = 2.0 * g / (g - 1.0)
        theta_L = (dp / rho_a - c_a ** 2 * drho / rho_a) / (g - 1.0)
        dmu = -c_a * du - dp / rho_a
        A_a = pi_a / rho_a ** g
        dA = A_a * (dp / pi_a - g * drho / rho_a)
        # u_t at x=0 has the same transported form as the star relation
        u_t = (om ** e1 * dmu
               + (g - 1.0) / (3.0 * g - 1.0) * theta_L * (om ** e2 - om ** e1))
        c_t = (0.5 * (g - 1.0) * u_t
               - (c_a * c0 * dA / (2.0 * g * A_a)) * om ** ((g + 1.0) / (g - 1.0)))
        A_t = -c_a * dA * om ** ((g + 1.0) / (g - 1.0))
        rho0 = rho_a * om ** (2.0 / (g - 1.0))
        pi0 = pi_a * om ** (2.0 * g / (g - 1.0))
        pi_t = (2.0 * rho0 * c0 / (g - 1.0)) * c_t - pi0 / ((g - 1.0) * A_a) * A_t
        rho_t = rho0 * (2.0 / (g - 1.0) * c_t / c0 - A_t / ((g - 1.0) * A_a))
        v_t = -c_a * dv * om ** ((g + 1.0) / (g - 1.0))
    W0 = np.stack([rho0, c0, np.broadcast_to(0.0, np.shape(rho0)).copy(), pi0 - pinf])
    ddt = np.stack([rho_t, u_t, v_t, pi_t])
    return W0, ddt


def _smooth_lw_arrays(W, S, g, pinf):
    """Lax-Wendroff derivative -A(w) w_x of a smooth one-sided region."""
    rho, u, v, p = W
    drho, du, dv, dp = S
    c2 = g * (p + pinf) / rho
    return np.stack([
        -(u * drho + rho * du),
        -(u * du + dp / rho),
        -u * dv,
        -(u * dp + rho * c2 * du),
    ])


def grp_homogeneous_arrays(WL, WR, SL, SR, gL, pinfL, gR, pinfR):
    """Vectorized homogeneous GRP: interface state and time derivative.

    WL/WR (4, n): one-sided states (rho, u_n, u_t, p); SL/SR: slopes.
    Returns (W0, ddt, stars) with stars = (p*, u*, rho*_L, rho*_R).
    """
    rhoL, uL, utL, pL = WL
    rhoR, uR, utR, pR = WR
    ps, us, rsL, rsR = solve_star_arrays(rhoL, uL, pL, gL, pinfL,
                                         rhoR, uR, pR, gR, pinfR,
                                         allow_vacuum=True)
    outL, inL = wave_speeds_arrays(ps, us, rhoL, uL, pL, gL, pinfL, 1.0)
    outR, inR = wave_speeds_arrays(ps, us, rhoR, uR, pR, gR, pinfR, -1.0)

    # wave relations (both sides, all faces)
    auxL = _left_relation_arrays(rhoL, uL, pL, SL[0], SL[1], SL[3],
                                 gL, pinfL, ps, us, rsL)
    auxR = _left_relation_arrays(rhoR, -uR, pR, -SR[0], SR[1], -SR[3],
                                 gR, pinfR, ps, -us, rsR)
    aL, bL, dL = auxL["a"], auxL["b"], auxL["d"]
    aR, bR, dR = -auxR["a"], auxR["b"], auxR["d"]
    det = aL * bR - aR * bL
    scale = np.abs(aL * bR) + np.abs(aR * bL) + 1e-300
    if np.any(np.abs(det) < 1e-12 * scale):
        raise ConvergenceError("singular 2x2 GRP wave system at "
                               f"{int(np.count_nonzero(np.abs(det) < 1e-12 * scale))} "
                               "interface(s)")
    DuDt = (dL * bR - dR * bL) / det
    DpiDt = (aL * dR - aR * dL) / det

    with np.errstate(invalid="ignore", divide="ignore"):
        # Eulerian conversion on each star side
        c_sL = auxL["c_s"]
        c_sR = auxR["c_s"]
        u_xL = -DpiDt / (rsL * c_sL ** 2)
        u_xR = -DpiDt / (rsR * c_sR ** 2)
        pi_xL = -rsL * DuDt
        pi_xR = -rsR * DuDt
        rho_xL = _rho_x_star_arrays(auxL, rsL, us, DuDt, DpiDt, gL)
        rho_xR = -_rho_x_star_arrays(auxR, rsR, -us, -DuDt, DpiDt, gR)
        ut_xL = auxL["trans"] * SL[2]
        ut_xR = auxR["trans"] * SR[2]

        def star_ddt(rho_s, c_s, u_x, pi_x, rho_x, ut_x):
            return np.stack([
                DpiDt / c_s ** 2 - us * rho_x,
                DuDt - us * u_x,
                -us * ut_x,
                DpiDt - us * pi_x,
            ])

        ddt_starL = star_ddt(rsL, c_sL, u_xL, pi_xL, rho_xL, ut_xL)
        ddt_starR = star_ddt(rsR, c_sR, u_xR, pi_xR, rho_xR, ut_xR)
        W0_starL = np.stack([rsL, us, utL, ps])
        W0_starR = np.stack([rsR, us, utR, ps])

        ddt_outerL = _smooth_lw_arrays(WL, SL, gL, pinfL)
        ddt_outerR = _smooth_lw_arrays(WR, SR, gR, pinfR)

    # region masks (exclusive, complete)
    l_outer = outL > 0.0
    l_fan = ~l_outer & ~auxL["shock"] & (inL > 0.0)
    r_outer = ~l_outer & ~l_fan & (outR < 0.0)
    r_fan = ~l_outer & ~l_fan & ~r_outer & ~auxR["shock"] & (inR < 0.0)
    rest = ~(l_outer | l_fan | r_outer | r_fan)
    l_star = rest & (us > 0.0)
    r_star = rest & (us < 0.0)

    def pick(outerL, starL, starR, outerR):
        return np.where(l_outer, outerL,
               np.where(r_outer, outerR,
               np.where(l_star, starL,
               np.where(r_star, starR,
                        0.5 * (starL + starR)))))

    W0 = pick(WL, W0_starL, W0_starR, WR)
    ddt = pick(ddt_outerL, ddt_starL, ddt_starR, ddt_outerR)

    # transonic fans are rare: resolve them on the compressed subset
    for mask, flip in ((l_fan, False), (r_fan, True)):
        if not np.any(mask):
            continue
        k = np.nonzero(mask)[0]
        if not flip:
            Wf, df = _fan_interior_arrays(
                rhoL[k], uL[k], pL[k], SL[0][k], SL[1][k], SL[2][k], SL[3][k],
                np.broadcast_to(gL, mask.shape)[k],
                np.broadcast_to(pinfL, mask.shape)[k])
            Wf[2] = utL[k]
        else:
            Wf, df = _fan_interior_arrays(
                rhoR[k], -uR[k], pR[k], -SR[0][k], SR[1][k], -SR[2][k],
                -SR[3][k], np.broadcast_to(gR, mask.shape)[k],
                np.broadcast_to(pinfR, mask.shape)[k])
            Wf[1] = -Wf[1]
            Wf[2] = utR[k]
            df[1] = -df[1]
            df[2] = -df[2]
        W0[:, k] = Wf
        ddt[:, k] = df
    return W0, ddt, (ps, us, rsL, rsR), (DuDt, DpiDt)


def face_flux_grp_arrays(WL, WR, SL, SR, rateL, rateR, dt,
                         gL, pinfL, gR, pinfR,
                         mesh_scale, k_ac=DEFAULT_K_AC, context=""):
    """Second-order face flux (4, n) plus the mid-time face states.

    rateL/rateR: primitive rates of (S - dG/deta) per side, evaluated at
    the one-sided face states; enter via the upwind I+/I- projections.
    """
    n = WL.shape[1]
    same_eos = np.broadcast_to((gL == gR) & (pinfL == pinfR), (n,))
    acoustic = (jump_indicator_arrays(WL, WR) < k_ac * mesh_scale) & same_eos
    gLb = np.broadcast_to(gL, (n,))
    gRb = np.broadcast_to(gR, (n,))
    piLb = np.broadcast_to(pinfL, (n,))
    piRb = np.broadcast_to(pinfR, (n,))

    W0 = np.empty_like(WL)
    ddt = np.empty_like(WL)
    g_face = gLb.copy()
    pinf_face = piLb.copy()

    ka = np.nonzero(acoustic)[0]
    if ka.size:
        Wm = 0.5 * (WL[:, ka] + WR[:, ka])
        rho, u, v, p = Wm
        c = np.sqrt(gLb[ka] * (p + piLb[ka]) / rho)
        dd_ac = (-characteristic_project_arrays(rho, u, c, SL[:, ka], _lam_plus)
                 - characteristic_project_arrays(rho, u, c, SR[:, ka], _lam_minus)
                 + characteristic_project_arrays(rho, u, c, rateL[:, ka], _i_plus)
                 + characteristic_project_arrays(rho, u, c, rateR[:, ka], _i_minus))
        # interface state: linearized Riemann solution at xi = 0 about the
        # mean state (upwind-resolved); keeps the state convention
        # consistent with the nonlinear branch across the classification
        # threshold
        dW = WR[:, ka] - WL[:, ka]
        W0[:, ka] = Wm - 0.5 * characteristic_project_arrays(
            rho, u, c, dW, np.sign)
        ddt[:, ka] = dd_ac

    kn = np.nonzero(~acoustic)[0]
    if kn.size:
        W0n, ddtn, stars, _ = grp_homogeneous_arrays(
            WL[:, kn], WR[:, kn], SL[:, kn], SR[:, kn],
            gLb[kn], piLb[kn], gRb[kn], piRb[kn])
        gf = np.where(stars[1] >= 0.0, gLb[kn], gRb[kn])
        pf = np.where(stars[1] >= 0.0, piLb[kn], piRb[kn])
        hl, hr = h_term_arrays(W0n, gf, pf, rateL[:, kn], rateR[:, kn])
        W0[:, kn] = W0n
        ddt[:, kn] = ddtn + hl + hr
        g_face[kn] = gf
        pinf_face[kn] = pf

    Wmid = W0 + 0.5 * dt * ddt
    bad = ~(Wmid[0] > 0.0) | ~(Wmid[3] + pinf_face > 0.0)
    n_limited = 0
    if np.any(bad):
        # near-vacuum faces at violent interfaces: shrink the half-step so
        # the midpoint stays physical (alpha=0 recovers the Godunov flux)
        kb = np.nonzero(bad)[0]
        W0b = W0[:, kb]
        db = ddt[:, kb]
        pib = pinf_face[kb]
        with np.errstate(divide="ignore", invalid="ignore"):
            a_rho = np.where(db[0] * 0.5 * dt < 0,
                             -0.9 * W0b[0] / (0.5 * dt * db[0]), 1.0)
            pi0 = W0b[3] + pib
            a_pi = np.where(db[3] * 0.5 * dt < 0,
                            -0.9 * pi0 / (0.5 * dt * db[3]), 1.0)
        alpha = np.clip(np.minimum(a_rho, a_pi), 0.0, 1.0)
        Wmid[:, kb] = W0b + alpha * 0.5 * dt * db
        n_limited = int(kb.size)
        still = ~(Wmid[0] > 0.0) | ~(Wmid[3] + pinf_face > 0.0)
        if np.any(still):
            first = int(np.nonzero(still)[0][0])
            raise DomainError(
                f"unphysical GRP midpoint state at face {first} {context}: "
                f"rho={Wmid[0][first]}, p={Wmid[3][first]}")
    return euler_flux_2d_frame(Wmid, g_face, pinf_face), Wmid, n_limited


# ---------------------------------------------------------------------------
# Interface star derivatives for the ghost-fluid construction

def star_derivatives_arrays(WL, WR, SL, SR, rateL, rateR,
                            gL, pinfL, gR, pinfR):
    """Two-material GRP at a material interface: star state and derivatives.

    Returns a dict of arrays: star quantities, the (contact-continuous)
    material derivatives of u and p including the projected source and
    tangential contributions, the per-side density material derivative,
    and the per-side spatial xi-derivatives recovered from the governing
    equations (pressure/velocity rows) and wave transport (density,
    tangential velocity).
    """
    rhoL, uL, utL, pL = WL
    rhoR, uR, utR, pR = WR
    ps, us, rsL, rsR = solve_star_arrays(rhoL, uL, pL, gL, pinfL,
                                         rhoR, uR, pR, gR, pinfR)
    auxL = _left_relation_arrays(rhoL, uL, pL, SL[0], SL[1], SL[3],
                                 gL, pinfL, ps, us, rsL)
    auxR = _left_relation_arrays(rhoR, -uR, pR, -SR[0], SR[1], -SR[3],
                                 gR, pinfR, ps, -us, rsR)
    aL, bL, dL = auxL["a"], auxL["b"], auxL["d"]
    aR, bR, dR = -auxR["a"], auxR["b"], auxR["d"]
    det = aL * bR - aR * bL
    scale = np.abs(aL * bR) + np.abs(aR * bL) + 1e-300
    if np.any(np.abs(det) < 1e-12 * scale):
        raise ConvergenceError("singular 2x2 GRP wave system at the interface")
    DuDt = (dL * bR - dR * bL) / det
    DpiDt = (aL * dR - aR * dL) / det

    # projected source/tangential contribution, added to both sides alike
    W0L = np.stack([rsL, us, utL, ps])
    W0R = np.stack([rsR, us, utR, ps])
    hlL, hrL = h_term_arrays(W0L, gL, pinfL, rateL, rateR)
    hlR, hrR = h_term_arrays(W0R, gR, pinfR, rateL, rateR)
    hsum = 0.5 * (hlL + hrL + hlR + hrR)

    c_sL = auxL["c_s"]
    c_sR = auxR["c_s"]
    DuDt_t = DuDt + hsum[1]
    DpDt_t = DpiDt + hsum[3]
    DutDt_t = hsum[2]
    DrhoDt_L = DpiDt / c_sL ** 2 + hsum[0]
    DrhoDt_R = DpiDt / c_sR ** 2 + hsum[0]

    with np.errstate(invalid="ignore", divide="ignore"):
        rho_xL = _rho_x_star_arrays(auxL, rsL, us, DuDt, DpiDt, gL)
        rho_xR = -_rho_x_star_arrays(auxR, rsR, -us, -DuDt, DpiDt, gR)
        # governing-equation (Cauchy-Kowalevski) inversion at the contact
        p_xL = rsL * (rateL[1] - DuDt_t)
        p_xR = rsR * (rateR[1] - DuDt_t)
        u_xL = (rateL[3] - DpDt_t) / (rsL * c_sL ** 2)
        u_xR = (rateR[3] - DpDt_t) / (rsR * c_sR ** 2)
        ut_xL = auxL["trans"] * SL[2]
        ut_xR = auxR["trans"] * SR[2]

    return {
        "p_star": ps, "u_star": us,
        "rho_star_left": rsL, "rho_star_right": rsR,
        "DuDt": DuDt_t, "DpDt": DpDt_t, "DutDt": DutDt_t,
        "DrhoDt_left": DrhoDt_L, "DrhoDt_right": DrhoDt_R,
        "grad_xi_left": np.stack([rho_xL, u_xL, ut_xL, p_xL]),
        "grad_xi_right": np.stack([rho_xR, u_xR, ut_xR, p_xR]),
    }


# ---------------------------------------------------------------------------
# Scalar API

def _grp_input_arrays(inp: GrpInput):
    rl = inp.riemann.left
    rr = inp.riemann.right
    WL = np.array([[rl.rho], [rl.ux], [rl.uy], [rl.p]])
    WR = np.array([[rr.rho], [rr.ux], [rr.uy], [rr.p]])
    SL = inp.slope_left.as_array()[:, None]
    SR = inp.slope_right.as_array()[:, None]
    el = inp.riemann.eos_left
    er = inp.riemann.eos_right
    return WL, WR, SL, SR, el.gamma, el.p_inf, er.gamma, er.p_inf


def nonlinear_derivative(inp: GrpInput, star: StarState,
                         h: TangentialSourceTerm) -> TimeDerivative:
    """Homogeneous GRP derivative through the wave pattern, plus H."""
    WL, WR, SL, SR, gl, pl, gr, pr = _grp_input_arrays(inp)
    _, ddt, _, _ = grp_homogeneous_arrays(WL, WR, SL, SR, gl, pl, gr, pr)
    return TimeDerivative(ddt[:, 0] + h.total())


def interface_state_rp(inp: GrpInput) -> PrimitiveState:
    """The associated Riemann solution at xi = 0, as a full primitive state."""
    from .riemann import sample, solve_star
    star = solve_star(inp.riemann)
    return sample(inp.riemann, star, 0.0)


def midpoint_state(star_full: PrimitiveState, ddt: TimeDerivative,
                   dt: float, eos: MaterialEos = None) -> PrimitiveState:
    """u^{n+1/2} = u* + dt/2 * du/dt, validated."""
    if not dt > 0.0:
        raise DomainError(f"dt must be positive, got {dt}")
    vals = np.array([star_full.rho, star_full.ux, star_full.uy, star_full.p])
    mid = vals + 0.5 * dt * ddt.values
    p_inf = eos.p_inf if eos is not None else 0.0
    if not mid[0] > 0.0 or not mid[3] + p_inf > 0.0:
        raise DomainError(
            f"unphysical GRP midpoint state: rho={mid[0]}, p={mid[3]}")
    return PrimitiveState(*mid)


def interface_flux_grp(inp: GrpInput, h: TangentialSourceTerm, dt: float):
    """Second-order flux F(u^{n+1/2}) of the 1D system (3 components).

    With zero slopes and zero H this equals interface_flux_rp up to the
    shared star-solve tolerance.
    """
    WL, WR, SL, SR, gl, pl, gr, pr = _grp_input_arrays(inp)
    W0, ddt, stars, _ = grp_homogeneous_arrays(WL, WR, SL, SR, gl, pl, gr, pr)
    ddt1 = ddt[:, 0] + h.total()
    us = float(stars[1][0])
    eos = inp.riemann.eos_left if us >= 0.0 else inp.riemann.eos_right
    w0 = PrimitiveState(*W0[:, 0])
    mid = midpoint_state(w0, TimeDerivative(ddt1), dt, eos)
    return euler_flux_1d(mid.rho, mid.ux, mid.p, eos)
