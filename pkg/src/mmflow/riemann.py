"""Exact Riemann solver for 1D Euler with stiffened-gas media.

The two sides may carry different (gamma, p_inf).  Stiffened gas reduces
to a perfect gas in the shifted pressure pi = p + p_inf: the Hugoniot,
the isentrope and the sound speed all take their ideal-gas form in pi,
so the classical two-branch pressure function (Toro) carries over with
p replaced by pi side by side.

Array functions (suffix ``_arrays``) are the work horses used per grid
face; the scalar API wraps them.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .eos import MaterialEos, sound_speed
from .errors import ConvergenceError, DomainError, VacuumError
from .state import PrimitiveState

_MAX_NEWTON = 100


@dataclass(frozen=True)
class RiemannInput:
    """Normal-frame Riemann data; velocities are (u_xi, u_eta)."""

    left: PrimitiveState
    right: PrimitiveState
    eos_left: MaterialEos
    eos_right: MaterialEos


@dataclass(frozen=True)
class StarState:
    p_star: float
    u_star: float
    rho_star_left: float
    rho_star_right: float


def pressure_function(side: PrimitiveState, eos: MaterialEos, p: float):
    """Two-branch velocity-jump function f(p) and its derivative.

    Shock branch for p > p_side (stiffened Hugoniot), isentrope branch
    otherwise; C1 at p = p_side.
    """
    if p + eos.p_inf <= 0.0:
        raise DomainError(f"trial pressure {p} below -p_inf = {-eos.p_inf}")
    f, df = _pressure_function_arrays(
        np.asarray(p, dtype=float), side.rho, side.p, eos.gamma, eos.p_inf)
    return float(f), float(df)


def _pressure_function_arrays(p, rho_k, p_k, g, pinf):
    pi = p + pinf
    pi_k = p_k + pinf
    c_k = np.sqrt(g * pi_k / rho_k)
    shock = p > p_k
    A = 2.0 / ((g + 1.0) * rho_k)
    B = (g - 1.0) / (g + 1.0) * pi_k
    with np.errstate(invalid="ignore", divide="ignore"):
        q = np.sqrt(A / (pi + B))
        f_s = (pi - pi_k) * q
        df_s = q * (1.0 - (pi - pi_k) / (2.0 * (pi + B)))
        z = (g - 1.0) / (2.0 * g)
        ratio = np.maximum(pi / pi_k, 1e-300)
        f_r = 2.0 * c_k / (g - 1.0) * (ratio ** z - 1.0)
        df_r = ratio ** (-(g + 1.0) / (2.0 * g)) / (rho_k * c_k)
    return np.where(shock, f_s, f_r), np.where(shock, df_s, df_r)


def check_vacuum_arrays(uL, cL, gL, uR, cR, gR):
    """Raise when the pressure-positivity condition fails anywhere."""
    vac = 2.0 * cL / (gL - 1.0) + 2.0 * cR / (gR - 1.0) <= uR - uL
    if np.any(vac):
        raise VacuumError("initial data would generate vacuum "
                          f"({int(np.count_nonzero(vac))} interface(s))")


def solve_star_arrays(rhoL, uL, pL, gL, pinfL, rhoR, uR, pR, gR, pinfR,
                      tol=1e-12, allow_vacuum=False):
    """Vectorized star solve: returns (p*, u*, rho*_L, rho*_R).

    Safeguarded Newton (bisection fallback) started from a shifted
    two-rarefaction guess; robust across the full stiffened-gas range.
    Vacuum-generating data raise VacuumError unless allow_vacuum is set,
    in which case those interfaces get the effective-vacuum limit state
    (pi* -> 0, contact speed at the middle of the vacuum region).
    """
    piL = pL + pinfL
    piR = pR + pinfR
    cL = np.sqrt(gL * piL / rhoL)
    cR = np.sqrt(gR * piR / rhoR)
    du = uR - uL
    vac = 2.0 * cL / (gL - 1.0) + 2.0 * cR / (gR - 1.0) <= du
    if np.any(vac):
        if not allow_vacuum:
            raise VacuumError("initial data would generate vacuum "
                              f"({int(np.count_nonzero(vac))} interface(s))")
        kv = np.nonzero(vac)[0]
        sub = lambda a: np.asarray(np.broadcast_to(a, np.shape(du)))[kv]  # noqa: E731
        pv, uv = _vacuum_limit_star(sub(uL), sub(cL), sub(gL), sub(pinfL),
                                    sub(uR), sub(cR), sub(gR), sub(pinfR))
        pL_s = sub(pL)
        pR_s = sub(pR)
        out_p = np.empty(np.shape(du))
        out_u = np.empty(np.shape(du))
        kn = np.nonzero(~vac)[0]
        if kn.size:
            subn = lambda a: np.asarray(np.broadcast_to(a, np.shape(du)))[kn]  # noqa: E731
            pn, un, _, _ = solve_star_arrays(
                subn(rhoL), subn(uL), subn(pL), subn(gL), subn(pinfL),
                subn(rhoR), subn(uR), subn(pR), subn(gR), subn(pinfR),
                tol=tol)
            out_p[kn] = pn
            out_u[kn] = un
        out_p[kv] = pv
        out_u[kv] = uv
        rsL = star_density_arrays(out_p, rhoL, pL, gL, pinfL)
        rsR = star_density_arrays(out_p, rhoR, pR, gR, pinfR)
        return out_p, out_u, rsL, rsR
    p_floor = -np.minimum(pinfL, pinfR)

    gm = 0.5 * (gL + gR)
    z = (gm - 1.0) / (2.0 * gm)
    num = np.maximum(cL + cR - 0.5 * (gm - 1.0) * du, 1e-300)
    den = cL / piL ** z + cR / piR ** z
    p0 = (num / den) ** (1.0 / z) - 0.5 * (pinfL + pinfR)
    eps_lo = 1e-12 * (np.abs(p_floor) + 1.0)
    p0 = np.maximum(p0, p_floor + eps_lo)

    lo = p_floor + eps_lo

    def total(p):
        fL, dL = _pressure_function_arrays(p, rhoL, pL, gL, pinfL)
        fR, dR = _pressure_function_arrays(p, rhoR, pR, gR, pinfR)
        return fL + fR + du, dL + dR

    # f is increasing and concave in p, so an un-bracketed Newton with a
    # positivity guard converges globally (monotonically from below after
    # the first step).  Bisection on a certified bracket is kept as a
    # safety net; hi is certified only once an iterate saw f > 0 there.
    # Start clear of the effective-vacuum region where f' diverges.
    pi_scale = np.minimum(piL, piR)
    p = np.maximum(p0, p_floor + 1e-3 * pi_scale)
    hi = np.full(np.shape(p), np.inf)
    converged = np.zeros(np.shape(p), dtype=bool)
    for it in range(_MAX_NEWTON):
        val, dval = total(p)
        lo = np.where(val < 0.0, np.maximum(lo, p), lo)
        hi = np.where(val > 0.0, np.minimum(hi, p), hi)
        with np.errstate(invalid="ignore", divide="ignore"):
            step = val / dval
            pn = p - step
        bad = ~np.isfinite(pn) | (pn <= p_floor)
        if it >= 40:
            bad = bad | (pn < lo) | (pn > hi)
        bad = bad & np.isfinite(hi)
        pn = np.where(bad, 0.5 * (lo + hi),
                      np.where(np.isfinite(pn) & (pn > p_floor), pn,
                               lo + 0.25 * pi_scale))
        # tolerance relative to the effective pressure pi = p - p_floor,
        # with a roundoff floor set by the representable spacing near p
        thresh = tol * np.maximum(pn - p_floor, 0.0) \
            + 4e-16 * (np.abs(pn) + 0.25 * (pinfL + pinfR)) + 1e-300
        converged = np.abs(pn - p) <= thresh
        p = pn
        if np.all(converged):
            break
    if not np.all(converged):
        raise ConvergenceError(
            f"star-state iteration stalled on {int(np.count_nonzero(~converged))} "
            f"interface(s) after {_MAX_NEWTON} steps")
    fL, _ = _pressure_function_arrays(p, rhoL, pL, gL, pinfL)
    fR, _ = _pressure_function_arrays(p, rhoR, pR, gR, pinfR)
    u = 0.5 * (uL + uR) + 0.5 * (fR - fL)
    rsL = star_density_arrays(p, rhoL, pL, gL, pinfL)
    rsR = star_density_arrays(p, rhoR, pR, gR, pinfR)
    return p, u, rsL, rsR


def _vacuum_limit_star(uL, cL, gL, pinfL, uR, cR, gR, pinfR):
    """Limit star state for vacuum-generating data: pi* -> 0+.

    The two rarefactions expand to zero effective pressure; the reported
    contact speed sits mid-way between the vacuum fronts.
    """
    front_L = uL + 2.0 * cL / (gL - 1.0)
    front_R = uR - 2.0 * cR / (gR - 1.0)
    pi_eps = 1e-12 * np.minimum(cL ** 2, cR ** 2) * 1e-3
    p_star = -np.minimum(pinfL, pinfR) + np.maximum(pi_eps, 1e-300)
    return p_star, 0.5 * (front_L + front_R)


def star_density_arrays(p_star, rho_k, p_k, g, pinf):
    """Density adjacent to the contact on side k (Hugoniot or isentrope)."""
    pis = p_star + pinf
    pik = p_k + pinf
    mu2 = (g - 1.0) / (g + 1.0)
    with np.errstate(invalid="ignore"):
        rho_shock = rho_k * (pis + mu2 * pik) / (pik + mu2 * pis)
        rho_rare = rho_k * np.maximum(pis / pik, 1e-300) ** (1.0 / g)
    return np.where(p_star > p_k, rho_shock, rho_rare)


def wave_speeds_arrays(p_star, u_star, rho_k, u_k, p_k, g, pinf, sgn):
    """(outermost, innermost) speeds of the side-k wave; sgn=+1 left, -1 right.

    For a shock both are the shock speed; for a rarefaction (head, tail).
    """
    pik = p_k + pinf
    pis = p_star + pinf
    c_k = np.sqrt(g * pik / rho_k)
    with np.errstate(invalid="ignore"):
        sig = u_k - sgn * c_k * np.sqrt(
            (g + 1.0) / (2.0 * g) * pis / pik + (g - 1.0) / (2.0 * g))
        c_s = c_k * np.maximum(pis / pik, 1e-300) ** ((g - 1.0) / (2.0 * g))
    head = u_k - sgn * c_k
    tail = u_star - sgn * c_s
    shock = p_star > p_k
    return np.where(shock, sig, head), np.where(shock, sig, tail)


def _sample_side_arrays(xi, rho_k, u_k, p_k, g, pinf, p_star, u_star, sgn):
    pik = p_k + pinf
    pis = p_star + pinf
    c_k = np.sqrt(g * pik / rho_k)
    rho_s = star_density_arrays(p_star, rho_k, p_k, g, pinf)
    w_k = sgn * u_k
    w_s = sgn * u_star
    xis = sgn * xi
    shock = p_star > p_k
    with np.errstate(invalid="ignore", divide="ignore"):
        sig = w_k - c_k * np.sqrt(
            (g + 1.0) / (2.0 * g) * pis / pik + (g - 1.0) / (2.0 * g))
        c_sr = c_k * np.maximum(pis / pik, 1e-300) ** ((g - 1.0) / (2.0 * g))
        head = w_k - c_k
        tail = w_s - c_sr
        cf = np.maximum((2.0 * c_k + (g - 1.0) * (w_k - xis)) / (g + 1.0), 1e-150)
        wf = xis + cf
        pif = pik * (cf / c_k) ** (2.0 * g / (g - 1.0))
        rhof = g * pif / cf ** 2
    in_outer = np.where(shock, xis < sig, xis < head)
    in_fan = ~shock & ~in_outer & (xis < tail)
    rho = np.where(in_outer, rho_k, np.where(in_fan, rhof, rho_s))
    w = np.where(in_outer, w_k, np.where(in_fan, wf, w_s))
    p = np.where(in_outer, p_k, np.where(in_fan, pif - pinf, p_star))
    return rho, sgn * w, p


def sample_arrays(xi, rhoL, uL, pL, gL, pinfL, rhoR, uR, pR, gR, pinfR,
                  p_star, u_star):
    """Self-similar solution (rho, u, p) at speed xi = x/t."""
    rL, vL, qL = _sample_side_arrays(xi, rhoL, uL, pL, gL, pinfL,
                                     p_star, u_star, 1.0)
    rR, vR, qR = _sample_side_arrays(xi, rhoR, uR, pR, gR, pinfR,
                                     p_star, u_star, -1.0)
    left = xi <= u_star
    return (np.where(left, rL, rR), np.where(left, vL, vR),
            np.where(left, qL, qR))


# ---------------------------------------------------------------------------
# Scalar API

def solve_star(inp: RiemannInput) -> StarState:
    p, u, rL, rR = solve_star_arrays(
        np.asarray(inp.left.rho), np.asarray(inp.left.ux), np.asarray(inp.left.p),
        inp.eos_left.gamma, inp.eos_left.p_inf,
        np.asarray(inp.right.rho), np.asarray(inp.right.ux), np.asarray(inp.right.p),
        inp.eos_right.gamma, inp.eos_right.p_inf)
    return StarState(float(p), float(u), float(rL), float(rR))


def sample(inp: RiemannInput, star: StarState, xi: float) -> PrimitiveState:
    """Sample the solution at xi; tangential velocity rides with the contact."""
    rho, u, p = sample_arrays(
        xi, inp.left.rho, inp.left.ux, inp.left.p,
        inp.eos_left.gamma, inp.eos_left.p_inf,
        inp.right.rho, inp.right.ux, inp.right.p,
        inp.eos_right.gamma, inp.eos_right.p_inf,
        star.p_star, star.u_star)
    if xi < star.u_star:
        ut = inp.left.uy
    elif xi > star.u_star:
        ut = inp.right.uy
    else:
        ut = 0.5 * (inp.left.uy + inp.right.uy)
    return PrimitiveState(float(rho), float(u), float(ut), float(p))


def euler_flux_1d(rho, u, p, eos: MaterialEos):
    """Flux of the 1D system: (mass, momentum, energy); no tangential part."""
    E = (p + eos.gamma * eos.p_inf) / (eos.gamma - 1.0) + 0.5 * rho * u * u
    return np.stack(np.broadcast_arrays(rho * u, rho * u * u + p, u * (E + p)))


def interface_flux_rp(inp: RiemannInput):
    """Godunov flux F(sample(xi=0)) of the 1D system, 3 components."""
    star = solve_star(inp)
    w = sample(inp, star, 0.0)
    eos = inp.eos_left if star.u_star >= 0.0 else inp.eos_right
    return euler_flux_1d(w.rho, w.ux, w.p, eos)


def face_flux_rp_arrays(WL, WR, gL, pinfL, gR, pinfR):
    """Full 4-component face flux in the frame: (mass, n-mom, t-mom, energy).

    WL/WR have shape (4, n) ordered (rho, u_n, u_t, p).  The tangential
    velocity is upwinded at the contact speed; the energy flux carries the
    full kinetic energy.  Also returns the sampled face state for source
    quadrature.
    """
    rhoL, uL, utL, pL = WL
    rhoR, uR, utR, pR = WR
    ps, us, _, _ = solve_star_arrays(rhoL, uL, pL, gL, pinfL,
                                     rhoR, uR, pR, gR, pinfR,
                                     allow_vacuum=True)
    rho, u, p = sample_arrays(0.0, rhoL, uL, pL, gL, pinfL,
                              rhoR, uR, pR, gR, pinfR, ps, us)
    ut = np.where(us > 0.0, utL, np.where(us < 0.0, utR, 0.5 * (utL + utR)))
    g = np.where(us >= 0.0, gL, gR)
    pinf = np.where(us >= 0.0, pinfL, pinfR)
    W = np.stack([rho, u, ut, p])
    return euler_flux_2d_frame(W, g, pinf), W


def euler_flux_2d_frame(W, g, pinf):
    """Normal-direction flux of a (rho, u_n, u_t, p) state."""
    rho, u, ut, p = W
    E = (p + g * pinf) / (g - 1.0) + 0.5 * rho * (u * u + ut * ut)
    return np.stack([rho * u, rho * u * u + p, rho * u * ut, u * (E + p)])
