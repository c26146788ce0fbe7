"""Fluid-state value types and conversions.

Primitive states are (rho, ux, uy, p); conserved states are
(rho, rho*ux, rho*uy, E) with E the total energy per unit volume.
The interface frame rotates between grid coordinates (x, y) and the
normal/tangential pair (xi, eta) with t = (-ny, nx).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .eos import MaterialEos, pressure_from_energy, specific_internal_energy
from .errors import DomainError


@dataclass(frozen=True)
class PrimitiveState:
    rho: float
    ux: float
    uy: float
    p: float

    def velocity(self):
        return np.array([self.ux, self.uy])


@dataclass(frozen=True)
class ConservedState:
    rho: float
    mx: float
    my: float
    E: float


@dataclass(frozen=True)
class InterfaceFrame:
    """Unit normal (nx, ny); tangential is fixed to (-ny, nx)."""

    nx: float
    ny: float

    def __post_init__(self):
        n2 = self.nx ** 2 + self.ny ** 2
        if abs(n2 - 1.0) > 1e-12:
            raise DomainError(f"frame normal not unit length: |n|^2 = {n2}")

    @property
    def tx(self):
        return -self.ny

    @property
    def ty(self):
        return self.nx


def prim_to_cons(w: PrimitiveState, eos: MaterialEos) -> ConservedState:
    e = specific_internal_energy(eos, w.rho, w.p)
    ke = 0.5 * w.rho * (w.ux ** 2 + w.uy ** 2)
    return ConservedState(w.rho, w.rho * w.ux, w.rho * w.uy, w.rho * e + ke)


def cons_to_prim(u: ConservedState, eos: MaterialEos) -> PrimitiveState:
    if not u.rho > 0.0:
        raise DomainError(f"non-positive density {u.rho}")
    ux = u.mx / u.rho
    uy = u.my / u.rho
    e = (u.E - 0.5 * (u.mx ** 2 + u.my ** 2) / u.rho) / u.rho
    p = pressure_from_energy(eos, u.rho, e)
    return PrimitiveState(u.rho, ux, uy, p)


def rotate(w: PrimitiveState, frame: InterfaceFrame, direction: str) -> PrimitiveState:
    """Rotate velocity into ('into') or out of ('out') the interface frame.

    Into the frame the components become (u.n, u.t); rho and p are
    untouched and |V| is preserved.
    """
    if direction == "into":
        un = w.ux * frame.nx + w.uy * frame.ny
        ut = w.ux * frame.tx + w.uy * frame.ty
        return PrimitiveState(w.rho, un, ut, w.p)
    if direction == "out":
        ux = w.ux * frame.nx + w.uy * frame.tx
        uy = w.ux * frame.ny + w.uy * frame.ty
        return PrimitiveState(w.rho, ux, uy, w.p)
    raise ValueError(f"direction must be 'into' or 'out', got {direction!r}")


# ---------------------------------------------------------------------------
# Array forms used by the grid solvers: W and U have shape (4, ...) with the
# component axis first.

def prim_to_cons_arrays(W, eos: MaterialEos):
    rho, ux, uy, p = W
    rho_e = (p + eos.gamma * eos.p_inf) / (eos.gamma - 1.0)
    E = rho_e + 0.5 * rho * (ux ** 2 + uy ** 2)
    return np.stack([rho, rho * ux, rho * uy, E])


def cons_to_prim_arrays(U, eos: MaterialEos, where=None):
    """Vectorized inverse; validity is only enforced where ``where`` is True.

    Cells outside ``where`` get a floored, finite state so downstream
    array math stays clean; callers decide which cells matter.
    """
    rho, mx, my, E = U
    if where is None:
        where = np.ones(np.shape(rho), dtype=bool)
    bad_rho = ~(rho > 0.0) & where
    if np.any(bad_rho):
        idx = tuple(int(k[0]) for k in np.nonzero(bad_rho))
        raise DomainError(f"non-positive density at cell {idx}: "
                          f"rho={np.asarray(rho)[idx]}")
    safe_rho = np.where(rho > 0.0, rho, 1.0)
    ux = mx / safe_rho
    uy = my / safe_rho
    rho_e = E - 0.5 * (mx ** 2 + my ** 2) / safe_rho
    p = (eos.gamma - 1.0) * rho_e - eos.gamma * eos.p_inf
    bad_p = ~(p + eos.p_inf > 0.0) & where
    if np.any(bad_p):
        idx = tuple(int(k[0]) for k in np.nonzero(bad_p))
        raise DomainError(f"non-positive internal energy at cell {idx}: "
                          f"p={np.asarray(p)[idx]}")
    p_floor = 1e-12 * (np.abs(p) + eos.p_inf + 1.0)
    p = np.where(p + eos.p_inf > 0.0, p, p_floor - eos.p_inf)
    return np.stack([np.where(rho > 0.0, rho, 1.0), ux, uy, p])


def rotate_arrays(W, nx, ny, direction: str):
    """Frame rotation for (4, ...) primitive arrays; nx, ny broadcastable."""
    rho, a, b, p = W
    tx, ty = -ny, nx
    if direction == "into":
        un = a * nx + b * ny
        ut = a * tx + b * ty
        return np.stack([rho, un, ut, p])
    if direction == "out":
        ux = a * nx + b * tx
        uy = a * ny + b * ty
        return np.stack([rho, ux, uy, p])
    raise ValueError(f"direction must be 'into' or 'out', got {direction!r}")
