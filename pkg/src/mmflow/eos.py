"""Stiffened-gas equation of state.

A medium is described by (gamma, p_inf) with

    e = (p + gamma*p_inf) / ((gamma - 1) * rho).

An ideal gas is the p_inf = 0 special case.  All closures also work on
numpy arrays; scalar inputs get scalar validation errors.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class MaterialEos:
    """Stiffened-gas parameters identifying one medium."""

    gamma: float
    p_inf: float = 0.0

    def __post_init__(self):
        if not self.gamma > 1.0:
            raise DomainError(f"gamma must exceed 1, got {self.gamma}")
        if self.p_inf < 0.0:
            raise DomainError(f"p_inf must be non-negative, got {self.p_inf}")


def _check_positive(name, value):
    if np.isscalar(value) or np.ndim(value) == 0:
        if not value > 0.0:
            raise DomainError(f"{name} must be positive, got {value}")
    elif not np.all(value > 0.0):
        raise DomainError(f"{name} must be positive everywhere "
                          f"(min {np.min(value)})")


def specific_internal_energy(eos: MaterialEos, rho, p):
    """e(rho, p).  Requires rho > 0 and a positive resulting energy."""
    _check_positive("density", rho)
    e = (p + eos.gamma * eos.p_inf) / ((eos.gamma - 1.0) * rho)
    _check_positive("internal energy", e)
    return e


def pressure_from_energy(eos: MaterialEos, rho, e):
    """p(rho, e); exact algebraic inverse of specific_internal_energy."""
    _check_positive("density", rho)
    p = (eos.gamma - 1.0) * rho * e - eos.gamma * eos.p_inf
    _check_positive("effective pressure p + p_inf", p + eos.p_inf)
    return p


def sound_speed(eos: MaterialEos, rho, p):
    """c = sqrt(gamma*(p + p_inf)/rho)."""
    _check_positive("density", rho)
    _check_positive("effective pressure p + p_inf", p + eos.p_inf)
    return np.sqrt(eos.gamma * (p + eos.p_inf) / rho)


def entropy_diagnostic(eos: MaterialEos, rho, p):
    """Entropy surrogate S = (p + p_inf)/rho**gamma.

    Constant along isentropes; strictly increases across admissible
    shocks, which is all the diagnostics need.
    """
    _check_positive("density", rho)
    _check_positive("effective pressure p + p_inf", p + eos.p_inf)
    return (p + eos.p_inf) / rho ** eos.gamma
