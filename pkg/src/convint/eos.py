"""Isentropic gamma-law equation of state and derived thermodynamic quantities.

The pressure law is ``p(rho) = a * rho**gamma``. The pressure potential ``P``
satisfies ``rho P'(rho) - P(rho) = p(rho)``; for the gamma law it has the closed
form ``a / (gamma - 1) * rho**gamma``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from convint.errors import DomainError


def _positive(name: str, value: float) -> float:
    value = float(value)
    if not (value > 0.0) or not math.isfinite(value):
        raise DomainError(f"{name} must be positive and finite, got {value!r}")
    return value


@dataclass(frozen=True)
class GammaLaw:
    """Pressure law ``p = a rho^gamma``.

    Parameters
    ----------
    a : float
        Positive pressure constant.
    gamma : float
        Adiabatic coefficient, strictly greater than one.
    """

    a: float
    gamma: float

    def __post_init__(self) -> None:
        if not (self.a > 0.0) or not math.isfinite(self.a):
            raise DomainError(f"pressure constant a must be positive, got {self.a!r}")
        if not (self.gamma > 1.0) or not math.isfinite(self.gamma):
            raise DomainError(f"gamma must exceed 1, got {self.gamma!r}")

    def to_json(self) -> dict:
        return {"a": self.a, "gamma": self.gamma}

    @classmethod
    def from_json(cls, obj: dict) -> "GammaLaw":
        return cls(float(obj.get("a", 1.0)), float(obj["gamma"]))


def pressure(eos: GammaLaw, rho: float) -> float:
    """Return ``a rho^gamma``.

    Parameters
    ----------
    eos : GammaLaw
        Pressure law.
    rho : float
        Positive density.

    Returns
    -------
    float
        The pressure.
    """
    rho = _positive("rho", rho)
    return eos.a * rho**eos.gamma


def pressure_potential(eos: GammaLaw, rho: float) -> float:
    """Return the pressure potential ``a / (gamma - 1) rho^gamma``."""
    rho = _positive("rho", rho)
    return eos.a / (eos.gamma - 1.0) * rho**eos.gamma


def pressure_derivative(eos: GammaLaw, rho: float) -> float:
    """Return ``p'(rho) = a gamma rho^(gamma - 1)``."""
    rho = _positive("rho", rho)
    return eos.a * eos.gamma * rho ** (eos.gamma - 1.0)


def sound_speed(eos: GammaLaw, rho: float) -> float:
    """Return ``sqrt(p'(rho))``."""
    return math.sqrt(pressure_derivative(eos, rho))


def inverse_pressure(eos: GammaLaw, p: float) -> float:
    """Return the density with ``p(rho) = p``."""
    p = _positive("p", p)
    return (p / eos.a) ** (1.0 / eos.gamma)


def internal_energy(gamma: float, rho: float, p: float) -> float:
    """Specific internal energy ``p / ((gamma - 1) rho)`` of the ideal gas."""
    if not gamma > 1.0:
        raise DomainError(f"gamma must exceed 1, got {gamma!r}")
    rho = _positive("rho", rho)
    p = _positive("p", p)
    return p / ((gamma - 1.0) * rho)


def physical_entropy(gamma: float, rho: float, p: float) -> float:
    """Specific entropy ``(ln p - gamma ln rho) / (gamma - 1)``."""
    if not gamma > 1.0:
        raise DomainError(f"gamma must exceed 1, got {gamma!r}")
    rho = _positive("rho", rho)
    p = _positive("p", p)
    return (math.log(p) - gamma * math.log(rho)) / (gamma - 1.0)


def _rint(eos: GammaLaw, lo: float, hi: float) -> float:
    """Signed integral of ``sqrt(p'(r)) / r`` from ``lo`` to ``hi``; ``lo = 0`` allowed."""
    k = 0.5 * (eos.gamma - 1.0)
    coef = 2.0 * math.sqrt(eos.a * eos.gamma) / (eos.gamma - 1.0)
    return coef * (hi**k - lo**k)


def rarefaction_integral(eos: GammaLaw, rho_lo: float, rho_hi: float) -> float:
    """Integral of ``sqrt(p'(r)) / r`` over ``[rho_lo, rho_hi]``.

    Parameters
    ----------
    eos : GammaLaw
        Pressure law.
    rho_lo, rho_hi : float
        Integration bounds with ``0 < rho_lo <= rho_hi``.

    Returns
    -------
    float
        The closed-form value ``2 sqrt(a gamma) / (gamma - 1) (hi^k - lo^k)``
        with ``k = (gamma - 1) / 2``.
    """
    rho_lo = _positive("rho_lo", rho_lo)
    rho_hi = _positive("rho_hi", rho_hi)
    if rho_lo > rho_hi:
        raise DomainError(f"rho_lo={rho_lo} exceeds rho_hi={rho_hi}")
    return _rint(eos, rho_lo, rho_hi)
