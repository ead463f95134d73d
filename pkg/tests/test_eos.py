import math
from decimal import Decimal, getcontext

import numpy as np
import pytest
from scipy import integrate

from convint.eos import (
    GammaLaw,
    internal_energy,
    inverse_pressure,
    physical_entropy,
    pressure,
    pressure_derivative,
    pressure_potential,
    rarefaction_integral,
)
from convint.errors import DomainError

getcontext().prec = 40


def test_pressure_examples():
    assert pressure(GammaLaw(1.0, 2.0), 1.0) == 1.0
    assert pressure(GammaLaw(1.0, 2.0), 2.0) == 4.0
    ref = float((Decimal("1.4") * Decimal("0.5").ln()).exp())
    assert pressure(GammaLaw(1.0, 1.4), 0.5) == pytest.approx(ref, rel=1e-15)


@pytest.mark.parametrize("rho", [0.0, -1.0, float("nan")])
def test_pressure_rejects_bad_density(rho):
    with pytest.raises(DomainError):
        pressure(GammaLaw(1.0, 2.0), rho)


@pytest.mark.parametrize("a, gamma", [(0.0, 2.0), (-1.0, 2.0), (1.0, 1.0), (1.0, 0.5)])
def test_gamma_law_invariants(a, gamma):
    with pytest.raises(DomainError):
        GammaLaw(a, gamma)


def test_pressure_potential_examples():
    eos = GammaLaw(1.0, 2.0)
    assert pressure_potential(eos, 1.0) == 1.0
    assert pressure_potential(eos, 3.0) == pytest.approx(9.0, rel=1e-15)
    eos = GammaLaw(2.0, 1.4)
    rho = 1.7
    quad, _ = integrate.quad(lambda r: pressure(eos, r) / r**2, 0.0, rho, epsabs=1e-14, epsrel=1e-13)
    assert pressure_potential(eos, rho) == pytest.approx(rho * quad, rel=1e-10)


def test_pressure_potential_identities():
    eos = GammaLaw(1.3, 1.7)
    for rho in np.linspace(0.05, 10.0, 50):
        h = 1e-6 * rho
        dP = (pressure_potential(eos, rho + h) - pressure_potential(eos, rho - h)) / (2 * h)
        P = pressure_potential(eos, rho)
        assert abs(rho * dP - P - pressure(eos, rho)) <= 1e-8 * (1.0 + P)
        h = 1e-4 * rho
        d2P = (pressure_potential(eos, rho + h) - 2 * P + pressure_potential(eos, rho - h)) / h**2
        assert d2P == pytest.approx(pressure_derivative(eos, rho) / rho, rel=1e-5)


def test_pressure_monotone_and_convex():
    eos = GammaLaw(0.7, 1.4)
    rng = np.random.default_rng(0)
    for _ in range(200):
        r1, r2 = np.sort(rng.uniform(0.01, 5.0, 2))
        assert pressure(eos, r1) < pressure(eos, r2)
        assert pressure(eos, 0.5 * (r1 + r2)) <= 0.5 * (pressure(eos, r1) + pressure(eos, r2))


def test_inverse_pressure_round_trip():
    eos = GammaLaw(2.0, 1.4)
    assert inverse_pressure(eos, pressure(eos, 1.234)) == pytest.approx(1.234, rel=1e-14)


def test_internal_energy_examples():
    assert internal_energy(2.0, 1.0, 1.0) == 1.0
    assert internal_energy(1.4, 1.0, 0.4) == pytest.approx(1.0, rel=1e-15)
    assert internal_energy(5.0 / 3.0, 2.0, 3.0) == pytest.approx(9.0 / 4.0, rel=1e-15)
    with pytest.raises(DomainError):
        internal_energy(1.4, 1.0, 0.0)


def test_physical_entropy_examples():
    assert physical_entropy(2.0, 1.0, 1.0) == 0.0
    assert physical_entropy(2.0, math.e, math.e**2) == pytest.approx(0.0, abs=1e-15)
    ref = (Decimal(5).ln() - Decimal("1.4") * Decimal(2).ln()) / Decimal("0.4")
    assert physical_entropy(1.4, 2.0, 5.0) == pytest.approx(float(ref), rel=1e-14)
    with pytest.raises(DomainError):
        physical_entropy(1.4, -1.0, 1.0)


def test_rarefaction_integral_examples():
    eos = GammaLaw(1.0, 2.0)
    assert rarefaction_integral(eos, 1.0, 1.0) == 0.0
    assert rarefaction_integral(eos, 1.0, 4.0) == pytest.approx(2.0 * math.sqrt(2.0), rel=1e-15)
    eos = GammaLaw(1.0, 1.4)
    quad, _ = integrate.quad(lambda r: math.sqrt(1.4) * r**-0.8, 0.5, 2.0, epsabs=1e-14, epsrel=1e-13)
    assert rarefaction_integral(eos, 0.5, 2.0) == pytest.approx(quad, rel=1e-10)


def test_rarefaction_integral_additive_and_guarded():
    eos = GammaLaw(1.5, 1.67)
    a, b, c = 0.3, 1.1, 4.2
    total = rarefaction_integral(eos, a, c)
    assert rarefaction_integral(eos, a, b) + rarefaction_integral(eos, b, c) == pytest.approx(total, rel=1e-12)
    with pytest.raises(DomainError):
        rarefaction_integral(eos, 2.0, 1.0)
    with pytest.raises(DomainError):
        rarefaction_integral(eos, 0.0, 1.0)
