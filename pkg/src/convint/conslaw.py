"""Fluxes, flux Jacobians and entropy pairs of barotropic and full Euler.

Barotropic states are ``U = (rho, m)`` with flux rows ``m^T`` and
``m (x) m / rho + p(rho) I``. Full states are ``U = (rho, m, E)`` with the
ideal-gas pressure ``p = (gamma - 1)(E - |m|^2 / (2 rho))`` and an extra
energy row ``(E + p) m^T / rho``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Literal, Sequence

import numpy as np

from convint import eos as _eos
from convint.eos import GammaLaw
from convint.errors import DomainError

System = Literal["baro", "full"]


@dataclass(frozen=True, eq=False)
class ConsStateBaro:
    """Conserved barotropic state ``(rho, m)``."""

    rho: float
    m: np.ndarray

    def __post_init__(self) -> None:
        if not self.rho > 0.0:
            raise DomainError(f"density must be positive, got {self.rho}")
        object.__setattr__(self, "rho", float(self.rho))
        object.__setattr__(self, "m", np.asarray(self.m, dtype=float).reshape(-1))

    def vec(self) -> np.ndarray:
        return np.concatenate(([self.rho], self.m))

    @classmethod
    def from_vec(cls, v: np.ndarray) -> "ConsStateBaro":
        return cls(v[0], v[1:])


@dataclass(frozen=True, eq=False)
class ConsStateFull:
    """Conserved full-Euler state ``(rho, m, E)``; pressure must be positive."""

    rho: float
    m: np.ndarray
    E: float

    def __post_init__(self) -> None:
        if not self.rho > 0.0:
            raise DomainError(f"density must be positive, got {self.rho}")
        m = np.asarray(self.m, dtype=float).reshape(-1)
        object.__setattr__(self, "rho", float(self.rho))
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "E", float(self.E))
        if not self.E - 0.5 * float(m @ m) / self.rho > 0.0:
            raise DomainError("internal energy must be positive")

    def pressure(self, gamma: float) -> float:
        return (gamma - 1.0) * (self.E - 0.5 * float(self.m @ self.m) / self.rho)

    def vec(self) -> np.ndarray:
        return np.concatenate(([self.rho], self.m, [self.E]))

    @classmethod
    def from_vec(cls, v: np.ndarray) -> "ConsStateFull":
        return cls(v[0], v[1:-1], v[-1])

    @classmethod
    def from_primitive(cls, gamma: float, rho: float, velocity: Sequence[float], p: float) -> "ConsStateFull":
        u = np.asarray(velocity, dtype=float)
        return cls(rho, rho * u, p / (gamma - 1.0) + 0.5 * rho * float(u @ u))


@dataclass(frozen=True)
class BaroEntropySpec:
    """Barotropic entropy ``a (|m|^2/(2 rho) + P) + m.b + c rho + d`` with ``a >= 0``."""

    a: float
    b: tuple
    c: float = 0.0
    d: float = 0.0

    def __post_init__(self) -> None:
        if self.a < 0.0:
            raise DomainError(f"entropy weight a must be non-negative, got {self.a}")
        object.__setattr__(self, "b", tuple(float(v) for v in self.b))


@dataclass(frozen=True)
class FullEntropySpec:
    """Full-Euler companion ``-rho Z(log(p / rho^gamma)) + a E + m.b + c``.

    ``Zp`` and ``Zpp`` are the analytic first and second derivatives of ``Z``.
    """

    Z: Callable[[float], float]
    Zp: Callable[[float], float]
    Zpp: Callable[[float], float]
    a: float = 0.0
    b: tuple = ()
    c: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "b", tuple(float(v) for v in self.b))


@dataclass(frozen=True)
class EigenStructure:
    jacobian: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def residuals(self) -> np.ndarray:
        """``|(J - lambda I) r|`` for every eigenpair, relative to ``|J|``."""
        J = self.jacobian
        R = J @ self.eigenvectors - self.eigenvectors * self.eigenvalues
        return np.linalg.norm(R, axis=0) / max(np.linalg.norm(J), 1e-300)


def _gamma_of(law) -> float:
    return law.gamma if isinstance(law, GammaLaw) else float(law)


def _check(system: str, state) -> None:
    if system == "baro" and not isinstance(state, ConsStateBaro):
        raise DomainError("baro system needs a ConsStateBaro")
    if system == "full" and not isinstance(state, ConsStateFull):
        raise DomainError("full system needs a ConsStateFull")
    if system not in ("baro", "full"):
        raise DomainError(f"unknown system {system!r}")


def flux(system: System, state, law) -> np.ndarray:
    """Flux matrix with one row per conserved variable and one column per direction.

    Parameters
    ----------
    system : {"baro", "full"}
    state : ConsStateBaro or ConsStateFull
    law : GammaLaw or float
        Pressure law for ``baro``; adiabatic coefficient (or a law) for ``full``.
    """
    _check(system, state)
    rho, m = state.rho, state.m
    n = m.size
    if system == "baro":
        p = _eos.pressure(law, rho)
        return np.vstack([m, np.outer(m, m) / rho + p * np.eye(n)])
    p = state.pressure(_gamma_of(law))
    return np.vstack([m, np.outer(m, m) / rho + p * np.eye(n), (state.E + p) * m / rho])


def flux_jacobian(system: System, state, law, nu: Sequence[float]) -> np.ndarray:
    """Analytic ``sum_k nu_k grad_U F_k``."""
    _check(system, state)
    nu = np.asarray(nu, dtype=float)
    rho, m = state.rho, state.m
    n = m.size
    u = m / rho
    un = float(u @ nu)
    if system == "baro":
        c2 = _eos.pressure_derivative(law, rho)
        J = np.zeros((n + 1, n + 1))
        J[0, 1:] = nu
        J[1:, 0] = c2 * nu - u * un
        J[1:, 1:] = un * np.eye(n) + np.outer(u, nu)
        return J
    g = _gamma_of(law)
    p = state.pressure(g)
    H = (state.E + p) / rho
    q2 = float(u @ u)
    J = np.zeros((n + 2, n + 2))
    J[0, 1 : n + 1] = nu
    J[1 : n + 1, 0] = -u * un + 0.5 * (g - 1.0) * q2 * nu
    J[1 : n + 1, 1 : n + 1] = un * np.eye(n) + np.outer(u, nu) - (g - 1.0) * np.outer(nu, u)
    J[1 : n + 1, n + 1] = (g - 1.0) * nu
    J[n + 1, 0] = un * (0.5 * (g - 1.0) * q2 - H)
    J[n + 1, 1 : n + 1] = H * nu - (g - 1.0) * un * u
    J[n + 1, n + 1] = g * un
    return J


def _tangents(nu: np.ndarray) -> np.ndarray:
    """Columns spanning the orthogonal complement of ``nu``."""
    n = nu.size
    e = np.eye(n)[int(np.argmin(np.abs(nu)))]
    t1 = e - (e @ nu) * nu
    t1 /= np.linalg.norm(t1)
    if n == 1:
        return np.zeros((1, 0))
    if n == 2:
        return t1[:, None]
    t2 = np.cross(nu, t1)
    return np.column_stack([t1, t2])


def flux_jacobian_eigen(system: System, state, law, nu: Sequence[float]) -> EigenStructure:
    """Flux Jacobian in direction ``nu`` with closed-form eigenpairs.

    Eigenvalues are ordered ``u.nu - c, u.nu (repeated), u.nu + c``.

    Raises
    ------
    DomainError
        If ``|nu|`` differs from one by more than 1e-10.
    """
    nu = np.asarray(nu, dtype=float).reshape(-1)
    if abs(float(np.linalg.norm(nu)) - 1.0) > 1e-10:
        raise DomainError(f"nu must be a unit vector, |nu| = {np.linalg.norm(nu)!r}")
    J = flux_jacobian(system, state, law, nu)
    rho, m = state.rho, state.m
    u = m / rho
    un = float(u @ nu)
    T = _tangents(nu)
    if system == "baro":
        c = _eos.sound_speed(law, rho)
        vecs = [np.concatenate(([1.0], u - c * nu))]
        vals = [un - c]
        for t in T.T:
            vecs.append(np.concatenate(([0.0], t)))
            vals.append(un)
        vecs.append(np.concatenate(([1.0], u + c * nu)))
        vals.append(un + c)
    else:
        g = _gamma_of(law)
        p = state.pressure(g)
        c = math.sqrt(g * p / rho)
        H = (state.E + p) / rho
        vecs = [np.concatenate(([1.0], u - c * nu, [H - c * un]))]
        vals = [un - c]
        vecs.append(np.concatenate(([1.0], u, [0.5 * float(u @ u)])))
        vals.append(un)
        for t in T.T:
            vecs.append(np.concatenate(([0.0], t, [float(u @ t)])))
            vals.append(un)
        vecs.append(np.concatenate(([1.0], u + c * nu, [H + c * un])))
        vals.append(un + c)
    return EigenStructure(J, np.array(vals), np.column_stack(vecs))


def entropy_pair(system: System, spec, state, law) -> tuple[float, np.ndarray]:
    """Closed-form entropy and entropy flux ``(eta, q)``."""
    _check(system, state)
    rho, m = state.rho, state.m
    n = m.size
    b = np.asarray(spec.b, dtype=float) if len(spec.b) else np.zeros(n)
    if b.size != n:
        raise DomainError(f"entropy vector b has length {b.size}, expected {n}")
    mb = float(m @ b)
    if system == "baro":
        if not isinstance(spec, BaroEntropySpec):
            raise DomainError("baro system needs a BaroEntropySpec")
        p = _eos.pressure(law, rho)
        P = _eos.pressure_potential(law, rho)
        kin = 0.5 * float(m @ m) / rho
        eta = spec.a * (kin + P) + mb + spec.c * rho + spec.d
        q = spec.a * (kin + P + p) * m / rho + mb * m / rho + p * b + spec.c * m
        return eta, q
    if not isinstance(spec, FullEntropySpec):
        raise DomainError("full system needs a FullEntropySpec")
    g = _gamma_of(law)
    p = state.pressure(g)
    Zs = spec.Z(math.log(p / rho**g))
    eta = -rho * Zs + spec.a * state.E + mb + spec.c
    q = -m * Zs + spec.a * (state.E + p) * m / rho + mb * m / rho + p * b
    return eta, q


def companion_residual(system: System, spec, state, law, rel_step: float = 1e-6, floor: float = 1e-8) -> float:
    """Largest violation of ``grad q_k = grad eta . grad F_k`` by central differences."""
    _check(system, state)
    U = state.vec()
    cls = ConsStateBaro if system == "baro" else ConsStateFull
    dim = U.size
    n = state.m.size

    def parts(v: np.ndarray) -> tuple[float, np.ndarray, np.ndarray]:
        st = cls.from_vec(v)
        eta, q = entropy_pair(system, spec, st, law)
        return eta, q, flux(system, st, law)

    d_eta = np.zeros(dim)
    d_q = np.zeros((n, dim))
    d_F = np.zeros((dim, n, dim))
    for j in range(dim):
        h = max(rel_step * abs(U[j]), floor)
        e = np.zeros(dim)
        e[j] = h
        ep, qp, Fp = parts(U + e)
        em, qm, Fm = parts(U - e)
        d_eta[j] = (ep - em) / (2 * h)
        d_q[:, j] = (qp - qm) / (2 * h)
        d_F[:, :, j] = (Fp - Fm) / (2 * h)
    rhs = np.einsum("i,ikj->kj", d_eta, d_F)
    return float(np.max(np.abs(d_q - rhs)))


def baro_entropy_hessian(law: GammaLaw, rho: float, m: Sequence[float], a: float = 1.0) -> np.ndarray:
    """Closed-form Hessian ``a/rho [[p' + |m|^2/rho^2, -m^T/rho], [-m/rho, I]]``."""
    m = np.asarray(m, dtype=float)
    n = m.size
    H = np.empty((n + 1, n + 1))
    H[0, 0] = _eos.pressure_derivative(law, rho) + float(m @ m) / rho**2
    H[0, 1:] = -m / rho
    H[1:, 0] = -m / rho
    H[1:, 1:] = np.eye(n)
    return a / rho * H


def full_hessian_matrices(gamma: float, rho: float, m: Sequence[float], p: float) -> tuple[np.ndarray, np.ndarray]:
    """The matrices ``A`` and ``B`` with ``Hess eta = (Z' A + Z'' B) / p^2``."""
    if not (rho > 0.0 and p > 0.0):
        raise DomainError("rho and p must be positive")
    m = np.asarray(m, dtype=float)
    n = m.size
    g1 = gamma - 1.0
    m2 = float(m @ m)
    A = np.zeros((n + 2, n + 2))
    A[0, 0] = gamma * p * p / rho + 0.25 * g1**2 * m2**2 / rho**3
    A[1 : n + 1, 0] = -0.5 * g1**2 * m2 / rho**2 * m
    A[1 : n + 1, 1 : n + 1] = g1 * (p * np.eye(n) + g1 * np.outer(m, m) / rho)
    A[n + 1, 0] = 0.5 * g1**2 * m2 / rho - g1 * p
    A[n + 1, 1 : n + 1] = -(g1**2) * m
    A[n + 1, n + 1] = g1**2 * rho
    k = 0.5 * g1 * m2 / rho - gamma * p
    B = np.zeros((n + 2, n + 2))
    B[0, 0] = -k * k / rho
    B[1 : n + 1, 0] = g1 * m / rho * k
    B[1 : n + 1, 1 : n + 1] = -(g1**2) * np.outer(m, m) / rho
    B[n + 1, 0] = -g1 * k
    B[n + 1, 1 : n + 1] = g1**2 * m
    B[n + 1, n + 1] = -(g1**2) * rho
    for M in (A, B):
        iu = np.triu_indices(n + 2, 1)
        M[iu] = M.T[iu]
    return A, B


@dataclass(frozen=True)
class QuadForms:
    wAw: float
    wBw: float
    wAw_direct: float
    wBw_direct: float


def hessian_quadforms_full(gamma: float, rho: float, m: Sequence[float], p: float, w: Sequence[float]) -> QuadForms:
    """Sum-of-squares forms of ``w^T A w`` and ``w^T B w`` with the direct products."""
    if not (rho > 0.0 and p > 0.0):
        raise DomainError("rho and p must be positive")
    m = np.asarray(m, dtype=float)
    w = np.asarray(w, dtype=float)
    n = m.size
    wt, wx, ws = w[0], w[1 : n + 1], w[n + 1]
    g1 = gamma - 1.0
    kin = 0.5 * float(m @ m) / rho
    core = -float(m @ wx) + rho * ws
    sq_a = ((kin - p / g1) * wt + core) ** 2
    tail = m / rho * wt - wx
    wAw = g1**2 / rho * sq_a + g1 * p * p * wt * wt / rho + g1 * p * float(tail @ tail)
    wBw = -(g1**2) / rho * ((kin - gamma * p / g1) * wt + core) ** 2
    A, B = full_hessian_matrices(gamma, rho, m, p)
    return QuadForms(wAw, wBw, float(w @ A @ w), float(w @ B @ w))
