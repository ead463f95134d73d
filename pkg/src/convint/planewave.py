"""Periodic profiles, third antiderivatives and localized plane-wave operators.

A Lambda direction ``M = [[rho, m^T], [m, U]]`` with kernel vector ``eta``
admits third order constant-coefficient operators ``L`` such that
``div_(t,x) L[g] = 0`` for every smooth ``g`` and ``L[h((t,x).eta)] = M h'''``.
Operators are stored as a single coefficient tensor ``T[i, j, a, b, c]`` acting
on the third derivatives of ``g``; rows and columns ``i, j`` index the block
matrix (0 for density, 1..n for momentum and ``U``).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Protocol, Sequence

import numpy as np
from numpy.polynomial import Polynomial
from scipy import integrate

from convint.errors import ConeError, ContractError, DomainError
from convint.phasegeom import PhasePoint

# ---------------------------------------------------------------------------
# standard mollifier
# ---------------------------------------------------------------------------

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(20)
_PANELS = 12
_TABLE_NODES = 4097


def _bump_raw(s: float) -> float:
    return math.exp(-1.0 / (1.0 - s * s)) if abs(s) < 1.0 else 0.0


@lru_cache(maxsize=None)
def _mollifier_constant() -> float:
    val, _ = integrate.quad(_bump_raw, -1.0, 1.0, epsabs=0.0, epsrel=1e-13, limit=200)
    return val


@lru_cache(maxsize=None)
def _psi_numerators(order: int) -> tuple[Polynomial, ...]:
    """Polynomials ``P_j`` with ``psi^(j)(s) = P_j(s) (1 - s^2)^(-2j) psi(s)``."""
    one_minus = Polynomial([1.0, 0.0, -1.0])
    s = Polynomial([0.0, 1.0])
    polys = [Polynomial([1.0])]
    for j in range(order):
        P = polys[-1]
        polys.append(P.deriv() * one_minus**2 + 4 * j * s * P * one_minus - 2 * s * P)
    return tuple(polys)


def mollifier(s: np.ndarray, j: int = 0) -> np.ndarray:
    """``j``-th derivative of the normalized standard mollifier on ``(-1, 1)``."""
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    inside = np.abs(s) < 1.0
    si = s[inside]
    w = 1.0 - si * si
    P = _psi_numerators(j)[j]
    out[inside] = P(si) * np.exp(-1.0 / w - 2 * j * np.log(w)) / _mollifier_constant()
    return out


@lru_cache(maxsize=None)
def _mollifier_moments(kmax: int) -> tuple[float, ...]:
    C = _mollifier_constant()
    moms = []
    for j in range(kmax):
        if j % 2:
            moms.append(0.0)
            continue
        val, _ = integrate.quad(lambda y: y**j * _bump_raw(y), -1.0, 1.0, epsabs=0.0, epsrel=1e-13, limit=200)
        moms.append(val / C)
    return tuple(moms)


def _primitive_quad(x: np.ndarray, k: int) -> np.ndarray:
    """Cauchy formula for the ``k``-fold primitive at points of ``(-1, 1)``."""
    fact = math.factorial(k - 1)
    length = x + 1.0
    edges = np.linspace(0.0, 1.0, _PANELS + 1)
    u = ((edges[:-1, None] + edges[1:, None]) / 2 + (edges[1:, None] - edges[:-1, None]) / 2 * _GL_NODES).ravel()
    wu = np.broadcast_to((edges[1:, None] - edges[:-1, None]) / 2 * _GL_WEIGHTS, (_PANELS, _GL_NODES.size)).ravel()
    y = -1.0 + length[:, None] * u
    vals = mollifier(y) * (x[:, None] - y) ** (k - 1)
    return (vals @ wu) * length / fact


def _primitive_or_derivative(x: np.ndarray, k: int) -> np.ndarray:
    # k >= 1: primitive, k = 0: mollifier, k = -1: its derivative
    return _primitive_quad(x, k) if k >= 1 else mollifier(x, -k)


@lru_cache(maxsize=None)
def _primitive_table(k: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Values and first two derivatives of the ``k``-fold primitive on a uniform grid."""
    x = np.linspace(-1.0, 1.0, _TABLE_NODES)
    f = np.zeros((3, x.size))
    inner = slice(1, -1)
    for j in range(3):
        f[j, inner] = _primitive_or_derivative(x[inner], k - j)
    f[:, -1] = [mollifier_primitive(np.array([1.0]), k - j)[0] if k - j >= 1 else 0.0 for j in range(3)]
    return x, f, np.array([x[1] - x[0]])


def _hermite5(x: np.ndarray, k: int) -> np.ndarray:
    grid, f, hh = _primitive_table(k)
    h = float(hh[0])
    i = np.clip(((x + 1.0) / h).astype(int), 0, grid.size - 2)
    t = (x - grid[i]) / h
    t2, t3 = t * t, t * t * t
    s = 1.0 - t
    # quintic Hermite basis on [0, 1]
    h0 = 1 - 10 * t3 + 15 * t3 * t - 6 * t3 * t2
    h1 = t - 6 * t3 + 8 * t3 * t - 3 * t3 * t2
    h2 = 0.5 * (t2 - 3 * t3 + 3 * t3 * t - t3 * t2)
    g0 = 1 - 10 * s**3 + 15 * s**4 - 6 * s**5
    g1 = -(s - 6 * s**3 + 8 * s**4 - 3 * s**5)
    g2 = 0.5 * (s**2 - 3 * s**3 + 3 * s**4 - s**5)
    return (
        h0 * f[0, i] + h * h1 * f[1, i] + h * h * h2 * f[2, i]
        + g0 * f[0, i + 1] + h * g1 * f[1, i + 1] + h * h * g2 * f[2, i + 1]
    )


def mollifier_primitive(x: np.ndarray, k: int) -> np.ndarray:
    """``k``-fold repeated integral of the mollifier from ``-1``.

    For ``x >= 1`` the moment expansion gives a polynomial. Inside ``(-1, 1)``
    a quintic Hermite table is used; its nodes come from the Cauchy formula
    ``int (x-y)^(k-1)/(k-1)! psi(y) dy`` evaluated by composite Gauss-Legendre.
    """
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    fact = math.factorial(k - 1)
    hi = x >= 1.0
    if np.any(hi):
        moms = _mollifier_moments(k)
        xh = x[hi]
        acc = np.zeros_like(xh)
        for j in range(k):
            acc += math.comb(k - 1, j) * xh ** (k - 1 - j) * (-1.0) ** j * moms[j]
        out[hi] = acc / fact
    mid = (x > -1.0) & ~hi
    if np.any(mid):
        out[mid] = _hermite5(x[mid], k)
    return out


# ---------------------------------------------------------------------------
# periodic profiles
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ProfileStack:
    """1-periodic zero-mean scalar profile with derivatives through order 4.

    Parameters
    ----------
    evaluate : callable
        Maps an array ``t`` to an array of shape ``(5,) + t.shape`` holding
        the value and its first four derivatives.
    third_antiderivative : callable or None
        Optional closed-form provider of the stack of the periodic third
        antiderivative; otherwise :func:`antiderivative3` falls back to FFT.
    """

    evaluate: Callable[[np.ndarray], np.ndarray]
    third_antiderivative: Callable[[], "ProfileStack"] | None = field(default=None, compare=False)
    label: str = ""

    def __call__(self, t) -> np.ndarray:
        return self.evaluate(np.asarray(t, dtype=float))


def _gl_period(m: int = 64) -> tuple[np.ndarray, np.ndarray]:
    edges = np.linspace(0.0, 1.0, m + 1)
    nodes = ((edges[:-1, None] + edges[1:, None]) / 2 + (edges[1:, None] - edges[:-1, None]) / 2 * _GL_NODES).ravel()
    weights = np.broadcast_to((edges[1:, None] - edges[:-1, None]) / 2 * _GL_WEIGHTS, (m, _GL_NODES.size)).ravel()
    return nodes, weights


def profile_mean(f: ProfileStack) -> float:
    """Mean of ``f`` over one period by composite Gauss-Legendre."""
    nodes, weights = _gl_period()
    return float(f(nodes)[0] @ weights)


def mollified_step(tau: float, delta: float) -> ProfileStack:
    """Smooth 1-periodic two-level profile with exact plateaus.

    The profile is the convolution of ``tau - 1_[0, tau)`` (extended
    periodically) with the mollifier of width ``delta``. It equals ``tau - 1``
    on ``[delta, tau - delta]`` and ``tau`` on ``[tau + delta, 1 - delta]``.

    Parameters
    ----------
    tau : float
        Level split in ``(0, 1)``.
    delta : float
        Mollification width, ``0 < delta < min(tau, 1 - tau) / 2``.
    """
    tau = float(tau)
    delta = float(delta)
    if not 0.0 < tau < 1.0:
        raise DomainError(f"tau must lie in (0, 1), got {tau}")
    if not 0.0 < delta < 0.5 * min(tau, 1.0 - tau):
        raise DomainError(f"delta must lie in (0, {0.5 * min(tau, 1.0 - tau)}), got {delta}")
    shifts = (0.0, tau, 1.0)
    signs = (-1.0, 1.0, -1.0)

    def evaluate(t: np.ndarray) -> np.ndarray:
        s = np.mod(t, 1.0)
        out = np.zeros((5,) + s.shape)
        out[0] = tau
        for c, sg in zip(shifts, signs):
            x = (s - c) / delta
            out[0] += sg * mollifier_primitive(x, 1)
            for j in range(1, 5):
                out[j] += sg * mollifier(x, j - 1) / delta**j
        return out

    def third() -> ProfileStack:
        return _step_antiderivative3(tau, delta, evaluate)

    return ProfileStack(evaluate, third, label=f"step(tau={tau}, delta={delta})")


def _step_antiderivative3(tau: float, delta: float, fstack: Callable) -> ProfileStack:
    shifts = (0.0, tau, 1.0)
    signs = (-1.0, 1.0, -1.0)

    def F(s: np.ndarray, level: int) -> np.ndarray:
        """``level``-th derivative of the cubic-plus-mollifier primitive on ``[0, 1]``."""
        k = 3 - level
        out = tau * s**k / math.factorial(k)
        for c, sg in zip(shifts, signs):
            out = out + sg * delta**k * mollifier_primitive((s - c) / delta, k + 1)
        return out

    def F5(s: float) -> float:
        arr = np.array([s])
        out = tau * arr**4 / 24.0
        for c, sg in zip(shifts, signs):
            out = out + sg * delta**4 * mollifier_primitive((arr - c) / delta, 5)
        return float(out[0])

    zero, one = np.array([0.0]), np.array([1.0])
    q2 = 0.5 * float(F(zero, 1)[0] - F(one, 1)[0])
    q1 = float(F(zero, 0)[0] - F(one, 0)[0]) - q2
    q0 = -(F5(1.0) - F5(0.0)) - q1 / 2.0 - q2 / 3.0

    def evaluate(t: np.ndarray) -> np.ndarray:
        s = np.mod(t, 1.0)
        fs = fstack(s)
        out = np.empty((5,) + s.shape)
        out[0] = F(s, 0) + q0 + q1 * s + q2 * s * s
        out[1] = F(s, 1) + q1 + 2.0 * q2 * s
        out[2] = F(s, 2) + 2.0 * q2
        out[3] = fs[0]
        out[4] = fs[1]
        return out

    return ProfileStack(evaluate, None, label=f"h[step(tau={tau}, delta={delta})]")


def antiderivative3(f: ProfileStack, n_modes: int = 1024) -> ProfileStack:
    """Periodic zero-mean third antiderivative ``h`` with ``h''' = f``.

    Raises
    ------
    ContractError
        If ``f`` has mean larger than 1e-6 in absolute value.
    """
    mean = profile_mean(f)
    if abs(mean) > 1e-6:
        raise ContractError(f"profile has nonzero mean {mean:.3e}")
    if f.third_antiderivative is not None:
        return f.third_antiderivative()
    t = np.arange(n_modes) / n_modes
    coef = np.fft.rfft(f(t)[0]) / n_modes
    coef[0] = 0.0
    freq = 2.0 * math.pi * np.arange(coef.size)
    mult = np.zeros(coef.size, dtype=complex)
    mult[1:] = 1.0 / (1j * freq[1:]) ** 3
    hc = coef * mult
    if n_modes % 2 == 0:
        hc[-1] *= 0.5

    def evaluate(tt: np.ndarray) -> np.ndarray:
        phase = np.exp(1j * np.multiply.outer(tt, freq))
        out = np.empty((5,) + tt.shape)
        for j in range(3):
            out[j] = 2.0 * np.real(phase @ (hc * (1j * freq) ** j))
        fs = f(tt)
        out[3] = fs[0]
        out[4] = fs[1]
        return out

    return ProfileStack(evaluate, None, label=f"h[{f.label}]")


def sinusoid(freq: int = 1) -> ProfileStack:
    """Profile ``sin(2 pi freq t)`` with its exact derivative stack."""
    w = 2.0 * math.pi * freq

    def evaluate(t: np.ndarray) -> np.ndarray:
        s, c = np.sin(w * t), np.cos(w * t)
        return np.stack([s, w * c, -(w**2) * s, -(w**3) * c, w**4 * s])

    return ProfileStack(evaluate, None, label=f"sin(2pi*{freq}t)")


# ---------------------------------------------------------------------------
# jets of space-time fields
# ---------------------------------------------------------------------------


@dataclass
class Jet:
    """Derivatives of a scalar field at a batch of points.

    ``d[k]`` has shape ``(B,) + (D,) * k`` and holds the symmetric tensor of
    ``k``-th partial derivatives in coordinates ``(t, x_1, ..., x_n)``.
    """

    d: list

    @property
    def order(self) -> int:
        return len(self.d) - 1


class SpaceTimeField(Protocol):
    def jet(self, z: np.ndarray, order: int) -> Jet: ...


def _as_points(t, x) -> np.ndarray:
    t = np.atleast_1d(np.asarray(t, dtype=float))
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[0] != t.shape[0]:
        x = np.broadcast_to(x, (t.shape[0], x.shape[1]))
    return np.column_stack([t, x])


def _outer_power(v: np.ndarray, k: int) -> np.ndarray:
    out = np.ones(())
    for _ in range(k):
        out = np.multiply.outer(out, v)
    return out


@dataclass(frozen=True)
class PlaneWaveField:
    """``g(z) = amp * k^-3 * h(k z.eta)`` for a profile stack ``h``."""

    profile: ProfileStack
    eta: np.ndarray
    k: float = 1.0
    amp: float = 1.0

    def jet(self, z: np.ndarray, order: int) -> Jet:
        eta = np.asarray(self.eta, dtype=float)
        theta = self.k * (z @ eta)
        hs = self.profile(theta)
        d = []
        for j in range(order + 1):
            coef = self.amp * self.k ** (j - 3) * hs[j]
            d.append(coef.reshape((-1,) + (1,) * j) * _outer_power(eta, j))
        return Jet(d)


@dataclass(frozen=True)
class PolynomialField:
    """Polynomial ``sum c_alpha z^alpha`` given as ``{alpha: c_alpha}``."""

    coeffs: dict

    def jet(self, z: np.ndarray, order: int) -> Jet:
        B, D = z.shape
        terms = [(np.asarray(alpha), c) for alpha, c in self.coeffs.items()]

        def value(cnt: np.ndarray) -> np.ndarray:
            val = np.zeros(B)
            for alpha, c in terms:
                if np.any(alpha < cnt):
                    continue
                fac = c * np.prod([math.perm(int(a), int(m)) for a, m in zip(alpha, cnt)])
                val = val + fac * np.prod(z ** (alpha - cnt), axis=1)
            return val

        return Jet([_symmetric_tensor(B, D, k, value) for k in range(order + 1)])


def _symmetric_tensor(B: int, D: int, k: int, value: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """Fill a batch of symmetric ``k``-tensors from a function of derivative counts."""
    out = np.zeros((B,) + (D,) * k)
    for idx in itertools.combinations_with_replacement(range(D), k):
        cnt = np.bincount(np.array(idx, dtype=int), minlength=D) if k else np.zeros(D, int)
        val = value(cnt)
        for perm in set(itertools.permutations(idx)):
            out[(slice(None),) + perm] = val
    return out


def _plateau_1d(s: np.ndarray, half: float, ramp: float, order: int) -> np.ndarray:
    """Derivatives of ``chi(s) = Psi((R - s)/w) Psi((R + s)/w)``, ``R = half + ramp/2``.

    ``chi`` equals one on ``|s| <= half`` and vanishes for ``|s| >= half + ramp``.
    """
    w = 0.5 * ramp
    R = half + w
    a, b = (R - s) / w, (R + s) / w
    A = [mollifier_primitive(a, 1)] + [(-1.0 / w) ** j * mollifier(a, j - 1) for j in range(1, order + 1)]
    Bv = [mollifier_primitive(b, 1)] + [(1.0 / w) ** j * mollifier(b, j - 1) for j in range(1, order + 1)]
    out = np.zeros((order + 1,) + s.shape)
    for j in range(order + 1):
        for i in range(j + 1):
            out[j] += math.comb(j, i) * A[i] * Bv[j - i]
    return out


@dataclass(frozen=True)
class BoxCutoff:
    """Smooth cutoff equal to one on a box in a rotated frame.

    ``Phi(z) = prod_a chi_a((Q^T (z - center))_a)`` where ``Q`` is orthogonal
    and ``chi_a`` equals one on ``[-half_a, half_a]``.
    """

    center: np.ndarray
    half: np.ndarray
    ramp: np.ndarray
    frame: np.ndarray

    def jet(self, z: np.ndarray, order: int) -> Jet:
        Q = np.asarray(self.frame, dtype=float)
        D = Q.shape[0]
        y = (z - np.asarray(self.center, dtype=float)) @ Q
        chis = [_plateau_1d(y[:, a], float(self.half[a]), float(self.ramp[a]), order) for a in range(D)]
        d = []
        def value(cnt: np.ndarray) -> np.ndarray:
            val = np.ones(z.shape[0])
            for a in range(D):
                val = val * chis[a][cnt[a]]
            return val

        for k in range(order + 1):
            loc = _symmetric_tensor(z.shape[0], D, k, value)
            for _ in range(k):
                loc = np.tensordot(loc, Q, axes=([1], [1]))
            d.append(loc)
        return Jet(d)


def _leibniz(f: Jet, g: Jet, order: int) -> Jet:
    letters = "abcd"
    d = []
    for k in range(order + 1):
        acc = None
        for mask in range(1 << k):
            S = [i for i in range(k) if mask >> i & 1]
            C = [i for i in range(k) if not mask >> i & 1]
            spec = "z" + "".join(letters[i] for i in S) + ",z" + "".join(letters[i] for i in C)
            spec += "->z" + letters[:k]
            term = np.einsum(spec, f.d[len(S)], g.d[len(C)])
            acc = term if acc is None else acc + term
        d.append(acc)
    return Jet(d)


@dataclass(frozen=True)
class ProductField:
    """Pointwise product of two fields, differentiated by the Leibniz rule."""

    left: SpaceTimeField
    right: SpaceTimeField

    def jet(self, z: np.ndarray, order: int) -> Jet:
        return _leibniz(self.left.jet(z, order), self.right.jet(z, order), order)


# ---------------------------------------------------------------------------
# operators
# ---------------------------------------------------------------------------

_AXIS = {"t": 0, "1": 1, "2": 2, "3": 3}


@dataclass(frozen=True)
class WaveOperator:
    """Localized plane-wave operator for a Lambda direction.

    Attributes
    ----------
    n : int
        Space dimension.
    eta : numpy.ndarray
        Space-time kernel direction.
    delta_point : PhasePoint
        The Lambda direction ``(rho_bar, m_bar, U_bar)``.
    rotation : numpy.ndarray
        Block orthogonal ``A = diag(1, B)`` with ``A^T eta = (a, |eta_x|, 0...)``.
    tensor : numpy.ndarray
        Coefficients ``T[i, j, a, b, c]`` in the original coordinates.
    """

    n: int
    eta: np.ndarray
    delta_point: PhasePoint
    rotation: np.ndarray
    eta_rot: np.ndarray
    delta_rot: PhasePoint
    tensor: np.ndarray
    time_aligned: bool


def _completion(v: np.ndarray) -> np.ndarray:
    """Orthogonal matrix with first column ``v`` (unit), by a Householder reflection."""
    n = v.size
    e1 = np.zeros(n)
    e1[0] = 1.0
    w = v - e1
    nw = float(w @ w)
    if nw < 1e-30:
        return np.eye(n)
    return np.eye(n) - 2.0 * np.outer(w, w) / nw


def _put(T: np.ndarray, i: int, j: int, coef: float, terms: str) -> None:
    for term in terms.split():
        sign = -1.0 if term[0] == "-" else 1.0
        body = term.lstrip("+-")
        mult = 1.0
        if body[0].isdigit() and len(body) == 4:
            mult, body = float(body[0]), body[1:]
        a, b, c = (_AXIS[ch] for ch in body)
        T[i, j, a, b, c] += sign * mult * coef
        if i != j:
            T[j, i, a, b, c] += sign * mult * coef


def _table_time(D: int, Ubar: np.ndarray, a: float) -> np.ndarray:
    T = np.zeros((D,) * 5)
    n = D - 1
    for i in range(n):
        for j in range(n):
            T[0, 0, 0, i + 1, j + 1] += Ubar[i, j] / a**3
    for k in range(n):
        for i in range(n):
            T[0, k + 1, 0, 0, i + 1] -= Ubar[i, k] / a**3
            T[k + 1, 0, 0, 0, i + 1] -= Ubar[i, k] / a**3
    for i in range(n):
        for j in range(n):
            T[i + 1, j + 1, 0, 0, 0] = Ubar[i, j] / a**3
    return T


def _table_2d(rho: float, m: np.ndarray, b: float) -> np.ndarray:
    T = np.zeros((3,) * 5)
    r, m2 = rho / b**3, m[1] / b**3
    _put(T, 0, 0, r, "111 122")
    _put(T, 0, 1, r, "-t11 -t22")
    _put(T, 0, 1, m2, "-112 -222")
    _put(T, 0, 2, m2, "111 122")
    _put(T, 1, 1, r, "tt1")
    _put(T, 1, 1, m2, "2t12")
    _put(T, 1, 2, r, "tt2")
    _put(T, 1, 2, m2, "-t11 t22")
    T[2, 2] = -T[1, 1]
    return T


def _table_3d(rho: float, m: np.ndarray, U: np.ndarray, b: float) -> np.ndarray:
    T = np.zeros((4,) * 5)
    r, m2, m3 = rho / b**3, m[1] / b**3, m[2] / b**3
    s, u23 = (U[0, 0] + U[1, 1]) / b**3, U[1, 2] / b**3
    _put(T, 0, 0, r, "111 122")
    _put(T, 0, 1, r, "-t11 -t22")
    _put(T, 0, 1, m2, "-112 -222")
    _put(T, 0, 1, m3, "-113 -333")
    _put(T, 0, 2, m2, "111 122")
    _put(T, 0, 3, m3, "111 133")
    _put(T, 1, 1, r, "tt1")
    _put(T, 1, 1, m2, "2t12")
    _put(T, 1, 1, m3, "2t13")
    _put(T, 1, 1, s, "122 -133")
    _put(T, 1, 1, u23, "2123 -233 -222")
    _put(T, 1, 2, r, "tt2")
    _put(T, 1, 2, m2, "-t11 t22")
    _put(T, 1, 2, s, "-112 -233")
    _put(T, 1, 2, u23, "-113 -333 133 122")
    _put(T, 1, 3, m3, "-t11 t33")
    _put(T, 1, 3, s, "113 223")
    _put(T, 1, 3, u23, "233 -112")
    _put(T, 2, 2, r, "-tt1")
    _put(T, 2, 2, m2, "-2t12")
    _put(T, 2, 2, s, "111 133")
    _put(T, 2, 2, u23, "233 -112")
    _put(T, 2, 3, u23, "111 133 -223 -113")
    T[3, 3] = -T[1, 1] - T[2, 2]
    return T


def _symmetrize_derivs(T: np.ndarray) -> np.ndarray:
    perms = list(itertools.permutations((2, 3, 4)))
    return sum(np.transpose(T, (0, 1) + p) for p in perms) / len(perms)


def build_operator(delta_point: PhasePoint, eta: Sequence[float], kernel_tol: float = 1e-10) -> WaveOperator:
    """Assemble the plane-wave operator for a Lambda direction and kernel vector.

    Raises
    ------
    DomainError
        If ``eta`` vanishes or has the wrong length.
    ConeError
        If ``eta`` is not a kernel vector of the block matrix of ``delta_point``.
    """
    n = delta_point.n
    D = n + 1
    eta = np.asarray(eta, dtype=float).reshape(-1)
    if eta.size != D:
        raise DomainError(f"eta must have length {D}, got {eta.size}")
    norm_eta = float(np.linalg.norm(eta))
    if norm_eta == 0.0:
        raise DomainError("eta must be nonzero")
    M = delta_point.as_block()
    scale = max(abs(delta_point.rho), float(np.linalg.norm(delta_point.m)), float(np.linalg.norm(delta_point.U)), 1e-300)
    res = float(np.linalg.norm(M @ eta))
    if res > kernel_tol * scale * norm_eta:
        raise ConeError(f"eta is not a kernel vector: |M eta| = {res:.3e}")
    bx = float(np.linalg.norm(eta[1:]))
    A = np.eye(D)
    if bx <= 1e-14 * norm_eta:
        T = _table_time(D, delta_point.U, eta[0])
        return WaveOperator(n, eta, delta_point, A, eta.copy(), delta_point, T, True)
    A[1:, 1:] = _completion(eta[1:] / bx)
    eta_rot = A.T @ eta
    eta_rot[2:] = 0.0
    eta_rot[1] = bx
    M_rot = A.T @ M @ A
    rot = PhasePoint.from_block(M_rot)
    if n == 2:
        T_rot = _table_2d(rot.rho, rot.m, bx)
    else:
        T_rot = _table_3d(rot.rho, rot.m, rot.U, bx)
    T_rot = _symmetrize_derivs(T_rot)
    T = np.einsum("ik,jl,klxyz,ax,by,cz->ijabc", A, A, T_rot, A, A, A, optimize=True)
    return WaveOperator(n, eta, delta_point, A, eta_rot, rot, T, False)


def _jet_of(g, t, x, order: int) -> Jet:
    if isinstance(g, Jet):
        jet = g
    else:
        if not hasattr(g, "jet"):
            raise ContractError("field does not provide a derivative stack")
        jet = g.jet(_as_points(t, x), order)
    if len(jet.d) <= order or jet.d[order] is None:
        raise ContractError(f"derivative stack of order {order} is missing")
    return jet


def operator_blocks(op: WaveOperator, g, t, x) -> np.ndarray:
    """Batch evaluation of ``L[g]`` as block matrices of shape ``(B, 1+n, 1+n)``."""
    jet = _jet_of(g, t, x, 3)
    return np.einsum("ijabc,zabc->zij", op.tensor, jet.d[3], optimize=True)


def apply_operator(op: WaveOperator, g, t: float, x: Sequence[float]) -> PhasePoint:
    """Evaluate ``(L_rho[g], L_m[g], L_U[g])`` at one space-time point."""
    blk = operator_blocks(op, g, t, x)
    return PhasePoint.from_block(blk[0])


def divergence_blocks(op: WaveOperator, g, t, x) -> np.ndarray:
    """Batch evaluation of ``div_(t,x) L[g]``; row 0 is mass, rows 1..n momentum."""
    jet = _jet_of(g, t, x, 4)
    return np.einsum("ijabc,zjabc->zi", op.tensor, jet.d[4], optimize=True)


def pde_residual(op: WaveOperator, g, t: float, x: Sequence[float]) -> tuple[float, np.ndarray]:
    """Return ``(d_t L_rho + div L_m, d_t L_m + div L_U)`` at one point."""
    r = divergence_blocks(op, g, t, x)[0]
    return float(r[0]), r[1:]


# ---------------------------------------------------------------------------
# weak-* decay
# ---------------------------------------------------------------------------


def _cut_weight(theta: np.ndarray) -> np.ndarray:
    return np.where((theta >= 0.0) & (theta <= 1.0), np.cos(0.5 * math.pi * theta) ** 2, 0.0)


def weak_star_pairing(f: ProfileStack, eta: Sequence[float], k: float, breaks: Sequence[float] = ()) -> float:
    """Pair ``f(k (t,x).eta)`` with a test function cut by a half-space.

    The test function is ``cos^2(pi theta / 2) 1_{0 <= theta <= 1}`` in the
    unit coordinate ``theta`` along ``eta`` times a unit-mass profile in the
    orthogonal directions, so the space-time integral reduces to one dimension.
    The jump at ``theta = 0`` makes the pairing decay exactly like ``1/k``;
    a smooth test function would give faster decay.
    """
    L = float(np.linalg.norm(np.asarray(eta, dtype=float)))
    if L == 0.0:
        raise DomainError("eta must be nonzero")
    freq = k * L
    per = np.arange(0.0, math.ceil(freq) + 1.0)
    cuts = [per]
    for b in breaks:
        cuts.append(per + b)
    pts = np.unique(np.concatenate(cuts) / freq)
    pts = np.unique(np.concatenate(([0.0, 1.0], pts[(pts > 0.0) & (pts < 1.0)])))
    a, b = pts[:-1], pts[1:]
    nodes = ((a + b)[:, None] / 2 + (b - a)[:, None] / 2 * _GL_NODES).ravel()
    wts = ((b - a)[:, None] / 2 * _GL_WEIGHTS).ravel()
    return float(np.sum(f(freq * nodes)[0] * _cut_weight(nodes) * wts))


def loglog_slope(ks: Sequence[float], values: Sequence[float]) -> float:
    """Least-squares slope of ``log|values|`` against ``log ks``."""
    return float(np.polyfit(np.log(np.asarray(ks, float)), np.log(np.abs(np.asarray(values, float))), 1)[0])
