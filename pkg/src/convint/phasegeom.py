"""Extended phase-space geometry: constraint set, wave cone, hull and H_N families.

A phase point is a triple ``(rho, m, U)`` with ``U`` symmetric and traceless.
The constraint set is

    K = {U = m (x) m / rho + (p(rho) - 2c/n) I},

and its Lambda-convex hull is the sublevel set ``{e <= c}`` of

    e(rho, m, U) = n/2 * lambda_max(m (x) m / rho + p(rho) I - U).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from convint import eos as _eos
from convint.eos import GammaLaw
from convint.errors import ConeError, ConstraintError, DomainError, InfeasibleError

_TINY = 1e-300


def _triu_index(n: int) -> list[tuple[int, int]]:
    idx = [(i, j) for i in range(n) for j in range(i, n)]
    return idx[:-1]


@dataclass(frozen=True, eq=False)
class PhasePoint:
    """Point ``(rho, m, U)`` of the extended phase space.

    ``U`` is stored as its upper triangle in row-major order with the last
    diagonal entry omitted; that entry is recovered from ``tr U = 0``.

    Parameters
    ----------
    rho : float
        Density coordinate. Sign-free so that differences are representable.
    m : numpy.ndarray
        Momentum vector of length ``n``.
    u : numpy.ndarray
        Independent entries of ``U`` (length 2 for ``n = 2``, 5 for ``n = 3``).
    """

    rho: float
    m: np.ndarray
    u: np.ndarray

    def __post_init__(self) -> None:
        m = np.asarray(self.m, dtype=float).reshape(-1)
        u = np.asarray(self.u, dtype=float).reshape(-1)
        n = m.size
        if n not in (2, 3):
            raise DomainError(f"dimension must be 2 or 3, got {n}")
        if u.size != n * (n + 1) // 2 - 1:
            raise DomainError(f"U storage for n={n} needs {n * (n + 1) // 2 - 1} entries, got {u.size}")
        object.__setattr__(self, "rho", float(self.rho))
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "u", u)

    @property
    def n(self) -> int:
        return self.m.size

    @cached_property
    def U(self) -> np.ndarray:
        n = self.n
        out = np.zeros((n, n))
        for val, (i, j) in zip(self.u, _triu_index(n)):
            out[i, j] = val
            out[j, i] = val
        out[n - 1, n - 1] = -np.trace(out)
        return out

    @classmethod
    def from_matrix(cls, rho: float, m: Sequence[float], U: np.ndarray) -> "PhasePoint":
        """Build a point from a full matrix; ``U`` is symmetrized first."""
        U = np.asarray(U, dtype=float)
        U = 0.5 * (U + U.T)
        n = U.shape[0]
        return cls(rho, np.asarray(m, dtype=float), np.array([U[i, j] for i, j in _triu_index(n)]))

    def as_block(self) -> np.ndarray:
        """Return the symmetric ``(1+n) x (1+n)`` matrix ``[[rho, m^T], [m, U]]``."""
        n = self.n
        M = np.empty((n + 1, n + 1))
        M[0, 0] = self.rho
        M[0, 1:] = self.m
        M[1:, 0] = self.m
        M[1:, 1:] = self.U
        return M

    @classmethod
    def from_block(cls, M: np.ndarray) -> "PhasePoint":
        M = np.asarray(M, dtype=float)
        M = 0.5 * (M + M.T)
        return cls.from_matrix(M[0, 0], M[0, 1:], M[1:, 1:])

    def vec(self) -> np.ndarray:
        return np.concatenate(([self.rho], self.m, self.u))

    @classmethod
    def from_vec(cls, v: np.ndarray, n: int) -> "PhasePoint":
        v = np.asarray(v, dtype=float)
        return cls(v[0], v[1 : 1 + n], v[1 + n :])

    def __add__(self, other: "PhasePoint") -> "PhasePoint":
        return PhasePoint(self.rho + other.rho, self.m + other.m, self.u + other.u)

    def __sub__(self, other: "PhasePoint") -> "PhasePoint":
        return PhasePoint(self.rho - other.rho, self.m - other.m, self.u - other.u)

    def __mul__(self, s: float) -> "PhasePoint":
        return PhasePoint(self.rho * s, self.m * s, self.u * s)

    __rmul__ = __mul__

    def __neg__(self) -> "PhasePoint":
        return self * -1.0

    def __repr__(self) -> str:
        return f"PhasePoint(rho={self.rho!r}, m={self.m.tolist()!r}, u={self.u.tolist()!r})"

    def to_json(self) -> dict:
        return {"rho": self.rho, "m": self.m.tolist(), "U": self.u.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "PhasePoint":
        return cls(float(obj["rho"]), np.asarray(obj["m"], float), np.asarray(obj["U"], float))


@dataclass(frozen=True)
class WeightedFamily:
    """Weighted list of phase points whose weights sum to one.

    Parameters
    ----------
    entries : tuple of (float, PhasePoint)
        Pairs ``(tau_i, p_i)`` with ``tau_i > 0``.
    merge_hint : tuple or None
        Optional merge tree recorded by :func:`build_HN_family`. Each level is a
        tuple of index pairs into the family at that level.
    """

    entries: tuple
    merge_hint: tuple | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        entries = tuple((float(t), p) for t, p in self.entries)
        if not entries:
            raise DomainError("a weighted family needs at least one entry")
        if any(not t > 0.0 for t, _ in entries):
            raise DomainError("family weights must be positive")
        total = math.fsum(t for t, _ in entries)
        if abs(total - 1.0) > 1e-12:
            raise DomainError(f"family weights sum to {total!r}, expected 1")
        object.__setattr__(self, "entries", entries)

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def weights(self) -> list[float]:
        return [t for t, _ in self.entries]

    @property
    def points(self) -> list[PhasePoint]:
        return [p for _, p in self.entries]

    def barycenter(self) -> PhasePoint:
        n = self.entries[0][1].n
        acc = np.zeros(1 + n + n * (n + 1) // 2 - 1)
        for t, p in self.entries:
            acc += t * p.vec()
        return PhasePoint.from_vec(acc, n)


@dataclass(frozen=True)
class RelaxationContext:
    """Pressure law, dimension and trace constant shared by hull computations.

    Parameters
    ----------
    eos : GammaLaw
        Pressure law.
    n : int
        Space dimension, 2 or 3.
    c : float
        Prescribed trace constant (the target value of ``e``).
    tol_c, tol_K : float
        Absolute tolerances for ``|e - c|`` and the distance to ``K``.
    """

    eos: GammaLaw
    n: int
    c: float
    tol_c: float = 1e-9
    tol_K: float = 1e-9

    def __post_init__(self) -> None:
        if self.n not in (2, 3):
            raise DomainError(f"dimension must be 2 or 3, got {self.n}")
        if not self.c > 0.0:
            raise DomainError(f"trace constant c must be positive, got {self.c}")
        if not (self.tol_c > 0.0 and self.tol_K > 0.0):
            raise DomainError("tolerances must be positive")


class HullClass(enum.Enum):
    INTERIOR_U = "InteriorU"
    BOUNDARY_U = "BoundaryU"
    OUTSIDE = "Outside"
    IN_K = "InK"


@dataclass(frozen=True)
class WaveConeResult:
    member: bool
    det: float
    eta: np.ndarray | None


# --- symmetric eigenvalues -------------------------------------------------


def lambda_max_sym(A: np.ndarray) -> float:
    """Largest eigenvalue of a symmetric 2x2 or 3x3 matrix in closed form."""
    A = 0.5 * (np.asarray(A, dtype=float) + np.asarray(A, dtype=float).T)
    if A.shape == (2, 2):
        mean = 0.5 * (A[0, 0] + A[1, 1])
        half = 0.5 * (A[0, 0] - A[1, 1])
        return mean + math.hypot(half, A[0, 1])
    if A.shape == (3, 3):
        return float(_eig3_closed(A)[0])
    raise DomainError(f"closed-form eigenvalues need a 2x2 or 3x3 matrix, got {A.shape}")


def _eig3_closed(A: np.ndarray) -> np.ndarray:
    """Eigenvalues of a symmetric 3x3 matrix in descending order (trigonometric form)."""
    p1 = A[0, 1] ** 2 + A[0, 2] ** 2 + A[1, 2] ** 2
    q = np.trace(A) / 3.0
    p2 = (A[0, 0] - q) ** 2 + (A[1, 1] - q) ** 2 + (A[2, 2] - q) ** 2 + 2.0 * p1
    if p2 <= 1e-300:
        return np.array([q, q, q])
    p = math.sqrt(p2 / 6.0)
    B = (A - q * np.eye(3)) / p
    r = min(1.0, max(-1.0, np.linalg.det(B) / 2.0))
    phi = math.acos(r) / 3.0
    l1 = q + 2.0 * p * math.cos(phi)
    l3 = q + 2.0 * p * math.cos(phi + 2.0 * math.pi / 3.0)
    return np.array([l1, 3.0 * q - l1 - l3, l3])


def sym_eigh(A: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a symmetric matrix, ascending eigenvalues."""
    A = np.asarray(A, dtype=float)
    return np.linalg.eigh(0.5 * (A + A.T))


# --- core maps ---------------------------------------------------------------


def constraint_matrix(eos: GammaLaw, pt: PhasePoint) -> np.ndarray:
    """Return ``m (x) m / rho + p(rho) I - U``."""
    if not pt.rho > 0.0:
        raise DomainError(f"density must be positive, got {pt.rho}")
    return np.outer(pt.m, pt.m) / pt.rho + _eos.pressure(eos, pt.rho) * np.eye(pt.n) - pt.U


def e_functional(ctx: RelaxationContext, pt: PhasePoint) -> float:
    """Return ``n/2 * lambda_max(m (x) m / rho + p(rho) I - U)``."""
    return 0.5 * pt.n * lambda_max_sym(constraint_matrix(ctx.eos, pt))


def lift_to_K(ctx: RelaxationContext, rho: float, m: Sequence[float]) -> PhasePoint:
    """Lift ``(rho, m)`` on the trace surface to the unique point of ``K``.

    Raises
    ------
    ConstraintError
        If ``|m|^2 / rho + n p(rho)`` differs from ``2c`` by more than 1e-9.
    """
    m = np.asarray(m, dtype=float)
    if m.size != ctx.n:
        raise DomainError(f"momentum has length {m.size}, expected {ctx.n}")
    p = _eos.pressure(ctx.eos, rho)
    defect = float(m @ m) / rho + ctx.n * p - 2.0 * ctx.c
    if abs(defect) > 1e-9:
        raise ConstraintError(f"trace identity violated by {defect:.3e}")
    U = np.outer(m, m) / rho + (p - 2.0 * ctx.c / ctx.n) * np.eye(ctx.n)
    U -= np.trace(U) / ctx.n * np.eye(ctx.n)
    return PhasePoint.from_matrix(rho, m, U)


def in_wave_cone(delta: PhasePoint, tol: float = 1e-10) -> WaveConeResult:
    """Test whether a phase-space direction lies in the wave cone.

    Parameters
    ----------
    delta : PhasePoint
        Direction ``(rho_bar, m_bar, U_bar)``.
    tol : float
        Relative tolerance; membership iff ``|det| <= tol * scale^(1+n)``.

    Returns
    -------
    WaveConeResult
        Membership flag, the determinant and, for members, a unit kernel vector.
    """
    M = delta.as_block()
    n = delta.n
    scale = max(abs(delta.rho), float(np.linalg.norm(delta.m)), float(np.linalg.norm(delta.U)), _TINY)
    det = float(np.linalg.det(M))
    member = abs(det) <= tol * scale ** (1 + n)
    eta = None
    if member:
        w, V = sym_eigh(M)
        eta = V[:, int(np.argmin(np.abs(w)))]
        eta = eta / np.linalg.norm(eta)
    return WaveConeResult(member, det, eta)


def hull_classify(ctx: RelaxationContext, pt: PhasePoint) -> HullClass:
    """Locate a point relative to ``K`` and its hull ``{e <= c}``."""
    S = constraint_matrix(ctx.eos, pt)
    e = 0.5 * ctx.n * lambda_max_sym(S)
    if e > ctx.c + ctx.tol_c:
        return HullClass.OUTSIDE
    if np.linalg.norm(S - 2.0 * ctx.c / ctx.n * np.eye(ctx.n)) <= ctx.tol_K:
        return HullClass.IN_K
    if e < ctx.c - ctx.tol_c:
        return HullClass.INTERIOR_U
    return HullClass.BOUNDARY_U


def decompose_into_K(ctx: RelaxationContext, pt: PhasePoint) -> WeightedFamily:
    """Write a hull point as a convex combination of ``K`` points of equal density.

    Each eigenvalue ``lambda_i < 2c/n`` of the constraint matrix is raised to
    ``2c/n`` by splitting along ``(0, b_i, (m b_i^T + b_i m^T - 2 alpha_i b_i b_i^T)/rho)``.
    The eigenbasis is shared by all intermediate points, so the splitting tree
    has depth at most ``n``.

    Raises
    ------
    InfeasibleError
        If the point lies outside the hull.
    """
    cls = hull_classify(ctx, pt)
    if cls is HullClass.OUTSIDE:
        raise InfeasibleError("point lies outside the hull {e <= c}")
    if cls is HullClass.IN_K:
        return WeightedFamily(((1.0, pt),))
    target = 2.0 * ctx.c / ctx.n
    lam, B = sym_eigh(constraint_matrix(ctx.eos, pt))
    snap = 1e-14 * max(1.0, target)
    leaves: list[tuple[float, PhasePoint]] = [(1.0, pt)]
    for i in range(ctx.n):
        gap = target - lam[i]
        if gap <= snap:
            continue
        b = B[:, i]
        nxt: list[tuple[float, PhasePoint]] = []
        for w, q in leaves:
            alpha = float(q.m @ b)
            root = math.sqrt(alpha * alpha + q.rho * gap)
            tp, tm = -alpha + root, -alpha - root
            dU = (np.outer(q.m, b) + np.outer(b, q.m) - 2.0 * alpha * np.outer(b, b)) / q.rho
            d = PhasePoint.from_matrix(0.0, b, dU)
            nxt.append((w * (-tm) / (tp - tm), q + d * tp))
            nxt.append((w * tp / (tp - tm), q + d * tm))
        leaves = nxt
    total = math.fsum(w for w, _ in leaves)
    return WeightedFamily(tuple((w / total, q) for w, q in leaves))


def build_HN_family(base: WeightedFamily, cone_tol: float = 1e-10) -> WeightedFamily:
    """Expand a Lambda-complete family of ``N`` points into an ``H_{2^(N-1)}`` family.

    The block of indices ``2^(k-2)+1 .. 2^(k-1)`` carries the point ``q_k`` with
    weights ``mu_k / (mu_1 + ... + mu_{k-1})`` times the preceding block.

    Raises
    ------
    ConeError
        If some pairwise difference of base points is not in the wave cone.
    """
    pts = base.points
    mus = base.weights
    N = len(pts)
    for i in range(N):
        for j in range(i + 1, N):
            if not in_wave_cone(pts[j] - pts[i], cone_tol).member:
                raise ConeError(f"base points {i} and {j} differ by a direction outside the wave cone")
    if N == 1:
        return WeightedFamily(base.entries, merge_hint=())
    fam: list[tuple[float, PhasePoint]] = [(mus[0], pts[0])]
    acc = mus[0]
    for k in range(1, N):
        ratio = mus[k] / acc
        fam = fam + [(ratio * t, pts[k]) for t, _ in fam]
        acc += mus[k]
    hint = []
    size = len(fam)
    while size > 1:
        h = size // 2
        hint.append(tuple((i, i + h) for i in range(h)))
        size = h
    return WeightedFamily(tuple(fam), merge_hint=tuple(hint))


def _merge(entries: list, i: int, j: int) -> list:
    (ti, pi), (tj, pj) = entries[i], entries[j]
    t = ti + tj
    merged = (t, pi * (ti / t) + pj * (tj / t))
    rest = [e for k, e in enumerate(entries) if k not in (i, j)]
    return [merged] + rest


def _cone_members(blocks: np.ndarray, tol: float) -> np.ndarray:
    """Vectorized wave-cone test on a stack of block matrices."""
    n = blocks.shape[-1] - 1
    scale = np.maximum.reduce(
        [
            np.abs(blocks[:, 0, 0]),
            np.linalg.norm(blocks[:, 0, 1:], axis=-1),
            np.linalg.norm(blocks[:, 1:, 1:], axis=(-2, -1)),
            np.full(blocks.shape[0], _TINY),
        ]
    )
    return np.abs(np.linalg.det(blocks)) <= tol * scale ** (1 + n)


def _follow_hint(family: WeightedFamily, tol: float, cone_tol: float) -> bool:
    """Merge along the recorded tree, one vectorized level at a time."""
    w = np.array(family.weights)
    B = np.stack([p.as_block() for p in family.points])
    for pairs in family.merge_hint:
        idx = np.array(pairs, dtype=int).reshape(-1, 2)
        i, j = idx[:, 0], idx[:, 1]
        if not np.all(_cone_members(B[j] - B[i], cone_tol)):
            return False
        t = w[i] + w[j]
        merged = (B[i] * w[i, None, None] + B[j] * w[j, None, None]) / t[:, None, None]
        keep = np.ones(len(w), dtype=bool)
        keep[j] = False
        w = w.copy()
        B = B.copy()
        w[i] = t
        B[i] = merged
        w, B = w[keep], B[keep]
    return len(w) == 1 and abs(w[0] - 1.0) <= tol


def verify_HN(family: WeightedFamily, tol: float = 1e-12, cone_tol: float = 1e-10) -> bool:
    """Check the H_N-condition by searching for a valid sequence of pair merges.

    A merge tree recorded in ``family.merge_hint`` is tried first. Otherwise
    every unordered pair is tried depth first, with failed sub-families cached.
    """
    entries = list(family.entries)
    if family.merge_hint and _follow_hint(family, tol, cone_tol):
        return True
    failed: set = set()

    def key(ents: list) -> tuple:
        return tuple(sorted(tuple(np.round(np.concatenate(([t], p.vec())), 10)) for t, p in ents))

    def dfs(ents: list) -> bool:
        if len(ents) == 1:
            return abs(ents[0][0] - 1.0) <= tol
        k = key(ents)
        if k in failed:
            return False
        for i in range(len(ents)):
            for j in range(i + 1, len(ents)):
                if in_wave_cone(ents[j][1] - ents[i][1], cone_tol).member:
                    if dfs(_merge(ents, i, j)):
                        return True
        failed.add(k)
        return False

    return dfs(entries)


def bound_M(ctx: RelaxationContext) -> float:
    """Uniform bound on ``rho``, ``|m|`` and ``||U||`` over the hull ``{e <= c}``."""
    rho_max = _eos.inverse_pressure(ctx.eos, 2.0 * ctx.c / ctx.n)
    return max(rho_max, math.sqrt(2.0 * rho_max * ctx.c), 2.0 * ctx.c * (ctx.n - 1) / ctx.n, 2.0 * ctx.c / ctx.n)


def family_in_K(ctx: RelaxationContext, fam: Iterable[tuple[float, PhasePoint]], tol: float = 1e-8) -> bool:
    """Return whether every point of a family has ``|e - c| <= tol``."""
    pts = [p for _, p in fam]
    rho = np.array([p.rho for p in pts])
    if np.any(rho <= 0.0):
        return False
    m = np.stack([p.m for p in pts])
    S = np.einsum("ki,kj->kij", m, m) / rho[:, None, None] - np.stack([p.U for p in pts])
    S += (ctx.eos.a * rho**ctx.eos.gamma)[:, None, None] * np.eye(ctx.n)
    e = 0.5 * ctx.n * np.linalg.eigvalsh(S)[:, -1]
    return bool(np.all(np.abs(e - ctx.c) <= tol))
