"""Oscillatory perturbations of constant subsolution states.

Given a relaxed state ``base`` written as ``tau_1 p_1 + tau_2 p_2`` with
``p_2 - p_1`` in the wave cone, :func:`synthesize` builds the localized plane
wave ``L[g_k Phi]``. It equals ``p_1`` or ``p_2`` on alternating slabs and
returns to ``base`` outside a space-time box. The module also evaluates the
relaxed energy density ``E``, its box integral ``I``, and weak-form residuals
of piecewise-constant fan subsolutions.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss

from convint import eos as _eos
from convint.eos import GammaLaw
from convint.errors import ConeError, ContractError, DomainError, SolverError
from convint.fansub import FanCandidateFull, FanCandidateIsen
from convint.phasegeom import PhasePoint, RelaxationContext, constraint_matrix, e_functional, in_wave_cone, sym_eigh
from convint.planewave import (
    BoxCutoff,
    PlaneWaveField,
    ProductField,
    ProfileStack,
    WaveOperator,
    _completion,
    antiderivative3,
    build_operator,
    mollified_step,
    operator_blocks,
)

CHUNK = 20_000


# --- fan partitions ----------------------------------------------------------


@dataclass(frozen=True)
class FanPartition:
    """Wedges of ``(0, inf) x R^2`` bounded by the rays ``y = mu_i t``."""

    speeds: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.speeds) not in (2, 3):
            raise DomainError(f"a fan partition has 2 or 3 speeds, got {len(self.speeds)}")
        if any(a >= b for a, b in zip(self.speeds, self.speeds[1:])):
            raise DomainError(f"speeds must be strictly increasing, got {self.speeds}")

    @property
    def regions(self) -> tuple[str, ...]:
        mid = ("Wedge1",) if len(self.speeds) == 2 else ("Wedge1", "Wedge2")
        return ("Minus",) + mid + ("Plus",)

    @classmethod
    def of(cls, cand) -> "FanPartition":
        if isinstance(cand, FanCandidateIsen):
            return cls((cand.mu0, cand.mu1))
        return cls((cand.mu0, cand.mu1, cand.mu2))


def region_of(partition: FanPartition, t: float, x: Sequence[float]) -> str:
    """Region containing ``(t, x)``; the ray itself belongs to the region on its left.

    Raises
    ------
    DomainError
        If ``t <= 0``.
    """
    if not t > 0.0:
        raise DomainError(f"t must be positive, got {t!r}")
    xi = float(x[-1]) / t
    for name, mu in zip(partition.regions, partition.speeds):
        if xi <= mu:
            return name
    return partition.regions[-1]


# --- boxes ---------------------------------------------------------------------


@dataclass(frozen=True)
class Box:
    """Space-time box ``{center + Q y : |y_a| <= half_a}``; coordinate 0 is time.

    ``frame`` is an orthogonal matrix ``Q`` whose columns are the box axes;
    ``None`` means axis-aligned.
    """

    center: tuple[float, ...]
    half: tuple[float, ...]
    frame: np.ndarray | None = None

    def __post_init__(self) -> None:
        if len(self.center) != len(self.half) or not all(h > 0.0 for h in self.half):
            raise DomainError(f"invalid box half-widths {self.half}")
        if self.frame is not None:
            Q = np.asarray(self.frame, dtype=float)
            if Q.shape != (len(self.half),) * 2 or not np.allclose(Q.T @ Q, np.eye(Q.shape[0]), atol=1e-12):
                raise DomainError("box frame must be an orthogonal matrix")

    @classmethod
    def from_bounds(cls, lo: Sequence[float], hi: Sequence[float]) -> "Box":
        lo, hi = np.asarray(lo, float), np.asarray(hi, float)
        return cls(tuple(0.5 * (lo + hi)), tuple(0.5 * (hi - lo)))

    @property
    def dim(self) -> int:
        return len(self.half)

    @property
    def Q(self) -> np.ndarray:
        return np.eye(self.dim) if self.frame is None else np.asarray(self.frame, dtype=float)

    @property
    def volume(self) -> float:
        return float(np.prod(2.0 * np.asarray(self.half)))

    def local(self, z: np.ndarray) -> np.ndarray:
        return (np.atleast_2d(z) - np.asarray(self.center)) @ self.Q

    def to_global(self, y: np.ndarray) -> np.ndarray:
        return np.asarray(self.center) + np.atleast_2d(y) @ self.Q.T

    def contains(self, z: np.ndarray, strict: bool = True) -> np.ndarray:
        y = np.abs(self.local(z))
        h = np.asarray(self.half)
        return np.all(y < h, axis=1) if strict else np.all(y <= h, axis=1)

    def corners(self) -> np.ndarray:
        signs = np.array(np.meshgrid(*[[-1.0, 1.0]] * self.dim, indexing="ij")).reshape(self.dim, -1).T
        return self.to_global(signs * np.asarray(self.half))

    def shrink(self, fraction: float) -> "Box":
        return Box(self.center, tuple(np.asarray(self.half) * (1.0 - fraction)), self.frame)

    def sample(self, count: int, rng: np.random.Generator) -> np.ndarray:
        h = np.asarray(self.half)
        return self.to_global(rng.uniform(-h, h, size=(count, self.dim)))


def _wedge_normals(partition: FanPartition, wedge: int) -> list[np.ndarray]:
    if not 1 <= wedge <= len(partition.speeds) - 1:
        raise DomainError(f"wedge index out of range: {wedge}")
    a, b = partition.speeds[wedge - 1], partition.speeds[wedge]
    # (t, y) half-planes y - a t >= 0, b t - y >= 0 and t >= 0
    return [np.array([-a, 1.0]), np.array([b, -1.0]), np.array([1.0, 0.0])]


def wedge_cube(
    partition: FanPartition,
    wedge: int,
    eta: Sequence[float],
    t_center: float = 1.0,
    fill: float = 0.9,
) -> Box:
    """Cube inside wedge ``wedge`` (1-based) with its first axis along ``eta``.

    The cube is centred on the bisecting ray at time ``t_center`` and its
    half-width is ``fill`` times the largest value keeping every corner in
    the closed wedge. Space is ``(x_1, ..., x_n)`` with the fan in ``x_n``.
    """
    eta = np.asarray(eta, dtype=float)
    eta = eta / np.linalg.norm(eta)
    if not t_center > 0.0 or not 0.0 < fill < 1.0:
        raise DomainError("need t_center > 0 and 0 < fill < 1")
    D = eta.size
    Q = _completion(eta)
    mid = 0.5 * (partition.speeds[wedge - 1] + partition.speeds[wedge])
    c = np.zeros(D)
    c[0], c[-1] = t_center, mid * t_center
    h = math.inf
    for nrm in _wedge_normals(partition, wedge):
        N = np.zeros(D)
        N[0], N[-1] = nrm
        spread = float(np.sum(np.abs(N @ Q)))
        if spread > 0.0:
            h = min(h, float(N @ c) / spread)
    return Box(tuple(c), (fill * h,) * D, Q)


def wedge_box(partition: FanPartition, wedge: int, t_range: tuple[float, float], x_half: float, margin: float = 0.1) -> Box:
    """Largest axis-aligned ``(t, x, y)`` box inside wedge ``wedge`` (1-based) over ``t_range``.

    The ``y`` interval is shrunk by ``margin`` of its width on each side.
    """
    t0, t1 = t_range
    if not 0.0 < t0 < t1:
        raise DomainError("t_range must satisfy 0 < t0 < t1")
    _wedge_normals(partition, wedge)
    a, b = partition.speeds[wedge - 1], partition.speeds[wedge]
    ylo, yhi = max(a * t0, a * t1), min(b * t0, b * t1)
    if not ylo < yhi:
        raise DomainError("the wedge is too thin over this time range")
    w = yhi - ylo
    return Box.from_bounds((t0, -x_half, ylo + margin * w), (t1, x_half, yhi - margin * w))


# --- pairs -----------------------------------------------------------------------


def split_pair(ctx: RelaxationContext, base: PhasePoint, shrink: float = 0.8) -> tuple[float, PhasePoint, PhasePoint]:
    """Split ``base`` along its widest eigen-gap into two interior points.

    The first level of the eigen-splitting of the hull decomposition gives
    ``q_1, q_2`` with ``e(q_i) = c`` and ``q_2 - q_1`` in the wave cone. Both
    are pulled towards ``base`` by ``shrink`` so that ``e(p_i) < c``. Returns
    ``(tau_1, p_1, p_2)`` with ``base = tau_1 p_1 + (1 - tau_1) p_2``.

    Raises
    ------
    DomainError
        If ``base`` is not strictly inside the hull or ``shrink`` is outside ``(0, 1]``.
    """
    if not 0.0 < shrink <= 1.0:
        raise DomainError(f"shrink must lie in (0, 1], got {shrink!r}")
    if not e_functional(ctx, base) < ctx.c:
        raise DomainError("base must satisfy e < c")
    target = 2.0 * ctx.c / ctx.n
    lam, B = sym_eigh(constraint_matrix(ctx.eos, base))
    b = B[:, 0]
    gap = target - lam[0]
    alpha = float(base.m @ b)
    root = math.sqrt(alpha * alpha + base.rho * gap)
    tp, tm = -alpha + root, -alpha - root
    dU = (np.outer(base.m, b) + np.outer(b, base.m) - 2.0 * alpha * np.outer(b, b)) / base.rho
    d = PhasePoint.from_matrix(0.0, b, dU)
    tau1 = tp / (tp - tm)
    p1 = base + d * (shrink * tm)
    p2 = base + d * (shrink * tp)
    return tau1, p1, p2


# --- synthesized field ---------------------------------------------------------


@dataclass(frozen=True)
class Cube:
    """Cube around the plateau box with one edge along ``eta``; edge is ``m / |eta|``."""

    center: np.ndarray
    edge: float
    frame: np.ndarray

    @property
    def volume(self) -> float:
        return self.edge ** self.frame.shape[0]


@dataclass(frozen=True)
class OscField:
    """``base + L[g_k Phi]`` with ``g_k(z) = k^-3 h(k z . eta)``.

    Attributes
    ----------
    base, p1, p2 : PhasePoint
        Constant state and the two plateau states.
    tau1 : float
        Weight of ``p1``.
    eta : numpy.ndarray
        Space-time wave vector; ``|eta|`` is the reciprocal cube edge.
    k : int
        Frequency index, the number of periods across the cube.
    delta : float
        Mollification width of the step profile.
    box, inner : Box
        Support ``Gamma*`` and the plateau box ``Gamma~`` where ``Phi = 1``.
    cube : Cube
        Periodicity cube around ``inner``.
    """

    base: PhasePoint
    p1: PhasePoint
    p2: PhasePoint
    tau1: float
    eta: np.ndarray
    k: int
    delta: float
    box: Box
    inner: Box
    cube: Cube
    operator: WaveOperator
    profile: ProfileStack
    potential: ProfileStack
    cutoff: BoxCutoff

    @property
    def n(self) -> int:
        return self.base.n

    def blocks(self, z: np.ndarray) -> np.ndarray:
        """Block matrices of the field at points ``z`` of shape ``(B, 1+n)``."""
        z = np.atleast_2d(np.asarray(z, dtype=float))
        out = np.broadcast_to(self.base.as_block(), (z.shape[0], self.n + 1, self.n + 1)).copy()
        inside = np.flatnonzero(self.box.contains(z))
        g = ProductField(PlaneWaveField(self.potential, self.eta, float(self.k)), self.cutoff)
        for s in range(0, inside.size, CHUNK):
            idx = inside[s : s + CHUNK]
            out[idx] += operator_blocks(self.operator, g, z[idx, 0], z[idx, 1:])
        return out

    def sample(self, t: float, x: Sequence[float]) -> PhasePoint:
        z = np.concatenate(([t], np.asarray(x, dtype=float)))
        return PhasePoint.from_block(self.blocks(z[None, :])[0])

    def phase(self, z: np.ndarray) -> np.ndarray:
        return np.mod(self.k * (np.atleast_2d(z) @ self.eta), 1.0)

    def plateau_label(self, z: np.ndarray) -> np.ndarray:
        """1 or 2 where the field equals ``p1`` or ``p2`` exactly, else 0."""
        z = np.atleast_2d(z)
        th = self.phase(z)
        d, t = self.delta, self.tau1
        lab = np.where((th >= d) & (th <= t - d), 1, np.where((th >= t + d) & (th <= 1.0 - d), 2, 0))
        return np.where(self.inner.contains(z, strict=False), lab, 0)

    @property
    def aligned(self) -> bool:
        """Whether the first box axis is parallel to ``eta``."""
        unit = self.eta / np.linalg.norm(self.eta)
        return abs(float(self.box.Q[:, 0] @ unit)) > 1.0 - 1e-12

    def phase_breaks(self) -> tuple[float, ...]:
        """Phase values in ``[0, 1)`` where the profile leaves or enters a plateau."""
        d, t = self.delta, self.tau1
        return (0.0, d, t - d, t + d, 1.0 - d)

    def e_bound(self, ctx: RelaxationContext) -> float:
        """``(max(e(p1), e(p2)) + c) / 2``."""
        return 0.5 * (max(e_functional(ctx, self.p1), e_functional(ctx, self.p2)) + ctx.c)


def delta_bound(eps: float, c: float, cube_volume: float, tau1: float) -> float:
    """Largest admissible mollification width ``min(eps / (8 c |Q|), tau_1 / 2, tau_2 / 2)``."""
    return min(eps / (8.0 * c * cube_volume), 0.5 * tau1, 0.5 * (1.0 - tau1))


def synthesize(
    base: PhasePoint,
    pair: tuple[PhasePoint, PhasePoint],
    box: Box,
    k: int,
    frame_fraction: float = 0.25,
    delta: float | None = None,
) -> OscField:
    """Localized plane-wave oscillation between ``pair`` around ``base`` inside ``box``.

    Raises
    ------
    DomainError
        If ``base`` is not a strict convex combination of the pair, ``k < 1``,
        or ``frame_fraction`` lies outside ``(0, 1)``.
    ConeError
        If the pair difference is outside the wave cone.
    """
    p1, p2 = pair
    if not (isinstance(k, (int, np.integer)) and k >= 1):
        raise DomainError(f"k must be a positive integer, got {k!r}")
    if not 0.0 < frame_fraction < 1.0:
        raise DomainError(f"frame_fraction must lie in (0, 1), got {frame_fraction!r}")
    diff = p2 - p1
    dv = diff.vec()
    if not np.any(dv):
        raise DomainError("the pair points coincide")
    tau2 = float((base - p1).vec() @ dv / (dv @ dv))
    tau1 = 1.0 - tau2
    if not 0.0 < tau1 < 1.0:
        raise DomainError(f"base is not strictly between the pair (tau_1 = {tau1!r})")
    recon = p1 * tau1 + p2 * tau2
    if np.linalg.norm((recon - base).vec()) > 1e-10 * max(1.0, np.linalg.norm(base.vec())):
        raise DomainError("base is not a convex combination of the pair")
    cone = in_wave_cone(diff)
    if not cone.member:
        raise ConeError(f"pair difference is outside the wave cone (det {cone.det:.3e})")
    unit = cone.eta / np.linalg.norm(cone.eta)
    inner = box.shrink(frame_fraction)
    # cube around the plateau box with edge 1/|eta|, so k counts periods per edge
    edge = 2.0 * float(np.linalg.norm(inner.half))
    eta = unit / edge
    op = build_operator(diff, eta)
    if delta is None:
        delta = 0.25 * min(tau1, tau2)
    f = mollified_step(tau1, delta)
    h = antiderivative3(f)
    cutoff = BoxCutoff(np.asarray(box.center), np.asarray(inner.half), np.asarray(box.half) * frame_fraction, box.Q)
    cube = Cube(np.asarray(inner.center), edge, _completion(unit))
    return OscField(base, p1, p2, tau1, eta, int(k), float(delta), box, inner, cube, op, f, h, cutoff)


# --- energies and the functional I ---------------------------------------------


def relaxed_E(ctx: RelaxationContext, rho, m):
    """``|m|^2 / (2 rho) + (n/2) p(rho) - c``; vectorized over leading axes of ``m``.

    Raises
    ------
    DomainError
        For non-positive densities.
    """
    rho = np.asarray(rho, dtype=float)
    m = np.asarray(m, dtype=float)
    if np.any(rho <= 0.0):
        raise DomainError("densities must be positive")
    p = ctx.eos.a * rho**ctx.eos.gamma
    val = np.sum(m * m, axis=-1) / (2.0 * rho) + 0.5 * ctx.n * p - ctx.c
    return float(val) if val.ndim == 0 else val


def _E_blocks(ctx: RelaxationContext, blk: np.ndarray) -> np.ndarray:
    return relaxed_E(ctx, blk[:, 0, 0], blk[:, 0, 1:])


def e_blocks(eos: GammaLaw, blk: np.ndarray) -> np.ndarray:
    """Batched ``e`` of block matrices of shape ``(B, 1+n, 1+n)``."""
    rho = blk[:, 0, 0]
    if np.any(rho <= 0.0):
        raise DomainError("densities must be positive")
    m = blk[:, 0, 1:]
    n = m.shape[1]
    M = np.einsum("zi,zj->zij", m, m) / rho[:, None, None] - blk[:, 1:, 1:]
    M += (eos.a * rho**eos.gamma)[:, None, None] * np.eye(n)
    return 0.5 * n * np.linalg.eigvalsh(M)[:, -1]


def _gl_axis(lo: float, hi: float, cells: int, order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = leggauss(order)
    edges = np.linspace(lo, hi, cells + 1)
    a, b = edges[:-1, None], edges[1:, None]
    return (0.5 * (a + b) + 0.5 * (b - a) * x).ravel(), (0.5 * (b - a) * w).ravel()


def _box_axis(h: float, H: float, freq: float, order: int, cuts: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Nodes on ``[-h, h]`` split at the plateau edges ``+-H`` and at ``cuts``.

    Without ``cuts`` a segment gets four cells per period and at least one
    cell; the smooth cutoff ramps need no more. A plateau segment
    without oscillation is constant in this coordinate and gets one node.
    """
    if cuts is not None:
        pts = np.unique(np.concatenate(([-h, -H, H, h], cuts[(cuts > -h) & (cuts < h)])))
        return _gl_axis_edges(pts, order)
    nodes, weights = [], []
    for lo, hi, ramp in ((-h, -H, True), (-H, H, False), (H, h, True)):
        if hi <= lo:
            continue
        waves = freq * (hi - lo)
        if not ramp and waves < 1e-9:
            nodes.append(np.array([0.5 * (lo + hi)]))
            weights.append(np.array([hi - lo]))
            continue
        cells = max(1, math.ceil(4.0 * waves))
        x, w = _gl_axis(lo, hi, cells, order)
        nodes.append(x)
        weights.append(w)
    return np.concatenate(nodes), np.concatenate(weights)


def _gl_axis_edges(edges: np.ndarray, order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = leggauss(order)
    a, b = edges[:-1, None], edges[1:, None]
    return (0.5 * (a + b) + 0.5 * (b - a) * x).ravel(), (0.5 * (b - a) * w).ravel()


def _phase_cuts(field: OscField) -> np.ndarray:
    """Positions along the first box axis where the phase crosses a profile break."""
    h = field.box.half[0]
    rate = field.k * float(field.box.Q[:, 0] @ field.eta)
    theta0 = field.k * float(np.asarray(field.box.center) @ field.eta)
    lo, hi = sorted((theta0 - abs(rate) * h, theta0 + abs(rate) * h))
    js = np.arange(math.floor(lo) - 1, math.ceil(hi) + 1)
    th = (js[:, None] + np.array(field.phase_breaks())).ravel()
    return (th - theta0) / rate


def functional_I(ctx: RelaxationContext, field, box: Box | None = None, order: int = 8) -> float:
    """Integral of ``E`` over ``box`` (default: the support of ``field``).

    ``field`` is a constant :class:`PhasePoint` (integrated exactly) or an
    :class:`OscField` integrated over its own support. Gauss-Legendre cells
    are split at the cutoff plateau. When the box is aligned with ``eta`` the
    first axis is also split wherever the profile enters or leaves a plateau,
    the transverse plateau segments need one node, and the cost grows
    linearly in ``k``; otherwise every axis gets four cells per period.
    """
    if isinstance(field, PhasePoint):
        if box is None:
            raise DomainError("a box is required for a constant state")
        return relaxed_E(ctx, field.rho, field.m) * box.volume
    box = field.box
    freq = field.k * np.abs(box.Q.T @ field.eta)
    if field.aligned:
        freq[1:] = 0.0
    axes = []
    for a in range(box.dim):
        cuts = _phase_cuts(field) if field.aligned and a == 0 else None
        axes.append(_box_axis(box.half[a], field.inner.half[a], freq[a], order, cuts))
    rest_y = np.stack(np.meshgrid(*[ax[0] for ax in axes[1:]], indexing="ij"), axis=-1).reshape(-1, box.dim - 1)
    rest_w = np.prod(np.stack(np.meshgrid(*[ax[1] for ax in axes[1:]], indexing="ij"), axis=-1).reshape(-1, box.dim - 1), axis=1)
    s_nodes, s_w = axes[0]
    per = max(1, CHUNK // rest_y.shape[0])
    total = 0.0
    for i in range(0, s_nodes.size, per):
        s, ws = s_nodes[i : i + per], s_w[i : i + per]
        y = np.column_stack((np.repeat(s, rest_y.shape[0]), np.tile(rest_y, (s.size, 1))))
        w = np.repeat(ws, rest_y.shape[0]) * np.tile(rest_w, s.size)
        total += float(_E_blocks(ctx, field.blocks(box.to_global(y))) @ w)
    return total


@dataclass(frozen=True)
class PlateauMeasures:
    """Exact volumes of the plateau sets ``Gamma_1``, ``Gamma_2``, the slices and the frame."""

    gamma1: float
    gamma2: float
    slices: float
    frame: float

    def certified_bound(self, ctx: RelaxationContext, p1: PhasePoint, p2: PhasePoint) -> float:
        """Lower bound ``sum_i I_{Gamma_i}(p_i) - c (|slices| + |frame|)`` for ``I``.

        Valid for any field equal to ``p_i`` on ``Gamma_i`` because ``E > -c``.
        """
        plate = relaxed_E(ctx, p1.rho, p1.m) * self.gamma1 + relaxed_E(ctx, p2.rho, p2.m) * self.gamma2
        return plate - ctx.c * (self.slices + self.frame)


def _window_measure(theta_a: float, theta_b: float, lo: float, hi: float) -> float:
    def G(th: float) -> float:
        return math.floor(th) * (hi - lo) + min(max(th - math.floor(th), lo), hi) - lo

    return G(theta_b) - G(theta_a)


def plateau_measures(field: OscField) -> PlateauMeasures:
    """Volumes of ``{p_1}``, ``{p_2}`` plateau sets inside the plateau box, slices and frame.

    Raises
    ------
    ContractError
        If the box is not aligned with ``eta``.
    """
    if not field.aligned:
        raise ContractError("plateau measures need a box aligned with eta")
    H = np.asarray(field.inner.half)
    rate = field.k * abs(float(field.box.Q[:, 0] @ field.eta))
    theta0 = field.k * float(np.asarray(field.inner.center) @ field.eta)
    ta, tb = theta0 - rate * H[0], theta0 + rate * H[0]
    cross = float(np.prod(2.0 * H[1:]))
    d, t = field.delta, field.tau1
    g1 = _window_measure(ta, tb, d, t - d) / rate * cross
    g2 = _window_measure(ta, tb, t + d, 1.0 - d) / rate * cross
    inner = field.inner.volume
    return PlateauMeasures(g1, g2, inner - g1 - g2, field.box.volume - inner)


def sample_e(ctx: RelaxationContext, field: OscField, count: int = 10_000, seed: int = 0) -> np.ndarray:
    """``e`` at ``count`` uniform random points of the support box."""
    z = field.box.sample(count, np.random.default_rng(seed))
    return e_blocks(ctx.eos, field.blocks(z))


@dataclass(frozen=True)
class KMinResult:
    k: int
    field: OscField
    max_e: float
    bound: float
    trace: tuple[tuple[int, float], ...]


def find_k_min(
    ctx: RelaxationContext,
    base: PhasePoint,
    pair: tuple[PhasePoint, PhasePoint],
    box: Box,
    samples: int = 10_000,
    seed: int = 0,
    k_start: int = 1,
    k_max: int = 4096,
    tol: float = 1e-10,
    **kwargs,
) -> KMinResult:
    """Double ``k`` until the sampled ``e`` stays below ``(max e(p_i) + c) / 2``.

    Raises
    ------
    SolverError
        If the bound still fails at ``k_max``.
    """
    k = k_start
    trace = []
    while k <= k_max:
        field = synthesize(base, pair, box, k, **kwargs)
        bound = field.e_bound(ctx)
        top = float(np.max(sample_e(ctx, field, samples, seed)))
        trace.append((k, top))
        if top <= bound + tol * ctx.c:
            return KMinResult(k, field, top, bound, tuple(trace))
        k *= 2
    raise SolverError(f"e-bound still violated at k = {k_max}")


def oscillation_pairing(field: OscField, component: int = 0, order: int = 8) -> float:
    """Pair one block entry of the oscillation with a half-space-cut weight.

    The integral runs over a cube of edge ``ell`` inside the plateau box with
    one edge along ``eta``, starting where the phase is an integer. The weight
    is ``cos^2(pi s / (2 ell))`` for ``0 <= s <= ell`` along ``eta`` and
    uniform across, so the pairing decays like ``1/k``. The value is divided
    by ``ell^(1+n)``. ``component`` indexes the flattened block matrix.

    Raises
    ------
    DomainError
        If one period does not fit beside the cube in the plateau box.
    """
    D = field.n + 1
    H = float(np.min(field.inner.half))
    ell = 0.5 * H
    unit = field.cube.frame[:, 0]
    speed = field.k * float(unit @ field.eta)
    theta_c = field.k * float(np.asarray(field.inner.center) @ field.eta)
    s0 = (math.ceil(theta_c - speed * 0.5 * ell) - theta_c) / speed
    if not (-H <= s0 and s0 + ell <= H):
        raise DomainError("k is too small for the pairing cube")
    js = np.arange(0, math.ceil(speed * ell) + 1)
    cuts = (js[:, None] + np.array(field.phase_breaks())).ravel() / speed
    edges = np.unique(np.concatenate(([0.0, ell], cuts[(cuts > 0.0) & (cuts < ell)])))
    s, ws = _gl_axis_edges(edges, order)
    z = np.asarray(field.inner.center) + np.outer(s0 + s, unit)
    osc = field.blocks(z) - field.base.as_block()
    w = ws * np.cos(0.5 * math.pi * s / ell) ** 2
    # the oscillation is constant across eta on the plateau box
    return float(osc.reshape(z.shape[0], -1)[:, component] @ w) * ell ** (D - 1) / ell**D


# --- weak residuals of piecewise-constant fans -----------------------------------


def fan_states(cand, data) -> list[tuple[np.ndarray, np.ndarray]]:
    """Conserved densities and normal fluxes ``(D, F)`` of every fan region.

    Isentropic: mass and both momenta. Full Euler: additionally the energy.
    """
    full = isinstance(cand, FanCandidateFull)
    out = []
    if full:
        g = data.gamma
        k, kg = 1.0 / (g - 1.0), g / (g - 1.0)

        def outer(rho, u, v, p):
            E = 0.5 * rho * (u * u + v * v) + k * p
            return np.array([rho, rho * u, rho * v, E]), np.array([rho * v, rho * u * v, rho * v * v + p, (E + p) * v])

        out.append(outer(data.rho_minus, data.u_minus, data.v_minus, data.p_minus))
        for i in (0, 1):
            r, a, b, gm, dl, C, p = cand.rho[i], cand.alpha[i], cand.beta[i], cand.gamma[i], cand.delta[i], cand.C[i], cand.p[i]
            out.append(
                (np.array([r, r * a, r * b, r * C / 2 + k * p]), np.array([r * b, r * dl, r * (C / 2 - gm) + p, (r * C / 2 + kg * p) * b]))
            )
        out.append(outer(data.rho_plus, data.u_plus, data.v_plus, data.p_plus))
        return out
    e = data.eos

    def outer_i(rho, u, v):
        p = _eos.pressure(e, rho)
        return np.array([rho, rho * u, rho * v]), np.array([rho * v, rho * u * v, rho * v * v + p])

    out.append(outer_i(data.rho_minus, data.u_minus, data.v_minus))
    r, a, b, gm, dl, C = cand.rho1, cand.alpha1, cand.beta1, cand.gamma1, cand.delta1, cand.C1
    c1 = r * C / 2 + _eos.pressure(e, r)
    out.append((np.array([r, r * a, r * b]), np.array([r * b, r * dl, -r * gm + c1])))
    out.append(outer_i(data.rho_plus, data.u_plus, data.v_plus))
    return out


def _bump(s: np.ndarray, j: int) -> np.ndarray:
    """``(1 - s^2)^4`` on ``|s| < 1`` (j = 0) or its derivative (j = 1)."""
    inside = np.abs(s) < 1.0
    q = 1.0 - s * s
    val = q**4 if j == 0 else -8.0 * s * q**3
    return np.where(inside, val, 0.0)


def weak_residual(
    cand,
    data,
    n_tests: int = 20,
    order: int = 16,
    seed: int = 0,
    radius: float = 0.3,
    speeds: Sequence[float] | None = None,
) -> np.ndarray:
    """Weak-form residuals of the piecewise-constant fan against polynomial bumps.

    The fan does not depend on the tangential coordinate, so tensor test
    functions reduce the space-time integrals to the ``(t, y)`` plane. Each
    test function ``b((t - t0)/r) b((y - y0)/r)`` straddles one interface;
    ``n_tests`` are placed per interface. Quadrature cells are split at every
    interface and at the kinks of the support, so the rule is exact up to
    rounding. ``speeds`` overrides the candidate's interface speeds (used for
    negative controls).

    Returns
    -------
    numpy.ndarray
        Shape ``(n_interfaces * n_tests, n_equations)``.
    """
    states = fan_states(cand, data)
    mus = list(speeds) if speeds is not None else list(FanPartition.of(cand).speeds)
    rng = np.random.default_rng(seed)
    x, w = leggauss(order)
    rows = []
    for mu in FanPartition.of(cand).speeds:
        for _ in range(n_tests):
            t0 = rng.uniform(1.0, 2.0)
            y0 = mu * t0 + rng.uniform(-0.5, 0.5) * radius
            r = radius
            tk = {t0 - r, t0 + r}
            for m in mus:
                if m != 0.0:
                    for yy in (y0 - r, y0 + r):
                        tc = yy / m
                        if t0 - r < tc < t0 + r:
                            tk.add(tc)
            tk = sorted(tk)
            acc = np.zeros(states[0][0].size)
            for ta, tb in zip(tk[:-1], tk[1:]):
                tn = 0.5 * (ta + tb) + 0.5 * (tb - ta) * x
                tw = 0.5 * (tb - ta) * w
                for t, wt in zip(tn, tw):
                    bt, dbt = _bump((t - t0) / r, 0), _bump((t - t0) / r, 1) / r
                    cuts = [y0 - r] + sorted(min(max(m * t, y0 - r), y0 + r) for m in mus) + [y0 + r]
                    for reg, (ya, yb) in enumerate(zip(cuts[:-1], cuts[1:])):
                        if yb <= ya:
                            continue
                        yn = 0.5 * (ya + yb) + 0.5 * (yb - ya) * x
                        yw = 0.5 * (yb - ya) * w
                        by = _bump((yn - y0) / r, 0)
                        dby = _bump((yn - y0) / r, 1) / r
                        Dv, Fv = states[reg]
                        acc += wt * (Dv * (dbt * float(by @ yw)) + Fv * (bt * float(dby @ yw)))
            rows.append(acc)
    return np.array(rows)


# --- CSV output ------------------------------------------------------------------


def write_field_csv(ctx: RelaxationContext, field: OscField, path: str, grid: int = 16) -> int:
    """Dump the field on a uniform grid of the support box; returns the row count."""
    axes = [np.linspace(-h, h, grid) for h in field.box.half]
    z = field.box.to_global(np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(axes)))
    blk = field.blocks(z)
    E = _E_blocks(ctx, blk)
    e = e_blocks(ctx.eos, blk)
    n = field.n
    iu = [(i, j) for i in range(n) for j in range(i, n)]
    header = ["t"] + [f"x{i + 1}" for i in range(n)] + ["rho"] + [f"m{i + 1}" for i in range(n)]
    header += [f"U{i + 1}{j + 1}" for i, j in iu] + ["E", "e"]
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(header)
        for row in range(z.shape[0]):
            b = blk[row]
            vals = list(z[row]) + [b[0, 0]] + list(b[0, 1:]) + [b[1 + i, 1 + j] for i, j in iu] + [E[row], e[row]]
            wr.writerow([repr(float(v)) for v in vals])
    return z.shape[0]
