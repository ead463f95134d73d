"""Fan subsolutions for the two-dimensional Riemann problem.

A fan subsolution is piecewise constant on a partition of space-time into
wedges ``mu_{i-1} t < y < mu_i t``. Inside each wedge it carries a relaxed state
``(rho_i, m_i, U_i, c_i)``. This module assembles such states from a small set of
scalar unknowns, checks the jump conditions, subsolution and admissibility
inequalities, and searches parameter space for feasible configurations.

Isentropic system: one wedge between a 1-shock and a 3-rarefaction.
Full Euler: two wedges perturbing a two-shock solution by ``(eps, eps_bar)``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
from functools import lru_cache

import numpy as np

from convint import eos as _eos
from convint.eos import GammaLaw
from convint.errors import DomainError, SolverError
from convint.phasegeom import PhasePoint, RelaxationContext, e_functional
from convint.riemann import RiemannDataFull, RiemannDataIsen, solve_full_two_shock, solve_isen

ADM_TOL = 1e-12


# --- candidates and reports --------------------------------------------------


@dataclass(frozen=True)
class FanCandidateIsen:
    """Unknowns of the one-wedge isentropic fan subsolution."""

    mu0: float
    mu1: float
    rho1: float
    alpha1: float
    beta1: float
    gamma1: float
    delta1: float
    C1: float

    def __post_init__(self) -> None:
        if not self.mu0 < self.mu1:
            raise DomainError(f"speeds must satisfy mu0 < mu1, got {self.mu0!r}, {self.mu1!r}")
        if not (self.rho1 > 0.0 and self.C1 > 0.0):
            raise DomainError("rho1 and C1 must be positive")

    def wedge_point(self, eos: GammaLaw) -> tuple[PhasePoint, float]:
        """Relaxed state ``(rho1, m1, U1)`` and its trace constant ``c1``."""
        return _wedge(self.rho1, self.alpha1, self.beta1, self.gamma1, self.delta1, self.C1, _eos.pressure(eos, self.rho1))

    def to_json(self) -> dict:
        return {"system": "isen", **asdict(self)}

    @classmethod
    def from_json(cls, obj: dict) -> "FanCandidateIsen":
        return cls(**{k: float(obj[k]) for k in ("mu0", "mu1", "rho1", "alpha1", "beta1", "gamma1", "delta1", "C1")})


@dataclass(frozen=True)
class FanCandidateFull:
    """Unknowns of the two-wedge full-Euler fan subsolution."""

    mu0: float
    mu1: float
    mu2: float
    rho: tuple[float, float]
    p: tuple[float, float]
    alpha: tuple[float, float]
    beta: tuple[float, float]
    gamma: tuple[float, float]
    delta: tuple[float, float]
    C: tuple[float, float]

    def __post_init__(self) -> None:
        if not self.mu0 < self.mu1 < self.mu2:
            raise DomainError(f"speeds must satisfy mu0 < mu1 < mu2, got {self.mu0!r}, {self.mu1!r}, {self.mu2!r}")
        for name in ("rho", "p", "C"):
            if not all(x > 0.0 for x in getattr(self, name)):
                raise DomainError(f"{name} values must be positive")

    def wedge_point(self, i: int) -> tuple[PhasePoint, float]:
        """Relaxed state of wedge ``i`` (0 or 1) and its trace constant."""
        return _wedge(self.rho[i], self.alpha[i], self.beta[i], self.gamma[i], self.delta[i], self.C[i], self.p[i])

    def wedge_eos(self, i: int, gamma: float) -> GammaLaw:
        """Pressure law ``p_i (rho / rho_i)^gamma`` used inside wedge ``i``."""
        return GammaLaw(self.p[i] / self.rho[i] ** gamma, gamma)

    def to_json(self) -> dict:
        out = {"system": "full", "mu0": self.mu0, "mu1": self.mu1, "mu2": self.mu2}
        for name in ("rho", "p", "alpha", "beta", "gamma", "delta", "C"):
            out[name] = list(getattr(self, name))
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "FanCandidateFull":
        pairs = {k: tuple(float(x) for x in obj[k]) for k in ("rho", "p", "alpha", "beta", "gamma", "delta", "C")}
        return cls(float(obj["mu0"]), float(obj["mu1"]), float(obj["mu2"]), **pairs)


def _wedge(rho, alpha, beta, gamma, delta, C, p) -> tuple[PhasePoint, float]:
    m = rho * np.array([alpha, beta])
    U = rho * np.array([[gamma, delta], [delta, -gamma]])
    return PhasePoint.from_matrix(rho, m, U), rho * C / 2.0 + p


@dataclass
class VerifyReport:
    """Residuals (should vanish), strict margins (> 0) and admissibility margins (>= 0).

    ``e_gaps`` holds ``c_i - e(rho_i, m_i, U_i)`` for every wedge; its sign must
    agree with the two subsolution margins of that wedge.
    """

    residuals: dict = field(default_factory=dict)
    strict: dict = field(default_factory=dict)
    admissibility: dict = field(default_factory=dict)
    e_gaps: list = field(default_factory=list)
    scale: float = 1.0
    tol: float = 1e-9

    @property
    def max_residual(self) -> float:
        return max(abs(v) for v in self.residuals.values())

    @property
    def margins(self) -> dict:
        return {**self.strict, **self.admissibility}

    @property
    def passed(self) -> bool:
        return (
            self.max_residual <= self.tol * self.scale
            and all(v > 0.0 for v in self.strict.values())
            and all(v >= -ADM_TOL * self.scale for v in self.admissibility.values())
            and all(g > 0.0 for g in self.e_gaps)
        )

    def to_json(self) -> dict:
        return {
            "passed": self.passed,
            "scale": self.scale,
            "tol": self.tol,
            "residuals": dict(self.residuals),
            "strict_margins": dict(self.strict),
            "admissibility_margins": dict(self.admissibility),
            "e_gaps": list(self.e_gaps),
        }


def _sc_margins(alpha, beta, gamma, delta, C) -> tuple[float, float]:
    sc1 = C - alpha**2 - beta**2
    sc2 = (C / 2 - alpha**2 + gamma) * (C / 2 - beta**2 - gamma) - (delta - alpha * beta) ** 2
    return sc1, sc2


def _e_gap(pt: PhasePoint, c: float, eos: GammaLaw) -> float:
    return c - e_functional(RelaxationContext(eos, 2, c), pt)


# --- isentropic: SR regime ---------------------------------------------------


def _sr_radicand(d: RiemannDataIsen) -> float:
    """``(rho_- - rho_+)(p_- - p_+) - rho_+ rho_- (v_- - v_+)^2``; positive in the SR regime."""
    e = d.eos
    rm, rp = d.rho_minus, d.rho_plus
    return (rm - rp) * (_eos.pressure(e, rm) - _eos.pressure(e, rp)) - rp * rm * (d.v_minus - d.v_plus) ** 2


def _check_sr(d: RiemannDataIsen) -> float:
    """Validate the shock-rarefaction regime; returns the radicand."""
    if not d.rho_minus < d.rho_plus:
        raise DomainError("SR regime requires rho_minus < rho_plus")
    if d.u_minus != d.u_plus:
        raise DomainError("SR regime requires u_minus == u_plus")
    e = d.eos
    rm, rp = d.rho_minus, d.rho_plus
    dv = d.v_plus - d.v_minus
    shock = math.sqrt((rm - rp) * (_eos.pressure(e, rm) - _eos.pressure(e, rp)) / (rm * rp))
    if not dv > -shock:
        raise DomainError(f"SR regime requires v_+ - v_- > -{shock!r}, got {dv!r}")
    rar = _eos.rarefaction_integral(e, rm, rp)
    if not dv < rar:
        raise DomainError(f"SR regime requires v_+ - v_- < {rar!r}, got {dv!r}")
    K = _sr_radicand(d)
    if not K > 0.0:
        raise DomainError(f"SR radicand must be positive, got {K!r}")
    return K


def _check_rho1(d: RiemannDataIsen, rho1: float) -> None:
    if not d.rho_minus < rho1 < d.rho_plus:
        raise DomainError(f"rho1 must lie strictly in ({d.rho_minus!r}, {d.rho_plus!r}), got {rho1!r}")


def isen_beta1_eps1(d: RiemannDataIsen, rho1: float) -> tuple[float, float]:
    """Closed-form ``(beta_1, eps_1)`` of the SR fan for a wedge density ``rho1``.

    ``eps_1`` is evaluated as ``rho_-(a w + s)^2 / (rho_1 Delta)^2`` minus the
    pressure term, with ``w = sqrt(rho_1 - rho_-)``. This form stays accurate as
    ``rho_1 -> rho_-``, where ``eps_1`` tends to ``K / (rho_- (rho_+ - rho_-))``
    (``K`` the radicand).

    Raises
    ------
    DomainError
        Outside the SR regime or for ``rho1`` outside ``(rho_-, rho_+)``.
    """
    K = _check_sr(d)
    _check_rho1(d, rho1)
    rm, rp, vm, vp = d.rho_minus, d.rho_plus, d.v_minus, d.v_plus
    delta = rm - rp
    root = math.sqrt(K * (rho1 - rm) * (rp - rho1))
    beta1 = (-rm * vm * (rp - rho1) - rp * vp * (rho1 - rm) + root) / (rho1 * delta)
    a = rp * (vm - vp)
    w = math.sqrt(rho1 - rm)
    s = math.sqrt(K * (rp - rho1))
    dp = _eos.pressure(d.eos, rho1) - _eos.pressure(d.eos, rm)
    eps1 = -dp / rho1 + rm * (a * w + s) ** 2 / (rho1 * delta) ** 2
    return beta1, eps1


def isen_build_SR(d: RiemannDataIsen, rho1: float, eps_tilde1: float) -> FanCandidateIsen:
    """Assemble the SR fan candidate for parameters ``(rho1, eps_tilde1)``.

    Raises
    ------
    DomainError
        Outside the SR regime, for ``rho1`` outside ``(rho_-, rho_+)`` or
        non-positive ``eps_tilde1``.
    """
    if not eps_tilde1 > 0.0:
        raise DomainError(f"eps_tilde1 must be positive, got {eps_tilde1!r}")
    beta1, eps1 = isen_beta1_eps1(d, rho1)
    K = _sr_radicand(d)
    rm, rp, vm, vp = d.rho_minus, d.rho_plus, d.v_minus, d.v_plus
    mid = (rm * vm - rp * vp) / (rm - rp)
    mu0 = mid + math.sqrt(K * (rp - rho1) / (rho1 - rm)) / (rm - rp)
    mu1 = mid - math.sqrt(K * (rho1 - rm) / (rp - rho1)) / (rm - rp)
    u = d.u_minus
    return FanCandidateIsen(
        mu0=mu0,
        mu1=mu1,
        rho1=rho1,
        alpha1=u,
        beta1=beta1,
        gamma1=0.5 * (eps_tilde1 - eps1 + u * u - beta1 * beta1),
        delta1=u * beta1,
        C1=eps_tilde1 + eps1 + u * u + beta1 * beta1,
    )


def _isen_scale(d: RiemannDataIsen) -> float:
    e = d.eos
    vals = []
    for rho, u, v in ((d.rho_minus, d.u_minus, d.v_minus), (d.rho_plus, d.u_plus, d.v_plus)):
        p = _eos.pressure(e, rho)
        en = 0.5 * rho * (u * u + v * v) + _eos.pressure_potential(e, rho)
        vals += [rho, rho * abs(v), rho * abs(u * v), rho * v * v + p, abs((en + p) * v)]
    return max(vals)


def isen_verify(cand: FanCandidateIsen, d: RiemannDataIsen, tol: float = 1e-9) -> VerifyReport:
    """Check jump conditions, subsolution and admissibility inequalities of an isentropic fan."""
    e = d.eos
    rm, rp, vm, vp, um, up = d.rho_minus, d.rho_plus, d.v_minus, d.v_plus, d.u_minus, d.u_plus
    r1, a1, b1, g1, d1, C1 = cand.rho1, cand.alpha1, cand.beta1, cand.gamma1, cand.delta1, cand.C1
    mu0, mu1 = cand.mu0, cand.mu1
    p = lambda r: _eos.pressure(e, r)
    P = lambda r: _eos.pressure_potential(e, r)
    rep = VerifyReport(scale=_isen_scale(d), tol=tol)
    rep.residuals = {
        "rhl1": mu0 * (rm - r1) - (rm * vm - r1 * b1),
        "rhl2": mu0 * (rm * um - r1 * a1) - (rm * um * vm - r1 * d1),
        "rhl3": mu0 * (rm * vm - r1 * b1) - (rm * vm * vm - r1 * (C1 / 2 - g1) + p(rm) - p(r1)),
        "rhr1": mu1 * (r1 - rp) - (r1 * b1 - rp * vp),
        "rhr2": mu1 * (r1 * a1 - rp * up) - (r1 * d1 - rp * up * vp),
        "rhr3": mu1 * (r1 * b1 - rp * vp) - (r1 * (C1 / 2 - g1) - rp * vp * vp + p(r1) - p(rp)),
    }
    sc1, sc2 = _sc_margins(a1, b1, g1, d1, C1)
    rep.strict = {"order": mu1 - mu0, "sc1": sc1, "sc2": sc2}
    kin_m = 0.5 * rm * (um * um + vm * vm)
    kin_p = 0.5 * rp * (up * up + vp * vp)
    w1 = r1 * C1 / 2 + P(r1)
    rep.admissibility = {
        "adml": (kin_m + P(rm) + p(rm)) * vm - (w1 + p(r1)) * b1 - mu0 * (kin_m + P(rm) - w1),
        "admr": (w1 + p(r1)) * b1 - (kin_p + P(rp) + p(rp)) * vp - mu1 * (w1 - kin_p - P(rp)),
    }
    pt, c1 = cand.wedge_point(e)
    rep.e_gaps = [_e_gap(pt, c1, e)]
    return rep


def _AB_coeffs(d: RiemannDataIsen, rho1: float) -> tuple[float, float, float, float]:
    """``A(rho1, t) = A0 - a1 t`` and ``B(rho1, t) = B0 + b1 t`` for ``t = eps_tilde1``."""
    e = d.eos
    rm, rp, vm, vp = d.rho_minus, d.rho_plus, d.v_minus, d.v_plus
    beta1, eps1 = isen_beta1_eps1(d, rho1)
    p = lambda r: _eos.pressure(e, r)
    P = lambda r: _eos.pressure_potential(e, r)
    a1 = rm * rho1 * (beta1 - vm) / (rm - rho1)
    b1 = rho1 * rp * (vp - beta1) / (rho1 - rp)
    A0 = eps1 * rho1 * (beta1 + vm) - eps1 * a1 - (beta1 - vm) * (p(rm) + p(rho1) - 2 * (rho1 * P(rm) - rm * P(rho1)) / (rm - rho1))
    B0 = -eps1 * rho1 * (vp + beta1) + eps1 * b1 - (vp - beta1) * (p(rho1) + p(rp) - 2 * (rp * P(rho1) - rho1 * P(rp)) / (rho1 - rp))
    return A0, a1, B0, b1


def isen_AB(d: RiemannDataIsen, rho1: float, eps_tilde1: float) -> tuple[float, float]:
    """Slack of the two admissibility conditions as functions of ``(rho1, eps_tilde1)``."""
    A0, a1, B0, b1 = _AB_coeffs(d, rho1)
    return A0 - a1 * eps_tilde1, B0 + b1 * eps_tilde1


def _eps_window(d: RiemannDataIsen, rho1: float) -> tuple[float, float] | None:
    """Open interval of ``eps_tilde1 > 0`` with ``A > 0`` and ``B > 0``, or None."""
    A0, a1, B0, b1 = _AB_coeffs(d, rho1)
    lo, hi = 0.0, math.inf
    for c0, c1 in ((A0, -a1), (B0, b1)):
        # c0 + c1 t > 0
        if c1 > 0.0:
            lo = max(lo, -c0 / c1)
        elif c1 < 0.0:
            hi = min(hi, -c0 / c1)
        elif not c0 > 0.0:
            return None
    return (lo, hi) if lo < hi else None


@dataclass(frozen=True)
class SRSearchResult:
    rho1: float
    eps_tilde1: float
    candidate: FanCandidateIsen
    report: VerifyReport


def _rho1_grid(lo: float, hi: float, levels: int) -> list[float]:
    fr = [2.0**-j for j in range(1, levels + 1)]
    ts = sorted(set(fr + [1.0 - f for f in fr] + [i / 64 for i in range(1, 64)]))
    return [lo + (hi - lo) * t for t in ts]


def isen_search_SR(d: RiemannDataIsen, levels: int = 30, tol: float = 1e-9) -> SRSearchResult | None:
    """Scan wedge densities for a feasible SR fan subsolution.

    ``rho1`` runs over a grid refined geometrically towards both ends of
    ``(rho_-, rho_+)``. For each ``rho1`` the feasible ``eps_tilde1`` form an
    interval (both slacks are affine in it); its midpoint, or ``2 lo + eps_1``
    when unbounded, is tried. Among verified candidates the one with the
    largest relative slack wins.

    Raises
    ------
    DomainError
        Outside the SR regime.
    """
    _check_sr(d)
    best = None
    for rho1 in _rho1_grid(d.rho_minus, d.rho_plus, levels):
        if not d.rho_minus < rho1 < d.rho_plus:
            continue
        _, eps1 = isen_beta1_eps1(d, rho1)
        if not eps1 > 0.0:
            continue
        win = _eps_window(d, rho1)
        if win is None:
            continue
        lo, hi = win
        t = 0.5 * (lo + hi) if math.isfinite(hi) else 2.0 * lo + eps1
        if not t > 0.0:
            continue
        try:
            cand = isen_build_SR(d, rho1, t)
        except DomainError:
            continue
        rep = isen_verify(cand, d, tol)
        if not rep.passed or min(rep.admissibility.values()) <= 0.0:
            continue
        score = min(min(rep.admissibility.values()) / rep.scale, min(rep.e_gaps) / rep.scale)
        if best is None or score > best[0]:
            best = (score, SRSearchResult(rho1, t, cand, rep))
    return None if best is None else best[1]


@dataclass(frozen=True)
class AuxPatch:
    """Outcome of the auxiliary-state construction for an SR datum.

    ``left`` is the problem from the left state to the auxiliary state
    ``(rho_a, v_a)``, solved by a fan subsolution; ``right`` is the pure
    3-rarefaction from the auxiliary state to the right state.
    """

    rho_a: float
    v_a: float
    left: RiemannDataIsen
    right: RiemannDataIsen
    feasible: bool
    margin: float
    halvings: int
    search: SRSearchResult | None


def isen_aux_patch(d: RiemannDataIsen, tol: float = 1e-9) -> AuxPatch:
    """Patch a fan subsolution to a 3-rarefaction through an auxiliary state.

    Starting from ``rho_a = rho_+`` the auxiliary density is moved halfway
    towards ``rho_M`` until the SR search succeeds on the left sub-problem.

    Raises
    ------
    DomainError
        Outside the SR regime.
    SolverError
        If ``rho_a - rho_M`` drops below ``1e-12 rho_M`` without success.
    """
    _check_sr(d)
    fan = solve_isen(d)
    rho_M, v_M = fan.rho_M, fan.v_M
    e = d.eos
    rho_a = d.rho_plus
    halvings = 0
    while rho_a - rho_M >= 1e-12 * rho_M:
        v_a = d.v_plus if halvings == 0 else v_M + _eos.rarefaction_integral(e, rho_M, rho_a)
        left = replace(d, rho_plus=rho_a, v_plus=v_a)
        try:
            res = isen_search_SR(left, tol=tol)
        except DomainError:
            res = None
        if res is not None:
            right = replace(d, rho_minus=rho_a, v_minus=v_a)
            margin = v_a + _eos.sound_speed(e, rho_a) - res.candidate.mu1
            return AuxPatch(rho_a, v_a, left, right, margin > 0.0, margin, halvings, res)
        rho_a = rho_M + 0.5 * (rho_a - rho_M)
        halvings += 1
    raise SolverError("auxiliary-state backtracking exhausted without a feasible fan")


# --- full Euler: two-shock perturbation --------------------------------------


@dataclass(frozen=True)
class _Background:
    rho_Mm: float
    rho_Mp: float
    p_M: float
    v_M: float
    sigma_m: float
    sigma_p: float


@lru_cache(maxsize=256)
def _background(d: RiemannDataFull) -> _Background:
    if not (d.u_minus == 0.0 and d.u_plus == 0.0):
        raise DomainError("normalize the data first: tangential velocities must vanish")
    fan = solve_full_two_shock(d)
    scale = abs(d.v_minus) + abs(d.v_plus) + math.sqrt(d.gamma * fan.p_M / min(fan.rho_M_minus, fan.rho_M_plus))
    if abs(fan.v_M) > 1e-10 * scale:
        raise DomainError(f"normalize the data first: v_M = {fan.v_M!r} must vanish")
    return _Background(fan.rho_M_minus, fan.rho_M_plus, fan.p_M, fan.v_M, fan.wave1.speeds[0], fan.wave3.speeds[0])


def galilean_normalize(d) -> tuple[object, float, float]:
    """Shift velocities so that ``u_- = 0`` and the middle normal velocity vanishes.

    Returns the shifted data and the applied shifts ``(du, dv)``.
    """
    du = -d.u_minus
    if isinstance(d, RiemannDataFull):
        fan = solve_full_two_shock(d)
    else:
        fan = solve_isen(d)
    dv = -fan.v_M
    return d.shifted(du, dv), du, dv


def shift_candidate(cand, du: float, dv: float):
    """Galilean image of a candidate under the velocity shift ``(du, dv)``.

    ``delta - alpha beta``, ``C - alpha^2 - beta^2`` and
    ``2 gamma - alpha^2 + beta^2`` are invariant.
    """

    def one(a, b, g, dl, C):
        a2, b2 = a + du, b + dv
        return a2, b2, g + 0.5 * ((a2 * a2 - a * a) - (b2 * b2 - b * b)), dl + a2 * b2 - a * b, C + (a2 * a2 + b2 * b2) - (a * a + b * b)

    if isinstance(cand, FanCandidateIsen):
        a, b, g, dl, C = one(cand.alpha1, cand.beta1, cand.gamma1, cand.delta1, cand.C1)
        return FanCandidateIsen(cand.mu0 + dv, cand.mu1 + dv, cand.rho1, a, b, g, dl, C)
    w = [one(cand.alpha[i], cand.beta[i], cand.gamma[i], cand.delta[i], cand.C[i]) for i in (0, 1)]
    cols = list(zip(*w))
    return FanCandidateFull(
        cand.mu0 + dv, cand.mu1 + dv, cand.mu2 + dv, cand.rho, cand.p, tuple(cols[0]), tuple(cols[1]), tuple(cols[2]), tuple(cols[3]), tuple(cols[4])
    )


def _ABDE(d: RiemannDataFull, bg: _Background, eps: float) -> tuple[float, float, float, float, float]:
    rm, rp, vm, vp = d.rho_minus, d.rho_plus, d.v_minus, d.v_plus
    r1, r2 = bg.rho_Mm + eps, bg.rho_Mp - eps
    A = rm * r1 * (r2 - rp) - rp * r2 * (r1 - rm)
    B = rm * rp * r1 * r2 * (vm - vp) ** 2 - (d.p_minus - d.p_plus) * A
    D = vm * rm * r1 * (r2 - rp) - vp * rp * r2 * (r1 - rm)
    E = (d.p_minus - d.p_plus) * (r1 - rm) * (r2 - rp) + vm * vm * rm * r1 * (r2 - rp) - vp * vp * rp * r2 * (r1 - rm)
    S = (r1 - rm) * (r2 - rp)
    return A, B, D, E, S


def _check_eps(d: RiemannDataFull, bg: _Background, eps: float) -> None:
    if not 0.0 < eps < bg.rho_Mp - d.rho_plus:
        raise DomainError(f"eps must lie in (0, rho_M+ - rho_+) = (0, {bg.rho_Mp - d.rho_plus!r}), got {eps!r}")


def full_ABD(d: RiemannDataFull, eps: float) -> tuple[float, float, float]:
    """The polynomial helpers ``A(eps)``, ``B(eps)``, ``D(eps)`` of the two-shock perturbation.

    Raises
    ------
    DomainError
        Unless the data are two-shock, normalized, and ``0 < eps < rho_M+ - rho_+``.
    """
    bg = _background(d)
    if eps != 0.0:
        _check_eps(d, bg, eps)
    A, B, D, _, _ = _ABDE(d, bg, eps)
    return A, B, D


def full_mu(d: RiemannDataFull, eps: float) -> tuple[float, float, float]:
    """Interface speeds ``mu_0 < mu_1 < mu_2`` of the perturbed fan.

    ``mu_1 = (D - sqrt(S B)) / A`` is evaluated in the rationalized form
    ``E / (D + sqrt(S B))`` (``D^2 - S B = A E``), which has no 0/0 when
    ``A(0) = 0``. ``mu_0`` and ``mu_2`` follow from the mass balance across
    the outer interfaces.

    Raises
    ------
    DomainError
        If ``B(eps) < 0`` or the speeds are not ordered.
    """
    bg = _background(d)
    _check_eps(d, bg, eps)
    A, B, D, E, S = _ABDE(d, bg, eps)
    if B < 0.0:
        raise DomainError(f"B(eps) = {B!r} < 0; eps too large")
    den = D + math.sqrt(S * B)
    if not den > 0.0:
        raise DomainError("D + sqrt(S B) must be positive")
    mu1 = E / den
    r1, r2 = bg.rho_Mm + eps, bg.rho_Mp - eps
    vm, vp = d.v_minus, d.v_plus
    mu0 = vm + r1 / (r1 - d.rho_minus) * (mu1 - vm)
    mu2 = vp + r2 / (r2 - d.rho_plus) * (mu1 - vp)
    if not mu0 < mu1 < mu2:
        raise DomainError(f"speeds not ordered at eps = {eps!r}")
    return mu0, mu1, mu2


def full_eps_max(d: RiemannDataFull, samples: int = 256) -> float:
    """Largest ``eps`` before ``A`` changes sign, ``B`` or the speed order fails.

    The interval ``(0, rho_M+ - rho_+)`` is sampled uniformly; the first
    failure is located by bisection and the result is shrunk by 1 percent.
    """
    bg = _background(d)
    hi = bg.rho_Mp - d.rho_plus
    A_sign = math.copysign(1.0, _ABDE(d, bg, hi / samples)[0])

    def ok(eps: float) -> bool:
        A, B, _, _, _ = _ABDE(d, bg, eps)
        if A == 0.0 or math.copysign(1.0, A) != A_sign or not B > 0.0:
            return False
        try:
            full_mu(d, eps)
        except DomainError:
            return False
        return True

    prev = 0.0
    for i in range(1, samples):
        eps = hi * i / samples
        if not ok(eps):
            a, b = prev, eps
            for _ in range(60):
                mid = 0.5 * (a + b)
                a, b = (mid, b) if ok(mid) else (a, mid)
            return 0.99 * a
        prev = eps
    return 0.99 * prev


def full_C_gamma(d: RiemannDataFull, eps: float, eps_bar: float) -> tuple[float, float, float, float]:
    """Wedge energies ``C_1, C_2`` and stresses ``gamma_1, gamma_2``.

    Raises
    ------
    DomainError
        For ``eps_bar`` outside ``[0, p_M)`` or ``eps`` outside the ``full_mu`` domain.
    """
    bg = _background(d)
    if not 0.0 <= eps_bar < bg.p_M:
        raise DomainError(f"eps_bar must lie in (0, p_M) = (0, {bg.p_M!r}), got {eps_bar!r}")
    mu0, mu1, mu2 = full_mu(d, eps)
    g = d.gamma
    k, kg = 1.0 / (g - 1.0), g / (g - 1.0)
    p1 = bg.p_M - eps_bar
    r1, r2 = bg.rho_Mm + eps, bg.rho_Mp - eps
    rm, rp, vm, vp, pm, pp = d.rho_minus, d.rho_plus, d.v_minus, d.v_plus, d.p_minus, d.p_plus
    C1 = 2.0 / (r1 * (mu0 - mu1)) * (-mu0 * (k * (p1 - pm) - rm * vm * vm / 2) + mu1 * kg * p1 - (rm * vm * vm / 2 + kg * pm) * vm)
    C2 = 2.0 / (r2 * (mu2 - mu1)) * (-mu2 * (k * (p1 - pp) - rp * vp * vp / 2) + mu1 * kg * p1 - (rp * vp * vp / 2 + kg * pp) * vp)
    g1 = (r1 * C1 / 2 - rm * vm * vm + p1 - pm - mu0 * (r1 * mu1 - rm * vm)) / r1
    g2 = (r2 * C2 / 2 - rp * vp * vp + p1 - pp - mu2 * (r2 * mu1 - rp * vp)) / r2
    return C1, C2, g1, g2


def full_build(d: RiemannDataFull, eps: float, eps_bar: float) -> FanCandidateFull:
    """Two-wedge candidate with ``rho = rho_M -+ eps`` and ``p = p_M - eps_bar``.

    Raises
    ------
    DomainError
        For parameters outside their domains.
    """
    bg = _background(d)
    mu0, mu1, mu2 = full_mu(d, eps)
    C1, C2, g1, g2 = full_C_gamma(d, eps, eps_bar)
    p1 = bg.p_M - eps_bar
    return FanCandidateFull(
        mu0, mu1, mu2,
        rho=(bg.rho_Mm + eps, bg.rho_Mp - eps),
        p=(p1, p1),
        alpha=(0.0, 0.0),
        beta=(mu1, mu1),
        gamma=(g1, g2),
        delta=(0.0, 0.0),
        C=(C1, C2),
    )


def _full_scale(d: RiemannDataFull) -> float:
    g = d.gamma
    vals = []
    for rho, u, v, p in ((d.rho_minus, d.u_minus, d.v_minus, d.p_minus), (d.rho_plus, d.u_plus, d.v_plus, d.p_plus)):
        E = p / (g - 1.0) + 0.5 * rho * (u * u + v * v)
        vals += [rho, p, rho * abs(v), rho * abs(u * v), rho * v * v + p, E, abs((E + p) * v)]
    return max(vals)


def full_verify(cand: FanCandidateFull, d: RiemannDataFull, tol: float = 1e-8) -> VerifyReport:
    """Check the twelve jump conditions and nine inequalities of a full-Euler fan.

    Data and candidate are first shifted to the frame with ``u_- = 0`` and
    ``v_M = 0``. The wedge energy flux ``(rho C / 2 + p gamma / (gamma - 1)) beta``
    is not Galilean covariant, so the construction frame is the one checked.

    Raises
    ------
    DomainError
        Unless the data are two-shock data with ``u_- == u_+``.
    """
    d, du, dv = galilean_normalize(d)
    cand = shift_candidate(cand, du, dv)
    g = d.gamma
    k, kg = 1.0 / (g - 1.0), g / (g - 1.0)
    s = lambda r, p: _eos.physical_entropy(g, r, p)
    outer_m = (d.rho_minus, d.u_minus, d.v_minus, d.p_minus)
    outer_p = (d.rho_plus, d.u_plus, d.v_plus, d.p_plus)

    def outer(st):
        rho, u, v, p = st
        kin = 0.5 * rho * (u * u + v * v)
        # (mass, tangential mom, normal mom, energy) densities and fluxes
        return (rho, rho * u, rho * v, kin + k * p), (rho * v, rho * u * v, rho * v * v + p, (kin + kg * p) * v), rho * s(rho, p), v

    def wedge(i):
        rho, a, b, gm, dl, C, p = (cand.rho[i], cand.alpha[i], cand.beta[i], cand.gamma[i], cand.delta[i], cand.C[i], cand.p[i])
        dens = (rho, rho * a, rho * b, rho * C / 2 + k * p)
        flux = (rho * b, rho * dl, rho * (C / 2 - gm) + p, (rho * C / 2 + kg * p) * b)
        return dens, flux, rho * s(rho, p), b

    L, W1, W2, R = outer(outer_m), wedge(0), wedge(1), outer(outer_p)
    rep = VerifyReport(scale=_full_scale(d), tol=tol)
    for tag, mu, a, b in (("l", cand.mu0, L, W1), ("m", cand.mu1, W1, W2), ("r", cand.mu2, W2, R)):
        for j in range(4):
            rep.residuals[f"rh{tag}{j + 1}"] = mu * (a[0][j] - b[0][j]) - (a[1][j] - b[1][j])
        rep.admissibility[f"adm{tag}"] = (b[2] * b[3] - a[2] * a[3]) - mu * (b[2] - a[2])
    rep.strict = {"order01": cand.mu1 - cand.mu0, "order12": cand.mu2 - cand.mu1}
    for i in (0, 1):
        sc1, sc2 = _sc_margins(cand.alpha[i], cand.beta[i], cand.gamma[i], cand.delta[i], cand.C[i])
        rep.strict[f"sc1_{i + 1}"] = sc1
        rep.strict[f"sc2_{i + 1}"] = sc2
        pt, c = cand.wedge_point(i)
        rep.e_gaps.append(_e_gap(pt, c, cand.wedge_eos(i, g)))
    return rep


@dataclass(frozen=True)
class FullSearchResult:
    eps: float
    eps_bar: float
    k: int
    j: int
    candidate: FanCandidateFull
    report: VerifyReport


def full_search(d: RiemannDataFull, max_level: int = 40, tol: float = 1e-8) -> FullSearchResult | None:
    """Two-level halving search over ``eps_bar = p_M 2^-k`` and ``eps = eps_max 2^-j``.

    Returns the lexicographically first ``(k, j)`` whose candidate passes
    ``full_verify`` with strictly positive outer admissibility margins.

    Raises
    ------
    DomainError
        Unless ``1 < gamma < 3`` and the data are normalized two-shock data.
    """
    if not 1.0 < d.gamma < 3.0:
        raise DomainError(f"the full-Euler search needs 1 < gamma < 3, got {d.gamma!r}")
    bg = _background(d)
    eps_max = full_eps_max(d)
    for kk in range(1, max_level + 1):
        eps_bar = bg.p_M * 2.0**-kk
        for j in range(max_level + 1):
            eps = eps_max * 2.0**-j
            try:
                cand = full_build(d, eps, eps_bar)
            except DomainError:
                continue
            rep = full_verify(cand, d, tol)
            if rep.passed and rep.admissibility["adml"] > 0.0 and rep.admissibility["admr"] > 0.0:
                return FullSearchResult(eps, eps_bar, kk, j, cand, rep)
    return None
