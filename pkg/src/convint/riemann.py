"""Exact self-similar Riemann solvers in the normal direction.

The isentropic solver covers all seven wave configurations (vacuum, two
rarefactions, single rarefaction, rarefaction-shock, shock-rarefaction, single
shock, two shocks). The full-Euler solver is exact for the two-shock
configuration; other full-Euler data are classified by wave type only.

Velocities are split into a tangential component ``u`` (carried by a contact
discontinuity) and the normal component ``v``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from scipy import optimize

from convint import eos as _eos
from convint.eos import GammaLaw
from convint.errors import ClassificationError, DomainError, SolverError


@dataclass(frozen=True)
class RiemannDataIsen:
    """Isentropic Riemann data ``(rho, u, v)`` on each side of ``y = 0``."""

    rho_minus: float
    v_minus: float
    rho_plus: float
    v_plus: float
    eos: GammaLaw
    u_minus: float = 0.0
    u_plus: float = 0.0

    def __post_init__(self) -> None:
        if not (self.rho_minus > 0.0 and self.rho_plus > 0.0):
            raise DomainError("densities must be positive")

    def shifted(self, du: float = 0.0, dv: float = 0.0) -> "RiemannDataIsen":
        return replace(
            self,
            u_minus=self.u_minus + du,
            u_plus=self.u_plus + du,
            v_minus=self.v_minus + dv,
            v_plus=self.v_plus + dv,
        )

    def to_json(self) -> dict:
        return {
            "system": "isen",
            "left": {"rho": self.rho_minus, "u": self.u_minus, "v": self.v_minus},
            "right": {"rho": self.rho_plus, "u": self.u_plus, "v": self.v_plus},
            "eos": self.eos.to_json(),
        }


@dataclass(frozen=True)
class RiemannDataFull:
    """Full-Euler Riemann data ``(rho, u, v, p)`` on each side of ``y = 0``."""

    rho_minus: float
    v_minus: float
    p_minus: float
    rho_plus: float
    v_plus: float
    p_plus: float
    gamma: float
    u_minus: float = 0.0
    u_plus: float = 0.0

    def __post_init__(self) -> None:
        if not (self.rho_minus > 0.0 and self.rho_plus > 0.0):
            raise DomainError("densities must be positive")
        if not (self.p_minus > 0.0 and self.p_plus > 0.0):
            raise DomainError("pressures must be positive")
        if not self.gamma > 1.0:
            raise DomainError(f"gamma must exceed 1, got {self.gamma}")

    def shifted(self, du: float = 0.0, dv: float = 0.0) -> "RiemannDataFull":
        return replace(
            self,
            u_minus=self.u_minus + du,
            u_plus=self.u_plus + du,
            v_minus=self.v_minus + dv,
            v_plus=self.v_plus + dv,
        )

    def to_json(self) -> dict:
        return {
            "system": "full",
            "left": {"rho": self.rho_minus, "u": self.u_minus, "v": self.v_minus, "p": self.p_minus},
            "right": {"rho": self.rho_plus, "u": self.u_plus, "v": self.v_plus, "p": self.p_plus},
            "eos": {"gamma": self.gamma},
        }


@dataclass(frozen=True)
class Wave:
    """A single wave; ``speeds`` is ``(s,)`` for jumps and ``(head, tail)`` ordered for fans."""

    kind: str
    speeds: tuple

    @property
    def lo(self) -> float:
        return self.speeds[0]

    @property
    def hi(self) -> float:
        return self.speeds[-1]


@dataclass(frozen=True)
class WaveFan:
    """Structure and intermediate state of a self-similar Riemann solution.

    For the isentropic system ``rho_M_minus == rho_M_plus == rho_M``; for the
    full system the two differ across the contact and ``p_M`` is set.
    """

    system: str
    wave1: Wave | None
    wave2: Wave | None
    wave3: Wave | None
    rho_M_minus: float | None
    rho_M_plus: float | None
    v_M: float | None
    p_M: float | None = None
    vacuum: bool = False
    case: int | None = None
    solved: bool = True

    @property
    def rho_M(self) -> float | None:
        return self.rho_M_minus

    def waves(self) -> list[Wave]:
        return [w for w in (self.wave1, self.wave2, self.wave3) if w is not None]

    def to_json(self) -> dict:
        def wj(w: Wave | None):
            return None if w is None else {"kind": w.kind, "speeds": list(w.speeds)}

        return {
            "system": self.system,
            "case": self.case,
            "solved": self.solved,
            "vacuum": self.vacuum,
            "waves": [wj(self.wave1), wj(self.wave2), wj(self.wave3)],
            "intermediate": {
                "rho_M_minus": self.rho_M_minus,
                "rho_M_plus": self.rho_M_plus,
                "v_M": self.v_M,
                "p_M": self.p_M,
            },
        }


# --- isentropic wave curves ---------------------------------------------------


def _shock_term(eos: GammaLaw, rho: float, rho_ref: float) -> float:
    """``sqrt((rho - rho_ref)(p(rho) - p(rho_ref)) / (rho rho_ref))``."""
    return math.sqrt((rho - rho_ref) * (_eos.pressure(eos, rho) - _eos.pressure(eos, rho_ref)) / (rho * rho_ref))


def _wave_drop(eos: GammaLaw, rho: float, rho_ref: float) -> float:
    """Normal-velocity loss along a 1-wave (or gain along a 3-wave) from ``rho_ref`` to ``rho``."""
    if rho > rho_ref:
        return _shock_term(eos, rho, rho_ref)
    return -_eos._rint(eos, rho, rho_ref)


def _gap_function(d: RiemannDataIsen, rho: float) -> float:
    """``v_+ - v_-`` produced by intermediate density ``rho``; strictly decreasing in ``rho``."""
    return -_wave_drop(d.eos, rho, d.rho_minus) - _wave_drop(d.eos, rho, d.rho_plus)


def isen_case(d: RiemannDataIsen, rtol: float = 1e-13) -> int:
    """Case number 1..7 from the explicit inequalities; ties go to the lower case."""
    eos = d.eos
    dv = d.v_plus - d.v_minus
    rm, rp = d.rho_minus, d.rho_plus
    vac = _eos._rint(eos, 0.0, rm) + _eos._rint(eos, 0.0, rp)
    rar = abs(_eos._rint(eos, rm, rp))
    shock = _shock_term(eos, max(rm, rp), min(rm, rp))
    tol = rtol * (abs(d.v_minus) + abs(d.v_plus) + vac)
    if dv >= vac - tol:
        return 1
    if dv > rar + tol:
        return 2
    if abs(dv - rar) <= tol:
        return 3
    if dv > -shock + tol:
        return 4 if rm > rp else 5
    if abs(dv + shock) <= tol:
        return 6
    return 7


def _solve_rho(d: RiemannDataIsen, lo: float, hi: float, expand: bool) -> float:
    dv = d.v_plus - d.v_minus
    f = lambda r: dv - _gap_function(d, r)
    cap = 1e3 * max(d.rho_minus, d.rho_plus)
    if expand:
        while f(hi) < 0.0:
            hi *= 2.0
            if hi > cap:
                raise SolverError("bracket expansion exceeded 1e3 times the data densities")
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0.0:
        # ties at the bracket ends within rounding
        return lo if abs(flo) < abs(fhi) else hi
    return optimize.brentq(f, lo, hi, xtol=1e-300, rtol=1e-15, maxiter=400)


def solve_isen(d: RiemannDataIsen) -> WaveFan:
    """Solve the isentropic Riemann problem exactly.

    Raises
    ------
    SolverError
        If the two-shock bracket cannot be expanded within 1e3 times the data densities.
    """
    eos = d.eos
    rm, rp, vm, vp = d.rho_minus, d.rho_plus, d.v_minus, d.v_plus
    case = isen_case(d)
    c = lambda r: _eos.sound_speed(eos, r) if r > 0.0 else 0.0
    contact = None
    vacuum = False
    if case == 1:
        e_minus = vm + _eos._rint(eos, 0.0, rm)
        e_plus = vp - _eos._rint(eos, 0.0, rp)
        v_M = 0.5 * (e_minus + e_plus)
        w1 = Wave("rarefaction", (vm - c(rm), e_minus))
        w3 = Wave("rarefaction", (e_plus, vp + c(rp)))
        if d.u_minus != d.u_plus:
            contact = Wave("contact", (v_M,))
        return WaveFan("isen", w1, contact, w3, 0.0, 0.0, v_M, vacuum=True, case=1)
    if case == 3:
        if rm == rp:
            rho_M, v_M = rm, vm
        elif rm > rp:
            rho_M, v_M = rp, vp
        else:
            rho_M, v_M = rm, vm
    elif case == 6:
        rho_M, v_M = (rm, vm) if rm > rp else (rp, vp)
    elif case == 2:
        rho_M = _solve_rho(d, 0.0, min(rm, rp), False)
    elif case == 4:
        rho_M = _solve_rho(d, rp, rm, False)
    elif case == 5:
        rho_M = _solve_rho(d, rm, rp, False)
    else:
        top = max(rm, rp)
        rho_M = _solve_rho(d, top, 2.0 * top, True)
    if case not in (3, 6):
        v_M = vm - _wave_drop(eos, rho_M, rm)
    w1 = _left_wave(eos, rm, vm, rho_M, v_M)
    w3 = _right_wave(eos, rho_M, v_M, rp, vp)
    if d.u_minus != d.u_plus:
        contact = Wave("contact", (v_M,))
    return WaveFan("isen", w1, contact, w3, rho_M, rho_M, v_M, vacuum=vacuum, case=case)


def _left_wave(eos: GammaLaw, rho_l: float, v_l: float, rho_M: float, v_M: float) -> Wave | None:
    if rho_M == rho_l:
        return None
    if rho_M > rho_l:
        return Wave("shock", ((rho_M * v_M - rho_l * v_l) / (rho_M - rho_l),))
    return Wave("rarefaction", (v_l - _eos.sound_speed(eos, rho_l), v_M - _eos.sound_speed(eos, rho_M)))


def _right_wave(eos: GammaLaw, rho_M: float, v_M: float, rho_r: float, v_r: float) -> Wave | None:
    if rho_M == rho_r:
        return None
    if rho_M > rho_r:
        return Wave("shock", ((rho_r * v_r - rho_M * v_M) / (rho_r - rho_M),))
    return Wave("rarefaction", (v_M + _eos.sound_speed(eos, rho_M), v_r + _eos.sound_speed(eos, rho_r)))


# --- table classification -----------------------------------------------------

_KIND = {None: 0, "shock": 1, "rarefaction": 2}
UNIQUE_ROWS = frozenset({1, 3, 7, 9})
OPEN_ROWS = frozenset({10, 12, 16, 18})


@dataclass(frozen=True)
class TableRow:
    row: int
    verdict: str
    wave1: str | None
    contact: bool
    wave3: str | None


def table_row(fan: WaveFan) -> TableRow:
    """Map a fan structure to its row of the 18-row uniqueness table."""
    k1 = fan.wave1.kind if fan.wave1 else None
    k3 = fan.wave3.kind if fan.wave3 else None
    contact = fan.wave2 is not None
    row = 1 + 9 * int(contact) + 3 * _KIND[k1] + _KIND[k3]
    verdict = "unique" if row in UNIQUE_ROWS else "open" if row in OPEN_ROWS else "non-unique"
    return TableRow(row, verdict, k1, contact, k3)


def classify_isen(d: RiemannDataIsen) -> TableRow:
    """Table row and uniqueness verdict of the self-similar solution."""
    return table_row(solve_isen(d))


# --- full Euler ---------------------------------------------------------------


def _full_shock_term(g: float, rho_k: float, p_k: float, p: float) -> float:
    """Velocity jump across a shock from ``(rho_k, p_k)`` to pressure ``p``."""
    return math.sqrt(2.0) * (p - p_k) / math.sqrt(rho_k * ((g - 1.0) * p_k + (g + 1.0) * p))


def _full_rarefaction_term(g: float, rho_k: float, p_k: float, p: float) -> float:
    c = math.sqrt(g * p_k / rho_k)
    return 2.0 * c / (g - 1.0) * ((p / p_k) ** ((g - 1.0) / (2.0 * g)) - 1.0)


def _full_branch(g: float, rho_k: float, p_k: float, p: float) -> float:
    if p > p_k:
        return _full_shock_term(g, rho_k, p_k, p)
    return _full_rarefaction_term(g, rho_k, p_k, p)


def two_shock_gap(d: RiemannDataFull) -> tuple[str, float]:
    """Which two-shock inequality applies and its threshold for ``v_+ - v_-``."""
    g = d.gamma
    if d.p_minus <= d.p_plus:
        return "p_minus<=p_plus", -_full_shock_term(g, d.rho_minus, d.p_minus, d.p_plus)
    return "p_plus<p_minus", -_full_shock_term(g, d.rho_plus, d.p_plus, d.p_minus)


def full_post_shock_density(g: float, rho_k: float, p_k: float, p: float) -> float:
    """Density behind a shock raising ``p_k`` to ``p``."""
    return rho_k * ((g - 1.0) * p_k + (g + 1.0) * p) / ((g - 1.0) * p + (g + 1.0) * p_k)


def solve_full_two_shock(d: RiemannDataFull) -> WaveFan:
    """Exact two-shock solution of the full Euler Riemann problem.

    Raises
    ------
    DomainError
        If the tangential velocities differ.
    ClassificationError
        If the two-shock condition fails; the message names the inequality.
    """
    if d.u_minus != d.u_plus:
        raise DomainError("the two-shock solver requires u_minus == u_plus")
    g = d.gamma
    dv = d.v_plus - d.v_minus
    which, thr = two_shock_gap(d)
    if not dv < thr:
        raise ClassificationError(f"two-shock condition ({which}) fails: v_+ - v_- = {dv!r} is not below {thr!r}")
    f = lambda p: _full_shock_term(g, d.rho_minus, d.p_minus, p) + _full_shock_term(g, d.rho_plus, d.p_plus, p) + dv
    lo = max(d.p_minus, d.p_plus)
    hi = 2.0 * lo
    while f(hi) < 0.0:
        hi *= 2.0
        if hi > 1e300:
            raise SolverError("pressure bracket expansion failed")
    p_M = optimize.brentq(f, lo, hi, xtol=1e-300, rtol=1e-15, maxiter=400)
    v_M = d.v_minus - _full_shock_term(g, d.rho_minus, d.p_minus, p_M)
    r_l = full_post_shock_density(g, d.rho_minus, d.p_minus, p_M)
    r_r = full_post_shock_density(g, d.rho_plus, d.p_plus, p_M)
    s_l = (r_l * v_M - d.rho_minus * d.v_minus) / (r_l - d.rho_minus)
    s_r = (d.rho_plus * d.v_plus - r_r * v_M) / (d.rho_plus - r_r)
    return WaveFan(
        "full",
        Wave("shock", (s_l,)),
        Wave("contact", (v_M,)),
        Wave("shock", (s_r,)),
        r_l,
        r_r,
        v_M,
        p_M=p_M,
        case=7,
    )


def classify_full(d: RiemannDataFull) -> WaveFan:
    """Wave kinds of a full-Euler solution; exact only for the two-shock case.

    The 1- and 3-wave kinds follow from the sign of the textbook pressure
    function at ``p_-`` and ``p_+``; non two-shock fans are structure only.
    """
    g = d.gamma
    dv = d.v_plus - d.v_minus
    try:
        return solve_full_two_shock(d)
    except ClassificationError:
        pass
    c_l = math.sqrt(g * d.p_minus / d.rho_minus)
    c_r = math.sqrt(g * d.p_plus / d.rho_plus)
    if dv >= 2.0 * (c_l + c_r) / (g - 1.0):
        return WaveFan("full", Wave("rarefaction", ()), Wave("contact", ()), Wave("rarefaction", ()), 0.0, 0.0, None, vacuum=True, case=1, solved=False)

    def F(p: float) -> float:
        return _full_branch(g, d.rho_minus, d.p_minus, p) + _full_branch(g, d.rho_plus, d.p_plus, p) + dv

    k1 = None if F(d.p_minus) == 0.0 else "shock" if F(d.p_minus) < 0.0 else "rarefaction"
    k3 = None if F(d.p_plus) == 0.0 else "shock" if F(d.p_plus) < 0.0 else "rarefaction"
    w1 = Wave(k1, ()) if k1 else None
    w3 = Wave(k3, ()) if k3 else None
    return WaveFan("full", w1, Wave("contact", ()), w3, None, None, None, solved=False)


# --- residual and admissibility report ---------------------------------------


@dataclass
class FanReport:
    """Named residuals (should vanish) and margins (should be positive)."""

    residuals: dict = field(default_factory=dict)
    margins: dict = field(default_factory=dict)
    scale: float = 1.0

    def max_residual(self) -> float:
        return max((abs(v) for v in self.residuals.values()), default=0.0)

    def min_margin(self) -> float:
        return min(self.margins.values(), default=0.0)

    def to_json(self) -> dict:
        return {"residuals": dict(self.residuals), "margins": dict(self.margins), "scale": self.scale}


def _isen_states(d: RiemannDataIsen, fan: WaveFan):
    eos = d.eos

    def conserved(rho: float, v: float, u: float):
        p = _eos.pressure(eos, rho)
        P = _eos.pressure_potential(eos, rho)
        e = 0.5 * rho * (u * u + v * v) + P
        return rho, rho * v, rho * v * v + p, e, (e + p) * v

    return conserved


def rh_and_admissibility_report(fan: WaveFan, d) -> FanReport:
    """Jump-condition residuals and entropy margins of every wave in a fan.

    Shocks contribute mass, momentum (and energy) Rankine-Hugoniot residuals
    and one admissibility margin each: energy dissipation for the isentropic
    system, physical entropy production for the full system. Rarefactions
    contribute the residual of their wave-curve relation.
    """
    rep = FanReport()
    if isinstance(d, RiemannDataIsen):
        if fan.vacuum:
            return rep
        eos = d.eos
        st = _isen_states(d, fan)
        L = st(d.rho_minus, d.v_minus, d.u_minus)
        R = st(d.rho_plus, d.v_plus, d.u_plus)
        ML = st(fan.rho_M, fan.v_M, d.u_minus)
        MR = st(fan.rho_M, fan.v_M, d.u_plus)
        rep.scale = max(abs(x) for x in L + R + ML)
        for tag, w, a, b, ra, rb, va, vb in (
            ("1", fan.wave1, L, ML, d.rho_minus, fan.rho_M, d.v_minus, fan.v_M),
            ("3", fan.wave3, MR, R, fan.rho_M, d.rho_plus, fan.v_M, d.v_plus),
        ):
            if w is None:
                continue
            if w.kind == "shock":
                s = w.speeds[0]
                rep.residuals[f"mass{tag}"] = s * (b[0] - a[0]) - (b[1] - a[1])
                rep.residuals[f"mom{tag}"] = s * (b[1] - a[1]) - (b[2] - a[2])
                rep.margins[f"energy{tag}"] = s * (b[3] - a[3]) - (b[4] - a[4])
            else:
                lo, hi = min(ra, rb), max(ra, rb)
                gain = _eos._rint(eos, lo, hi)
                if tag == "1":
                    rep.residuals["curve1"] = vb - va - gain
                else:
                    rep.residuals["curve3"] = vb - va - gain
        return rep
    g = d.gamma

    def cons(rho: float, v: float, u: float, p: float):
        E = p / (g - 1.0) + 0.5 * rho * (u * u + v * v)
        s = _eos.physical_entropy(g, rho, p)
        return rho, rho * v, rho * v * v + p, E, (E + p) * v, rho * s, rho * s * v

    L = cons(d.rho_minus, d.v_minus, d.u_minus, d.p_minus)
    R = cons(d.rho_plus, d.v_plus, d.u_plus, d.p_plus)
    if not fan.solved:
        return rep
    ML = cons(fan.rho_M_minus, fan.v_M, d.u_minus, fan.p_M)
    MR = cons(fan.rho_M_plus, fan.v_M, d.u_plus, fan.p_M)
    rep.scale = max(abs(x) for x in L[:5] + R[:5] + ML[:5] + MR[:5])
    for tag, w, a, b in (("-", fan.wave1, L, ML), ("+", fan.wave3, MR, R)):
        if w is None or w.kind != "shock":
            continue
        s = w.speeds[0]
        rep.residuals[f"dens{tag}"] = s * (b[0] - a[0]) - (b[1] - a[1])
        rep.residuals[f"mom{tag}"] = s * (b[1] - a[1]) - (b[2] - a[2])
        rep.residuals[f"en{tag}"] = s * (b[3] - a[3]) - (b[4] - a[4])
        rep.margins[f"adm{tag}"] = (b[6] - a[6]) - s * (b[5] - a[5])
    return rep


# --- sampling and serialization -----------------------------------------------


def _rarefaction_state(eos: GammaLaw, rho_k: float, v_k: float, xi: float, family: int) -> tuple[float, float]:
    """State inside a centred 1- or 3-rarefaction at similarity coordinate ``xi``."""
    g = eos.gamma
    c_k = _eos.sound_speed(eos, rho_k)
    if family == 1:
        c = (v_k + 2.0 * c_k / (g - 1.0) - xi) * (g - 1.0) / (g + 1.0)
        v = xi + c
    else:
        c = (xi - v_k + 2.0 * c_k / (g - 1.0)) * (g - 1.0) / (g + 1.0)
        v = xi - c
    c = max(c, 0.0)
    rho = (c * c / (eos.a * g)) ** (1.0 / (g - 1.0))
    return float(rho), float(v)


def sample_fan(d, fan: WaveFan, xi: float) -> dict:
    """Primitive state ``(rho, u, v[, p])`` of a solved fan at ``xi = y / t``.

    Points on a jump take the left state.

    Raises
    ------
    DomainError
        If the fan is a structure-only classification.
    """
    if not fan.solved:
        raise DomainError("structure-only fans cannot be sampled")
    full = isinstance(d, RiemannDataFull)
    left = {"rho": d.rho_minus, "u": d.u_minus, "v": d.v_minus}
    right = {"rho": d.rho_plus, "u": d.u_plus, "v": d.v_plus}
    if full:
        left["p"], right["p"] = d.p_minus, d.p_plus
    split = fan.v_M if fan.v_M is not None else 0.0
    w1, w3 = fan.wave1, fan.wave3
    if xi <= split:
        if w1 is None or xi <= w1.lo:
            return left
        mid = {"rho": fan.rho_M_minus, "u": d.u_minus, "v": fan.v_M}
        if full:
            mid["p"] = fan.p_M
        if w1.kind == "rarefaction" and xi < w1.hi:
            rho, v = _rarefaction_state(d.eos, d.rho_minus, d.v_minus, xi, 1)
            return {"rho": rho, "u": d.u_minus, "v": v}
        return left if (w1.kind == "shock" and xi <= w1.lo) else mid
    if w3 is None or xi > w3.hi:
        return right
    mid = {"rho": fan.rho_M_plus, "u": d.u_plus, "v": fan.v_M}
    if full:
        mid["p"] = fan.p_M
    if w3.kind == "rarefaction" and xi > w3.lo:
        rho, v = _rarefaction_state(d.eos, d.rho_plus, d.v_plus, xi, 3)
        return {"rho": rho, "u": d.u_plus, "v": v}
    return mid


def riemann_data_from_json(obj: dict, system: str | None = None):
    """Parse ``{"system", "left", "right", "eos"}`` into Riemann data.

    Raises
    ------
    DomainError
        On a missing key, a system mismatch or invalid values.
    """
    try:
        sys_ = obj.get("system", system)
        if system is not None and sys_ != system:
            raise DomainError(f"input system {sys_!r} does not match {system!r}")
        L, R, E = obj["left"], obj["right"], obj.get("eos", {})
        if sys_ == "isen":
            return RiemannDataIsen(
                float(L["rho"]), float(L["v"]), float(R["rho"]), float(R["v"]),
                GammaLaw.from_json(E), float(L.get("u", 0.0)), float(R.get("u", 0.0)),
            )
        if sys_ == "full":
            return RiemannDataFull(
                float(L["rho"]), float(L["v"]), float(L["p"]), float(R["rho"]), float(R["v"]), float(R["p"]),
                float(E["gamma"]), float(L.get("u", 0.0)), float(R.get("u", 0.0)),
            )
    except (KeyError, TypeError) as exc:
        raise DomainError(f"malformed Riemann data: missing or invalid {exc}") from exc
    raise DomainError(f"unknown system {sys_!r}")
