"""Command-line front end.

Verbs
-----
riemann     exact fan and jump report, optional CSV sampling in ``xi = y / t``
classify    uniqueness-table row and verdict
fan-search  fan subsolution search; writes data, candidate and report
fan-verify  residual and margin report of a candidate; exit 0 iff it passes
oscillate   oscillation on the wedge of an isentropic candidate; CSV dump and I-vs-k trace
check       run the acceptance suite

Exit codes: 0 success, 2 parse error, 3 domain error, 4 infeasible.
"""

from __future__ import annotations

import argparse
import json
import math
import subprocess
import sys
from pathlib import Path

import numpy as np

from convint import fansub, oscsynth, riemann
from convint.errors import ContractError, DomainError, InfeasibleError, SolverError
from convint.phasegeom import RelaxationContext, in_wave_cone

EXIT_OK, EXIT_PARSE, EXIT_DOMAIN, EXIT_INFEASIBLE = 0, 2, 3, 4


class ParseError(Exception):
    pass


def _plain(obj):
    """Recursively convert numpy scalars and tuples into JSON-native values."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if not math.isfinite(v):
            return repr(v)
        return v
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dumps(obj) -> str:
    """Deterministic JSON: sorted keys and shortest round-trip floats."""
    return json.dumps(_plain(obj), sort_keys=True, indent=2) + "\n"


def _read_input(spec: str | None) -> dict:
    if spec is None:
        raise ParseError("--input is required")
    try:
        if spec == "-":
            text = sys.stdin.read()
        elif spec.lstrip().startswith("{"):
            text = spec
        else:
            text = Path(spec).read_text()
        obj = json.loads(text)
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot read input: {exc}") from exc
    if not isinstance(obj, dict):
        raise ParseError("input must be a JSON object")
    return obj


def _emit(args, payload: dict) -> None:
    text = dumps(payload)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _data(obj: dict, system: str | None):
    return riemann.riemann_data_from_json(obj.get("data", obj), system)


# --- verbs ---------------------------------------------------------------------


def _solve(d):
    if isinstance(d, riemann.RiemannDataIsen):
        return riemann.solve_isen(d)
    return riemann.classify_full(d)


def cmd_riemann(args) -> int:
    d = _data(_read_input(args.input), args.system)
    fan = _solve(d)
    payload = {"data": d.to_json(), "fan": fan.to_json()}
    if fan.solved:
        payload["report"] = riemann.rh_and_admissibility_report(fan, d).to_json()
    if args.csv:
        if not fan.solved:
            raise DomainError("structure-only fans cannot be sampled")
        speeds = [s for w in fan.waves() for s in w.speeds] or [0.0]
        lo, hi = min(speeds), max(speeds)
        pad = max(1.0, 0.25 * (hi - lo))
        xs = np.linspace(lo - pad, hi + pad, args.grid)
        keys = ["rho", "u", "v"] + (["p"] if isinstance(d, riemann.RiemannDataFull) else [])
        lines = [",".join(["xi"] + keys)]
        for xi in xs:
            st = riemann.sample_fan(d, fan, float(xi))
            lines.append(",".join(repr(float(v)) for v in [xi] + [st[k] for k in keys]))
        Path(args.csv).write_text("\n".join(lines) + "\n")
    _emit(args, payload)
    return EXIT_OK


def cmd_classify(args) -> int:
    d = _data(_read_input(args.input), args.system)
    if isinstance(d, riemann.RiemannDataIsen):
        fan = riemann.solve_isen(d)
    else:
        fan = riemann.classify_full(d)
    row = riemann.table_row(fan)
    _emit(args, {"row": row.row, "verdict": row.verdict, "wave1": row.wave1, "contact": row.contact, "wave3": row.wave3})
    return EXIT_OK


def _search(d, tol: float | None):
    """Return ``(candidate in the data frame, report, log)`` or ``(None, None, log)``."""
    if isinstance(d, riemann.RiemannDataIsen):
        kw = {} if tol is None else {"tol": tol}
        res = fansub.isen_search_SR(d, **kw)
        if res is not None:
            return res.candidate, res.report, {"rho1": res.rho1, "eps_tilde1": res.eps_tilde1}
        try:
            aux = fansub.isen_aux_patch(d, **kw)
            log = {"aux_patch": {"rho_a": aux.rho_a, "v_a": aux.v_a, "feasible": aux.feasible, "margin": aux.margin, "halvings": aux.halvings}}
        except SolverError as exc:
            log = {"aux_patch": {"feasible": False, "reason": str(exc)}}
        return None, None, log
    kw = {} if tol is None else {"tol": tol}
    dn, du, dv = fansub.galilean_normalize(d)
    res = fansub.full_search(dn, **kw)
    if res is None:
        return None, None, {"frontier": {"max_level": 40}}
    cand = fansub.shift_candidate(res.candidate, -du, -dv)
    return cand, res.report, {"eps": res.eps, "eps_bar": res.eps_bar, "k": res.k, "j": res.j}


def _verify(cand, d, tol: float | None):
    kw = {} if tol is None else {"tol": tol}
    if isinstance(d, riemann.RiemannDataIsen):
        return fansub.isen_verify(cand, d, **kw)
    return fansub.full_verify(cand, d, **kw)


def cmd_fan_search(args) -> int:
    d = _data(_read_input(args.input), args.system)
    cand, report, log = _search(d, args.tol)
    if cand is None:
        _emit(args, {"data": d.to_json(), "status": "infeasible", "log": log})
        return EXIT_INFEASIBLE
    _emit(args, {"data": d.to_json(), "status": "found", "candidate": cand.to_json(), "report": report.to_json(), "log": log})
    return EXIT_OK


def _candidate(obj: dict):
    try:
        c = obj["candidate"]
    except KeyError as exc:
        raise ParseError("input lacks a 'candidate' object") from exc
    try:
        if c.get("system") == "full":
            return fansub.FanCandidateFull.from_json(c)
        return fansub.FanCandidateIsen.from_json(c)
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed candidate: {exc}") from exc


def cmd_fan_verify(args) -> int:
    obj = _read_input(args.input)
    d = _data(obj, args.system)
    rep = _verify(_candidate(obj), d, args.tol)
    _emit(args, {"data": d.to_json(), "report": rep.to_json()})
    return EXIT_OK if rep.passed else EXIT_INFEASIBLE


def cmd_oscillate(args) -> int:
    obj = _read_input(args.input)
    d = _data(obj, "isen")
    if "candidate" in obj:
        cand = _candidate(obj)
    else:
        cand, _, _ = _search(d, args.tol)
        if cand is None:
            _emit(args, {"status": "infeasible"})
            return EXIT_INFEASIBLE
    if not isinstance(cand, fansub.FanCandidateIsen):
        raise DomainError("oscillate needs an isentropic candidate")
    base, c1 = cand.wedge_point(d.eos)
    ctx = RelaxationContext(d.eos, 2, c1)
    _, p1, p2 = oscsynth.split_pair(ctx, base)
    box = oscsynth.wedge_cube(oscsynth.FanPartition.of(cand), 1, in_wave_cone(p2 - p1).eta)
    km = oscsynth.find_k_min(ctx, base, (p1, p2), box, seed=args.seed, k_max=max(args.k, 1))
    trace = []
    k = 1
    while k <= km.k:
        field = oscsynth.synthesize(base, (p1, p2), box, k)
        trace.append({"k": k, "I": oscsynth.functional_I(ctx, field, order=args.quad)})
        k *= 2
    if args.csv:
        oscsynth.write_field_csv(ctx, km.field, args.csv, grid=args.grid)
    pm = oscsynth.plateau_measures(km.field)
    _emit(
        args,
        {
            "k_min": km.k,
            "e_bound": km.bound,
            "max_sampled_e": km.max_e,
            "I_base": oscsynth.functional_I(ctx, base, box),
            "I_trace": trace,
            "certified_lower_bound": pm.certified_bound(ctx, p1, p2),
        },
    )
    return EXIT_OK


def cmd_check(args) -> int:
    path = Path(args.input) if args.input else Path(__file__).resolve().parents[2] / "tests" / "test_acceptance.py"
    if not path.exists():
        raise ParseError(f"acceptance suite not found at {path}")
    proc = subprocess.run([sys.executable, "-m", "pytest", "-q", "-s", str(path)])
    return EXIT_OK if proc.returncode == 0 else 1


COMMANDS = {
    "riemann": cmd_riemann,
    "classify": cmd_classify,
    "fan-search": cmd_fan_search,
    "fan-verify": cmd_fan_verify,
    "oscillate": cmd_oscillate,
    "check": cmd_check,
}


def _positive_float(text: str) -> float:
    v = float(text)
    if not v > 0.0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="convint", description="Riemann fans, fan subsolutions and oscillations for compressible Euler.")
    p.add_argument("verb", choices=sorted(COMMANDS))
    p.add_argument("--system", choices=("isen", "full"), default=None)
    p.add_argument("--input", help="JSON file, inline JSON object, or '-' for stdin")
    p.add_argument("--out", help="write the JSON report here instead of stdout")
    p.add_argument("--csv", help="CSV output path")
    p.add_argument("--grid", type=_positive_int, default=64, help="CSV grid points per axis")
    p.add_argument("--quad", type=_positive_int, default=8, help="Gauss-Legendre order")
    p.add_argument("--k", type=_positive_int, default=4096, help="largest frequency index tried")
    p.add_argument("--tol", type=_positive_float, default=None, help="residual tolerance")
    p.add_argument("--seed", type=int, default=0)
    return p


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_PARSE
    try:
        return COMMANDS[args.verb](args)
    except ParseError as exc:
        print(f"convint: parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (DomainError, ContractError) as exc:
        print(f"convint: domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except (InfeasibleError, SolverError) as exc:
        print(f"convint: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE


if __name__ == "__main__":
    sys.exit(main())
