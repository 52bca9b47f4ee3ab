"""Command-line frontend: ``nhmech simulate|check|reduce``.

Exit codes: 0 pass, 1 check failed, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import sys as _sys
from collections import Counter
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import constraints as cn
from . import dynamics as dy
from . import hamjac as hj
from . import reduction as rd
from . import systems
from .errors import (
    ClassificationError,
    CompatibilityError,
    ConfigurationError,
    DimensionError,
    DomainError,
    NumericalError,
    RegularityError,
    UnsupportedOperationError,
)
from .mechanics import State
from .report import CheckReport, dumps, quasi_random_grid

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2, 3

CHECKS = (
    "in_N",
    "closedness",
    "hj_weak",
    "hj_strong",
    "related",
    "forced",
    "hamiltonian",
    "reduced",
    "horizontal_mu",
    "classify",
    "chow",
    "noether",
    "bates",
)

CONFIG_ERRORS = (
    ConfigurationError,
    DomainError,
    DimensionError,
    ClassificationError,
    UnsupportedOperationError,
    RegularityError,
    CompatibilityError,
)


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # exit code 2 with usage, as argparse does
        self.print_usage(_sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _key_values(items: Sequence[str] | None, what: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for item in items or []:
        key, sep, val = item.partition("=")
        if not sep or not key:
            raise ConfigurationError(f"{what} must look like key=value, got {item!r}")
        out[key.strip()] = val.strip()
    return out


def _floats(text: str | None, what: str, size: int | None = None) -> np.ndarray | None:
    if text is None:
        return None
    try:
        vals = np.array([float(x) for x in text.split(",") if x.strip()], dtype=float)
    except ValueError as exc:
        raise ConfigurationError(f"{what} must be a comma-separated list of numbers, got {text!r}") from exc
    if size is not None and vals.size != size:
        raise ConfigurationError(f"{what} needs {size} entries, got {vals.size}")
    return vals


def _box(text: str | None, default: list[tuple[float, float]], what: str = "--box") -> list[tuple[float, float]]:
    if text is None:
        return default
    out = []
    for part in text.split(","):
        lo, sep, hi = part.partition(":")
        try:
            out.append((float(lo), float(hi)))
        except ValueError as exc:
            raise ConfigurationError(f"{what} entries look like lo:hi, got {part!r}") from exc
        if not sep or out[-1][0] > out[-1][1]:
            raise ConfigurationError(f"{what} entries look like lo:hi with lo <= hi, got {part!r}")
    if len(out) != len(default):
        raise ConfigurationError(f"{what} needs {len(default)} intervals, got {len(out)}")
    return out


def _read_config(path: str) -> list[str]:
    """Flat key=value file turned into flags; they are placed before the command-line flags."""
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config file {path!r}: {exc}") from exc
    argv: list[str] = []
    for raw in lines:
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        if not sep:
            raise ConfigurationError(f"config line must look like key=value, got {raw!r}")
        key, val = key.strip().replace("_", "-"), val.strip()
        if key in ("param", "cparam"):
            argv += [f"--{key}", val]
        elif val.lower() in ("true", "false") and key in ("no-stabilize", "strong", "per-point"):
            argv += [f"--{key}"] if val.lower() == "true" else []
        else:
            argv += [f"--{key}", val]
    return argv


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--system", default="free_particle", help=f"one of {', '.join(systems.names())}")
    common.add_argument("--param", action="append", metavar="K=V", help="system parameter (repeatable)")
    common.add_argument("--out", help="output path (default: stdout)")
    common.add_argument("--tol", type=float, help="tolerance override")
    common.add_argument("--seed", type=int, default=0, help="seed for quasi-random grids")
    common.add_argument("--config", help="flat key=value file; command-line flags win")

    cand = argparse.ArgumentParser(add_help=False)
    cand.add_argument("--candidate", help="candidate name from the system bundle")
    cand.add_argument("--cparam", action="append", metavar="K=V", help="candidate parameter (repeatable)")
    cand.add_argument("--c1", type=float, help="shorthand for --cparam c1=...")
    cand.add_argument("--c2", type=float, help="shorthand for --cparam c2=...")
    cand.add_argument("--grid-count", type=int, default=100)
    cand.add_argument("--box", help="grid box as lo:hi,lo:hi,...")
    cand.add_argument("--per-point", action="store_true", help="include per-point residuals in the report")

    parser = _Parser(prog="nhmech", description="Nonholonomic mechanics toolkit")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sim = sub.add_parser("simulate", parents=[common], help="integrate the constrained dynamics to CSV")
    sim.add_argument("--q0", help="initial configuration, comma separated")
    sim.add_argument("--v0", help="initial velocity, comma separated")
    sim.add_argument("--dt", type=float, default=1e-3)
    sim.add_argument("--steps", type=int, default=1000)
    sim.add_argument("--no-stabilize", action="store_true")

    chk = sub.add_parser("check", parents=[common, cand], help="run one verification and emit a JSON report")
    chk.add_argument("--check", required=True, choices=CHECKS)
    chk.add_argument("--strong", action="store_true", help="strong form for the hamiltonian check")
    chk.add_argument("--depth", type=int, help="maximum bracket depth for chow")
    chk.add_argument("--q", help="base point for chow (default: origin)")
    chk.add_argument("--mu", help="momentum value for horizontal_mu, comma separated")
    chk.add_argument("--sign", choices=("minus", "plus"), help="sign convention for forced/reduced checks")
    chk.add_argument("--steps", type=int, default=1000, help="trajectory length for noether")
    chk.add_argument("--dt", type=float, default=1e-3, help="time step for noether")

    red = sub.add_parser("reduce", parents=[common, cand], help="reduce, check, reconstruct and verify")
    red.add_argument("--sign", choices=("minus", "plus"), help="pin the reduced sign convention")
    return parser


def _candidate_params(args: argparse.Namespace) -> dict[str, float]:
    raw = _key_values(args.cparam, "--cparam")
    out: dict[str, float] = {}
    for key, val in raw.items():
        try:
            out[key] = float(val)
        except ValueError as exc:
            raise ConfigurationError(f"candidate parameter {key!r} must be a number") from exc
    for key in ("c1", "c2"):
        if getattr(args, key) is not None:
            out[key] = getattr(args, key)
    return out


def _make_candidate(table: dict[str, Any], args: argparse.Namespace, where: str) -> hj.HJCandidate:
    if not table:
        raise ConfigurationError(f"this system has no {where} candidates")
    name = args.candidate or next(iter(table))
    if name not in table:
        raise ConfigurationError(f"unknown {where} candidate {name!r} (known: {', '.join(table)})")
    try:
        return table[name](**_candidate_params(args))
    except TypeError as exc:
        raise ConfigurationError(f"bad parameters for candidate {name!r}: {exc}") from exc


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text + "\n", encoding="utf-8")
    else:
        _sys.stdout.write(text + "\n")


def _sample_states(bundle: systems.SystemBundle, count: int, seed: int) -> list[State]:
    return cn.random_states_on_N(bundle.cs, count, np.random.default_rng(seed), bundle.q_box)


def cmd_simulate(args: argparse.Namespace, bundle: systems.SystemBundle) -> int:
    if not bundle.has_dynamics:
        raise ConfigurationError(f"{bundle.name} has no Lagrangian of its own; simulation is not offered")
    n = bundle.n
    q0 = _floats(args.q0, "--q0", n)
    v0 = _floats(args.v0, "--v0", n)
    q0 = bundle.default_state.q if q0 is None else q0
    v0 = bundle.default_state.v if v0 is None else v0
    tol = args.tol if args.tol is not None else 1e-8
    if args.steps < 0 or not args.dt > 0:
        raise ConfigurationError("--steps must be >= 0 and --dt > 0")
    traj = dy.integrate(bundle.sys, bundle.cs, State(q0, v0), args.dt, args.steps, not args.no_stabilize, tol)
    text = traj.to_csv()
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        _sys.stdout.write(text)
    summary = {
        "steps": args.steps,
        "energy_drift": float(np.max(np.abs(traj.energy - traj.energy[0]))),
        "max_psi_residual": float(np.max(traj.psi_max)),
    }
    print(dumps(summary, indent=0).replace("\n", " "), file=_sys.stderr if not args.out else _sys.stdout)
    return EXIT_PASS


def _classify_report(bundle: systems.SystemBundle, count: int, seed: int) -> CheckReport:
    if bundle.action is None:
        raise ConfigurationError(f"{bundle.name} has no symmetry group")
    states = _sample_states(bundle, count, seed)
    found = [rd.classify_case(bundle.sys, bundle.cs, bundle.action, s) for s in states]
    votes = Counter(c.case for c in found)
    case, _ = votes.most_common(1)[0]
    details = [{"q": s.q.tolist(), "v": s.v.tolist(), "case": c.case, "dim_intersection": c.dim_intersection, "dim_vertical": c.dim_vertical} for s, c in zip(states, found)]
    residuals = [0.0 if c.case == case else 1.0 for c in found]
    rep = CheckReport.from_residuals("classify", residuals, 0.0, {"kind": "random_states", "count": count, "seed": seed}, details)
    first = next(c for c in found if c.case == case)
    rep.notes.update({"case": case, "dim_intersection": first.dim_intersection, "dim_vertical": first.dim_vertical, "dim_h": first.dim_h, "votes": dict(votes)})
    return rep


def _chow_report(bundle: systems.SystemBundle, args: argparse.Namespace) -> CheckReport:
    if not bundle.distribution_fields:
        raise ConfigurationError(f"{bundle.name} has no distribution generators (nonlinear constraints)")
    q = _floats(args.q, "--q", bundle.n)
    q = np.zeros(bundle.n) if q is None else q
    flag = cn.chow_flag(bundle.distribution_fields, q, args.depth)
    rep = CheckReport.from_residuals("chow", [float(bundle.n - flag.growth[-1])], 0.0, {"kind": "point", "q": q.tolist()})
    rep.notes.update({"growth": flag.growth, "complete": flag.complete, "depth_used": flag.depth_used})
    return rep


def _reduce_for(bundle: systems.SystemBundle) -> rd.ReducedSystem:
    if bundle.action is None or bundle.action.quotient is None:
        raise ConfigurationError(f"{bundle.name} has no symmetry group with quotient data")
    if not bundle.has_dynamics:
        raise ConfigurationError(f"{bundle.name} has no Lagrangian of its own")
    if bundle.action.quotient.hlift is not None:
        return rd.chaplygin_reduce(bundle.sys, bundle.cs, bundle.action)
    return rd.reduce_general(bundle.sys, bundle.cs, bundle.action)


def _reduced_variant(red: rd.ReducedSystem) -> str:
    return "chaplygin" if red.base is not None else "general"


def cmd_check(args: argparse.Namespace, bundle: systems.SystemBundle) -> int:
    tol = args.tol if args.tol is not None else hj.DEFAULT_TOL
    name = args.check
    sysm, cs = bundle.sys, bundle.cs
    if name == "classify":
        rep = _classify_report(bundle, min(args.grid_count, 20) if args.grid_count else 20, args.seed)
    elif name == "chow":
        rep = _chow_report(bundle, args)
    elif name == "bates":
        if bundle.action is None:
            raise ConfigurationError(f"{bundle.name} has no symmetry group")
        states = _sample_states(bundle, min(args.grid_count, 20), args.seed)
        parts = [dy.bates_sniatycki_check(sysm, cs, bundle.action, s, tol if args.tol else 1e-9) for s in states]
        rep = CheckReport.from_residuals(
            "bates_sniatycki",
            [p.max_residual for p in parts],
            parts[0].tolerance,
            {"kind": "random_states", "count": len(states), "seed": args.seed},
            [{"q": s.q.tolist(), "v": s.v.tolist(), "residual": p.max_residual, **p.notes} for s, p in zip(states, parts)],
        )
    elif name == "noether":
        if bundle.action is None or bundle.momentum_section is None:
            raise ConfigurationError(f"{bundle.name} has no momentum section for the Noether check")
        if not bundle.has_dynamics:
            raise ConfigurationError(f"{bundle.name} has no Lagrangian of its own")
        traj = dy.integrate(sysm, cs, bundle.default_state, args.dt, args.steps)
        rep = rd.noether_check(sysm, cs, bundle.action, bundle.momentum_section, traj, args.tol if args.tol is not None else 1e-6)
    elif name in ("reduced", "forced"):
        red = _reduce_for(bundle)
        cand = _make_candidate(bundle.reduced_candidates, args, "reduced")
        grid = quasi_random_grid(_box(args.box, bundle.qbar_box), args.grid_count, args.seed)
        if name == "reduced":
            rep = rd.check_reduced_hj(red, cand, grid, _reduced_variant(red), tol, args.sign)
        else:
            if red.base is None:
                raise ConfigurationError("the forced check needs a Chaplygin reduction")
            rep = hj.check_forced_hj(cand, red.base, red.gyro, grid, tol, 1 if args.sign == "plus" else -1)
    else:
        cand = _make_candidate(bundle.candidates, args, "")
        grid = quasi_random_grid(_box(args.box, bundle.q_box), args.grid_count, args.seed)
        if name == "in_N":
            rep = hj.check_in_N(cand, cs, grid, tol)
        elif name == "closedness":
            rep = hj.check_closedness_linear(cand, sysm, cs, grid, tol) if cs.linear else hj.check_nonlinear_pullback(cand, sysm, cs, grid, tol)
        elif name in ("hj_weak", "hj_strong"):
            rep = hj.check_hj_condition(cand, sysm, cs, grid, name == "hj_strong", tol)
        elif name == "related":
            rep = hj.check_related(cand, sysm, cs, grid, tol)
        elif name == "hamiltonian":
            rep = hj.check_hamiltonian_hj(hj.legendre_candidate(sysm, cand), sysm, cs, grid, args.strong, tol)
        elif name == "horizontal_mu":
            if bundle.action is None:
                raise ConfigurationError(f"{bundle.name} has no symmetry group")
            mu = _floats(args.mu, "--mu", bundle.action.dim_g)
            if mu is None:
                raise ConfigurationError("horizontal_mu needs --mu")
            rep = rd.check_horizontal_mu(sysm, cs, bundle.action, cand, mu, grid, tol)
        else:  # pragma: no cover - argparse restricts the choices
            raise ConfigurationError(f"unknown check {name!r}")
        rep.notes.setdefault("candidate", cand.label)
    rep.notes.setdefault("system", bundle.name)
    _emit(rep.to_json(args.per_point), args.out)
    return EXIT_PASS if rep.passed else EXIT_FAIL


def cmd_reduce(args: argparse.Namespace, bundle: systems.SystemBundle) -> int:
    tol = args.tol if args.tol is not None else hj.DEFAULT_TOL
    red = _reduce_for(bundle)
    variant = _reduced_variant(red)
    cand = _make_candidate(bundle.reduced_candidates, args, "reduced")
    rgrid = quasi_random_grid(_box(args.box, bundle.qbar_box), args.grid_count, args.seed)
    qgrid = quasi_random_grid(bundle.q_box, args.grid_count, args.seed)
    reduced = rd.check_reduced_hj(red, cand, rgrid, variant, tol, args.sign)
    X = rd.reconstruct(bundle.action, cand, "chaplygin" if variant == "chaplygin" else "general")
    invariance = rd.check_candidate_invariance(bundle.action, X, qgrid, tol)
    in_n = hj.check_in_N(X, bundle.cs, qgrid, tol)
    related = hj.check_related(X, bundle.sys, bundle.cs, qgrid, tol)
    stages = {"reduced_hj": reduced, "reconstructed_invariance": invariance, "reconstructed_in_N": in_n, "reconstructed_related": related}
    passed = all(r.passed for r in stages.values())
    out = {
        "system": bundle.name,
        "candidate": cand.label,
        "variant": variant,
        "pass": passed,
        "stages": {k: r.to_dict(args.per_point) for k, r in stages.items()},
    }
    _emit(dumps(out), args.out)
    return EXIT_PASS if passed else EXIT_FAIL


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(_sys.argv[1:] if argv is None else argv)
    try:
        if "--config" in argv:
            i = argv.index("--config")
            if i + 1 >= len(argv):
                raise ConfigurationError("--config needs a path")
            path = argv[i + 1]
            rest = argv[:i] + argv[i + 2 :]
            if not rest:
                raise ConfigurationError("a command must precede the config flags")
            argv = rest[:1] + _read_config(path) + rest[1:]
        args = build_parser().parse_args(argv)
        bundle = systems.get(args.system, _key_values(args.param, "--param"))
        handler = {"simulate": cmd_simulate, "check": cmd_check, "reduce": cmd_reduce}[args.command]
        return handler(args, bundle)
    except NumericalError as exc:
        print(f"numerical failure at {exc}", file=_sys.stderr)
        return EXIT_NUMERICAL
    except CONFIG_ERRORS as exc:
        print(f"configuration error: {exc}", file=_sys.stderr)
        return EXIT_CONFIG
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_CONFIG


if __name__ == "__main__":
    raise SystemExit(main())
