"""Command-line front end: ``gelfand <command> [operator] [options]``.

Every command accepts ``--config FILE`` (a JSON RunConfig); flags given on
the command line override the file.  Data go to ``--out`` (stdout if
omitted) in csv, json or gnuplot format; a one-line summary with values
rounded to 6 significant digits goes to stderr when data are on stdout,
to stdout otherwise.

Exit codes: 0 success, 2 configuration/domain error, 3 numeric failure,
4 invariant failure (``check``).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import asdict, dataclass, field, fields
from typing import Optional

import numpy as np

from .bifurcation import detect_oscillation, lambda_sharp, sweep
from .errors import DomainError, GelfandError
from .io import FORMATS, asymptotic_table, curve_table, dump_json, orbit_table, trajectory_metadata, \
    trajectory_table, write_table
from .nonlinearity import make_nonlinearity
from .operator import (OperatorParams, classify_regime, lambda_star_exact, make_khessian,
                       make_plaplacian, make_raw)
from .phase import classify_fixed_point, count_intersections, integrate_orbit, orbit_from_solution, \
    winding_angle
from .regular import TOL_RANGE, find_radius, lambda_of_rho, pohozaev_residual, solve_ivp
from .singular import I_fun, asymptotic_Z, exact_singular, numeric_singular

__all__ = ["RunConfig", "main", "parse_range", "build_parser"]

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_INVARIANT = 0, 2, 3, 4
COMMANDS = ("params", "solve", "singular", "bifurcate", "intersect", "phase", "check")


class ConfigError(DomainError):
    """Malformed command line or config file."""


def parse_range(text: str, log: bool = False) -> np.ndarray:
    """``lo:hi:n`` -> n points from lo to hi (geometric with ``log``); a bare number -> [x]."""
    parts = str(text).split(":")
    try:
        if len(parts) == 1:
            return np.array([float(parts[0])])
        if len(parts) != 3:
            raise ValueError
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise ConfigError(f"bad range {text!r}; expected lo:hi:n") from None
    if n < 1 or not hi >= lo:
        raise ConfigError(f"bad range {text!r}; need n >= 1 and hi >= lo")
    if log:
        if not lo > 0:
            raise ConfigError("--log ranges need lo > 0")
        return np.geomspace(lo, hi, n)
    return np.linspace(lo, hi, n)


def _g6(x) -> str:
    return "%.6g" % x


@dataclass
class RunConfig:
    """Everything a command needs; JSON round-trips exactly."""

    command: str = "params"
    operator: dict = field(default_factory=lambda: {"kind": "khessian", "d": 3, "k": 1})
    nonlinearity: dict = field(default_factory=lambda: {"family": "identity", "params": {}})
    tol: float = 1e-10
    rho: Optional[str] = None
    log: bool = False
    r_max: Optional[float] = None
    r_lo: Optional[float] = None
    r_hi: Optional[float] = None
    r_grid: Optional[str] = None
    x0: Optional[float] = None
    y0: Optional[float] = None
    t_span: Optional[str] = None
    workers: Optional[int] = None
    format: str = "csv"
    out: Optional[str] = None

    def validate(self) -> "RunConfig":
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if self.format not in FORMATS:
            raise ConfigError(f"format must be one of {FORMATS}")
        lo, hi = TOL_RANGE
        if not (lo <= self.tol <= hi):
            raise ConfigError(f"tol must lie in [{lo:g}, {hi:g}]")
        return self

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return dump_json(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(data)

    def operator_params(self) -> OperatorParams:
        op = dict(self.operator)
        if "origin" in op and "kind" not in op:
            # the OperatorParams.to_dict layout
            return OperatorParams.from_dict(op)
        kind = op.get("kind", "raw")
        try:
            if kind == "khessian":
                return make_khessian(op["d"], op["k"])
            if kind == "plaplacian":
                return make_plaplacian(op["d"], op["p"])
            if "alpha" in op:
                return make_raw(op["alpha"], op["beta"], op["gamma"])
        except KeyError as exc:
            raise ConfigError(f"operator descriptor is missing {exc}") from None
        raise ConfigError(f"bad operator descriptor {op!r}")

    def nl(self):
        return make_nonlinearity(dict(self.nonlinearity))

    def rho_values(self) -> np.ndarray:
        if self.rho is None:
            raise ConfigError("--rho is required for this command")
        return parse_range(self.rho, self.log)

    def single_rho(self) -> float:
        vals = self.rho_values()
        if vals.size != 1:
            raise ConfigError("this command takes a single --rho value")
        return float(vals[0])


# --------------------------------------------------------------------------
# argument handling


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    op = common.add_mutually_exclusive_group()
    op.add_argument("--khessian", nargs=2, type=int, metavar=("D", "K"), help="k-Hessian operator")
    op.add_argument("--plaplacian", nargs=2, type=float, metavar=("D", "P"), help="p-Laplacian operator")
    op.add_argument("--raw", nargs=3, type=float, metavar=("ALPHA", "BETA", "GAMMA"))
    common.add_argument("--config", metavar="FILE", help="JSON RunConfig; flags override it")
    common.add_argument("--f", dest="family", metavar="FAMILY",
                        help="nonlinearity: identity (default), power, iterexp, perturbed")
    common.add_argument("--fparam", action="append", default=None, metavar="NAME=VALUE",
                        help="nonlinearity parameter, repeatable (e.g. --fparam p=2)")
    common.add_argument("--tol", type=float, help="solver tolerance (default 1e-10)")
    common.add_argument("--rho", help="u(0): a number or a range lo:hi:n")
    common.add_argument("--log", action="store_true", default=None, help="geometric range spacing")
    common.add_argument("--r-max", type=float, dest="r_max", help="outer radius (solve)")
    common.add_argument("--r-lo", type=float, dest="r_lo", help="inner radius (intersect, default 1e-6)")
    common.add_argument("--r-hi", type=float, dest="r_hi", help="outer radius (intersect, default R(0,rho))")
    common.add_argument("--r-grid", dest="r_grid", help="radius range lo:hi:n (singular)")
    common.add_argument("--x0", type=float)
    common.add_argument("--y0", type=float)
    common.add_argument("--t-span", dest="t_span", help="t0:t1 for phase orbits")
    common.add_argument("--workers", type=int, help="worker processes (capped by GELFAND_THREADS)")
    common.add_argument("--format", choices=FORMATS, help="output format (default csv)")
    common.add_argument("--out", help="output file (default stdout)")

    parser = argparse.ArgumentParser(prog="gelfand", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "params": "derived exponents, lambda* and regime",
        "solve": "regular solution u(r) with u(0) = rho",
        "singular": "singular solution u*(r) and lambda*",
        "bifurcate": "bifurcation curve lambda(rho) (default rho 0.1:30:256)",
        "intersect": "zeros of u(., rho) - u* on (r_lo, r_hi)",
        "phase": "phase-plane orbit from (x0, y0) or along u(., rho)",
        "check": "invariant suite; exit 4 on any failure",
    }
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name], description=helps[name])
    return parser


def _operator_from_flags(ns) -> Optional[dict]:
    if ns.khessian:
        return {"kind": "khessian", "d": ns.khessian[0], "k": ns.khessian[1]}
    if ns.plaplacian:
        d, p = ns.plaplacian
        return {"kind": "plaplacian", "d": _intify(d), "p": _intify(p)}
    if ns.raw:
        a, b, g = ns.raw
        return {"kind": "raw", "alpha": a, "beta": b, "gamma": g}
    return None


def _intify(x):
    return int(x) if float(x).is_integer() else x


def _fparams(items) -> dict:
    out = {}
    for item in items or ():
        name, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--fparam expects NAME=VALUE, got {item!r}")
        try:
            out[name] = _intify(float(value))
        except ValueError:
            raise ConfigError(f"--fparam {name}: not a number") from None
    return out


def resolve_config(argv=None) -> RunConfig:
    ns = build_parser().parse_args(argv)
    if ns.config:
        try:
            with open(ns.config) as fh:
                cfg = RunConfig.from_json(fh.read())
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
    else:
        cfg = RunConfig()
    cfg.command = ns.command
    op = _operator_from_flags(ns)
    if op is not None:
        cfg.operator = op
    if ns.family is not None:
        cfg.nonlinearity = {"family": ns.family, "params": _fparams(ns.fparam)}
    elif ns.fparam:
        cfg.nonlinearity = {**cfg.nonlinearity,
                            "params": {**cfg.nonlinearity.get("params", {}), **_fparams(ns.fparam)}}
    for name in ("tol", "rho", "log", "r_max", "r_lo", "r_hi", "r_grid", "x0", "y0", "t_span",
                 "workers", "format", "out"):
        value = getattr(ns, name)
        if value is not None:
            setattr(cfg, name, value)
    return cfg.validate()


# --------------------------------------------------------------------------
# commands; each returns (exit code, summary line, data text or None)


def _emit(cfg, header, columns, metadata):
    return write_table(header, columns, cfg.format, metadata=metadata)


def cmd_params(cfg):
    params = cfg.operator_params()
    regime = classify_regime(params)
    kind, eig = classify_fixed_point(params)
    doc = {
        "operator": params.to_dict(),
        "theta": params.theta,
        "alpha_hat": params.alpha_hat,
        "theta_hat": params.theta_hat,
        "delta": params.delta,
        "lambda_star": lambda_star_exact(params),
        "regime": regime.tag,
        "fixed_point": kind,
        "eigenvalues": [[z.real, z.imag] for z in eig],
    }
    summary = (f"theta={_g6(params.theta)}, lambda*={_g6(doc['lambda_star'])} (f=u), "
               f"regime={regime.tag}, fixed point={kind}")
    return EXIT_OK, summary, dump_json(doc) if cfg.format == "json" else None


def cmd_solve(cfg):
    params, nl = cfg.operator_params(), cfg.nl()
    rho = cfg.single_rho()
    r_max = cfg.r_max
    if r_max is None:
        r_max = find_radius(params, nl, rho, 0.0, cfg.tol) if rho > 0 else 1.0
    traj = solve_ivp(params, nl, rho, r_max, cfg.tol)
    header, cols = trajectory_table(traj)
    data = _emit(cfg, header, cols, trajectory_metadata(traj))
    summary = f"rho={_g6(rho)}, r_max={_g6(r_max)}, u(r_max)={_g6(traj.u_at(r_max))}, steps={len(cols[0])}"
    if rho > 0:
        summary += f", lambda(rho)={_g6(lambda_of_rho(params, nl, rho, cfg.tol))}"
    return EXIT_OK, summary, data


def _singular(params, nl, tol, r_max=1.0):
    if nl.is_identity:
        return exact_singular(params, nl)
    return numeric_singular(params, nl, tol=max(tol, 1e-12), r_max=r_max)


def cmd_singular(cfg):
    params, nl = cfg.operator_params(), cfg.nl()
    sing = _singular(params, nl, cfg.tol)
    r = parse_range(cfg.r_grid or "1e-6:1:200", True if cfg.r_grid is None else cfg.log)
    lr = np.log(r)
    u = sing.value_log(lr)
    # the expansion only exists at small r; leave nan where it breaks down
    Z = np.full_like(r, math.nan)
    u_asym = np.full_like(r, math.nan)
    for i, x in enumerate(lr):
        try:
            Z[i], u_asym[i] = asymptotic_Z(params, nl, sing.lambda_star, None, log_r=x)
        except DomainError:
            pass
    header, cols = asymptotic_table(r, Z, u_asym)
    meta = {"params": params.to_dict(), "nonlinearity": nl.to_dict(),
            "kind": sing.kind, "lambda_star": sing.lambda_star}
    data = _emit(cfg, header + ("u_star",), cols + (u,), meta)
    return EXIT_OK, f"lambda*={_g6(sing.lambda_star)} ({sing.kind})", data


def cmd_bifurcate(cfg):
    params, nl = cfg.operator_params(), cfg.nl()
    rho = cfg.rho_values() if cfg.rho is not None else parse_range("0.1:30:256", cfg.log)
    curve = sweep(params, nl, rho, cfg.tol, workers=cfg.workers)
    header, cols = curve_table(curve)
    summary_doc = curve.summary()
    data = _emit(cfg, header, cols, {"params": params.to_dict(), "nonlinearity": nl.to_dict(),
                                     "tol": cfg.tol, **summary_doc})
    n_sign, _ = detect_oscillation(curve)
    summary = (f"lambda*={_g6(curve.lambda_star)}, sign changes={n_sign}, "
               f"lambda#~{_g6(lambda_sharp(curve))}")
    if curve.failures:
        summary += f", failed points={len(curve.failures)}"
    return EXIT_OK, summary, data


def cmd_intersect(cfg):
    params, nl = cfg.operator_params(), cfg.nl()
    rho = cfg.single_rho()
    r_lo = cfg.r_lo if cfg.r_lo is not None else 1e-6
    r_hi = cfg.r_hi if cfg.r_hi is not None else find_radius(params, nl, rho, 0.0, cfg.tol)
    reg = solve_ivp(params, nl, rho, r_hi, cfg.tol)
    sing = _singular(params, nl, cfg.tol, r_max=max(2.0, 2 * r_hi))
    rep = count_intersections(reg, sing, r_lo, r_hi)
    data = _emit(cfg, ("r",), (np.asarray(rep.crossing_radii, float),),
                 {"params": params.to_dict(), "nonlinearity": nl.to_dict(), "rho": rho,
                  "tol": cfg.tol, **rep.to_dict()})
    summary = f"count={rep.count}, interval=({_g6(r_lo)}, {_g6(r_hi)}), stable={rep.grid_stability}"
    return EXIT_OK, summary, data


def cmd_phase(cfg):
    params = cfg.operator_params()
    if cfg.x0 is not None or cfg.y0 is not None:
        try:
            t0, t1 = (float(v) for v in (cfg.t_span or "0:-20").split(":"))
        except ValueError:
            raise ConfigError("--t-span expects t0:t1") from None
        t = (t0, t1)
        orbit = integrate_orbit(params, cfg.x0 or 0.0, cfg.y0 or 0.0, t, cfg.tol)
    else:
        nl = cfg.nl()
        rho = cfg.single_rho()
        traj = solve_ivp(params, nl, rho, find_radius(params, nl, rho, 0.0, cfg.tol), cfg.tol)
        orbit = orbit_from_solution(traj)
    header, cols = orbit_table(orbit)
    eig = [[z.real, z.imag] for z in orbit.eigenvalues]
    data = _emit(cfg, header, cols, {"params": params.to_dict(), "classification": orbit.classification,
                                     "eigenvalues": eig})
    mu = orbit.eigenvalues[0]
    summary = (f"{orbit.classification}, mu=({_g6(mu.real)}{'+' if mu.imag >= 0 else '-'}"
               f"{_g6(abs(mu.imag))}i), winding={_g6(winding_angle(orbit))} rad")
    return EXIT_OK, summary, data


# --------------------------------------------------------------------------
# invariant suite


DEFAULT_MATRIX = (("khessian", 3, 1), ("khessian", 5, 2), ("khessian", 7, 3), ("plaplacian", 5, 3),
                  ("khessian", 11, 1))


def _matrix_params():
    for kind, d, m in DEFAULT_MATRIX:
        yield make_khessian(d, m) if kind == "khessian" else make_plaplacian(d, m)


def run_checks(tol: float = 1e-8):
    """List of (name, ok, detail) over the default operator matrix."""
    results = []
    ident = make_nonlinearity("identity")
    for params in _matrix_params():
        tag = str(params).split(":")[0]
        # exact lambda* against the shooting method
        lam = lambda_star_exact(params)
        num = numeric_singular(params, ident, tol=1e-10).lambda_star
        results.append((f"lambda* recovery {tag}", abs(num - lam) <= 1e-4 * max(1.0, lam),
                        f"exact={_g6(lam)} numeric={_g6(num)}"))
        # Pohozaev identity on a regular solution
        rho = 5.0
        R = find_radius(params, ident, rho, 0.0, tol)
        traj = solve_ivp(params, ident, rho, R, tol)
        worst = 0.0
        for a in (0.0, 0.1, params.delta / (params.beta + 2)):
            worst = max(worst, pohozaev_residual(traj, a, 1e-4 * R, R))
        results.append((f"Pohozaev {tag}", worst <= 10 * tol, f"max residual={_g6(worst)}"))
        # I(u) = beta + 1 for f(u) = u
        dev = max(abs(float(I_fun(ident, params, u)) - (params.beta + 1)) for u in (0.0, 10.0, 50.0))
        results.append((f"I_fun identity {tag}", dev <= 1e-8, f"max deviation={_g6(dev)}"))
        # regime vs fixed point: focus iff oscillatory, Vieta relations
        kind, (m1, m2) = classify_fixed_point(params)
        regime = classify_regime(params).tag
        th, b = params.theta, params.beta + 1
        vieta = max(abs((m1 + m2).real - params.delta),
                    abs((m1 * m2).real - params.delta * th / b)) / max(1.0, params.delta * th / b)
        consistent = (kind == "UnstableFocus") == (regime == "Oscillatory") and vieta <= 1e-12
        results.append((f"regime/eigenvalues {tag}", consistent, f"{kind}/{regime}, vieta={_g6(vieta)}"))
    return results


def cmd_check(cfg):
    results = run_checks(max(cfg.tol, 1e-8))
    lines = [f"{'PASS' if ok else 'FAIL'}  {name}: {detail}" for name, ok, detail in results]
    failed = sum(1 for _, ok, _ in results if not ok)
    if cfg.format == "json":
        data = dump_json([{"name": n, "pass": bool(ok), "detail": d} for n, ok, d in results])
    else:
        data = "\n".join(lines) + "\n"
    summary = f"{len(results) - failed}/{len(results)} invariants pass"
    return (EXIT_INVARIANT if failed else EXIT_OK), summary, data


HANDLERS = {"params": cmd_params, "solve": cmd_solve, "singular": cmd_singular,
            "bifurcate": cmd_bifurcate, "intersect": cmd_intersect, "phase": cmd_phase,
            "check": cmd_check}


def run(cfg: RunConfig, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        code, summary, data = HANDLERS[cfg.command](cfg)
    except DomainError as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_CONFIG
    except GelfandError as exc:
        print(f"numeric failure: {type(exc).__name__}: {exc}", file=stderr)
        return EXIT_NUMERIC
    if data is not None and cfg.out:
        try:
            with open(cfg.out, "w", newline="") as fh:
                fh.write(data)
        except OSError as exc:
            print(f"error: cannot write {cfg.out}: {exc}", file=stderr)
            return EXIT_CONFIG
        print(summary, file=stdout)
    elif data is not None:
        stdout.write(data)
        print(summary, file=stderr)
    else:
        print(summary, file=stdout)
    return code


def main(argv=None) -> int:
    try:
        cfg = resolve_config(argv)
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return run(cfg)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
