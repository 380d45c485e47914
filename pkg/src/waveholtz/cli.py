"""Command-line entry point.

Every subcommand reads optional JSON (``--config``), writes CSV/JSON into
``--out`` and exits 0 on success, 1 on configuration errors and 2 when
``--assert`` is given and a result falls outside its acceptance window.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, WaveholtzError
from .experiments import (DemoProblem, exterior_error_model, omega_sweep, run_waveholtz)
from .fields import (GaussianProfile, Grid, _atomic_write, gaussian_source, write_field,
                     write_field_csv)
from .resolvent import METHODS, outgoing_reference
from .transfer import (beta_bounds_check, beta_closed, bound_values, n_functional_beta_power,
                       nfunctional_plateau)
from .waveop import BACKENDS, SolveConfig, discrete_transfer

SCHEMA_VERSION = 1
EXIT_OK, EXIT_CONFIG, EXIT_ASSERT = 0, 1, 2


def _fmt(x) -> str:
    return "%.17g" % x


# ---------------------------------------------------------------------------
# configuration

def _num(lo=None, hi=None, integer=False, strict_lo=False):
    def check(name, v):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(name, f"expected a number, got {v!r}")
        if integer and int(v) != v:
            raise ConfigError(name, f"expected an integer, got {v!r}")
        if not math.isfinite(v):
            raise ConfigError(name, "must be finite")
        if lo is not None and (v <= lo if strict_lo else v < lo):
            raise ConfigError(name, f"must be {'>' if strict_lo else '>='} {lo}, got {v}")
        if hi is not None and v > hi:
            raise ConfigError(name, f"must be <= {hi}, got {v}")
        return int(v) if integer else float(v)
    return check


def _choice(options):
    def check(name, v):
        if v not in options:
            raise ConfigError(name, f"expected one of {list(options)}, got {v!r}")
        return v
    return check


def _num_list(**kw):
    item = _num(**kw)

    def check(name, v):
        if not isinstance(v, list) or not v:
            raise ConfigError(name, "expected a non-empty list")
        return [item(f"{name}[{i}]", x) for i, x in enumerate(v)]
    return check


def _opt(check):
    def inner(name, v):
        return None if v is None else check(name, v)
    return inner


def _window(name, v):
    if not isinstance(v, list) or len(v) != 2:
        raise ConfigError(name, "expected [low, high]")
    lo, hi = (_num()(f"{name}[{i}]", x) for i, x in enumerate(v))
    if not lo < hi:
        raise ConfigError(name, "low must be below high")
    return [lo, hi]


_GRID = {"dim": _choice((1, 2, 3)), "half_width": _num(0, strict_lo=True),
         "points_per_dim": _num(4, integer=True)}

SCHEMAS = {
    "beta-table": {"r_min": (_num(), 0.0), "r_max": (_num(), 8.0),
                   "step": (_num(0, strict_lo=True), 0.01)},
    "bounds-check": {"r_max": (_num(8), 8.0), "samples": (_num(2, integer=True), 10_000)},
    "nfunctional": {"n": (_num_list(lo=1, integer=True), [2**k for k in range(11)]),
                    "delta": (_num(0, 1, strict_lo=True), 0.25),
                    "plateau_factor": (_num(1), 1.5)},
    "beta-discrete": {"omega": (_num(0, strict_lo=True), 1.0),
                      "steps_per_period": (_num(2, integer=True), 64),
                      "rho_max": (_num(0, strict_lo=True), 4.0),
                      "samples": (_num(2, integer=True), 401)},
    "solve": {"omega": (_num(0, strict_lo=True), 4.0),
              "method": (_choice(METHODS), "lap_extrapolated"),
              "grid": ("grid", None),
              "width": (_num(0, strict_lo=True), 0.5),
              "amplitude": (_num(), 1.0)},
    "iterate": {"omega": (_num(1), 8.0), "width": (_num(0, strict_lo=True), 0.25),
                "amplitude": (_num(), 1.0), "n_max": (_num(0, integer=True), 1024),
                "s": (_num(0.5, strict_lo=True), 2.0),
                "backend": (_choice(BACKENDS), "spectral"),
                "grid": ("grid", None),
                "steps_per_period": (_opt(_num(2, integer=True)), None),
                "record": (_opt(_num_list(lo=0, integer=True)), None),
                "window": (_window, [32, 1024]),
                "slope_window": (_window, [-0.65, -0.35])},
    "sweep": {"omegas": (_num_list(lo=1), [2.0, 4.0, 8.0, 16.0]),
              "tol": (_num(0, 1, strict_lo=True), 0.05),
              "s": (_num(0.5, strict_lo=True), 2.0),
              "n_max": (_num(1, integer=True), 2**15),
              "width": (_num(0, strict_lo=True), 1.0),
              "amplitude": (_num(), 1.0),
              "p_max": (_num(), 2.2)},
}


def _check_grid(name, v):
    if not isinstance(v, dict):
        raise ConfigError(name, "expected an object with dim, half_width, points_per_dim")
    extra = set(v) - set(_GRID)
    if extra:
        raise ConfigError(f"{name}.{sorted(extra)[0]}", "unknown field")
    out = {}
    for key, check in _GRID.items():
        if key not in v:
            raise ConfigError(f"{name}.{key}", "missing")
        out[key] = check(f"{name}.{key}", v[key])
    if out["points_per_dim"] % 2:
        raise ConfigError(f"{name}.points_per_dim", "must be even")
    return out


@dataclass(frozen=True)
class RunConfig:
    command: str
    params: dict


def validate_config(command: str, raw: dict) -> RunConfig:
    """Fill defaults and validate ``raw`` against the subcommand schema."""
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    version = raw.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError("schema_version", f"unsupported version {version!r}; expected {SCHEMA_VERSION}")
    schema = SCHEMAS[command]
    extra = set(raw) - set(schema) - {"schema_version"}
    if extra:
        raise ConfigError(sorted(extra)[0], f"unknown field for {command}")
    params = {}
    for key, (check, default) in schema.items():
        v = raw.get(key, default)
        if v is None:
            params[key] = None
        elif check == "grid":
            params[key] = _check_grid(key, v)
        else:
            params[key] = check(key, v)
    if command == "beta-table" and not params["r_min"] < params["r_max"]:
        # an empty range is allowed and yields a header-only table
        if params["r_min"] > params["r_max"]:
            raise ConfigError("r_max", "must not be below r_min")
    return RunConfig(command, params)


def load_config(command: str, path) -> RunConfig:
    if path is None:
        return validate_config(command, {})
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError("--config", f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError("--config", f"invalid JSON: {exc.msg} (line {exc.lineno})") from exc
    return validate_config(command, raw)


# ---------------------------------------------------------------------------
# commands; each returns (exit code, message)

def _write_text(path: Path, text: str):
    _atomic_write(path, text.encode())


def cmd_beta_table(p, out: Path, check: bool):
    rs = np.arange(p["r_min"], p["r_max"], p["step"])
    rs = rs[rs < p["r_max"]]
    beta = beta_closed(rs)
    bounds = bound_values(rs)
    names = ["parabola", "gauss", "half", "far", "max_norm"]
    lines = ["r,beta," + ",".join(names) + ",ok"]
    bad = 0
    for i, r in enumerate(rs):
        vals = [bounds[k][i] for k in names]
        ok = all(math.isnan(v) or abs(beta[i]) <= v + 1e-14 for v in vals)
        bad += not ok
        cells = ["nan" if math.isnan(v) else _fmt(v) for v in vals]
        lines.append(f"{_fmt(r)},{_fmt(beta[i])}," + ",".join(cells) + f",{int(ok)}")
    _write_text(out / "beta_table.csv", "\n".join(lines) + "\n")
    msg = f"beta-table: {rs.size} rows, {bad} bound violations"
    return (EXIT_ASSERT if check and bad else EXIT_OK), msg


def cmd_bounds_check(p, out: Path, check: bool):
    rep = beta_bounds_check(np.linspace(0.0, p["r_max"], p["samples"]))
    data = {"parabola": rep.parabola, "parabola_vs_gauss": rep.parabola_vs_gauss,
            "half": rep.half, "far": rep.far, "max_norm": rep.max_norm,
            "violations": [[n, r] for n, r in rep.violations], "ok": rep.ok}
    _write_text(out / "bounds_check.json", json.dumps(data, indent=2, sort_keys=True) + "\n")
    msg = f"bounds-check: {'ok' if rep.ok else f'{len(rep.violations)} violations'}"
    return (EXIT_ASSERT if check and not rep.ok else EXIT_OK), msg


def cmd_nfunctional(p, out: Path, check: bool):
    lines = ["n,l1_term,dstar_term,linf_term,total,total_sqrt_n"]
    scaled = []
    for n in p["n"]:
        r = n_functional_beta_power(n, 1.0, p["delta"])
        s = r.total * math.sqrt(n)
        scaled.append(s)
        lines.append(f"{n},{_fmt(r.l1_term)},{_fmt(r.dstar_term)},{_fmt(r.linf_term)},"
                     f"{_fmt(r.total)},{_fmt(s)}")
    _write_text(out / "nfunctional.csv", "\n".join(lines) + "\n")
    plateau = nfunctional_plateau()
    finite = [v for v in scaled if math.isfinite(v)]
    last_ok = math.isfinite(scaled[-1]) and scaled[-1] <= p["plateau_factor"] * plateau
    msg = (f"nfunctional: M = {max(finite) if finite else math.nan:.6g} over finite entries, "
           f"last = {scaled[-1]:.6g}, plateau = {plateau:.6g}")
    return (EXIT_ASSERT if check and not last_ok else EXIT_OK), msg


def cmd_beta_discrete(p, out: Path, check: bool):
    w = p["omega"]
    rho = np.linspace(0.0, p["rho_max"] * w, p["samples"])
    b = beta_closed(rho / w)
    bd = discrete_transfer(rho, w, p["steps_per_period"])
    lines = ["rho,beta,beta_dt,diff"]
    lines += [f"{_fmt(a)},{_fmt(x)},{_fmt(y)},{_fmt(y - x)}" for a, x, y in zip(rho, b, bd)]
    _write_text(out / "beta_discrete.csv", "\n".join(lines) + "\n")
    return EXIT_OK, f"beta-discrete: max |beta_dt - beta| = {float(np.max(np.abs(bd - b))):.3e}"


def _grid_from(p, default: Grid) -> Grid:
    g = p.get("grid")
    return default if g is None else Grid(g["dim"], g["half_width"], g["points_per_dim"])


def cmd_solve(p, out: Path, check: bool):
    from .fields import shell_avoiding_grid
    w = p["omega"]
    default = shell_avoiding_grid(1, w, 20.0, min(0.05, 2 * math.pi / (10 * w)))
    grid = _grid_from(p, default)
    f = gaussian_source(grid, None, p["width"], p["amplitude"])
    sol = outgoing_reference(f, w, p["method"])
    write_field(out / "solution.bin", sol.field)
    if grid.dim == 1:
        write_field_csv(out / "solution.csv", sol.field)
    meta = {"omega": w, "method": sol.method, "alpha_schedule": list(sol.alpha_schedule),
            "residual": sol.residual, "grid": {"dim": grid.dim, "half_width": grid.half_width,
                                               "points_per_dim": grid.points_per_dim}}
    _write_text(out / "solution.json", json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return EXIT_OK, f"solve: {sol.method} on N={grid.points_per_dim}, residual {sol.residual:.3e}"


def cmd_iterate(p, out: Path, check: bool):
    from .fields import NormSpec
    demo = DemoProblem(p["omega"], p["width"], p["amplitude"], max(p["n_max"], 1))
    grid = _grid_from(p, demo.grid())
    f = demo.source(grid)
    cfg = SolveConfig(p["omega"], grid, p["backend"], steps_per_period=p["steps_per_period"])
    specs = [NormSpec(-p["s"], 0), NormSpec(-p["s"], 1)]
    rep = run_waveholtz(f, cfg, p["n_max"], specs, record=p["record"], window=tuple(p["window"]))
    rep.config["exterior_model_at_n_max"] = exterior_error_model(p["n_max"], p["omega"], p["s"], grid.dim)
    rep.to_csv(out / "report.csv")
    rep.to_json(out / "report.json")
    lo, hi = p["slope_window"]
    slope = rep.fitted_slope
    inside = slope is not None and lo <= slope <= hi
    msg = f"iterate: {len(rep.per_n)} rows, slope = {slope if slope is None else f'{slope:.4f}'}"
    return (EXIT_ASSERT if check and not inside else EXIT_OK), msg


def cmd_sweep(p, out: Path, check: bool):
    profile = GaussianProfile(p["width"], p["amplitude"])
    rep = omega_sweep(profile, p["omegas"], p["tol"], p["s"], p["n_max"])
    rep.to_csv(out / "sweep.csv")
    rep.to_json(out / "sweep.json")
    censored = sum(pt.censored for pt in rep.points)
    bad = rep.exponent is not None and rep.exponent > p["p_max"]
    msg = f"sweep: p = {rep.exponent}, {censored} censored"
    return (EXIT_ASSERT if check and bad else EXIT_OK), msg


COMMANDS = {
    "beta-table": cmd_beta_table,
    "bounds-check": cmd_bounds_check,
    "nfunctional": cmd_nfunctional,
    "beta-discrete": cmd_beta_discrete,
    "solve": cmd_solve,
    "iterate": cmd_iterate,
    "sweep": cmd_sweep,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="waveholtz", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON run configuration")
        sp.add_argument("--out", default=".", help="output directory")
        sp.add_argument("--assert", dest="check", action="store_true",
                        help="exit 2 when a result leaves its acceptance window")
        if name == "iterate":
            sp.add_argument("--backend", choices=BACKENDS)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.command, args.config)
        params = dict(cfg.params)
        if getattr(args, "backend", None):
            params["backend"] = args.backend
        out = Path(args.out)
        try:
            out.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise ConfigError("--out", f"cannot create {out}: {exc.strerror}") from exc
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        code, msg = COMMANDS[args.command](params, out, args.check)
    except WaveholtzError as exc:
        print(f"{args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(msg)
    return code


if __name__ == "__main__":
    sys.exit(main())
