"""Command-line front end: configuration, the individual commands and report emission.

Exit codes: 0 when every check passes, 1 when a check fails, 2 on usage errors.
Reports are JSON with a top-level ``"schema": "fraclab-report/1"``; they carry
no timestamps or paths, so identical configurations give byte-identical files.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import audit
from .core import BoundaryFunction, XGrid, frac_laplacian_spectral, make_order
from .errors import FraclabError, UsageError
from .extension import (extend, extension_energy, neumann_trace, regularized_energy_limit,
                        worker_count, write_field_csv)
from .frequency import frequency_scan, monotonicity_check, vanishing_order
from .profile import (boundary_derivative_table, solve_profile_bvp, solve_profile_closed_form,
                      write_profile_csv)

__all__ = ["SCHEMA", "COMMANDS", "RunConfig", "parse_config", "run_full_audit", "run", "main"]

SCHEMA = "fraclab-report/1"
COMMANDS = ("profile", "extend", "verify-energy", "neumann", "regularized-energy",
            "frequency", "vanishing-order", "full-audit")
FORMATS = ("csv", "json")

DEFAULTS = {
    "gamma": 1.5,
    "gammas": list(audit.DEFAULT_GAMMAS),
    "nx": 1024,
    "ny": 2048,
    "y_max": 30.0,
    "signal": "cosine:1",
    "output_dir": "fraclab-out",
    "seed": 0,
    "format": "json",
    "x0": math.pi,
    "inject_j_scale": 1.0,
}
CONFIG_KEYS = frozenset(DEFAULTS) | {"command"}


@dataclass(frozen=True)
class RunConfig:
    command: str
    gamma: float = DEFAULTS["gamma"]
    gammas: tuple = tuple(DEFAULTS["gammas"])
    nx: int = DEFAULTS["nx"]
    ny: int = DEFAULTS["ny"]
    y_max: float = DEFAULTS["y_max"]
    signal: str = DEFAULTS["signal"]
    output_dir: Path = Path(DEFAULTS["output_dir"])
    seed: int = DEFAULTS["seed"]
    format: str = DEFAULTS["format"]
    x0: float = DEFAULTS["x0"]
    # fault injection: scales the expected energy constant
    inject_j_scale: float = 1.0

    def report_dict(self) -> dict:
        """Config entries that go into reports (the output path is left out)."""
        d = asdict(self)
        d.pop("output_dir")
        d["gammas"] = list(self.gammas)
        return d


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _build_parser() -> argparse.ArgumentParser:
    S = argparse.SUPPRESS
    p = _Parser(prog="fraclab", description="Numerical checks for higher-order fractional "
                "Laplacians through their weighted extension problem.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="JSON file with flat keys; flags override its values")
    p.add_argument("--gamma", type=float, default=S,
                   help=f"fractional order, non-integer > 0 (default {DEFAULTS['gamma']})")
    p.add_argument("--gammas", default=S,
                   help="comma-separated orders for full-audit (default 0.5,1.3,1.5,2.5,2.7)")
    p.add_argument("--nx", type=int, default=S, help=f"x points, power of two (default {DEFAULTS['nx']})")
    p.add_argument("--ny", type=int, default=S, help=f"y points, power of two (default {DEFAULTS['ny']})")
    p.add_argument("--y-max", dest="y_max", type=float, default=S,
                   help=f"truncation height (default {DEFAULTS['y_max']:g})")
    p.add_argument("--signal", default=S,
                   help="cosine:K, gaussian:SIGMA or a CSV path (default cosine:1)")
    p.add_argument("--output-dir", dest="output_dir", default=S,
                   help=f"artifact directory (default {DEFAULTS['output_dir']})")
    p.add_argument("--seed", type=int, default=S, help="seed for randomized suites (default 0)")
    p.add_argument("--format", choices=FORMATS, default=S, help="artifact format (default json)")
    p.add_argument("--x0", type=float, default=S,
                   help="centre for frequency and vanishing-order (default pi)")
    p.add_argument("--inject-j-scale", dest="inject_j_scale", type=float, default=S,
                   help=argparse.SUPPRESS)
    return p


def _parse_gammas(value) -> tuple:
    if isinstance(value, str):
        parts = [s for s in value.replace(" ", "").split(",") if s]
    else:
        parts = list(value)
    try:
        gammas = tuple(float(g) for g in parts)
    except (TypeError, ValueError):
        raise UsageError(f"invalid gamma list {value!r}") from None
    if not gammas:
        raise UsageError("the gamma set is empty")
    return gammas


def _check_pow2(name, n):
    if not isinstance(n, int) or isinstance(n, bool) or n < 8 or n & (n - 1):
        raise UsageError(f"{name} must be a power of two >= 8, got {n!r}")


def _load_config_file(path) -> dict:
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"config file {path} is not valid JSON: {exc.msg}") from None
    if not isinstance(data, dict):
        raise UsageError(f"config file {path} must hold a JSON object")
    unknown = sorted(set(data) - CONFIG_KEYS)
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(unknown)}")
    return data


def parse_config(argv, config_file=None) -> RunConfig:
    """Resolve defaults, then config-file values, then flags.

    Raises
    ------
    UsageError
        For unknown flags or keys, invalid orders, grids, signals or paths.
    """
    ns = vars(_build_parser().parse_args(list(argv)))
    command = ns.pop("command")
    path = ns.pop("config", None) or config_file
    merged = dict(DEFAULTS)
    if path is not None:
        file_values = _load_config_file(path)
        file_values.pop("command", None)
        merged.update(file_values)
    merged.update(ns)

    try:
        gamma = float(merged["gamma"])
        y_max = float(merged["y_max"])
        x0 = float(merged["x0"])
        j_scale = float(merged["inject_j_scale"])
        seed = int(merged["seed"])
    except (TypeError, ValueError) as exc:
        raise UsageError(f"invalid numeric setting: {exc}") from None
    gammas = _parse_gammas(merged["gammas"])
    for g in (gamma,) + (gammas if command == "full-audit" else ()):
        try:
            make_order(g)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    _check_pow2("nx", merged["nx"])
    _check_pow2("ny", merged["ny"])
    if not y_max >= 20.0:
        raise UsageError(f"y_max must be >= 20, got {y_max}")
    if merged["format"] not in FORMATS:
        raise UsageError(f"format must be csv or json, got {merged['format']!r}")
    if command == "regularized-energy" and gamma != 1.5:
        raise UsageError(f"regularized-energy is defined for gamma = 1.5 only, got {gamma}")
    signal = str(merged["signal"])
    _signal_spec(signal)
    out = Path(merged["output_dir"])
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".fraclab-write-probe"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise UsageError(f"output directory {out} is not writable: {exc.strerror}") from None
    try:
        worker_count()
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return RunConfig(command=command, gamma=gamma, gammas=gammas, nx=merged["nx"],
                     ny=merged["ny"], y_max=y_max, signal=signal, output_dir=out, seed=seed,
                     format=merged["format"], x0=x0, inject_j_scale=j_scale)


# signals ---------------------------------------------------------------------

def _signal_spec(signal: str):
    kind, _, arg = signal.partition(":")
    if kind in ("cosine", "gaussian"):
        try:
            value = float(arg)
        except ValueError:
            raise UsageError(f"signal {signal!r} needs a numeric parameter") from None
        if kind == "gaussian" and not value > 0:
            raise UsageError(f"gaussian width must be positive, got {value}")
        if kind == "cosine" and (value != int(value) or value < 1):
            raise UsageError(f"cosine wavenumber must be a positive integer, got {arg}")
        return kind, value
    if not Path(signal).is_file():
        raise UsageError(f"signal {signal!r} is neither cosine:K, gaussian:SIGMA nor a CSV file")
    return "csv", signal


def make_signal(cfg: RunConfig) -> BoundaryFunction:
    grid = XGrid(1, cfg.nx)
    x = grid.nodes
    kind, value = _signal_spec(cfg.signal)
    if kind == "cosine":
        return BoundaryFunction(grid, np.cos(value * x))
    if kind == "gaussian":
        return BoundaryFunction(grid, np.exp(-(x - np.pi) ** 2 / (2 * value ** 2)))
    try:
        data = np.loadtxt(value, delimiter=",", ndmin=2)
    except ValueError as exc:
        raise UsageError(f"cannot parse {value}: {exc}") from None
    samples = data[:, -1]
    if samples.size != cfg.nx:
        raise UsageError(f"{value} has {samples.size} samples, expected nx={cfg.nx}")
    return BoundaryFunction(grid, samples)


# report helpers --------------------------------------------------------------

def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def _write_report(cfg: RunConfig, results: dict, status: str, name: str) -> Path:
    report = {"schema": SCHEMA, "command": cfg.command, "status": status,
              "config": cfg.report_dict(), "results": results}
    path = cfg.output_dir / f"{name}.json"
    path.write_text(json.dumps(_clean(report), indent=2, sort_keys=True) + "\n")
    return path


def _write_rows(path: Path, header, rows) -> Path:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return path


@dataclass
class CommandResult:
    ok: bool
    summary: str
    artifacts: list = field(default_factory=list)


# commands --------------------------------------------------------------------

def _profiles(cfg):
    o = make_order(cfg.gamma)
    return (solve_profile_closed_form(o, cfg.y_max, cfg.ny),
            solve_profile_bvp(o, cfg.y_max, cfg.ny))


def cmd_profile(cfg: RunConfig) -> CommandResult:
    closed, bvp = _profiles(cfg)
    sel = bvp.y <= 12.0
    gap = float(np.max(np.abs(bvp.phi[sel] - closed.evaluate(bvp.y[sel]))))
    ok = gap <= 1e-6
    results = {"m": closed.order.m, "a": closed.order.a, "b": closed.order.b,
               "J_closed_form": closed.J_value, "J_bvp": bvp.J_value,
               "c_closed_form": closed.neumann_c, "c_bvp": bvp.neumann_c,
               "route_sup_gap": gap, "route_tolerance": 1e-6,
               "boundary_derivatives": [asdict(r) for r in boundary_derivative_table(closed)]}
    if cfg.format == "csv":
        art = write_profile_csv(bvp, cfg.output_dir / "profile.csv")
    else:
        art = _write_report(cfg, results, "pass" if ok else "fail", "profile")
    return CommandResult(ok, f"J={bvp.J_value:.8f} c={bvp.neumann_c:.8f} route gap={gap:.2e}", [art])


def _field(cfg):
    p = solve_profile_closed_form(make_order(cfg.gamma), cfg.y_max, cfg.ny)
    return p, extend(make_signal(cfg), p)


def _energy_results(cfg, rep):
    expected = rep.J_expected * cfg.inject_j_scale
    dev = abs(rep.ratio / expected - 1.0)
    res = json.loads(rep.to_json())
    res.update({"J_checked": expected, "relative_deviation": dev, "tolerance": 1e-3})
    return res, dev <= 1e-3


def cmd_extend(cfg: RunConfig) -> CommandResult:
    _, u = _field(cfg)
    rep = extension_energy(u)
    res, ok = _energy_results(cfg, rep)
    if cfg.format == "csv":
        art = write_field_csv(u, cfg.output_dir / "field.csv", max(1, cfg.nx // 64),
                              max(1, cfg.ny // 128))
    else:
        art = _write_report(cfg, res, "pass" if ok else "fail", "extend")
    return CommandResult(True, f"energy={rep.lhs:.10g} ratio={rep.ratio:.10g}", [art])


def cmd_verify_energy(cfg: RunConfig) -> CommandResult:
    _, u = _field(cfg)
    rep = extension_energy(u)
    res, ok = _energy_results(cfg, rep)
    if cfg.format == "csv":
        art = _write_rows(cfg.output_dir / "energy.csv", ["gamma", "lhs", "rhs", "ratio", "J"],
                          [[rep.gamma, rep.lhs, rep.rhs, rep.ratio, res["J_checked"]]])
    else:
        art = _write_report(cfg, res, "pass" if ok else "fail", "verify-energy")
    return CommandResult(ok, f"ratio/J-1={rep.ratio / res['J_checked'] - 1:.3e}", [art])


def cmd_neumann(cfg: RunConfig) -> CommandResult:
    p, u = _field(cfg)
    f = u.source
    got = neumann_trace(u).values / p.neumann_c
    ref = frac_laplacian_spectral(f, p.order).values
    norm = np.linalg.norm(ref)
    err = float(np.linalg.norm(got - ref) / norm) if norm > 0 else float(np.linalg.norm(got))
    ok = err < 1e-3
    if cfg.format == "csv":
        art = _write_rows(cfg.output_dir / "neumann.csv", ["x", "neumann_over_c", "spectral"],
                          zip(f.grid.nodes, got, ref))
    else:
        art = _write_report(cfg, {"c": p.neumann_c, "relative_error": err, "tolerance": 1e-3},
                            "pass" if ok else "fail", "neumann")
    return CommandResult(ok, f"relative error={err:.3e}", [art])


def cmd_regularized_energy(cfg: RunConfig) -> CommandResult:
    _, u = _field(cfg)
    rep = regularized_energy_limit(u)
    gaps = np.abs(rep.finite_part_estimates - rep.bulk_energy_half)
    ok = rep.relative_discrepancy <= 1e-2 and bool(np.all(np.diff(gaps) < 0))
    if cfg.format == "csv":
        art = _write_rows(cfg.output_dir / "regularized.csv", ["epsilon", "finite_part"],
                          zip(rep.epsilons, rep.finite_part_estimates))
    else:
        art = _write_report(cfg, {"epsilons": rep.epsilons, "estimates": rep.finite_part_estimates,
                                  "limit": rep.extrapolated_limit,
                                  "bulk_half": rep.bulk_energy_half,
                                  "relative_discrepancy": rep.relative_discrepancy},
                            "pass" if ok else "fail", "regularized-energy")
    return CommandResult(ok, f"limit={rep.extrapolated_limit:.10g} "
                         f"rel={rep.relative_discrepancy:.2e}", [art])


def cmd_frequency(cfg: RunConfig) -> CommandResult:
    _, u = _field(cfg)
    rep = frequency_scan(u, (cfg.x0, 0.0), np.linspace(0.1, 0.9, 17))
    passed, worst = monotonicity_check(rep, rep.Lambda_estimate)
    ok = passed and rep.Lambda_estimate <= 50.0
    if cfg.format == "csv":
        art = rep.write_csv(cfg.output_dir / "frequency.csv")
    else:
        res = rep.to_dict()
        res.update({"monotone": passed, "worst_margin": worst})
        art = _write_report(cfg, res, "pass" if ok else "fail", "frequency")
    return CommandResult(ok, f"Lambda={rep.Lambda_estimate:.4g} monotone={passed}", [art])


def cmd_vanishing_order(cfg: RunConfig) -> CommandResult:
    f = make_signal(cfg)
    radii = np.geomspace(0.5, 0.05, 8)
    est = vanishing_order(f, cfg.x0, radii)
    if cfg.format == "csv":
        art = _write_rows(cfg.output_dir / "vanishing-order.csv", ["x0", "order"], [[cfg.x0, est]])
    else:
        art = _write_report(cfg, {"x0": cfg.x0, "radii": radii, "order": est}, "pass",
                            "vanishing-order")
    return CommandResult(True, f"order={est:.4f}", [art])


def run_full_audit(cfg: RunConfig) -> audit.AuditSummary:
    """Run the ten checks and write ``audit.json`` and ``audit.csv``."""
    if not cfg.gammas:
        raise UsageError("the gamma set is empty")
    summary = audit.run_checks(cfg.gammas, cfg.nx, cfg.ny, cfg.y_max, cfg.inject_j_scale,
                               workers=worker_count())
    data = summary.to_dict()
    _write_report(cfg, data, "pass" if summary.all_passed else "fail", "audit")
    _write_rows(cfg.output_dir / "audit.csv",
                ["name", "status", "measured", "tolerance", "provenance"],
                [[c.name, c.status, c.measured, c.tolerance, c.provenance] for c in summary.checks])
    return summary


def cmd_full_audit(cfg: RunConfig) -> CommandResult:
    s = run_full_audit(cfg)
    lines = [f"{c.name}: {c.status} (measured {c.measured:.3e}, tol {c.tolerance:g})"
             for c in s.checks]
    return CommandResult(s.all_passed, "\n".join(lines),
                         [cfg.output_dir / "audit.json", cfg.output_dir / "audit.csv"])


HANDLERS = {
    "profile": cmd_profile,
    "extend": cmd_extend,
    "verify-energy": cmd_verify_energy,
    "neumann": cmd_neumann,
    "regularized-energy": cmd_regularized_energy,
    "frequency": cmd_frequency,
    "vanishing-order": cmd_vanishing_order,
    "full-audit": cmd_full_audit,
}


def run(cfg: RunConfig) -> CommandResult:
    """Dispatch; module errors become a failed result rather than an exception."""
    try:
        return HANDLERS[cfg.command](cfg)
    except UsageError:
        raise
    except (FraclabError, ArithmeticError, np.linalg.LinAlgError) as exc:
        return CommandResult(False, f"{type(exc).__name__}: {exc}")


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = parse_config(argv)
        result = run(cfg)
    except UsageError as exc:
        print(f"fraclab: usage error: {exc}", file=sys.stderr)
        return 2
    print(result.summary)
    return 0 if result.ok else 1


if __name__ == "__main__":
    sys.exit(main())
