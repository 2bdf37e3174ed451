"""Command-line front end: configuration, subcommand dispatch and output.

Usage::

    dimerwave <subcommand> [--config path] [--param key=value]... [--out dir]

The config is a JSON object with the blocks ``material``, ``numerics``,
``task`` and ``output``. Anything left out takes the value in
``DEFAULT_CONFIG``. ``--param numerics.N=64`` overrides one dotted field;
the value is parsed as a JSON literal and falls back to a plain string.
"""

from __future__ import annotations

import argparse
import copy
import json
import math
import sys
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, DimerwaveError
from .formats import load_schema, write_csv, write_json
from .linear import (critical_frequency, dispersion, kernel_basis, omega_bracket,
                     speed_of_sound)
from .model import Material, require_valid
from .operator import WaveProblem, residual_report
from .parallel import pmap
from .solver import (SolverConfig, _resolve_cap, longwave_branch, solve_branch,
                     solve_point)
from .symmetry import SymmetryOp, symmetry_report
from .verify import C_RATIOS, VerifyContext, lattice_samples, run_checks

SUBCOMMANDS = ("dispersion", "omegac", "kernel", "solve", "branch", "longwave",
               "verify", "lattice-check", "symmetry")

EXIT_OK, EXIT_CONFIG, EXIT_CONVERGENCE, EXIT_VERIFY = 0, 2, 3, 4

DEFAULT_CONFIG = {
    "material": {"m": 1.0, "kappa": 2.0, "beta": 1.0, "cubic1": 0.0, "cubic2": 0.0,
                 "max_degree": 3},
    "numerics": {"N": 32, "N_solver": 64, "grid": None, "tol": 1e-12, "max_iter": 200,
                 "mode": "fixed-point", "relaxation": 1.0, "acceptance_tol": 1e-10,
                 "a_cap": None, "cap_factor": 1e-2},
    "task": {"c2": 2.0, "c": None, "a": 1e-3, "amplitudes": None, "a_max": None,
             "count": 20, "K_min": 0.0, "K_max": math.pi, "K_steps": 100,
             "c_ratios": list(C_RATIOS), "c_values": None, "eps": [0.05, 0.1, 0.2],
             "alphas": None, "alpha_count": 8, "deriv_order": 2, "samples": 100,
             "seed": 1, "symmetry": None, "checks": None},
    "output": {"dir": "dimerwave-out"},
}


# configuration --------------------------------------------------------------

def _merge(base: dict, extra: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for k, v in extra.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v, f"{path}{k}.")
        else:
            out[k] = v
    return out


def _validate_config(cfg: dict):
    import jsonschema

    validator = jsonschema.Draft202012Validator(load_schema("config"))
    errors = sorted(validator.iter_errors(cfg), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        where = ".".join(str(p) for p in e.absolute_path) or "<root>"
        raise ConfigurationError(f"config field {where}: {e.message}")


def parse_param(text: str) -> tuple[list, object]:
    if "=" not in text:
        raise ConfigurationError(f"--param expects key=value, got {text!r}")
    key, raw = text.split("=", 1)
    parts = key.strip().split(".")
    if len(parts) != 2 or not all(parts):
        raise ConfigurationError(f"--param key must look like block.field, got {key!r}")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return parts, value


def _drop_shadowed_defaults(cfg: dict, given: dict):
    # explicit forces replace the beta/cubic shorthand, and w replaces m
    mat = cfg["material"]
    if "force1" in given or "force2" in given:
        for k in ("beta", "cubic1", "cubic2"):
            mat.pop(k, None)
    if "w" in given and "m" not in given:
        mat.pop("m", None)


def load_config(path=None, params=()) -> dict:
    """Defaults, then the file, then ``--param`` overrides; validated."""
    cfg = copy.deepcopy(DEFAULT_CONFIG)
    if path is not None:
        try:
            user = json.loads(Path(path).read_text())
        except OSError as exc:
            raise ConfigurationError(f"config path {path!r} unreadable: {exc.strerror}")
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"config file {path!r} is not valid JSON: {exc}")
        if not isinstance(user, dict):
            raise ConfigurationError("config root must be a JSON object")
        _validate_config(user)
        _drop_shadowed_defaults(cfg, user.get("material", {}))
        cfg = _merge(cfg, user)
    for text in params:
        (block, name), value = parse_param(text)
        if block not in cfg:
            raise ConfigurationError(f"config field {block}.{name}: unknown block {block!r}")
        if block == "material":
            _drop_shadowed_defaults(cfg, {name: value})
        cfg[block][name] = value
    _validate_config(cfg)
    return cfg


def material_from_config(cfg: dict) -> Material:
    mb = cfg["material"]
    if "w" in mb and "m" in mb and not math.isclose(mb["m"], 1.0 / mb["w"]):
        raise ConfigurationError("config fields material.m and material.w disagree (m = 1/w)")
    m = mb["m"] if "m" in mb else 1.0 / mb["w"]
    if "kappa" not in mb:
        raise ConfigurationError("config field material.kappa is required")
    max_degree = mb.get("max_degree", 3)
    if "force1" in mb or "force2" in mb:
        f1 = mb.get("force1", [1.0, 1.0])
        f2 = mb.get("force2")
        mat = Material(m=m, kappa=mb["kappa"], force1=tuple(f1),
                       force2=None if f2 is None else tuple(f2), max_degree=max_degree)
    else:
        mat = Material.dimer(m=m, kappa=mb["kappa"], beta=mb.get("beta", 1.0),
                             cubic1=mb.get("cubic1", 0.0), cubic2=mb.get("cubic2", 0.0),
                             max_degree=max_degree)
    return require_valid(mat)


def speed_from_config(cfg: dict) -> float:
    t = cfg["task"]
    if t.get("c") is not None:
        return float(t["c"])
    if t.get("c2") is None:
        raise ConfigurationError("config field task.c or task.c2 is required")
    return float(math.sqrt(t["c2"]))


def solver_config(cfg: dict, N: int | None = None) -> SolverConfig:
    n, t = cfg["numerics"], cfg["task"]
    amps = t.get("amplitudes")
    return SolverConfig(mode=n["mode"], N=n["N"] if N is None else N, grid=n["grid"],
                        tol=n["tol"], max_iter=n["max_iter"],
                        amplitudes=None if amps is None else tuple(amps),
                        a_max=t.get("a_max"), count=t["count"],
                        relaxation=n["relaxation"], acceptance_tol=n["acceptance_tol"],
                        a_cap=n["a_cap"], cap_factor=n["cap_factor"])


def _problem(cfg, mat=None):
    mat = mat or material_from_config(cfg)
    c = speed_from_config(cfg)
    n = cfg["numerics"]
    return WaveProblem(mat, c, n["N"], n["grid"])


# subcommands ------------------------------------------------------------------

def cmd_dispersion(cfg, out: Path) -> int:
    t = cfg["task"]
    mat = material_from_config(cfg)
    K = np.linspace(t["K_min"], t["K_max"], t["K_steps"] + 1)
    lam_m, lam_p, rho = dispersion(mat, K)
    write_csv(out / "dispersion.csv", ["K", "lambda_minus", "lambda_plus", "rho"],
              zip(K, lam_m, lam_p, rho))
    return EXIT_OK


def cmd_omegac(cfg, out: Path) -> int:
    t = cfg["task"]
    mat = material_from_config(cfg)
    c_star = speed_of_sound(mat)
    cs = t["c_values"] if t.get("c_values") is not None else [r * c_star for r in t["c_ratios"]]
    bad = [c for c in cs if not abs(c) > c_star]
    if bad:
        raise ConfigurationError(f"config field task.c_values: subsonic speed {bad[0]!r} "
                                 f"(c_star={c_star!r})")

    def row(c):
        K = critical_frequency(mat, c)
        lo, hi = omega_bracket(mat, c)
        resid = c * c * K * K - dispersion(mat, K, check=False)[1]
        return [float(c), float(c / c_star), K, lo, hi, lo <= K <= hi, float(resid)]

    rows = pmap(row, cs)
    write_csv(out / "omegac.csv",
              ["c", "c_over_cstar", "omega_c", "bracket_low", "bracket_high",
               "in_bracket", "residual"], rows)
    return EXIT_OK if all(r[5] for r in rows) else EXIT_VERIFY


def cmd_kernel(cfg, out: Path) -> int:
    mat = material_from_config(cfg)
    data = kernel_basis(mat, speed_from_config(cfg), cfg["numerics"]["N"])
    write_json(out / "lineardata.json", data.to_dict(), "lineardata")
    return EXIT_OK


def _solve_single(cfg):
    problem = _problem(cfg)
    scfg = solver_config(cfg)
    data = kernel_basis(problem.material, problem.c, problem.N)
    cap = _resolve_cap(problem, data, scfg)
    point = solve_point(problem, data, float(cfg["task"]["a"]), scfg, cap=cap)
    return problem, data, cap, point


def cmd_solve(cfg, out: Path) -> int:
    problem, data, cap, point = _solve_single(cfg)
    samples = lattice_samples(np.random.default_rng(cfg["task"]["seed"]), cfg["task"]["samples"])
    doc = {"material": problem.material.to_dict(), "c": problem.c, "cap": cap,
           "omega_c": data.omega_c, "point": point.to_dict(),
           "residuals": residual_report(problem, point, samples)}
    write_json(out / "point.json", doc, "solve")
    return EXIT_OK


def cmd_branch(cfg, out: Path) -> int:
    problem = _problem(cfg)
    branch = solve_branch(problem, solver_config(cfg))
    write_json(out / "branch.json", {"material": problem.material.to_dict(), "c": problem.c,
                                     "branch": branch.to_dict()}, "branch")
    return EXIT_CONVERGENCE if branch.truncated else EXIT_OK


def cmd_longwave(cfg, out: Path) -> int:
    t = cfg["task"]
    mat = material_from_config(cfg)
    results = longwave_branch(mat, t["eps"], t.get("alphas"), solver_config(cfg),
                              deriv_order=t["deriv_order"], alpha_count=t["alpha_count"])
    write_json(out / "longwave.json",
               {"material": mat.to_dict(), "c_star": speed_of_sound(mat),
                "results": [r.to_dict() for r in results]}, "longwave")
    return EXIT_CONVERGENCE if any(r.branch.truncated for r in results) else EXIT_OK


def cmd_verify(cfg, out: Path) -> int:
    t, n = cfg["task"], cfg["numerics"]
    ctx = VerifyContext(material=material_from_config(cfg), c=speed_from_config(cfg),
                        N=n["N"], N_solver=n["N_solver"], seed=t["seed"], count=t["count"],
                        eps=tuple(t["eps"]))
    results = run_checks(ctx, t.get("checks"))
    for r in results:
        print(f"{r.line()}  ({r.seconds:.2f}s)")
    passed = all(r.passed for r in results)
    print(f"{sum(r.passed for r in results)}/{len(results)} criteria passed")
    doc = {"passed": passed, "seed": ctx.seed,
           "checks": [{k: v for k, v in r.to_dict().items() if k != "seconds"}
                      for r in results]}
    write_json(out / "verify.json", doc, "verify")
    return EXIT_OK if passed else EXIT_VERIFY


def cmd_lattice_check(cfg, out: Path) -> int:
    problem, data, cap, point = _solve_single(cfg)
    t = cfg["task"]
    samples = lattice_samples(np.random.default_rng(t["seed"]), t["samples"])
    rep = residual_report(problem, point, samples)
    write_json(out / "residuals.json",
               {"material": problem.material.to_dict(), "c": problem.c,
                "point": point.to_dict(), "residuals": rep,
                "samples": t["samples"], "seed": t["seed"]}, "residuals")
    return EXIT_OK


def cmd_symmetry(cfg, out: Path) -> int:
    problem = _problem(cfg)
    mat = problem.material
    kind = cfg["task"].get("symmetry") or ("mass" if mat.kappa == 1.0 else "spring")
    op = SymmetryOp(kind)
    data = kernel_basis(mat, problem.c, problem.N)
    scfg = solver_config(cfg)
    cap = _resolve_cap(problem, data, scfg)
    a = min(float(cfg["task"]["a"]), cap)
    point = solve_point(problem, data, a, scfg, cap=cap)
    write_json(out / "symmetry.json", symmetry_report(op, problem, data, point), "symmetry")
    return EXIT_OK


COMMANDS = {
    "dispersion": cmd_dispersion, "omegac": cmd_omegac, "kernel": cmd_kernel,
    "solve": cmd_solve, "branch": cmd_branch, "longwave": cmd_longwave,
    "verify": cmd_verify, "lattice-check": cmd_lattice_check, "symmetry": cmd_symmetry,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dimerwave",
                                description="Periodic traveling waves in dimer FPUT lattices.")
    p.add_argument("subcommand", choices=SUBCOMMANDS)
    p.add_argument("--config", help="JSON configuration file (defaults are built in)")
    p.add_argument("--param", action="append", default=[], metavar="BLOCK.FIELD=VALUE",
                   help="override one config field; repeatable")
    p.add_argument("--out", help="output directory (overrides output.dir)")
    return p


def run(subcommand: str, config_path=None, params=(), out=None) -> int:
    """Run one subcommand and return its exit code."""
    try:
        cfg = load_config(config_path, params)
        out_dir = Path(out if out is not None else cfg["output"]["dir"])
        try:
            out_dir.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise ConfigurationError(f"output path {str(out_dir)!r} not writable: {exc.strerror}")
        return COMMANDS[subcommand](cfg, out_dir)
    except DimerwaveError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return run(args.subcommand, args.config, args.param, args.out)


if __name__ == "__main__":
    sys.exit(main())
