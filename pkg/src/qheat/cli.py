"""Batch front end: ``qheat {direct,inverse,verify,sweep} CONFIG [--out DIR] [--seed N]``.

Exit status: 0 all checks pass, 1 a mathematical check failed, 2 invalid configuration.
"""
from __future__ import annotations

import csv
import json
import math
import sys
from pathlib import Path

import click
import numpy as np

from . import config as C
from .direct import DirectProblem, solve_direct, zero_source
from .errors import DegenerateDenominatorError
from .growth import CoefficientProfile, ConstantFn
from .inverse import solve_inverse
from .spectral import Spectrum
from .verify import ROUNDTRIP_TOL, SOLVER_TOL, random_coeffs, random_source, run_suite

EXIT_OK, EXIT_CHECK, EXIT_CONFIG = 0, 1, 2


class CheckFailed(Exception):
    def __init__(self, names):
        super().__init__(", ".join(names))
        self.names = names


def _fmt(x):
    return "%.17g" % x


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(path, obj):
    Path(path).write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def write_trajectory(path, tr):
    """Rows ``(t, k, u_k)`` in ascending ``t``, modes 1-based."""
    order = np.argsort(tr.times, kind="stable")
    rows = (
        (_fmt(tr.times[i]), k + 1, _fmt(tr.values[i, k]))
        for i in order for k in range(tr.K)
    )
    write_csv(path, ("t", "k", "u_k"), rows)


def _load(path, command):
    cfg = C.load_config(path)
    if cfg.command != command:
        raise C.ConfigError(f"config declares command {cfg.command!r}, invoked as {command!r}")
    return cfg


def _outdir(out):
    p = Path(out)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _failures(checks):
    return [name for name, ok in checks.items() if not ok]


def run_direct(cfg, out: Path, seed=0):
    p = C.build_direct(cfg)
    sol = solve_direct(p)
    dg = sol.diagnostics
    checks = {
        "ode_residual": dg["ode_residual"] <= SOLVER_TOL,
        "oracle_equivalence": dg["oracle_mismatch"] <= SOLVER_TOL,
        "apriori_estimate": dg["apriori"]["holds"],
    }
    write_trajectory(out / "trajectory.csv", sol.trajectory)
    write_json(out / "diagnostics.json", {**dg, "checks": checks, "passed": all(checks.values())})
    return _failures(checks)


def run_inverse(cfg, out: Path, seed=0):
    p = C.build_inverse(cfg)
    try:
        sol = solve_inverse(p)
    except DegenerateDenominatorError as e:
        write_json(out / "diagnostics.json", {"passed": False, "degenerate_mode": e.mode, "error": str(e)})
        raise CheckFailed([f"denominator (mode {e.mode})"]) from None
    dg = sol.diagnostics
    checks = {
        "roundtrip": dg["roundtrip_error"] <= ROUNDTRIP_TOL,
        "ode_residual": dg["ode_residual"] <= SOLVER_TOL,
        "source_bound": dg["source_bound"]["holds"],
        "stability": dg["stability"]["holds"],
    }
    write_csv(out / "source.csv", ("k", "f_k"), ((k + 1, _fmt(v)) for k, v in enumerate(sol.f)))
    write_trajectory(out / "trajectory.csv", sol.trajectory)
    write_json(out / "diagnostics.json", {**dg, "checks": checks, "passed": all(checks.values())})
    return _failures(checks)


def run_verify(cfg, out: Path, seed=0):
    """Full invariant suite on the configured setting.

    The coefficient profile is not validated at load here, so a declared bound
    that the profile violates shows up as a failed check instead of exit 2.
    Missing data (phi, source) are drawn from ``seed``.
    """
    rng = np.random.default_rng(seed)
    spectrum, inv = C.build_operator(cfg)
    phi = (C.coeff_vector(cfg.phi, cfg, spectrum, inv, "phi") if cfg.phi is not None
           else random_coeffs(rng, spectrum, cfg.d))
    source = C.build_source(cfg, spectrum, inv) if cfg.source is not None else random_source(rng, spectrum, cfg.d)
    p = DirectProblem(spectrum, C.build_upsilon(cfg), phi, source, float(cfg.T), C.qparams(cfg),
                      float(cfg.d), cfg.lattice_depth, validate=False)
    shape = C.build_source_shape(cfg) if cfg.g is not None else None
    checks = run_suite(p, rng, shape, inv, cases=cfg.verify.cases)
    report = {
        "seed": seed,
        "passed": all(c.passed for c in checks),
        "checks": [c.to_dict() for c in checks],
    }
    write_json(out / "verify_report.json", report)
    return [c.name for c in checks if not c.passed]


def sweep_rows(cfg):
    """``(q, u_T, exact, error)`` for the homogeneous single mode with ``v = 1``."""
    sw = cfg.sweep
    spectrum = Spectrum(np.array([float(sw.lam)]), 0.5 * float(sw.lam))
    profile = CoefficientProfile(ConstantFn(1.0), 1.0, 1.0)
    exact = sw.phi * math.exp(-sw.lam * cfg.T)
    rows = []
    for q in sw.q_values:
        p = DirectProblem(spectrum, profile, np.array([float(sw.phi)]), zero_source(1), float(cfg.T),
                          C.qparams(cfg, q), float(cfg.d), cfg.lattice_depth)
        u_T = float(solve_direct(p, diagnostics=False).trajectory.final[0])
        rows.append((float(q), u_T, exact, abs(u_T - exact)))
    return rows


def run_sweep(cfg, out: Path, seed=0):
    rows = sweep_rows(cfg)
    write_csv(out / "sweep.csv", ("q", "u_T", "exact", "error"), ([_fmt(v) for v in r] for r in rows))
    order = sorted(rows)
    monotone = all(b[3] < a[3] for a, b in zip(order, order[1:]))
    return [] if monotone else ["classical_limit_monotone"]


RUNNERS = {"direct": run_direct, "inverse": run_inverse, "verify": run_verify, "sweep": run_sweep}


def execute(command, config_path, out, seed=0):
    """Run one command and return its exit status; messages go to stderr."""
    try:
        cfg = _load(config_path, command)
        outdir = _outdir(out)
        failed = RUNNERS[command](cfg, outdir, seed)
    except CheckFailed as e:
        click.echo(f"check failed: {e}", err=True)
        return EXIT_CHECK
    except (C.ConfigError, ValueError) as e:
        click.echo(f"invalid configuration: {e}", err=True)
        return EXIT_CONFIG
    except (ArithmeticError,) as e:
        click.echo(f"check failed: {type(e).__name__}: {e}", err=True)
        return EXIT_CHECK
    if failed:
        click.echo(f"check failed: {', '.join(failed)}", err=True)
        return EXIT_CHECK
    click.echo(f"{command}: all checks passed; artifacts in {outdir}")
    return EXIT_OK


def _command(name, help_text):
    @click.argument("config", type=click.Path(dir_okay=False, path_type=Path))
    @click.option("--out", default="results", show_default=True, type=click.Path(file_okay=False, path_type=Path),
                  help="Artifact directory.")
    @click.option("--seed", default=0, show_default=True, type=int, help="Seed for randomized checks.")
    def cmd(config, out, seed):
        sys.exit(execute(name, config, out, seed))

    cmd.__doc__ = help_text
    return main.command(name)(cmd)


@click.group()
def main():
    """Direct and inverse solvers for the q-deformed heat equation."""


_command("direct", "Solve the direct problem and write trajectory.csv and diagnostics.json.")
_command("inverse", "Recover the source and write source.csv, trajectory.csv and diagnostics.json.")
_command("verify", "Run the invariant suite and write verify_report.json.")
_command("sweep", "Tabulate the q -> 1 error of a single homogeneous mode in sweep.csv.")


if __name__ == "__main__":
    main()
