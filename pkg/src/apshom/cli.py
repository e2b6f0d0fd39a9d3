"""Command-line interface.

Exit codes: 0 success, 1 configuration/validation failure, 2 solver failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import __version__
from .config import ConfigError, load_config
from .errors import (AssumptionViolation, Blowup, NoConvergence,
                     SingularSystem, StiffnessRejected, TruncationOverflow)
from .problem import validate_assumptions
from .runner import (build_model, run_convergence, run_sigma_battery,
                     run_single, sigma_csv)

SOLVER_ERRORS = (SingularSystem, Blowup, NoConvergence, StiffnessRejected,
                 TruncationOverflow)


def _parser():
    p = argparse.ArgumentParser(
        prog="apshom",
        description="Desk-scale homogenization of oscillating stochastic "
                    "reaction-diffusion problems")
    p.add_argument("--out", default=None, help="output directory override")
    p.add_argument("--threads", type=int, default=1,
                   help="worker threads for Monte Carlo jobs")
    p.add_argument("--seed", type=int, default=None,
                   help="base seed override")
    p.add_argument("--cutoff", type=int, default=None,
                   help="frequency-module cutoff override")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("validate", help="check a config against A1-A6"
                   ).add_argument("config")
    sub.add_parser("cell", help="solve the cell problems, print b and residuals"
                   ).add_argument("config")
    sub.add_parser("effective", help="emit the effective-model file"
                   ).add_argument("config")
    sim = sub.add_parser("simulate", help="one shared-noise trajectory pair")
    sim.add_argument("config")
    sim.add_argument("--eps", type=float, required=True)
    sim.add_argument("--seed", type=int, default=None, dest="sim_seed",
                     help="trajectory seed (defaults to the global --seed)")
    sim.add_argument("--save-binary", default=None)
    sub.add_parser("converge", help="full convergence-in-probability study"
                   ).add_argument("config")
    sub.add_parser("sigma", help="two-scale pairing battery"
                   ).add_argument("config")
    sub.add_parser("plot-data", help="flatten a report into tidy CSV"
                   ).add_argument("report")
    return p


def _out_dir(args, cfg=None, default="."):
    # precedence: --out flag, APSHOM_OUT variable, config, default
    if args.out is not None:
        return Path(args.out)
    env = os.environ.get("APSHOM_OUT")
    if env:
        return Path(env)
    if cfg is not None and cfg.out_dir:
        return Path(cfg.out_dir)
    return Path(default)


def _load(args):
    return load_config(args.config, cutoff_override=args.cutoff,
                       seed_override=args.seed)


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        return _dispatch(args)
    except (ConfigError, AssumptionViolation, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SOLVER_ERRORS as exc:
        print(f"solver failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


def _dispatch(args):
    if args.command == "validate":
        cfg = _load(args)
        report = validate_assumptions(cfg.problem)
        print(f"classification: {report.classification}")
        for chk in report.checks:
            print(f"  {chk['clause']}: {chk['detail']}")
        return 0

    if args.command == "cell":
        cfg = _load(args)
        validate_assumptions(cfg.problem)
        cell, model = build_model(cfg)
        print("b =")
        for row in model.b:
            print("  " + "  ".join(f"{v:.7f}" for v in row))
        print(f"galerkin_dim = {cell.galerkin_dim}")
        for name, res in sorted(cell.residuals.items()):
            print(f"residual[{name}] = {res:.3e}")
        return 0

    if args.command == "effective":
        cfg = _load(args)
        validate_assumptions(cfg.problem)
        _, model = build_model(cfg)
        out = _out_dir(args, cfg)
        out.mkdir(parents=True, exist_ok=True)
        path = out / "effective_model.json"
        model.export(path)
        print(f"wrote {path}")
        return 0

    if args.command == "simulate":
        cfg = _load(args)
        seed = args.sim_seed if args.sim_seed is not None else (args.seed or 0)
        result = run_single(cfg, args.eps, seed,
                            save_binary=args.save_binary)
        print(json.dumps(result, indent=1, sort_keys=True))
        if args.out is not None or os.environ.get("APSHOM_OUT"):
            out = _out_dir(args, cfg)
            out.mkdir(parents=True, exist_ok=True)
            keys = ("eps", "seed", "dt", "steps", "err_l2_qt",
                    "sup_energy", "int_energy")
            lines = [",".join(keys),
                     ",".join(repr(result[k]) for k in keys)]
            (out / "simulate_summary.csv").write_text("\n".join(lines) + "\n")
        return 0

    if args.command == "converge":
        cfg = _load(args)
        out = _out_dir(args, cfg, default="runs/converge")
        report = run_convergence(cfg, threads=max(1, args.threads),
                                 out_dir=out)
        print(f"wrote {out}/convergence.csv and {out}/manifest.json")
        print(f"slope of mean err vs eps: {report.slope:.3f}")
        for entry in report.per_eps:
            print(f"  eps={entry['eps']:g}: mean_err={entry['mean_err']:.6g}")
        return 0

    if args.command == "sigma":
        cfg = _load(args)
        validate_assumptions(cfg.problem)
        rows, summary = run_sigma_battery(cfg)
        out = _out_dir(args, cfg, default="runs/sigma")
        out.mkdir(parents=True, exist_ok=True)
        (out / "sigma.csv").write_text(sigma_csv(rows))
        with open(out / "sigma_summary.json", "w") as fh:
            json.dump(summary, fh, indent=1, sort_keys=True, default=float)
        print(f"wrote {out}/sigma.csv")
        for name, slope in summary["slopes"].items():
            print(f"  slope[{name}] = {slope:.3f}")
        return 0

    if args.command == "plot-data":
        report_dir = Path(args.report)
        manifest = json.loads((report_dir / "manifest.json").read_text())
        lines = ["metric,eps,value"]
        for entry in manifest["per_eps"]:
            eps = entry["eps"]
            for key in ("mean_err", "std_err", "mean_sup_energy",
                        "mean_int_energy"):
                lines.append(f"{key},{eps!r},{entry[key]!r}")
            for d, rec in entry["prob_exceed"].items():
                lines.append(f"prob_exceed_{d},{eps!r},{rec['p']!r}")
        out = _out_dir(args, default=str(report_dir))
        out.mkdir(parents=True, exist_ok=True)
        path = out / "plotdata.csv"
        path.write_text("\n".join(lines) + "\n")
        print(f"wrote {path}")
        return 0

    raise ConfigError(f"unknown command {args.command!r}")


if __name__ == "__main__":
    sys.exit(main())
