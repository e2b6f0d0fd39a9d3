"""Experiment orchestration: the convergence study and the pairing battery.

One convergence run builds the cell correctors and the effective model once,
then fans (sample, eps) jobs over a thread pool.  Every job seeds its own
Wiener path from base_seed XOR sample, both simulations of a pair share that
path, and aggregation is an ordered fold, so the emitted CSV is byte-stable
across repeats and thread counts.
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .cell import solve_cell
from .effective import tabulate
from .problem import validate_assumptions
from .spde import (STIFFNESS_FACTOR, WienerPath, energy_diagnostics,
                   l2_qt_distance, simulate_eps, simulate_homogenized,
                   time_increment_profile)
from .trig import FrequencyModule, TrigPoly
from .twoscale import (TestFunction, corrector_identification,
                       fit_loglog_slope, product_pairing, strong_sigma_check,
                       synthetic_field, trajectory_field, weak_sigma_pairing)

CSV_FLOAT = repr  # shortest round-trip formatting, byte-stable


def snap_dt(T, dt_max):
    """Largest dt = T / 2^k not exceeding dt_max (bridge-refinable steps)."""
    if dt_max >= T:
        return T, 1
    k = max(0, math.ceil(math.log2(T / dt_max) - 1e-12))
    steps = 2 ** k
    while T / steps > dt_max * (1.0 + 1e-12):
        steps *= 2
    return T / steps, steps


@dataclass
class ConvergenceReport:
    rows: list
    per_eps: list
    slope: float
    energy_uniformity: dict
    increment_bound: dict
    validation: dict
    b: list
    residuals: dict
    galerkin_dim: int
    config_hash: str
    base_seed: int
    deltas: tuple
    eps_list: tuple
    cell_records: dict = None
    wall_seconds: float = 0.0
    out_of_range: int = 0

    def manifest(self):
        return {
            "schema": "apshom-report-v1",
            "version": __version__,
            "config_hash": self.config_hash,
            "base_seed": self.base_seed,
            "validation": self.validation,
            "b": self.b,
            "cell": self.cell_records,
            "residuals": self.residuals,
            "galerkin_dim": self.galerkin_dim,
            "eps_list": list(self.eps_list),
            "deltas": list(self.deltas),
            "per_eps": self.per_eps,
            "slope_mean_err": self.slope,
            "energy_uniformity": self.energy_uniformity,
            "increment_bound": self.increment_bound,
            "out_of_range_queries": self.out_of_range,
            "wall_seconds": self.wall_seconds,
        }


def _convergence_csv(rows):
    lines = ["eps,sample,err,sup_energy,int_energy"]
    for r in rows:
        lines.append(",".join([
            CSV_FLOAT(r["eps"]), str(r["sample"]), CSV_FLOAT(r["err"]),
            CSV_FLOAT(r["sup_energy"]), CSV_FLOAT(r["int_energy"])]))
    return "\n".join(lines) + "\n"


def build_model(cfg):
    """Cell solve + effective model for one configuration (shared by runs)."""
    p = cfg.problem
    cell = solve_cell(p.a, p.g, p.module)
    r_min, r_max = cfg.r_range()
    model = tabulate(p.a, p.g, p.noise, cell.chi, p.module, r_min, r_max,
                     cfg.r_points, cell=cell,
                     provenance={"config_hash": cfg.config_hash})
    return cell, model


def _pair_job(cfg, model, eps, sample):
    p = cfg.problem
    seed = cfg.base_seed ^ sample
    dt, steps = snap_dt(p.domain.T, min(cfg.dt, eps * eps / STIFFNESS_FACTOR))
    base = WienerPath.generate(p.noise.m, seed, p.domain.T, 1)
    path = base.refine_to_steps(steps)
    tr_eps = simulate_eps(p, eps, dt, path)
    tr_hom = simulate_homogenized(model, p.domain, p.u0, dt, path)
    err = l2_qt_distance(tr_eps, tr_hom)
    sup_e, int_e = energy_diagnostics(tr_eps)
    increments = {}
    if cfg.increment_deltas:
        dmax = max(cfg.increment_deltas)
        thetas, values = time_increment_profile(tr_eps, dmax)
        for d in cfg.increment_deltas:
            sel = np.abs(thetas) <= d + 1e-12
            increments[d] = float(np.max(values[sel])) if np.any(sel) else 0.0
    return {"eps": eps, "sample": sample, "err": err, "sup_energy": sup_e,
            "int_energy": int_e, "increments": increments, "dt": dt}


def run_convergence(cfg, threads=1, out_dir=None):
    """The full shared-noise eps-sweep experiment with diagnostics."""
    t0 = time.perf_counter()
    report = validate_assumptions(cfg.problem)
    cell, model = build_model(cfg)
    p = cfg.problem

    jobs = [(eps, s) for eps in p.eps_list for s in range(cfg.samples)]
    results = {}
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futs = {pool.submit(_pair_job, cfg, model, eps, s): (eps, s)
                    for eps, s in jobs}
            for fut, key in futs.items():
                results[key] = fut.result()
    else:
        for eps, s in jobs:
            results[(eps, s)] = _pair_job(cfg, model, eps, s)

    rows = [results[(eps, s)] for eps in p.eps_list for s in range(cfg.samples)]

    per_eps = []
    for eps in p.eps_list:
        errs = np.array([results[(eps, s)]["err"] for s in range(cfg.samples)])
        sups = np.array([results[(eps, s)]["sup_energy"]
                         for s in range(cfg.samples)])
        ints = np.array([results[(eps, s)]["int_energy"]
                         for s in range(cfg.samples)])
        entry = {
            "eps": eps,
            "dt": results[(eps, 0)]["dt"],
            "mean_err": float(np.mean(errs)),
            "std_err": float(np.std(errs)),
            "mean_sup_energy": float(np.mean(sups)),
            "mean_int_energy": float(np.mean(ints)),
            "prob_exceed": {},
            "increment_over_delta": {},
        }
        n = len(errs)
        for d in cfg.deltas:
            ph = float(np.mean(errs > d))
            entry["prob_exceed"][repr(d)] = {
                "p": ph, "stderr": math.sqrt(max(ph * (1 - ph), 0.0) / n)}
        for d in cfg.increment_deltas:
            vals = np.array([results[(eps, s)]["increments"][d]
                             for s in range(cfg.samples)])
            entry["increment_over_delta"][repr(d)] = float(np.mean(vals) / d)
        per_eps.append(entry)

    mean_errs = [e["mean_err"] for e in per_eps]
    slope = (fit_loglog_slope(p.eps_list, mean_errs)
             if len(p.eps_list) >= 2 else float("nan"))

    sup_means = [e["mean_sup_energy"] for e in per_eps]
    int_means = [e["mean_int_energy"] for e in per_eps]
    energy_uniformity = {
        "sup_ratio": (max(sup_means) / min(sup_means)
                      if min(sup_means) > 0 else float("inf")),
        "int_ratio": (max(int_means) / min(int_means)
                      if min(int_means) > 0 else float("inf")),
    }
    all_ratios = [v for e in per_eps
                  for v in e["increment_over_delta"].values()]
    increment_bound = {
        "ratio_spread": (max(all_ratios) / min(all_ratios)
                         if all_ratios and min(all_ratios) > 0
                         else float("nan")),
        "ratios": all_ratios,
    }

    out = ConvergenceReport(
        rows=rows, per_eps=per_eps, slope=slope,
        energy_uniformity=energy_uniformity,
        increment_bound=increment_bound, validation=report.to_dict(),
        b=model.b.tolist(), residuals=dict(cell.residuals),
        galerkin_dim=cell.galerkin_dim, config_hash=cfg.config_hash,
        base_seed=cfg.base_seed, deltas=cfg.deltas, eps_list=p.eps_list,
        cell_records=cell.manifest(),
        wall_seconds=time.perf_counter() - t0,
        out_of_range=model.out_of_range_count)

    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "convergence.csv").write_text(_convergence_csv(rows))
        with open(out_dir / "manifest.json", "w") as fh:
            json.dump(out.manifest(), fh, indent=1, sort_keys=True)
    return out


def run_single(cfg, eps, seed, save_binary=None):
    """One shared-noise trajectory pair with diagnostics (CLI `simulate`)."""
    p = cfg.problem
    validate_assumptions(p)
    cell, model = build_model(cfg)
    dt, steps = snap_dt(p.domain.T, min(cfg.dt, eps * eps / STIFFNESS_FACTOR))
    path = WienerPath.generate(p.noise.m, seed, p.domain.T, 1
                               ).refine_to_steps(steps)
    tr_eps = simulate_eps(p, eps, dt, path)
    tr_hom = simulate_homogenized(model, p.domain, p.u0, dt, path)
    if save_binary:
        tr_eps.save_binary(save_binary)
    sup_e, int_e = energy_diagnostics(tr_eps)
    return {
        "eps": eps, "seed": seed, "dt": dt, "steps": steps,
        "err_l2_qt": l2_qt_distance(tr_eps, tr_hom),
        "sup_energy": sup_e, "int_energy": int_e,
        "b": model.b.tolist(),
    }


# --------------------------------------------------------------------------
# pairing battery
# --------------------------------------------------------------------------

# reciprocal eps values chosen so the oscillation phase at the domain edge is
# constant across the sweep (differences are half-integers): the measured
# defects then decay at the genuine rate instead of beating against sin(1/eps)
SIGMA_EPS = tuple(1.0 / v for v in (2.7, 5.2, 10.2, 20.2))


def _battery_module():
    return FrequencyModule([[2.0 * math.pi]], [2.0 * math.pi], 6)


def run_sigma_battery(cfg=None, identification=True, nx=2048, nt=16):
    """Synthetic weak/strong pairing battery plus corrector identification.

    Returns CSV-ready rows (eps, test_id, pairing, limit, defect) and a
    summary with fitted log-log slopes.  The identification part needs a
    config (deterministic run of its problem at eps = 1/8 and 1/32).
    """
    module = _battery_module()
    phi = TrigPoly.cosine(module, [1], [0])
    x = np.linspace(0.0, 1.0, nx + 1)
    t = np.linspace(0.0, 1.0, nt + 1)
    one = TestFunction(macro=lambda xx, tt: np.ones_like(xx), micro=phi)

    rows = []

    def add(eps, test_id, pairing, limit):
        rows.append({"eps": eps, "test_id": test_id, "pairing": pairing,
                     "limit": limit, "defect": abs(pairing - limit)})

    for eps in SIGMA_EPS:
        osc = synthetic_field(t, (x,), lambda xx, tt: np.ones_like(xx),
                              phi, eps)
        add(eps, "weak_mean", weak_sigma_pairing([osc], eps, one), 0.5)

        const = synthetic_field(t, (x,), lambda xx, tt: np.ones_like(xx),
                                None, eps)
        add(eps, "weak_zero", weak_sigma_pairing([const], eps, one), 0.0)

        check = strong_sigma_check(
            {eps: [osc]}, lambda xx, tt: np.ones_like(xx), phi)
        add(eps, "strong_norm", check["rows"][0]["norm"],
            check["rows"][0]["limit"])

        two_plus = synthetic_field(
            t, (x,), lambda xx, tt: np.ones_like(xx), 2.0 + phi, eps)
        prod = product_pairing(
            [osc], [two_plus],
            TestFunction(macro=lambda xx, tt: np.ones_like(xx)))
        add(eps, "product_rule", prod, 0.5)

    summary = {"eps": list(SIGMA_EPS), "slopes": {}}
    for test_id in ("weak_mean", "weak_zero", "strong_norm", "product_rule"):
        defects = [r["defect"] for r in rows if r["test_id"] == test_id]
        summary["slopes"][test_id] = fit_loglog_slope(SIGMA_EPS, defects)

    if identification and cfg is not None:
        ident = run_identification(cfg)
        for r in ident["rows"]:
            rows.append({"eps": r["eps"], "test_id": "corrector_ident",
                         "pairing": r["pairing"], "limit": r["limit"],
                         "defect": r["defect"]})
        summary["identification"] = ident
    return rows, summary


def run_identification(cfg, eps_values=(1.0 / 8.0, 1.0 / 32.0), grid_n=1024,
                       horizon=0.05):
    """Gradient corrector identification on the deterministic problem."""
    from .effective import NoiseTerm
    from .problem import ProblemSpec
    from .spde import DomainSpec

    p = cfg.problem
    domain = DomainSpec(dimension=p.domain.dimension, grid_n=grid_n,
                        T=horizon)
    det = ProblemSpec(domain=domain, module=p.module, a=p.a, g=p.g,
                      noise=NoiseTerm.empty(), u0=p.u0,
                      eps_list=tuple(sorted(eps_values, reverse=True)),
                      mode=p.mode)
    cell, model = build_model(
        _clone_cfg(cfg, det))
    psi = TrigPoly.cosine(p.module, [1] + [0] * (p.module.n_spatial_generators - 1),
                          [0] * p.module.n_temporal_generators)
    # macro factor must not be orthogonal to D u0 (u0 ~ sin(pi x) makes its
    # gradient a cosine, so an even-about-midpoint factor would pair to zero)
    f = TestFunction(macro=lambda xx, tt: xx,
                     micro_vector=(psi,) * domain.dimension)
    pairs = {}
    for eps in det.eps_list:
        dt, steps = snap_dt(domain.T, min(cfg.dt, eps * eps / STIFFNESS_FACTOR))
        path = WienerPath.generate(0, cfg.base_seed, domain.T, 1
                                   ).refine_to_steps(steps)
        tr_eps = simulate_eps(det, eps, dt, path)
        tr_hom = simulate_homogenized(model, domain, det.u0, dt, path)
        pairs[eps] = [(trajectory_field(tr_eps), trajectory_field(tr_hom))]
    out = corrector_identification(pairs, cell.chi, cell, f)
    defects = {r["eps"]: r["defect"] for r in out["rows"]}
    eps_sorted = sorted(defects, reverse=True)
    out["reduction"] = (defects[eps_sorted[-1]] / defects[eps_sorted[0]]
                        if defects[eps_sorted[0]] > 0 else 0.0)
    return out


def _clone_cfg(cfg, problem):
    from dataclasses import replace
    return replace(cfg, problem=problem)


def sigma_csv(rows):
    lines = ["eps,test_id,pairing,limit,defect"]
    for r in rows:
        lines.append(",".join([
            CSV_FLOAT(r["eps"]), r["test_id"], CSV_FLOAT(r["pairing"]),
            CSV_FLOAT(r["limit"]), CSV_FLOAT(r["defect"])]))
    return "\n".join(lines) + "\n"
