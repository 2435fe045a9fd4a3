"""Batch command-line interface.

Every command reads an INI config, writes CSV tables plus a JSON summary
(with the resolved config echoed) into the output directory and renders
figures next to them.  Exit codes: 0 success, 1 solver failure (diagnostics
still written), 2 configuration error.
"""

from __future__ import annotations

import argparse
import os
import sys
import traceback
from typing import Dict, List

import numpy as np

from . import analysis, report
from .backends import make_aniso_backend, make_backend, residual
from .config import RunConfig, load_config
from .forms import assemble_forms
from .grid import ConfigurationError, dump_field_csv
from .nehari import ConvergenceError
from .spectral import SpectrumError, eigenpairs, split
from .analysis import WindowError


def _setup(cfg: RunConfig):
    grid = cfg.build_grid()
    materials = cfg.build_materials(grid)
    forms = assemble_forms(grid, materials, cfg.p)
    return grid, materials, forms


def _emit(outdir: str, command: str, cfg: RunConfig, results: Dict,
          artifacts: List[str]) -> None:
    path = os.path.join(outdir, f"{command.replace('-', '_')}_summary.json")
    report.write_json(path, report.summary(command, cfg.echo(), results,
                                           [os.path.basename(a)
                                            for a in artifacts]))


def cmd_eigs(cfg: RunConfig, outdir: str, args) -> Dict:
    grid, _, forms = _setup(cfg)
    k = int(cfg.problem["k"])
    spec = eigenpairs(forms, min(k, forms.n))
    csv_path = os.path.join(outdir, "eigs.csv")
    report.write_csv(csv_path, ["index", "eigenvalue", "cluster"],
                     [(i + 1, spec.eigenvalues[i], spec.cluster_ids[i])
                      for i in range(spec.k)])
    fig = os.path.join(outdir, "spectrum.png")
    report.plot_spectrum(fig, spec.eigenvalues)
    if args.emit_grid:
        for i in range(spec.k):
            dump_field_csv(grid, spec.eigenvectors[:, i],
                           os.path.join(outdir, f"eigvec_{i + 1}.csv"))
    return {"results": {"eigenvalues": spec.eigenvalues,
                        "clusters": spec.cluster_ids},
            "artifacts": [csv_path, fig]}


def cmd_ground(cfg: RunConfig, outdir: str, args) -> Dict:
    grid, _, forms = _setup(cfg)
    gs = analysis.ground_state(forms, cfg.lam, cfg.solver_options())
    field_csv = os.path.join(outdir, "ground_field.csv")
    dump_field_csv(grid, gs.phi, field_csv)
    fig = os.path.join(outdir, "ground_field.png")
    report.plot_field(fig, grid, gs.phi,
                      title=f"ground state, lambda={cfg.lam:g}")
    results = {"c": gs.c_est, "lambda": gs.lam, "p": gs.p,
               "residual": gs.residual, "iterations": gs.iterations,
               "nu": gs.nu, "norm_p": gs.norm_p, "norm_A": gs.norm_A,
               "mass": gs.mass, "start_index": gs.start_index}
    return {"results": results, "artifacts": [field_csv, fig]}


def cmd_sweep(cfg: RunConfig, outdir: str, args) -> Dict:
    _, _, forms = _setup(cfg)
    sw = analysis.lambda_sweep(forms, cfg.lambda_grid(), cfg.solver_options(),
                               threads=args.threads)
    csv_path = os.path.join(outdir, "sweep.csv")
    report.write_csv(
        csv_path,
        ["lambda", "c", "upper", "lower", "nu", "attained", "residual",
         "lipschitz"],
        [(pt.lam, pt.c, pt.upper, pt.lower, pt.nu, pt.attained, pt.residual,
          pt.lipschitz) for pt in sw.points])
    fig = os.path.join(outdir, "sweep.png")
    report.plot_sweep(fig, [pt.lam for pt in sw.points],
                      [pt.c for pt in sw.points],
                      [pt.upper for pt in sw.points],
                      [pt.lower for pt in sw.points], c0=sw.c0)
    results = {"S": sw.S, "c0": sw.c0,
               "eps_estimates": {str(k): v
                                 for k, v in sw.eps_estimates.items()},
               "monotone_ok": sw.monotone_ok,
               "continuity_ok": sw.continuity_ok,
               "eigenvalues": sw.eigenvalues}
    return {"results": results, "artifacts": [csv_path, fig]}


def cmd_bounds(cfg: RunConfig, outdir: str, args) -> Dict:
    _, _, forms = _setup(cfg)
    spec = eigenpairs(forms, min(12, forms.n))
    S, _ = analysis.compute_S(forms, spec=spec)
    try:
        b = analysis.energy_bounds(spec, S, forms.p, forms.mu_omega, cfg.lam)
    except (WindowError, SpectrumError) as exc:
        lo = -float(spec.eigenvalues[-1])
        raise ConfigurationError(
            f"lambda={cfg.lam:g} admits no spectral window; admissible "
            f"interval is ({lo:g}, 0] for the computed spectrum") from exc
    csv_path = os.path.join(outdir, "bounds.csv")
    keys = ["nu", "lambda_nu", "upper", "lower", "beta0", "delta",
            "window_lo", "window_hi", "condition_ok"]
    report.write_csv(csv_path, ["lambda"] + keys,
                     [[cfg.lam] + [b[k] for k in keys]])
    return {"results": dict(b, S=S, lam=cfg.lam), "artifacts": [csv_path]}


def cmd_eps_nu(cfg: RunConfig, outdir: str, args) -> Dict:
    _, _, forms = _setup(cfg)
    nu = int(cfg.problem["nu"])
    est = analysis.estimate_eps_nu(forms, nu, cfg.solver_options())
    csv_path = os.path.join(outdir, "eps_nu.csv")
    keys = sorted(est)
    report.write_csv(csv_path, keys, [[est[k] for k in keys]])
    return {"results": dict(est, nu=nu), "artifacts": [csv_path]}


def cmd_multiplicity(cfg: RunConfig, outdir: str, args) -> Dict:
    _, _, forms = _setup(cfg)
    spec = eigenpairs(forms, min(max(12, 4 * int(cfg.problem["k"])), forms.n))
    S, _ = analysis.compute_S(forms, spec=spec)
    out = analysis.count_m_tilde(spec, S, forms.p, forms.mu_omega, cfg.lam)
    csv_path = os.path.join(outdir, "multiplicity.csv")
    report.write_csv(csv_path, ["index", "eigenvalue", "multiplicity"],
                     [(c["index"], c["eigenvalue"], c["multiplicity"])
                      for c in out["contributing"]])
    return {"results": dict(out, S=S, lam=cfg.lam), "artifacts": [csv_path]}


def cmd_bubble(cfg: RunConfig, outdir: str, args) -> Dict:
    grid, _, forms = _setup(cfg)
    z0 = cfg.problem.get("z0", "").strip()
    z0 = float(z0) if z0 else 0.5 * (grid.z_min + grid.z_max)
    eps0 = float(cfg.problem["eps"])
    spec = eigenpairs(forms, min(4, forms.n))
    gs = analysis.ground_state(forms, cfg.lam, cfg.solver_options(),
                               spec=spec)
    tests = [spec.eigenvectors[:, i] for i in range(min(2, spec.k))]
    rows = []
    eps = eps0
    for _ in range(4):
        _, d = analysis.bubble(forms, gs.phi, eps, z0, test_fields=tests)
        rows.append(d)
        eps *= 0.5
    keys = sorted(rows[0])
    csv_path = os.path.join(outdir, "bubble.csv")
    report.write_csv(csv_path, keys, [[r[k] for k in keys] for r in rows])
    fig = os.path.join(outdir, "bubble.png")
    report.plot_bubble(fig, rows)
    return {"results": {"z0": z0, "rows": rows, "c": gs.c_est},
            "artifacts": [csv_path, fig]}


def cmd_aniso_check(cfg: RunConfig, outdir: str, args) -> Dict:
    _, materials, forms = _setup(cfg)
    spec = eigenpairs(forms, min(max(12, 4 * int(cfg.problem["k"])), forms.n))
    S, _ = analysis.compute_S(forms, spec=spec)
    out = analysis.count_m_tilde_aniso(spec, S, forms.p, forms.mu_omega,
                                       materials)
    csv_path = os.path.join(outdir, "aniso_check.csv")
    report.write_csv(csv_path, ["index", "eigenvalue", "multiplicity"],
                     [(c["index"], c["eigenvalue"], c["multiplicity"])
                      for c in out["contributing"]])
    return {"results": dict(out, S=S), "artifacts": [csv_path]}


def cmd_continuity(cfg: RunConfig, outdir: str, args) -> Dict:
    _, _, forms = _setup(cfg)
    rows = analysis.continuity_of_ground_states(forms, cfg.mu_sequence(),
                                                cfg.solver_options())
    csv_path = os.path.join(outdir, "continuity.csv")
    keys = ["mu", "c", "c_ref", "energy_gap", "lipschitz_bound",
            "state_distance"]
    report.write_csv(csv_path, keys, [[r[k] for k in keys] for r in rows])
    return {"results": {"rows": rows}, "artifacts": [csv_path]}


COMMANDS = {
    "eigs": cmd_eigs,
    "ground": cmd_ground,
    "sweep": cmd_sweep,
    "bounds": cmd_bounds,
    "eps-nu": cmd_eps_nu,
    "multiplicity": cmd_multiplicity,
    "bubble": cmd_bubble,
    "aniso-check": cmd_aniso_check,
    "continuity": cmd_continuity,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="curlcyl",
        description="cylindrical curl-curl ground states and diagnostics")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("-c", "--config", default=None,
                   help="INI config file (defaults used when omitted)")
    p.add_argument("-o", "--output", default=None,
                   help="output directory (overrides config)")
    p.add_argument("--threads", type=int, default=1,
                   help="parallel sweep/bisection workers; 1 is the "
                        "determinism reference")
    p.add_argument("--emit-grid", action="store_true",
                   help="also dump per-node field CSVs where applicable")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        outdir = args.output or cfg.output["directory"]
        os.makedirs(outdir, exist_ok=True)
    except (ConfigurationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    try:
        np.random.seed(cfg.seed)
        out = COMMANDS[args.command](cfg, outdir, args)
    except (ConfigurationError, WindowError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ConvergenceError, SpectrumError) as exc:
        report.write_json(os.path.join(outdir, "failure.json"),
                          {"command": args.command, "config": cfg.echo(),
                           "error": str(exc)})
        print(f"solver failure: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    _emit(outdir, args.command, cfg, out["results"], out["artifacts"])
    for a in out["artifacts"]:
        print(a)
    return 0


if __name__ == "__main__":
    sys.exit(main())
