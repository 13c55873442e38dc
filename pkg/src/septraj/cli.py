"""Command-line interface.

Verbs:

* run             -- propagate a registered scenario with one or more
                     solvers, writing a CSV table and a JSON sidecar per
                     solver.
* compare         -- z-test two result tables on a shared time grid.
* list-scenarios  -- show the registered scenarios and their defaults.
* check-separable -- structural separability check on a scenario's model.

Exit codes: 0 success (and 'compatible'/'manifestly_separable' verdicts),
1 runtime or configuration error, 2 argument error (argparse), 3 a
successful comparison/check whose verdict is negative.
"""

import argparse
import ast
import os
import sys
import time
from types import SimpleNamespace

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import __version__
from .ensemble import SubStepper, run_ensemble
from .master_eq import SeparableEnsemble, integrate, sep_piecewise_propagate
from .mcwf import McwfStepper
from .scenarios import SCENARIOS, check_separable_form, get_scenario
from .sep_mcwf import SepStepper
from .stochastic import SepSseStepper, SseStepper
from .tables import (compare_columns, read_csv, result_columns,
                     stats_from_densities, write_csv, write_sidecar)

SOLVERS = ("mcwf", "sep-mcwf", "lindblad", "sep-lindblad", "sse", "sep-sse")


def _parse_param(text):
    key, sep, raw = text.partition("=")
    if not sep:
        raise ValueError(f"--param expects key=value, got {text!r}")
    try:
        val = ast.literal_eval(raw)
    except (ValueError, SyntaxError):
        val = raw
    return key.strip(), val


def _load_config(path):
    with open(path, "rb") as fh:
        cfg = tomllib.load(fh)
    run = cfg.get("run", {})
    params = cfg.get("params", {})
    if not isinstance(run, dict) or not isinstance(params, dict):
        raise ValueError("config sections [run] and [params] must be tables")
    return run, params


def _solver_result(solver, setup, dt, t_final, n_traj, seed, threads,
                   substeps, full_weights=False):
    model, init, obs = setup.model, setup.initial, setup.observables
    n_steps = int(round(t_final / dt))
    sub_dt = dt / substeps
    if solver == "mcwf":
        stepper = McwfStepper(model, sub_dt, init.full())
    elif solver == "sep-mcwf":
        stepper = SepStepper(model, sub_dt, init, full_weights=full_weights)
    elif solver == "sse":
        stepper = SseStepper(model, sub_dt, init.full())
    elif solver == "sep-sse":
        stepper = SepSseStepper(model, sub_dt, init)
    elif solver == "lindblad":
        full = init.full()
        rho0 = np.outer(full, full.conj())
        _, states = integrate(model, rho0, t_final, sub_dt, method="rk4")
        dens = states[::substeps]
        times = np.arange(n_steps + 1) * dt
        return (SimpleNamespace(times=times,
                                stats=stats_from_densities(times, dens, obs)),
                {})
    elif solver == "sep-lindblad":
        history, counters = sep_piecewise_propagate(
            model, SeparableEnsemble.pure(init), sub_dt, n_steps * substeps)
        dens = [e.density() for e in history[::substeps]]
        times = np.arange(n_steps + 1) * dt
        return (SimpleNamespace(times=times,
                                stats=stats_from_densities(times, dens, obs)),
                counters)
    else:
        raise ValueError(f"unknown solver {solver!r}; choose from "
                         + ", ".join(SOLVERS))
    if substeps > 1:
        stepper = SubStepper(stepper, substeps)
    result = run_ensemble(stepper, dt, n_steps, n_traj, seed, obs,
                          threads=threads)
    return result, result.counters


def cmd_run(args):
    run_cfg, param_cfg = ({}, {})
    if args.config:
        run_cfg, param_cfg = _load_config(args.config)
    scenario_name = args.scenario or run_cfg.get("scenario")
    if not scenario_name:
        raise ValueError("no scenario given (positional argument or "
                         "config [run] scenario)")
    scenario = get_scenario(scenario_name)
    params = dict(scenario.params)
    params.update(param_cfg)
    for text in args.param or []:
        key, val = _parse_param(text)
        params[key] = val
    setup = scenario.make(**params)

    solvers = args.solver or run_cfg.get("solvers") or ["mcwf", "sep-mcwf"]
    if isinstance(solvers, str):
        solvers = [solvers]
    for s in solvers:
        if s not in SOLVERS:
            raise ValueError(f"unknown solver {s!r}; choose from "
                             + ", ".join(SOLVERS))

    def pick(cli_val, key, fallback):
        if cli_val is not None:
            return cli_val
        if key in run_cfg:
            return run_cfg[key]
        return fallback

    dt = float(pick(args.dt, "dt", setup.defaults["dt"]))
    t_final = float(pick(args.t_final, "t_final", setup.defaults["t_final"]))
    n_traj = int(pick(args.traj, "n_traj", setup.defaults["n_traj"]))
    seed = int(pick(args.seed, "seed", 1234))
    substeps = int(pick(args.substeps, "substeps", 1))
    env_threads = os.environ.get("SEPTRAJ_THREADS")
    threads = int(pick(args.threads, "threads",
                       int(env_threads) if env_threads else 1))
    out_dir = pick(args.out, "out", ".")
    weighting = pick(args.weighting, "weighting", "restricted")
    if weighting not in ("restricted", "unrestricted"):
        raise ValueError("weighting must be 'restricted' or 'unrestricted'")
    if dt <= 0 or t_final <= 0 or n_traj < 1 or substeps < 1 or threads < 1:
        raise ValueError("dt, t_final must be positive; n_traj, substeps, "
                         "threads must be at least 1")
    os.makedirs(out_dir, exist_ok=True)

    for solver in solvers:
        t0 = time.perf_counter()
        result, counters = _solver_result(
            solver, setup, dt, t_final, n_traj, seed, threads, substeps,
            full_weights=(weighting == "unrestricted"))
        wall = time.perf_counter() - t0
        stem = f"{scenario_name}_{solver}"
        csv_path = os.path.join(out_dir, stem + ".csv")
        cols = result_columns(result, setup.observables)
        write_csv(csv_path, cols)
        meta = {
            "scenario": scenario_name,
            "solver": solver,
            "version": __version__,
            "seed": seed,
            "dt": dt,
            "t_final": t_final,
            "n_traj": n_traj,
            "substeps": substeps,
            "threads": threads,
            "weighting": weighting,
            "params": params,
            "counters": counters,
            "wall_time_s": wall,
            "csv": os.path.basename(csv_path),
            "columns": [name for name, _ in cols],
        }
        write_sidecar(os.path.join(out_dir, stem + ".json"), meta)
        extra = ""
        if counters:
            extra = " (" + ", ".join(f"{k}={v}" for k, v in
                                     sorted(counters.items())) + ")"
        print(f"{solver}: wrote {csv_path} in {wall:.2f}s{extra}")
    return 0


def cmd_compare(args):
    times_a, cols_a = read_csv(args.table_a)
    times_b, cols_b = read_csv(args.table_b)
    names = args.observable or None
    report = compare_columns(times_a, cols_a, times_b, cols_b,
                             z_crit=args.z_crit, abs_tol=args.abs_tol,
                             names=names)
    for entry in report.observables:
        flag = "DIVERGENT" if entry.divergent else "ok"
        print(f"{entry.name}: max |dev| = {entry.max_dev:.3e} "
              f"(z = {entry.max_z:.2f}) at t = {entry.t_at_max:g} [{flag}]")
    print(f"verdict: {report.verdict}")
    return 3 if report.divergent else 0


def cmd_list(args):
    for name in sorted(SCENARIOS):
        sc = SCENARIOS[name]
        print(f"{name}: {sc.description}")
        if sc.params:
            joined = ", ".join(f"{k}={v}" for k, v in sc.params.items())
            print(f"    defaults: {joined}")
    return 0


def cmd_check(args):
    scenario = get_scenario(args.scenario)
    params = dict(scenario.params)
    for text in args.param or []:
        key, val = _parse_param(text)
        params[key] = val
    setup = scenario.make(**params)
    report = check_separable_form(setup.model)
    print(f"hamiltonian local-sum residual: {report.hamiltonian_residual:.3e}")
    for lab, resid in zip(setup.model.labels, report.jump_residuals):
        print(f"jump {lab} product-form residual: {resid:.3e}")
    print(f"summed square local-sum residual: "
          f"{report.jump_square_residual:.3e}")
    print(f"verdict: {report.verdict}")
    return 0 if report.manifest else 3


def build_parser():
    parser = argparse.ArgumentParser(
        prog="septraj",
        description="trajectory simulations of open multipartite systems "
                    "under unrestricted and separability-restricted dynamics")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="propagate a scenario")
    p_run.add_argument("scenario", nargs="?", help="registered scenario name")
    p_run.add_argument("--solver", action="append", choices=SOLVERS,
                       help="solver to run (repeatable; default mcwf and "
                            "sep-mcwf)")
    p_run.add_argument("--config", help="TOML file with [run] and [params]")
    p_run.add_argument("--param", action="append", metavar="KEY=VALUE",
                       help="scenario parameter override (repeatable)")
    p_run.add_argument("--seed", type=int, help="master seed (default 1234)")
    p_run.add_argument("--traj", type=int, help="number of trajectories")
    p_run.add_argument("--dt", type=float, help="recording time step")
    p_run.add_argument("--t-final", type=float, dest="t_final")
    p_run.add_argument("--substeps", type=int,
                       help="internal sub-steps per recorded step")
    p_run.add_argument("--weighting", choices=("restricted", "unrestricted"),
                       help="branch-weight convention for the sep-mcwf "
                            "sampler (default restricted)")
    p_run.add_argument("--threads", type=int,
                       help="worker threads (default $SEPTRAJ_THREADS or 1); "
                            "results are identical for any value")
    p_run.add_argument("--out", help="output directory (default .)")
    p_run.set_defaults(func=cmd_run)

    p_cmp = sub.add_parser("compare", help="z-test two result tables")
    p_cmp.add_argument("table_a")
    p_cmp.add_argument("table_b")
    p_cmp.add_argument("--z-crit", type=float, default=3.0, dest="z_crit")
    p_cmp.add_argument("--abs-tol", type=float, default=1e-9, dest="abs_tol",
                       help="tolerance where both error bars vanish")
    p_cmp.add_argument("--observable", action="append",
                       help="restrict the comparison (repeatable)")
    p_cmp.set_defaults(func=cmd_compare)

    p_list = sub.add_parser("list-scenarios", help="show scenario registry")
    p_list.set_defaults(func=cmd_list)

    p_chk = sub.add_parser("check-separable",
                           help="structural separability check")
    p_chk.add_argument("scenario")
    p_chk.add_argument("--param", action="append", metavar="KEY=VALUE")
    p_chk.set_defaults(func=cmd_check)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, KeyError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
