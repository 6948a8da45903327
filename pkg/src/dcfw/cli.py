"""Command-line harness: ``dcfw {qap,grid-gaps,align,bench}``.

Every subcommand writes CSV (comma separated, header row). Settings come from
built-in defaults, then an optional JSON ``--config`` file, then flags.
Exit status is 0 on success, 1 when a solver fails and 2 on usage errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .fw_inner import StepRule
from .solver import DcfwConfig

log = logging.getLogger("dcfw")

EXIT_OK, EXIT_SOLVER, EXIT_USAGE = 0, 1, 2

QAP_COLUMNS = ("instance", "solver", "variant", "seed", "outer_iters", "lmo_calls",
               "grad_calls", "subgrad_calls", "phi_relaxed", "phi_rounded",
               "assignment_error", "seconds")
GRID_COLUMNS = ("x1", "x2", "phi", "gap_pgm", "gap_ppm")
ALIGN_COLUMNS = ("iter", "fw_gap", "phi", "svd_count", "lmo_count", "seconds")
SUMMARY_COLUMNS = ("instance", "seed", "fw_assignment_error", "dcfw_assignment_error", "outcome")

SOLVER_KEYS = {
    "tolerance_mode": "adaptive",
    "eps": None,
    "beta": 0.8,
    "eps_final": None,
    "rel_tol": 1e-3,
    "max_outer": 2000,
    "max_inner": 20000,
    "max_lmo_calls": None,
    "step_size": "linesearch",
}
EXPERIMENT_KEYS = {
    "seed": 0,
    "repeats": 1,
    "solver": None,
    "variant": 1,
    "resolution": 81,
    "prox_tol": None,
    "d": 16,
    "n": 256,
    "obs_prob": 0.1,
    "lam": 1e-4,
    "noise": 0.0,
    "fw_max_iter": 100_000,
    "jobs": 1,
    "no_timing": False,
}
DEFAULTS = {**SOLVER_KEYS, **EXPERIMENT_KEYS}


class UsageError(Exception):
    pass


class SolverFailure(Exception):
    pass


def load_config(path=None, overrides=None):
    """Resolve settings as defaults < JSON file < non-``None`` overrides.

    Returns ``(DcfwConfig, params)`` where ``params`` is the full merged dict.
    Unknown keys and invalid values raise :class:`ValueError`.
    """
    merged = dict(DEFAULTS)
    explicit = set()
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise FileNotFoundError(f"config file not found: {path}")
        data = json.loads(path.read_text())
        if not isinstance(data, dict):
            raise ValueError("config file must hold a JSON object")
        unknown = sorted(set(data) - set(DEFAULTS))
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(unknown)}")
        merged.update(data)
        explicit.update(data)
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    unknown = sorted(set(overrides) - set(DEFAULTS))
    if unknown:
        raise ValueError(f"unknown config keys: {', '.join(unknown)}")
    merged.update(overrides)
    explicit.update(overrides)
    # a tolerance without an explicit mode means fixed-tolerance DC-FW
    if merged["eps"] is not None and "tolerance_mode" not in explicit:
        merged["tolerance_mode"] = "fixed"
    if not 0 < float(merged["beta"]) < 1:
        raise ValueError(f"beta must lie in (0, 1), got {merged['beta']}")
    config = DcfwConfig(
        tolerance_mode=merged["tolerance_mode"],
        eps=merged["eps"],
        beta=float(merged["beta"]),
        eps_final=merged["eps_final"],
        rel_tol=merged["rel_tol"],
        max_outer=int(merged["max_outer"]),
        max_inner=int(merged["max_inner"]),
        max_lmo_calls=merged["max_lmo_calls"],
        rule=StepRule.parse(merged["step_size"]),
        seed=int(merged["seed"]),
    )
    return config, merged


# --- output helpers -----------------------------------------------------------


def _fmt(value):
    if isinstance(value, float):
        return repr(value) if math.isfinite(value) else ("nan" if math.isnan(value) else str(value))
    return value


def write_csv(path, columns, rows):
    """RFC-4180 CSV; ``path`` of ``-`` or ``None`` writes to stdout."""
    if path in (None, "-"):
        fh, close = sys.stdout, False
    else:
        fh, close = open(path, "w", newline=""), True
    try:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(row[c]) for c in columns])
    finally:
        if close:
            fh.close()


# --- qap ----------------------------------------------------------------------


def _load_instances(paths, synthetic, seed):
    from .qap import read_instance, synthetic_instance

    instances = []
    for p in paths or ():
        if not Path(p).is_file():
            raise UsageError(f"input file not found: {p}")
        instances.append(read_instance(p))
    for n in synthetic or ():
        if n < 2:
            raise UsageError("--synthetic sizes must be >= 2")
        instances.append(synthetic_instance(n, seed))
    if not instances:
        raise UsageError("give at least one --input file or --synthetic size")
    return instances


def _best_known(instance):
    from .qap import brute_force

    if instance.best_known is not None:
        return instance.best_known
    if instance.n <= 8:
        return brute_force(instance, objective="qaplib")[1]
    return None


def _run_qap(args):
    """One (instance, solver, seed) run; returns a CSV row dict. Picklable for pools."""
    instance, solver, variant, seed, config, fw_max_iter, no_timing = args
    from .qap import qaplib_objective, relax_and_round

    t0 = time.perf_counter()
    res = relax_and_round(instance, solver, variant, config, seed=seed, fw_max_iter=fw_max_iter)
    seconds = 0.0 if no_timing else time.perf_counter() - t0
    c = res.result.counters
    return {
        "instance": instance.name,
        "solver": solver,
        "variant": variant if solver == "dcfw" else "",
        "seed": seed,
        "outer_iters": len(res.trace),
        "lmo_calls": c.lmo_calls,
        "grad_calls": c.grad_f_calls,
        "subgrad_calls": c.subgrad_g_calls,
        "phi_relaxed": res.phi_relaxed,
        "phi_rounded": res.phi_rounded,
        "qaplib_value": qaplib_objective(instance, res.assignment.perm),
        "seconds": seconds,
    }


def _qap_rows(instances, solvers, variant, seeds, config, params):
    from .qap import assignment_error

    jobs = [(inst, solver, variant, seed, config, int(params["fw_max_iter"]),
             bool(params["no_timing"]))
            for inst in instances for solver in solvers for seed in seeds]
    n_jobs = int(params["jobs"])
    try:
        if n_jobs > 1:
            with ProcessPoolExecutor(max_workers=n_jobs) as pool:
                rows = list(pool.map(_run_qap, jobs))
        else:
            rows = [_run_qap(j) for j in jobs]
    except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        raise SolverFailure(str(exc)) from exc

    by_name = {inst.name: inst for inst in instances}
    for name, inst in by_name.items():
        best = _best_known(inst)
        if best is None:
            best = min(r["qaplib_value"] for r in rows if r["instance"] == name)
        for r in rows:
            if r["instance"] == name:
                r["assignment_error"] = assignment_error(r["qaplib_value"], best)
    rows.sort(key=lambda r: (r["instance"], r["solver"], str(r["variant"]), r["seed"]))
    return rows


def win_tie_loss(rows, tol: float = 1e-9):
    """Compare DC-FW against FW per (instance, seed) on assignment error."""
    fw = {(r["instance"], r["seed"]): r["assignment_error"] for r in rows if r["solver"] == "fw"}
    dc = {(r["instance"], r["seed"]): r["assignment_error"] for r in rows if r["solver"] == "dcfw"}
    table = []
    for key in sorted(set(fw) & set(dc)):
        a, b = fw[key], dc[key]
        if abs(a - b) <= tol * max(1.0, abs(a), abs(b)):
            outcome = "tie"
        else:
            outcome = "win" if b < a else "loss"
        table.append({"instance": key[0], "seed": key[1], "fw_assignment_error": a,
                      "dcfw_assignment_error": b, "outcome": outcome})
    counts = {k: sum(t["outcome"] == k for t in table) for k in ("win", "tie", "loss")}
    return table, counts


def cmd_qap(args) -> int:
    config, params = _resolve(args)
    instances = _load_instances(args.input, args.synthetic, params["seed"])
    solver = params["solver"] or "dcfw"
    solvers = ["fw", "dcfw"] if solver == "both" else [solver]
    if any(s not in ("fw", "dcfw") for s in solvers):
        raise UsageError(f"--solver must be fw, dcfw or both for qap, got {solver!r}")
    seeds = [params["seed"] + i for i in range(int(params["repeats"]))]
    rows = _qap_rows(instances, solvers, int(params["variant"]), seeds, config, params)
    write_csv(args.out, QAP_COLUMNS, rows)
    if len(solvers) == 2:
        _, counts = win_tie_loss(rows)
        print(f"dcfw vs fw: {counts['win']} win, {counts['tie']} tie, {counts['loss']} loss",
              file=sys.stderr)
    return EXIT_OK


def cmd_bench(args) -> int:
    config, params = _resolve(args)
    instances = _load_instances(args.input, args.synthetic, params["seed"])
    seeds = [params["seed"] + i for i in range(int(params["repeats"]))]
    rows = _qap_rows(instances, ["fw", "dcfw"], int(params["variant"]), seeds, config, params)
    table, counts = win_tie_loss(rows)
    write_csv(args.out, QAP_COLUMNS, rows)
    if args.summary:
        write_csv(args.summary, SUMMARY_COLUMNS, table)
    print(f"dcfw vs fw: {counts['win']} win, {counts['tie']} tie, {counts['loss']} loss")
    return EXIT_OK


# --- grid-gaps ----------------------------------------------------------------


def cmd_grid_gaps(args) -> int:
    from .gaps import grid_gaps, sincos_phi
    from .oracles import BoxLinf

    _, params = _resolve(args)
    res = int(params["resolution"])
    if res < 3:
        raise UsageError("--resolution must be >= 3")
    table = grid_gaps(sincos_phi(), BoxLinf(0.0, 1.0, dim=2), math.pi**2, res,
                      prox_tol=params["prox_tol"])
    rows = ({c: float(v) for c, v in zip(GRID_COLUMNS, r)} for r in table)
    write_csv(args.out, GRID_COLUMNS, rows)
    return EXIT_OK


# --- align --------------------------------------------------------------------


def cmd_align(args) -> int:
    from .align import align_oracles, alignment_quality, make_synthetic
    from .baselines import fw_k
    from .solver import dcfw_solve

    config, params = _resolve(args)
    solver = params["solver"] or "dcfw"
    if solver not in ("dcfw", "fwk"):
        raise UsageError(f"--solver must be dcfw or fwk for align, got {solver!r}")
    try:
        problem, X_true = make_synthetic(int(params["d"]), int(params["n"]),
                                         float(params["obs_prob"]), float(params["noise"]),
                                         int(params["seed"]), lam=float(params["lam"]))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    dc = align_oracles(problem)
    x0 = np.zeros((problem.d, problem.d))
    try:
        if solver == "dcfw":
            res = dcfw_solve(dc, x0, config)
        else:
            res = fw_k(dc, x0, max_iter=config.max_outer * config.max_inner, rule=config.rule,
                       rel_tol=config.rel_tol, eps_final=config.eps_final,
                       max_lmo_calls=config.max_lmo_calls)
    except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        raise SolverFailure(str(exc)) from exc
    no_timing = bool(params["no_timing"])
    rows = [{
        "iter": r.outer_iter,
        "fw_gap": r.fw_gap,
        "phi": r.phi,
        # both the subgradient and the LMO take one SVD
        "svd_count": r.counters.subgrad_g_calls + r.counters.lmo_calls,
        "lmo_count": r.counters.lmo_calls,
        "seconds": 0.0 if no_timing else r.elapsed,
    } for r in res.trace]
    write_csv(args.out, ALIGN_COLUMNS, rows)
    q = alignment_quality(res.x_final, problem, X_true)
    c = res.counters
    print(f"{solver}: neighbor_accuracy={q.neighbor_accuracy:.4f} "
          f"relative_error={q.relative_error:.3e} subgrad_calls={c.subgrad_g_calls} "
          f"lmo_calls={c.lmo_calls} stop={res.terminated_by}", file=sys.stderr)
    return EXIT_OK


# --- parser -------------------------------------------------------------------


def _resolve(args):
    overrides = {
        "seed": args.seed,
        "solver": args.solver,
        "variant": args.variant,
        "step_size": args.step_size,
        "eps": args.eps,
        "beta": args.beta,
        "max_outer": args.max_outer,
        "max_inner": args.max_inner,
        "tolerance_mode": args.tolerance,
        "eps_final": args.eps_final,
        "rel_tol": args.rel_tol,
        "max_lmo_calls": args.max_lmo,
        "no_timing": True if args.no_timing else None,
    }
    for key in ("repeats", "jobs", "fw_max_iter", "resolution", "prox_tol", "d", "n",
                "obs_prob", "lam", "noise"):
        overrides[key] = getattr(args, key, None)
    try:
        return load_config(args.config, overrides)
    except (ValueError, FileNotFoundError, json.JSONDecodeError) as exc:
        raise UsageError(str(exc)) from exc


def _shared(p):
    p.add_argument("--seed", type=int, help="base random seed (default 0)")
    p.add_argument("--out", default="-", help="output CSV path (default stdout)")
    p.add_argument("--config", help="JSON file of settings; flags override it")
    p.add_argument("--solver", help="qap: fw, dcfw or both; align: dcfw or fwk")
    p.add_argument("--variant", type=int, choices=(1, 2, 3), help="QAP decomposition variant")
    p.add_argument("--step-size", choices=("linesearch", "dr", "harmonic"))
    p.add_argument("--eps", type=float, help="fixed subproblem tolerance (selects fixed mode)")
    p.add_argument("--beta", type=float, help="adaptive tolerance factor in (0, 1)")
    p.add_argument("--max-outer", type=int)
    p.add_argument("--max-inner", type=int)
    p.add_argument("--tolerance", choices=("adaptive", "fixed"))
    p.add_argument("--eps-final", type=float, help="absolute termination gap")
    p.add_argument("--rel-tol", type=float, help="termination gap relative to the initial gap")
    p.add_argument("--max-lmo", type=int, help="budget of LMO calls per solve")
    p.add_argument("--no-timing", action="store_true", help="write 0 for timings")
    p.add_argument("-v", "--verbose", action="store_true")


def _qap_inputs(p):
    p.add_argument("--input", nargs="+", help="QAPLIB .dat files")
    p.add_argument("--synthetic", type=int, nargs="+", metavar="N",
                   help="add generated instances of these sizes")
    p.add_argument("--repeats", type=int, help="number of seeds starting at --seed")
    p.add_argument("--jobs", type=int, help="worker processes")
    p.add_argument("--fw-max-iter", type=int, help="iteration cap of the FW baseline")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dcfw", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("qap", help="relax-and-round QAP runs")
    _shared(p)
    _qap_inputs(p)
    p.set_defaults(func=cmd_qap)

    p = sub.add_parser("grid-gaps", help="gap_PGM and gap_PPM of sin(pi x1) cos(pi x2)")
    _shared(p)
    p.add_argument("--resolution", type=int, help="points per axis (default 81)")
    p.add_argument("--prox-tol", type=float)
    p.set_defaults(func=cmd_grid_gaps)

    p = sub.add_parser("align", help="synthetic embedding alignment")
    _shared(p)
    p.add_argument("--d", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--obs-prob", type=float)
    p.add_argument("--lam", type=float)
    p.add_argument("--noise", type=float)
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("bench", help="FW vs DC-FW win/tie/loss over instances and seeds")
    _shared(p)
    _qap_inputs(p)
    p.add_argument("--summary", help="CSV path for the per-pair comparison")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"dcfw: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SolverFailure as exc:
        print(f"dcfw: solver failed: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as exc:
        print(f"dcfw: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
