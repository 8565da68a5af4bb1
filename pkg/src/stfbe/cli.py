"""Command line driver: ``stfbe <subcommand> [--config PATH] [--seed N] [--workers N] [--out DIR]``.

Exit status: 0 success, 1 a property check failed, 2 invalid configuration,
3 numerical failure (details in ``diagnostics.json``).
"""

import argparse
import csv
import hashlib
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .config import ConfigError, ExperimentConfig
from .exceptions import AdmissibilityError, DomainError, NumericalFailure
from .frac_calculus import run_property_battery
from .kernels import p_profile, q_profile, q_symbol
from .mittag_leffler import mittag_leffler
from .noise import sample_noise
from .regularity import (
    default_probes,
    estimate_holder_space,
    estimate_holder_time,
    regime_scan,
    resolve_workers,
    theoretical_exponents,
)
from .solver import load_path, save_path, solve_stfbe, write_sup_norm_csv

SCHEMA = "# schema=v1\n"
COMMANDS = ("ml-eval", "kernel-table", "frac-check", "simulate", "holder", "scan-beta")


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        fh.write(SCHEMA)
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows([_fmt(v) for v in row] for row in rows)


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(out, command, cfg, seeds, outputs):
    manifest = {
        "command": command,
        "version": __version__,
        "config": cfg.values,
        "seeds": seeds,
        "outputs": {name: _sha256(os.path.join(out, name)) for name in sorted(outputs)},
    }
    with open(os.path.join(out, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=2)
        fh.write("\n")


# --------------------------------------------------------------------------
# subcommands; each returns (exit code, output file names, seeds)

def cmd_ml_eval(cfg, args):
    a, b = float(cfg["ml.a"]), float(cfg["ml.b"])
    z = np.asarray(cfg["ml.z"], dtype=float)
    vals = mittag_leffler(z, a, b)
    rows = [(a, b, zi, vi) for zi, vi in zip(z, np.atleast_1d(vals))]
    _write_csv(os.path.join(args.out, "ml_eval.csv"), ("a", "b", "z", "value"), rows)
    for row in rows:
        print(",".join(_fmt(v) for v in row))
    return 0, ["ml_eval.csv"], []


def cmd_kernel_table(cfg, args):
    orders = cfg.orders()
    d = cfg.grid().d
    kind = cfg["kernel.kind"]
    rows = []
    radii = np.asarray(cfg["kernel.radii"], dtype=float)
    for t in cfg["kernel.times"]:
        t = float(t)
        if kind == "symbol":
            vals = q_symbol(orders, t, radii)
            header = ("t", "xi_sq", "value")
        else:
            prof = p_profile if kind == "p" else q_profile
            vals = prof(orders, d, t, radii)
            header = ("t", "r", "value")
        rows.extend((t, r, v) for r, v in zip(radii, vals))
    _write_csv(os.path.join(args.out, "kernel_table.csv"), header, rows)
    return 0, ["kernel_table.csv"], []


def cmd_frac_check(cfg, args):
    results = run_property_battery(n=int(cfg["frac.n"]), t_end=float(cfg["frac.t_end"]),
                                   seed=int(cfg["frac.seed"]))
    rows = [(r.name, r.value, r.tolerance, r.passed) for r in results]
    _write_csv(os.path.join(args.out, "frac_check.csv"), ("check", "value", "tolerance", "passed"), rows)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name}: {r.value:.3g} (tolerance {r.tolerance:.3g})")
    return (0 if all(r.passed for r in results) else 1), ["frac_check.csv"], []


def _simulate_one(task):
    cfg_values, seed = task
    cfg = ExperimentConfig(cfg_values)
    grid = cfg.grid()
    k_modes = cfg["noise.k_modes"]
    sigma = cfg.sigma()
    noise = None if sigma.is_zero else sample_noise(grid, k_modes, seed)
    return solve_stfbe(grid, cfg.orders(), cfg.coeffs(), sigma, cfg.u0(grid), noise=noise,
                       cutoff_m=cfg["cutoff.m"], blowup_threshold=float(cfg["solver.blowup_threshold"]),
                       store_every=int(cfg["solver.store_every"]), seed=seed, validate=False)


def cmd_simulate(cfg, args):
    seeds = cfg.seeds(args.seed)
    tasks = [(cfg.values, s) for s in seeds]
    workers = resolve_workers(args.workers)
    if workers == 1:
        paths = [_simulate_one(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            paths = list(pool.map(_simulate_one, tasks))
    outputs = []
    n_blown = 0
    for i, path in enumerate(paths):
        name = f"path_{i:04d}.stfp"
        save_path(os.path.join(args.out, name), path)
        csv_name = f"sup_norm_{i:04d}.csv"
        write_sup_norm_csv(os.path.join(args.out, csv_name), path)
        outputs += [name, csv_name]
        n_blown += bool(path.blew_up)
    print(f"simulated {len(paths)} paths ({n_blown} blew up) into {args.out}")
    return 0, outputs, seeds


def _archives(directory):
    names = sorted(n for n in os.listdir(directory) if n.startswith("path_") and n.endswith(".stfp"))
    if not names:
        raise ConfigError(f"no path archives in {directory}", condition="archives present")
    return [load_path(os.path.join(directory, n)) for n in names]


def cmd_holder(cfg, args):
    source = args.input or args.out
    paths = _archives(source)
    grid = paths[0].grid
    est_params = {"min_lag": int(cfg["holder.min_lag"]), "n_bootstrap": int(cfg["holder.n_bootstrap"])}
    probes = default_probes(grid, int(cfg["holder.n_probes"]))
    est_t = estimate_holder_time(paths, probes, **est_params)
    est_s = estimate_holder_space(paths, cfg["holder.probe_times"], **est_params)
    theory = theoretical_exponents(paths[0].orders, grid.d)
    _write_csv(os.path.join(args.out, "holder_summary.csv"),
               ("axis", "estimate", "stderr", "theory", "lag_min", "lag_max", "n_paths", "flag"),
               [("time", est_t.exponent, est_t.stderr, theory.time_exp, *est_t.fit_range,
                 est_t.n_paths, est_t.flag),
                ("space", est_s.exponent, est_s.stderr, theory.space_exp, *est_s.fit_range,
                 est_s.n_paths, est_s.flag)])
    for axis, est in (("time", est_t), ("space", est_s)):
        _write_csv(os.path.join(args.out, f"holder_lags_{axis}.csv"), ("lag", "moment", "flag"), est.rows())
        print(f"{axis}: {est.exponent:.4f} +- {est.stderr:.4f} [{est.flag}]")
    outputs = ["holder_summary.csv", "holder_lags_time.csv", "holder_lags_space.csv"]
    return 0, outputs, [p.seed for p in paths]


def cmd_scan_beta(cfg, args):
    o = cfg.orders()
    grid = cfg.grid()
    base = cfg["run.seed_base"] if args.seed is None else args.seed
    runs = int(cfg["scan.runs"])
    rows = regime_scan(o.alpha, cfg["scan.betas"], d=grid.d, runs=runs, grid=grid, seed_base=base,
                       kappa0=o.kappa0, a=float(cfg["coeffs.a"]), sigma=cfg.sigma(),
                       n_probes=int(cfg["holder.n_probes"]), workers=args.workers)
    keys = ("beta", "theory_time", "moment_time", "estimate", "stderr", "flag")
    _write_csv(os.path.join(args.out, "scan_beta.csv"), keys, [[r[k] for k in keys] for r in rows])
    for r in rows:
        print(f"beta={r['beta']:.3f} theory={r['theory_time']:.4f} estimate={r['estimate']:.4f} "
              f"+- {r['stderr']:.4f}")
    return 0, ["scan_beta.csv"], [base + i for i in range(runs)]


HANDLERS = {
    "ml-eval": cmd_ml_eval,
    "kernel-table": cmd_kernel_table,
    "frac-check": cmd_frac_check,
    "simulate": cmd_simulate,
    "holder": cmd_holder,
    "scan-beta": cmd_scan_beta,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="stfbe", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON file of dotted keys")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override one config key (value parsed as JSON)")
        p.add_argument("--seed", type=int, default=None, help="seed base (u64)")
        p.add_argument("--workers", type=int, default=None,
                       help="worker processes (default $STFB_WORKERS or 1)")
        p.add_argument("--out", default="stfb_out", help="output directory")
        if name == "holder":
            p.add_argument("--input", default=None, help="directory with path archives (default --out)")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        overrides = ExperimentConfig.parse_overrides(args.set)
        if args.seed is not None:
            if not 0 <= args.seed < 2 ** 64:
                raise ConfigError("--seed must be an unsigned 64-bit integer", condition="seed u64")
            overrides["run.seed_base"] = args.seed
        if args.config:
            cfg = ExperimentConfig.from_file(args.config, overrides)
        else:
            cfg = ExperimentConfig.from_dict(overrides)
        resolve_workers(args.workers)
    except (ConfigError, ValueError) as exc:
        condition = getattr(exc, "condition", str(exc))
        print(f"invalid configuration: {exc} [violated: {condition}]", file=sys.stderr)
        return 2
    os.makedirs(args.out, exist_ok=True)
    try:
        code, outputs, seeds = HANDLERS[args.command](cfg, args)
    except (ConfigError, AdmissibilityError) as exc:
        print(f"invalid configuration: {exc} [violated: {exc.condition}]", file=sys.stderr)
        return 2
    except (NumericalFailure, DomainError, FloatingPointError) as exc:
        # DomainError covers data-dependent failures such as degenerate increments
        diag = {"command": args.command, "error": type(exc).__name__, "message": str(exc),
                "diagnostics": getattr(exc, "diagnostics", {})}
        with open(os.path.join(args.out, "diagnostics.json"), "w") as fh:
            json.dump(diag, fh, sort_keys=True, indent=2, default=str)
        print(f"numerical failure: {exc} (see diagnostics.json)", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return 2
    _write_manifest(args.out, args.command, cfg, seeds, outputs)
    return code


if __name__ == "__main__":
    sys.exit(main())
