"""Command-line front end: inspect spline spaces, run experiments, export data.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.  The
default output directory can be overridden with the SPLINETD_OUT environment
variable.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .config import config_hash, load_config, resolved_dict
from .continuity import build_smoothness_matrix
from .errors import ConfigError, NumericalFailure, SplineTDError
from .estimator import Estimator
from .harness import build_agent, run_experiment_I, run_experiment_II
from .spline import SplineFunction

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _default_out(experiment: str, variant: str, seed: int) -> Path:
    base = Path(os.environ.get("SPLINETD_OUT", "runs"))
    return base / f"exp{experiment}_{variant}_seed{seed}"


def cmd_space(args) -> int:
    cfg = load_config(args.config)
    agent = build_agent(cfg)
    space = agent.space
    smoothness = build_smoothness_matrix(space)
    projector = agent.projector
    free = space.ahat - projector.rank_H
    print(f"J={space.triangulation.n_simplices} dhat={space.dhat} ahat={space.ahat} "
          f"rank_H={projector.rank_H} free={free}")
    from . import reports

    if args.bnet_csv:
        c = None
        if args.checkpoint:
            est = Estimator.load(args.checkpoint, space, projector)
            c = est.c
        reports.write_bnet_csv(args.bnet_csv, space.bnet_table(c))
        print(f"wrote b-net table to {args.bnet_csv}")
    if args.dump_h:
        reports.write_matrix_csv(args.dump_h, smoothness.H)
        print(f"wrote smoothness matrix to {args.dump_h}")
    if args.dump_z:
        reports.write_matrix_csv(args.dump_z, projector.Z)
        print(f"wrote null-space projector to {args.dump_z}")
    return EXIT_OK


def _run_one(config_path, experiment: str, variant: str | None, seed: int | None,
             out_dir: str | None, trajectories: bool, figures: bool,
             checkpoint: str | None) -> dict:
    overrides = {}
    if variant:
        overrides["experiment.variant"] = variant
    if seed is not None:
        overrides["experiment.master_seed"] = str(seed)
    cfg = load_config(config_path, overrides)
    out = Path(out_dir) if out_dir else _default_out(experiment, cfg.variant, cfg.master_seed)
    out.mkdir(parents=True, exist_ok=True)

    if experiment == "I":
        result = run_experiment_I(cfg, record_trajectories=trajectories)
    else:
        save_ckpt = None if checkpoint else str(out / "pretrain_checkpoint.npz")
        result = run_experiment_II(cfg, checkpoint=checkpoint,
                                   record_trajectories=trajectories,
                                   save_checkpoint=save_ckpt)

    value_fn = None
    bounds = None
    if figures and result.final_c is not None:
        agent = build_agent(cfg)
        bounds = agent.space.triangulation.bounds
        fn = SplineFunction(agent.space, np.asarray(result.final_c))
        value_fn = fn.evaluate

    from . import reports

    reports.write_run_outputs(
        out, result, resolved_dict(cfg), config_path, config_hash(cfg), __version__,
        value_fn=value_fn, bounds=bounds, trajectories=result.trajectories,
        render_figures=figures)
    return result.summary


def cmd_run(args) -> int:
    seeds = args.seed if args.seed else [None]
    jobs = []
    for seed in seeds:
        out_dir = args.out
        if out_dir and len(seeds) > 1:
            out_dir = str(Path(args.out) / f"seed{seed}")
        jobs.append((args.config, args.experiment, args.variant, seed, out_dir,
                     args.trajectories, not args.no_figures, args.checkpoint))

    if args.parallel > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.parallel) as pool:
            summaries = list(pool.map(_run_one_star, jobs))
    else:
        summaries = [_run_one_star(job) for job in jobs]
    for summary in summaries:
        print(f"experiment {summary['experiment']} variant={summary['variant']} "
              f"seed={summary['master_seed']}: "
              f"mean t_up = {summary['t_up_mean_s']:.2f} s, "
              f"std = {summary['t_up_std_s']:.2f} s, "
              f"diverged = {summary['diverged_trials']}")
    return EXIT_OK


def _run_one_star(job) -> dict:
    return _run_one(*job)


def cmd_export_value(args) -> int:
    cfg = load_config(args.config)
    agent = build_agent(cfg)
    estimator = Estimator.load(args.checkpoint, agent.space, agent.projector)
    fn = SplineFunction(agent.space, estimator.c)
    (lo, hi) = agent.space.triangulation.bounds
    thetas = np.linspace(lo[0], hi[0], args.grid[0])
    rates = np.linspace(lo[1], hi[1], args.grid[1])
    rows = []
    skipped = 0
    from .errors import OutOfDomain

    for td in rates:
        for th in thetas:
            try:
                value = fn.evaluate((th, td))
                grad = fn.gradient((th, td))
            except OutOfDomain:
                skipped += 1
                continue
            rows.append((th, td, value, grad[0], grad[1]))
    from . import reports

    reports.write_value_grid_csv(args.out, rows)
    if skipped:
        print(f"warning: {skipped} grid points outside the domain were omitted",
              file=sys.stderr)
    print(f"wrote {len(rows)} rows to {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="splinetd",
        description="Simplex-spline value-function learning on the pendulum swing-up")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_space = sub.add_parser("space", help="report spline space structural constants")
    p_space.add_argument("--config", default=None, help="config file (defaults built in)")
    p_space.add_argument("--bnet-csv", default=None, help="write the b-net table here")
    p_space.add_argument("--checkpoint", default=None,
                         help="fill b-net coefficients from this checkpoint")
    p_space.add_argument("--dump-h", default=None, help="write H as CSV (debug)")
    p_space.add_argument("--dump-z", default=None, help="write Z as CSV (debug)")
    p_space.set_defaults(func=cmd_space)

    p_run = sub.add_parser("run", help="run a learning experiment")
    p_run.add_argument("--config", default=None)
    p_run.add_argument("--experiment", choices=("I", "II"), default="I")
    p_run.add_argument("--variant", choices=("rlstd", "rlstd_forget"), default=None,
                       help="override the configured variant")
    p_run.add_argument("--seed", type=int, nargs="*", default=None,
                       help="master seed(s); several seeds fan out replicas")
    p_run.add_argument("--out", default=None, help="output directory")
    p_run.add_argument("--trajectories", action="store_true",
                       help="also write per-trial trajectory CSVs")
    p_run.add_argument("--no-figures", action="store_true",
                       help="skip PNG rendering (CSV output only)")
    p_run.add_argument("--checkpoint", default=None,
                       help="experiment II: reuse this pretraining checkpoint")
    p_run.add_argument("--parallel", type=int, default=1,
                       help="worker processes for multi-seed runs")
    p_run.set_defaults(func=cmd_run)

    p_export = sub.add_parser("export-value",
                              help="sample a checkpointed value function on a grid")
    p_export.add_argument("--config", default=None)
    p_export.add_argument("--checkpoint", required=True)
    p_export.add_argument("--grid", type=int, nargs=2, default=(65, 65),
                          metavar=("NTHETA", "NTHETADOT"))
    p_export.add_argument("--out", required=True, help="output CSV path")
    p_export.set_defaults(func=cmd_export_value)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except SplineTDError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
