"""Command-line interface: validate-config, run, sweep, gradcheck, plot.

Exit codes: 0 success, 1 usage or configuration error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import re
import sys
from dataclasses import replace

import numpy as np

from . import experiment as expmod
from .config import ConfigError, parse_config, system_architecture
from .objective import effective_gains, fd_check
from .optimizer import waterfill
from .plotting import PlotError, emit_plot
from .surface import make_feasible_random

GRADCHECK_MAX_ERROR = 1e-4


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would sys.exit(2); we want exit code 1
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="bdris", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_val = sub.add_parser("validate-config", help="parse a config file and report problems")
    p_val.add_argument("config")

    p_run = sub.add_parser("run", help="run the experiment described by a config file")
    p_run.add_argument("config")
    p_run.add_argument("--seed", type=int, default=None, help="override the base seed")
    p_run.add_argument("--out", default=None, help="override the CSV output path")
    p_run.add_argument("--workers", type=int, default=1)
    p_run.add_argument(
        "--timing", action="store_true", help="write measured wall times (breaks byte reproducibility)"
    )

    p_sweep = sub.add_parser("sweep", help="run with an element-count sweep")
    p_sweep.add_argument("config")
    p_sweep.add_argument("--param", default="K=8:32:4", help="sweep spec, e.g. K=8:32:4 (inclusive)")
    p_sweep.add_argument("--seed", type=int, default=None)
    p_sweep.add_argument("--out", default=None)
    p_sweep.add_argument("--workers", type=int, default=1)
    p_sweep.add_argument("--timing", action="store_true")

    p_grad = sub.add_parser("gradcheck", help="finite-difference check of the phase gradient")
    p_grad.add_argument("--K", type=int, default=6, dest="num_elements")
    p_grad.add_argument("--N", type=int, default=3, dest="num_ues")
    p_grad.add_argument("--seed", type=int, default=1)

    p_plot = sub.add_parser("plot", help="plot a results CSV")
    p_plot.add_argument("--in", dest="in_path", required=True)
    p_plot.add_argument("--out", dest="out_path", required=True)
    return parser


def _parse_sweep_param(spec: str) -> tuple[int, ...]:
    match = re.fullmatch(r"K=(\d+):(\d+):(\d+)", spec.strip())
    if not match:
        raise _UsageError(f"--param must look like K=START:STOP:STEP, got {spec!r}")
    start, stop, step = (int(g) for g in match.groups())
    if step < 1 or stop < start:
        raise _UsageError(f"empty sweep range {spec!r}")
    return tuple(range(start, stop + 1, step))


def _load_config(path: str):
    with open(path) as handle:
        return parse_config(handle.read())


def _apply_overrides(cfg, args, elements=None):
    if args.seed is not None:
        cfg = replace(cfg, base_seed=args.seed)
    if args.out is not None:
        cfg = replace(cfg, output=replace(cfg.output, csv_path=args.out))
    if elements is not None:
        cfg = replace(cfg, system=replace(cfg.system, elements=elements))
        cfg = replace(
            cfg,
            scenario=replace(
                cfg.scenario,
                array=expmod.square_grid(elements[0], cfg.scenario.array.spacing_wavelengths),
            ),
        )
    return cfg


def _run_and_report(cfg, args) -> int:
    table = expmod.run_experiment(cfg, workers=args.workers)
    expmod.write_csv(table, cfg.output.csv_path, measured_timing=args.timing)
    wall = [row.wall_ms for row in table.rows]
    print(f"wrote {len(table.rows)} rows to {cfg.output.csv_path}")
    print(f"mean wall time per row: {np.mean(wall):.1f} ms")
    for row in expmod.summarize(table):
        spread = "" if row.std_se != row.std_se else f" +- {row.std_se:.3f}"
        print(
            f"{row.framework:6s} K={row.num_elements:<3d} Pt={row.pt_dbm:g} dBm: "
            f"SE {row.mean_se:.4f}{spread} b/s/Hz over {row.count} realizations"
        )
    return 0


def _cmd_validate(args) -> int:
    try:
        cfg = _load_config(args.config)
    except ConfigError as exc:
        print("configuration invalid:", file=sys.stderr)
        for issue in exc.issues:
            print(f"  {issue}", file=sys.stderr)
        return 1
    cells = (
        len(cfg.frameworks) * len(cfg.system.elements) * len(cfg.pt_dbm) * cfg.realizations
    )
    print(f"OK: {cells} result rows over elements={list(cfg.system.elements)}, "
          f"pt_dbm={list(cfg.pt_dbm)}, realizations={cfg.realizations}")
    return 0


def _cmd_gradcheck(args) -> int:
    base = parse_config("")
    cfg = replace(
        base,
        system=replace(
            base.system,
            elements=(args.num_elements,),
            num_ues=args.num_ues,
            num_rbs=max(args.num_ues, base.system.num_rbs),
        ),
    )
    cfg = replace(
        cfg,
        scenario=replace(
            cfg.scenario,
            num_ues=args.num_ues,
            array=expmod.square_grid(args.num_elements, cfg.scenario.array.spacing_wavelengths),
        ),
    )
    channels = expmod.realize_channels(cfg, args.num_elements, args.seed)
    state = make_feasible_random(
        system_architecture(cfg.system), cfg.system.mode, args.num_elements, args.seed
    )
    pa = waterfill(effective_gains(channels, state), expmod.dbm_to_mw(30.0), channels.noise_mw)
    error = fd_check(channels, state, pa, step=1e-6)
    print(f"max relative gradient error: {error:.3e}")
    return 0 if error <= GRADCHECK_MAX_ERROR else 2


def cli(argv) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)

    try:
        if args.command == "validate-config":
            return _cmd_validate(args)
        if args.command == "run":
            cfg = _apply_overrides(_load_config(args.config), args)
            return _run_and_report(cfg, args)
        if args.command == "sweep":
            elements = _parse_sweep_param(args.param)
            cfg = _apply_overrides(_load_config(args.config), args, elements=elements)
            return _run_and_report(cfg, args)
        if args.command == "gradcheck":
            return _cmd_gradcheck(args)
        if args.command == "plot":
            table = expmod.read_csv(args.in_path)
            emit_plot(expmod.summarize(table), args.out_path)
            print(f"wrote {args.out_path}")
            return 0
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ConfigError as exc:
        print("configuration invalid:", file=sys.stderr)
        for issue in exc.issues:
            print(f"  {issue}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (PlotError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    raise AssertionError("unreachable")


def main() -> None:
    sys.exit(cli(sys.argv[1:]))
