"""Command-line front end.

Subcommands::

    cladp run         --config PATH [--out DIR] [--seed N]
    cladp check-gains --config PATH [--out DIR] [--seed N]
    cladp oracle      --config PATH [--out DIR]

``run`` always writes ``trajectory.csv`` and ``summary.json`` into the output
directory (default ``./out``). ``check-gains`` and ``oracle`` print their JSON
document on stdout unless ``--out`` is given, in which case they write
``gain_report.json`` / ``oracle.json`` there instead. Diagnostics go to stderr.
"""

import argparse
import json
import logging
import os
import sys
import warnings

from . import analysis
from ._validation import ContractError
from .config import parse_config
from .sim import SimulationError, run_experiment

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_ABORT = 2
EXIT_GAINS_FAILED = 3
DEFAULT_OUT = "out"

log = logging.getLogger("cladp")


class _Parser(argparse.ArgumentParser):
    """Argument parser that exits with status 1 on bad flags."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        sys.exit(EXIT_USAGE)


def build_parser():
    parser = _Parser(prog="cladp", description="Concurrent-learning approximate optimal "
                                               "regulation: simulation and gain checks.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, helptext in (("run", "simulate the closed loop"),
                           ("check-gains", "verify the sufficient gain conditions"),
                           ("oracle", "print the LQR oracle (P, K, W*)")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", required=True, metavar="PATH")
        p.add_argument("--out", default=None, metavar="DIR",
                       help=f"output directory (default ./{DEFAULT_OUT} for run)")
        p.add_argument("--seed", type=int, default=None, metavar="N",
                       help="override [sim].seed")
    return parser


def _emit(document, out_dir, filename):
    text = json.dumps(document, indent=2)
    if out_dir is None:
        sys.stdout.write(text + "\n")
        return
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, filename), "w", encoding="utf-8") as fh:
        fh.write(text + "\n")


def _gain_inputs_or_none(cfg):
    try:
        return cfg.gain_inputs()
    except ContractError as exc:
        log.warning("gain report skipped: %s", exc)
        return None


def cmd_run(cfg, out_dir):
    out_dir = DEFAULT_OUT if out_dir is None else out_dir
    os.makedirs(out_dir, exist_ok=True)
    problem = cfg.problem()
    inputs = None if cfg.sim.identifier_only else _gain_inputs_or_none(cfg)
    orc = cfg.oracle()
    W_star = None if orc is None else orc.W_star
    try:
        trajectory, summary = run_experiment(cfg.sim, problem, W_star=W_star,
                                             gain_inputs=inputs)
    except SimulationError as exc:
        log.error("simulation aborted: %s", exc)
        if exc.log is not None and len(exc.log):
            exc.log.to_csv(os.path.join(out_dir, "trajectory.csv"))
        return EXIT_ABORT
    trajectory.to_csv(os.path.join(out_dir, "trajectory.csv"))
    report = summary.gain_report
    if report is not None and not report.passed:
        log.warning("sufficient gain conditions not satisfied (margins %s)",
                    report.to_dict()["margins"])
    _emit(summary.to_dict(), out_dir, "summary.json")
    return EXIT_OK


def gain_report_from_config(cfg):
    """Gain report for a configuration.

    Certificates missing from ``[analysis]`` (``y_under``, ``c_under``) are
    taken from a closed-loop run of the configured experiment.
    """
    inputs = cfg.gain_inputs()
    problem = cfg.problem()
    y, c = inputs.y_under, inputs.c_under
    if y is None or c is None:
        _, summary = run_experiment(cfg.sim, problem)
        y = summary.min_y_under if y is None else y
        c = summary.min_c_value if c is None else c
    return analysis.gain_report_for(inputs, problem, y_under=y, c_under=c,
                                    resolution=cfg.analysis["resolution"])


def cmd_check_gains(cfg, out_dir):
    try:
        report = gain_report_from_config(cfg)
    except SimulationError as exc:
        log.error("simulation for certificates aborted: %s", exc)
        return EXIT_ABORT
    _emit(report.to_dict(), out_dir, "gain_report.json")
    for flag in report.flags:
        log.warning("%s", flag)
    return EXIT_OK if report.passed else EXIT_GAINS_FAILED


def cmd_oracle(cfg, out_dir):
    orc = cfg.oracle()
    if orc is None:
        log.error("plant %r with this basis has no LQR oracle", cfg.model.name)
        return EXIT_USAGE
    _emit(orc.to_dict(), out_dir, "oracle.json")
    return EXIT_OK


COMMANDS = {"run": cmd_run, "check-gains": cmd_check_gains, "oracle": cmd_oracle}


def main(argv=None):
    """Entry point; returns the process exit code."""
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s: %(message)s"))
    log.addHandler(handler)
    log.setLevel(logging.INFO)
    log.propagate = False
    try:
        return _main(argv)
    finally:
        log.removeHandler(handler)


def _main(argv):
    args = build_parser().parse_args(argv)
    try:
        cfg = parse_config(args.config)
    except OSError as exc:
        log.error("cannot read config: %s", exc)
        return EXIT_USAGE
    except ContractError as exc:
        log.error("invalid config: %s", exc)
        return EXIT_USAGE
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        code = COMMANDS[args.command](cfg, args.out)
    for w in caught:
        log.warning("%s", w.message)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
