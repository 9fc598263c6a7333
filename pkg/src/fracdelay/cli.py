"""Command line entry point: ``fracdelay solve <config> [options]``."""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
import time
from typing import Sequence

from .config import RunConfig, load_config, parse_config
from .errors import FracDelayError, ValidationError
from .pipeline import EXIT_DIAGNOSTICS, EXIT_ERROR, EXIT_OK, RunOutput, run, write_outputs

__all__ = [
    "RunConfig",
    "RunOutput",
    "parse_config",
    "load_config",
    "run",
    "write_outputs",
    "build_parser",
    "main",
    "EXIT_OK",
    "EXIT_DIAGNOSTICS",
    "EXIT_ERROR",
]

log = logging.getLogger("fracdelay")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fracdelay",
        description="Spectral method-of-steps solver for time-fractional delay PDEs on a box.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    solve = sub.add_parser("solve", help="run a configuration file")
    solve.add_argument("config", help="YAML configuration file")
    solve.add_argument("--output-dir", help="directory for output files (overrides the config)")
    solve.add_argument("--oracle", action="store_true", help="cross-check leading modes against the reference solvers")
    solve.add_argument("--modes-max", type=int, metavar="M", help="override the truncation radius")
    solve.add_argument("--quiet", action="store_true", help="print errors only")
    return parser


def _apply_overrides(cfg: RunConfig, args: argparse.Namespace) -> RunConfig:
    num = cfg.numerics
    if args.oracle:
        num = dataclasses.replace(num, oracle=True)
    if args.modes_max is not None:
        M = args.modes_max
        if M < 1:
            raise ValidationError([f"--modes-max: truncation radius must be >= 1, got {M}"])
        too_small = [j for j, n in enumerate(num.grid) if n < 4 * M]
        if too_small:
            raise ValidationError([f"--modes-max: grid on axis {j} has fewer than 4*M nodes" for j in too_small])
        ex = tuple(sorted({max(1, M // 4), max(1, M // 2), M}))
        num = dataclasses.replace(num, M=M, existence_M=ex)
    return dataclasses.replace(cfg, numerics=num)


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.ERROR if args.quiet else logging.INFO,
        format="%(levelname)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        cfg = _apply_overrides(load_config(args.config), args)
        for w in cfg.warnings:
            log.warning(w)
        start = time.perf_counter()
        out = run(cfg)
        paths = write_outputs(out, cfg, args.output_dir)
    except ValidationError as exc:
        for p in exc.problems:
            log.error(p)
        return EXIT_ERROR
    except FracDelayError as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return EXIT_ERROR
    log.info("solved %d of %d modes in %.2f s", out.diagnostics["modes_solved"],
             out.diagnostics["modes_total"], time.perf_counter() - start)
    for name, path in paths.items():
        log.info("wrote %s: %s", name, path)
    if out.exit_code == EXIT_DIAGNOSTICS:
        log.warning(
            "diagnostics failed (rho = %.6g, embedding flags %s); results written",
            out.diagnostics["riesz"]["rho"], out.diagnostics["embedding"]["flags"],
        )
    return out.exit_code


if __name__ == "__main__":
    sys.exit(main())
