#!/usr/bin/env python3
"""
Command-line interface for niljs.

    niljs check    --input domain.json
    niljs solve    --input domain.json --h 0.05 --out out/
    niljs flux     --input domain.json --h 0.025 --out out/
    niljs sequence --input domain.json --nmax 64 --out out/

Exit codes: 0 ok (divergence found by `sequence` is a result, not an error),
2 domain not admissible, 3 existence or solvability conditions fail,
4 Newton did not converge, 5 no convergence region, 64 bad input.
"""

import argparse
import logging
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional

import numpy as np
import pandas as pd

try:
    from .config.settings import Settings
    from .core import Nil3Kernel, RunResult
    from .errors import InputError, Nil3Error
    from .fem.flux import CONORMAL, VARIATIONAL
    from .utils.logger import RunArtifacts, dump_json
except ImportError:
    # Direct execution fallback
    sys.path.insert(0, str(Path(__file__).parent.parent))
    from niljs.config.settings import Settings
    from niljs.core import Nil3Kernel, RunResult
    from niljs.errors import InputError, Nil3Error
    from niljs.fem.flux import CONORMAL, VARIATIONAL
    from niljs.utils.logger import RunArtifacts, dump_json

logger = logging.getLogger(__name__)

COMMANDS = ("check", "solve", "flux", "sequence")


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on usage errors; niljs reserves 2 for admissibility"""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(InputError.exit_code, f"{self.prog}: error: {message}\n")


def _bool(text: str) -> bool:
    value = text.strip().lower()
    if value in {"1", "true", "yes", "on"}:
        return True
    if value in {"0", "false", "no", "off"}:
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


def get_args(argv: Optional[List[str]] = None) -> argparse.Namespace:
    """Parse command line arguments"""
    parser = _Parser(prog="niljs", description="Jenkins-Serrin constant mean curvature graphs in Nil3(tau)")
    parser.add_argument("command", choices=COMMANDS, help="what to run")
    parser.add_argument("-i", "--input", required=True, help="domain JSON file")
    parser.add_argument("-c", "--config", default="config.toml", help="configuration file (default: config.toml)")
    parser.add_argument("--h", type=float, help="mesh size (overrides config)")
    parser.add_argument("--nmax", type=int, help="largest truncation level; the data level for solve/flux")
    parser.add_argument("--out", default="out", help="output directory (default: out)")
    parser.add_argument("--tol", type=float, help="Newton residual tolerance (overrides config)")
    parser.add_argument("--method", choices=(CONORMAL, VARIATIONAL), default=CONORMAL,
                        help="boundary flux quadrature for the flux command")
    parser.add_argument("--deterministic", type=_bool, help="deterministic reductions and output (default: true)")
    parser.add_argument("--seed", type=int, help="seed for randomized steps (overrides config)")
    parser.add_argument("--verbose", "-v", action="store_true", help="debug logging")
    return parser.parse_args(argv)


@dataclass
class RunConfig:
    command: str
    input: Path
    out: Path
    h: Optional[float] = None
    nmax: Optional[int] = None
    tol: Optional[float] = None
    method: str = CONORMAL
    seed: int = 0

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise InputError(f"unknown command {self.command!r}; use one of {COMMANDS}")
        if not self.input.is_file():
            raise InputError(f"input file {self.input} does not exist")
        if self.h is not None and not self.h > 0:
            raise InputError(f"--h must be positive, got {self.h}")
        if self.nmax is not None and self.nmax <= 0:
            raise InputError(f"--nmax must be positive, got {self.nmax}")
        if self.tol is not None and not self.tol > 0:
            raise InputError(f"--tol must be positive, got {self.tol}")


def build_settings(args: argparse.Namespace) -> Settings:
    settings = Settings.load(args.config)
    if args.deterministic is not None:
        settings.runtime.deterministic = args.deterministic
    if args.seed is not None:
        settings.runtime.seed = args.seed
    if args.verbose:
        settings.logging.console_level = "DEBUG"
    try:
        settings.validate()
    except ValueError as e:
        raise InputError(f"invalid configuration: {e}") from e
    return settings


def cmd_check(kernel: Nil3Kernel, config: RunConfig, artifacts: RunArtifacts) -> RunResult:
    dom = kernel.load(str(config.input))
    result = kernel.check(dom)
    result.artifacts["report"] = artifacts.write_report("check", result.report)
    return result


def cmd_solve(kernel: Nil3Kernel, config: RunConfig, artifacts: RunArtifacts) -> RunResult:
    dom = kernel.load(str(config.input))
    solution = kernel.solve(dom, config.h, config.nmax, kernel.solve_options(newton_tol=config.tol))
    paths = {
        "field": artifacts.write_frame("field", solution.frame()),
        "mesh": artifacts.write_frame("triangles", solution.mesh.triangle_frame()),
        "report": artifacts.write_report("solve", solution.report),
    }
    return RunResult.success_result("solve", solution.report, paths)


def cmd_flux(kernel: Nil3Kernel, config: RunConfig, artifacts: RunArtifacts) -> RunResult:
    dom = kernel.load(str(config.input))
    report, solution = kernel.flux(dom, config.h, config.nmax, kernel.solve_options(newton_tol=config.tol),
                                 method=config.method)
    paths = {
        "field": artifacts.write_frame("field", solution.frame()),
        "report": artifacts.write_report("flux", report),
    }
    return RunResult.success_result("flux", report, paths)


def cmd_sequence(kernel: Nil3Kernel, config: RunConfig, artifacts: RunArtifacts) -> RunResult:
    dom = kernel.load(str(config.input))
    outcome = kernel.sequence(dom, config.h, config.nmax, kernel.solve_options(newton_tol=config.tol))
    run = outcome.run
    paths = {
        "report": artifacts.write_report("divergence", outcome.divergence),
        "flux": artifacts.write_frame("flux_trends", run.flux_frame()),
        "field": artifacts.write_frame("field_last", run.fields[-1].frame()),
    }
    if outcome.limit is not None:
        frame = outcome.limit.frame()
        frame["converged"] = np.asarray(outcome.limit.mask, dtype=bool)
        paths["limit"] = artifacts.write_frame("limit", frame)
    bounds = pd.DataFrame([{"n": n, "arc_id": arc_id, "min": lo, "max": hi}
                           for arc_id, pairs in run.c_bounds.items()
                           for n, (lo, hi) in zip(run.n_values, pairs)], columns=["n", "arc_id", "min", "max"])
    paths["c_bounds"] = artifacts.write_frame("c_bounds", bounds)
    return RunResult.success_result("sequence", outcome.divergence, paths)


HANDLERS = {"check": cmd_check, "solve": cmd_solve, "flux": cmd_flux, "sequence": cmd_sequence}


def run(argv: Optional[List[str]] = None) -> int:
    """Run one command and return its exit code"""
    args = get_args(argv)
    try:
        settings = build_settings(args)
        kernel = Nil3Kernel(settings)
        kernel.logger.debug("%s %s (config %s)", args.command, args.input, args.config)
        config = RunConfig(command=args.command, input=Path(args.input), out=Path(args.out), h=args.h,
                           nmax=args.nmax, tol=args.tol, method=args.method, seed=settings.runtime.seed)
        np.random.seed(config.seed)
        artifacts = RunArtifacts(config.out, task_name=config.command, deterministic=settings.runtime.deterministic)
    except Nil3Error as e:
        print(f"niljs: {e}", file=sys.stderr)
        return e.exit_code

    try:
        result = HANDLERS[config.command](kernel, config, artifacts)
    except Nil3Error as e:
        logger.error("%s failed: %s", config.command, e)
        print(f"niljs: {e}", file=sys.stderr)
        artifacts.write_manifest(e.exit_code, {"error": str(e)})
        return e.exit_code

    artifacts.write_manifest(result.exit_code, {} if result.success else {"error": result.error})
    if result.report is not None:
        sys.stdout.write(dump_json(result.report))
    if not result.success:
        print(f"niljs: {result.error}", file=sys.stderr)
    return result.exit_code


def main():
    """Main CLI entry point"""
    try:
        code = run()
    except KeyboardInterrupt:
        print("\nInterrupted by user", file=sys.stderr)
        code = 130
    sys.exit(code)


if __name__ == "__main__":
    main()
