"""
niljs core interface.

Nil3Kernel ties the settings to the library: it builds meshes, runs the
checks, solves, flux balances and Jenkins-Serrin sequences, and returns
plain results that the CLI turns into artifacts and exit codes.
"""

import logging
import time
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple

from pydantic import BaseModel, Field

from .config.settings import Settings
from .errors import InputError, NonConvergence
from .fem.flux import CONORMAL, FluxReport, flux_balance
from .fem.mesh import Mesh, build_mesh
from .fem.solver import BoundaryData, ScalarField, SolveOptions, boundary_values, solve_dirichlet
from .geometry.arcs import ArcLabel
from .geometry.domain import AdmissibilityReport, DirichletReport, DomainSpec, check_admissible, \
    check_dirichlet_conditions
from .geometry.polygons import SolvabilityReport, check_solvability, enumerate_polygons
from .geometry.schema import load_domain
from .sequence.jenkins_serrin import (SEQUENCE_OPTIONS, DivergenceReport, SequenceRun, auto_truncation,
                                      detect_divergence, geometric_n_values, limit_solution, run_sequence)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ADMISSIBILITY = 2
EXIT_CONDITIONS = 3


class CheckReport(BaseModel):
    """Admissibility, Dirichlet existence conditions and polygon solvability of one domain"""
    domain: str
    passed: bool
    gate: str = Field(..., description="admissibility | dirichlet | solvability: the check deciding the outcome")
    admissibility: AdmissibilityReport
    dirichlet: DirichletReport
    solvability: Optional[SolvabilityReport] = None
    polygon_count: int = 0


@dataclass
class RunResult:
    """
    Result of one kernel operation.

    Fail fast: a successful result carries a report, a failed one an error.
    """
    command: str
    exit_code: int = EXIT_OK
    report: Optional[Any] = None
    artifacts: Dict[str, Any] = field(default_factory=dict)
    error: Optional[str] = None
    execution_time: float = 0.0

    def __post_init__(self):
        if not self.command:
            raise ValueError("Command cannot be empty")
        if self.success and self.report is None:
            raise ValueError("Successful result must have a report")
        if not self.success and not self.error:
            raise ValueError("Failed result must have an error message")

    @property
    def success(self) -> bool:
        return self.exit_code == EXIT_OK

    @classmethod
    def success_result(cls, command: str, report: Any, artifacts: Optional[Dict[str, Any]] = None,
                       execution_time: float = 0.0) -> "RunResult":
        return cls(command=command, exit_code=EXIT_OK, report=report, artifacts=artifacts or {},
                   execution_time=execution_time)

    @classmethod
    def failure_result(cls, command: str, exit_code: int, error: str, report: Any = None,
                       artifacts: Optional[Dict[str, Any]] = None, execution_time: float = 0.0) -> "RunResult":
        if exit_code == EXIT_OK:
            raise ValueError("Failed result needs a nonzero exit code")
        return cls(command=command, exit_code=exit_code, report=report, artifacts=artifacts or {},
                   error=error, execution_time=execution_time)

    def __str__(self):
        if self.success:
            return f"RunResult({self.command}, success=True, time={self.execution_time:.2f}s)"
        return f"RunResult({self.command}, exit={self.exit_code}, error='{self.error}')"


@dataclass
class SequenceOutcome:
    run: SequenceRun
    divergence: DivergenceReport
    limit: Optional[ScalarField] = None


class Nil3Kernel:
    """
    The library behind the CLI.

    Usage:
        kernel = Nil3Kernel.from_config("config.toml")
        dom = kernel.load("fixtures/cap_disk.json")
        result = kernel.check(dom)
    """

    def __init__(self, settings: Optional[Settings] = None):
        self.settings = settings or Settings()
        self._logger: Optional[logging.Logger] = None

    @classmethod
    def from_config(cls, config_path: str) -> "Nil3Kernel":
        """Create kernel from config file - fail fast if invalid"""
        settings = Settings.load(config_path)
        settings.validate()
        return cls(settings)

    @property
    def logger(self) -> logging.Logger:
        """Configure the niljs logger on first use"""
        if self._logger is None:
            self._logger = self.settings.build_logger()
        return self._logger

    def load(self, path: str) -> DomainSpec:
        return load_domain(path)

    def mesh(self, dom: DomainSpec, h: Optional[float] = None) -> Mesh:
        cfg = self.settings.mesh
        return build_mesh(dom, h or cfg.h, cfg.min_angle_deg, cfg.smoothing_passes)

    def solve_options(self, **overrides) -> SolveOptions:
        return self.settings.to_solve_options(**overrides)

    # -- checks -------------------------------------------------------------------

    def check(self, dom: DomainSpec) -> RunResult:
        """Admissibility (exit 2), then the existence conditions of the data (exit 3)

        Domains with only C arcs are gated by the Dirichlet conditions; domains
        with A or B arcs by the polygon solvability inequalities.
        """
        start = time.time()
        cfg = self.settings.domain
        admissibility = check_admissible(dom, cfg.curvature_tol)
        dirichlet = check_dirichlet_conditions(dom, cfg.curvature_tol)
        if not admissibility.passed:
            report = CheckReport(domain=dom.name, passed=False, gate="admissibility",
                                 admissibility=admissibility, dirichlet=dirichlet)
            return RunResult.failure_result("check", EXIT_ADMISSIBILITY, "domain is not admissible: "
                                            f"curvature {admissibility.curvature_violations}, "
                                            f"shared endpoints {admissibility.endpoint_violations}",
                                            report=report, execution_time=time.time() - start)

        polygons = enumerate_polygons(dom, cfg.max_vertices, workers=self.settings.workers)
        solvability = check_solvability(dom, polygons, cfg.solvability_tol)
        infinite = dom.has(ArcLabel.A) or dom.has(ArcLabel.B)
        gate = "solvability" if infinite else "dirichlet"
        passed = solvability.passed if infinite else dirichlet.passed
        report = CheckReport(domain=dom.name, passed=passed, gate=gate, admissibility=admissibility,
                             dirichlet=dirichlet, solvability=solvability, polygon_count=len(polygons))
        elapsed = time.time() - start
        if not passed:
            return RunResult.failure_result("check", EXIT_CONDITIONS, f"{gate} conditions fail on {dom.name!r}",
                                            report=report, execution_time=elapsed)
        logger.info("check passed on %r (%d polygons)", dom.name, len(polygons))
        return RunResult.success_result("check", report, execution_time=elapsed)

    # -- solves ---------------------------------------------------------------------

    def boundary_data(self, dom: DomainSpec, mesh: Mesh, n: Optional[float] = None,
                      opts: Optional[SolveOptions] = None) -> BoundaryData:
        """C data as given; A/B arcs need a truncation level n"""
        opts = opts or self.solve_options()
        if (dom.has(ArcLabel.A) or dom.has(ArcLabel.B)) and n is None:
            raise InputError(f"domain {dom.name!r} has infinite data; pass a truncation level (--nmax)")
        mode = auto_truncation(dom)
        return boundary_values(mesh, dom, n, mode, opts.data_cap)

    def solve(self, dom: DomainSpec, h: Optional[float] = None, n: Optional[float] = None,
              opts: Optional[SolveOptions] = None, mesh: Optional[Mesh] = None) -> ScalarField:
        opts = opts or self.solve_options()
        mesh = mesh or self.mesh(dom, h)
        return solve_dirichlet(dom, self.boundary_data(dom, mesh, n, opts), opts)

    def flux(self, dom: DomainSpec, h: Optional[float] = None, n: Optional[float] = None,
             opts: Optional[SolveOptions] = None, method: str = CONORMAL) -> Tuple[FluxReport, ScalarField]:
        solution = self.solve(dom, h, n, opts)
        return flux_balance(solution, dom, method), solution

    def sequence(self, dom: DomainSpec, h: Optional[float] = None, n_max: Optional[int] = None,
                 opts: Optional[SolveOptions] = None) -> SequenceOutcome:
        """Truncated-data sequence, divergence report and (when some node converges) the limit

        Raises NonConvergence when fewer than three members could be solved
        and NoConvergenceRegion when every node diverges.
        """
        seq = self.settings.sequence
        n_values = geometric_n_values(n_max or seq.n_max)
        if len(n_values) < 3:
            raise InputError(f"a sequence needs n_max >= 4 for three members, got {n_values}")
        base = opts or self.solve_options()
        opts = base.with_overrides(check_conditions="warn",
                                   max_newton_iters=max(base.max_newton_iters, SEQUENCE_OPTIONS.max_newton_iters),
                                   continuation_steps=max(base.continuation_steps, SEQUENCE_OPTIONS.continuation_steps))
        run = run_sequence(dom, n_values, mesh=self.mesh(dom, h), opts=opts)
        if len(run.fields) < 3:
            raise NonConvergence(f"sequence on {dom.name!r} stopped after {len(run.fields)} member(s): "
                                 f"{run.failure}", last_iterate=run.fields[-1] if run.fields else None)
        divergence = detect_divergence(run, seq.grad_cap_factor, seq.growth_factor, seq.locus_threshold,
                                       seq.value_growth_fraction, boundary_band=seq.boundary_band,
                                       curvature_tol=seq.line_curvature_tol, ridge_fraction=seq.ridge_fraction)
        limit = limit_solution(run, divergence)
        if divergence.successive_gap is not None and divergence.successive_gap > seq.seq_tol:
            logger.warning("successive gap %.3e on the converged region is above seq_tol %.1e; raise n_max",
                           divergence.successive_gap, seq.seq_tol)
        return SequenceOutcome(run, divergence, limit)


__all__ = ["CheckReport", "RunResult", "SequenceOutcome", "Nil3Kernel",
           "EXIT_OK", "EXIT_ADMISSIBILITY", "EXIT_CONDITIONS"]
