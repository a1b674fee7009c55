"""
niljs TOML configuration.

Typed sections mirror the TOML tables. Priority: TOML values, then
environment variables (NIL3_THREADS, NIL3_LOG_LEVEL, also read from a .env
file), then the defaults below.
"""

import os
import logging as std_logging
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, Optional

from dotenv import load_dotenv

from ..fem.solver import CheckMode, LinearSolver, SolveOptions

VALID_LEVELS = {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}


@dataclass
class MeshConfig:
    h: float = 0.05
    min_angle_deg: float = 20.0
    smoothing_passes: int = 3


@dataclass
class SolverConfig:
    max_newton_iters: int = 50
    newton_tol: float = 1e-10
    damping: float = 0.5
    continuation_steps: int = 1
    data_cap: float = 1e6
    check_conditions: str = "strict"  # strict|warn|off
    linear_solver: str = "direct"     # direct|cg


@dataclass
class SequenceConfig:
    """Jenkins-Serrin sequence and divergence thresholds"""
    n_max: int = 64
    seq_tol: float = 1e-4
    growth_factor: float = 1.25
    locus_threshold: float = 0.99
    grad_cap_factor: float = 0.5
    value_growth_fraction: float = 0.5
    boundary_band: float = 2.0
    line_curvature_tol: float = 0.05
    ridge_fraction: float = 0.5


@dataclass
class DomainConfig:
    max_vertices: int = 8
    curvature_tol: float = 1e-8
    solvability_tol: float = 1e-8


@dataclass
class RuntimeConfig:
    threads: Optional[int] = None
    deterministic: bool = True
    seed: int = 0


@dataclass
class LoggingConfig:
    console_level: str = "INFO"
    log_dir: str = "logs"
    session_logs: bool = False


@dataclass
class Settings:
    """Root configuration object"""
    mesh: MeshConfig = field(default_factory=MeshConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    sequence: SequenceConfig = field(default_factory=SequenceConfig)
    domain: DomainConfig = field(default_factory=DomainConfig)
    runtime: RuntimeConfig = field(default_factory=RuntimeConfig)
    logging: LoggingConfig = field(default_factory=LoggingConfig)

    @classmethod
    def load(cls, path: str = "config.toml") -> "Settings":
        """Load configuration from a TOML file; a missing file gives defaults plus environment"""
        try:
            import tomllib
        except ImportError:
            # Python < 3.11 fallback
            try:
                import tomli as tomllib
            except ImportError:
                raise ImportError("TOML support requires Python 3.11+ or 'pip install tomli'")

        load_dotenv()
        config_path = Path(path)
        if not config_path.exists():
            return cls._from_dict({})
        with open(config_path, "rb") as f:
            data = tomllib.load(f)
        return cls._from_dict(data)

    @classmethod
    def _from_dict(cls, data: Dict[str, Any]) -> "Settings":
        """Convert TOML dict to Settings object"""
        mesh_data = data.get("mesh", {})
        solver_data = data.get("solver", {})
        sequence_data = data.get("sequence", {})
        domain_data = data.get("domain", {})
        runtime_data = data.get("runtime", {})
        logging_data = data.get("logging", {})

        mesh_config = MeshConfig(
            h=float(mesh_data.get("h", 0.05)),
            min_angle_deg=float(mesh_data.get("min_angle_deg", 20.0)),
            smoothing_passes=int(mesh_data.get("smoothing_passes", 3)),
        )
        solver_config = SolverConfig(
            max_newton_iters=int(solver_data.get("max_newton_iters", 50)),
            newton_tol=float(solver_data.get("newton_tol", 1e-10)),
            damping=float(solver_data.get("damping", 0.5)),
            continuation_steps=int(solver_data.get("continuation_steps", 1)),
            data_cap=float(solver_data.get("data_cap", 1e6)),
            check_conditions=solver_data.get("check_conditions", "strict"),
            linear_solver=solver_data.get("linear_solver", "direct"),
        )
        sequence_config = SequenceConfig(
            n_max=int(sequence_data.get("n_max", 64)),
            seq_tol=float(sequence_data.get("seq_tol", 1e-4)),
            growth_factor=float(sequence_data.get("growth_factor", 1.25)),
            locus_threshold=float(sequence_data.get("locus_threshold", 0.99)),
            grad_cap_factor=float(sequence_data.get("grad_cap_factor", 0.5)),
            value_growth_fraction=float(sequence_data.get("value_growth_fraction", 0.5)),
            boundary_band=float(sequence_data.get("boundary_band", 2.0)),
            line_curvature_tol=float(sequence_data.get("line_curvature_tol", 0.05)),
            ridge_fraction=float(sequence_data.get("ridge_fraction", 0.5)),
        )
        domain_config = DomainConfig(
            max_vertices=int(domain_data.get("max_vertices", 8)),
            curvature_tol=float(domain_data.get("curvature_tol", 1e-8)),
            solvability_tol=float(domain_data.get("solvability_tol", 1e-8)),
        )
        runtime_config = RuntimeConfig(
            threads=cls._threads(runtime_data.get("threads")),
            deterministic=bool(runtime_data.get("deterministic", True)),
            seed=int(runtime_data.get("seed", 0)),
        )
        logging_config = LoggingConfig(
            console_level=logging_data.get("console_level") or os.environ.get("NIL3_LOG_LEVEL", "INFO").upper(),
            log_dir=logging_data.get("log_dir", "logs"),
            session_logs=bool(logging_data.get("session_logs", False)),
        )
        return cls(mesh=mesh_config, solver=solver_config, sequence=sequence_config,
                   domain=domain_config, runtime=runtime_config, logging=logging_config)

    @staticmethod
    def _threads(value: Optional[int]) -> Optional[int]:
        """TOML value, else NIL3_THREADS, else None (one worker per core)"""
        if value is not None:
            return int(value)
        env = os.environ.get("NIL3_THREADS")
        if not env:
            return None
        try:
            return int(env)
        except ValueError:
            raise ValueError(f"NIL3_THREADS must be an integer, got: {env!r}")

    @property
    def workers(self) -> int:
        """Worker count for parallel enumeration; 1 in deterministic mode unless threads is set"""
        if self.runtime.threads is not None:
            return self.runtime.threads
        return 1 if self.runtime.deterministic else (os.cpu_count() or 1)

    def validate(self) -> None:
        """Validate configuration values"""
        if self.solver.check_conditions not in {m.value for m in CheckMode}:
            raise ValueError(f"solver.check_conditions must be 'strict', 'warn' or 'off', "
                             f"got: {self.solver.check_conditions}")
        if self.solver.linear_solver not in {m.value for m in LinearSolver}:
            raise ValueError(f"solver.linear_solver must be 'direct' or 'cg', got: {self.solver.linear_solver}")
        if self.logging.console_level not in VALID_LEVELS:
            raise ValueError(f"logging.console_level must be one of {VALID_LEVELS}, "
                             f"got: {self.logging.console_level}")

        positive = {
            "mesh.h": self.mesh.h,
            "solver.max_newton_iters": self.solver.max_newton_iters,
            "solver.newton_tol": self.solver.newton_tol,
            "solver.continuation_steps": self.solver.continuation_steps,
            "solver.data_cap": self.solver.data_cap,
            "sequence.n_max": self.sequence.n_max,
            "sequence.seq_tol": self.sequence.seq_tol,
            "sequence.grad_cap_factor": self.sequence.grad_cap_factor,
            "sequence.value_growth_fraction": self.sequence.value_growth_fraction,
            "sequence.boundary_band": self.sequence.boundary_band,
            "sequence.line_curvature_tol": self.sequence.line_curvature_tol,
            "domain.max_vertices": self.domain.max_vertices,
            "domain.curvature_tol": self.domain.curvature_tol,
            "domain.solvability_tol": self.domain.solvability_tol,
        }
        for name, value in positive.items():
            if not value > 0:
                raise ValueError(f"{name} must be positive, got: {value}")
        if not 0.0 < self.solver.damping < 1.0:
            raise ValueError(f"solver.damping must lie in (0, 1), got: {self.solver.damping}")
        if not 0.0 < self.mesh.min_angle_deg < 60.0:
            raise ValueError(f"mesh.min_angle_deg must lie in (0, 60), got: {self.mesh.min_angle_deg}")
        if self.mesh.smoothing_passes < 0:
            raise ValueError(f"mesh.smoothing_passes must not be negative, got: {self.mesh.smoothing_passes}")
        if self.sequence.growth_factor <= 1.0:
            raise ValueError(f"sequence.growth_factor must exceed 1, got: {self.sequence.growth_factor}")
        if not 0.0 < self.sequence.locus_threshold < 1.0:
            raise ValueError(f"sequence.locus_threshold must lie in (0, 1), got: {self.sequence.locus_threshold}")
        if not 0.0 < self.sequence.ridge_fraction <= 1.0:
            raise ValueError(f"sequence.ridge_fraction must lie in (0, 1], got: {self.sequence.ridge_fraction}")
        if self.runtime.threads is not None and self.runtime.threads <= 0:
            raise ValueError(f"runtime.threads must be positive, got: {self.runtime.threads}")

    def to_solve_options(self, **overrides) -> SolveOptions:
        """SolveOptions from the [solver] table; keyword overrides that are None are ignored"""
        opts = SolveOptions(
            max_newton_iters=self.solver.max_newton_iters,
            newton_tol=self.solver.newton_tol,
            damping=self.solver.damping,
            continuation_steps=self.solver.continuation_steps,
            data_cap=self.solver.data_cap,
            check_conditions=self.solver.check_conditions,
            linear_solver=self.solver.linear_solver,
        )
        return opts.with_overrides(**overrides)

    def build_logger(self) -> std_logging.Logger:
        """Configure the niljs logger: console handler plus an optional session file"""
        logger = std_logging.getLogger("niljs")
        level = getattr(std_logging, self.logging.console_level)
        logger.setLevel(level)
        logger.handlers.clear()

        formatter = std_logging.Formatter('%(asctime)s - %(name)s - %(levelname)s - %(message)s')
        console_handler = std_logging.StreamHandler()
        console_handler.setLevel(level)
        console_handler.setFormatter(formatter)
        logger.addHandler(console_handler)

        if self.logging.session_logs:
            log_dir = Path(self.logging.log_dir)
            log_dir.mkdir(parents=True, exist_ok=True)
            timestamp = datetime.now().strftime("%Y%m%d_%H%M%S")
            file_handler = std_logging.FileHandler(log_dir / f"niljs_session_{timestamp}.log", encoding="utf-8")
            file_handler.setLevel(level)
            file_handler.setFormatter(formatter)
            logger.addHandler(file_handler)

        return logger
