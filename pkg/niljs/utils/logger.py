"""
Run artifacts: JSON reports, CSV field dumps and a per-run manifest.

Reports are written with sorted keys so identical runs give byte-identical
files; the manifest only carries timings when the run is not deterministic.
"""

import json
import logging
import math
import time
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel

from ..errors import InputError

logger = logging.getLogger(__name__)


def _plain(value: Any) -> Any:
    """JSON-safe copy: numpy scalars and arrays become Python values, non-finite floats become null"""
    if isinstance(value, BaseModel):
        return _plain(value.model_dump(mode="python"))
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return _plain(value.tolist())
    if isinstance(value, np.generic):
        return _plain(value.item())
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if hasattr(value, "value") and isinstance(getattr(value, "value"), str):
        return value.value
    return value


def dump_json(payload: Union[BaseModel, Dict[str, Any]]) -> str:
    """Sorted-key JSON text of a report"""
    return json.dumps(_plain(payload), sort_keys=True, indent=2, allow_nan=False) + "\n"


class RunArtifacts:
    """
    Output directory of one CLI run

    Usage:
        with RunArtifacts("out", task_name="solve") as run:
            run.write_report("report", report)
            run.write_frame("field", field.frame())
    """

    def __init__(self, out_dir: Union[str, Path], task_name: str = "niljs", deterministic: bool = True):
        self.out_dir = Path(out_dir)
        self.task_name = task_name
        self.deterministic = deterministic
        self.artifacts: List[str] = []
        self.start_time = time.time()
        try:
            self.out_dir.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise InputError(f"output directory {self.out_dir} is not writable: {e}") from e

    def _path(self, name: str, suffix: str) -> Path:
        path = self.out_dir / f"{name}{suffix}"
        self.artifacts.append(path.name)
        return path

    def write_report(self, name: str, report: Union[BaseModel, Dict[str, Any]]) -> Path:
        path = self._path(name, ".json")
        path.write_text(dump_json(report), encoding="utf-8")
        logger.info("wrote %s", path)
        return path

    def write_frame(self, name: str, frame: pd.DataFrame) -> Path:
        path = self._path(name, ".csv")
        frame.to_csv(path, index=False, float_format="%.17g")
        logger.info("wrote %s (%d rows)", path, len(frame))
        return path

    def write_manifest(self, exit_code: int, extra: Optional[Dict[str, Any]] = None) -> Path:
        manifest: Dict[str, Any] = {
            "task": self.task_name,
            "exit_code": exit_code,
            "artifacts": sorted(self.artifacts),
        }
        if not self.deterministic:
            manifest["finished_at"] = datetime.now().isoformat(timespec="seconds")
            manifest["duration_s"] = round(time.time() - self.start_time, 3)
        manifest.update(extra or {})
        path = self.out_dir / "manifest.json"
        path.write_text(dump_json(manifest), encoding="utf-8")
        return path

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        exit_code = getattr(exc_val, "exit_code", 1) if exc_val is not None else 0
        self.write_manifest(exit_code)


__all__ = ["RunArtifacts", "dump_json"]
