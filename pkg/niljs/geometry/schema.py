"""
JSON domain-spec files.

    {"tau": 0.1, "H": 0.3, "name": "cap",
     "arcs": [{"kind": "circular", "center": [0, 0], "radius": 1,
               "theta0": 0, "theta1": 3.14159, "label": "C",
               "data": {"const": 0}}, ...]}

Arc kinds: circular (center, radius, theta0, theta1), segment (start, end),
polyline (points). Data: {"const": c} or {"expr-id": name, "params": {...}}.
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from ..errors import InputError
from .ambient import AmbientParams
from .arcs import ArcLabel, ArcSpec, BoundaryFunction
from .domain import DomainSpec
from .registry import BoundaryRegistry

logger = logging.getLogger(__name__)

Point = Tuple[float, float]


class DataModel(BaseModel):
    """Boundary data of a C arc"""
    model_config = ConfigDict(populate_by_name=True, extra="forbid")

    const: Optional[float] = None
    expr_id: Optional[str] = Field(None, alias="expr-id")
    params: Dict[str, Any] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _one_source(self) -> "DataModel":
        if (self.const is None) == (self.expr_id is None):
            raise ValueError("data needs exactly one of 'const' or 'expr-id'")
        return self

    def build(self) -> BoundaryFunction:
        if self.const is not None:
            return BoundaryRegistry.create("const", {"value": self.const})
        return BoundaryRegistry.create(self.expr_id, self.params)


class ArcModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["circular", "segment", "polyline"] = "circular"
    label: ArcLabel = ArcLabel.C
    id: Optional[str] = None
    center: Optional[Point] = None
    radius: Optional[float] = None
    theta0: Optional[float] = None
    theta1: Optional[float] = None
    start: Optional[Point] = None
    end: Optional[Point] = None
    points: Optional[List[Point]] = None
    data: Optional[DataModel] = None

    @model_validator(mode="after")
    def _geometry_fields(self) -> "ArcModel":
        needed = {
            "circular": ("center", "radius", "theta0", "theta1"),
            "segment": ("start", "end"),
            "polyline": ("points",),
        }[self.kind]
        missing = [name for name in needed if getattr(self, name) is None]
        if missing:
            raise ValueError(f"{self.kind} arc is missing {missing}")
        if self.data is not None and self.label != ArcLabel.C:
            raise ValueError(f"only C arcs carry data, got data on a {self.label.value} arc")
        return self

    def build(self) -> ArcSpec:
        data = self.data.build() if self.data is not None else None
        kwargs = dict(label=self.label, arc_id=self.id or "", data=data)
        if self.kind == "circular":
            return ArcSpec.circular(self.center, self.radius, self.theta0, self.theta1, **kwargs)
        if self.kind == "segment":
            return ArcSpec.segment(self.start, self.end, **kwargs)
        return ArcSpec.polyline(self.points, **kwargs)


class DomainModel(BaseModel):
    model_config = ConfigDict(populate_by_name=True, extra="forbid")

    tau: float = 0.0
    h: float = Field(0.0, alias="H", ge=0.0)
    name: str = "domain"
    arcs: List[ArcModel] = Field(..., min_length=1)

    def build(self) -> DomainSpec:
        params = AmbientParams(tau=self.tau, h=self.h)
        return DomainSpec(tuple(arc.build() for arc in self.arcs), params, self.name)


def parse_domain(payload: Dict[str, Any]) -> DomainSpec:
    try:
        model = DomainModel.model_validate(payload)
    except ValidationError as e:
        raise InputError(f"invalid domain spec: {e}") from e
    return model.build()


def load_domain(path: Union[str, Path]) -> DomainSpec:
    """Read and validate a domain-spec file; InputError on unreadable or malformed input"""
    path = Path(path)
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise InputError(f"cannot read domain file {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise InputError(f"malformed JSON in {path}: {e}") from e
    if not isinstance(payload, dict):
        raise InputError(f"{path}: top level must be an object")
    dom = parse_domain(payload)
    logger.info("loaded domain %r from %s (%d arcs, tau=%g, H=%g)",
                dom.name, path, len(dom.arcs), dom.params.tau, dom.params.h)
    return dom


__all__ = ["DataModel", "ArcModel", "DomainModel", "parse_domain", "load_domain"]
