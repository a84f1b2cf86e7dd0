"""
Report written by every CLI subcommand.
"""

import math
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.models.approx import RegularityProfile
from app.models.lift import BoundaryPoint, CompactnessVerdict
from app.models.measure import ExponentFit
from app.models.symbol import SymbolProfile

TOOL_NAME = "dirichlet-symbol-lab"


def _non_finite_paths(value: Any, path: str = "") -> List[str]:
    if isinstance(value, float):
        return [] if math.isfinite(value) else [path or "."]
    if isinstance(value, dict):
        return [p for k, v in value.items() for p in _non_finite_paths(v, f"{path}.{k}")]
    if isinstance(value, (list, tuple)):
        return [p for i, v in enumerate(value) for p in _non_finite_paths(v, f"{path}[{i}]")]
    return []


class AnalysisReport(BaseModel):
    """
    Machine-readable outcome of one subcommand.

    Carries no timestamps or run identifiers, so identical inputs and seed
    serialize to identical bytes.
    """

    model_config = ConfigDict(
        frozen=True,
        arbitrary_types_allowed=True,
        json_schema_extra={
            "example": {
                "tool": TOOL_NAME,
                "version": "1.0.0",
                "command": "analyze",
                "seed": 20240101,
                "symbol": "9/2 - 2^-s - 3^-s - 2*6^-s",
                "verdict": {"verdict": "Compact", "rule": "Thm4-deg≤2"},
            }
        },
    )

    tool: str = TOOL_NAME
    version: str
    command: str = Field(..., description="Subcommand that produced the report")
    seed: Optional[int] = Field(None, description="Random seed, when randomness was involved")
    symbol: Optional[str] = Field(None, description="Canonical echo of the input symbol")
    profile: Optional[SymbolProfile] = None
    boundary_points: List[BoundaryPoint] = Field(default_factory=list)
    verdict: Optional[CompactnessVerdict] = None
    carleson: Optional[ExponentFit] = Field(None, description="Box exponent fit, when run")
    regularity: List[RegularityProfile] = Field(default_factory=list, description="Normal form per boundary point")
    eta: Optional[str] = Field(None, description="Exact compactness index as p/q")
    payload: Dict[str, Any] = Field(default_factory=dict, description="Subcommand-specific results in JSON form")
    table: List[Dict[str, Any]] = Field(default_factory=list, description="Plot-ready rows for CSV output")

    @model_validator(mode="after")
    def _check_finite(self) -> "AnalysisReport":
        bad = _non_finite_paths(self.model_dump(mode="json"))
        if bad:
            raise ValueError(f"non-finite numbers at {', '.join(bad[:5])}")
        return self
