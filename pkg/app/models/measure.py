"""
Carleson-box measure data models.
"""

from enum import Enum
from typing import List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field


class Evidence(str, Enum):
    """Compactness evidence from the fitted box exponent."""

    COMPACT = "CompactEvidence"
    NON_COMPACT = "NonCompactEvidence"
    INCONCLUSIVE = "Inconclusive"
    RESTRICTED_RANGE = "RestrictedRangeEvidence"


class CarlesonBox(BaseModel):
    """Box [0, eps] x [tau - eps/2, tau + eps/2] against the imaginary axis."""

    model_config = ConfigDict(frozen=True)

    tau: float = Field(0.0, description="Center height")
    eps: float = Field(..., gt=0, description="Side length")

    def contains(self, values: np.ndarray) -> np.ndarray:
        values = np.asarray(values)
        return (
            (values.real >= 0)
            & (values.real <= self.eps)
            & (np.abs(values.imag - self.tau) <= self.eps / 2)
        )


class MeasureEstimate(BaseModel):
    """Estimated pushforward measure of a box."""

    model_config = ConfigDict(
        frozen=True,
        json_schema_extra={"example": {"hits": 1412, "samples": 1000000, "value": 0.00141, "ci95": 7.4e-05}},
    )

    hits: int = Field(..., ge=0, description="Samples that landed in the box")
    samples: int = Field(..., ge=0, description="Total samples")
    value: float = Field(..., ge=0, le=1, description="Weighted hit fraction")
    ci95: float = Field(..., ge=0, description="Half-width of the normal 95% interval")


class MeasureRow(BaseModel):
    """One row of the box-scaling table."""

    model_config = ConfigDict(frozen=True)

    eps: float
    tau_star: float
    measure: float
    ci95: float
    hits: int


class ExponentFit(BaseModel):
    """Least-squares box exponent and the evidence it supports."""

    model_config = ConfigDict(frozen=True)

    kappa_hat: Optional[float] = Field(None, description="Fitted slope of log measure against log eps")
    stderr: Optional[float] = Field(None, description="Standard error of the slope")
    r2: Optional[float] = Field(None, description="Coefficient of determination")
    intercept: Optional[float] = Field(None, description="Fitted log constant")
    eps_grid: List[float] = Field(..., description="Box sides, strictly decreasing")
    sup_tau_values: List[float] = Field(..., description="Sup over tau of the measure per eps")
    rows: List[MeasureRow] = Field(default_factory=list, description="Per-eps detail")
    doubling_ratios: List[float] = Field(
        default_factory=list, description="mu(2 eps)/(2 eps) divided by mu(eps)/eps for consecutive eps"
    )
    evidence: Evidence = Field(..., description="Evidence verdict")
    samples: int = Field(..., description="Samples per eps")
    seed: int = Field(..., description="Sampler seed")
