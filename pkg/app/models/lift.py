"""
Bohr lift and boundary-point data models.
"""

from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_serializer

from app.models.symbol import GeneratingSet, RangeKind
from app.models.types import Coefficient, SeriesField, complex_pair


class BohrLift(BaseModel):
    """Polynomial Phi(z) = constant + sum c_alpha z^alpha on the polydisc."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    constant: Coefficient = Field(0, description="Constant term, c1 - 1/2 for c0 = 0")
    terms: Dict[Tuple[int, ...], Coefficient] = Field(default_factory=dict, description="Map alpha -> c_alpha")
    dim: int = Field(..., ge=0, description="Number of variables d")
    source: Optional[GeneratingSet] = Field(None, description="Generating set the lift was built over")

    @field_serializer("terms", when_used="json")
    def _serialize_terms(self, terms: Dict[Tuple[int, ...], Any]) -> List[Dict[str, Any]]:
        return [{"alpha": list(alpha), "c": complex_pair(terms[alpha])} for alpha in sorted(terms)]

    def exponent_matrix(self) -> np.ndarray:
        """Rows are the multi-indices, in sorted order."""
        if not self.terms:
            return np.zeros((0, self.dim), dtype=float)
        return np.array(sorted(self.terms), dtype=float).reshape(len(self.terms), self.dim)

    def coefficient_vector(self) -> np.ndarray:
        return np.array([complex(self.terms[a]) for a in sorted(self.terms)], dtype=complex)

    def total_degree(self) -> int:
        return max((sum(a) for a in self.terms), default=0)

    def is_constant(self) -> bool:
        return not self.terms

    def is_separated(self) -> bool:
        """Every monomial involves at most one variable."""
        return all(sum(1 for e in alpha if e) <= 1 for alpha in self.terms)

    def l1_norm(self) -> float:
        return float(sum(abs(complex(c)) for c in self.terms.values()))


class LocalExpansion(BaseModel):
    """Phi re-expanded in x_j = 1 - z_j / w_j around a boundary point w."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    theta: List[float] = Field(..., description="Angles of w")
    tau: float = Field(..., description="Im Phi(w)")
    a: List[Coefficient] = Field(..., description="Coefficients of x_j")
    b: List[Coefficient] = Field(..., description="Coefficients of x_j^2")
    c: List[List[Coefficient]] = Field(..., description="Coefficients of x_j x_k, j < k; zero elsewhere")
    higher: SeriesField = Field(..., description="Orders 3 through the requested order")
    series: SeriesField = Field(..., description="Full exact re-expansion, constant term included")
    order: int = Field(4, description="Requested order")


class BoundaryPoint(BaseModel):
    """Torus point where Re Phi vanishes."""

    model_config = ConfigDict(
        frozen=True,
        arbitrary_types_allowed=True,
        json_schema_extra={
            "example": {
                "theta": [0.0, 0.0],
                "tau": 0.0,
                "re_value": 0.0,
                "gradient_norm": 0.0,
                "hessian": [[3.0, 2.0], [2.0, 3.0]],
                "eigvals": [1.0, 5.0],
                "index_J": 2,
            }
        },
    )

    theta: List[float] = Field(..., description="Angles in (-pi, pi]")
    tau: float = Field(..., description="Im Phi(w)")
    re_value: float = Field(..., description="Re Phi(w)")
    gradient_norm: float = Field(..., description="Norm of the gradient of Re phi at theta")
    hessian: List[List[float]] = Field(..., description="Hessian of Re phi at theta")
    eigvals: List[float] = Field(..., description="Hessian eigenvalues, ascending")
    eigvecs: List[List[float]] = Field(..., description="Unit eigenvectors as rows, matching eigvals")
    index_J: int = Field(..., description="Number of positive Hessian eigenvalues")
    im_gradient: List[float] = Field(..., description="Gradient of Im phi at theta")
    local: Optional[LocalExpansion] = Field(None, description="Local expansion at w")

    def w(self) -> np.ndarray:
        return np.exp(1j * np.asarray(self.theta, dtype=float))


class RangeAnalysis(BaseModel):
    """Global minimum of Re Phi over the torus and the boundary points found."""

    model_config = ConfigDict(frozen=True)

    min_re: float = Field(..., description="Minimum of Re Phi over the torus")
    argmin: List[float] = Field(default_factory=list, description="Angles of the minimum")
    range_kind: RangeKind = Field(..., description="Restricted iff min_re > tolerance")
    boundary_points: List[BoundaryPoint] = Field(default_factory=list, description="Distinct zeros of Re Phi")


class BoundarySearchConfig(BaseModel):
    """Tuning knobs for the multi-start boundary search; None means settings default."""

    grid: Optional[int] = Field(None, description="Seed points per axis")
    max_seeds: Optional[int] = Field(None, description="Number of grid minima polished")
    tol: Optional[float] = Field(None, description="Boundary tolerance on Re Phi")
    dedup_radius: Optional[float] = Field(None, description="Angular deduplication radius")
    expansion_order: int = Field(4, description="Order of attached local expansions")


class JuliaCaratheodoryReport(BaseModel):
    """Check that the first-order expansion coefficients are nonnegative reals."""

    model_config = ConfigDict(frozen=True)

    passed: bool = Field(..., description="Overall outcome")
    a_real: List[float] = Field(..., description="Real parts of a_j")
    max_abs_imag: float = Field(..., description="Largest |Im a_j|")
    any_positive: bool = Field(..., description="Some a_j > 0")
    degenerate: bool = Field(..., description="Phi is constant near w")
    message: str = Field(..., description="Human readable outcome")


class Verdict(str, Enum):
    COMPACT = "Compact"
    NON_COMPACT = "NonCompact"
    UNDETERMINED = "UndeterminedByTheory"


class CompactnessVerdict(BaseModel):
    """Outcome of the theorem-based classifier."""

    model_config = ConfigDict(
        frozen=True,
        json_schema_extra={
            "example": {
                "verdict": "Compact",
                "rule": "Thm4-deg≤2",
                "kappa_w": [1.5],
                "cases": ["case2"],
                "boundary_index": [2],
            }
        },
    )

    verdict: Verdict = Field(..., description="Compact, NonCompact or UndeterminedByTheory")
    rule: str = Field(..., description="Rule tag that decided the verdict")
    kappa_w: List[Optional[float]] = Field(default_factory=list, description="Local Carleson exponent per point")
    cases: List[Optional[str]] = Field(default_factory=list, description="Local case per point")
    boundary_index: List[int] = Field(default_factory=list, description="J(Phi, w) per point")
