"""
Models for boundary-flat polynomial constructions.
"""

from enum import Enum
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence

from pydantic import BaseModel, ConfigDict, Field

from app.models.types import Real
from app.models.lift import BohrLift


class ChebyshevKind(str, Enum):
    T = "T"
    U = "U"


class CounterexampleKind(str, Enum):
    CEX3 = "cex3"
    CEX5A = "cex5a"
    CEX5B = "cex5b"


class ChebyshevBasisPoly(BaseModel):
    """Chebyshev polynomial written in powers of (1 - y)."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    kind: ChebyshevKind
    n: int = Field(..., ge=0)
    coeffs_in_one_minus_y: List[Real] = Field(..., description="Exact coefficient of (1 - y)^j at index j")

    def evaluate(self, y: Any) -> Any:
        """Value at y; works for floats, Fractions, numpy arrays and mpmath numbers."""
        t = 1 - y
        total: Any = 0
        for c in reversed(self.coeffs_in_one_minus_y):
            total = total * t + c
        return total

    def shifted(self) -> List[Fraction]:
        """Coefficients of y^j in P(1 - y)."""
        return list(self.coeffs_in_one_minus_y)


class FlatPolynomial(BaseModel):
    """
    Phi(z) = sum_n (-1)^(n-1)/2^n (a_n (1-z)^(2n-1) - b_n (1-z)^(2n)) with
    Re Phi(e^{ix}) = sum_m c_m (1 - cos x)^m.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    n_blocks: int = Field(..., ge=1, description="N")
    target: List[Real] = Field(..., description="c_1 .. c_2N")
    a: List[Real] = Field(..., description="a_1 .. a_N")
    b: List[Real] = Field(..., description="b_1 .. b_N")
    block_determinants: List[Real] = Field(..., description="Determinant of diagonal block n, n = 1 .. N")
    exact: bool = Field(..., description="Solved in rational arithmetic")
    lift: BohrLift = Field(..., description="Phi as a one-variable polynomial in z")


class CertificationReport(BaseModel):
    """Grid check of Re Phi >= 0 on the torus."""

    model_config = ConfigDict(
        frozen=True,
        json_schema_extra={
            "example": {
                "grid_per_dim": 4096,
                "points": 16777216,
                "min_re": 0.0,
                "argmin": [0.0, 0.0],
                "lipschitz": 3.2,
                "lower_bound": -0.0049,
                "passed": True,
            }
        },
    )

    grid_per_dim: int
    points: int
    min_re: float = Field(..., description="Smallest Re Phi on the grid")
    argmin: List[float]
    lipschitz: float = Field(..., description="Sup-norm Lipschitz constant of Re Phi from the coefficient l1 norm")
    lower_bound: float = Field(..., description="min_re - lipschitz * half grid spacing")
    passed: bool = Field(..., description="No grid value below the tolerance")
    zeros_off_origin: Optional[int] = Field(None, description="Grid zeros away from theta = 0, when checked")


class ConstructionResult(BaseModel):
    """A constructed lift with its certification."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    name: str
    lift: BohrLift
    certification: CertificationReport
    parameters: Dict[str, Any] = Field(default_factory=dict)
    components: List[FlatPolynomial] = Field(default_factory=list)

    def orders(self) -> Sequence[int]:
        return self.parameters.get("orders", [])
