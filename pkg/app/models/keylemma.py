"""
Data models for the two-variable Taylor factorization laboratory.
"""

from fractions import Fraction
from typing import Any, List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator

from app.models.types import Real, SeriesField


class KeylemmaParams(BaseModel):
    """
    Parameters of Phi = a1(1-z1) + a2(1-z2) + b1(1-z1)^2 + b2(1-z2)^2 + c(1-z1)(1-z2).

    Real parts of b1, b2 and c are fixed by a1 and a2.
    """

    model_config = ConfigDict(
        frozen=True,
        arbitrary_types_allowed=True,
        json_schema_extra={"example": {"a1": 0.5, "a2": 0.25, "im_b1": 0.0, "im_b2": 0.0, "im_c": 0.0}},
    )

    a1: Real = Field(..., description="Coefficient of 1 - z1")
    a2: Real = Field(..., description="Coefficient of 1 - z2")
    im_b1: Real = Field(0, description="Imaginary part of b1")
    im_b2: Real = Field(0, description="Imaginary part of b2")
    im_c: Real = Field(0, description="Imaginary part of c")

    @field_validator("a1", "a2", "im_b1", "im_b2", "im_c", mode="before")
    @classmethod
    def _ints_to_fractions(cls, value: Any) -> Any:
        if isinstance(value, int) and not isinstance(value, bool):
            return Fraction(value)
        return value

    @property
    def exact(self) -> bool:
        values = (self.a1, self.a2, self.im_b1, self.im_b2, self.im_c)
        return all(isinstance(v, (int, Fraction)) and not isinstance(v, bool) for v in values)

    @property
    def half(self) -> Any:
        return Fraction(1, 2) if self.exact else 0.5

    @property
    def re_b1(self) -> Any:
        return self.a1 * self.half - self.a1**2

    @property
    def re_b2(self) -> Any:
        return self.a2 * self.half - self.a2**2

    @property
    def re_c(self) -> Any:
        return -2 * self.a1 * self.a2


class Obstruction(BaseModel):
    """First coefficient condition that cannot be met."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    part: str = Field(..., description="Re or Im")
    index: List[int] = Field(..., description="Monomial exponents (i, j) of u^i v^j")
    residual: Real = Field(..., description="Value of the unmet condition")


class FactorizationAttempt(BaseModel):
    """Order-by-order attempt at Re phi = gamma^2 and Im phi = gamma * h."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    params: KeylemmaParams
    gamma: SeriesField = Field(..., description="gamma through total degree 4")
    h: SeriesField = Field(..., description="h through total degree 2")
    conditions: List[Obstruction] = Field(
        default_factory=list, description="Every pure-v condition in solve order, met or not"
    )
    obstruction: Optional[Obstruction] = Field(None, description="First unmet condition")
    tolerance: float = Field(0.0, description="Zero threshold; 0 in exact mode")

    def factorizes(self) -> bool:
        return self.obstruction is None


class ResidualEntry(BaseModel):
    """One identity checked against the expanded series."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    name: str
    series_value: Optional[Real] = Field(None, description="Value extracted from the series")
    closed_form: Optional[Real] = Field(None, description="Value of the closed form")
    residual: Optional[Real] = Field(None, description="|series - closed form|")
    applicable: bool = Field(True, description="False when the identity's hypotheses fail")
    counted: bool = Field(True, description="Whether the residual enters max_residual")
    note: str = ""


class ResidualReport(BaseModel):
    """Residuals of the coefficient identities at one parameter point."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    params: KeylemmaParams = Field(..., description="Input parameters")
    conditioned: KeylemmaParams = Field(..., description="Same a1, a2, Im c with Im b1, Im b2 solved from Im c")
    re_u2: Real = Field(..., description="Coefficient of u^2 in Re phi")
    im_u: Real = Field(..., description="Coefficient of u in Im phi")
    im_v: Real = Field(..., description="Coefficient of v in Im phi")
    gamma02: Real = Field(..., description="gamma_{0,2} from the uv^2 coefficient of Re phi")
    entries: List[ResidualEntry] = Field(default_factory=list)
    max_residual: float = Field(0.0, description="Largest residual over applicable entries")
    tolerance: float = Field(0.0, description="Zero threshold; 0 in exact mode")

    def passed(self) -> bool:
        return self.max_residual <= self.tolerance

    def entry(self, name: str) -> ResidualEntry:
        for item in self.entries:
            if item.name == name:
                return item
        raise KeyError(name)


class CurveCheck(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str
    max_value: float = Field(..., description="Largest sampled value of P on the open curve")
    closed_form_residual: float = Field(..., description="Largest |P - closed form| on the samples")
    printed_form_residual: Optional[float] = Field(None, description="Same against the printed form, if it differs")


class GeometryReport(BaseModel):
    """Sign of P on the boundary of the admissible triangle and its critical points."""

    model_config = ConfigDict(frozen=True)

    curves: List[CurveCheck]
    negative_on_boundary: bool
    critical_points: List[List[float]] = Field(..., description="Real critical points of P")
    complex_critical_points: int = Field(0, description="Critical points with nonzero imaginary part")
    interior_critical_points: List[List[float]] = Field(default_factory=list)
    interior_max: float = Field(..., description="Largest P on an interior sample grid")
    samples: int


class StepThreeReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    equation: str
    roots: List[str] = Field(..., description="Exact real roots")
    admissible_roots: List[str] = Field(..., description="Roots in (0, 1/2]")


class SweepCell(BaseModel):
    model_config = ConfigDict(frozen=True)

    a1: float
    a2: float
    obstruction_part: Optional[str] = None
    obstruction_index: Optional[List[int]] = None
    re_phi_minus_one: float


class SweepReport(BaseModel):
    """Factorization attempts over a grid of the admissible triangle."""

    model_config = ConfigDict(frozen=True)

    n: int
    cells: List[SweepCell]
    factorizing: List[List[float]] = Field(..., description="Grid points without obstruction")
