"""
Models for boundary regularity, compactness indices and approximation-number bounds.
"""

from enum import Enum
from typing import List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.models.flat import ConstructionResult
from app.models.lift import BoundaryPoint
from app.models.types import Coefficient, Real


class RegularityProfile(BaseModel):
    """
    Local normal form at a boundary point w:

    Re phi(w e^{i theta}) = sum_j l_j(theta)^k_j + ..., Im phi = tau + sum_j b_j l_j(theta) + ...
    """

    model_config = ConfigDict(
        frozen=True,
        json_schema_extra={
            "example": {
                "ell": [[0.5, 0.5], [1.0, -1.0]],
                "k": [4, 2],
                "b": [-4.0, 0.0],
                "tau": 0.0,
            }
        },
    )

    point: BoundaryPoint
    ell: List[List[float]] = Field(..., description="Rows are the linear forms l_j in theta")
    k: List[int] = Field(..., description="Even orders, descending")
    b: List[float] = Field(..., description="Coefficients of Im phi in the l basis")
    tau: float

    @model_validator(mode="after")
    def _check_normal_form(self) -> "RegularityProfile":
        d = len(self.k)
        if len(self.ell) != d or len(self.b) != d:
            raise ValueError("ell, k and b must have one entry per dimension")
        if any(k < 2 or k % 2 for k in self.k):
            raise ValueError("orders must be even and at least 2")
        if any(a < b for a, b in zip(self.k, self.k[1:])):
            raise ValueError("orders must be sorted in descending order")
        if d and abs(np.linalg.det(np.asarray(self.ell, dtype=float))) < 1e-12:
            raise ValueError("linear forms must be independent")
        if d and self.b[0] == 0:
            raise ValueError("b_1 must be nonzero")
        return self

    @property
    def dim(self) -> int:
        return len(self.k)

    def inverse_forms(self) -> np.ndarray:
        """Matrix taking l-coordinates back to angle offsets."""
        return np.linalg.inv(np.asarray(self.ell, dtype=float))


class PointIndex(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    theta: List[float]
    k: List[int]
    eta: Real = Field(..., description="Exact compactness index at this point")


class CompactnessIndex(BaseModel):
    """Minimum of the per-point indices."""

    model_config = ConfigDict(
        frozen=True,
        arbitrary_types_allowed=True,
        json_schema_extra={"example": {"eta": 0.3333333333333333, "per_point": []}},
    )

    eta: Real
    per_point: List[PointIndex]


class ContactExponents(BaseModel):
    """Fitted contact exponent |Im phi - tau|^omega <= C (Re phi - 1/2)."""

    model_config = ConfigDict(frozen=True)

    restricted_range: bool = Field(False, description="No boundary point; omega is irrelevant")
    omega_hat: Optional[float] = Field(None, ge=1.0, description="Fitted omega, at least 1")
    omega_raw: Optional[float] = Field(None, description="Inverse envelope slope before clamping at 1")
    C: Optional[float] = Field(None, description="Smallest constant making the inequality hold on the samples")
    kappa_hat: Optional[float] = Field(None, description="Carleson exponent, when supplied")
    r2: Optional[float] = None
    levels: int = Field(0, description="Sublevel thresholds entering the envelope fit")
    samples: int = 0


class BoundForm(str, Enum):
    ETA = "eta"
    CONTACT = "contact"
    KAPPA_ONLY = "kappa_only"
    EXPONENTIAL = "exponential"


class AnBounds(BaseModel):
    """Shape curves of the two-sided estimates, all constants set to 1."""

    model_config = ConfigDict(frozen=True)

    n: int
    form: BoundForm
    lower: Optional[float] = Field(None, description="(1/n)^eta; only for the eta form")
    upper: float
    exponent: Optional[float] = Field(None, description="Exponent of (log n / n) in the upper curve")


class SchattenMembership(str, Enum):
    IN_SP = "InSp"
    NOT_IN_SP = "NotInSp"


class SchattenRecipe(BaseModel):
    """Separated construction with C_phi in S_q but not in S_p."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    p: float
    q: float
    d: int
    k: int
    eta: Real
    in_q: SchattenMembership
    in_p: SchattenMembership
    orders: List[int] = Field(..., description="Flatness order on each axis")
    construction: Optional[ConstructionResult] = Field(None, description="Certified example, when built")


class HyperbolicLength(BaseModel):
    """Hyperbolic length of the boundary of {|Im s|^omega <= C Re s, sigma <= Re s <= C}."""

    model_config = ConfigDict(frozen=True)

    omega: float
    sigma: float
    C: float
    gamma1: float = Field(..., description="Left vertical side")
    gamma2: float = Field(..., description="Right vertical side")
    gamma3: float = Field(..., description="Both curved sides")
    total: float
    nodes: int
    quadrature_change: float = Field(..., description="Relative change of gamma3 when the node count doubles")


class LengthFit(BaseModel):
    model_config = ConfigDict(frozen=True)

    omega: float
    sigmas: List[float]
    lengths: List[float]
    slope: float = Field(..., description="d log L / d log(1/sigma), or d L / d log(1/sigma) when omega = 1")
    intercept: float
    r2: float
    predicted: float = Field(..., description="(omega - 1) / omega, or 2 sqrt(1 + C^2) when omega = 1")


class BlaschkeBound(BaseModel):
    """Explicit product bound for a Blaschke product with equally spaced zeros."""

    model_config = ConfigDict(frozen=True)

    n: int
    L: float
    log_product: float = Field(..., description="sum_j ln tanh(j L / (2n))")
    riemann_log: float = Field(..., description="n * integral_0^1 ln tanh(x L / 2) dx")
    lemma_constant: float = Field(..., description="integral over [e^-L, 1] of ln((1+y)/(1-y)) / y")
    lemma_log_bound: float = Field(..., description="-lemma_constant * n / L with the constant at L = 1")
    empirical_max: Optional[float] = Field(None, description="Largest |B| found on the sampled region")
    curve_length: Optional[float] = None


class WitnessPoint(BaseModel):
    model_config = ConfigDict(frozen=True)

    alpha: List[int]
    rho: List[float]
    theta: List[float]
    residual: float


class LatticeWitness(BaseModel):
    """Preimages Z of the points s_m = 1/2 + nu delta + i m delta."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    delta: float
    nu: float
    k: List[int]
    free_coordinate: int = Field(..., description="Polydisc coordinate whose radius is solved for")
    S: List[Coefficient] = Field(..., description="s_m - 1/2 for m = 1 .. |S|")
    Z: List[WitnessPoint]
    s_count: int
    preimages_required: int = Field(..., description="prod_{j>=2} floor((1/delta)^(1 - 1/k_j))")
    preimages_min: int
    residual_max: float
    C1: float = Field(..., description="Smallest sup-norm angle gap divided by delta")
    C2: float = Field(..., description="Smallest C with delta / C <= rho <= C delta")
    lower_bound_quantity: float = Field(..., description="min_m N(s_m; Z) zeta(2 Re s_m)")
    iterations: int

    def passed(self, tol: float) -> bool:
        return (
            self.residual_max <= tol
            and self.preimages_min >= self.preimages_required
            and self.C1 > 0
            and np.isfinite(self.C2)
        )


class WitnessFit(BaseModel):
    model_config = ConfigDict(frozen=True)

    deltas: List[float]
    quantities: List[float]
    exponent: float = Field(..., description="Fitted slope of log quantity against log delta")
    expected: float = Field(..., description="sum_{j>=2} 1/k_j")
    r2: float


class ProbeResult(BaseModel):
    """Singular values of a truncated composition-operator matrix."""

    model_config = ConfigDict(frozen=True)

    M: int
    D: int
    rows: int
    singular_values: List[float]
    decay_exponent: Optional[float] = Field(None, description="-slope of log sigma_n against log n on the window")
    geometric_slope: Optional[float] = Field(None, description="Slope of log sigma_n against n on the window")
    window: List[int]
    column_mass: List[float] = Field(..., description="Truncated over full squared norm per column")
    truncation_warning: bool = Field(..., description="Some column keeps less mass than the threshold")
