"""
Symbol-related data models.
"""

from enum import Enum
from typing import Any, Dict, List, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_serializer

from app.models.types import Coefficient, complex_pair


class RangeKind(str, Enum):
    """Whether the symbol's range stays away from the critical line."""

    RESTRICTED = "restricted"
    UNRESTRICTED = "unrestricted"


class DirichletSymbol(BaseModel):
    """Dirichlet polynomial symbol c0*s + c1 + sum c_n n^-s."""

    model_config = ConfigDict(
        frozen=True,
        arbitrary_types_allowed=True,
        json_schema_extra={
            "example": {
                "c0": 0,
                "c1": [4.5, 0.0],
                "terms": [{"n": 2, "c": [-1.0, 0.0]}, {"n": 3, "c": [-1.0, 0.0]}, {"n": 6, "c": [-2.0, 0.0]}],
            }
        },
    )

    c0: int = Field(0, ge=0, description="Characteristic")
    c1: Coefficient = Field(0, description="Constant coefficient")
    terms: Dict[int, Coefficient] = Field(default_factory=dict, description="Map n -> c_n, n >= 2, c_n != 0")

    @field_serializer("terms", when_used="json")
    def _serialize_terms(self, terms: Dict[int, Any]) -> List[Dict[str, Any]]:
        return [{"n": n, "c": complex_pair(terms[n])} for n in sorted(terms)]

    def support(self) -> List[int]:
        """The frequency set Lambda in increasing order."""
        return sorted(self.terms)

    def is_constant(self) -> bool:
        return not self.terms

    def is_exact(self) -> bool:
        values = [self.c1, *self.terms.values()]
        return not any(isinstance(v, complex) for v in values)


class ExponentVector(BaseModel):
    """Prime factorization n = prod p^e."""

    model_config = ConfigDict(frozen=True)

    entries: Dict[int, int] = Field(..., description="Map prime -> exponent >= 1")

    def value(self) -> int:
        n = 1
        for p, e in self.entries.items():
            n *= p**e
        return n


class GeneratingSet(BaseModel):
    """Q-independent multiplicative generators of the frequency set."""

    model_config = ConfigDict(
        frozen=True,
        json_schema_extra={
            "example": {"generators": [2, 3], "exponent_map": {"2": [1, 0], "3": [0, 1], "6": [1, 1]}}
        },
    )

    generators: List[int] = Field(..., description="Generators q_1 < ... < q_d")
    exponent_map: Dict[int, Tuple[int, ...]] = Field(..., description="Map n -> alpha(n)")

    @property
    def dim(self) -> int:
        return len(self.generators)

    def degree(self) -> int:
        """max |alpha(n)| over the frequency set."""
        return max((sum(alpha) for alpha in self.exponent_map.values()), default=0)

    def reconstruct(self, n: int) -> int:
        value = 1
        for q, e in zip(self.generators, self.exponent_map[n]):
            value *= q**e
        return value


class SymbolProfile(BaseModel):
    """Structural invariants of a symbol."""

    model_config = ConfigDict(frozen=True)

    characteristic: int = Field(0, description="c0 of the symbol")
    dimension: int = Field(..., description="Complex dimension d")
    all_minimal_sets: List[GeneratingSet] = Field(default_factory=list, description="All size-d generating sets")
    optimal_set: GeneratingSet = Field(..., description="Degree-minimizing generating set")
    degree: int = Field(..., description="Degree under the optimal set")
    range_kind: RangeKind = Field(..., description="Restricted or unrestricted range")
    class_member: bool = Field(..., description="Whether the symbol lies in the admissible class")
    min_re: float = Field(..., description="Minimum of Re Phi over the torus")
    separated: bool = Field(False, description="Every term depends on a single generator")

    def degrees_by_set(self) -> Dict[str, int]:
        return {",".join(map(str, s.generators)): s.degree() for s in self.all_minimal_sets}
