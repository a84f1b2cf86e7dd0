"""
Shared annotated field types for numeric models.
"""

from typing import Annotated, Any, List

from pydantic import PlainSerializer


def complex_pair(value: Any) -> List[float]:
    """Render an exact or complex coefficient as a [re, im] pair."""
    c = complex(value)
    return [float(c.real), float(c.imag)]


def series_json(value: Any) -> Any:
    return value.to_json() if value is not None else None


# Exact rationals stay Fractions in Python; JSON carries [re, im].
Coefficient = Annotated[Any, PlainSerializer(complex_pair, return_type=List[float], when_used="json")]

# TruncatedSeries payloads; JSON carries a monomial list.
SeriesField = Annotated[Any, PlainSerializer(series_json, when_used="json")]

# Exact rationals stay Fractions in Python; JSON carries floats.
Real = Annotated[Any, PlainSerializer(float, return_type=float, when_used="json")]
