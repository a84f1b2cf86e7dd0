"""
Truncated multivariate power series with exact or floating coefficients.
"""

import cmath
import math
from fractions import Fraction
from math import factorial
from typing import Any, Callable, Dict, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.signal import fftconvolve

from app.core.errors import DimensionMismatchError, PreconditionError, SeriesCapMismatchError

Index = Tuple[int, ...]
Scalar = Union[int, Fraction, float, complex]

# Products with more pairwise terms than this go through FFT convolution
# when both operands carry floating coefficients.
DENSE_THRESHOLD = 4096


def is_exact_scalar(value: Any) -> bool:
    return isinstance(value, (int, Fraction)) and not isinstance(value, bool)


def _exp_scalar(value: Scalar) -> Scalar:
    if isinstance(value, complex):
        return cmath.exp(value)
    return math.exp(float(value))


def _cos_sin_scalar(value: Scalar) -> Tuple[Scalar, Scalar]:
    if isinstance(value, complex):
        return cmath.cos(value), cmath.sin(value)
    return math.cos(float(value)), math.sin(float(value))


class TruncatedSeries:
    """
    Power series in ``nvars`` variables with every monomial of total degree > ``cap`` dropped.

    Coefficients may be ints, Fractions, floats or complex numbers; arithmetic
    between exact series stays exact.
    """

    __slots__ = ("nvars", "cap", "coeffs")

    def __init__(self, nvars: int, cap: int, coeffs: Optional[Dict[Index, Scalar]] = None):
        if nvars < 0 or cap < 0:
            raise PreconditionError("nvars and cap must be nonnegative", {"nvars": nvars, "cap": cap})
        self.nvars = nvars
        self.cap = cap
        self.coeffs: Dict[Index, Scalar] = {}
        for idx, value in (coeffs or {}).items():
            idx = tuple(int(i) for i in idx)
            if len(idx) != nvars:
                raise DimensionMismatchError(
                    "Multi-index length does not match nvars", {"index": list(idx), "nvars": nvars}
                )
            if sum(idx) <= cap and value != 0:
                self.coeffs[idx] = value

    # construction

    @classmethod
    def zero(cls, nvars: int, cap: int) -> "TruncatedSeries":
        return cls(nvars, cap)

    @classmethod
    def constant(cls, nvars: int, cap: int, value: Scalar) -> "TruncatedSeries":
        return cls(nvars, cap, {(0,) * nvars: value})

    @classmethod
    def variable(cls, nvars: int, cap: int, j: int, scale: Scalar = 1) -> "TruncatedSeries":
        if not 0 <= j < nvars:
            raise DimensionMismatchError("Variable index out of range", {"j": j, "nvars": nvars})
        idx = tuple(1 if k == j else 0 for k in range(nvars))
        return cls(nvars, cap, {idx: scale})

    @classmethod
    def from_dense(cls, array: np.ndarray, cap: int) -> "TruncatedSeries":
        """Build a series from a dense coefficient array indexed by exponents."""
        coeffs: Dict[Index, Scalar] = {}
        for idx in zip(*np.nonzero(array)):
            key = tuple(int(i) for i in idx)
            if sum(key) <= cap:
                value = array[key]
                coeffs[key] = complex(value) if np.iscomplexobj(array) else float(value)
        return cls(array.ndim, cap, coeffs)

    def to_dense(self, dtype: Any = complex) -> np.ndarray:
        array = np.zeros((self.cap + 1,) * self.nvars, dtype=dtype)
        for idx, value in self.coeffs.items():
            array[idx] = value
        return array

    # inspection

    @property
    def is_exact(self) -> bool:
        return all(is_exact_scalar(v) for v in self.coeffs.values())

    @property
    def is_complex(self) -> bool:
        return any(isinstance(v, complex) for v in self.coeffs.values())

    @property
    def constant_term(self) -> Scalar:
        return self.coeffs.get((0,) * self.nvars, 0)

    @property
    def degree(self) -> int:
        """Largest total degree present, -1 for the zero series."""
        return max((sum(idx) for idx in self.coeffs), default=-1)

    def coeff(self, idx: Sequence[int]) -> Scalar:
        key = tuple(idx)
        if len(key) != self.nvars:
            raise DimensionMismatchError("Multi-index length does not match nvars", {"index": list(key)})
        return self.coeffs.get(key, 0)

    def items(self) -> Iterator[Tuple[Index, Scalar]]:
        """Monomials ordered by total degree, then lexicographically."""
        for idx in sorted(self.coeffs, key=lambda k: (sum(k), k)):
            yield idx, self.coeffs[idx]

    def max_abs(self) -> float:
        return max((abs(complex(v)) for v in self.coeffs.values()), default=0.0)

    def is_zero(self) -> bool:
        return not self.coeffs

    # arithmetic

    def _coerce(self, other: Any) -> "TruncatedSeries":
        if isinstance(other, TruncatedSeries):
            if other.nvars != self.nvars or other.cap != self.cap:
                raise SeriesCapMismatchError(
                    "Series shapes differ",
                    {"left": [self.nvars, self.cap], "right": [other.nvars, other.cap]},
                )
            return other
        return TruncatedSeries.constant(self.nvars, self.cap, other)

    def __add__(self, other: Any) -> "TruncatedSeries":
        other = self._coerce(other)
        out = dict(self.coeffs)
        for idx, value in other.coeffs.items():
            out[idx] = out.get(idx, 0) + value
        return TruncatedSeries(self.nvars, self.cap, out)

    __radd__ = __add__

    def __neg__(self) -> "TruncatedSeries":
        return TruncatedSeries(self.nvars, self.cap, {k: -v for k, v in self.coeffs.items()})

    def __sub__(self, other: Any) -> "TruncatedSeries":
        return self + (-self._coerce(other))

    def __rsub__(self, other: Any) -> "TruncatedSeries":
        return self._coerce(other) - self

    def scale(self, factor: Scalar) -> "TruncatedSeries":
        return TruncatedSeries(self.nvars, self.cap, {k: v * factor for k, v in self.coeffs.items()})

    def __mul__(self, other: Any) -> "TruncatedSeries":
        if not isinstance(other, TruncatedSeries):
            return self.scale(other)
        other = self._coerce(other)
        pairs = len(self.coeffs) * len(other.coeffs)
        if pairs > DENSE_THRESHOLD and not (self.is_exact or other.is_exact) and self.nvars > 0:
            return self._mul_dense(other)
        return self._mul_sparse(other)

    __rmul__ = __mul__

    def __truediv__(self, other: Scalar) -> "TruncatedSeries":
        if is_exact_scalar(other):
            return self.scale(Fraction(1) / Fraction(other))
        return self.scale(1.0 / other)

    def _mul_sparse(self, other: "TruncatedSeries") -> "TruncatedSeries":
        out: Dict[Index, Scalar] = {}
        cap = self.cap
        right = sorted(((sum(j), j, b) for j, b in other.coeffs.items()), key=lambda t: t[0])
        for i, a in self.coeffs.items():
            di = sum(i)
            for dj, j, b in right:
                if di + dj > cap:
                    break
                k = tuple(x + y for x, y in zip(i, j))
                out[k] = out.get(k, 0) + a * b
        return TruncatedSeries(self.nvars, cap, out)

    def _mul_dense(self, other: "TruncatedSeries") -> "TruncatedSeries":
        dtype = complex if (self.is_complex or other.is_complex) else float
        product = fftconvolve(self.to_dense(dtype), other.to_dense(dtype))
        product = product[(slice(0, self.cap + 1),) * self.nvars]
        grids = np.indices(product.shape).sum(axis=0)
        product[grids > self.cap] = 0
        return TruncatedSeries.from_dense(product, self.cap)

    def __pow__(self, power: int) -> "TruncatedSeries":
        if not isinstance(power, int) or power < 0:
            raise PreconditionError("Only nonnegative integer powers are supported", {"power": power})
        result = TruncatedSeries.constant(self.nvars, self.cap, 1)
        base = self
        while power:
            if power & 1:
                result = result * base
            power >>= 1
            if power:
                base = base * base
        return result

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TruncatedSeries):
            return NotImplemented
        return self.nvars == other.nvars and self.cap == other.cap and self.coeffs == other.coeffs

    __hash__ = None

    def __repr__(self) -> str:
        body = ", ".join(f"{list(k)}: {v}" for k, v in self.items())
        return f"TruncatedSeries(nvars={self.nvars}, cap={self.cap}, {{{body}}})"

    # structure

    def homogeneous(self, degree: int) -> "TruncatedSeries":
        return TruncatedSeries(
            self.nvars, self.cap, {k: v for k, v in self.coeffs.items() if sum(k) == degree}
        )

    def truncate(self, cap: int) -> "TruncatedSeries":
        """Drop everything above ``cap`` and lower the series cap to it."""
        return TruncatedSeries(self.nvars, min(cap, self.cap), self.coeffs)

    def with_cap(self, cap: int) -> "TruncatedSeries":
        return TruncatedSeries(self.nvars, cap, self.coeffs)

    def map_coefficients(self, fn: Callable[[Scalar], Scalar]) -> "TruncatedSeries":
        return TruncatedSeries(self.nvars, self.cap, {k: fn(v) for k, v in self.coeffs.items()})

    def real_part(self) -> "TruncatedSeries":
        return self.map_coefficients(lambda v: v.real if isinstance(v, complex) else v)

    def imag_part(self) -> "TruncatedSeries":
        return self.map_coefficients(lambda v: v.imag if isinstance(v, complex) else 0)

    def linear_substitute(self, matrix: Sequence[Sequence[Scalar]]) -> "TruncatedSeries":
        """
        Substitute old variable i = sum_j matrix[i][j] * y_j.

        Args:
            matrix: nvars rows; the column count sets the new number of variables

        Returns:
            Series in the new variables with the same cap
        """
        if len(matrix) != self.nvars:
            raise DimensionMismatchError(
                "Substitution rows must match nvars", {"rows": len(matrix), "nvars": self.nvars}
            )
        new_vars = len(matrix[0]) if matrix else 0
        images: List[TruncatedSeries] = []
        for row in matrix:
            if len(row) != new_vars:
                raise DimensionMismatchError("Ragged substitution matrix")
            image = TruncatedSeries.zero(new_vars, self.cap)
            for j, value in enumerate(row):
                if value != 0:
                    image = image + TruncatedSeries.variable(new_vars, self.cap, j, value)
            images.append(image)

        powers: Dict[Tuple[int, int], TruncatedSeries] = {}

        def power_of(i: int, e: int) -> TruncatedSeries:
            if (i, e) not in powers:
                powers[(i, e)] = images[i] ** e
            return powers[(i, e)]

        result = TruncatedSeries.zero(new_vars, self.cap)
        for idx, value in self.coeffs.items():
            term = TruncatedSeries.constant(new_vars, self.cap, value)
            for i, e in enumerate(idx):
                if e:
                    term = term * power_of(i, e)
            result = result + term
        return result

    def compose_univariate(self, taylor: Sequence[Scalar]) -> "TruncatedSeries":
        """Evaluate f(self) for f = sum taylor[k] x^k by Horner's rule; self must vanish at 0."""
        if self.constant_term != 0:
            raise PreconditionError("Composition needs a series without constant term")
        if not taylor:
            return TruncatedSeries.zero(self.nvars, self.cap)
        order = min(len(taylor) - 1, self.cap)
        result = TruncatedSeries.constant(self.nvars, self.cap, taylor[order])
        for k in range(order - 1, -1, -1):
            result = result * self + taylor[k]
        return result

    def exp(self) -> "TruncatedSeries":
        a = self.constant_term
        core = (self - a).compose_univariate([Fraction(1, factorial(k)) for k in range(self.cap + 1)])
        return core if a == 0 else core * _exp_scalar(a)

    def _cos_sin_core(self) -> Tuple["TruncatedSeries", "TruncatedSeries"]:
        x = self - self.constant_term
        cos_taylor: List[Scalar] = []
        sin_taylor: List[Scalar] = []
        for k in range(self.cap + 1):
            if k % 2 == 0:
                cos_taylor.append(Fraction((-1) ** (k // 2), factorial(k)))
                sin_taylor.append(0)
            else:
                cos_taylor.append(0)
                sin_taylor.append(Fraction((-1) ** ((k - 1) // 2), factorial(k)))
        return x.compose_univariate(cos_taylor), x.compose_univariate(sin_taylor)

    def cos(self) -> "TruncatedSeries":
        a = self.constant_term
        cos_x, sin_x = self._cos_sin_core()
        if a == 0:
            return cos_x
        ca, sa = _cos_sin_scalar(a)
        return cos_x * ca - sin_x * sa

    def sin(self) -> "TruncatedSeries":
        a = self.constant_term
        cos_x, sin_x = self._cos_sin_core()
        if a == 0:
            return sin_x
        ca, sa = _cos_sin_scalar(a)
        return sin_x * ca + cos_x * sa

    # evaluation

    def evaluate(self, point: Sequence[Any]) -> Any:
        """Sum of the truncated series at ``point``; entries may be numpy arrays."""
        if len(point) != self.nvars:
            raise DimensionMismatchError("Point length does not match nvars", {"nvars": self.nvars})
        total: Any = 0
        for idx, value in self.coeffs.items():
            term: Any = value
            for x, e in zip(point, idx):
                if e:
                    term = term * x**e
            total = total + term
        return total

    def is_close(self, other: "TruncatedSeries", tol: float = 1e-12) -> bool:
        diff = self - other
        return diff.max_abs() <= tol

    def to_json(self) -> List[Dict[str, Any]]:
        out = []
        for idx, value in self.items():
            c = complex(value)
            out.append({"index": list(idx), "c": [c.real, c.imag]})
        return out
