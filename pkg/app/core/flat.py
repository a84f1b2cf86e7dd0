"""
Polynomials with prescribed flatness of Re Phi on the unit circle, separated
examples built from them, and the non-compact counterexample families.
"""

import math
from fractions import Fraction
from math import comb, factorial
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import mpmath
import numpy as np
import sympy

from app.config.settings import settings
from app.core.bohr_lift import evaluate_theta
from app.core.errors import CertificationError, InconsistentInputError, PreconditionError
from app.models.flat import (
    CertificationReport,
    ChebyshevBasisPoly,
    ChebyshevKind,
    ConstructionResult,
    CounterexampleKind,
    FlatPolynomial,
)
from app.models.lift import BohrLift
from app.utils.logger import get_logger
from app.utils.parallel import ordered_map

logger = get_logger(__name__)

Poly = List[Any]


def chebyshev_coeffs(kind: Union[ChebyshevKind, str], n: int) -> ChebyshevBasisPoly:
    """
    Exact coefficients of T_n or U_n in powers of (1 - y).

    Args:
        kind: T or U
        n: Degree, n >= 0 for U and n >= 1 for T

    Returns:
        Basis polynomial
    """
    kind = ChebyshevKind(kind)
    if kind == ChebyshevKind.U:
        if n < 0:
            raise PreconditionError("U_n needs n >= 0", {"n": n})
        coeffs = [Fraction((-2) ** j * comb(n + j + 1, 2 * j + 1)) for j in range(n + 1)]
    else:
        if n < 1:
            raise PreconditionError("T_n needs n >= 1", {"n": n})
        coeffs = [
            n * Fraction((-2) ** j * factorial(n + j - 1), factorial(n - j) * factorial(2 * j)) for j in range(n + 1)
        ]
    return ChebyshevBasisPoly(kind=kind, n=n, coeffs_in_one_minus_y=coeffs)


def chebyshev_identity_residual(n: int, samples: int = 1000, dps: int = 50) -> Tuple[float, float]:
    """
    Largest deviation from sin nx = sin x U_{n-1}(cos x) and cos nx = T_n(cos x)
    over ``samples`` points, evaluated with ``dps`` digits.
    """
    u = chebyshev_coeffs(ChebyshevKind.U, n - 1)
    t = chebyshev_coeffs(ChebyshevKind.T, n)
    worst_sin = mpmath.mpf(0)
    worst_cos = mpmath.mpf(0)
    with mpmath.workdps(dps):
        for k in range(samples):
            x = mpmath.mpf(2) * mpmath.pi * k / samples - mpmath.pi
            c = mpmath.cos(x)
            u_val = _evaluate_mp(u, c)
            t_val = _evaluate_mp(t, c)
            worst_sin = max(worst_sin, abs(mpmath.sin(n * x) - mpmath.sin(x) * u_val))
            worst_cos = max(worst_cos, abs(mpmath.cos(n * x) - t_val))
    return float(worst_sin), float(worst_cos)


def _evaluate_mp(poly: ChebyshevBasisPoly, y: Any) -> Any:
    t = 1 - y
    total = mpmath.mpf(0)
    for c in reversed(poly.coeffs_in_one_minus_y):
        total = total * t + mpmath.mpf(c.numerator) / c.denominator
    return total


def _poly_add(p: Poly, q: Poly) -> Poly:
    size = max(len(p), len(q))
    return [(p[i] if i < len(p) else 0) + (q[i] if i < len(q) else 0) for i in range(size)]


def _poly_mul(p: Poly, q: Poly) -> Poly:
    out: Poly = [0] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        for j, b in enumerate(q):
            out[i + j] += a * b
    return out


def basis_pair(n: int) -> Tuple[Poly, Poly]:
    """
    P_n and Q_n as coefficient lists in y = 1 - cos x, with

    P_n(y) = y^n ((1 - y/2) U_{n-1}(1 - y) - T_n(1 - y)/2) and Q_n(y) = y^n T_n(1 - y).
    """
    u = chebyshev_coeffs(ChebyshevKind.U, n - 1).shifted()
    t = chebyshev_coeffs(ChebyshevKind.T, n).shifted()
    inner = _poly_add(_poly_mul([Fraction(1), Fraction(-1, 2)], u), [-c / 2 for c in t])
    shift = [Fraction(0)] * n
    return shift + inner, shift + t


def system_matrix(n_blocks: int) -> List[List[Fraction]]:
    """
    Linear map (a_N, b_N, ..., a_1, b_1) -> (c_2N, ..., c_1).

    Block n touches c_n .. c_2n only, so every entry right of the diagonal
    2x2 blocks vanishes.
    """
    size = 2 * n_blocks
    matrix = [[Fraction(0)] * size for _ in range(size)]
    for n in range(1, n_blocks + 1):
        p, q = basis_pair(n)
        col = 2 * (n_blocks - n)
        for m in range(1, size + 1):
            row = size - m
            matrix[row][col] = p[m] if m < len(p) else Fraction(0)
            matrix[row][col + 1] = q[m] if m < len(q) else Fraction(0)
    return matrix


def is_block_triangular(matrix: Sequence[Sequence[Any]]) -> bool:
    """Every 2x2 block strictly right of the block diagonal is zero."""
    size = len(matrix)
    for row in range(size):
        for col in range(size):
            if col // 2 > row // 2 and matrix[row][col] != 0:
                return False
    return True


def printed_determinant_integer_roots(limit: int = 50) -> List[int]:
    """Integers 1..limit where n^2 - (2n-1)(n-2)/4 vanishes."""
    return [n for n in range(1, limit + 1) if Fraction(n * n) - Fraction((2 * n - 1) * (n - 2), 4) == 0]


def _binomial_expansion(power: int) -> Poly:
    """(1 - z)^power in powers of z."""
    return [Fraction((-1) ** k * comb(power, k)) for k in range(power + 1)]


def _to_number(value: Any, exact: bool) -> Any:
    if exact:
        if isinstance(value, (int, Fraction)):
            return Fraction(value)
        return Fraction(repr(float(value)))
    return float(value)


def build_flat_polynomial(target: Sequence[Any], exact: Optional[bool] = None) -> FlatPolynomial:
    """
    Solve for a_n, b_n so that Re Phi(e^{ix}) = sum_m c_m (1 - cos x)^m.

    Args:
        target: c_1 .. c_2N
        exact: Rational solve; default for N up to the configured limit

    Returns:
        Flat polynomial with its one-variable lift
    """
    if len(target) < 2 or len(target) % 2:
        raise PreconditionError("Target needs an even number of entries, at least two", {"length": len(target)})
    n_blocks = len(target) // 2
    exact = n_blocks <= settings.exact_max_n if exact is None else exact
    residual = [_to_number(c, exact) for c in target]
    convert = (lambda v: v) if exact else float

    a: Dict[int, Any] = {}
    b: Dict[int, Any] = {}
    determinants: Dict[int, Any] = {}
    for n in range(n_blocks, 0, -1):
        p, q = (list(map(convert, poly)) for poly in basis_pair(n))
        top, low = 2 * n, 2 * n - 1
        det = p[top] * q[low] - q[top] * p[low]
        if det == 0:
            raise InconsistentInputError("Singular diagonal block", {"n": n})
        determinants[n] = det
        a[n] = (residual[top - 1] * q[low] - q[top] * residual[low - 1]) / det
        b[n] = (p[top] * residual[low - 1] - residual[top - 1] * p[low]) / det
        for m in range(n, top + 1):
            residual[m - 1] -= a[n] * p[m] + b[n] * q[m]

    coefficients: Poly = [0]
    for n in range(1, n_blocks + 1):
        sign = convert(Fraction((-1) ** (n - 1), 2**n))
        odd = [sign * a[n] * c for c in map(convert, _binomial_expansion(2 * n - 1))]
        even = [-sign * b[n] * c for c in map(convert, _binomial_expansion(2 * n))]
        coefficients = _poly_add(coefficients, _poly_add(odd, even))

    lift = BohrLift(
        constant=coefficients[0],
        terms={(k,): c for k, c in enumerate(coefficients) if k and c != 0},
        dim=1,
    )
    logger.debug("Flat polynomial built", n_blocks=n_blocks, exact=exact)
    return FlatPolynomial(
        n_blocks=n_blocks,
        target=[_to_number(c, exact) for c in target],
        a=[a[n] for n in range(1, n_blocks + 1)],
        b=[b[n] for n in range(1, n_blocks + 1)],
        block_determinants=[determinants[n] for n in range(1, n_blocks + 1)],
        exact=exact,
        lift=lift,
    )


def flat_residual(poly: FlatPolynomial, samples: int = 1000) -> float:
    """Largest |Re Phi(e^{ix}) - sum_m c_m (1 - cos x)^m| over an x grid."""
    x = np.linspace(-math.pi, math.pi, samples)
    y = 2 * np.sin(x / 2) ** 2
    target = sum(float(c) * y ** (m + 1) for m, c in enumerate(poly.target))
    values = evaluate_theta(poly.lift, x[:, None]).real
    return float(np.max(np.abs(values - target)))


def _grid_size(dim: int, grid: Optional[int], max_points: Optional[int]) -> int:
    grid = grid or settings.certify_grid
    budget = max_points or settings.certify_max_points
    per_dim = int(math.floor(budget ** (1.0 / dim) + 1e-9)) if dim else 1
    size = max(2, min(grid, per_dim))
    return size - size % 2


def certify(
    phi: BohrLift,
    grid: Optional[int] = None,
    max_points: Optional[int] = None,
    excluded_radius: Optional[float] = None,
) -> CertificationReport:
    """
    Evaluate Re Phi on a regular torus grid that contains theta = 0.

    Args:
        phi: Lift
        grid: Points per dimension, default from settings
        max_points: Total point budget, default from settings
        excluded_radius: When given, count grid zeros outside this sup-norm
            radius around the origin

    Returns:
        Certification report
    """
    d = phi.dim
    size = _grid_size(d, grid, max_points)
    total = size**d
    axis = -math.pi + 2 * math.pi * np.arange(size) / size
    tol = 1e-12 * (1 + phi.l1_norm())
    chunk = settings.chunk_size

    def scan(start: int) -> Tuple[float, int, int]:
        flat = np.arange(start, min(start + chunk, total))
        theta = axis[np.stack(np.unravel_index(flat, (size,) * d), axis=1)] if d else np.zeros((flat.size, 0))
        re = evaluate_theta(phi, theta).real
        best = int(np.argmin(re))
        zeros = 0
        if excluded_radius is not None:
            far = np.max(np.abs(theta), axis=1) > excluded_radius if d else np.zeros(flat.size, bool)
            zeros = int(np.count_nonzero((re <= tol) & far))
        return float(re[best]), int(flat[best]), zeros

    parts = ordered_map(scan, range(0, total, chunk))
    min_re, arg_flat, _ = min(parts, key=lambda item: item[0])
    argmin = [float(axis[i]) for i in np.unravel_index(arg_flat, (size,) * d)] if d else []
    lipschitz = float(sum(abs(complex(c)) * sum(alpha) for alpha, c in phi.terms.items()))
    report = CertificationReport(
        grid_per_dim=size,
        points=total,
        min_re=min_re,
        argmin=argmin,
        lipschitz=lipschitz,
        lower_bound=min_re - lipschitz * math.pi / size,
        passed=min_re >= -tol,
        zeros_off_origin=sum(p[2] for p in parts) if excluded_radius is not None else None,
    )
    logger.debug("Grid certification finished", points=total, min_re=min_re, passed=report.passed)
    return report


def _combine_axes(components: Sequence[BohrLift]) -> BohrLift:
    d = len(components)
    constant: Any = 0
    terms: Dict[Tuple[int, ...], Any] = {}
    for j, comp in enumerate(components):
        constant = constant + comp.constant
        for (k,), c in comp.terms.items():
            alpha = tuple(k if i == j else 0 for i in range(d))
            terms[alpha] = c
    return BohrLift(constant=constant, terms=terms, dim=d)


def _axis_certificate(comp: FlatPolynomial, order: int, size: int) -> CertificationReport:
    """One-variable grid check of Re Phi_j; zeros count only outside the flat neighbourhood of 0."""
    tol = 1e-12 * (1 + comp.lift.l1_norm())
    radius = math.acos(1 - min((10 * tol) ** (2.0 / order), 2.0))
    return certify(comp.lift, grid=size, max_points=size, excluded_radius=radius)


def build_separated_example(orders: Sequence[int], grid: Optional[int] = None) -> ConstructionResult:
    """
    Phi(z) = sum_j Phi_j(z_j) with Re Phi_j(e^{ix}) = (1 - cos x)^(k_j / 2).

    Orders count powers of theta, not of 1 - z: k_j = 2 gives Re Phi_j = 1 - cos x
    and k_j = 4 gives Phi_j = (1 - z) + (1 - z)^2 / 2, vanishing like theta^4 / 4.

    Re Phi splits over the axes, so the torus certificate is assembled from
    one-variable grids: the minimum is the sum of the axis minima and a torus
    zero needs a zero on every axis.

    Args:
        orders: Even flatness orders k_j >= 2; Re Phi ~ sum theta_j^k_j / 2^(k_j/2)
        grid: Certification grid per axis

    Returns:
        Lift with its components and certification
    """
    if not orders or any(k < 2 or k % 2 for k in orders):
        raise PreconditionError("Orders must be even integers >= 2", {"orders": list(orders)})
    size = _grid_size(1, grid, grid or settings.certify_grid)
    components = []
    axes = []
    for k in orders:
        m = k // 2
        target = [0] * (2 * math.ceil(m / 2))
        target[m - 1] = 1
        comp = build_flat_polynomial(target)
        if not comp.a[0] > 0:
            raise CertificationError("First-order coefficient must be positive", {"order": k, "a1": float(comp.a[0])})
        components.append(comp)
        axes.append(_axis_certificate(comp, k, size))

    report = CertificationReport(
        grid_per_dim=size,
        points=size * len(orders),
        min_re=sum(a.min_re for a in axes),
        argmin=[a.argmin[0] for a in axes],
        lipschitz=sum(a.lipschitz for a in axes),
        lower_bound=sum(a.lower_bound for a in axes),
        passed=all(a.passed for a in axes),
        zeros_off_origin=sum(a.zeros_off_origin or 0 for a in axes),
    )
    if not report.passed or report.zeros_off_origin:
        raise CertificationError(
            "Re Phi vanishes away from the origin", {"orders": list(orders), "zeros": report.zeros_off_origin}
        )
    phi = _combine_axes([c.lift for c in components])
    logger.info("Separated example built", orders=list(orders), dim=len(orders))
    return ConstructionResult(
        name="separated",
        lift=phi,
        certification=report,
        parameters={"orders": list(orders)},
        components=components,
    )


def build_flat_example(k: int, n_blocks: Optional[int] = None, grid: Optional[int] = None) -> ConstructionResult:
    """
    One-variable Phi with Re Phi(e^{ix}) = (1 - cos x)^k, certified on a grid.

    Args:
        k: Flatness power, Re Phi ~ theta^(2k) / 2^k
        n_blocks: N, default the smallest with 2N >= k
        grid: Certification grid size

    Returns:
        Lift with its single component and certification
    """
    n_blocks = n_blocks or math.ceil(k / 2)
    if not 1 <= k <= 2 * n_blocks:
        raise PreconditionError("Need 1 <= k <= 2N", {"k": k, "N": n_blocks})
    target = [0] * (2 * n_blocks)
    target[k - 1] = 1
    comp = build_flat_polynomial(target)
    size = _grid_size(1, grid, grid or settings.certify_grid)
    report = _axis_certificate(comp, 2 * k, size)
    if not report.passed or report.zeros_off_origin:
        raise CertificationError("Re Phi vanishes away from the origin", {"k": k, "zeros": report.zeros_off_origin})
    logger.info("Flat example built", k=k, n_blocks=n_blocks)
    return ConstructionResult(
        name="flat",
        lift=comp.lift,
        certification=report,
        parameters={"k": k, "N": n_blocks, "flatness_residual": flat_residual(comp)},
        components=[comp],
    )


def _sympy_number(value: Any) -> sympy.Expr:
    if isinstance(value, Fraction):
        return sympy.Rational(value.numerator, value.denominator)
    if isinstance(value, float):
        return sympy.Rational(repr(value))
    return sympy.sympify(value)


def _from_sympy(value: sympy.Expr) -> Any:
    if value.is_Rational:
        return Fraction(int(value.p), int(value.q))
    c = complex(value)
    return c.real if c.imag == 0 else c


def _variables_in(text: str) -> int:
    expr = sympy.sympify(text)
    indices = [int(str(s)[1:]) for s in expr.free_symbols if str(s).startswith("z") and str(s)[1:].isdigit()]
    if len(indices) != len(expr.free_symbols):
        raise PreconditionError("Polynomial may only use variables z1, z2, ...", {"poly": text})
    return max(indices, default=0)


def counterexample_factory(
    kind: Union[CounterexampleKind, str],
    delta: Any,
    poly: Optional[str] = None,
    dim: Optional[int] = None,
    grid: Optional[int] = None,
    max_points: Optional[int] = None,
) -> ConstructionResult:
    """
    Members of the non-compact families.

    cex3:  (1-z1) + delta (1-z1)^2 P(z)
    cex5a: 2(1-z1) + (1-z1)^2 (1 - delta w - delta (1-z1) w), w = mean of (1-z_j), j >= 2
    cex5b: (1-z1) + (1-z1)^2/2 + delta (1-z1)^4 P(z)

    Raises:
        CertificationError: Re Phi takes negative values on the grid
    """
    kind = CounterexampleKind(kind)
    if not delta > 0:
        raise PreconditionError("delta must be positive", {"delta": float(delta)})
    poly_text = poly or "z2"
    if kind == CounterexampleKind.CEX5A:
        d = max(2, dim or 2)
    else:
        d = max(2, dim or 0, _variables_in(poly_text))

    zs = sympy.symbols(f"z1:{d + 1}")
    locals_ = {f"z{i + 1}": zs[i] for i in range(d)}
    dl = _sympy_number(delta)
    x1 = 1 - zs[0]
    if kind == CounterexampleKind.CEX3:
        expr = x1 + dl * x1**2 * sympy.sympify(poly_text, locals=locals_)
    elif kind == CounterexampleKind.CEX5B:
        expr = x1 + x1**2 / 2 + dl * x1**4 * sympy.sympify(poly_text, locals=locals_)
    else:
        w = sum(1 - z for z in zs[1:]) / (d - 1)
        expr = 2 * x1 + x1**2 * (1 - dl * w - dl * x1 * w)

    polynomial = sympy.Poly(sympy.expand(expr), *zs)
    constant: Any = 0
    terms: Dict[Tuple[int, ...], Any] = {}
    for monom, coeff in polynomial.terms():
        value = _from_sympy(coeff)
        if sum(monom) == 0:
            constant = value
        else:
            terms[tuple(int(e) for e in monom)] = value
    phi = BohrLift(constant=constant, terms=terms, dim=d)

    report = certify(phi, grid=grid, max_points=max_points)
    if not report.passed:
        raise CertificationError(
            "delta too large for this P", {"kind": kind.value, "delta": float(delta), "min_re": report.min_re}
        )
    logger.info("Counterexample built", kind=kind.value, delta=float(delta), dim=d)
    return ConstructionResult(
        name=kind.value,
        lift=phi,
        certification=report,
        parameters={"delta": float(delta), "poly": poly_text if kind != CounterexampleKind.CEX5A else None, "dim": d},
    )
