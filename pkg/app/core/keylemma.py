"""
Order-by-order factorization of Re phi = gamma^2, Im phi = gamma * h for the
two-variable quadratic family, and the coefficient identities behind it.
"""

from fractions import Fraction
from typing import Any, Callable, List, Optional, Tuple

import numpy as np
import sympy

from app.config.settings import settings
from app.core.bohr_lift import evaluate
from app.core.errors import PreconditionError
from app.core.series import TruncatedSeries
from app.models.keylemma import (
    CurveCheck,
    FactorizationAttempt,
    GeometryReport,
    KeylemmaParams,
    Obstruction,
    ResidualEntry,
    ResidualReport,
    StepThreeReport,
    SweepCell,
    SweepReport,
)
from app.models.lift import BohrLift
from app.utils.logger import get_logger
from app.utils.parallel import ordered_map

logger = get_logger(__name__)

# Pairs (real series, imaginary series) stand in for complex series so that
# exact rational coefficients survive.
Pair = Tuple[TruncatedSeries, TruncatedSeries]

SOLVE_ORDER = (("Re", 3), ("Im", 2), ("Re", 4), ("Im", 3), ("Re", 5), ("Im", 4))
SOLVE_CAP = 5


def _pair_mul(x: Pair, y: Pair) -> Pair:
    return x[0] * y[0] - x[1] * y[1], x[0] * y[1] + x[1] * y[0]


def _pair_scale(x: Pair, re: Any, im: Any) -> Pair:
    return x[0] * re - x[1] * im, x[0] * im + x[1] * re


def _pair_add(*items: Pair) -> Pair:
    re, im = items[0]
    for x in items[1:]:
        re, im = re + x[0], im + x[1]
    return re, im


def check_params(p: KeylemmaParams) -> None:
    """0 < a2 <= a1 <= 1 and a2 <= 1 - a1."""
    slack = 0 if p.exact else 1e-12
    if not (p.a2 > 0 and p.a2 <= p.a1 + slack and p.a1 <= 1 + slack and p.a2 <= 1 - p.a1 + slack):
        raise PreconditionError(
            "Parameters outside the admissible triangle", {"a1": float(p.a1), "a2": float(p.a2)}
        )


def to_exact(p: KeylemmaParams) -> KeylemmaParams:
    """Rational copy of the parameters from their shortest decimal representation."""
    convert = lambda v: Fraction(v) if isinstance(v, (int, Fraction)) else Fraction(repr(float(v)))  # noqa: E731
    return KeylemmaParams(
        a1=convert(p.a1), a2=convert(p.a2), im_b1=convert(p.im_b1), im_b2=convert(p.im_b2), im_c=convert(p.im_c)
    )


def expand_phi_uv(p: KeylemmaParams, cap: int = 6) -> Tuple[TruncatedSeries, TruncatedSeries]:
    """
    Taylor coefficients of Re phi and Im phi in (u, v) through total degree ``cap``,
    where theta1 = a2 u + a2 v and theta2 = a1 u - a1 v.

    Args:
        p: Parameters
        cap: Degree bound

    Returns:
        (Re series, Im series)
    """
    check_params(p)
    thetas = [
        TruncatedSeries(2, cap, {(1, 0): p.a2, (0, 1): p.a2}),
        TruncatedSeries(2, cap, {(1, 0): p.a1, (0, 1): -p.a1}),
    ]
    x = [(1 - t.cos(), -t.sin()) for t in thetas]

    phi = _pair_add(
        (x[0][0] * p.a1, x[0][1] * p.a1),
        (x[1][0] * p.a2, x[1][1] * p.a2),
        _pair_scale(_pair_mul(x[0], x[0]), p.re_b1, p.im_b1),
        _pair_scale(_pair_mul(x[1], x[1]), p.re_b2, p.im_b2),
        _pair_scale(_pair_mul(x[0], x[1]), p.re_c, p.im_c),
    )
    return phi


def series_arith(op: str, left: TruncatedSeries, right: Any = None) -> Any:
    """
    Dispatch one truncated-ring operation by name.

    ``coeff`` takes a multi-index as ``right``; ``linear_substitute`` takes a matrix.
    """
    if op == "add":
        return left + right
    if op == "mul":
        return left * right
    if op == "scale":
        return left.scale(right)
    if op == "linear_substitute":
        return left.linear_substitute(right)
    if op == "coeff":
        return left.coeff(right)
    raise PreconditionError("Unknown series operation", {"op": op})


def _zero_test(exact: bool) -> Tuple[Callable[[Any], bool], float]:
    if exact:
        return (lambda value: value == 0), 0.0
    tol = settings.keylemma_tol
    return (lambda value: abs(value) <= tol), tol


def _leading_checks(
    re: TruncatedSeries, im: TruncatedSeries, g: Any, is_zero: Callable[[Any], bool]
) -> Optional[Obstruction]:
    """Re phi must start with g^2 u^2 and Im phi with g u."""
    expected_re = TruncatedSeries(2, re.cap, {(2, 0): g * g})
    expected_im = TruncatedSeries(2, im.cap, {(1, 0): g})
    for part, series, expected, top in (("Re", re, expected_re, 2), ("Im", im, expected_im, 1)):
        diff = series - expected
        for idx, value in diff.items():
            if sum(idx) <= top and not is_zero(value):
                return Obstruction(part=part, index=list(idx), residual=value)
    return None


def attempt_factorization(p: KeylemmaParams) -> FactorizationAttempt:
    """
    Solve for gamma and h order by order and report the first unmet condition.

    At Re degree n the monomials containing u fix gamma_{n-1}; at Im degree n
    they fix h_{n-1}. The pure v^n coefficient left over is a scalar condition.
    Conditions are visited as Re v^3, Im v^2, Re v^4, Im v^3, Re v^5, Im v^4.
    """
    re, im = expand_phi_uv(p, cap=SOLVE_CAP)
    is_zero, tol = _zero_test(p.exact)
    g = -2 * p.a1 * p.a2

    gamma = TruncatedSeries(2, SOLVE_CAP, {(1, 0): g})
    h = TruncatedSeries.constant(2, SOLVE_CAP, 1)
    conditions: List[Obstruction] = []
    obstruction = _leading_checks(re, im, g, is_zero)

    for part, n in SOLVE_ORDER:
        if part == "Re":
            rest = re.homogeneous(n) - (gamma * gamma).homogeneous(n)
            divisor = 2 * g
        else:
            rest = im.homogeneous(n) - (gamma * h).homogeneous(n)
            divisor = g
        new_terms = {(i - 1, j): value / divisor for (i, j), value in rest.coeffs.items() if i >= 1}
        update = TruncatedSeries(2, SOLVE_CAP, new_terms)
        if part == "Re":
            gamma = gamma + update
        else:
            h = h + update

        condition = Obstruction(part=part, index=[0, n], residual=rest.coeff((0, n)))
        conditions.append(condition)
        if obstruction is None and not is_zero(condition.residual):
            obstruction = condition

    if obstruction is not None:
        logger.debug("Factorization obstructed", part=obstruction.part, index=obstruction.index)
    return FactorizationAttempt(
        params=p,
        gamma=gamma.truncate(4),
        h=h.truncate(2),
        conditions=conditions,
        obstruction=obstruction,
        tolerance=tol,
    )


def _condition(attempt: FactorizationAttempt, part: str, n: int) -> Any:
    for item in attempt.conditions:
        if item.part == part and item.index == [0, n]:
            return item.residual
    raise KeyError((part, n))


def im_b_closed_forms(a1: Any, a2: Any, im_c: Any) -> Tuple[Any, Any]:
    """Im b1 and Im b2 solving the Re v^3 and Im v^2 conditions for a given Im c."""
    d = 2 * a1 + 2 * a2 - 3
    if d == 0:
        raise PreconditionError("2 a1 + 2 a2 - 3 vanishes", {"a1": float(a1), "a2": float(a2)})
    im_b1 = a1 * (2 * a2**2 + 2 * a1 * a2 + a1 - 2 * a2) / (2 * a2**2 * d) * im_c
    im_b2 = a2 * (2 * a1**2 + 2 * a1 * a2 - 2 * a1 + a2) / (2 * a1**2 * d) * im_c
    return im_b1, im_b2


def conditioned_params(a1: Any, a2: Any, im_c: Any) -> KeylemmaParams:
    """Parameters whose Im b1, Im b2 satisfy the two lowest-order conditions."""
    im_b1, im_b2 = im_b_closed_forms(a1, a2, im_c)
    return KeylemmaParams(a1=a1, a2=a2, im_b1=im_b1, im_b2=im_b2, im_c=im_c)


def imc2_from_re_v4(a1: Any, a2: Any) -> Any:
    """Im(c)^2 forced by the v^4 coefficient of Re phi."""
    s = a1 + a2
    d = 2 * s - 3
    return -a1 * a2 * d**2 * (a1 * a2**2 + a1**2 * a2 - a1**2 - a2**2 + a1 * a2) / s**3


def imc2_from_im_v3(a1: Any, a2: Any) -> Any:
    """Im(c)^2 forced by the v^3 coefficient of Im phi, for a1 != a2 and a1 + a2 != 1."""
    s = a1 + a2
    d = 2 * s - 3
    return -a1 * a2 * d**2 * (3 * a1 * a2**2 + 3 * a1**2 * a2 - a1**2 - a2**2 - a1 * a2) / (3 * s**2 * (s - 1))


def imc2_diagonal(a: Any) -> Any:
    """Im(c)^2 forced by the v^4 coefficient of Im phi when a1 = a2 = a."""
    return -(a**2) * (4 * a - 3) * (4 * a - 5) / 4


def re_phi_at_minus_one(p: KeylemmaParams) -> Any:
    """Re Phi(-1, -1) = 4 (a1 + a2)(1 - a1 - a2)."""
    s = p.a1 + p.a2
    return 4 * s * (1 - s)


def keylemma_lift(p: KeylemmaParams) -> BohrLift:
    """Phi expanded in monomials of z1, z2."""
    b1 = (p.re_b1, p.im_b1)
    b2 = (p.re_b2, p.im_b2)
    c = (p.re_c, p.im_c)

    def coefficient(re: Any, im: Any) -> Any:
        if im == 0:
            return re
        return complex(float(re), float(im))

    constant = (p.a1 + p.a2 + b1[0] + b2[0] + c[0], b1[1] + b2[1] + c[1])
    terms = {
        (1, 0): (-p.a1 - 2 * b1[0] - c[0], -2 * b1[1] - c[1]),
        (0, 1): (-p.a2 - 2 * b2[0] - c[0], -2 * b2[1] - c[1]),
        (2, 0): b1,
        (0, 2): b2,
        (1, 1): c,
    }
    return BohrLift(
        constant=coefficient(*constant),
        terms={k: coefficient(*v) for k, v in terms.items() if v != (0, 0)},
        dim=2,
    )


def _entry(name: str, series_value: Any, closed_form: Any, counted: bool = True, note: str = "") -> ResidualEntry:
    return ResidualEntry(
        name=name,
        series_value=series_value,
        closed_form=closed_form,
        residual=abs(series_value - closed_form),
        counted=counted,
        note=note,
    )


def _skipped(name: str, note: str) -> ResidualEntry:
    return ResidualEntry(name=name, applicable=False, counted=False, note=note)


def keylemma_equations(p: KeylemmaParams) -> ResidualReport:
    """
    Check the coefficient identities of the factorization against the series.

    Identities linear in the imaginary parts are checked at the given
    parameters. Those in terms of Im c alone are checked at the conditioned
    parameters, where Im b1 and Im b2 come from their closed forms.

    Args:
        p: Parameters; rational entries give exact residuals

    Returns:
        Residual report
    """
    check_params(p)
    a1, a2, ib1, ib2, ic = p.a1, p.a2, p.im_b1, p.im_b2, p.im_c
    s = a1 + a2
    d = 2 * s - 3
    if d == 0:
        raise PreconditionError("2 a1 + 2 a2 - 3 vanishes", {"a1": float(a1), "a2": float(a2)})
    is_zero, tol = _zero_test(p.exact)
    g = -2 * a1 * a2

    re, im = expand_phi_uv(p, cap=SOLVE_CAP)
    gamma02 = re.coeff((1, 2)) / (2 * g)
    entries: List[ResidualEntry] = []

    derived_v3 = a2**3 * ib1 - a1**3 * ib2 + a1 * a2 * (a1 - a2) / 2 * ic
    printed_v3 = a2**3 * ib1 - a1**3 * ib2 + a1 * a2 * (a2 - a1) / 2 * ic
    entries.append(_entry("re_v3", re.coeff((0, 3)), derived_v3))
    entries.append(
        _entry("re_v3_printed_sign", re.coeff((0, 3)), printed_v3, counted=False, note="Im c term with opposite sign")
    )

    printed_v2 = (
        (4 * a1 * a2**2 - 3 * a2**2) / (4 * a1) * ib1
        + (4 * a1**2 * a2 - 3 * a1**2) / (4 * a2) * ib2
        + (-8 * a1 * a2 + a1 + a2) / 8 * ic
    )
    entries.append(
        _entry("im_v2", im.coeff((0, 2)) - gamma02, -printed_v2, note="condition equals minus the printed left side")
    )
    entries.append(
        _entry(
            "gamma02",
            gamma02,
            (-6 * a1**3 * ib2 - 6 * a2**3 * ib1 + a1 * a2 * (a1 + a2) * ic) / (8 * a1 * a2),
        )
    )
    entries.append(
        _entry(
            "re_v4_coefficient",
            re.coeff((0, 4)),
            -a1 * a2 * s * (a1 * a2**2 + a1**2 * a2 - a1**2 - a2**2 + a1 * a2) / 4,
        )
    )

    q = conditioned_params(a1, a2, ic)
    q_re, q_im = expand_phi_uv(q, cap=SOLVE_CAP)
    q_gamma02 = q_re.coeff((1, 2)) / (2 * g)
    lowest = max(abs(q_re.coeff((0, 3))), abs(q_im.coeff((0, 2)) - q_gamma02))
    entries.append(_entry("im_b_closed_forms", lowest, 0, note="Re v^3 and Im v^2 conditions at the conditioned point"))
    entries.append(_entry("gamma02_closed_form", q_gamma02, -(s**2) * ic / (2 * d)))
    entries.append(_entry("imc2_from_re_v4", 4 * d**2 * q_re.coeff((0, 4)) / s**4, imc2_from_re_v4(a1, a2)))

    if a1 != a2 and s != 1:
        at0 = _condition(attempt_factorization(conditioned_params(a1, a2, 0 * ic)), "Im", 3)
        at1 = _condition(attempt_factorization(conditioned_params(a1, a2, 0 * ic + 1)), "Im", 3)
        slope = at1 - at0
        if is_zero(slope):
            entries.append(_skipped("imc2_from_im_v3", "Im v^3 condition does not involve Im c"))
        else:
            entries.append(_entry("imc2_from_im_v3", -at0 / slope, imc2_from_im_v3(a1, a2)))
    else:
        entries.append(_skipped("imc2_from_im_v3", "needs a1 != a2 and a1 + a2 != 1"))

    if a1 == a2:
        at1 = _condition(attempt_factorization(conditioned_params(a1, a2, 0 * ic + 1)), "Im", 4)
        at2 = _condition(attempt_factorization(conditioned_params(a1, a2, 0 * ic + 2)), "Im", 4)
        cubic = (at2 / 2 - at1) / 3
        if is_zero(cubic):
            entries.append(_skipped("imc2_diagonal", "Im v^4 condition has no cubic term in Im c"))
        else:
            entries.append(_entry("imc2_diagonal", -(at1 - cubic) / cubic, imc2_diagonal(a1)))
    else:
        entries.append(_skipped("imc2_diagonal", "needs a1 = a2"))

    value = evaluate(keylemma_lift(p), np.array([-1.0, -1.0]))
    exact_minus_one = re_phi_at_minus_one(p)
    entries.append(
        ResidualEntry(
            name="re_phi_minus_one",
            series_value=float(value.real),
            closed_form=exact_minus_one,
            residual=abs(float(value.real) - float(exact_minus_one)),
            counted=False,
            note="binary64 evaluation of the lift",
        )
    )

    counted = [float(e.residual) for e in entries if e.applicable and e.counted]
    report = ResidualReport(
        params=p,
        conditioned=q,
        re_u2=re.coeff((2, 0)),
        im_u=im.coeff((1, 0)),
        im_v=im.coeff((0, 1)),
        gamma02=gamma02,
        entries=entries,
        max_residual=max(counted, default=0.0),
        tolerance=tol,
    )
    logger.info("Coefficient identities checked", max_residual=report.max_residual, exact=p.exact)
    return report


def _p_poly(a1: Any, a2: Any) -> Any:
    return 2 * a1**3 + 2 * a2**3 + a1 * a2**2 + a1**2 * a2 - 3 * a1**2 - 3 * a2**2 + 3 * a1 * a2


def keylemma_step2_geometry(samples: int = 2001, interior_grid: int = 200) -> GeometryReport:
    """
    Sign of P on the three edges of the admissible triangle and its critical points.

    Args:
        samples: Points per open edge
        interior_grid: Points per axis of the interior grid

    Returns:
        Geometry report
    """
    t = np.linspace(0.0, 1.0, samples + 2)[1:-1]
    edges = [
        ("a2=0", t, np.zeros_like(t), lambda a: 2 * a**3 - 3 * a**2, None),
        ("a2=a1", t / 2, t / 2, lambda a: 3 * a**2 * (2 * a - 1), None),
        ("a2=1-a1", 0.5 + t / 2, 0.5 - t / 2, lambda a: -((2 * a - 1) ** 2), lambda a: -(2 * a - 1)),
    ]
    curves = []
    for name, x, y, closed, printed in edges:
        values = _p_poly(x, y)
        curves.append(
            CurveCheck(
                name=name,
                max_value=float(values.max()),
                closed_form_residual=float(np.abs(values - closed(x)).max()),
                printed_form_residual=None if printed is None else float(np.abs(values - printed(x)).max()),
            )
        )

    a1, a2 = sympy.symbols("a1 a2")
    poly = _p_poly(a1, a2)
    solutions = sympy.solve_poly_system([sympy.diff(poly, a1), sympy.diff(poly, a2)], a1, a2) or []
    real_points: List[List[float]] = []
    complex_count = 0
    for sol in solutions:
        values = [complex(sympy.N(v, 30)) for v in sol]
        if any(abs(v.imag) > 1e-12 for v in values):
            complex_count += 1
        else:
            real_points.append([v.real for v in values])
    real_points.sort()
    interior = [pt for pt in real_points if 0 < pt[1] < pt[0] and pt[1] < 1 - pt[0]]

    x = np.linspace(0.0, 1.0, interior_grid + 2)[1:-1]
    grid_a1, frac = np.meshgrid(x, x, indexing="ij")
    grid_a2 = frac * np.minimum(grid_a1, 1 - grid_a1)
    interior_max = float(_p_poly(grid_a1, grid_a2).max())

    return GeometryReport(
        curves=curves,
        negative_on_boundary=all(c.max_value < 0 for c in curves),
        critical_points=real_points,
        complex_critical_points=complex_count,
        interior_critical_points=interior,
        interior_max=interior_max,
        samples=samples,
    )


def keylemma_step3_roots() -> StepThreeReport:
    """Exact roots of -a(2a-1)(4a-3)^2/8 = -a^2(4a-3)(4a-5)/4."""
    a = sympy.symbols("a", real=True)
    lhs = -a * (2 * a - 1) * (4 * a - 3) ** 2 / 8
    rhs = -(a**2) * (4 * a - 3) * (4 * a - 5) / 4
    roots = sorted(set(sympy.solve(sympy.Eq(lhs, rhs), a)), key=lambda r: float(r))
    admissible = [r for r in roots if 0 < r <= sympy.Rational(1, 2)]
    return StepThreeReport(
        equation="-a(2a-1)(4a-3)^2/8 = -a^2(4a-3)(4a-5)/4",
        roots=[str(r) for r in roots],
        admissible_roots=[str(r) for r in admissible],
    )


def triangle_grid(n: int) -> List[Tuple[Fraction, Fraction]]:
    """n x n rational grid of the admissible triangle, a2 = j/n * min(a1, 1 - a1)."""
    if n < 1:
        raise PreconditionError("Grid size must be positive", {"n": n})
    points = []
    for i in range(1, n + 1):
        a1 = Fraction(i, n)
        top = min(a1, 1 - a1)
        if top <= 0:
            continue
        for j in range(1, n + 1):
            points.append((a1, top * Fraction(j, n)))
    return points


def keylemma_sweep(n: int, im_c: Any = 0) -> SweepReport:
    """Factorization attempts at conditioned parameters over the triangle grid."""

    def cell(point: Tuple[Fraction, Fraction]) -> SweepCell:
        a1, a2 = point
        params = conditioned_params(a1, a2, Fraction(im_c) if isinstance(im_c, int) else im_c)
        attempt = attempt_factorization(params)
        obstruction = attempt.obstruction
        return SweepCell(
            a1=float(a1),
            a2=float(a2),
            obstruction_part=obstruction.part if obstruction else None,
            obstruction_index=obstruction.index if obstruction else None,
            re_phi_minus_one=float(re_phi_at_minus_one(params)),
        )

    cells = ordered_map(cell, triangle_grid(n))
    factorizing = [[c.a1, c.a2] for c in cells if c.obstruction_part is None]
    logger.info("Triangle sweep finished", n=n, cells=len(cells), factorizing=len(factorizing))
    return SweepReport(n=n, cells=cells, factorizing=factorizing)
