"""
Bohr lift construction, evaluation and boundary-point analysis.
"""

from fractions import Fraction
from math import comb
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.optimize import minimize

from app.config.settings import settings
from app.core.errors import (
    ClassMembershipError,
    ConvergenceError,
    DimensionMismatchError,
    InconsistentInputError,
    NotSupportedError,
    PreconditionError,
)
from app.core.series import TruncatedSeries, is_exact_scalar
from app.models.lift import (
    BohrLift,
    BoundaryPoint,
    BoundarySearchConfig,
    JuliaCaratheodoryReport,
    LocalExpansion,
    RangeAnalysis,
)
from app.models.symbol import DirichletSymbol, GeneratingSet, RangeKind
from app.utils.logger import get_logger
from app.utils.parallel import ordered_map

logger = get_logger(__name__)

HALF = Fraction(1, 2)


def wrap_angles(theta: Any) -> np.ndarray:
    """Map angles into (-pi, pi]."""
    theta = np.asarray(theta, dtype=float)
    return np.pi - np.mod(np.pi - theta, 2 * np.pi)


def angular_distance(a: Sequence[float], b: Sequence[float]) -> float:
    """Sup-norm distance on the torus."""
    diff = wrap_angles(np.asarray(a, dtype=float) - np.asarray(b, dtype=float))
    return float(np.max(np.abs(diff))) if diff.size else 0.0


# ---------------------------------------------------------------------------
# Construction and evaluation
# ---------------------------------------------------------------------------

def _build_lift(sym: DirichletSymbol, gen: GeneratingSet, constant: Any) -> BohrLift:
    terms: Dict[Tuple[int, ...], Any] = {}
    for n, value in sym.terms.items():
        if n not in gen.exponent_map:
            raise InconsistentInputError(
                "Generating set does not cover the symbol", {"n": n, "generators": gen.generators}
            )
        alpha = tuple(gen.exponent_map[n])
        terms[alpha] = terms.get(alpha, 0) + value
    return BohrLift(constant=constant, terms=terms, dim=gen.dim, source=gen)


def lift(sym: DirichletSymbol, gen: GeneratingSet) -> BohrLift:
    """
    Bohr lift Phi(z) = (c1 - 1/2) + sum c_n z^alpha(n).

    Args:
        sym: Symbol with c0 = 0
        gen: Generating set providing alpha(n)

    Returns:
        The lift over ``gen``
    """
    if sym.c0 != 0:
        raise PreconditionError("The shifted lift is defined for c0 = 0", {"c0": sym.c0})
    return _build_lift(sym, gen, sym.c1 - HALF)


def lift_phi0(sym: DirichletSymbol, gen: GeneratingSet) -> BohrLift:
    """Lift of the Dirichlet part phi_0 = c1 + sum c_n n^-s, without the 1/2 shift."""
    return _build_lift(sym, gen, sym.c1)


def _check_dim(phi: BohrLift, array: np.ndarray) -> None:
    if array.shape[-1] != phi.dim:
        raise DimensionMismatchError(
            "Point dimension does not match the lift", {"expected": phi.dim, "got": int(array.shape[-1])}
        )


def evaluate(phi: BohrLift, z: Any) -> Any:
    """
    Evaluate Phi at points of the closed polydisc.

    Args:
        phi: Lift
        z: Point of length d, or an array of points with trailing axis d

    Returns:
        Complex value, or an array of values
    """
    z = np.asarray(z, dtype=complex)
    _check_dim(phi, z if z.ndim else z.reshape(1))
    if np.any(np.abs(z) > 1 + 1e-12):
        raise PreconditionError("Evaluation points must lie in the closed polydisc")
    value = np.full(z.shape[:-1], complex(phi.constant), dtype=complex)
    if phi.terms:
        exponents = phi.exponent_matrix().astype(int)
        monomials = np.prod(z[..., None, :] ** exponents, axis=-1)
        value = value + monomials @ phi.coefficient_vector()
    return complex(value) if value.ndim == 0 else value


def evaluate_theta(phi: BohrLift, theta: Any) -> np.ndarray:
    """Phi(e^{i theta}) for an (N, d) array of angles."""
    theta = np.atleast_2d(np.asarray(theta, dtype=float))
    _check_dim(phi, theta)
    value = np.full(theta.shape[0], complex(phi.constant), dtype=complex)
    if phi.terms:
        value = value + np.exp(1j * (theta @ phi.exponent_matrix().T)) @ phi.coefficient_vector()
    return value


def gradient_z(phi: BohrLift, z: Any) -> np.ndarray:
    """Holomorphic partial derivatives dPhi/dz_j at points with trailing axis d."""
    z = np.asarray(z, dtype=complex)
    _check_dim(phi, z)
    out = np.zeros(z.shape, dtype=complex)
    if not phi.terms:
        return out
    exponents = phi.exponent_matrix().astype(int)
    coefficients = phi.coefficient_vector()
    for j in range(phi.dim):
        mask = exponents[:, j] > 0
        if not np.any(mask):
            continue
        lowered = exponents[mask].copy()
        lowered[:, j] -= 1
        monomials = np.prod(z[..., None, :] ** lowered, axis=-1)
        out[..., j] = monomials @ (coefficients[mask] * exponents[mask, j])
    return out


def _rotated_coefficients(phi: BohrLift, theta: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    exponents = phi.exponent_matrix()
    return exponents, phi.coefficient_vector() * np.exp(1j * (exponents @ theta))


def re_value(phi: BohrLift, theta: Any) -> float:
    theta = np.asarray(theta, dtype=float)
    if not phi.terms:
        return float(complex(phi.constant).real)
    _, ce = _rotated_coefficients(phi, theta)
    return float(complex(phi.constant).real + ce.real.sum())


def re_gradient_hessian(phi: BohrLift, theta: Any) -> Tuple[np.ndarray, np.ndarray]:
    """
    Exact gradient and Hessian of Re phi(theta) = Re Phi(e^{i theta}).

    Args:
        phi: Lift
        theta: Angles of length d

    Returns:
        (gradient, Hessian)
    """
    theta = np.asarray(theta, dtype=float)
    _check_dim(phi, theta)
    if not phi.terms:
        return np.zeros(phi.dim), np.zeros((phi.dim, phi.dim))
    exponents, ce = _rotated_coefficients(phi, theta)
    gradient = -exponents.T @ ce.imag
    hessian = -(exponents.T * ce.real) @ exponents
    return gradient, hessian


def im_gradient(phi: BohrLift, theta: Any) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if not phi.terms:
        return np.zeros(phi.dim)
    exponents, ce = _rotated_coefficients(phi, theta)
    return exponents.T @ ce.real


# ---------------------------------------------------------------------------
# Local expansion
# ---------------------------------------------------------------------------

def _theta_of(w: Union[BoundaryPoint, Sequence[float]]) -> np.ndarray:
    if isinstance(w, BoundaryPoint):
        return np.asarray(w.theta, dtype=float)
    return np.asarray(w, dtype=float)


def local_expansion(
    phi: BohrLift, w: Union[BoundaryPoint, Sequence[float]], order: int = 4, strict: bool = True
) -> LocalExpansion:
    """
    Re-expand Phi in x_j = 1 - z_j / w_j.

    The coefficient of x^beta is sum_alpha c_alpha w^alpha prod_j C(alpha_j, beta_j) (-1)^beta_j,
    an exact polynomial identity. Expansion at theta = 0 of a lift with rational
    coefficients stays rational.

    Args:
        phi: Lift
        w: Boundary point or its angles
        order: Highest order kept in ``higher``
        strict: Raise on a class violation of the linear coefficients

    Returns:
        Local expansion
    """
    theta = _theta_of(w)
    _check_dim(phi, theta.reshape(1, -1) if theta.ndim == 1 else theta)
    d = phi.dim
    exact = not np.any(theta) and all(is_exact_scalar(v) for v in [phi.constant, *phi.terms.values()])
    w_vec: List[Any] = [1] * d if exact else list(np.exp(1j * theta))

    cap = max(phi.total_degree(), order, 1)
    coeffs: Dict[Tuple[int, ...], Any] = {(0,) * d: phi.constant}
    for alpha, value in phi.terms.items():
        rotated: Any = value
        for wj, e in zip(w_vec, alpha):
            if e:
                rotated = rotated * wj**e
        for beta in np.ndindex(*(e + 1 for e in alpha)):
            factor = 1
            for aj, bj in zip(alpha, beta):
                factor *= comb(aj, bj) * (-1) ** bj
            coeffs[beta] = coeffs.get(beta, 0) + rotated * factor
    series = TruncatedSeries(d, cap, coeffs)

    def unit(*positions: int) -> Tuple[int, ...]:
        idx = [0] * d
        for p in positions:
            idx[p] += 1
        return tuple(idx)

    a = [series.coeff(unit(j)) for j in range(d)]
    b = [series.coeff(unit(j, j)) for j in range(d)]
    c = [[series.coeff(unit(j, k)) if j < k else 0 for k in range(d)] for j in range(d)]
    higher = TruncatedSeries(
        d, order, {k: v for k, v in series.coeffs.items() if 3 <= sum(k) <= order}
    )
    tau = float(complex(series.constant_term).imag)

    tol = settings.expansion_tol
    bad = [j for j, aj in enumerate(a) if abs(complex(aj).imag) > tol or complex(aj).real < -tol]
    if bad and strict:
        raise ClassMembershipError(
            "Linear expansion coefficients violate the mapping property",
            {"a": [[complex(x).real, complex(x).imag] for x in a], "indices": bad},
        )

    return LocalExpansion(
        theta=[float(t) for t in theta], tau=tau, a=a, b=b, c=c, higher=higher, series=series, order=order
    )


def resum_expansion(expansion: LocalExpansion, z: Any) -> Any:
    """Evaluate the full re-expansion at z; equals Phi(z) identically."""
    z = np.asarray(z, dtype=complex)
    w = np.exp(1j * np.asarray(expansion.theta, dtype=float))
    x = 1 - z / w
    return expansion.series.evaluate([x[..., j] for j in range(x.shape[-1])])


def julia_caratheodory_check(expansion: LocalExpansion) -> JuliaCaratheodoryReport:
    """First-order coefficients must be nonnegative reals, one of them positive unless Phi is constant."""
    tol = settings.expansion_tol
    a = [complex(v) for v in expansion.a]
    a_real = [v.real for v in a]
    max_imag = max((abs(v.imag) for v in a), default=0.0)
    any_positive = any(v > tol for v in a_real)
    degenerate = all(sum(idx) == 0 for idx in expansion.series.coeffs)
    nonnegative = max_imag <= tol and all(v >= -tol for v in a_real)

    passed = nonnegative and (any_positive or degenerate)
    if passed:
        message = "constant near w" if degenerate and not any_positive else "linear coefficients admissible"
    elif not nonnegative:
        message = "linear coefficients are not nonnegative reals"
    else:
        message = "no positive linear coefficient for a nonconstant lift"
    return JuliaCaratheodoryReport(
        passed=passed,
        a_real=a_real,
        max_abs_imag=max_imag,
        any_positive=any_positive,
        degenerate=degenerate,
        message=message,
    )


# ---------------------------------------------------------------------------
# Boundary search
# ---------------------------------------------------------------------------

def make_boundary_point(
    phi: BohrLift, theta: Sequence[float], order: int = 4, strict: bool = False
) -> BoundaryPoint:
    """Assemble the Hessian data and local expansion of Phi at ``theta``."""
    theta = wrap_angles(theta)
    value = evaluate_theta(phi, theta[None, :])[0]
    gradient, hessian = re_gradient_hessian(phi, theta)
    eigvals, eigvecs = np.linalg.eigh(hessian)
    scale = 1.0 + (float(np.max(np.abs(eigvals))) if eigvals.size else 0.0)
    index_j = int(np.sum(eigvals > settings.rank_tol * scale))
    return BoundaryPoint(
        theta=[float(t) for t in theta],
        tau=float(value.imag),
        re_value=float(value.real),
        gradient_norm=float(np.linalg.norm(gradient)),
        hessian=hessian.tolist(),
        eigvals=eigvals.tolist(),
        eigvecs=eigvecs.T.tolist(),
        index_J=index_j,
        im_gradient=im_gradient(phi, theta).tolist(),
        local=local_expansion(phi, theta, order=order, strict=strict),
    )


def _grid_re(phi: BohrLift, grid: int) -> Tuple[np.ndarray, np.ndarray]:
    d = phi.dim
    angles = np.linspace(-np.pi, np.pi, grid, endpoint=False)
    exponents = phi.exponent_matrix().astype(int)
    coefficients = phi.coefficient_vector()
    base = complex(phi.constant).real
    if d == 1:
        values = base + np.real(np.exp(1j * np.outer(angles, exponents[:, 0])) @ coefficients)
        return angles, values

    values = np.empty((grid,) * d)
    factors = [np.exp(1j * np.outer(exponents[:, j], angles)) for j in range(d)]
    for i in range(grid):
        sub = np.full((grid,) * (d - 1), base)
        for t, c in enumerate(coefficients):
            term: Any = c * factors[0][t, i]
            for j in range(1, d):
                shape = [1] * (d - 1)
                shape[j - 1] = grid
                term = term * factors[j][t].reshape(shape)
            sub = sub + np.real(term)
        values[i] = sub
    return angles, values


def _seed_points(phi: BohrLift, grid: int, max_seeds: int) -> Tuple[List[np.ndarray], float]:
    angles, values = _grid_re(phi, grid)
    is_min = np.ones(values.shape, dtype=bool)
    for axis in range(values.ndim):
        is_min &= values <= np.roll(values, 1, axis=axis)
        is_min &= values <= np.roll(values, -1, axis=axis)
    indices = np.argwhere(is_min)
    order = np.argsort(values[tuple(indices.T)], kind="stable")[:max_seeds]
    seeds = [angles[indices[k]] for k in order]
    return seeds, float(values.min())


POLISH_METHODS: Tuple[Tuple[str, Dict[str, float]], ...] = (
    ("trust-exact", {"gtol": 1e-10, "maxiter": 300}),
    ("Newton-CG", {"xtol": 1e-12, "maxiter": 300}),
)


def _minimize(phi: BohrLift, seed: np.ndarray) -> Optional[np.ndarray]:
    """Second-order local minimization; the next method takes over when one fails."""
    for method, options in POLISH_METHODS:
        try:
            with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
                result = minimize(
                    lambda t: re_value(phi, t),
                    seed,
                    jac=lambda t: re_gradient_hessian(phi, t)[0],
                    hess=lambda t: re_gradient_hessian(phi, t)[1],
                    method=method,
                    options=options,
                )
        except (ValueError, FloatingPointError, np.linalg.LinAlgError) as e:
            logger.debug("Local minimization failed", method=method, seed=seed.tolist(), reason=str(e))
            continue
        if np.all(np.isfinite(result.x)):
            return np.asarray(result.x, dtype=float)
        logger.debug("Local minimization left the finite range", method=method, seed=seed.tolist())
    return None


def _refine(phi: BohrLift, theta: np.ndarray, steps: int = 80) -> np.ndarray:
    """
    Pseudo-inverse Newton steps on the gradient.

    Each accepted step lowers the gradient norm without raising Re phi beyond
    roundoff, so degenerate minima (Re phi ~ t^4) still close in to the zero.
    """
    value = re_value(phi, theta)
    gradient, hessian = re_gradient_hessian(phi, theta)
    norm = float(np.linalg.norm(gradient))
    for _ in range(steps):
        if norm == 0.0:
            break
        step = np.linalg.lstsq(hessian, -gradient, rcond=1e-12)[0]
        candidate = theta + step
        new_gradient, new_hessian = re_gradient_hessian(phi, candidate)
        new_norm = float(np.linalg.norm(new_gradient))
        new_value = re_value(phi, candidate)
        if not (np.isfinite(new_norm) and np.isfinite(new_value)) or new_norm >= norm or new_value > value + 1e-12:
            break
        theta, value, gradient, hessian, norm = candidate, new_value, new_gradient, new_hessian, new_norm
    return theta


def polish_seed(phi: BohrLift, seed: Any, tol: Optional[float] = None) -> Tuple[np.ndarray, float]:
    """
    Polish one grid seed towards a local minimum of Re Phi.

    Seeds already within the boundary tolerance skip the trust-region stage.
    When every scipy method fails the Newton refinement starts from the seed.

    Returns:
        Wrapped angles and Re Phi there
    """
    seed = np.asarray(seed, dtype=float)
    tol = settings.boundary_tol if tol is None else tol
    theta = seed
    if re_value(phi, seed) > tol:
        theta = _minimize(phi, seed)
        if theta is None:
            theta = seed
    theta = wrap_angles(_refine(phi, theta))
    return theta, re_value(phi, theta)


def _polish_or_drop(phi: BohrLift, seed: np.ndarray, tol: float) -> Optional[Tuple[np.ndarray, float]]:
    try:
        theta, value = polish_seed(phi, seed, tol)
    except (ValueError, np.linalg.LinAlgError) as e:
        logger.warning("Dropped boundary seed", seed=seed.tolist(), reason=str(e))
        return None
    if not np.isfinite(value):
        logger.warning("Dropped boundary seed", seed=seed.tolist(), reason="non-finite value")
        return None
    return theta, value


def range_analysis(
    phi: BohrLift, config: Optional[BoundarySearchConfig] = None, strict: bool = True
) -> RangeAnalysis:
    """
    Minimize Re Phi over the torus from multiple grid seeds.

    Seeds are the lowest discrete local minima of a periodic grid; polished
    minima within the boundary tolerance become boundary points after
    angular deduplication.

    Args:
        phi: Lift
        config: Search configuration, settings defaults where unset
        strict: Raise when the minimum is negative beyond tolerance

    Returns:
        Range analysis with the boundary points sorted by angle
    """
    config = config or BoundarySearchConfig()
    tol = config.tol if config.tol is not None else settings.boundary_tol
    radius = config.dedup_radius if config.dedup_radius is not None else settings.dedup_radius

    if phi.dim == 0:
        min_re = float(complex(phi.constant).real)
        if strict and min_re < -tol:
            raise ClassMembershipError("Constant lift has negative real part", {"min_re": min_re})
        kind = RangeKind.RESTRICTED if min_re > tol else RangeKind.UNRESTRICTED
        return RangeAnalysis(min_re=min_re, argmin=[], range_kind=kind, boundary_points=[])

    if phi.dim > settings.max_boundary_dim:
        raise NotSupportedError("Torus dimension too large for the boundary search", {"dim": phi.dim})

    grid = config.grid or (settings.grid_small if phi.dim <= 3 else settings.grid_large)
    max_seeds = config.max_seeds or settings.max_boundary_seeds
    seeds, grid_min = _seed_points(phi, grid, max_seeds)
    polished = [p for p in ordered_map(lambda s: _polish_or_drop(phi, s, tol), seeds) if p is not None]
    if not polished:
        raise ConvergenceError("Every boundary seed failed to polish", {"seeds": len(seeds), "grid_min": grid_min})
    polished.sort(key=lambda item: item[1])

    min_theta, min_re = polished[0]
    min_re = min(min_re, grid_min)
    if strict and min_re < -tol:
        raise ClassMembershipError(
            "Re Phi takes negative values on the torus", {"min_re": min_re, "theta": min_theta.tolist()}
        )

    distinct: List[np.ndarray] = []
    for theta, value in polished:
        if value > tol:
            break
        if all(angular_distance(theta, other) > radius for other in distinct):
            distinct.append(theta)

    points: List[BoundaryPoint] = []
    for theta in sorted(distinct, key=lambda t: tuple(np.round(t, 12))):
        point = make_boundary_point(phi, theta, order=config.expansion_order)
        scale = 1.0 + max(abs(v) for v in point.eigvals)
        if point.gradient_norm > settings.gradient_tol or point.eigvals[0] < -1e-8 * scale:
            logger.debug("Dropped non-minimal zero", theta=point.theta, gradient_norm=point.gradient_norm)
            continue
        points.append(point)

    kind = RangeKind.RESTRICTED if min_re > tol else RangeKind.UNRESTRICTED
    logger.debug(
        "Range analysis finished", dim=phi.dim, min_re=min_re, boundary_points=len(points), seeds=len(seeds)
    )
    return RangeAnalysis(
        min_re=float(min_re), argmin=[float(t) for t in min_theta], range_kind=kind, boundary_points=points
    )


def find_boundary_points(phi: BohrLift, config: Optional[BoundarySearchConfig] = None) -> List[BoundaryPoint]:
    """Distinct torus zeros of Re Phi; raises if Re Phi goes negative."""
    return range_analysis(phi, config=config, strict=True).boundary_points


def directional_taylor(
    phi: BohrLift, theta: Sequence[float], direction: Sequence[float], max_order: int = 16
) -> np.ndarray:
    """Taylor coefficients in t of Re phi(theta + t * direction), orders 0..max_order."""
    theta = np.asarray(theta, dtype=float)
    direction = np.asarray(direction, dtype=float)
    coefficients = np.zeros(max_order + 1)
    coefficients[0] = re_value(phi, theta)
    if not phi.terms:
        return coefficients
    exponents, ce = _rotated_coefficients(phi, theta)
    speed = exponents @ direction
    factorial = 1.0
    for m in range(1, max_order + 1):
        factorial *= m
        coefficients[m] = float(np.real(np.sum(ce * (1j * speed) ** m)) / factorial)
    return coefficients


def leading_order(coefficients: np.ndarray, rel_tol: float = 1e-9) -> Optional[int]:
    """First order m >= 1 with a coefficient above tolerance, None if all vanish."""
    scale = 1.0 + float(np.max(np.abs(coefficients)))
    for m in range(1, len(coefficients)):
        if abs(coefficients[m]) > rel_tol * scale:
            return m
    return None
