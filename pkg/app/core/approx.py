"""
Boundary regularity, compactness indices, contact exponents and the tools
behind the two-sided approximation-number estimates.
"""

import cmath
import math
from fractions import Fraction
from functools import lru_cache
from typing import Any, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import integrate, linalg, stats
from scipy.spatial import cKDTree

from app.config.settings import settings
from app.core.bohr_lift import (
    directional_taylor,
    evaluate,
    evaluate_theta,
    gradient_z,
    leading_order,
)
from app.core.errors import (
    ClassMembershipError,
    ConvergenceError,
    NotSupportedError,
    PreconditionError,
)
from app.core.flat import build_separated_example
from app.core.series import TruncatedSeries
from app.core.symbols import profile_with_range
from app.models.approx import (
    AnBounds,
    BlaschkeBound,
    BoundForm,
    CompactnessIndex,
    ContactExponents,
    HyperbolicLength,
    LatticeWitness,
    LengthFit,
    PointIndex,
    ProbeResult,
    RegularityProfile,
    SchattenMembership,
    SchattenRecipe,
    WitnessFit,
    WitnessPoint,
)
from app.models.lift import BohrLift, BoundaryPoint
from app.models.symbol import DirichletSymbol
from app.utils.logger import get_logger
from app.utils.parallel import check_cancelled, ordered_map

logger = get_logger(__name__)

MAX_LATTICE = 5_000_000
PROBE_GRID = {1: 4096, 2: 256, 3: 64}


# ---------------------------------------------------------------------------
# Boundary regularity and compactness index
# ---------------------------------------------------------------------------

def _kernel_row(phi: BohrLift, theta: np.ndarray, direction: np.ndarray, max_order: int) -> Tuple[np.ndarray, int]:
    """Scaled linear form and even order of Re phi along a Hessian kernel direction."""
    coefficients = directional_taylor(phi, theta, direction, max_order=max_order)
    order = leading_order(coefficients)
    if order is None:
        raise NotSupportedError(
            "Re phi is flat beyond the inspected order along a kernel direction",
            {"direction": direction.tolist(), "max_order": max_order},
        )
    leading = coefficients[order]
    if order % 2 or leading < 0:
        raise ClassMembershipError(
            "Leading kernel term is odd or negative", {"order": order, "coefficient": float(leading)}
        )
    return leading ** (1.0 / order) * direction, order


def _normalize_sign(row: np.ndarray) -> np.ndarray:
    for value in row:
        if abs(value) > 1e-12:
            return row if value > 0 else -row
    return row


def boundary_regularity(
    phi: BohrLift, point: BoundaryPoint, max_order: int = 16, separated: Optional[bool] = None
) -> RegularityProfile:
    """
    Normal form of Re phi and Im phi near a boundary point.

    Positive Hessian directions get order 2. A one-dimensional kernel, or any
    kernel when Phi has separated variables, gets its order from the
    one-variable Taylor coefficients of Re phi along the kernel.

    Rows of ell are scaled so that Re phi = sum_j ell_j(theta)^k_j + o(...) with
    unit coefficients, and b solves grad Im phi = sum_j b_j ell_j. For
    13/2 - 4*2^-s - 4*3^-s + 2*6^-s this gives ell_1 = (theta_1 + theta_2) / 2
    and b_1 = -4; taking ell_1 = theta_1 + theta_2 instead halves b_1 to -2 and
    leaves Re phi = ell_1^4 / 16 + ell_2^2 + o(...).

    Args:
        phi: Lift
        point: Verified boundary point
        max_order: Largest Taylor order inspected along the kernel
        separated: Override for the separated-variables test

    Returns:
        Regularity profile with forms sorted by descending order

    Raises:
        NotSupportedError: Kernel of dimension two or more for mixed variables,
            or b_1 vanishes
        ClassMembershipError: Negative curvature or an odd leading kernel term
    """
    theta = np.asarray(point.theta, dtype=float)
    hessian = np.asarray(point.hessian, dtype=float)
    eigvals = np.asarray(point.eigvals, dtype=float)
    eigvecs = np.asarray(point.eigvecs, dtype=float)
    scale = 1.0 + float(np.max(np.abs(eigvals))) if eigvals.size else 1.0
    cutoff = settings.rank_tol * scale
    if np.any(eigvals < -cutoff):
        raise ClassMembershipError("Re phi has negative curvature at a boundary point", {"eigvals": eigvals.tolist()})
    separated = phi.is_separated() if separated is None else separated

    rows: List[np.ndarray] = []
    orders: List[int] = []
    if separated:
        for j in range(phi.dim):
            axis = np.eye(phi.dim)[j]
            if hessian[j, j] > cutoff:
                rows.append(math.sqrt(hessian[j, j] / 2) * axis)
                orders.append(2)
            else:
                row, order = _kernel_row(phi, theta, axis, max_order)
                rows.append(row)
                orders.append(order)
    else:
        kernel = [v for lam, v in zip(eigvals, eigvecs) if lam <= cutoff]
        if len(kernel) > 1:
            raise NotSupportedError("Hessian kernel of dimension two or more", {"kernel_dim": len(kernel)})
        for lam, v in zip(eigvals, eigvecs):
            if lam > cutoff:
                rows.append(math.sqrt(lam / 2) * v)
                orders.append(2)
        for v in kernel:
            row, order = _kernel_row(phi, theta, v, max_order)
            rows.append(row)
            orders.append(order)

    ell = np.array([_normalize_sign(r) for r in rows])
    b = np.linalg.solve(ell.T, np.asarray(point.im_gradient, dtype=float))
    order_idx = sorted(range(len(orders)), key=lambda i: (-orders[i], -abs(b[i])))
    ell, b = ell[order_idx], b[order_idx]
    orders = [orders[i] for i in order_idx]
    if abs(b[0]) <= 1e-9 * (1.0 + float(np.linalg.norm(point.im_gradient))):
        raise NotSupportedError("Not boundary regular: b_1 vanishes", {"orders": orders})

    logger.debug("Boundary regularity", theta=point.theta, orders=orders)
    return RegularityProfile(point=point, ell=ell.tolist(), k=orders, b=b.tolist(), tau=point.tau)


def eta(profile: RegularityProfile) -> Fraction:
    """(sum_{j>=2} 1/k_j) * k_1 / (2 (k_1 - 1)), exactly."""
    if profile.dim < 2:
        raise PreconditionError("The compactness index needs d >= 2; for d = 1 the operator is not compact")
    k1 = profile.k[0]
    return sum((Fraction(1, k) for k in profile.k[1:]), Fraction(0)) * Fraction(k1, 2 * (k1 - 1))


def compactness_index(profiles: Sequence[RegularityProfile]) -> CompactnessIndex:
    """Smallest index over the boundary points."""
    if not profiles:
        raise PreconditionError("No boundary points; the range is restricted")
    per_point = [PointIndex(theta=p.point.theta, k=p.k, eta=eta(p)) for p in profiles]
    return CompactnessIndex(eta=min(p.eta for p in per_point), per_point=per_point)


# ---------------------------------------------------------------------------
# Contact exponent
# ---------------------------------------------------------------------------

def omega_estimate(
    phi: BohrLift,
    point: Optional[BoundaryPoint],
    samples: int = 2**18,
    seed: Optional[int] = None,
    boxes: int = 20,
    radius_range: Tuple[float, float] = (1e-4, 1.0),
    level_range: Tuple[float, float] = (1e-9, 1e-4),
    min_count: int = 50,
    kappa_hat: Optional[float] = None,
) -> ContactExponents:
    """
    Fit the smallest omega with |Im phi - tau|^omega <= C Re phi near a boundary point.

    Samples fill nested cubes around the point. For each level x the largest
    |Im phi - tau| over the sublevel set {Re phi <= x} gives the envelope,
    whose log-log slope is 1 / omega.

    Args:
        phi: Lift
        point: Boundary point, None for restricted range
        samples: Total sample count over all cubes
        seed: Random seed, default from settings
        boxes: Number of cube sizes
        radius_range: Smallest and largest cube half-width
        level_range: Smallest and largest sublevel threshold
        min_count: Samples required in a sublevel set for it to enter the fit
        kappa_hat: Carleson exponent to carry along

    Returns:
        Contact exponents
    """
    if point is None:
        return ContactExponents(restricted_range=True, kappa_hat=kappa_hat)

    rng = np.random.default_rng(settings.seed if seed is None else seed)
    theta0 = np.asarray(point.theta, dtype=float)
    per_box = max(1, samples // boxes)
    radii = np.geomspace(radius_range[0], radius_range[1], boxes)

    def box(r: float) -> Tuple[np.ndarray, np.ndarray]:
        offsets = rng.uniform(-r, r, size=(per_box, phi.dim))
        values = evaluate_theta(phi, theta0 + offsets)
        return values.real, np.abs(values.imag - point.tau)

    # one generator, so sequential for a reproducible stream
    parts = [box(r) for r in radii]
    re = np.concatenate([p[0] for p in parts])
    gap = np.concatenate([p[1] for p in parts])

    levels = np.geomspace(level_range[0], level_range[1], 24)
    xs, ys = [], []
    for x in levels:
        mask = re <= x
        if np.count_nonzero(mask) >= min_count:
            y = float(np.max(gap[mask]))
            if y > 0:
                xs.append(x)
                ys.append(y)
    if len(xs) < 3:
        raise ConvergenceError("Too few populated sublevel sets for the envelope fit", {"levels": len(xs)})

    fit = stats.linregress(np.log(xs), np.log(ys))
    omega_raw = 1.0 / fit.slope if fit.slope > 0 else math.inf
    omega_hat = max(1.0, omega_raw) if math.isfinite(omega_raw) else None
    near = (re <= level_range[1]) & (re > 0)
    constant = float(np.max(gap[near] ** omega_hat / re[near])) if omega_hat and np.any(near) else None
    logger.info("Contact exponent fitted", omega_hat=omega_hat, levels=len(xs), r2=float(fit.rvalue**2))
    return ContactExponents(
        omega_hat=omega_hat,
        omega_raw=omega_raw if math.isfinite(omega_raw) else None,
        C=constant,
        kappa_hat=kappa_hat,
        r2=float(fit.rvalue**2),
        levels=len(xs),
        samples=int(re.size),
    )


# ---------------------------------------------------------------------------
# Bound curves and Schatten classes
# ---------------------------------------------------------------------------

def an_bounds(
    n: int,
    eta_value: Optional[Any] = None,
    omega: Optional[float] = None,
    kappa: Optional[float] = None,
    exponential_form: str = "printed",
) -> AnBounds:
    """
    Shape curves of the approximation-number estimates, constants set to 1.

    With ``eta_value``: lower (1/n)^eta and upper (log n / n)^eta.
    With ``omega > 1`` and ``kappa``: upper (log n / n)^((kappa-1) omega / (2 (omega-1))).
    With ``omega <= 1``: exp(-n^(-1/2)) as printed, or exp(-n^(1/2)) when
    ``exponential_form`` is "corrected".
    With ``kappa`` alone: upper (log n / n)^((kappa-1)/2).
    """
    if n < 2:
        raise PreconditionError("n must be at least 2", {"n": n})
    ratio = math.log(n) / n
    if eta_value is not None:
        e = float(eta_value)
        return AnBounds(n=n, form=BoundForm.ETA, lower=n**-e, upper=ratio**e, exponent=e)
    if omega is not None and omega <= 1:
        if exponential_form not in ("printed", "corrected"):
            raise PreconditionError("exponential_form must be printed or corrected", {"form": exponential_form})
        power = -0.5 if exponential_form == "printed" else 0.5
        return AnBounds(n=n, form=BoundForm.EXPONENTIAL, upper=math.exp(-(n**power)))
    if kappa is None:
        raise PreconditionError("Need eta, or kappa with an optional omega")
    if omega is not None:
        e = (kappa - 1) * omega / (2 * (omega - 1))
        return AnBounds(n=n, form=BoundForm.CONTACT, upper=ratio**e, exponent=e)
    e = (kappa - 1) / 2
    return AnBounds(n=n, form=BoundForm.KAPPA_ONLY, upper=ratio**e, exponent=e)


def _as_fraction(value: Any) -> Fraction:
    return value if isinstance(value, Fraction) else Fraction(value)


def schatten_predicate(eta_value: Any, p: Any) -> SchattenMembership:
    """C_phi lies in S_p exactly when p * eta > 1."""
    if not eta_value > 0 or not p > 0:
        raise PreconditionError("eta and p must be positive", {"eta": float(eta_value), "p": float(p)})
    product = _as_fraction(eta_value) * _as_fraction(p)
    return SchattenMembership.IN_SP if product > 1 else SchattenMembership.NOT_IN_SP


def schatten_separator(p: Any, q: Any, max_d: int = 64, max_k: int = 64, build: bool = False) -> SchattenRecipe:
    """
    Smallest (d, k), k even, whose separated example with all orders k has
    C_phi in S_q but not in S_p.

    Args:
        p: Lower Schatten exponent
        q: Upper Schatten exponent, q > p
        max_d: Largest dimension searched
        max_k: Largest order searched
        build: Also build and certify the separated example

    Returns:
        Recipe with the index and predicate outcomes
    """
    if not 0 < p < q:
        raise PreconditionError("Need 0 < p < q", {"p": float(p), "q": float(q)})
    for d in range(2, max_d + 1):
        for k in range(2, max_k + 1, 2):
            value = Fraction(d - 1, 2 * (k - 1))
            in_q = schatten_predicate(value, q)
            in_p = schatten_predicate(value, p)
            if in_q == SchattenMembership.IN_SP and in_p == SchattenMembership.NOT_IN_SP:
                construction = build_separated_example([k] * d) if build else None
                logger.info("Schatten separator found", p=float(p), q=float(q), d=d, k=k)
                return SchattenRecipe(
                    p=float(p),
                    q=float(q),
                    d=d,
                    k=k,
                    eta=value,
                    in_q=in_q,
                    in_p=in_p,
                    orders=[k] * d,
                    construction=construction,
                )
    raise NotSupportedError("No (d, k) within the search bounds", {"p": float(p), "q": float(q)})


# ---------------------------------------------------------------------------
# Hyperbolic geometry and Blaschke products
# ---------------------------------------------------------------------------

def _curved_sides(omega: float, sigma: float, C: float, nodes: int) -> float:
    x, w = np.polynomial.legendre.leggauss(nodes)
    lo, hi = math.log(sigma), math.log(C)
    t = 0.5 * (hi - lo) * x + 0.5 * (hi + lo)
    slope = C ** (1 / omega) / omega * np.exp(t * (1 / omega - 1))
    return float(2 * 0.5 * (hi - lo) * np.sum(w * np.sqrt(1 + slope**2)))


def hyperbolic_length(omega: float, sigma: float, C: float, nodes: int = 128) -> HyperbolicLength:
    """
    Hyperbolic length of the boundary of {|Im s|^omega <= C Re s, sigma <= Re s <= C}.

    The vertical sides are exact; the curved sides use Gauss-Legendre
    quadrature in log Re s.
    """
    if omega < 1 or not 0 < sigma < 0.5 or C <= 1:
        raise PreconditionError(
            "Need omega >= 1, 0 < sigma < 1/2 and C > 1", {"omega": omega, "sigma": sigma, "C": C}
        )
    gamma1 = 2 * (C * sigma) ** (1 / omega) / sigma
    gamma2 = 2 * C ** (2 / omega) / C
    gamma3 = _curved_sides(omega, sigma, C, nodes)
    refined = _curved_sides(omega, sigma, C, 2 * nodes)
    return HyperbolicLength(
        omega=omega,
        sigma=sigma,
        C=C,
        gamma1=gamma1,
        gamma2=gamma2,
        gamma3=gamma3,
        total=gamma1 + gamma2 + gamma3,
        nodes=nodes,
        quadrature_change=abs(refined - gamma3) / refined,
    )


def hyperbolic_length_fit(
    omega: float, sigmas: Sequence[float] = (1e-2, 1e-3, 1e-4, 1e-5, 1e-6), C: float = 2.0
) -> LengthFit:
    """Growth of the length as sigma shrinks: power (omega - 1)/omega, or logarithmic for omega = 1."""
    lengths = [hyperbolic_length(omega, s, C).total for s in sigmas]
    log_inv = np.log(1 / np.asarray(sigmas, dtype=float))
    if omega == 1:
        fit = stats.linregress(log_inv, lengths)
        predicted = 2 * math.sqrt(1 + C**2)
    else:
        fit = stats.linregress(log_inv, np.log(lengths))
        predicted = (omega - 1) / omega
    return LengthFit(
        omega=omega,
        sigmas=list(sigmas),
        lengths=lengths,
        slope=float(fit.slope),
        intercept=float(fit.intercept),
        r2=float(fit.rvalue**2),
        predicted=predicted,
    )


def pseudo_hyperbolic(z: complex, w: complex) -> float:
    """|z - w| / |z + conj(w)| on the right half-plane."""
    if z.real <= 0 or w.real <= 0:
        raise PreconditionError("Points must lie in the right half-plane")
    return abs(z - w) / abs(z + w.conjugate())


def blaschke_product(zeros: Sequence[complex], s: Any) -> np.ndarray:
    """Half-plane Blaschke product prod (s - a) / (s + conj a)."""
    s = np.asarray(s, dtype=complex)
    value = np.ones_like(s)
    for a in zeros:
        value = value * (s - a) / (s + np.conj(a))
    return value


def _lemma_constant(L: float) -> float:
    value, _ = integrate.quad(lambda y: (math.log1p(y) - math.log1p(-y)) / y, math.exp(-L), 1, limit=200)
    return value


def blaschke_bound(n: int, L: float) -> BlaschkeBound:
    """
    Product bound prod_j tanh(j L / (2n)) for n zeros equally spaced in
    hyperbolic length along a curve of length L, its Riemann-integral form and
    the exponential bound -c n / L.
    """
    if n < 1:
        raise PreconditionError("n must be positive", {"n": n})
    if L < 1:
        raise PreconditionError("L must be at least 1", {"L": L})
    j = np.arange(1, n + 1)
    log_product = float(np.sum(np.log(np.tanh(j * L / (2 * n)))))
    integral, _ = integrate.quad(lambda x: math.log(math.tanh(x * L / 2)), 0, 1, limit=200)
    return BlaschkeBound(
        n=n,
        L=L,
        log_product=log_product,
        riemann_log=n * integral,
        lemma_constant=_lemma_constant(L),
        lemma_log_bound=-_lemma_constant(1.0) * n / L,
    )


def _region_boundary(omega: float, sigma: float, C: float, samples: int) -> np.ndarray:
    xs = np.geomspace(sigma, C, samples)
    top = xs + 1j * (C * xs) ** (1 / omega)
    left = sigma + 1j * np.linspace(-1, 1, samples) * (C * sigma) ** (1 / omega)
    right = C + 1j * np.linspace(1, -1, samples) * C ** (2 / omega)
    bottom = xs[::-1] - 1j * (C * xs[::-1]) ** (1 / omega)
    return np.concatenate([left, top, right, bottom])


def blaschke_empirical(
    n: int, omega: float, sigma: float, C: float, samples: int = 2000, interior: int = 64
) -> BlaschkeBound:
    """
    Place n zeros equally spaced in hyperbolic length on the boundary of the
    contact region and record the largest |B| over an interior grid.
    """
    curve = _region_boundary(omega, sigma, C, samples)
    steps = np.abs(np.diff(curve)) / (0.5 * (curve[1:] + curve[:-1])).real
    arc = np.concatenate([[0.0], np.cumsum(steps)])
    length = float(arc[-1])
    marks = (np.arange(n) + 0.5) * length / n
    zeros = np.interp(marks, arc, curve.real) + 1j * np.interp(marks, arc, curve.imag)

    xs = np.geomspace(sigma, C, interior)
    fractions = np.linspace(-0.999, 0.999, interior)
    grid = (xs[:, None] + 1j * fractions[None, :] * (C * xs[:, None]) ** (1 / omega)).ravel()
    empirical = float(np.max(np.abs(blaschke_product(zeros, grid))))

    base = blaschke_bound(n, max(1.0, length))
    logger.debug("Blaschke product sampled", n=n, length=length, empirical_max=empirical)
    return base.model_copy(update={"empirical_max": empirical, "curve_length": length})


# ---------------------------------------------------------------------------
# Zeta
# ---------------------------------------------------------------------------

@lru_cache(maxsize=8)
def _borwein_weights(terms: int) -> Tuple[float, ...]:
    n = terms
    partial = Fraction(0)
    d = []
    for i in range(n + 1):
        partial += Fraction(math.factorial(n + i - 1) * 4**i, math.factorial(n - i) * math.factorial(2 * i))
        d.append(n * partial)
    return tuple(float((d[k] - d[n]) / d[n]) for k in range(n))


def zeta(s: Any, terms: int = 48) -> Any:
    """
    Riemann zeta by alternating-series acceleration.

    Args:
        s: Real or complex argument with positive real part, s != 1
        terms: Acceleration length; error decays like 5.8^-terms

    Returns:
        zeta(s)
    """
    s = complex(s)
    if s.real <= 0 or s == 1:
        raise PreconditionError("zeta needs Re s > 0 and s != 1", {"s": [s.real, s.imag]})
    weights = _borwein_weights(terms)
    total = sum((-1) ** k * w * cmath.exp(-s * math.log(k + 1)) for k, w in enumerate(weights))
    x = (1 - s) * math.log(2)
    denominator = -math.expm1(x.real) if x.imag == 0 else 1 - cmath.exp(x)
    value = -total / denominator
    return value.real if s.imag == 0 else value


# ---------------------------------------------------------------------------
# Lower-bound witness
# ---------------------------------------------------------------------------

def _lattice_counts(delta: float, k: Sequence[int]) -> List[int]:
    return [int(math.floor((1 / delta) ** (1 - 1 / kj) + 1e-9)) for kj in k]


def _solve_block(
    phi: BohrLift,
    theta0: np.ndarray,
    linv: np.ndarray,
    free: int,
    delta: float,
    alpha: np.ndarray,
    target: np.ndarray,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, int]:
    """
    Damped Newton for (rho_free, u_1) on a block of lattice points.

    Returns:
        (rho, theta, |residual|, z, iterations)
    """
    count, d = alpha.shape
    base_u = np.zeros((count, d))
    base_u[:, 1:] = alpha[:, 1:] * delta
    base_rho = np.full((count, d), delta)

    def points(rows: np.ndarray, rho_f: np.ndarray, u1: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        rr = base_rho[rows].copy()
        rr[:, free] = rho_f
        uu = base_u[rows].copy()
        uu[:, 0] = u1
        theta = theta0 + uu @ linv.T
        return (1 - rr) * np.exp(1j * theta), theta

    def residual(rows: np.ndarray, rho_f: np.ndarray, u1: np.ndarray) -> np.ndarray:
        z, _ = points(rows, rho_f, u1)
        return evaluate(phi, z) - target[rows]

    everything = np.arange(count)
    w = np.exp(1j * theta0)
    grad0 = gradient_z(phi, w)
    drho0 = -grad0[free] * w[free]
    du0 = np.sum(grad0 * 1j * w * linv[:, 0])
    jac0 = np.array([[drho0.real, du0.real], [drho0.imag, du0.imag]])
    r0 = residual(everything, np.zeros(count), np.zeros(count))
    guess = np.linalg.solve(jac0, -np.stack([r0.real, r0.imag]))
    rho_f = np.clip(guess[0], 0.5 * delta, 0.5)
    u1 = guess[1].copy()
    r = residual(everything, rho_f, u1)

    iterations = 0
    while iterations < settings.newton_maxiter and np.max(np.abs(r)) > settings.newton_tol:
        iterations += 1
        z, _ = points(everything, rho_f, u1)
        grad = gradient_z(phi, z)
        drho = -grad[:, free] * z[:, free] / np.abs(z[:, free])
        du = (grad * 1j * z) @ linv[:, 0]
        det = drho.real * du.imag - du.real * drho.imag
        step_rho = -(du.imag * r.real - du.real * r.imag) / det
        step_u = -(drho.real * r.imag - drho.imag * r.real) / det

        t = np.ones(count)
        pending = np.abs(r) > settings.newton_tol
        for _ in range(30):
            cand_rho = rho_f + t * step_rho
            cand_u = u1 + t * step_u
            rows = np.nonzero(pending & (cand_rho > 0) & (cand_rho < 1))[0]
            if rows.size:
                trial = residual(rows, cand_rho[rows], cand_u[rows])
                better = np.abs(trial) < np.abs(r[rows])
                accepted = rows[better]
                rho_f[accepted] = cand_rho[accepted]
                u1[accepted] = cand_u[accepted]
                r[accepted] = trial[better]
                pending[accepted] = False
            if not np.any(pending):
                break
            t[pending] *= 0.5

    z, theta = points(everything, rho_f, u1)
    rho = base_rho.copy()
    rho[:, free] = rho_f
    return rho, theta, np.abs(r), z, iterations


def lower_bound_witness(
    phi: BohrLift, profile: RegularityProfile, delta: float, nu: Optional[float] = None, chunk: int = 8192
) -> LatticeWitness:
    """
    Preimages of s_m - 1/2 = nu delta + i m delta on a lattice of angle offsets.

    For alpha in the lattice, rho_j = delta and l_j(theta) = alpha_j delta for
    j >= 2; the free radius and l_1 are found by Newton's method so that
    Phi(Z(alpha)) = i tau + nu delta + i alpha_1 delta.

    Args:
        phi: Lift
        profile: Regularity profile at the boundary point
        delta: Lattice step, 0 < delta < 1/nu
        nu: Real-part offset, at least the configured nu0
        chunk: Lattice points per Newton block

    Returns:
        Witness with every invariant evaluated

    Raises:
        ConvergenceError: Some residual stays above the witness tolerance
    """
    nu = settings.nu0 if nu is None else nu
    if nu < settings.nu0:
        raise PreconditionError("nu is below the configured nu0", {"nu": nu, "nu0": settings.nu0})
    if not 0 < delta < 1 / nu:
        raise PreconditionError("delta must lie in (0, 1/nu)", {"delta": delta, "nu": nu})
    counts = _lattice_counts(delta, profile.k)
    if min(counts) < 1:
        raise PreconditionError("Empty lattice; delta too large", {"counts": counts})
    total = math.prod(counts)
    if total > MAX_LATTICE:
        raise PreconditionError("Lattice too large; delta too small", {"points": total})

    theta0 = np.asarray(profile.point.theta, dtype=float)
    linv = profile.inverse_forms()
    w = np.exp(1j * theta0)
    a = (-w * gradient_z(phi, w)).real
    free = int(np.argmax(a))
    if a[free] <= 0:
        raise NotSupportedError("No coordinate with a positive radial derivative", {"a": a.tolist()})

    mesh = np.meshgrid(*[np.arange(1, c + 1) for c in counts], indexing="ij")
    alpha = np.stack([m.ravel() for m in mesh], axis=1)
    target = nu * delta + 1j * (profile.tau + alpha[:, 0] * delta)

    blocks = [slice(start, min(start + chunk, total)) for start in range(0, total, chunk)]
    parts = ordered_map(lambda sl: _solve_block(phi, theta0, linv, free, delta, alpha[sl], target[sl]), blocks)
    rho = np.concatenate([p[0] for p in parts])
    theta = np.concatenate([p[1] for p in parts])
    residuals = np.concatenate([p[2] for p in parts])
    z = np.concatenate([p[3] for p in parts])
    iterations = max(p[4] for p in parts)

    worst = int(np.argmax(residuals))
    if residuals[worst] > settings.witness_tol:
        raise ConvergenceError(
            "Newton did not reach the witness tolerance",
            {
                "nu": nu,
                "delta": delta,
                "alpha": alpha[worst].tolist(),
                "residual": float(residuals[worst]),
                "iterations": iterations,
            },
        )

    offsets = theta - theta0
    if total > 1:
        gaps, _ = cKDTree(offsets).query(offsets, k=2, p=np.inf)
        separation = float(np.min(gaps[:, 1]))
    else:
        separation = math.pi
    m_index = alpha[:, 0] - 1
    weights = np.prod(1 - np.abs(z) ** 2, axis=1)
    n_phi = np.bincount(m_index, weights=weights, minlength=counts[0])
    preimages = np.bincount(m_index, minlength=counts[0])
    quantity = float(np.min(n_phi) * zeta(1 + 2 * nu * delta))

    witness = LatticeWitness(
        delta=delta,
        nu=nu,
        k=profile.k,
        free_coordinate=free,
        S=[complex(nu * delta, m * delta) for m in range(1, counts[0] + 1)],
        Z=[
            WitnessPoint(alpha=a_row.tolist(), rho=r_row.tolist(), theta=t_row.tolist(), residual=float(res))
            for a_row, r_row, t_row, res in zip(alpha, rho, theta, residuals)
        ],
        s_count=counts[0],
        preimages_required=math.prod(counts[1:]),
        preimages_min=int(np.min(preimages)),
        residual_max=float(residuals[worst]),
        C1=separation / delta,
        C2=float(max(np.max(rho) / delta, delta / np.min(rho))),
        lower_bound_quantity=quantity,
        iterations=iterations,
    )
    logger.info(
        "Lattice witness built",
        delta=delta,
        nu=nu,
        points=total,
        residual_max=witness.residual_max,
        C1=witness.C1,
        C2=witness.C2,
    )
    return witness


def witness_frame(witness: LatticeWitness) -> pd.DataFrame:
    """One row per lattice point."""
    d = len(witness.k)
    records = []
    for point in witness.Z:
        row = {f"alpha_{j + 1}": point.alpha[j] for j in range(d)}
        row.update({f"rho_{j + 1}": point.rho[j] for j in range(d)})
        row.update({f"theta_{j + 1}": point.theta[j] for j in range(d)})
        row["residual"] = point.residual
        records.append(row)
    return pd.DataFrame.from_records(records)


def witness_exponent_fit(
    phi: BohrLift, profile: RegularityProfile, deltas: Sequence[float], nu: Optional[float] = None
) -> WitnessFit:
    """Slope of log min_m N(s_m; Z) zeta(2 Re s_m) against log delta."""
    if len(deltas) < 2:
        raise PreconditionError("Need at least two delta values")
    quantities = [lower_bound_witness(phi, profile, d, nu).lower_bound_quantity for d in deltas]
    fit = stats.linregress(np.log(deltas), np.log(quantities))
    return WitnessFit(
        deltas=list(deltas),
        quantities=quantities,
        exponent=float(fit.slope),
        expected=float(sum(Fraction(1, k) for k in profile.k[1:])),
        r2=float(fit.rvalue**2),
    )


# ---------------------------------------------------------------------------
# Truncated matrix probe
# ---------------------------------------------------------------------------

def _smallest_prime_factor(k: int) -> int:
    p = 2
    while p * p <= k:
        if k % p == 0:
            return p
        p += 1
    return k


def _column_norms(phi: BohrLift, ks: Sequence[int]) -> np.ndarray:
    """Full squared norms of k^-phi from a torus quadrature of exp(-2 log k Re Phi) / k."""
    size = PROBE_GRID[phi.dim]
    axis = 2 * np.pi * np.arange(size) / size
    mesh = np.meshgrid(*([axis] * phi.dim), indexing="ij")
    re = evaluate_theta(phi, np.stack([m.ravel() for m in mesh], axis=1)).real
    return np.array([float(np.mean(np.exp(-2 * math.log(k) * re))) / k for k in ks])


def truncated_matrix_probe(
    sym: DirichletSymbol,
    M: Optional[int] = None,
    D: Optional[int] = None,
    window: Optional[Tuple[int, int]] = None,
) -> ProbeResult:
    """
    Singular values of C_phi compressed to columns k <= M and monomials of total degree <= D.

    Column k holds the coefficients of k^-phi(s) on the semigroup of the
    generating set, built multiplicatively from p^-phi = p^-c1 exp(-log p Q(z)).

    Args:
        sym: Class member with c0 = 0 and dimension at most 3
        M: Column cap
        D: Total degree cap
        window: 1-based index range of the decay fit

    Returns:
        Singular values, decay fits and truncation diagnostics
    """
    M = M or settings.probe_m
    D = D or settings.probe_d
    if not 1 <= M <= 512 or D < 1:
        raise PreconditionError("Need 1 <= M <= 512 and D >= 1", {"M": M, "D": D})
    if sym.c0 != 0:
        raise PreconditionError("The probe handles c0 = 0 only", {"c0": sym.c0})
    profile, phi, _ = profile_with_range(sym)
    if not profile.class_member:
        raise ClassMembershipError("Symbol is outside the admissible class", {"min_re": profile.min_re})
    if not 1 <= phi.dim <= 3:
        raise NotSupportedError("The probe handles dimensions 1 to 3", {"dim": phi.dim})

    d = phi.dim
    q = TruncatedSeries(d, D, {alpha: complex(c) for alpha, c in phi.terms.items() if sum(alpha) <= D})
    c1 = complex(phi.constant) + 0.5
    primes = {}
    columns = [TruncatedSeries.constant(d, D, 1.0 + 0j)]
    for k in range(2, M + 1):
        check_cancelled()
        p = _smallest_prime_factor(k)
        if p not in primes:
            primes[p] = q.scale(-math.log(p)).exp() * cmath.exp(-c1 * math.log(p))
        columns.append(primes[p] * columns[k // p - 1])

    matrix = np.stack([c.to_dense(complex).ravel() for c in columns], axis=1)
    singular = linalg.svdvals(matrix)
    truncated = np.sum(np.abs(matrix) ** 2, axis=0)
    mass = truncated / _column_norms(phi, range(1, M + 1))

    lo, hi = window or (settings.probe_window_lo, settings.probe_window_hi)
    n = np.arange(1, singular.size + 1)
    keep = (n >= lo) & (n <= hi) & (singular > 1e-300)
    decay = geometric = None
    if np.count_nonzero(keep) >= 3:
        decay = -float(stats.linregress(np.log(n[keep]), np.log(singular[keep])).slope)
        geometric = float(stats.linregress(n[keep], np.log(singular[keep])).slope)
    warning = bool(np.any(mass < settings.probe_mass_threshold))
    if warning:
        logger.warning("Probe truncation keeps too little column mass", worst=float(np.min(mass)), M=M, D=D)
    logger.info("Truncated matrix probe finished", M=M, D=D, rows=int(matrix.shape[0]), decay=decay)
    return ProbeResult(
        M=M,
        D=D,
        rows=int(matrix.shape[0]),
        singular_values=singular.tolist(),
        decay_exponent=decay,
        geometric_slope=geometric,
        window=[int(lo), int(hi)],
        column_mass=mass.tolist(),
        truncation_warning=warning,
    )
