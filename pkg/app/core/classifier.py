"""
Theorem-based compactness classifier.
"""

from typing import List, Optional, Tuple

import numpy as np

from app.config.settings import settings
from app.core.bohr_lift import directional_taylor, evaluate_theta, leading_order
from app.core.errors import ClassMembershipError, InconsistentInputError
from app.core.symbols import profile_with_range, theorem1_verdict
from app.models.lift import BohrLift, BoundaryPoint, BoundarySearchConfig, CompactnessVerdict, RangeAnalysis, Verdict
from app.models.symbol import DirichletSymbol, RangeKind, SymbolProfile
from app.utils.logger import get_logger

logger = get_logger(__name__)

CONSISTENCY_TOL = 1e-7


def _kernel_basis(point: BoundaryPoint) -> np.ndarray:
    eigvals = np.asarray(point.eigvals)
    eigvecs = np.asarray(point.eigvecs)
    scale = 1.0 + float(np.max(np.abs(eigvals))) if eigvals.size else 1.0
    return eigvecs[eigvals <= settings.rank_tol * scale]


def im_form_in_kernel(point: BoundaryPoint) -> bool:
    """Whether the linear form of Im phi has a component along the Hessian kernel."""
    kernel = _kernel_basis(point)
    if kernel.size == 0:
        return False
    g = np.asarray(point.im_gradient)
    projection = kernel.T @ (kernel @ g)
    return float(np.linalg.norm(projection)) > 1e-6 * (1.0 + float(np.linalg.norm(g)))


def separated_orders(phi: BohrLift, point: BoundaryPoint) -> List[Optional[int]]:
    """Leading order of Re phi along each coordinate axis at the point."""
    orders = []
    for j in range(phi.dim):
        axis = np.zeros(phi.dim)
        axis[j] = 1.0
        orders.append(leading_order(directional_taylor(phi, point.theta, axis)))
    return orders


def local_kappa(
    phi: BohrLift, point: BoundaryPoint, degree: int, separated: bool
) -> Tuple[Optional[float], Optional[str]]:
    """
    Local Carleson exponent from the case table.

    Args:
        phi: Lift
        point: Boundary point
        degree: Degree of the symbol
        separated: Whether the lift is in separated variables

    Returns:
        (kappa, case tag); (None, None) when no case applies
    """
    d = phi.dim
    j_index = point.index_J
    if separated:
        orders = separated_orders(phi, point)
        if all(k is not None for k in orders):
            inverse = [1.0 / k for k in orders]
            return 1.0 + sum(inverse) - min(inverse), "separated"
        return None, None

    independent = im_form_in_kernel(point)
    if j_index >= 1 and independent:
        return 1.0 + j_index / 2.0, "case1"
    if j_index >= 2:
        return (1.0 + j_index) / 2.0, "case2"
    if j_index == 1 and degree == 2:
        return 9.0 / 8.0, "case3"
    if j_index == 0 and degree == 2:
        return (d + 3) / 4.0, "case4"
    return None, None


def _check_consistency(profile: SymbolProfile, phi: BohrLift, boundary: List[BoundaryPoint]) -> None:
    if phi.dim != profile.dimension:
        raise InconsistentInputError(
            "Lift dimension differs from the profile", {"lift": phi.dim, "profile": profile.dimension}
        )
    for point in boundary:
        if len(point.theta) != phi.dim:
            raise InconsistentInputError("Boundary point has the wrong dimension", {"theta": point.theta})
        value = evaluate_theta(phi, np.asarray(point.theta)[None, :])[0]
        if abs(value.real) > CONSISTENCY_TOL or abs(value.imag - point.tau) > CONSISTENCY_TOL:
            raise InconsistentInputError(
                "Boundary point does not belong to this lift",
                {"theta": point.theta, "re": float(value.real), "tau": point.tau},
            )


def classify_compactness(
    profile: SymbolProfile,
    phi: BohrLift,
    boundary: List[BoundaryPoint],
    sym: Optional[DirichletSymbol] = None,
) -> CompactnessVerdict:
    """
    Decide compactness from the structural data.

    Order of rules: the characteristic rule for c0 >= 1, restricted range, complex dimension
    one, separated variables, degree at most two, boundary index at least two
    everywhere, the local case table, and finally an explicit undetermined verdict.

    Args:
        profile: Symbol profile
        phi: Optimal Bohr lift
        boundary: Boundary points of ``phi``
        sym: Source symbol, used for the c0 >= 1 route

    Returns:
        Verdict with rule tag and per-point exponents
    """
    if not profile.class_member:
        raise ClassMembershipError("Symbol is outside the admissible class", {"min_re": profile.min_re})

    if profile.characteristic >= 1:
        return theorem1_verdict(sym or DirichletSymbol(c0=profile.characteristic), profile.range_kind)

    if profile.range_kind == RangeKind.RESTRICTED:
        return CompactnessVerdict(verdict=Verdict.COMPACT, rule="RestrictedRange")

    _check_consistency(profile, phi, boundary)

    d = profile.dimension
    separated = profile.separated
    kappas: List[Optional[float]] = []
    cases: List[Optional[str]] = []
    for point in boundary:
        kappa, case = local_kappa(phi, point, profile.degree, separated)
        kappas.append(kappa)
        cases.append(case)
    indices = [p.index_J for p in boundary]

    def verdict(value: Verdict, rule: str) -> CompactnessVerdict:
        logger.info("Compactness classified", verdict=value.value, rule=rule, dimension=d, degree=profile.degree)
        return CompactnessVerdict(verdict=value, rule=rule, kappa_w=kappas, cases=cases, boundary_index=indices)

    if d == 1:
        return verdict(Verdict.NON_COMPACT, "dim1")
    if separated and d >= 2:
        return verdict(Verdict.COMPACT, "Thm2")
    if profile.degree <= 2:
        return verdict(Verdict.COMPACT, "Thm4-deg≤2")
    if boundary and all(j >= 2 for j in indices):
        return verdict(Verdict.COMPACT, "Thm4-J≥2")
    if boundary and all(k is not None and k > 1 for k in kappas):
        weakest = min(range(len(boundary)), key=lambda i: kappas[i])
        return verdict(Verdict.COMPACT, f"PROPMAIN-{cases[weakest]}")
    return verdict(Verdict.UNDETERMINED, "OutsideTheory")


def analyze_symbol(
    sym: DirichletSymbol, config: Optional[BoundarySearchConfig] = None
) -> Tuple[SymbolProfile, BohrLift, RangeAnalysis, CompactnessVerdict]:
    """Profile, lift, range analysis and verdict for a symbol."""
    profile, phi, analysis = profile_with_range(sym, config)
    result = classify_compactness(profile, phi, analysis.boundary_points, sym=sym)
    return profile, phi, analysis, result
