"""
Monte-Carlo estimates of the pushforward measure of Carleson boxes.
"""

import math
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.stats import linregress

from app.config.settings import settings
from app.core.bohr_lift import evaluate_theta, wrap_angles
from app.core.errors import DimensionMismatchError, PreconditionError
from app.models.lift import BohrLift, BoundaryPoint
from app.models.measure import CarlesonBox, Evidence, ExponentFit, MeasureEstimate, MeasureRow
from app.utils.logger import get_logger
from app.utils.parallel import ordered_map

logger = get_logger(__name__)

SAMPLER_KINDS = ("lattice", "random")
MIN_SAMPLES = 1000
MIN_EPS_VALUES = 5
Z95 = 1.959963984540054

Chunk = Tuple[int, int, int]


def _kronecker_alpha(dim: int) -> np.ndarray:
    """Generator of the R_d sequence from the positive root of x^(d+1) = x + 1."""
    if dim == 0:
        return np.zeros(0)
    g = 2.0
    for _ in range(64):
        step = (g ** (dim + 1) - g - 1) / ((dim + 1) * g**dim - 1)
        g -= step
        if abs(step) < 1e-16:
            break
    return np.mod((1.0 / g) ** np.arange(1, dim + 1), 1.0)


class TorusSampler:
    """
    Deterministic point source on [0, 2 pi)^d.

    Stratum 0 covers the whole torus. When ``centers`` are given, a share of the
    samples is placed in cubes of half-width ``radius`` around them and every
    point carries the deterministic-mixture weight m_d / q, so weighted hit
    fractions stay unbiased for the Haar measure.
    """

    def __init__(
        self,
        dim: int,
        seed: Optional[int] = None,
        kind: Optional[str] = None,
        chunk_size: Optional[int] = None,
        centers: Optional[Sequence[Sequence[float]]] = None,
        radius: Optional[float] = None,
        share: Optional[float] = None,
    ):
        self.dim = dim
        self.seed = settings.seed if seed is None else int(seed)
        self.kind = kind or settings.sampler
        if self.kind not in SAMPLER_KINDS:
            raise PreconditionError("Unknown sampler kind", {"kind": self.kind, "allowed": list(SAMPLER_KINDS)})
        self.chunk_size = chunk_size or settings.chunk_size
        self.centers = np.asarray(centers if centers is not None else [], dtype=float).reshape(-1, dim)
        share = settings.stratify_share if share is None else share
        if not 0 <= share < 1:
            raise PreconditionError("Stratify share must lie in [0, 1)", {"share": share})
        self.share = share if len(self.centers) and dim else 0.0
        self.radius = min(float(radius if radius is not None else math.pi), math.pi)
        if self.share and self.radius <= 0:
            raise PreconditionError("Stratification radius must be positive", {"radius": self.radius})
        self._alpha = _kronecker_alpha(dim)

    @property
    def stratified(self) -> bool:
        return self.share > 0

    def stratum_sizes(self, n: int) -> List[int]:
        """Samples per stratum: the whole torus first, then one per center."""
        if not self.stratified:
            return [n]
        n_balls = int(round(self.share * n))
        k = len(self.centers)
        per_ball = [n_balls // k + (1 if i < n_balls % k else 0) for i in range(k)]
        return [n - n_balls] + per_ball

    def plan(self, n: int) -> List[Chunk]:
        """Fixed chunking (stratum, start, count); identical for identical (n, chunk size)."""
        chunks = []
        for stratum, size in enumerate(self.stratum_sizes(n)):
            for start in range(0, size, self.chunk_size):
                chunks.append((stratum, start, min(self.chunk_size, size - start)))
        return chunks

    def _unit_points(self, stratum: int, start: int, count: int) -> np.ndarray:
        if self.kind == "random":
            rng = np.random.default_rng([self.seed, stratum, start // self.chunk_size])
            return rng.random((count, self.dim))
        shift = np.random.default_rng([self.seed, stratum]).random(self.dim)
        k = np.arange(start, start + count, dtype=float)[:, None]
        return np.mod(shift + k * self._alpha, 1.0)

    def points(self, chunk: Chunk, n: int) -> Tuple[np.ndarray, np.ndarray]:
        """Angles of one chunk and their weights relative to the Haar measure."""
        stratum, start, count = chunk
        unit = self._unit_points(stratum, start, count)
        if stratum == 0:
            theta = 2 * math.pi * unit
        else:
            theta = self.centers[stratum - 1] + self.radius * (2 * unit - 1)
        return theta, self._weights(theta, n)

    def _weights(self, theta: np.ndarray, n: int) -> np.ndarray:
        if not self.stratified:
            return np.ones(theta.shape[0])
        sizes = self.stratum_sizes(n)
        boost = (math.pi / self.radius) ** self.dim
        density = np.full(theta.shape[0], sizes[0] / n)
        for center, size in zip(self.centers, sizes[1:]):
            inside = np.all(np.abs(wrap_angles(theta - center)) <= self.radius, axis=1)
            density += inside * (size / n) * boost
        return 1.0 / density


def _check_sampler(phi: BohrLift, sampler: TorusSampler, n: int) -> None:
    if sampler.dim != phi.dim:
        raise DimensionMismatchError("Sampler dimension does not match the lift", {"sampler": sampler.dim, "lift": phi.dim})
    if n < MIN_SAMPLES:
        raise PreconditionError("At least 1000 samples are required", {"n": n})


Strip = Tuple[np.ndarray, np.ndarray, np.ndarray]


def _strip_samples(phi: BohrLift, sampler: TorusSampler, n: int, eps: float) -> Strip:
    """Re Phi, Im Phi and weights of the samples with 0 <= Re Phi <= eps, in chunk order."""

    def scan(chunk: Chunk) -> Strip:
        theta, weights = sampler.points(chunk, n)
        values = evaluate_theta(phi, theta)
        mask = (values.real >= 0) & (values.real <= eps)
        return values.real[mask], values.imag[mask], weights[mask]

    parts = ordered_map(scan, sampler.plan(n))
    if not parts:
        return np.zeros(0), np.zeros(0), np.zeros(0)
    return tuple(np.concatenate([p[i] for p in parts]) for i in range(3))


def _narrow(strip: Strip, eps: float) -> Tuple[np.ndarray, np.ndarray]:
    re, im, weights = strip
    mask = re <= eps
    return im[mask], weights[mask]


def _estimate(hits: int, weight_sum: float, weight_sq_sum: float, n: int) -> MeasureEstimate:
    value = min(max(weight_sum / n, 0.0), 1.0)
    variance = max(weight_sq_sum / n - value * value, 0.0)
    return MeasureEstimate(hits=int(hits), samples=n, value=value, ci95=Z95 * math.sqrt(variance / n))


def box_measure(
    phi: BohrLift, box: CarlesonBox, sampler: Optional[TorusSampler] = None, n: Optional[int] = None
) -> MeasureEstimate:
    """
    Weighted fraction of sampler points whose image lies in the box.

    Args:
        phi: Lift of a class-member symbol
        box: Carleson box
        sampler: Point source, seeded from settings by default
        n: Number of samples

    Returns:
        Measure estimate with a normal 95% half-width
    """
    n = settings.samples if n is None else n
    sampler = sampler or TorusSampler(phi.dim)
    _check_sampler(phi, sampler, n)
    _, im, weights = _strip_samples(phi, sampler, n, box.eps)
    mask = np.abs(im - box.tau) <= box.eps / 2
    return _estimate(int(mask.sum()), float(weights[mask].sum()), float((weights[mask] ** 2).sum()), n)


def imaginary_bound(phi: BohrLift) -> float:
    """Upper bound for |Im Phi| on the torus from the coefficient l1 norm."""
    return phi.l1_norm() + abs(complex(phi.constant).imag)


def default_tau_grid(phi: BohrLift, eps: float, extra: Sequence[float] = ()) -> np.ndarray:
    """Grid over [-M, M] with spacing eps/2, merged with ``extra`` heights."""
    bound = imaginary_bound(phi)
    count = int(math.ceil(2 * bound / (eps / 2))) + 1
    grid = np.linspace(-bound, bound, max(count, 1))
    return np.unique(np.concatenate([grid, np.asarray(list(extra), dtype=float)]))


def _check_tau_grid(phi: BohrLift, eps: float, tau_grid: np.ndarray) -> None:
    spacing = float(np.max(np.diff(tau_grid))) if tau_grid.size > 1 else 0.0
    if spacing > eps / 2 * (1 + 1e-9):
        raise PreconditionError("Tau grid too coarse", {"spacing": spacing, "eps": eps})
    bound = imaginary_bound(phi)
    if tau_grid.size == 0 or tau_grid[0] > -bound + eps / 2 or tau_grid[-1] < bound - eps / 2:
        raise PreconditionError("Tau grid does not cover the range of Im Phi", {"bound": bound})


def _window_sup(im: np.ndarray, weights: np.ndarray, taus: np.ndarray, eps: float, n: int) -> Tuple[float, MeasureEstimate]:
    order = np.argsort(im, kind="stable")
    im_sorted = im[order]
    w_sorted = weights[order]
    cum = np.concatenate([[0.0], np.cumsum(w_sorted)])
    cum_sq = np.concatenate([[0.0], np.cumsum(w_sorted**2)])
    lo = np.searchsorted(im_sorted, taus - eps / 2, side="left")
    hi = np.searchsorted(im_sorted, taus + eps / 2, side="right")
    sums = np.maximum(cum[hi] - cum[lo], 0.0)
    best = int(np.argmax(sums))
    estimate = _estimate(int(hi[best] - lo[best]), float(sums[best]), float(max(cum_sq[hi[best]] - cum_sq[lo[best]], 0.0)), n)
    return float(taus[best]), estimate


def sup_tau_measure(
    phi: BohrLift,
    eps: float,
    tau_grid: Optional[Sequence[float]] = None,
    n: Optional[int] = None,
    sampler: Optional[TorusSampler] = None,
) -> Tuple[float, MeasureEstimate]:
    """
    Largest box measure over a grid of heights, with common samples for every height.

    Returns:
        (tau*, estimate at tau*); the first maximizer wins ties
    """
    if eps <= 0:
        raise PreconditionError("eps must be positive", {"eps": eps})
    n = settings.samples if n is None else n
    sampler = sampler or TorusSampler(phi.dim)
    _check_sampler(phi, sampler, n)
    taus = default_tau_grid(phi, eps) if tau_grid is None else np.unique(np.asarray(tau_grid, dtype=float))
    _check_tau_grid(phi, eps, taus)
    _, im, weights = _strip_samples(phi, sampler, n, eps)
    return _window_sup(im, weights, taus, eps, n)


def eps_grid(eps_max: float, eps_min: float) -> List[float]:
    """Geometric halving from eps_max down to eps_min."""
    if not 0 < eps_min <= eps_max:
        raise PreconditionError("Need 0 < eps_min <= eps_max", {"eps_max": eps_max, "eps_min": eps_min})
    values = []
    eps = eps_max
    while eps >= eps_min * (1 - 1e-12):
        values.append(eps)
        eps /= 2
    return values


def _resolve_eps(eps_range: Optional[Sequence[float]]) -> List[float]:
    if eps_range is None:
        values = eps_grid(settings.eps_max, settings.eps_min)
    elif len(eps_range) == 2:
        values = eps_grid(float(eps_range[0]), float(eps_range[1]))
    else:
        values = [float(e) for e in eps_range]
    if len(values) < MIN_EPS_VALUES:
        raise PreconditionError("At least five eps values are required", {"eps": values})
    ratios = [values[i + 1] / values[i] for i in range(len(values) - 1)]
    if any(e <= 0 for e in values) or any(r >= 1 for r in ratios) or max(ratios) - min(ratios) > 1e-9:
        raise PreconditionError("eps values must be positive, strictly decreasing and geometric", {"eps": values})
    return values


def _evidence(kappa: float, stderr: float) -> Evidence:
    band = max(2 * stderr, settings.evidence_margin)
    if kappa - band > 1:
        return Evidence.COMPACT
    if abs(kappa - 1) <= band:
        return Evidence.NON_COMPACT
    return Evidence.INCONCLUSIVE


def kappa_fit(
    phi: BohrLift,
    eps_range: Optional[Sequence[float]] = None,
    n_per_eps: Optional[int] = None,
    seed: Optional[int] = None,
    kind: Optional[str] = None,
    boundary: Optional[Sequence[BoundaryPoint]] = None,
    share: Optional[float] = None,
) -> ExponentFit:
    """
    Fit the box exponent from sup-over-tau measures at geometrically spaced eps.

    Args:
        phi: Lift of a class-member symbol
        eps_range: (eps_max, eps_min), or an explicit geometric grid of at least five values
        n_per_eps: Samples per eps
        seed: Sampler seed
        kind: lattice or random
        boundary: Boundary points used as stratification centers
        share: Stratified share; 0 disables stratification

    Returns:
        Fit with per-eps rows and evidence
    """
    eps_values = _resolve_eps(eps_range)
    n = settings.samples if n_per_eps is None else n_per_eps
    seed = settings.seed if seed is None else seed
    centers = [p.theta for p in boundary] if boundary else None
    stratified = bool(centers) and (settings.stratify_share if share is None else share) > 0

    strip: Optional[Strip] = None
    if not stratified:
        shared = TorusSampler(phi.dim, seed=seed, kind=kind, share=0.0)
        _check_sampler(phi, shared, n)
        strip = _strip_samples(phi, shared, n, eps_values[0])

    extra_taus = [p.tau for p in boundary] if boundary else []
    rows: List[MeasureRow] = []
    for eps in eps_values:
        if strip is not None:
            im, weights = _narrow(strip, eps)
        else:
            radius = min(settings.stratify_radius_factor * math.sqrt(eps), math.pi)
            sampler = TorusSampler(phi.dim, seed=seed, kind=kind, centers=centers, radius=radius, share=share)
            _check_sampler(phi, sampler, n)
            _, im, weights = _strip_samples(phi, sampler, n, eps)
        tau_star, estimate = _window_sup(im, weights, default_tau_grid(phi, eps, extra_taus), eps, n)
        rows.append(
            MeasureRow(eps=eps, tau_star=tau_star, measure=estimate.value, ci95=estimate.ci95, hits=estimate.hits)
        )
        logger.debug("Box measure estimated", eps=eps, tau_star=tau_star, measure=estimate.value, hits=estimate.hits)

    return _fit_rows(rows, n, seed)


def _doubling_ratios(rows: Sequence[MeasureRow]) -> List[float]:
    ratios = []
    for big, small in zip(rows, rows[1:]):
        if small.measure > 0:
            ratios.append((big.measure / big.eps) / (small.measure / small.eps))
    return ratios


def _fit_rows(rows: List[MeasureRow], n: int, seed: int) -> ExponentFit:
    eps_values = [r.eps for r in rows]
    measures = [r.measure for r in rows]
    common = dict(
        eps_grid=eps_values,
        sup_tau_values=measures,
        rows=rows,
        doubling_ratios=_doubling_ratios(rows),
        samples=n,
        seed=seed,
    )
    positive = [(e, m) for e, m in zip(eps_values, measures) if m > 0]
    if not positive:
        logger.info("All box measures vanish", eps_min=eps_values[-1])
        return ExponentFit(evidence=Evidence.RESTRICTED_RANGE, **common)
    if len(positive) < 3:
        logger.warning("Too few positive measures for a fit", positive=len(positive))
        return ExponentFit(evidence=Evidence.INCONCLUSIVE, **common)

    log_eps = np.log([e for e, _ in positive])
    log_mu = np.log([m for _, m in positive])
    result = linregress(log_eps, log_mu)
    kappa = float(result.slope)
    stderr = float(result.stderr)
    evidence = _evidence(kappa, stderr)
    logger.info("Box exponent fitted", kappa_hat=kappa, stderr=stderr, evidence=evidence.value)
    return ExponentFit(
        kappa_hat=kappa,
        stderr=stderr,
        r2=float(result.rvalue**2),
        intercept=float(result.intercept),
        evidence=evidence,
        **common,
    )


def fit_frame(fit: ExponentFit) -> pd.DataFrame:
    """Per-eps table with a trailing fit summary row, ready for CSV."""
    frame = pd.DataFrame(
        {
            "kind": "cell",
            "eps": [r.eps for r in fit.rows],
            "tau_star": [r.tau_star for r in fit.rows],
            "measure": [r.measure for r in fit.rows],
            "ci95": [r.ci95 for r in fit.rows],
            "hits": [r.hits for r in fit.rows],
            "evidence": "",
        }
    )
    summary = pd.DataFrame(
        [
            {
                "kind": "fit",
                "eps": np.nan,
                "tau_star": np.nan,
                "measure": np.nan if fit.kappa_hat is None else fit.kappa_hat,
                "ci95": np.nan if fit.stderr is None else 2 * fit.stderr,
                "hits": sum(r.hits for r in fit.rows),
                "evidence": fit.evidence.value,
            }
        ]
    )
    return pd.concat([frame, summary], ignore_index=True)
