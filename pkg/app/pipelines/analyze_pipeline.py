"""
Structural analysis and compactness classification of a symbol.
"""

from typing import Any, Dict, List, Optional

import pandas as pd

from app.core.approx import boundary_regularity, compactness_index
from app.core.carleson import fit_frame, kappa_fit
from app.core.classifier import analyze_symbol
from app.core.errors import ClassMembershipError, NotSupportedError
from app.core.symbols import format_symbol
from app.models.approx import RegularityProfile
from app.models.lift import BohrLift, BoundaryPoint, Verdict
from app.models.pipeline import PipelineType
from app.models.report import AnalysisReport
from app.models.symbol import RangeKind
from app.pipelines.base_pipeline import BasePipeline
from app.utils.logger import get_logger

logger = get_logger(__name__)


def regularity_profiles(phi: BohrLift, points: List[BoundaryPoint]) -> List[RegularityProfile]:
    """Normal forms at every boundary point that admits one; the others are skipped."""
    profiles = []
    for point in points:
        try:
            profiles.append(boundary_regularity(phi, point))
        except (NotSupportedError, ClassMembershipError) as e:
            logger.warning("No normal form at boundary point", theta=point.theta, reason=str(e))
    return profiles


def boundary_frame(points: List[BoundaryPoint], kappas: List[Optional[float]]) -> pd.DataFrame:
    rows = []
    for i, point in enumerate(points):
        row = {f"theta_{j + 1}": t for j, t in enumerate(point.theta)}
        row.update(tau=point.tau, index_J=point.index_J, kappa_w=kappas[i] if i < len(kappas) else None)
        rows.append(row)
    return pd.DataFrame.from_records(rows)


class AnalyzePipeline(BasePipeline):
    """
    Profile, boundary points and verdict.

    Undetermined verdicts, or any verdict when ``carleson`` is set, get a
    Monte-Carlo box exponent fit as supporting evidence.
    """

    pipeline_type = PipelineType.ANALYZE

    async def execute(self, input_data: Dict[str, Any]) -> AnalysisReport:
        sym = self.read_symbol(input_data)
        self.metadata["symbol"] = format_symbol(sym)

        profile, phi, analysis, verdict = await self.run_step(
            "classify",
            "symbol_core",
            analyze_symbol,
            sym,
            summary=lambda r: {"verdict": r[3].verdict.value, "rule": r[3].rule, "dimension": r[0].dimension},
        )
        boundary = analysis.boundary_points

        fit = None
        wants_fit = input_data.get("carleson") or verdict.verdict == Verdict.UNDETERMINED
        if wants_fit and sym.c0 == 0 and profile.range_kind == RangeKind.UNRESTRICTED:
            fit = await self.run_step(
                "carleson",
                "carleson",
                lambda: kappa_fit(
                    phi,
                    eps_range=self.eps_range(input_data),
                    n_per_eps=input_data.get("samples"),
                    seed=input_data.get("seed"),
                    boundary=boundary,
                ),
                summary=lambda f: {"kappa_hat": f.kappa_hat, "evidence": f.evidence.value},
            )

        profiles: List[RegularityProfile] = []
        eta = None
        if sym.c0 == 0 and profile.dimension >= 2 and boundary:
            profiles = await self.run_step("regularity", "approx_numbers", regularity_profiles, phi, boundary)
            if len(profiles) == len(boundary):
                eta = str(compactness_index(profiles).eta)

        table = fit_frame(fit) if fit is not None else boundary_frame(boundary, verdict.kappa_w)
        return self.report(
            seed=fit.seed if fit is not None else None,
            symbol=format_symbol(sym),
            profile=profile,
            boundary_points=boundary,
            verdict=verdict,
            carleson=fit,
            regularity=profiles,
            eta=eta,
            table=self.records(table),
        )
