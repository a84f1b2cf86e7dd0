"""
Monte-Carlo Carleson box measures and the fitted box exponent.
"""

from typing import Any, Dict

from app.config.settings import settings
from app.core.carleson import TorusSampler, box_measure, fit_frame, kappa_fit
from app.core.errors import ClassMembershipError, PreconditionError
from app.core.symbols import format_symbol, profile_with_range
from app.models.measure import CarlesonBox
from app.models.pipeline import PipelineType
from app.models.report import AnalysisReport
from app.pipelines.base_pipeline import BasePipeline


class CarlesonPipeline(BasePipeline):
    """Box exponent fit, or a single box when ``eps`` is given."""

    pipeline_type = PipelineType.CARLESON

    async def execute(self, input_data: Dict[str, Any]) -> AnalysisReport:
        sym = self.read_symbol(input_data)
        if sym.c0 != 0:
            raise PreconditionError("Box measures are defined for c0 = 0", {"c0": sym.c0})
        profile, phi, analysis = await self.run_step(
            "profile", "symbol_core", profile_with_range, sym, summary=lambda r: {"dimension": r[0].dimension}
        )
        if not profile.class_member:
            raise ClassMembershipError("Symbol is outside the admissible class", {"min_re": profile.min_re})
        if phi.dim == 0:
            raise PreconditionError("Constant symbols have no box measure to fit")

        seed = settings.seed if input_data.get("seed") is None else input_data["seed"]
        kind = input_data.get("sampler")

        if input_data.get("eps") is not None:
            box = CarlesonBox(tau=input_data.get("tau") or 0.0, eps=input_data["eps"])
            sampler = TorusSampler(phi.dim, seed=seed, kind=kind)
            estimate = await self.run_step(
                "box_measure",
                "carleson",
                lambda: box_measure(phi, box, sampler=sampler, n=input_data.get("samples")),
                summary=lambda e: {"value": e.value, "hits": e.hits},
            )
            return self.report(
                seed=seed,
                symbol=format_symbol(sym),
                profile=profile,
                boundary_points=analysis.boundary_points,
                payload={"box": box.model_dump(mode="json"), "estimate": estimate.model_dump(mode="json")},
                table=[{"tau": box.tau, "eps": box.eps, "measure": estimate.value, "ci95": estimate.ci95}],
            )

        fit = await self.run_step(
            "kappa_fit",
            "carleson",
            lambda: kappa_fit(
                phi,
                eps_range=self.eps_range(input_data),
                n_per_eps=input_data.get("samples"),
                seed=seed,
                kind=kind,
                boundary=analysis.boundary_points,
            ),
            summary=lambda f: {"kappa_hat": f.kappa_hat, "evidence": f.evidence.value},
        )
        return self.report(
            seed=seed,
            symbol=format_symbol(sym),
            profile=profile,
            boundary_points=analysis.boundary_points,
            carleson=fit,
            table=self.records(fit_frame(fit)),
        )
