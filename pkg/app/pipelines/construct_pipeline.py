"""
Boundary-flat constructions and counterexample families.
"""

from typing import Any, Dict, Optional

import pandas as pd

from app.core.classifier import analyze_symbol
from app.core.errors import PreconditionError
from app.core.flat import build_flat_example, build_separated_example, counterexample_factory
from app.core.symbols import format_symbol, symbol_from_lift
from app.models.flat import ConstructionResult
from app.models.pipeline import PipelineType
from app.models.report import AnalysisReport
from app.pipelines.base_pipeline import BasePipeline
from app.pipelines.keylemma_pipeline import parse_number


def coefficient_frame(result: ConstructionResult) -> pd.DataFrame:
    """One row per monomial of the lift, constant first."""
    constant = complex(result.lift.constant)
    rows = [{"alpha": ",".join(["0"] * max(result.lift.dim, 1)), "re": constant.real, "im": constant.imag}]
    for alpha in sorted(result.lift.terms):
        value = complex(result.lift.terms[alpha])
        rows.append({"alpha": ",".join(map(str, alpha)), "re": value.real, "im": value.imag})
    return pd.DataFrame.from_records(rows)


class ConstructPipeline(BasePipeline):
    """
    One of --flat k N, --separated k1,k2,... or --counterexample KIND --delta d.

    The lift is mapped back to a symbol over the first primes; with
    ``analyze`` set the symbol is also classified.
    """

    pipeline_type = PipelineType.CONSTRUCT

    def build(self, input_data: Dict[str, Any]) -> ConstructionResult:
        grid: Optional[int] = input_data.get("grid")
        if input_data.get("flat"):
            k, n_blocks = input_data["flat"]
            return build_flat_example(int(k), int(n_blocks), grid=grid)
        if input_data.get("separated"):
            return build_separated_example([int(k) for k in input_data["separated"]], grid=grid)
        if input_data.get("counterexample"):
            if input_data.get("delta") is None:
                raise PreconditionError("Counterexamples need --delta")
            return counterexample_factory(
                input_data["counterexample"],
                parse_number(input_data["delta"], True),
                poly=input_data.get("poly"),
                dim=input_data.get("dim"),
                grid=grid,
            )
        raise PreconditionError("Choose one of --flat, --separated or --counterexample")

    async def execute(self, input_data: Dict[str, Any]) -> AnalysisReport:
        result = await self.run_step(
            "construct",
            "flat_constructor",
            self.build,
            input_data,
            summary=lambda r: {"name": r.name, "min_re": r.certification.min_re, "passed": r.certification.passed},
        )
        sym = symbol_from_lift(result.lift)

        profile = verdict = None
        boundary = []
        if input_data.get("analyze"):
            profile, _, analysis, verdict = await self.run_step(
                "classify",
                "symbol_core",
                analyze_symbol,
                sym,
                summary=lambda r: {"verdict": r[3].verdict.value, "rule": r[3].rule},
            )
            boundary = analysis.boundary_points

        return self.report(
            symbol=format_symbol(sym),
            profile=profile,
            boundary_points=boundary,
            verdict=verdict,
            payload={"construction": result.model_dump(mode="json"), "symbol_json": sym.model_dump(mode="json")},
            table=self.records(coefficient_frame(result)),
        )
