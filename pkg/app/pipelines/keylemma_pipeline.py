"""
Taylor-factorization laboratory runs.
"""

from fractions import Fraction
from typing import Any, Dict, Optional

import pandas as pd

from app.core.errors import PreconditionError
from app.core.keylemma import (
    attempt_factorization,
    conditioned_params,
    keylemma_equations,
    keylemma_step2_geometry,
    keylemma_step3_roots,
    keylemma_sweep,
    re_phi_at_minus_one,
)
from app.models.keylemma import KeylemmaParams
from app.models.pipeline import PipelineType
from app.models.report import AnalysisReport
from app.pipelines.base_pipeline import BasePipeline


def parse_number(value: Any, exact: bool) -> Any:
    """'1/2', '0.25' or a number; a Fraction in exact mode, a float otherwise."""
    if value is None:
        return None
    try:
        number = Fraction(str(value).strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise PreconditionError("Not a rational number", {"value": str(value)}) from exc
    return number if exact else float(number)


class KeylemmaPipeline(BasePipeline):
    """
    Factorization attempt and residual report at one parameter point, or a
    sweep of the admissible triangle when ``grid`` is set.

    Without explicit Im b1, Im b2 the parameters are conditioned on Im c.
    """

    pipeline_type = PipelineType.KEYLEMMA

    def params(self, input_data: Dict[str, Any]) -> KeylemmaParams:
        exact = bool(input_data.get("exact"))
        a1 = parse_number(input_data.get("a1") or "1/2", exact)
        a2 = parse_number(input_data.get("a2") or "1/2", exact)
        im_c = parse_number(input_data.get("imc") or 0, exact)
        im_b1: Optional[Any] = parse_number(input_data.get("imb1"), exact)
        im_b2: Optional[Any] = parse_number(input_data.get("imb2"), exact)
        if im_b1 is None and im_b2 is None:
            return conditioned_params(a1, a2, im_c)
        zero = Fraction(0) if exact else 0.0
        return KeylemmaParams(a1=a1, a2=a2, im_b1=im_b1 or zero, im_b2=im_b2 or zero, im_c=im_c)

    async def execute(self, input_data: Dict[str, Any]) -> AnalysisReport:
        if input_data.get("grid"):
            im_c = parse_number(input_data.get("imc") or 0, True)
            sweep = await self.run_step(
                "sweep",
                "taylor_lab",
                keylemma_sweep,
                int(input_data["grid"]),
                im_c,
                summary=lambda s: {"cells": len(s.cells), "factorizing": len(s.factorizing)},
            )
            table = pd.DataFrame.from_records([c.model_dump(mode="json") for c in sweep.cells])
            return self.report(payload={"sweep": sweep.model_dump(mode="json")}, table=self.records(table))

        params = self.params(input_data)
        attempt = await self.run_step(
            "factorization",
            "taylor_lab",
            attempt_factorization,
            params,
            summary=lambda a: {"obstruction": a.obstruction.model_dump(mode="json") if a.obstruction else None},
        )
        residuals = await self.run_step(
            "equations", "taylor_lab", keylemma_equations, params, summary=lambda r: {"max_residual": r.max_residual}
        )
        payload: Dict[str, Any] = {
            "params": params.model_dump(mode="json"),
            "factorization": attempt.model_dump(mode="json"),
            "residuals": residuals.model_dump(mode="json"),
            "re_phi_minus_one": float(re_phi_at_minus_one(params)),
            "re_phi_minus_one_exact": str(re_phi_at_minus_one(params)) if params.exact else None,
        }
        if input_data.get("geometry"):
            geometry = await self.run_step("step2_geometry", "taylor_lab", keylemma_step2_geometry)
            roots = await self.run_step("step3_roots", "taylor_lab", keylemma_step3_roots)
            payload["geometry"] = geometry.model_dump(mode="json")
            payload["step3"] = roots.model_dump(mode="json")

        table = pd.DataFrame.from_records(
            [
                {
                    "name": e.name,
                    "applicable": e.applicable,
                    "counted": e.counted,
                    "residual": None if e.residual is None else float(e.residual),
                }
                for e in residuals.entries
            ]
        )
        return self.report(payload=payload, table=self.records(table))
