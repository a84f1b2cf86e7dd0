"""
Approximation-number tools: compactness index, contact exponent, lattice
witnesses, matrix probe and the geometric bound helpers.
"""

from typing import Any, Dict, List, Tuple

import pandas as pd

from app.config.settings import settings
from app.core.approx import (
    an_bounds,
    blaschke_empirical,
    compactness_index,
    eta,
    hyperbolic_length_fit,
    lower_bound_witness,
    omega_estimate,
    schatten_separator,
    truncated_matrix_probe,
    witness_exponent_fit,
    witness_frame,
)
from app.core.errors import ClassMembershipError, PreconditionError
from app.core.symbols import format_symbol, profile_with_range
from app.models.approx import RegularityProfile
from app.models.lift import BohrLift
from app.models.pipeline import PipelineType
from app.models.report import AnalysisReport
from app.models.symbol import DirichletSymbol, SymbolProfile
from app.pipelines.analyze_pipeline import regularity_profiles
from app.pipelines.base_pipeline import BasePipeline
from app.pipelines.keylemma_pipeline import parse_number

SYMBOL_MODES = ("eta", "omega", "witness", "probe")
GEOMETRY_MODES = ("schatten", "length", "blaschke", "bounds")


class ApproxPipeline(BasePipeline):
    """Runs the first mode set in the options."""

    pipeline_type = PipelineType.APPROX

    async def execute(self, input_data: Dict[str, Any]) -> AnalysisReport:
        for mode in GEOMETRY_MODES:
            if input_data.get(mode) is not None:
                return await getattr(self, f"_{mode}")(input_data)

        mode = next((m for m in SYMBOL_MODES if input_data.get(m)), "eta")
        sym = self.read_symbol(input_data)
        if sym.c0 != 0:
            raise PreconditionError("Approximation-number tools need c0 = 0", {"c0": sym.c0})
        profile, phi, analysis = await self.run_step(
            "profile", "symbol_core", profile_with_range, sym, summary=lambda r: {"dimension": r[0].dimension}
        )
        if not profile.class_member:
            raise ClassMembershipError("Symbol is outside the admissible class", {"min_re": profile.min_re})
        self.metadata["mode"] = mode
        return await getattr(self, f"_{mode}")(input_data, sym, profile, phi, analysis.boundary_points)

    async def _regularity(self, phi: BohrLift, boundary: List[Any]) -> List[RegularityProfile]:
        if not boundary:
            raise PreconditionError("No boundary points; the range is restricted")
        profiles = await self.run_step("regularity", "approx_numbers", regularity_profiles, phi, boundary)
        if len(profiles) != len(boundary):
            raise PreconditionError("Some boundary point has no regular normal form")
        return profiles

    def _common(self, sym: DirichletSymbol, profile: SymbolProfile, boundary: List[Any]) -> Dict[str, Any]:
        return {"symbol": format_symbol(sym), "profile": profile, "boundary_points": boundary}

    async def _eta(self, input_data, sym, profile, phi, boundary) -> AnalysisReport:
        profiles = await self._regularity(phi, boundary)
        index = compactness_index(profiles)
        table = pd.DataFrame.from_records(
            [
                {"theta": ",".join(f"{t:.12g}" for t in p.theta), "k": ",".join(map(str, p.k)), "eta": float(p.eta)}
                for p in index.per_point
            ]
        )
        return self.report(
            **self._common(sym, profile, boundary),
            regularity=profiles,
            eta=str(index.eta),
            payload={"compactness_index": index.model_dump(mode="json")},
            table=self.records(table),
        )

    async def _omega(self, input_data, sym, profile, phi, boundary) -> AnalysisReport:
        seed = settings.seed if input_data.get("seed") is None else input_data["seed"]
        samples = input_data.get("samples") or 2**18
        points = boundary or [None]
        contacts = await self.run_step(
            "omega",
            "approx_numbers",
            lambda: [omega_estimate(phi, p, samples=samples, seed=seed) for p in points],
            summary=lambda cs: {"omega_hat": [c.omega_hat for c in cs]},
        )
        table = pd.DataFrame.from_records([c.model_dump(mode="json") for c in contacts])
        return self.report(
            **self._common(sym, profile, boundary),
            seed=seed,
            payload={"contact": [c.model_dump(mode="json") for c in contacts]},
            table=self.records(table),
        )

    async def _witness(self, input_data, sym, profile, phi, boundary) -> AnalysisReport:
        profiles = await self._regularity(phi, boundary)
        target = min(profiles, key=lambda p: eta(p)) if profile.dimension >= 2 else profiles[0]
        delta = float(input_data.get("delta") or 1e-3)
        nu = input_data.get("nu")
        witness = await self.run_step(
            "witness",
            "approx_numbers",
            lower_bound_witness,
            phi,
            target,
            delta,
            nu,
            summary=lambda w: {"points": len(w.Z), "residual_max": w.residual_max, "C1": w.C1, "C2": w.C2},
        )
        payload: Dict[str, Any] = {
            "witness": witness.model_dump(mode="json"),
            "passed": witness.passed(settings.witness_tol),
        }
        if input_data.get("fit_deltas"):
            fit = await self.run_step(
                "witness_fit",
                "approx_numbers",
                witness_exponent_fit,
                phi,
                target,
                [float(d) for d in input_data["fit_deltas"]],
                nu,
                summary=lambda f: {"exponent": f.exponent, "expected": f.expected},
            )
            payload["fit"] = fit.model_dump(mode="json")
        return self.report(
            **self._common(sym, profile, boundary),
            regularity=[target],
            payload=payload,
            table=self.records(witness_frame(witness)),
        )

    async def _probe(self, input_data, sym, profile, phi, boundary) -> AnalysisReport:
        result = await self.run_step(
            "probe",
            "approx_numbers",
            truncated_matrix_probe,
            sym,
            input_data.get("M"),
            input_data.get("D"),
            summary=lambda r: {"decay_exponent": r.decay_exponent, "warning": r.truncation_warning},
        )
        table = pd.DataFrame(
            {"n": range(1, len(result.singular_values) + 1), "singular_value": result.singular_values}
        )
        return self.report(
            **self._common(sym, profile, boundary),
            payload={"probe": result.model_dump(mode="json")},
            table=self.records(table),
        )

    async def _schatten(self, input_data: Dict[str, Any]) -> AnalysisReport:
        p, q = (parse_number(v, True) for v in input_data["schatten"])
        recipe = await self.run_step(
            "schatten",
            "approx_numbers",
            lambda: schatten_separator(p, q, build=bool(input_data.get("build"))),
            summary=lambda r: {"d": r.d, "k": r.k},
        )
        return self.report(
            eta=str(recipe.eta),
            payload={"schatten": recipe.model_dump(mode="json")},
            table=[{"d": recipe.d, "k": recipe.k, "eta": float(recipe.eta)}],
        )

    async def _length(self, input_data: Dict[str, Any]) -> AnalysisReport:
        omega = float(input_data["length"])
        fit = await self.run_step(
            "length", "approx_numbers", hyperbolic_length_fit, omega, summary=lambda f: {"slope": f.slope}
        )
        table = pd.DataFrame({"sigma": fit.sigmas, "length": fit.lengths})
        return self.report(payload={"length_fit": fit.model_dump(mode="json")}, table=self.records(table))

    async def _blaschke(self, input_data: Dict[str, Any]) -> AnalysisReport:
        n, omega = input_data["blaschke"]
        sigma = float(input_data.get("sigma") or 1e-3)
        C = float(input_data.get("C") or 2.0)
        bound = await self.run_step(
            "blaschke",
            "approx_numbers",
            blaschke_empirical,
            int(n),
            float(omega),
            sigma,
            C,
            summary=lambda b: {"log_product": b.log_product, "empirical_max": b.empirical_max},
        )
        return self.report(payload={"blaschke": bound.model_dump(mode="json")}, table=[bound.model_dump(mode="json")])

    async def _bounds(self, input_data: Dict[str, Any]) -> AnalysisReport:
        ns: Tuple[int, ...] = tuple(int(n) for n in input_data["bounds"])
        eta_value = parse_number(input_data.get("eta_value"), True)
        curves = [
            an_bounds(
                n,
                eta_value=eta_value,
                omega=input_data.get("omega_value"),
                kappa=input_data.get("kappa"),
                exponential_form=input_data.get("exponential_form") or "printed",
            )
            for n in ns
        ]
        rows = [c.model_dump(mode="json") for c in curves]
        return self.report(
            eta=str(eta_value) if eta_value is not None else None, payload={"bounds": rows}, table=rows
        )
