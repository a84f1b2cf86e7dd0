"""
Data models for symbols, lifts, measures and reports.
"""

from .lift import BohrLift, BoundaryPoint, CompactnessVerdict, Verdict
from .pipeline import PipelineError, PipelineResponse, PipelineState, PipelineType
from .report import AnalysisReport
from .symbol import DirichletSymbol, GeneratingSet, SymbolProfile

__all__ = [
    "AnalysisReport",
    "BohrLift",
    "BoundaryPoint",
    "CompactnessVerdict",
    "DirichletSymbol",
    "GeneratingSet",
    "PipelineError",
    "PipelineResponse",
    "PipelineState",
    "PipelineType",
    "SymbolProfile",
    "Verdict",
]
