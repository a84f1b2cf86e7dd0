"""
Pipelines behind the CLI subcommands.
"""

from .analyze_pipeline import AnalyzePipeline
from .approx_pipeline import ApproxPipeline
from .base_pipeline import BasePipeline, PipelineStatus
from .carleson_pipeline import CarlesonPipeline
from .construct_pipeline import ConstructPipeline
from .keylemma_pipeline import KeylemmaPipeline

__all__ = [
    "AnalyzePipeline",
    "ApproxPipeline",
    "BasePipeline",
    "CarlesonPipeline",
    "ConstructPipeline",
    "KeylemmaPipeline",
    "PipelineStatus",
]
