"""
Pipeline manager for running subcommand pipelines.
"""

from typing import Any, Dict, Optional, Type

from app.models.pipeline import PipelineResponse, PipelineType
from app.pipelines import (
    AnalyzePipeline,
    ApproxPipeline,
    BasePipeline,
    CarlesonPipeline,
    ConstructPipeline,
    KeylemmaPipeline,
)
from app.utils.logger import get_logger

logger = get_logger(__name__)

PIPELINES: Dict[PipelineType, Type[BasePipeline]] = {
    PipelineType.ANALYZE: AnalyzePipeline,
    PipelineType.CARLESON: CarlesonPipeline,
    PipelineType.KEYLEMMA: KeylemmaPipeline,
    PipelineType.CONSTRUCT: ConstructPipeline,
    PipelineType.APPROX: ApproxPipeline,
}


class PipelineManager:
    """Builds and runs the pipeline for a subcommand."""

    async def execute(
        self, pipeline_type: PipelineType, input_data: Dict[str, Any], timeout_seconds: Optional[int] = None
    ) -> PipelineResponse:
        """
        Run one pipeline to completion.

        Args:
            pipeline_type: Which pipeline to run
            input_data: Parsed command-line options
            timeout_seconds: Optional override of the configured timeout

        Returns:
            Pipeline response; failures are carried in its error field
        """
        pipeline = PIPELINES[PipelineType(pipeline_type)]()
        response = await pipeline.run_with_timeout(input_data, timeout_seconds)
        logger.info(
            "Pipeline run finished",
            pipeline_id=pipeline.pipeline_id,
            pipeline_type=response.pipeline_type.value,
            success=response.is_successful(),
        )
        return response


# Global pipeline manager instance
pipeline_manager = PipelineManager()
