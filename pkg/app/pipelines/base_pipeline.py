"""
Base pipeline class for all subcommand implementations.
"""

import asyncio
import json
import threading
import uuid
from abc import ABC, abstractmethod
from datetime import datetime
from enum import Enum
from typing import Any, Callable, Dict, List, Optional, Tuple, TypeVar

import pandas as pd

import app
from app.config.settings import settings
from app.core.errors import AnalysisError, PreconditionError
from app.core.symbols import load_symbol
from app.models.pipeline import PipelineError, PipelineResponse, PipelineState, PipelineStep, PipelineType
from app.models.report import AnalysisReport
from app.models.symbol import DirichletSymbol
from app.utils.logger import get_logger
from app.utils.parallel import call_with_cancel

logger = get_logger(__name__)

T = TypeVar("T")


class PipelineStatus(str, Enum):
    """Pipeline execution status."""

    PENDING = "pending"
    RUNNING = "running"
    COMPLETED = "completed"
    FAILED = "failed"
    TIMEOUT = "timeout"


class BasePipeline(ABC):
    """Base class for all pipelines."""

    pipeline_type: PipelineType

    def __init__(self):
        self.pipeline_id = str(uuid.uuid4())
        self.state = PipelineState.IDLE
        self.status = PipelineStatus.PENDING
        self.steps: List[PipelineStep] = []
        self.start_time: Optional[datetime] = None
        self.end_time: Optional[datetime] = None
        self.result: Optional[AnalysisReport] = None
        self.error: Optional[PipelineError] = None
        self.metadata: Dict[str, Any] = {}
        self.cancel_event = threading.Event()

        logger.debug("Initialized pipeline", pipeline_id=self.pipeline_id, pipeline_type=self.pipeline_type)

    @abstractmethod
    async def execute(self, input_data: Dict[str, Any]) -> AnalysisReport:
        """
        Execute the pipeline's main logic.

        Args:
            input_data: Parsed command-line options

        Returns:
            Report of the run
        """

    def report(self, **fields: Any) -> AnalysisReport:
        """Report stamped with this pipeline's command and the tool version."""
        return AnalysisReport(version=app.__version__, command=self.pipeline_type.value, **fields)

    @staticmethod
    def read_symbol(input_data: Dict[str, Any]) -> DirichletSymbol:
        """Symbol from --symbol text or a --file path."""
        source = input_data.get("symbol") or input_data.get("file")
        if not source:
            raise PreconditionError("Provide --symbol or --file")
        return load_symbol(source)

    @staticmethod
    def records(frame: pd.DataFrame) -> List[Dict[str, Any]]:
        """JSON-ready rows; NaN becomes null."""
        return json.loads(frame.to_json(orient="records", double_precision=15))

    @staticmethod
    def eps_range(input_data: Dict[str, Any]) -> Tuple[float, float]:
        """(eps_max, eps_min) from the options, settings filling the gaps."""
        return (
            input_data.get("eps_max") or settings.eps_max,
            input_data.get("eps_min") or settings.eps_min,
        )

    def add_step(self, step_name: str, step_type: str, status: str = "in_progress") -> str:
        step = PipelineStep(step_name=step_name, step_type=step_type, start_time=datetime.utcnow(), status=status)
        self.steps.append(step)
        logger.debug("Added pipeline step", pipeline_id=self.pipeline_id, step_name=step_name, status=status)
        return step.step_name

    def update_step(
        self,
        step_name: str,
        status: str,
        output: Optional[Dict[str, Any]] = None,
        error: Optional[PipelineError] = None,
    ) -> bool:
        """
        Close a step and record its duration.

        Returns:
            True if the step exists
        """
        for step in self.steps:
            if step.step_name == step_name:
                step.status = status
                step.end_time = datetime.utcnow()
                step.duration_ms = (step.end_time - step.start_time).total_seconds() * 1000
                step.output = output
                step.error = error
                logger.debug("Updated pipeline step", pipeline_id=self.pipeline_id, step_name=step_name, status=status)
                return True
        return False

    async def run_step(
        self,
        step_name: str,
        step_type: str,
        fn: Callable[..., T],
        *args: Any,
        summary: Optional[Callable[[T], Dict[str, Any]]] = None,
    ) -> T:
        """
        Run CPU-bound work in a worker thread as a timed step.

        The thread sees this pipeline's cancel event, so parallel maps inside
        ``fn`` stop once the run times out.

        Args:
            step_name: Name of the step
            step_type: Module the work belongs to
            fn: Function to call
            summary: Builds the step output from the result

        Returns:
            Result of ``fn``
        """
        self.add_step(step_name, step_type)
        try:
            value = await asyncio.to_thread(call_with_cancel, self.cancel_event, fn, *args)
        except Exception as e:
            self.update_step(step_name, "error", error=self._error_model(e))
            raise
        self.update_step(step_name, "success", output=summary(value) if summary else None)
        return value

    @staticmethod
    def _error_model(exc: BaseException) -> PipelineError:
        if isinstance(exc, AnalysisError):
            return PipelineError(
                error_type=type(exc).__name__,
                error_message=exc.message,
                error_code=exc.error_code,
                exit_code=exc.exit_code,
                context=exc.context,
            )
        return PipelineError(
            error_type="execution_error",
            error_message=str(exc),
            error_code="PIPELINE_EXECUTION_ERROR",
            context={"exception_type": type(exc).__name__},
        )

    def set_error(self, error: PipelineError) -> None:
        self.error = error
        self.state = PipelineState.ERROR
        self.status = PipelineStatus.FAILED
        logger.error(
            "Pipeline error set",
            pipeline_id=self.pipeline_id,
            error_type=error.error_type,
            error_message=error.error_message,
        )

    def calculate_duration(self) -> Optional[float]:
        if self.start_time and self.end_time:
            return (self.end_time - self.start_time).total_seconds() * 1000
        return None

    def to_response(self) -> PipelineResponse:
        return PipelineResponse(
            pipeline_id=self.pipeline_id,
            pipeline_type=self.pipeline_type,
            state=self.state,
            steps=self.steps,
            total_duration_ms=self.calculate_duration(),
            result=self.result,
            error=self.error,
            metadata=self.metadata,
        )

    async def run_with_timeout(
        self, input_data: Dict[str, Any], timeout_seconds: Optional[int] = None
    ) -> PipelineResponse:
        """
        Run the pipeline with a timeout; failures become a structured error.

        Args:
            input_data: Parsed command-line options
            timeout_seconds: Timeout, default from settings

        Returns:
            Pipeline response
        """
        timeout_seconds = timeout_seconds or settings.pipeline_timeout_seconds
        self.start_time = datetime.utcnow()
        self.state = PipelineState.PROCESSING
        self.status = PipelineStatus.RUNNING
        logger.info("Starting pipeline execution", pipeline_id=self.pipeline_id, pipeline_type=self.pipeline_type)

        try:
            self.result = await asyncio.wait_for(self.execute(input_data), timeout=timeout_seconds)
            self.end_time = datetime.utcnow()
            self.state = PipelineState.COMPLETED
            self.status = PipelineStatus.COMPLETED
            logger.info(
                "Pipeline execution completed", pipeline_id=self.pipeline_id, duration_ms=self.calculate_duration()
            )

        except asyncio.TimeoutError:
            self.cancel_event.set()
            self.end_time = datetime.utcnow()
            self.set_error(
                PipelineError(
                    error_type="timeout_error",
                    error_message=f"Pipeline execution timed out after {timeout_seconds} seconds",
                    error_code="PIPELINE_TIMEOUT",
                )
            )
            self.state = PipelineState.TIMEOUT
            self.status = PipelineStatus.TIMEOUT

        except AnalysisError as e:
            self.end_time = datetime.utcnow()
            self.set_error(self._error_model(e))

        except Exception as e:
            self.end_time = datetime.utcnow()
            self.set_error(self._error_model(e))
            logger.error("Pipeline execution failed", pipeline_id=self.pipeline_id, error=str(e), exc_info=True)

        return self.to_response()

    def is_completed(self) -> bool:
        return self.status in (PipelineStatus.COMPLETED, PipelineStatus.FAILED, PipelineStatus.TIMEOUT)

    def is_successful(self) -> bool:
        return self.status == PipelineStatus.COMPLETED and self.error is None
