"""
Pipeline-related data models: run states, timed steps, structured errors.
"""

from datetime import datetime
from enum import Enum
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field

from app.models.report import AnalysisReport


class PipelineState(str, Enum):
    """Enumeration of possible pipeline states."""

    IDLE = "idle"
    PROCESSING = "processing"
    COMPLETED = "completed"
    ERROR = "error"
    TIMEOUT = "timeout"


class PipelineType(str, Enum):
    """One pipeline per CLI subcommand."""

    ANALYZE = "analyze"
    CARLESON = "carleson"
    KEYLEMMA = "keylemma"
    CONSTRUCT = "construct"
    APPROX = "approx"


class PipelineError(BaseModel):
    """Model for pipeline errors."""

    model_config = ConfigDict(
        json_schema_extra={
            "example": {
                "error_type": "ClassMembershipError",
                "error_message": "Symbol is outside the admissible class",
                "error_code": "CLASS_MEMBERSHIP",
                "exit_code": 2,
                "timestamp": "2024-01-15T10:30:00Z",
                "context": {"min_re": -0.5},
            }
        }
    )

    error_type: str = Field(..., description="Type of error")
    error_message: str = Field(..., description="Detailed error message")
    error_code: Optional[str] = Field(None, description="Error code")
    exit_code: int = Field(1, description="CLI exit code for this error")
    timestamp: datetime = Field(default_factory=datetime.utcnow, description="Error timestamp")
    context: Dict[str, Any] = Field(default_factory=dict, description="Error context")


class PipelineStep(BaseModel):
    """Model for individual pipeline steps."""

    model_config = ConfigDict(
        json_schema_extra={
            "example": {
                "step_name": "classify",
                "step_type": "symbol_core",
                "start_time": "2024-01-15T10:30:00Z",
                "end_time": "2024-01-15T10:30:01Z",
                "duration_ms": 812.0,
                "status": "success",
                "output": {"verdict": "Compact", "rule": "Thm4-deg≤2"},
            }
        }
    )

    step_name: str = Field(..., description="Name of the processing step")
    step_type: str = Field(..., description="Module the step belongs to")
    start_time: datetime = Field(..., description="Step start time")
    end_time: Optional[datetime] = Field(None, description="Step end time")
    duration_ms: Optional[float] = Field(None, description="Step duration in milliseconds")
    status: str = Field(..., description="Step status (success, error, in_progress)")
    output: Optional[Dict[str, Any]] = Field(None, description="Short step summary")
    error: Optional[PipelineError] = Field(None, description="Step error if any")


class PipelineResponse(BaseModel):
    """Model for pipeline responses."""

    pipeline_id: str = Field(..., description="Unique pipeline identifier")
    pipeline_type: PipelineType = Field(..., description="Type of pipeline")
    state: PipelineState = Field(..., description="Current pipeline state")

    steps: List[PipelineStep] = Field(default_factory=list, description="Processing steps")
    total_duration_ms: Optional[float] = Field(None, description="Total processing time")

    result: Optional[AnalysisReport] = Field(None, description="Report of a successful run")
    error: Optional[PipelineError] = Field(None, description="Pipeline error if any")

    created_at: datetime = Field(default_factory=datetime.utcnow, description="Creation timestamp")
    metadata: Dict[str, Any] = Field(default_factory=dict, description="Additional metadata")

    def is_successful(self) -> bool:
        return self.state == PipelineState.COMPLETED and self.error is None

    @property
    def exit_code(self) -> int:
        return 0 if self.error is None else self.error.exit_code
