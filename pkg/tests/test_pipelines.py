"""
Tests for pipeline implementations and the pipeline manager.
"""

import asyncio
import threading
import time
from typing import Any, Dict, List

import pytest

from app.core.errors import PreconditionError, RunCancelledError
from app.core.pipeline_manager import PipelineManager
from app.models.lift import Verdict
from app.models.pipeline import PipelineState, PipelineType
from app.models.report import AnalysisReport
from app.pipelines import AnalyzePipeline, BasePipeline, KeylemmaPipeline
from app.pipelines.keylemma_pipeline import parse_number
from app.utils.parallel import call_with_cancel, check_cancelled, ordered_map

PHI_1 = "9/2 - 2^-s - 3^-s - 2*6^-s"


class SlowPipeline(BasePipeline):
    """Sleeps past any short timeout."""

    pipeline_type = PipelineType.ANALYZE

    async def execute(self, input_data: Dict[str, Any]) -> AnalysisReport:
        await asyncio.sleep(5)
        return self.report()


class ChunkedPipeline(BasePipeline):
    """Runs one hundred 20 ms chunks in a worker thread."""

    pipeline_type = PipelineType.CARLESON

    def __init__(self):
        super().__init__()
        self.finished: List[int] = []

    def _chunk(self, i: int) -> int:
        time.sleep(0.02)
        self.finished.append(i)
        return i

    async def execute(self, input_data: Dict[str, Any]) -> AnalysisReport:
        await self.run_step("chunks", "carleson", ordered_map, self._chunk, range(100), 1)
        return self.report()


@pytest.fixture
def manager():
    """Fresh manager per test."""
    return PipelineManager()


class TestAnalyzePipeline:
    """Test cases for AnalyzePipeline."""

    @pytest.mark.asyncio
    async def test_mixed_example(self):
        """Test classification of a compact degree-two symbol."""
        response = await AnalyzePipeline().run_with_timeout({"symbol": PHI_1})

        assert response.is_successful()
        report = response.result
        assert report.command == "analyze"
        assert report.symbol == PHI_1
        assert report.verdict.verdict == Verdict.COMPACT
        assert report.verdict.rule == "Thm4-deg≤2"
        assert report.eta == "1/2"
        assert [s.step_name for s in response.steps] == ["classify", "regularity"]
        assert all(s.status == "success" for s in response.steps)

    @pytest.mark.asyncio
    async def test_class_violation(self):
        """Test that a symbol with negative real part maps to exit code 2."""
        response = await AnalyzePipeline().run_with_timeout({"symbol": "1/2 - 2^-s"})

        assert not response.is_successful()
        assert response.state == PipelineState.ERROR
        assert response.error.error_type == "ClassMembershipError"
        assert response.exit_code == 2
        assert response.steps[0].status == "error"

    @pytest.mark.asyncio
    async def test_missing_symbol(self):
        response = await AnalyzePipeline().run_with_timeout({})

        assert response.error.error_code == "PRECONDITION_VIOLATED"
        assert response.exit_code == 1

    @pytest.mark.asyncio
    async def test_timeout(self):
        response = await SlowPipeline().run_with_timeout({}, timeout_seconds=0.05)

        assert response.state == PipelineState.TIMEOUT
        assert response.error.error_code == "PIPELINE_TIMEOUT"


class TestKeylemmaPipeline:
    """Test cases for KeylemmaPipeline."""

    @pytest.mark.asyncio
    async def test_exact_point(self):
        response = await KeylemmaPipeline().run_with_timeout({"a1": "1/2", "a2": "1/4", "exact": True})

        assert response.is_successful()
        payload = response.result.payload
        assert payload["factorization"]["obstruction"]["index"] == [0, 4]
        assert payload["re_phi_minus_one_exact"] == "3/4"
        assert {row["name"] for row in response.result.table} >= {"re_v3", "im_v2", "imc2_from_re_v4"}

    @pytest.mark.asyncio
    async def test_sweep(self):
        response = await KeylemmaPipeline().run_with_timeout({"grid": 3})

        assert len(response.result.table) == 6
        assert response.result.payload["sweep"]["factorizing"] == []

    def test_parse_number(self):
        assert parse_number("1/3", True) == parse_number("2/6", True)
        assert parse_number("0.25", False) == 0.25
        assert parse_number(None, True) is None
        with pytest.raises(PreconditionError):
            parse_number("half", True)


class TestPipelineManager:
    """Test cases for PipelineManager."""

    @pytest.mark.asyncio
    async def test_execute(self, manager):
        response = await manager.execute(PipelineType.CONSTRUCT, {"separated": [2, 2], "grid": 128})

        assert response.is_successful()
        assert response.pipeline_type == PipelineType.CONSTRUCT
        assert response.result.symbol is not None

    @pytest.mark.asyncio
    async def test_failure_is_carried_in_response(self, manager):
        response = await manager.execute(PipelineType.ANALYZE, {"symbol": "1/2 - 2^-s"})

        assert not response.is_successful()
        assert response.exit_code == 2

    @pytest.mark.asyncio
    async def test_timeout_override(self, manager):
        """A short timeout stops the Carleson fit and reports PIPELINE_TIMEOUT."""
        response = await manager.execute(
            PipelineType.CARLESON, {"symbol": PHI_1, "samples": 10_000_000}, timeout_seconds=0.01
        )

        assert response.state == PipelineState.TIMEOUT
        assert response.error.error_code == "PIPELINE_TIMEOUT"


class TestCancellation:
    """Test cases for stopping worker threads after a timeout."""

    @pytest.mark.asyncio
    async def test_timeout_sets_cancel_event(self):
        pipeline = SlowPipeline()

        await pipeline.run_with_timeout({}, timeout_seconds=0.05)

        assert pipeline.cancel_event.is_set()

    @pytest.mark.asyncio
    async def test_worker_thread_stops_after_timeout(self):
        """The step thread gives up at the next item once the run has timed out."""
        pipeline = ChunkedPipeline()

        response = await pipeline.run_with_timeout({}, timeout_seconds=0.2)
        await asyncio.sleep(0.5)

        assert response.state == PipelineState.TIMEOUT
        assert pipeline.cancel_event.is_set()
        assert 0 < len(pipeline.finished) < 100
        settled = len(pipeline.finished)
        await asyncio.sleep(0.2)
        assert len(pipeline.finished) == settled

    def test_ordered_map_checks_event(self):
        event = threading.Event()
        seen = []

        def work(i: int) -> int:
            seen.append(i)
            if i == 2:
                event.set()
            return i

        with pytest.raises(RunCancelledError):
            call_with_cancel(event, ordered_map, work, range(10), 1)
        assert seen == [0, 1, 2]

    def test_ordered_map_without_event(self):
        assert ordered_map(lambda i: i * i, range(5), 2) == [0, 1, 4, 9, 16]

    def test_set_event_stops_before_first_call(self):
        event = threading.Event()
        event.set()

        with pytest.raises(RunCancelledError):
            call_with_cancel(event, check_cancelled)
