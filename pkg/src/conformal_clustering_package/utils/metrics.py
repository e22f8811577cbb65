"""
Performance metrics collection for conformal clustering runs.

Uses Singleton pattern for global metrics tracking.
"""

import time
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Any, Dict, Optional


@dataclass
class StageMetrics:
    """Metrics for a single stage, accumulated over repeated executions."""
    stage_name: str
    calls: int = 0
    failures: int = 0
    total_duration: float = 0.0
    items_processed: int = 0
    context: Dict[str, Any] = field(default_factory=dict)

    def record(self, duration: float, success: bool = True, items: int = 0):
        self.calls += 1
        self.total_duration += duration
        self.items_processed += items
        if not success:
            self.failures += 1


class MetricsCollector:
    """
    Metrics collector (Singleton pattern).

    Tracks stage timings and fit/failure counters across a run.
    """

    _instance: Optional["MetricsCollector"] = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
            cls._instance._initialized = False
        return cls._instance

    def __init__(self):
        if self._initialized:
            return
        self.reset()
        self._initialized = True

    def reset(self):
        """Reset all metrics for a new run."""
        self.run_id: Optional[str] = None
        self.start_time: float = time.time()
        self.end_time: Optional[float] = None
        self.stages: Dict[str, StageMetrics] = {}
        self.counters: Dict[str, int] = defaultdict(int)
        self._open: Dict[str, float] = {}

    def set_run_id(self, run_id: str):
        self.run_id = run_id

    def start_stage(self, stage_name: str, context: Optional[Dict[str, Any]] = None) -> StageMetrics:
        """Start timing a stage."""
        metrics = self.stages.setdefault(stage_name, StageMetrics(stage_name=stage_name))
        if context:
            metrics.context.update(context)
        self._open[stage_name] = time.perf_counter()
        return metrics

    def end_stage(self, stage_name: str, success: bool = True, items_processed: int = 0):
        """Stop timing a stage started with start_stage."""
        started = self._open.pop(stage_name, None)
        if started is None:
            return
        self.stages[stage_name].record(time.perf_counter() - started, success, items_processed)
        if not success:
            self.counters["failures"] += 1

    def increment(self, counter: str, amount: int = 1):
        self.counters[counter] += amount

    def snapshot(self) -> Dict[str, Any]:
        """Picklable copy of the stage totals and counters."""
        return {
            "stages": {
                name: {
                    "calls": m.calls,
                    "failures": m.failures,
                    "total_duration": m.total_duration,
                    "items_processed": m.items_processed,
                }
                for name, m in self.stages.items()
            },
            "counters": dict(self.counters),
        }

    def merge(self, snapshot: Dict[str, Any]):
        """Add the totals of a snapshot taken in another process."""
        for name, totals in snapshot.get("stages", {}).items():
            metrics = self.stages.setdefault(name, StageMetrics(stage_name=name))
            metrics.calls += totals["calls"]
            metrics.failures += totals["failures"]
            metrics.total_duration += totals["total_duration"]
            metrics.items_processed += totals["items_processed"]
        for counter, amount in snapshot.get("counters", {}).items():
            self.counters[counter] += amount

    def complete_run(self):
        self.end_time = time.time()

    def get_summary(self) -> Dict[str, Any]:
        """Get summary of all metrics."""
        total_duration = (self.end_time or time.time()) - self.start_time
        return {
            "run_id": self.run_id,
            "total_duration": total_duration,
            "counters": dict(self.counters),
            "stages": {
                name: {
                    "calls": m.calls,
                    "failures": m.failures,
                    "total_duration": m.total_duration,
                    "mean_duration": m.total_duration / m.calls if m.calls else 0.0,
                    "items_processed": m.items_processed,
                }
                for name, m in self.stages.items()
            },
        }


def get_metrics_collector() -> MetricsCollector:
    """Get the global metrics collector instance."""
    return MetricsCollector()
