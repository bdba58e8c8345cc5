"""Wall-clock timing of pipeline stages"""

import time
from contextlib import contextmanager
from typing import Optional

from src.primitives.logger import Logger


class PerformanceTracker:
    """Records how long each stage took and flags the slow ones"""

    def __init__(self, slow_threshold_s: float = 600.0, logger: Optional[Logger] = None):
        self.slow_threshold_s = slow_threshold_s
        self.logger = logger
        self._metrics: dict[str, dict] = {}

    @contextmanager
    def track(self, name: str):
        """Time the enclosed block; the record is kept even if it raises"""
        start = time.perf_counter()
        ok = False
        try:
            yield
            ok = True
        finally:
            duration = time.perf_counter() - start
            self._metrics[name] = {"duration_s": duration, "ok": ok}
            if self.logger and duration > self.slow_threshold_s:
                self.logger.warning("Slow stage", {"stage": name, "duration_s": duration})

    def get_metrics(self) -> dict:
        return {name: dict(m) for name, m in self._metrics.items()}

    def get_slow_operations(self) -> list[dict]:
        return [
            {"name": name, "duration_s": m["duration_s"]}
            for name, m in self._metrics.items()
            if m["duration_s"] > self.slow_threshold_s
        ]

    def total_seconds(self) -> float:
        return sum(m["duration_s"] for m in self._metrics.values())
