"""
Tests for stage timing
"""

import pytest

from src.core.performance_tracker import PerformanceTracker


class TestPerformanceTracker:
    def test_records_duration(self):
        tracker = PerformanceTracker()
        with tracker.track("sample"):
            pass
        metrics = tracker.get_metrics()
        assert metrics["sample"]["ok"] is True
        assert metrics["sample"]["duration_s"] >= 0.0
        assert tracker.total_seconds() == pytest.approx(metrics["sample"]["duration_s"])

    def test_failure_still_recorded(self):
        tracker = PerformanceTracker()
        with pytest.raises(RuntimeError):
            with tracker.track("hm"):
                raise RuntimeError("boom")
        assert tracker.get_metrics()["hm"]["ok"] is False

    def test_slow_stage_warns(self, mocker):
        logger = mocker.Mock()
        tracker = PerformanceTracker(slow_threshold_s=-1.0, logger=logger)
        with tracker.track("train-vae"):
            pass
        logger.warning.assert_called_once()
        assert tracker.get_slow_operations()[0]["name"] == "train-vae"
