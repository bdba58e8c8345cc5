"""
Tests for the TimestampGenerator primitive
"""

from datetime import timezone

import pytest

from src.primitives.timestamp_generator import TimestampGenerator


class TestTimestampGenerator:
    def test_now_is_utc_iso(self):
        stamp = TimestampGenerator.now()
        assert stamp.endswith("Z")
        assert TimestampGenerator.parse(stamp).tzinfo == timezone.utc

    def test_parse_round_trip(self):
        parsed = TimestampGenerator.parse("2024-05-01T12:00:00.500000Z")
        assert (parsed.hour, parsed.microsecond) == (12, 500000)

    @pytest.mark.parametrize("bad", ["", "yesterday", "2024-05-01T12:00:00+02:00"])
    def test_parse_rejects(self, bad):
        with pytest.raises(ValueError, match="Invalid timestamp format"):
            TimestampGenerator.parse(bad)

    def test_seconds_between(self):
        start = "2024-05-01T12:00:00Z"
        end = "2024-05-01T12:01:30.250000Z"
        assert TimestampGenerator.seconds_between(start, end) == pytest.approx(90.25)
        assert TimestampGenerator.seconds_between(end, start) == pytest.approx(-90.25)
