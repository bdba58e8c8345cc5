"""TimestampGenerator Primitive

UTC ISO 8601 timestamps for run manifests and stage records.
"""

from datetime import datetime, timezone


class TimestampGenerator:
    """Generate, parse and difference ISO 8601 UTC timestamps"""

    @staticmethod
    def now() -> str:
        """Current UTC time as YYYY-MM-DDTHH:MM:SS.ffffffZ"""
        return datetime.now(timezone.utc).isoformat().replace("+00:00", "Z")

    @staticmethod
    def parse(timestamp: str) -> datetime:
        """Parse a timestamp written by now()

        Raises:
            ValueError: If the string is empty, malformed or not UTC
        """
        if not timestamp:
            raise ValueError("Invalid timestamp format: empty string")
        try:
            parsed = datetime.fromisoformat(timestamp.replace("Z", "+00:00"))
        except ValueError as e:
            raise ValueError(f"Invalid timestamp format: {e}") from e
        if parsed.tzinfo != timezone.utc:
            raise ValueError("Invalid timestamp format: timezone is not UTC")
        return parsed

    @classmethod
    def seconds_between(cls, start: str, end: str) -> float:
        """Elapsed seconds from start to end (negative if end is earlier)"""
        return (cls.parse(end) - cls.parse(start)).total_seconds()
