"""Pipeline stage dependencies, execution order and cascading failure handling"""

from typing import Iterable, Optional

PENDING, DONE, FAILED, CANCELLED, SUPPLIED = "pending", "done", "failed", "cancelled", "supplied"

PIPELINE_STAGES: dict[str, tuple[str, ...]] = {
    "gen-data": (),
    "train-vae": ("gen-data",),
    "train-ldm": ("gen-data", "train-vae"),
    "sample": ("train-ldm",),
    "metrics": ("gen-data", "train-ldm"),
    "interp": ("train-ldm",),
    "simulate": (),
    "hm": ("train-ldm",),
    "medoids": ("sample",),
}


class StageDependencyGraph:
    """Tracks which stages a command needs and propagates failures to dependents"""

    def __init__(self, stages: Optional[dict[str, Iterable[str]]] = None):
        self._dependencies: dict[str, tuple[str, ...]] = {}
        self._statuses: dict[str, str] = {}
        self._reasons: dict[str, str] = {}
        self._cancelled_due_to_dependency: set[str] = set()
        for name, deps in (PIPELINE_STAGES if stages is None else stages).items():
            self.add_stage(name, deps)

    def add_stage(self, name: str, dependencies: Iterable[str]) -> None:
        """Add a stage with its dependencies"""
        self._dependencies[name] = tuple(dependencies)
        self._statuses[name] = PENDING

    def dependencies(self, name: str) -> tuple[str, ...]:
        if name not in self._dependencies:
            raise KeyError(f"unknown stage {name!r}")
        return self._dependencies[name]

    def mark_supplied(self, name: str) -> None:
        """The stage's artifact already exists, so neither it nor its inputs run"""
        self._statuses[name] = SUPPLIED

    def mark_done(self, name: str) -> None:
        self._statuses[name] = DONE

    def mark_failed(self, name: str, reason: Optional[str] = None) -> None:
        """Mark a stage failed and cancel everything downstream of it"""
        self._statuses[name] = FAILED
        if reason:
            self._reasons[name] = reason
        frontier = [name]
        while frontier:
            failed = frontier.pop()
            for stage, deps in self._dependencies.items():
                if failed in deps and self._statuses[stage] == PENDING:
                    self._statuses[stage] = CANCELLED
                    self._cancelled_due_to_dependency.add(stage)
                    frontier.append(stage)

    def get_status(self, name: str) -> str:
        return self._statuses.get(name, "unknown")

    def failure_reason(self, name: str) -> Optional[str]:
        return self._reasons.get(name)

    def was_cancelled_due_to_dependency(self, name: str) -> bool:
        return name in self._cancelled_due_to_dependency

    def execution_order(self, target: str) -> list[str]:
        """
        Stages to run for a target, dependencies first.

        Supplied stages are skipped together with the inputs only they needed.

        Raises:
            KeyError: On an unknown stage
            ValueError: On a dependency cycle
        """
        order: list[str] = []
        visiting: set[str] = set()

        def visit(stage: str) -> None:
            if stage in order or self._statuses.get(stage) == SUPPLIED:
                return
            if stage in visiting:
                raise ValueError(f"dependency cycle through {stage!r}")
            visiting.add(stage)
            for dep in self.dependencies(stage):
                visit(dep)
            visiting.discard(stage)
            order.append(stage)

        visit(target)
        return order

    def summary(self) -> dict[str, str]:
        return dict(self._statuses)
