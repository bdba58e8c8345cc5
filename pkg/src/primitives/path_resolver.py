"""PathResolver Primitive

Resolve the project root and per-run output directories.
"""

from pathlib import Path


class PathResolver:
    """Resolve project root and create run directory structures"""

    RUNS_DIRNAME = "runs"

    def get_project_root(self, start_path: Path) -> Path:
        """Detect project root by looking for markers (.git, pyproject.toml)

        Args:
            start_path: Directory to start searching from

        Returns:
            Path: Project root directory, or start_path if no markers found
        """
        current = start_path.resolve()
        markers = [".git", "pyproject.toml"]

        while True:
            for marker in markers:
                if (current / marker).exists():
                    return current

            parent = current.parent
            if parent == current:
                return start_path

            current = parent

    def run_dir_name(self, command: str, manifest_hash: str) -> str:
        """Directory name for a run: <command>-<first 12 hex digits of the hash>"""
        return f"{command}-{manifest_hash[:12]}"

    def create_run_dir(self, output_dir: Path, command: str, manifest_hash: str) -> Path:
        """Create (or reuse) the run directory for a command and manifest hash

        Pattern: <output_dir>/runs/<command>-<hash12>/

        The same config, seeds and code version always map to the same
        directory, so a rerun overwrites identical artifacts in place.

        Args:
            output_dir: Root of all pipeline outputs
            command: CLI subcommand name
            manifest_hash: Hex digest identifying the run

        Returns:
            Path: Run directory
        """
        run_dir = Path(output_dir) / self.RUNS_DIRNAME / self.run_dir_name(command, manifest_hash)
        run_dir.mkdir(parents=True, exist_ok=True)
        return run_dir

    def create_stage_dir(self, run_dir: Path, stage: str) -> Path:
        """Create a stage subdirectory inside a run directory

        Pattern: <run>/<stage>/
        """
        stage_dir = Path(run_dir) / stage
        stage_dir.mkdir(parents=True, exist_ok=True)
        return stage_dir
