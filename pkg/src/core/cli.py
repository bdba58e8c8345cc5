"""
CLI Core

Command-line entry point `ldm-geomodel <command> [options]`.

Interface:
- build_parser() → argparse.ArgumentParser
- run_command(argv) → int exit status

Exit codes: 0 success, 2 usage error, 3 configuration error, 4 pipeline
error (message prefixed with the module code, e.g. "[FLOW-SOLVER]"),
1 anything unexpected.
"""

import argparse
import sys
from typing import Optional, Sequence

from src.core.pipeline_config import parse_config, resolve_workers
from src.core.pipeline_orchestrator import PipelineOrchestrator
from src.primitives.errors import ConfigError, GeomodelError

EXIT_OK, EXIT_UNEXPECTED, EXIT_USAGE, EXIT_CONFIG, EXIT_PIPELINE = 0, 1, 2, 3, 4

COMMANDS = {
    "gen-data": "generate the conditioned training dataset",
    "train-vae": "train the variational autoencoder",
    "train-ldm": "train the latent denoiser on the frozen autoencoder",
    "sample": "generate geomodels with the trained latent diffusion model",
    "metrics": "hard-data accuracy and two-point statistics of generated models",
    "interp": "SSIM stability along a latent interpolation",
    "simulate": "waterflood simulation and P10/P50/P90 rate bands",
    "hm": "twin-experiment history matching with ESMDA",
    "medoids": "k-means representative models of a geomodel set",
}


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", default=None, help="pipeline config JSON (defaults when omitted)")
    parser.add_argument("--workers", type=int, default=None, help="worker processes (overrides LDM_WORKERS)")


def _add_sampling(parser: argparse.ArgumentParser, count: int) -> None:
    parser.add_argument("--count", type=int, default=count, help="number of models to generate")
    parser.add_argument("--seed", type=int, default=None, help="sampling seed (default: stage seed)")
    parser.add_argument("--xi-source", choices=("normal", "encoder"), default=None, help="starting latent distribution")
    parser.add_argument("--sampler", choices=("ddim", "ddpm"), default="ddim")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ldm-geomodel",
        description="Latent diffusion geomodel parameterization and ESMDA history matching",
    )
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True
    parsers = {name: sub.add_parser(name, help=text, description=text) for name, text in COMMANDS.items()}
    for p in parsers.values():
        _add_common(p)

    _add_sampling(parsers["sample"], 200)
    _add_sampling(parsers["metrics"], 200)
    parsers["metrics"].add_argument("--flow", action="store_true", help="also compare flow statistics")
    parsers["interp"].add_argument("--seed", type=int, default=None)
    parsers["interp"].add_argument("--step", type=float, default=0.05, help="interpolation weight step in (0, 1)")
    parsers["simulate"].add_argument("--models", default=None, help="facies file (.ggds) to simulate")
    parsers["hm"].add_argument("--case", type=int, choices=(1, 2), default=None, help="1: latents, 2: latents + properties")
    parsers["medoids"].add_argument("--models", default=None, help="facies file (.ggds); default: sample first")
    parsers["medoids"].add_argument("--k", type=int, default=None, help="number of clusters")
    _add_sampling(parsers["medoids"], 200)
    return parser


def _options(args: argparse.Namespace) -> dict:
    skip = {"command", "config", "workers"}
    return {key: value for key, value in vars(args).items() if key not in skip}


def run_command(argv: Optional[Sequence[str]] = None) -> int:
    """
    Parse argv, run the command and map failures to exit codes.

    Returns:
        Exit status (see module docstring)
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_USAGE

    try:
        config = parse_config(args.config)
        workers = resolve_workers(config, args.workers)
        result = PipelineOrchestrator(config, workers).run(args.command, _options(args))
    except ConfigError as e:
        print(f"configuration error: {e}", file=sys.stderr)
        for line in e.errors:
            print(f"  {line}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as e:
        print(f"[IO] {e}", file=sys.stderr)
        return EXIT_PIPELINE
    except GeomodelError as e:
        print(str(e), file=sys.stderr)
        return EXIT_PIPELINE
    except Exception as e:
        print(f"unexpected error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_UNEXPECTED

    print(f"{args.command}: wrote {len(result.outputs)} outputs to {result.run_dir}")
    return EXIT_OK


def main() -> None:
    sys.exit(run_command())
