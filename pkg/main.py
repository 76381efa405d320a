"""
Main entry point for qlft-synth.

Subcommands:
1. check: realizability and measurement checks on a plant file
2. transform: observable/unobservable reordering, augmented and reduced systems
3. synthesize: rank-constrained LMI synthesis of (L, K)
4. certify: verdict for fixed gains
5. simulate: moment simulation, envelope check, optional Monte Carlo oracle
6. reproduce-example: all of the above on the bundled example
"""
import asyncio
import argparse
from pathlib import Path
from typing import Any, Dict, List, Optional

import yaml
from pydantic import ValidationError

from config.settings import settings
from src.agents.orchestrator import EXIT_USAGE, OrchestratorAgent
from src.models.run import RunConfig
from src.utils.errors import ConfigError
from src.utils.logger import log, setup_logger

ROOT = Path(__file__).resolve().parent
COMMANDS = ["check", "transform", "synthesize", "certify", "simulate", "reproduce-example"]


def _resolve(value: Optional[str], base: Path) -> Optional[Path]:
    if value is None or str(value).lower() == "none":
        return None
    path = Path(value)
    return path if path.is_absolute() else base / path


def load_pipeline_defaults(config_path: Optional[str]) -> Dict[str, Any]:
    """
    Read the pipeline YAML; relative file references resolve against the repository root.

    Args:
        config_path: Pipeline YAML path (defaults to settings.pipeline_config)

    Returns:
        Dict of run defaults
    """
    path = _resolve(config_path or settings.pipeline_config, ROOT if config_path is None else Path.cwd())
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = yaml.safe_load(f) or {}
    except (OSError, yaml.YAMLError) as e:
        raise ConfigError(f"cannot load pipeline config {path}: {e}") from e
    for key in ("plant", "fault", "gains"):
        if key in data:
            data[key] = _resolve(data[key], ROOT)
    return data


def build_config(args: argparse.Namespace) -> RunConfig:
    """Merge pipeline defaults with the command-line flags."""
    data = load_pipeline_defaults(args.config)
    data["command"] = args.command
    data.setdefault("output_dir", settings.output_dir)
    for key in ("plant", "fault", "gains"):
        value = getattr(args, key)
        if value is not None:
            data[key] = _resolve(value, Path.cwd())
    if args.gamma is not None:
        data["gamma"] = args.gamma
    if args.seed is not None:
        data["seed"] = args.seed
    if args.out is not None:
        data["output_dir"] = args.out
    if args.override_condition_ii is not None:
        data["override_condition_ii"] = args.override_condition_ii

    simulation = data.setdefault("simulation", {}) or {}
    data["simulation"] = simulation
    if args.horizon is not None:
        simulation["horizon"] = args.horizon
    if args.dt is not None:
        simulation["dt"] = args.dt

    monte_carlo = data.setdefault("monte_carlo", {}) or {}
    data["monte_carlo"] = monte_carlo
    if args.monte_carlo:
        monte_carlo["enabled"] = True
    if args.trials is not None:
        monte_carlo["trials"] = args.trials

    synthesis = data.setdefault("synthesis", {}) or {}
    data["synthesis"] = synthesis
    if args.bisect:
        synthesis["bisect"] = True

    if data.get("plant") is None:
        raise ConfigError("no plant file given (--plant)")
    try:
        return RunConfig(**data)
    except ValidationError as e:
        raise ConfigError(f"invalid run configuration: {e.errors()[0]['msg']}") from e


async def main(config: RunConfig, log_level: str = "INFO") -> int:
    """
    Main async function to run one command.

    Args:
        config: Merged run configuration
        log_level: Logging level (DEBUG, INFO, WARNING, ERROR)
    """
    setup_logger(log_level=log_level, log_file=settings.log_file)
    log.info(f"Starting qlft-synth: {config.command} on {config.plant}")

    orchestrator = OrchestratorAgent(config)
    try:
        return await orchestrator.run()
    except KeyboardInterrupt:
        log.warning("Interrupted by user")
        return 130


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="qlft-synth - Estimator-based fault-tolerant control for linear quantum stochastic systems"
    )
    parser.add_argument("command", choices=COMMANDS, help="Pipeline command")
    parser.add_argument("--plant", help="Plant JSON file")
    parser.add_argument("--gamma", type=float, help="Bound on Tr(Y2)")
    parser.add_argument("--seed", type=int, help="Master seed for restarts and Monte Carlo")
    parser.add_argument("--out", help="Output directory")
    parser.add_argument("--gains", help="Gains YAML (L, K); 'none' disables the configured default")
    parser.add_argument("--fault", help="Fault YAML; 'none' means f = 0")
    parser.add_argument(
        "--override-condition-ii",
        action=argparse.BooleanOptionalAction,
        default=None,
        help="Admit plants that fail only realizability condition (ii)",
    )
    parser.add_argument("--bisect", action="store_true", help="Search gamma when the request is infeasible")
    parser.add_argument("--monte-carlo", action="store_true", help="Run the Monte Carlo oracle after simulating")
    parser.add_argument("--trials", type=int, help="Monte Carlo trials")
    parser.add_argument("--horizon", type=float, help="Simulation horizon")
    parser.add_argument("--dt", type=float, help="Simulation step")
    parser.add_argument("--config", help="Pipeline YAML (default: config/pipeline.yaml)")
    parser.add_argument(
        "--log-level",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        default=settings.log_level,
        help=f"Logging level (default: {settings.log_level})",
    )
    return parser


def cli(argv: Optional[List[str]] = None) -> int:
    """Command-line interface."""
    args = build_parser().parse_args(argv)
    setup_logger(log_level=args.log_level, log_file=settings.log_file)
    try:
        config = build_config(args)
    except ConfigError as e:
        log.error(f"Input error: {e}")
        return EXIT_USAGE

    return asyncio.run(main(config, log_level=args.log_level))


if __name__ == "__main__":
    exit(cli())
