import argparse
import logging
import os
import sys
from typing import List, Optional

from flows.experiment_steps import EXIT_CONFIG, EXIT_FAILURE, STEPS
from utils.config import RunConfig, load_config, load_run_config
from utils.errors import ConfigError

# Disable CrewAI telemetry before the Flow module is imported
os.environ['OTEL_SDK_DISABLED'] = 'true'
os.environ['DO_NOT_TRACK'] = '1'

# Suppress CrewAI telemetry logging
logging.getLogger('crewai.telemetry.telemetry').setLevel(logging.CRITICAL)

logger = logging.getLogger(__name__)

COMMANDS = list(STEPS) + ["reproduce"]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ptsim",
        description="Simulate a PT-symmetric qubit through its unitary dilation.",
    )
    parser.add_argument("command", choices=COMMANDS, help="Pipeline step to run")
    parser.add_argument("--config", required=True, help="Path to the JSON run document")
    parser.add_argument("--out", default=None, help="Output directory (overrides the document)")
    parser.add_argument("--seed", type=int, default=None, help="Master seed (overrides the document)")
    parser.add_argument("--verbose", action="store_true", help="Log at DEBUG level")
    return parser


def configure_logging(verbose: bool) -> None:
    level_name = "INFO"
    try:
        level_name = load_config().get("logging", {}).get("level", "INFO")
    except (OSError, ValueError):
        pass
    level = logging.DEBUG if verbose else getattr(logging, str(level_name).upper(), logging.INFO)
    logging.basicConfig(
        level=level,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
    )


def execute(command: str, cfg: RunConfig) -> int:
    """
    Run one CLI command against a validated configuration.

    Returns:
        int: 0 on success, 1 on verification or simulation failure,
        2 on configuration or IO failure
    """
    if command == "reproduce":
        from flows.experiment_flow import ExperimentFlow

        logger.info("🚀 Starting Experiment Flow...")
        flow = ExperimentFlow(cfg, verbose=True)
        result = flow.kickoff()
        if not isinstance(result, dict):
            logger.error("❌ Flow returned no result")
            return EXIT_FAILURE

        if 'metrics' in result:
            logger.info("\n📊 Flow Execution Metrics:")
            for step, duration in result['metrics'].items():
                logger.info(f"  - {step}: {duration:.2f}s")
            logger.info(f"  - Total: {result.get('execution_time', 0):.2f}s")
        return int(result.get("exit_code", EXIT_FAILURE))

    if command not in STEPS:
        logger.error(f"❌ Unknown command: {command}")
        return EXIT_CONFIG

    logger.info("=" * 70)
    logger.info(f"STEP: {command}")
    logger.info("=" * 70)
    result = STEPS[command](cfg)
    logger.info(f"{command} {result['status']} in {result.get('duration', 0.0):.2f}s")
    return int(result["exit_code"])


def main(argv: Optional[List[str]] = None) -> int:
    """
    Main execution function - Entry point for the ``ptsim`` command line.

    1. Parse arguments and configure logging
    2. Load and validate the run document
    3. Run the requested command and map its outcome to an exit code
    """
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose)

    try:
        cfg = load_run_config(args.config).with_overrides(output_dir=args.out, seed=args.seed)
    except ConfigError as e:
        logger.error(f"❌ Invalid configuration: {e}")
        return EXIT_CONFIG
    except OSError as e:
        logger.error(f"❌ Could not read configuration {args.config}: {e}")
        return EXIT_CONFIG

    try:
        logger.info("=" * 70)
        logger.info("PT-symmetric dilation simulator")
        logger.info("=" * 70)
        code = execute(args.command, cfg)
    except Exception as e:
        logger.error(f"\n❌ ERROR: {args.command} failed: {e}")
        import traceback
        traceback.print_exc()
        return EXIT_FAILURE

    if code == 0:
        logger.info(f"SUCCESS: outputs written to '{cfg.output_dir}'")
    return code


if __name__ == "__main__":
    sys.exit(main())
