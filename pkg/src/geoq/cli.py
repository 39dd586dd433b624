"""Command-line interface for geoq."""
import argparse
import logging
import os
from pathlib import Path
import sys
from typing import Any, Tuple

from pydantic import ValidationError
import rich.console
from rich.default_styles import DEFAULT_STYLES
import rich.logging
from rich.style import Style
from rich.theme import Theme
from rich_argparse import ArgumentDefaultsRichHelpFormatter
import simplejson

from .const import OUTPUT_ENV_VAR
from .program import (
    EXIT_CHECK_FAILED,
    EXIT_CONFIG,
    PROGRAM_NAME,
    BadParameterError,
    Program,
    RunFailedError,
    WarningEncounteredError,
)
from .program_params import Commands, ProgramParams, ScenarioConfig, UIParams
from .scenarios import BUILTIN_SCENARIOS, ConfigFileError, load_scenario
from .version import __version__

logger = logging.getLogger(PROGRAM_NAME)
# noinspection PyUnresolvedReferences,PyProtectedMember
ArgumentGroup = argparse._ArgumentGroup

RICH_STYLES = DEFAULT_STYLES | {
    "logging.level.notset": Style(dim=True),
    "logging.level.debug": Style(color="blue", bold=True, dim=True),
    "logging.level.info": Style(color="cyan", bold=True),
    "logging.level.warning": Style(color="yellow", bold=True),
    "logging.level.error": Style(color="red", bold=True),
    "logging.level.critical": Style(color="red", bold=True, reverse=True),
}
RICH_THEME = Theme(
    RICH_STYLES,
    inherit=True,
)

COMMAND_HELP = {
    Commands.classical_scan: "Integrate the extended dynamics over an ℏ scan and fit deviation exponents.",
    Commands.quantum_spectrum: "Compute Landau-band spectra and compare them with the effective prediction.",
    Commands.checks: "Run the kinematic self-checks.",
    Commands.report: "Summarize every run found in the output directory.",
    Commands.schema: "Print the JSON schema of scenario configuration files.",
}
SCENARIO_COMMANDS = (Commands.classical_scan, Commands.quantum_spectrum, Commands.checks)
DEFAULT_JOBS = os.cpu_count() or 1
COMMAND_KINDS = {
    Commands.classical_scan: "classical",
    Commands.quantum_spectrum: "quantum",
    Commands.checks: "checks",
}


def _float_list(value: str) -> list[float]:
    try:
        return [float(x) for x in value.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers, got {value!r}") from None


def get_argument_parser() -> Tuple[argparse.ArgumentParser, dict[str, ArgumentGroup]]:
    """Get the argument parser."""
    common = argparse.ArgumentParser(add_help=False)
    groups = {}

    scenario_group = common.add_argument_group("Scenario")
    scenario_group.add_argument(
        "--scenario",
        dest="scenario_id",
        metavar="ID",
        choices=sorted(BUILTIN_SCENARIOS),
        help="A built-in scenario (the default depends on the command).",
    )
    scenario_group.add_argument(
        "--config", dest="config_path", metavar="PATH", type=Path, help="A JSON scenario configuration file."
    )
    scenario_group.add_argument(
        "--hbar", metavar="LIST", type=_float_list, help="Override the ℏ values, e.g. 0.1,0.05,0.02."
    )
    scenario_group.add_argument("--seed", metavar="INT", type=int, help="Override the random seed.")
    groups["scenario"] = scenario_group

    run_group = common.add_argument_group("Output")
    run_group.add_argument(
        "--out",
        "-o",
        dest="output_directory",
        metavar="DIR",
        type=Path,
        default=Path(os.environ.get(OUTPUT_ENV_VAR, "results")),
        help=f"Results directory (default from ${OUTPUT_ENV_VAR}).",
    )
    run_group.add_argument(
        "--jobs", "-j", metavar="INT", type=int, default=DEFAULT_JOBS, help="Worker processes for ℏ scans."
    )
    groups["run"] = run_group

    ui_group = common.add_argument_group("General")
    ui_group.add_argument(
        "--quiet",
        "-q",
        action="store_true",
        help="Hide progress lines and raise the log level to at least warning.",
    )
    ui_group.add_argument("--stop-on-warning", action="store_true", help="Stop the run if a warning is encountered.")
    log_levels = ["debug", "info", "warning", "error", "critical"]
    ui_group.add_argument("--log-level", default="info", choices=log_levels, help="Minimal log level to display.")
    ui_group.add_argument("--no-color", action="store_true", help="Disable color output.")
    ui_group.add_argument("--tracebacks", action="store_true", help="Show exception tracebacks.")
    groups["ui"] = ui_group

    common.add_argument("--dump-config", action="store_true", help="Print parsed configuration and exit.")

    parser = argparse.ArgumentParser(
        prog=PROGRAM_NAME,
        description="Guiding-center reduction and Landau-band spectra on phase space.",
        formatter_class=ArgumentDefaultsRichHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=__version__, help="display the version and exit.")
    subparsers = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)
    for command, help_text in COMMAND_HELP.items():
        subparsers.add_parser(
            command.value,
            parents=[common],
            help=help_text,
            description=help_text,
            formatter_class=ArgumentDefaultsRichHelpFormatter,
        )
    return parser, groups


def parse_command_line(args: list[str] | None = None) -> dict[str | None, dict[str, Any]]:
    """Parse the command line arguments."""
    parser, groups = get_argument_parser()
    parsed_args = vars(parser.parse_args(args))
    grouped_args: dict[str, dict[str, Any]] = {}
    remaining_args = parsed_args.copy()
    for key, g in groups.items():
        # noinspection PyProtectedMember
        for action in g._group_actions:
            grouped_args.setdefault(key, {})[action.dest] = parsed_args[action.dest]
            remaining_args.pop(action.dest)
    return grouped_args | {None: remaining_args}


def _scenario_from_args(command: Commands, scenario_args: dict[str, Any]) -> ScenarioConfig | None:
    if command not in SCENARIO_COMMANDS:
        return None
    overrides = {key: scenario_args[key] for key in ("hbar", "seed") if scenario_args[key] is not None}
    return load_scenario(
        scenario_id=scenario_args["scenario_id"],
        config_path=scenario_args["config_path"],
        overrides=overrides,
        kind=COMMAND_KINDS[command],
    )


def app(args=None):
    """Main entry point for the cli."""
    grouped_args: dict[str | None, dict[str, Any]] = parse_command_line(args)
    other_args = grouped_args.pop(None)
    scenario_args = grouped_args.pop("scenario")
    ui = UIParams.model_validate(grouped_args["ui"])
    console = rich.console.Console(theme=RICH_THEME, color_system=None if ui.no_color else "auto")
    handler = rich.logging.RichHandler(
        console=console,
        show_time=False,
        show_path=ui.tracebacks,
        markup=True,
        rich_tracebacks=False,
    )
    logging.basicConfig(level=ui.effective_log_level, format="%(message)s", handlers=[handler])
    command = Commands(other_args["command"])
    try:
        scenario = _scenario_from_args(command, scenario_args)
        params = ProgramParams.model_validate(grouped_args | {"command": command, "scenario": scenario})
    except (ValidationError, ConfigFileError) as e:
        logger.critical(f"Bad configuration: {e}", exc_info=ui.tracebacks)
        sys.exit(EXIT_CONFIG)
    if other_args["dump_config"]:
        print(simplejson.dumps(params.model_dump(mode="json"), indent=2))
        sys.exit(0)
    program = Program(params, print_callback=console.print)
    try:
        program.run()
    except RunFailedError as e:
        logger.critical(f"Run failed: {e.message}")
        sys.exit(e.exit_code)
    except WarningEncounteredError as e:
        logger.warning(str(e))
        logger.critical("Warning encountered. Stopping due to --stop-on-warning")
        sys.exit(EXIT_CHECK_FAILED)
    except BadParameterError as e:
        logger.critical(f"Bad parameter: {e}", exc_info=ui.tracebacks)
        sys.exit(EXIT_CONFIG)
    except Exception as e:
        logger.critical(f"Unexpected error: {type(e).__name__}: {e}", exc_info=ui.tracebacks)
        sys.exit(EXIT_CHECK_FAILED)


if __name__ == "__main__":
    app(["checks", "--out", "_temp/results"])
