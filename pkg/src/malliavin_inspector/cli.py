import argparse
import csv
import io
import json
import logging
import sys
import time
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from .config import ExperimentConfig, build_config
from .constants import (
    CHECKMARK,
    CROSS,
    EXIT_ASSERTION,
    EXIT_OK,
    EXIT_USAGE,
    FORMAT_CHECKLIST,
    FORMAT_CSV,
    FORMAT_JSON,
    GREEN,
    ORANGE,
    OUTPUT_FORMATS,
    RED,
    RESET,
    SEVERITY_CRITICAL,
    STATISTICS,
    SUITES,
    WARNING,
)
from .suites import SUITE_CLASSES
from .utils import version_string

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def _json_default(value: Any) -> Any:
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    return str(value)


def _csv_cell(value: Any) -> Any:
    if isinstance(value, (dict, list, tuple)):
        return json.dumps(value, default=_json_default)
    return value


class MalliavinInspector:
    """Runs acceptance suites and formats their results.

    Results can be rendered as a checklist, JSON or CSV; every rendering carries the
    metadata block (version, seed, workers, wall time, command).

    Attributes:
        config: The validated experiment configuration
    """

    def __init__(self, config: ExperimentConfig):
        self.config = config
        self.wall_time: Optional[float] = None

    def metadata(self) -> Dict[str, Any]:
        return {
            "version": version_string(),
            "command": self.config.command,
            "seed": self.config.seed,
            "workers": self.config.workers,
            "wall_time": self.wall_time,
        }

    def format_checklist(self, suite_results: Dict[str, Dict]) -> str:
        """Format suite results as a checklist with colored checkmarks/crosses."""
        output = ""
        for code, result in suite_results.items():
            if result["passed"]:
                emoji = CHECKMARK
                color = GREEN
            else:
                emoji = WARNING
                color = ORANGE
                if result["severity"] == SEVERITY_CRITICAL:
                    emoji = CROSS
                    color = RED

            output += f"[{color}{emoji}{RESET}] [{code}] {result['description']}\n"
            for name, passed in result.get("checks", {}).items():
                mark = f"{GREEN}{CHECKMARK}{RESET}" if passed else f"{RED}{CROSS}{RESET}"
                output += f"    [{mark}] {name}\n"
            if not result["passed"]:
                output += f"    - Got: {result.get('value', 'not found')}\n"
                output += f"    - Suggestion: {result['recommendation']}\n"
        meta = self.metadata()
        output += f"version {meta['version']}, seed {meta['seed']}, workers {meta['workers']}"
        if meta["wall_time"] is not None:
            output += f", {meta['wall_time']:.2f}s"
        return output + "\n"

    def format_json(self, suite_results: Dict[str, Dict]) -> str:
        """Format suite results as JSON."""
        return json.dumps({"metadata": self.metadata(), "results": suite_results}, indent=2, default=_json_default)

    def format_csv(self, suite_results: Dict[str, Dict]) -> str:
        """Format the result rows as CSV, preceded by '# key: value' metadata lines."""
        buffer = io.StringIO()
        for key, value in self.metadata().items():
            buffer.write(f"# {key}: {value}\n")
        columns: List[str] = ["suite"]
        for result in suite_results.values():
            for row in result["rows"]:
                columns.extend(key for key in row if key not in columns)
        writer = csv.DictWriter(buffer, fieldnames=columns, restval="", lineterminator="\n")
        writer.writeheader()
        for code, result in suite_results.items():
            for row in result["rows"]:
                writer.writerow({"suite": code, **{key: _csv_cell(value) for key, value in row.items()}})
        return buffer.getvalue()

    def format(self, suite_results: Dict[str, Dict], output_format: Optional[str] = None) -> str:
        output_format = output_format or self.config.output_format
        if output_format == FORMAT_JSON:
            return self.format_json(suite_results)
        if output_format == FORMAT_CSV:
            return self.format_csv(suite_results)
        return self.format_checklist(suite_results)

    def failure_report(self, suite_results: Dict[str, Dict]) -> str:
        """JSON report listing the failed checks of every failing suite."""
        failures = {
            code: {
                "command": result["command"],
                "failed_checks": [name for name, passed in result["checks"].items() if not passed],
                "value": result["value"],
                "details": result["details"],
            }
            for code, result in suite_results.items()
            if not result["passed"]
        }
        return json.dumps({"metadata": self.metadata(), "failures": failures}, indent=2, default=_json_default)

    def run_suites(self, commands: Optional[Sequence[str]] = None) -> Dict[str, Dict]:
        """Run the configured suite (or the given ones) and return results keyed by suite code."""
        commands = list(commands) if commands else [self.config.command]
        results = {}
        start = time.perf_counter()
        for command in commands:
            suite = SUITE_CLASSES[command]
            logger.info(
                "Running %s [%s] with seed %d on %d workers", command, suite.code, self.config.seed, self.config.workers
            )
            result = {**suite.get_info()}
            result.update(suite.run(self.config))
            results[suite.code] = result
            logger.info("Finished %s: %s", command, "passed" if result["passed"] else "FAILED")
        self.wall_time = time.perf_counter() - start
        return results


class InspectorArgumentParser(argparse.ArgumentParser):
    """ArgumentParser whose usage errors exit with EXIT_USAGE."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"Error: {message}\n")


def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    group = common.add_argument_group("Run options")
    group.add_argument("--seed", type=int, help="Seed of every random stream (default 0 or MALLIAVIN_SEED)")
    group.add_argument("--workers", type=int, help="Worker threads (default 1 or MALLIAVIN_WORKERS)")
    group.add_argument("--out", help="Write the report to this file instead of stdout")
    group.add_argument("--format", dest="output_format", choices=OUTPUT_FORMATS, help="Output format")
    group.add_argument("--config", dest="config_path", help="JSON or TOML file mirroring the experiment config")
    group.add_argument("-v", "--verbose", action="count", default=0, help="INFO logging, -vv for DEBUG")
    return common


def build_parser() -> argparse.ArgumentParser:
    """Parser with one subcommand per suite."""
    parser = InspectorArgumentParser(
        prog="malliavin-inspector",
        description="Verify discrete Malliavin calculus identities and run normal-approximation experiments",
    )
    parser.add_argument("--list", action="store_true", help="List the suites with their codes and exit")
    common = _common_options()
    subparsers = parser.add_subparsers(dest="command", parser_class=InspectorArgumentParser)

    def add(command: str) -> argparse.ArgumentParser:
        return subparsers.add_parser(command, parents=[common], help=SUITES[command]["description"])

    for command in ("verify-operators", "chaos", "wass-bounds", "fourth-moment", "concentration"):
        sub = add(command)
        model_group = sub.add_argument_group("Model options")
        model_group.add_argument("--models", type=int, help="Number of random models (default 100)")
        model_group.add_argument("--model", dest="model_path", help="JSON model descriptor used for every run")
        if command == "concentration":
            model_group.add_argument("--thresholds", help="Comma-separated McDiarmid thresholds")

    glauber = add("glauber")
    glauber_group = glauber.add_argument_group("Dynamics options")
    glauber_group.add_argument("--model", dest="model_path", help="JSON model descriptor (default CM1)")
    glauber_group.add_argument("--times", help="Comma-separated times t")
    glauber_group.add_argument("--paths", type=int, help="Paths per start state (default 20000)")
    glauber_group.add_argument("--dump-paths", dest="dump_paths", help="Write one path per start state as JSON lines")

    bernoulli = add("clt-bernoulli")
    bernoulli.add_argument("--n", dest="ns", help="Comma-separated numbers of coordinates")
    bernoulli.add_argument("--samples", type=int, help="Samples per n")

    dejong = add("dejong")
    dejong.add_argument("--components", help="Comma-separated numbers of components")
    dejong.add_argument(
        "--hc-bound", dest="hc_bound", type=float, help="Bound on the hypercontractivity ratio (default 100)"
    )

    motif = add("hypergraph-motif")
    motif_group = motif.add_argument_group("Hypergraph options")
    motif_group.add_argument("--motif", help="Built-in motif name (default single-edge)")
    motif_group.add_argument("--motif-file", dest="motif_path", help="JSON motif descriptor")
    motif_group.add_argument("--n", dest="ns", help="Comma-separated numbers of vertices")
    motif_group.add_argument("--p", type=float, help="Hyperedge probability")
    motif_group.add_argument("--q", type=float, help="Latent edge probability (1 for G3)")
    motif_group.add_argument("--samples", type=int, help="Hypergraphs per n")
    motif_group.add_argument("--statistic", choices=STATISTICS, help="Centering of the motif count")
    return parser


def configure_logging(verbosity: int) -> None:
    level = logging.WARNING
    if verbosity == 1:
        level = logging.INFO
    elif verbosity >= 2:
        level = logging.DEBUG
    logging.basicConfig(level=level, stream=sys.stderr, format=LOG_FORMAT)


def _overrides(args: argparse.Namespace) -> Dict[str, Any]:
    skip = {"command", "config_path", "verbose", "list"}
    return {key: value for key, value in vars(args).items() if key not in skip and value is not None}


def _emit(text: str, path: Optional[str]) -> None:
    if path:
        with open(path, "w", encoding="utf-8") as f:
            f.write(text)
        logger.info("Wrote report to %s", path)
    else:
        print(text, end="" if text.endswith("\n") else "\n")


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Parse arguments, run the chosen suite and return the exit code."""
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.verbose if args.command else 0)

    if args.list:
        for command, info in SUITES.items():
            print(f"{info['code']}  {command:<18} {info['description']}")
        return EXIT_OK
    if not args.command:
        parser.print_help(sys.stderr)
        return EXIT_USAGE

    try:
        config = build_config(args.command, args.config_path, _overrides(args))
        inspector = MalliavinInspector(config)
        results = inspector.run_suites()
        output = inspector.format(results)
        if all(result["passed"] for result in results.values()):
            _emit(output, config.out)
            return EXIT_OK
        if config.out:
            _emit(output, config.out)
        elif config.output_format == FORMAT_CHECKLIST:
            print(output, file=sys.stderr, end="")
        print(inspector.failure_report(results))
        return EXIT_ASSERTION
    except ValueError as e:
        print(f"Error: {str(e)}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as e:
        print(f"An unexpected error occurred: {str(e)}", file=sys.stderr)
        return EXIT_USAGE


def main():
    """Main function to parse arguments and run the suite."""
    sys.exit(run())
