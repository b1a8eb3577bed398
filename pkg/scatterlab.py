"""
ScatterLab - command-line driver.

Forward solves, response-matrix files, images and the acceptance checks.

    python scatterlab.py forward --config presets/example3.json
    python scatterlab.py image --config presets/example3.json --matrix out/response_h1.ssrm
    python scatterlab.py preset example1 --threads 8
    python scatterlab.py validate --extended
"""
import argparse
import sys
from pathlib import Path
from typing import List, Optional

import pandas as pd

from config.experiment import ExperimentConfig
from config.settings import settings
from services.experiment_service import ExperimentService
from services.validation_service import ValidationService
from utils.exceptions import (
    ArtifactError, ConfigurationError, ScatteringError, UsageError, ValidationError
)
from utils.logging import logger, run_log, set_level

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_NUMERICAL = 2
INVALID_ERRORS = (ValidationError, ConfigurationError, UsageError, ArtifactError)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="scatterlab", description=__doc__.splitlines()[1])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="Output directory")
    common.add_argument("--threads", type=int, default=0, help="Worker cap (default: available cores)")
    common.add_argument("--seed", type=int, help="Seed for random scatterer placement")
    common.add_argument("--log-level", help="Logging level for this run (default: LOG_LEVEL)")

    commands = parser.add_subparsers(dest="command", required=True)
    forward = commands.add_parser("forward", parents=[common], help="Solve and write response matrices")
    forward.add_argument("--config", required=True, help="Experiment JSON file")

    image = commands.add_parser("image", parents=[common], help="Image from a config or matrix files")
    image.add_argument("--config", required=True, help="Experiment JSON file")
    image.add_argument("--matrix", action="append", default=[],
                       help="Response-matrix file (repeat for several harmonics)")

    preset = commands.add_parser("preset", parents=[common], help="Forward run and imaging of a shipped preset")
    preset.add_argument("name", help="Preset name, e.g. example3")

    validate = commands.add_parser("validate", parents=[common], help="Run the acceptance checks")
    validate.add_argument("--extended", action="store_true", help="Include the full-size preset checks")
    return parser


class ScatterLabApp:
    """Dispatches one CLI command."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.logger = logger

    def _config(self, path: str) -> ExperimentConfig:
        return ExperimentConfig.load(path).with_overrides(seed=self.args.seed)

    def _service(self, config: ExperimentConfig) -> ExperimentService:
        return ExperimentService(config, self.args.out, self.args.threads)

    def _print_timings(self, service: ExperimentService, timings) -> None:
        with pd.option_context("display.width", 120):
            print(service.timing_table(timings).to_string())

    def forward(self) -> int:
        service = self._service(self._config(self.args.config))
        with run_log(service.artifacts.output_dir):
            result = service.run_forward()
        for harmonic, path in sorted(result.files.items()):
            print(f"harmonic {harmonic}: {path}")
        self._print_timings(service, result.timings)
        return EXIT_OK

    def image(self) -> int:
        service = self._service(self._config(self.args.config))
        with run_log(service.artifacts.output_dir):
            result = service.run_image(self.args.matrix or None)
        for harmonic, files in sorted(result.files.items()):
            print(f"harmonic {harmonic}: {files['png']}")
        self._print_timings(service, result.timings)
        return EXIT_OK

    def preset(self) -> int:
        path = Path(settings.app.presets_directory) / f"{self.args.name}.json"
        if not path.is_file():
            available = sorted(p.stem for p in Path(settings.app.presets_directory).glob("*.json"))
            raise UsageError(f"unknown preset {self.args.name!r}, available: {', '.join(available)}")
        service = self._service(self._config(str(path)))
        with run_log(service.artifacts.output_dir):
            forward = service.run_forward()
            result = service.run_image(forward=forward)
        for harmonic, files in sorted(result.files.items()):
            print(f"harmonic {harmonic}: {forward.files[harmonic]}, {files['png']}")
        self._print_timings(service, result.timings)
        return EXIT_OK

    def validate(self) -> int:
        validator = ValidationService(self.args.threads, self.args.extended)
        results = validator.run()
        with pd.option_context("display.width", 160, "display.max_colwidth", 90):
            print(validator.report(results).to_string())
        failed = [r.identifier for r in results if not r.passed]
        if failed:
            self.logger.error(f"Acceptance criteria failed: {failed}")
            return EXIT_INVALID
        return EXIT_OK

    def run(self) -> int:
        if self.args.log_level:
            set_level(self.args.log_level)
        settings.validate()
        return getattr(self, self.args.command)()


def main(argv: Optional[List[str]] = None) -> int:
    """Application entry point; returns the process exit code."""
    args = build_parser().parse_args(argv)
    try:
        return ScatterLabApp(args).run()
    except INVALID_ERRORS as e:
        logger.error(f"Invalid input: {e}", exc_info=True)
        for error in getattr(e, "errors", []):
            print(f"  {error}", file=sys.stderr)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    except ScatteringError as e:
        logger.error(f"Numerical failure: {e}", exc_info=True)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
