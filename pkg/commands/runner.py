import traceback
from os import makedirs
from os.path import join
from typing import Dict, List, Optional

from constants.cli_constants import ERROR_JSON, EXIT_BAD_CONFIG, EXIT_FAILURE, EXIT_SUCCESS
from libs.sentry import report_exception, SentryTypes
from libs.utils.general_utils import log
from serializers.result_serializers import write_json
from commands.exceptions import RunConfigError
from commands.handlers import HANDLERS
from commands.manifest import RunManifest
from commands.run_config import RunConfig


def run(config: RunConfig) -> int:
    """ Runs one validated command.  On success the manifest is written beside the outputs and 0
    is returned, on failure an error record is written instead and 1 is returned. """
    manifest = RunManifest(config)
    if config.output_directory:
        makedirs(config.output_directory, exist_ok=True)
    try:
        summary = HANDLERS[config.command](config, manifest)
    except Exception as e:
        log.error(f"{config.command} failed: {type(e).__name__}: {e}")
        report_exception(SentryTypes.cli, {"command": config.command})
        write_error_record(config.output_directory, e)
        return EXIT_FAILURE

    manifest.extra["summary"] = summary
    if config.output_directory:
        manifest.write(config.output_directory)
    log.info(f"{config.command} finished in {manifest.as_dict()['wall_time_seconds']:.2f}s")
    return EXIT_SUCCESS


def run_from_sources(
    command: str, output_directory: str, config_path: Optional[str] = None, overrides: Optional[Dict] = None
) -> int:
    """ Resolves and validates the configuration, then runs it.  Validation failures are written
    as an error record listing every violation and return 2. """
    try:
        config = RunConfig.from_sources(command, output_directory, config_path, overrides)
    except RunConfigError as e:
        for violation in e.violations:
            log.error(violation)
        if output_directory:
            makedirs(output_directory, exist_ok=True)
        write_error_record(output_directory, e, e.violations)
        return EXIT_BAD_CONFIG
    return run(config)


def write_error_record(directory: Optional[str], error: Exception, violations: Optional[List[str]] = None):
    if not directory:
        return
    write_json(
        {
            "type": type(error).__name__,
            "message": str(error),
            "violations": violations or [],
            "traceback": traceback.format_exception(type(error), error, error.__traceback__),
        },
        join(directory, ERROR_JSON),
    )
