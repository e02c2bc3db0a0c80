# stick all errors into this list and raise a special exception at the end.
ERRORS = []

VALID_LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")


####################################################################################################
#### Start introspecting to validate parameters and inform user of invalid runtime parameters. ####
####################################################################################################

from config import settings
from libs.exceptions import BadRuntimeConfigurationError

# Environment variable type can be unpredictable, sanitize the numerical ones.
try:
    settings.SVCI_THREADS = int(str(settings.SVCI_THREADS).strip())
    if settings.SVCI_THREADS < 1:
        ERRORS.append(f"SVCI_THREADS must be at least 1, received {settings.SVCI_THREADS}.")
except (TypeError, ValueError):
    ERRORS.append(f"SVCI_THREADS must be an integer, received '{settings.SVCI_THREADS}'.")

settings.SVCI_LOG_LEVEL = str(settings.SVCI_LOG_LEVEL).strip().upper()
if settings.SVCI_LOG_LEVEL not in VALID_LOG_LEVELS:
    ERRORS.append(
        f"SVCI_LOG_LEVEL must be one of {', '.join(VALID_LOG_LEVELS)}, "
        f"received '{settings.SVCI_LOG_LEVEL}'."
    )

# an empty string is the same as not providing a dsn.
if not settings.SVCI_SENTRY_DSN:
    settings.SVCI_SENTRY_DSN = None


# print a useful error and cease execution if any runtime parameters were bad.
if ERRORS:
    raise BadRuntimeConfigurationError("\n" + "\n".join(sorted(ERRORS)))
