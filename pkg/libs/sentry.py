from cronutils.error_handler import ErrorSentry, null_error_handler
from raven import Client as SentryClient
from raven.exceptions import InvalidDsn
from raven.transport import HTTPTransport

from config.settings import SVCI_SENTRY_DSN
from constants.common_constants import RUNNING_TEST_OR_IN_A_SHELL, SVCI_VERSION


# when running in a shell or under tests we force sentry off and force the use of the
# null_error_handler


class SentryTypes:
    cli = "cli"
    experiments = "experiments"


def normalize_sentry_dsn(dsn: str):
    if not dsn:
        return dsn
    # "https://xxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx", "sub.domains.sentry.io/yyyyyy"
    prefix, sentry_io = dsn.split("@")
    if sentry_io.count(".") > 1:
        # sub.domains.sentry.io/yyyyyy -> sentry.io/yyyyyy
        sentry_io = ".".join(sentry_io.rsplit(".", 2)[-2:])
    return prefix + "@" + sentry_io


def make_sentry_client(sentry_type: str, tags: dict = None):
    tags = tags or {}
    tags["sentry_type"] = sentry_type
    tags["svci_version"] = SVCI_VERSION
    return SentryClient(dsn=normalize_sentry_dsn(SVCI_SENTRY_DSN), tags=tags, transport=HTTPTransport)


def make_error_sentry(sentry_type: str, tags: dict = None):
    """ Creates an ErrorSentry, defaults to error limit 10.  Returns the null_error_handler when
    there is no DSN, when the DSN is invalid, or when running tests or in a shell. """
    if RUNNING_TEST_OR_IN_A_SHELL or not SVCI_SENTRY_DSN:
        return null_error_handler
    
    tags = tags or {}
    tags["sentry_type"] = sentry_type
    tags["svci_version"] = SVCI_VERSION
    
    try:
        return ErrorSentry(
            normalize_sentry_dsn(SVCI_SENTRY_DSN),
            sentry_client_kwargs={'tags': tags, 'transport': HTTPTransport},
            sentry_report_limit=10
        )
    except InvalidDsn:
        return null_error_handler


def report_exception(sentry_type: str, tags: dict = None):
    """ Sends the exception currently being handled to sentry, if sentry is configured.
    Must be called from inside an except block. """
    if RUNNING_TEST_OR_IN_A_SHELL or not SVCI_SENTRY_DSN:
        return
    try:
        make_sentry_client(sentry_type, tags).captureException()
    except InvalidDsn:
        pass
