from os import cpu_count, getenv

"""
Keep this document legible for non-developers, it is linked in the ReadMe and is the official
documentation for all runtime parameters.

Everything here is read from environment variables.  Algorithmic defaults (tolerances, iteration
caps, graph parameters) are not runtime parameters, they live in the constants folder and are
overridden per-run through a run configuration file or command line flags.

For options below that use this syntax:
    getenv('SVCI_RUN_SLOW_TESTS', 'false').lower() == 'true'
This means svci is looking for the word 'true' and also accept "True", "TRUE", etc.
If not provided with a value, or provided with any other value, they will be treated as false.
"""

# The number of worker threads used for the per-covariate ADMM subproblems and for replicate
# batches in the experiment harness.  The --threads command line flag takes precedence.
#   Expects an integer number.
SVCI_THREADS = getenv("SVCI_THREADS") or cpu_count() or 1

# Logging verbosity of the "svci" logger.  One of DEBUG, INFO, WARNING, ERROR.
SVCI_LOG_LEVEL = getenv("SVCI_LOG_LEVEL", "INFO")

# Sentry DSN for crash reporting from command line runs and experiment batches.
# Optional, when it is not provided errors are only written to the output directory.
SVCI_SENTRY_DSN = getenv("SVCI_SENTRY_DSN")

#
# Developer options

# The Monte-Carlo acceptance tests (scenario reproduction, sample size trend, cluster recovery,
# throughput) take several minutes each. They are skipped unless this is enabled.
#   Expects (case-insensitive) "true" to enable, otherwise it is disabled.
SVCI_RUN_SLOW_TESTS = getenv('SVCI_RUN_SLOW_TESTS', 'false').lower() == 'true'
