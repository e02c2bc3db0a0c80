from typing import List

from libs.exceptions import SvciError


class RunConfigError(SvciError):
    """ Carries every violation found while validating a run configuration. """

    def __init__(self, violations: List[str]):
        self.violations = list(violations)
        super().__init__("invalid run configuration:\n  " + "\n  ".join(self.violations))
