import shutil
import tempfile
from sys import argv
from unittest import TestCase

import numpy as np

from libs.internal_types import StrOrBytes
from tests.helpers import ReferenceObjectMixin


# this makes print statements during debugging easier to read by bracketting the statement of which
# test is running with some separater.
VERBOSE_2_OR_3 = ("-v2" in argv or "-v3" in argv) and "-v1" not in argv


class CommonTestCase(TestCase, ReferenceObjectMixin):
    """ This class contains the various test-oriented features, for example numpy-aware assertions
    and a scratch directory that is removed after every test. """

    def setUp(self) -> None:
        if VERBOSE_2_OR_3:
            print("\n==")
        return super().setUp()

    def tearDown(self) -> None:
        if VERBOSE_2_OR_3:
            print("==")
        try:
            shutil.rmtree(self._scratch)
        except AttributeError:
            pass
        return super().tearDown()

    @property
    def scratch(self) -> str:
        """ A temporary directory private to the running test. """
        try:
            return self._scratch
        except AttributeError:
            pass
        self._scratch = tempfile.mkdtemp(prefix="svci_test_")
        return self._scratch

    def assert_allclose(self, actual, expected, atol: float = 1e-10, rtol: float = 0.0, msg: str = ""):
        actual = np.asarray(actual, dtype=float)
        expected = np.asarray(expected, dtype=float)
        self.assertEqual(np.broadcast_shapes(actual.shape, expected.shape), actual.shape,
                         f"shapes {actual.shape} and {expected.shape} differ. {msg}")
        if not np.allclose(actual, expected, atol=atol, rtol=rtol, equal_nan=True):
            worst = np.nanmax(np.abs(actual - expected)) if actual.size else 0.0
            raise AssertionError(f"arrays differ by up to {worst:.3e} (atol={atol}, rtol={rtol}). {msg}")

    def assert_array_equal(self, actual, expected, msg: str = ""):
        if not np.array_equal(np.asarray(actual), np.asarray(expected)):
            raise AssertionError(f"arrays differ:\n{actual}\n{expected}\n{msg}")

    def assert_non_increasing(self, values, slack: float = 1e-10):
        values = np.asarray(values, dtype=float)
        increases = np.diff(values)
        if np.any(increases > slack * np.maximum(1.0, np.abs(values[:-1]))):
            first = int(np.flatnonzero(increases > slack * np.maximum(1.0, np.abs(values[:-1])))[0])
            raise AssertionError(f"sequence increases at step {first}: {values[first]} -> {values[first + 1]}")

    def assert_within_sigma(self, observed: float, expected: float, sigma: float, n_sigma: float = 3.0):
        self.assertLessEqual(
            abs(observed - expected), n_sigma * sigma,
            f"{observed} is more than {n_sigma} sigma ({sigma:.4g}) from {expected}",
        )

    def assert_not_present(self, test_str: StrOrBytes, corpus: StrOrBytes):
        return self._assert_present(False, test_str, corpus)

    def assert_present(self, test_str: StrOrBytes, corpus: StrOrBytes):
        """ Tests "in" and also handles the type coersion for bytes and strings, and suppresses
        excessively long output, file contents can be long. """
        return self._assert_present(True, test_str, corpus)

    def _assert_present(self, the_test: bool, test_str: StrOrBytes, corpus: StrOrBytes):
        t_test = type(test_str)
        t_corpus = type(corpus)
        test_str = test_str.encode() if t_test == str and t_corpus == bytes else test_str
        test_str = test_str.decode() if t_test == bytes and t_corpus == str else test_str
        the_test_function = self.assertIn if the_test else self.assertNotIn
        msg_param = "was not found" if the_test else "was found"

        try:
            return the_test_function(test_str, corpus)
        except AssertionError:
            if len(corpus) > 1000:
                test_str = test_str.decode() if isinstance(test_str, bytes) else test_str
                raise AssertionError(
                    f"'{test_str}' {msg_param} in the provided text. (The provided text was over "
                    "1000 characters, try self.assertIn or self.assertNotIn for full text of failure."
                ) from None
            else:
                raise
