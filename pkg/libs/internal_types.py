from typing import Callable, Dict, List, Union

import numpy as np


""" This file includes type aliases that are used throughout the codebase, mostly to make numpy
array arguments self-documenting. """

FloatArray = np.ndarray  # float64, any shape
IntArray = np.ndarray  # int64, any shape
BoolArray = np.ndarray

# an (N, p) array valued function of a Locations container
SurfaceFunction = Callable[["Locations"], np.ndarray]

StrOrBytes = Union[str, bytes]
JsonDict = Dict[str, Union[str, int, float, bool, None, list, dict]]
Labels = List[int]
