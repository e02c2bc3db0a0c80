# Do not import from other utils files here
import logging

import coloredlogs
import numpy as np

from config.settings import SVCI_LOG_LEVEL

coloredlogs.install(level=SVCI_LOG_LEVEL, fmt="%(levelname)s %(name)s: %(message)s")

log = logging.getLogger("svci")
log.setLevel(SVCI_LOG_LEVEL)


def chunked(total: int, block_size: int):
    """ Yields (start, stop) pairs that cover range(total) in blocks of block_size. """
    for start in range(0, total, block_size):
        yield start, min(start + block_size, total)


def component_rng(seed: int, component: int) -> np.random.Generator:
    """ The random stream of one component of a run, derived from the run's top-level seed. """
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(component),)))
