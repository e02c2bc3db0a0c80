from datetime import datetime
from os.path import join
from time import perf_counter
from typing import Dict, List

from dateutil.tz import tzlocal, UTC

from constants.cli_constants import MANIFEST_JSON
from constants.common_constants import SeedComponent, SVCI_VERSION
from constants.datetime_constants import API_TIME_FORMAT_WITH_TZ
from libs.internal_types import JsonDict
from serializers.result_serializers import write_json
from commands.run_config import RunConfig


SEED_DERIVATION = "numpy.random.SeedSequence(seed, spawn_key=(component,))"


class RunManifest:
    """ Records what a command did: the resolved configuration, the seed and how every random
    stream derives from it, the library version, timestamps and the files written.  Rerunning the
    manifest's configuration reproduces the outputs. """

    def __init__(self, config: RunConfig):
        self.config = config
        self.started = datetime.now(tzlocal())
        self._clock = perf_counter()
        self.outputs: List[str] = []
        self.extra: Dict = {}

    def add_output(self, *names: str):
        for name in names:
            if name not in self.outputs:
                self.outputs.append(name)

    def as_dict(self) -> JsonDict:
        finished = datetime.now(tzlocal())
        seed = int(self.config["seed"])
        return {
            "command": self.config.command,
            "config": self.config.as_dict(),
            "seed": seed,
            "seed_derivation": {
                "method": SEED_DERIVATION,
                "components": {name: index for index, name in SeedComponent.names().items()},
            },
            "version": SVCI_VERSION,
            "threads": int(self.config["threads"]),
            "started": self.started.strftime(API_TIME_FORMAT_WITH_TZ),
            "finished": finished.strftime(API_TIME_FORMAT_WITH_TZ),
            "started_utc": self.started.astimezone(UTC).isoformat(),
            "wall_time_seconds": perf_counter() - self._clock,
            "outputs": sorted(self.outputs),
            **self.extra,
        }

    def write(self, directory: str) -> str:
        path = join(directory, MANIFEST_JSON)
        self.add_output(MANIFEST_JSON)
        write_json(self.as_dict(), path)
        return path
