import json
from copy import deepcopy
from os.path import abspath, dirname, exists, isabs, join
from typing import Dict, List, Optional

from config.settings import SVCI_THREADS
from constants.cli_constants import Command
from constants.solver_constants import DEFAULT_N_LAMBDA
from libs.exceptions import SvciError
from libs.internal_types import JsonDict
from libs.model.specs import QuadratureSpec
from libs.simulate.scenarios import ScenarioSpec
from libs.solver.options import SolverOptions
from libs.spatial_graph.builders import GraphSpec
from commands.exceptions import RunConfigError


# every key a run configuration may hold, with its default.  Paths are relative to the directory of
# the configuration file; the resolved configuration written to the manifest holds absolute paths.
DEFAULTS: JsonDict = {
    "points": None,
    "domain": None,
    "covariates": [],
    "standardize": True,
    "strict": True,
    "dedup": False,
    "snap_tolerance": None,
    "quadrature": {},
    "graph": {},
    "lambda": None,
    "lambdas": None,
    "n_lambda": DEFAULT_N_LAMBDA,
    "solver": {},
    "seed": 0,
    "threads": None,
    "scenario": None,
    "truth": None,
    "estimate": None,
}

# keys of the domain and covariate blocks that name files
DOMAIN_PATH_KEYS = ("window", "geojson", "nodes", "edges")
PATH_KEYS = ("points", "scenario", "truth", "estimate")


class RunConfig:
    """ A resolved run: the command, the output directory and the merged settings (defaults, then
    the configuration file, then command line flags). """

    def __init__(self, command: str, output_directory: str, settings: JsonDict, config_path: Optional[str] = None):
        self.command = command
        self.output_directory = output_directory
        self.config_path = config_path
        self.settings = settings

    def __getitem__(self, key: str):
        return self.settings[key]

    @classmethod
    def from_sources(
        cls, command: str, output_directory: str, config_path: Optional[str] = None, overrides: Optional[Dict] = None
    ) -> "RunConfig":
        settings = deepcopy(DEFAULTS)
        violations = []
        file_settings = {}
        if config_path:
            file_settings = _read_config_file(config_path, violations)
            unknown = sorted(set(file_settings) - set(DEFAULTS))
            if unknown:
                violations.append(f"unknown configuration keys {unknown}")
            settings.update({key: value for key, value in file_settings.items() if key in DEFAULTS})
            _absolutize(settings, dirname(abspath(config_path)))

        for key, value in (overrides or {}).items():
            if value is None:
                continue
            if isinstance(value, dict):
                settings[key] = {**(settings.get(key) or {}), **value}
            else:
                settings[key] = abspath(value) if key in PATH_KEYS else value
        _absolutize(settings, abspath("."))

        if settings["threads"] is None:
            settings["threads"] = SVCI_THREADS
        seed_given = (config_path and "seed" in file_settings) or (overrides or {}).get("seed") is not None
        if command == Command.simulate and not seed_given:
            settings["seed"] = _scenario_seed(settings["scenario"])
        config = cls(command, abspath(output_directory) if output_directory else "", settings,
                     abspath(config_path) if config_path else None)
        violations.extend(config.violations())
        if violations:
            raise RunConfigError(violations)
        return config

    #
    ## validation, every problem is collected
    #

    def violations(self) -> List[str]:
        s = self.settings
        errors = []
        if self.command not in Command.values():
            errors.append(f"command must be one of {Command.values()}, received {self.command!r}")
        if not self.output_directory and self.command != Command.evaluate:
            errors.append("an output directory is required (-o)")
        if not _is_count(s["seed"], minimum=0):
            errors.append(f"seed must be a non-negative integer, received {s['seed']!r}")
        if not _is_count(s["threads"], minimum=1):
            errors.append(f"threads must be a positive integer, received {s['threads']!r}")

        if self.command in (Command.fit, Command.path, Command.export_graph):
            errors.extend(self._data_violations())
        if self.command == Command.fit:
            if not _is_positive(s["lambda"]):
                errors.append(f"fit needs a positive lambda, received {s['lambda']!r}")
        if self.command == Command.path:
            errors.extend(self._grid_violations())
        if self.command == Command.simulate:
            errors.extend(self._scenario_violations())
        if self.command == Command.evaluate:
            for key in ("truth", "estimate"):
                if not s[key]:
                    errors.append(f"evaluate needs --{'est' if key == 'estimate' else key}")
                elif not exists(s[key]):
                    errors.append(f"{key} file {s[key]} does not exist")
        return errors

    def _data_violations(self) -> List[str]:
        s = self.settings
        errors = []
        if not s["points"]:
            errors.append("a points file is required")
        elif not exists(s["points"]):
            errors.append(f"points file {s['points']} does not exist")
        if not isinstance(s["domain"], dict):
            errors.append("a domain block is required")
        else:
            for key in DOMAIN_PATH_KEYS:
                if key in s["domain"] and not exists(s["domain"][key]):
                    errors.append(f"domain {key} file {s['domain'][key]} does not exist")
        if not isinstance(s["covariates"], list):
            errors.append("covariates must be a list")
        else:
            for spec in s["covariates"]:
                if isinstance(spec, dict) and "path" in spec and not exists(spec["path"]):
                    errors.append(f"covariate file {spec['path']} does not exist")
        for label, build in (
            ("quadrature", lambda: self.quadrature_spec()),
            ("graph", lambda: self.graph_spec()),
            ("solver", lambda: self.solver_options()),
        ):
            try:
                build()
            except (SvciError, TypeError, ValueError) as e:
                errors.append(f"{label}: {e}")
        return errors

    def _grid_violations(self) -> List[str]:
        s = self.settings
        if s["lambdas"] is not None:
            grid = s["lambdas"]
            if not isinstance(grid, list) or not grid or not all(_is_positive(v) for v in grid):
                return [f"lambdas must be a non-empty list of positive numbers, received {grid!r}"]
            return []
        if not _is_count(s["n_lambda"], minimum=1):
            return [f"n_lambda must be a positive integer, received {s['n_lambda']!r}"]
        return []

    def _scenario_violations(self) -> List[str]:
        scenario = self.settings["scenario"]
        if not scenario:
            return ["simulate needs a scenario specification (-c)"]
        if isinstance(scenario, str):
            if not exists(scenario):
                return [f"scenario file {scenario} does not exist"]
            return []
        try:
            ScenarioSpec.from_dict(scenario)
        except SvciError as e:
            return [str(e)]
        return []

    #
    ## typed views
    #

    def quadrature_spec(self) -> QuadratureSpec:
        return QuadratureSpec.from_dict(self.settings["quadrature"] or {})

    def graph_spec(self) -> Optional[GraphSpec]:
        return GraphSpec.from_dict(self.settings["graph"]) if self.settings["graph"] else None

    def solver_options(self) -> SolverOptions:
        values = dict(self.settings["solver"] or {})
        values.setdefault("seed", self.settings["seed"])
        values.setdefault("threads", self.settings["threads"])
        return SolverOptions.from_dict(values)

    def scenario_spec(self) -> ScenarioSpec:
        scenario = self.settings["scenario"]
        spec = ScenarioSpec.load(scenario) if isinstance(scenario, str) else ScenarioSpec.from_dict(scenario)
        return spec.replace(seed=int(self.settings["seed"]))

    @property
    def scenario_directory(self) -> str:
        """ Relative paths inside a scenario file resolve against its directory. """
        scenario = self.settings["scenario"]
        return dirname(scenario) if isinstance(scenario, str) else ""

    def as_dict(self) -> JsonDict:
        return {
            "command": self.command,
            "output_directory": self.output_directory,
            "config_path": self.config_path,
            "settings": self.settings,
        }


def _read_config_file(path: str, violations: List[str]) -> JsonDict:
    try:
        with open(path) as f:
            loaded = json.load(f)
    except OSError as e:
        violations.append(f"could not read configuration file {path}: {e}")
        return {}
    except json.JSONDecodeError as e:
        violations.append(f"configuration file {path} is not valid json: {e}")
        return {}
    if not isinstance(loaded, dict):
        violations.append(f"configuration file {path} must hold a json object")
        return {}
    return loaded


def _absolutize(settings: JsonDict, base: str):
    def resolve(path):
        return path if not isinstance(path, str) or isabs(path) else join(base, path)

    for key in PATH_KEYS:
        settings[key] = resolve(settings[key])
    if isinstance(settings["domain"], dict):
        for key in DOMAIN_PATH_KEYS:
            if key in settings["domain"]:
                settings["domain"][key] = resolve(settings["domain"][key])
        if isinstance(settings["domain"].get("polygon"), str):
            settings["domain"]["polygon"] = resolve(settings["domain"]["polygon"])
    if isinstance(settings["covariates"], list):
        for spec in settings["covariates"]:
            if isinstance(spec, dict) and "path" in spec:
                spec["path"] = resolve(spec["path"])


def _is_count(value, minimum: int) -> bool:
    return isinstance(value, int) and not isinstance(value, bool) and value >= minimum


def _is_positive(value) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool) and value > 0


def _scenario_seed(scenario) -> int:
    """ A simulate run without an explicit seed uses the seed of its scenario. """
    try:
        if isinstance(scenario, str):
            return ScenarioSpec.load(scenario).seed
        if isinstance(scenario, dict):
            return ScenarioSpec.from_dict(scenario).seed
    except SvciError:
        pass  # reported by validation
    return DEFAULTS["seed"]
