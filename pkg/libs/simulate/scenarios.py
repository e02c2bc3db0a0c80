import csv
import json
from os.path import join
from typing import Dict, List, Optional

import numpy as np

from constants.cli_constants import EDGES_CSV, NODES_CSV, POINTS_CSV, TRUTH_CSV, WINDOW_JSON
from constants.common_constants import SeedComponent
from constants.simulation_constants import (CALIBRATION_CELLS, DEFAULT_COVARIATE_RESOLUTION, DEFAULT_GP_RANGE_FRACTION,
    DEFAULT_GP_VARIANCE, TRUTH_CSV_FIELDS, ScenarioId, SurfacePreset)
from libs.geometry.domain import Domain
from libs.geometry.domain_io import load_domain, save_domain
from libs.geometry.locations import Locations
from libs.geometry.planar_window import PlanarWindow
from libs.internal_types import FloatArray, IntArray, JsonDict
from libs.point_data.covariate_io import CovariateKind, save_csv_grid
from libs.point_data.covariates import CovariateField, RasterCovariate
from libs.point_data.point_pattern import PointPattern, save_pattern
from libs.simulate.exceptions import ScenarioSpecError
from libs.simulate.gaussian_process import gp_raster
from libs.simulate.poisson import simulate_poisson
from libs.simulate.surfaces import PiecewiseSurface, preset_surface, street_grid_network
from libs.utils.general_utils import component_rng, log


class ScenarioSpec:
    """ A simulation scenario.  JSON form:

        {
            "scenario": "1" | "2a" | "2b",
            "scale": R,                       (the domain is [0, R]^2, or a street grid spanning it)
            "target_n": expected number of points,
            "gp": {"variance": 1.0, "range": 0.3 R, "resolution": 40},
            "surface": {"preset": ...} | {"names": [...], "regions": [...]},
            "domain": optional domain block replacing the built-in domain,
            "seed": 0
        }
    """

    def __init__(
        self,
        scenario: str,
        scale: float,
        target_n: float,
        gp_variance: float = DEFAULT_GP_VARIANCE,
        gp_range: Optional[float] = None,
        resolution: int = DEFAULT_COVARIATE_RESOLUTION,
        surface: Optional[JsonDict] = None,
        domain: Optional[JsonDict] = None,
        seed: int = 0,
    ):
        self.scenario = scenario
        self.scale = scale
        self.target_n = target_n
        self.gp_variance = gp_variance
        self.gp_range = gp_range
        self.resolution = resolution
        self.surface = surface
        self.domain = domain
        self.seed = seed
        errors = self.validation_errors()
        if errors:
            raise ScenarioSpecError("invalid scenario: " + "; ".join(errors))
        self.scale = float(scale)
        self.target_n = float(target_n)
        self.gp_variance = float(gp_variance)
        self.gp_range = float(gp_range) if gp_range is not None else DEFAULT_GP_RANGE_FRACTION * self.scale
        self.resolution = int(resolution)
        self.seed = int(seed)

    def validation_errors(self) -> List[str]:
        errors = []
        if self.scenario not in ScenarioId.values():
            errors.append(f"scenario must be one of {ScenarioId.values()}, received {self.scenario!r}")
        for name in ("scale", "target_n", "gp_variance"):
            if not _positive(getattr(self, name)):
                errors.append(f"{name} must be a positive number, received {getattr(self, name)!r}")
        if self.gp_range is not None and not _positive(self.gp_range):
            errors.append(f"gp range must be a positive number, received {self.gp_range!r}")
        if not isinstance(self.resolution, int) or self.resolution < 2:
            errors.append(f"gp resolution must be an integer of at least 2, received {self.resolution!r}")
        if not isinstance(self.seed, int) or self.seed < 0:
            errors.append(f"seed must be a non-negative integer, received {self.seed!r}")
        if self.surface is not None and not isinstance(self.surface, dict):
            errors.append("surface must be an object")
        return errors

    @classmethod
    def from_dict(cls, spec: JsonDict) -> "ScenarioSpec":
        known = {"scenario", "scale", "target_n", "gp", "surface", "domain", "seed"}
        unknown = sorted(set(spec) - known)
        if unknown:
            raise ScenarioSpecError(f"unknown scenario keys {unknown}")
        gp = spec.get("gp", {})
        return cls(
            scenario=str(spec.get("scenario")),
            scale=spec.get("scale"),
            target_n=spec.get("target_n"),
            gp_variance=gp.get("variance", DEFAULT_GP_VARIANCE),
            gp_range=gp.get("range"),
            resolution=gp.get("resolution", DEFAULT_COVARIATE_RESOLUTION),
            surface=spec.get("surface"),
            domain=spec.get("domain"),
            seed=spec.get("seed", 0),
        )

    @classmethod
    def load(cls, path: str) -> "ScenarioSpec":
        try:
            with open(path) as f:
                return cls.from_dict(json.load(f))
        except OSError as e:
            raise ScenarioSpecError(f"could not read {path}: {e}")
        except json.JSONDecodeError as e:
            raise ScenarioSpecError(f"{path} is not valid json: {e}")

    def as_dict(self) -> JsonDict:
        out = {
            "scenario": self.scenario,
            "scale": self.scale,
            "target_n": self.target_n,
            "gp": {"variance": self.gp_variance, "range": self.gp_range, "resolution": self.resolution},
            "surface": self.surface,
            "seed": self.seed,
        }
        if self.domain is not None:
            out["domain"] = self.domain
        return out

    def replace(self, **changes) -> "ScenarioSpec":
        values = dict(
            scenario=self.scenario, scale=self.scale, target_n=self.target_n, gp_variance=self.gp_variance,
            gp_range=self.gp_range, resolution=self.resolution, surface=self.surface, domain=self.domain,
            seed=self.seed,
        )
        values.update(changes)
        return ScenarioSpec(**values)


def _positive(value) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool) and np.isfinite(value) and value > 0


class Scenario:
    """ A simulated data set and the truth it was drawn from.  `truth` holds the coefficient
    surfaces on the raw covariate scale with the calibrated intercept shift already applied. """

    def __init__(
        self,
        spec: ScenarioSpec,
        domain: Domain,
        pattern: PointPattern,
        rasters: List[RasterCovariate],
        truth: PiecewiseSurface,
        calibration: float,
    ):
        self.spec = spec
        self.domain = domain
        self.pattern = pattern
        self.rasters = rasters
        self.truth = truth
        self.calibration = calibration

    @property
    def names(self) -> List[str]:
        return self.truth.names

    def covariate_field(self, standardize: bool = True) -> CovariateField:
        return CovariateField(self.rasters, standardize=standardize)

    def raw_design(self, locations: Locations) -> FloatArray:
        raw = CovariateField(self.rasters, standardize=False).raw_at(locations)
        return np.column_stack([np.ones(len(locations)), raw])

    def true_coefficients(self, locations: Locations) -> FloatArray:
        return self.truth.values_at(locations)

    def true_log_intensity(self, locations: Locations) -> FloatArray:
        return (self.raw_design(locations) * self.truth.values_at(locations)).sum(axis=1)

    def true_intensity(self, locations: Locations) -> FloatArray:
        return np.exp(self.true_log_intensity(locations))

    def true_labels(self, locations: Locations) -> IntArray:
        return self.truth.labels_at(locations)

    def expected_count(self) -> float:
        grid = self.domain.subdivide(CALIBRATION_CELLS)
        return float(np.dot(grid.measures, self.true_intensity(grid.centers)))

    def save(self, directory: str, evaluation_cells: int = CALIBRATION_CELLS) -> JsonDict:
        """ Writes the pattern, domain, covariate rasters and truth table into directory and returns
        a run configuration block that fits this data. """
        save_pattern(self.pattern, join(directory, POINTS_CSV))
        domain_block = save_domain(self.domain, directory, NODES_CSV, EDGES_CSV, WINDOW_JSON)
        covariates = []
        for raster in self.rasters:
            filename = f"{raster.name}.csv"
            save_csv_grid(raster, join(directory, filename))
            covariates.append({"name": raster.name, "type": CovariateKind.raster, "path": filename})
        write_truth_csv(self, join(directory, TRUTH_CSV), evaluation_cells)
        return {"points": POINTS_CSV, "domain": domain_block, "covariates": covariates}


def scenario_domain(spec: ScenarioSpec, base_directory: str = "") -> Domain:
    if spec.domain is not None:
        return load_domain(spec.domain, base_directory)
    if spec.scenario == ScenarioId.planar_covariates:
        return PlanarWindow((0.0, spec.scale), (0.0, spec.scale))
    return street_grid_network(spec.scale)


def scenario_surface(spec: ScenarioSpec) -> PiecewiseSurface:
    if spec.surface is None or "preset" in spec.surface:
        default = SurfacePreset.three_band_planar if spec.scenario == ScenarioId.planar_covariates \
            else SurfacePreset.two_region_network
        preset = (spec.surface or {}).get("preset", default)
        return preset_surface(preset, spec.scale, with_covariates=spec.scenario != ScenarioId.network_piecewise)
    return PiecewiseSurface.from_dict(spec.surface)


def make_scenario(spec: ScenarioSpec, base_directory: str = "") -> Scenario:
    """ Builds the truth surfaces, simulates one GP raster per covariate, shifts the intercept so
    that the expected point count is target_n and simulates the pattern.  The covariate rasters
    draw from the covariate stream of spec.seed and the pattern from the pattern stream. """
    domain = scenario_domain(spec, base_directory)
    surface = scenario_surface(spec)
    if spec.scenario == ScenarioId.network_piecewise and surface.n_coefficients != 1:
        raise ScenarioSpecError("scenario 2a is intercept only, its surface must have a single coefficient")

    grid = domain.subdivide(CALIBRATION_CELLS)
    surface.region_ids(grid.centers)  # every cell center must be in some region

    rng = component_rng(spec.seed, SeedComponent.covariate_field)
    rasters = [
        gp_raster(name, domain, spec.gp_variance, spec.gp_range, rng, spec.resolution)
        for name in surface.names[1:]
    ]

    unshifted = Scenario(spec, domain, None, rasters, surface, 0.0)
    calibration = float(np.log(spec.target_n / unshifted.expected_count()))
    scenario = Scenario(spec, domain, None, rasters, surface.shifted(calibration), calibration)
    log.info(f"scenario {spec.scenario}: intercept shifted by {calibration:.6g} for {spec.target_n:g} expected points")

    scenario.pattern = simulate_poisson(
        domain, scenario.true_intensity, component_rng(spec.seed, SeedComponent.simulated_pattern)
    )
    return scenario


#
## truth table
#

class TruthTable:
    """ Truth surfaces at the cells of an evaluation grid, as read from a truth csv. """

    def __init__(self, locations: Locations, measures: FloatArray, regions: IntArray, columns: Dict[str, FloatArray]):
        self.locations = locations
        self.measures = measures
        self.regions = regions
        self.columns = columns


def write_truth_csv(scenario: Scenario, path: str, evaluation_cells: int = CALIBRATION_CELLS):
    grid = scenario.domain.subdivide(evaluation_cells)
    centers = grid.centers
    coefficients = scenario.true_coefficients(centers)
    log_intensity = scenario.true_log_intensity(centers)
    regions = scenario.truth.region_ids(centers)

    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(list(TRUTH_CSV_FIELDS) + ["region"] + scenario.names + ["log_intensity"])
        for i in range(len(centers)):
            row = [repr(float(centers.coords[i, 0])), repr(float(centers.coords[i, 1]))]
            if centers.on_network:
                row += [int(centers.segments[i]), repr(float(centers.offsets[i]))]
            else:
                row += ["", ""]
            row += [repr(float(grid.measures[i])), int(regions[i])]
            row += [repr(float(v)) for v in coefficients[i]] + [repr(float(log_intensity[i]))]
            writer.writerow(row)


def read_truth_csv(path: str) -> TruthTable:
    try:
        with open(path, newline="") as f:
            reader = csv.DictReader(f)
            header = reader.fieldnames or []
            rows = list(reader)
    except OSError as e:
        raise ScenarioSpecError(f"could not read {path}: {e}")
    missing = [name for name in TRUTH_CSV_FIELDS + ("region",) if name not in header]
    if missing:
        raise ScenarioSpecError(f"{path}: missing columns {missing}")

    def column(name: str) -> FloatArray:
        try:
            return np.array([float(row[name]) for row in rows], dtype=float)
        except ValueError as e:
            raise ScenarioSpecError(f"{path}: column '{name}' is not numeric: {e}")

    coords = np.column_stack([column("x"), column("y")]) if rows else np.zeros((0, 2))
    on_network = bool(rows) and rows[0]["segment"] != ""
    locations = Locations(coords, column("segment").astype(np.int64), column("offset")) if on_network \
        else Locations(coords)
    value_names = [name for name in header if name not in TRUTH_CSV_FIELDS and name != "region"]
    return TruthTable(
        locations, column("measure"), column("region").astype(np.int64), {name: column(name) for name in value_names}
    )
