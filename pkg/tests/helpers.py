import csv
import json
from os.path import join
from typing import Dict, List, Optional, Sequence

import numpy as np

from constants.common_constants import SVCI_PROJECT_ROOT
from constants.graph_constants import GraphMethod
from constants.quadrature_constants import LikelihoodKind
from libs.geometry.linear_network import LinearNetwork
from libs.geometry.locations import Locations
from libs.geometry.planar_window import PlanarWindow
from libs.model.fitting import FitProblem
from libs.model.specs import QuadratureSpec
from libs.point_data.covariates import CovariateField, RasterCovariate
from libs.point_data.point_pattern import PointPattern
from libs.quadrature.builders import build_scheme
from libs.quadrature.scheme import QuadratureScheme
from libs.solver.options import SolverOptions
from libs.spatial_graph.builders import GraphSpec


FIXTURES_DIRECTORY = join(SVCI_PROJECT_ROOT, "tests", "fixtures")
FIXTURE_RUN_JSON = join(FIXTURES_DIRECTORY, "run.json")
FIXTURE_POINTS_CSV = join(FIXTURES_DIRECTORY, "points.csv")
FIXTURE_RASTER_CSV = join(FIXTURES_DIRECTORY, "z1.csv")


class ReferenceObjectMixin:
    """ This class implements test object creation.  The common ones have convenience property
    wrappers that build them once per test. """

    DEFAULT_SEED = 20
    DEFAULT_N_POINTS = 40

    # the unit square has 10x10 pixels so that masks and subdivisions have something to work on.
    DEFAULT_WINDOW_PIXELS = 10

    #
    ## domains
    #

    @property
    def unit_window(self) -> PlanarWindow:
        """ The unit square, every pixel active. """
        try:
            return self._unit_window
        except AttributeError:
            pass
        self._unit_window = PlanarWindow((0.0, 1.0), (0.0, 1.0), self.DEFAULT_WINDOW_PIXELS, self.DEFAULT_WINDOW_PIXELS)
        return self._unit_window

    def generate_l_shaped_window(self) -> PlanarWindow:
        """ The unit square without its upper right quarter, measure 0.75. """
        mask = np.ones((2, 2), dtype=bool)
        mask[1, 1] = False
        return PlanarWindow((0.0, 1.0), (0.0, 1.0), 2, 2, mask)

    @property
    def small_network(self) -> LinearNetwork:
        """ A unit square loop with a tail of length 1 leaving its lower right corner.
                3 ---- 2
                |      |
                0 ---- 1 ---- 4
        segments 0: 0-1, 1: 1-2, 2: 2-3, 3: 3-0, 4: 1-4, total length 5. """
        try:
            return self._small_network
        except AttributeError:
            pass
        self._small_network = self.generate_network(
            [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0), (2.0, 0.0)],
            [(0, 1), (1, 2), (2, 3), (3, 0), (1, 4)],
        )
        return self._small_network

    def generate_network(self, vertices: Sequence, segments: Sequence) -> LinearNetwork:
        return LinearNetwork(np.array(vertices, dtype=float), np.array(segments, dtype=np.int64))

    #
    ## patterns
    #

    def rng(self, seed: Optional[int] = None) -> np.random.Generator:
        return np.random.default_rng(self.DEFAULT_SEED if seed is None else seed)

    @property
    def default_pattern(self) -> PointPattern:
        """ DEFAULT_N_POINTS uniform points on the unit window. """
        try:
            return self._default_pattern
        except AttributeError:
            pass
        self._default_pattern = self.generate_uniform_pattern(self.unit_window, self.DEFAULT_N_POINTS)
        return self._default_pattern

    def generate_uniform_pattern(self, domain, n: int, seed: Optional[int] = None) -> PointPattern:
        return PointPattern(domain.sample_uniform(n, self.rng(seed)), domain)

    def generate_two_level_pattern(self, n_left: int = 60, n_right: int = 6, seed: Optional[int] = None) -> PointPattern:
        """ A planar pattern that is dense on the left half of the unit window and sparse on the
        right half, the simplest intensity with a jump. """
        rng = self.rng(seed)
        left = np.column_stack([rng.random(n_left) * 0.5, rng.random(n_left)])
        right = np.column_stack([0.5 + rng.random(n_right) * 0.5, rng.random(n_right)])
        return PointPattern(Locations(np.vstack([left, right])), self.unit_window)

    def generate_planar_pattern(self, coords: Sequence) -> PointPattern:
        return PointPattern(Locations(np.array(coords, dtype=float)), self.unit_window)

    #
    ## covariates
    #

    def generate_gradient_raster(self, name: str = "z1", resolution: int = 10) -> RasterCovariate:
        """ A raster over the unit square whose value is the x coordinate of the pixel center. """
        centers = (np.arange(resolution) + 0.5) / resolution
        return RasterCovariate(name, (0.0, 1.0), (0.0, 1.0), np.tile(centers, (resolution, 1)))

    def generate_field(self, *names: str) -> CovariateField:
        return CovariateField([self.generate_gradient_raster(name) for name in names])

    #
    ## schemes, graphs and problems
    #

    def generate_scheme(
        self, pattern: Optional[PointPattern] = None, kind: str = LikelihoodKind.poisson, nd: Optional[int] = None,
        field: Optional[CovariateField] = None, seed: Optional[int] = None,
    ) -> QuadratureScheme:
        pattern = pattern or self.default_pattern
        return build_scheme(pattern, kind, nd, field, rng=self.rng(seed))

    def generate_problem(
        self, pattern: Optional[PointPattern] = None, kind: str = LikelihoodKind.poisson, nd: Optional[int] = None,
        field: Optional[CovariateField] = None, graph: Optional[GraphSpec] = None, seed: int = 0,
    ) -> FitProblem:
        pattern = pattern or self.default_pattern
        graph = graph or GraphSpec(GraphMethod.knn, k=4)
        return FitProblem.build(pattern, field, graph, QuadratureSpec(kind=kind, nd_target=nd), seed)

    @property
    def test_options(self) -> SolverOptions:
        """ Tighter than the defaults so that solutions are comparable between runs, one thread. """
        return SolverOptions(outer_tolerance=1e-10, admm_max_iterations=500, admm_primal_tolerance=1e-8,
                             admm_dual_tolerance=1e-8, threads=1)

    #
    ## files
    #

    def write_csv(self, path: str, header: Sequence[str], rows: Sequence[Sequence]) -> str:
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(header)
            writer.writerows(rows)
        return path

    def write_json_file(self, path: str, payload: Dict) -> str:
        with open(path, "w") as f:
            json.dump(payload, f)
        return path

    def read_csv_rows(self, path: str) -> List[Dict[str, str]]:
        with open(path, newline="") as f:
            return list(csv.DictReader(f))

    def read_json_file(self, path: str) -> Dict:
        with open(path) as f:
            return json.load(f)


class DummyThreadPool():
    """ a dummy threadpool object, runs everything in order on the calling thread """
    def __init__(self, *args, **kwargs) -> None:
        pass

    def map(self, func, iterable, **kwargs):
        # cut off any threadpool args, map does not use them
        return list(map(func, iterable))

    def close(self):
        pass

    def join(self):
        pass
