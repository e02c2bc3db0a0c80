from os.path import join

import numpy as np

from libs.geometry.locations import Locations
from libs.point_data.covariate_io import (covariate_field_from_config, load_csv_grid, load_esri_ascii,
    save_csv_grid)
from libs.point_data.covariates import (CovariateField, PointColumnCovariate, RasterCovariate,
    SegmentCovariate)
from libs.point_data.exceptions import (CovariateFileError, CovariateShapeError, MissingCovariateError,
    PatternParseError, PointOffDomainError)
from libs.point_data.point_pattern import load_pattern, PointPattern, save_pattern
from tests.common import CommonTestCase
from tests.helpers import FIXTURE_POINTS_CSV, FIXTURE_RASTER_CSV


class TestLoadPattern(CommonTestCase):

    def test_fixture_points(self):
        pattern = load_pattern(FIXTURE_POINTS_CSV, self.unit_window)
        self.assertEqual(pattern.n, 50)
        self.assertIn("mark", pattern.columns)
        self.assertEqual(pattern.report.kept, 50)

    def points_file(self, rows, header=("x", "y")) -> str:
        return self.write_csv(join(self.scratch, "points.csv"), header, rows)

    def test_strict_mode_rejects_off_domain_points(self):
        path = self.points_file([[0.5, 0.5], [1.5, 0.5]])
        with self.assertRaises(PointOffDomainError):
            load_pattern(path, self.unit_window)

    def test_lenient_mode_drops_off_domain_points(self):
        path = self.points_file([[0.5, 0.5], [1.5, 0.5], [0.2, 0.1]])
        pattern = load_pattern(path, self.unit_window, strict=False)
        self.assertEqual(pattern.n, 2)
        self.assertEqual(pattern.report.dropped_off_domain, 1)
        self.assert_allclose(pattern.locations.coords, [[0.5, 0.5], [0.2, 0.1]])

    def test_duplicates_are_kept_unless_dedup(self):
        path = self.points_file([[0.5, 0.5], [0.5, 0.5], [0.2, 0.1]])
        self.assertEqual(load_pattern(path, self.unit_window).n, 3)
        pattern = load_pattern(path, self.unit_window, dedup=True)
        self.assertEqual(pattern.n, 2)
        self.assertEqual(pattern.report.duplicates_removed, 1)

    def test_parse_errors(self):
        with self.assertRaises(PatternParseError):
            load_pattern(self.points_file([[0.5, "abc"]]), self.unit_window)
        with self.assertRaises(PatternParseError):
            load_pattern(self.points_file([[0.5, 0.5]], header=("a", "b")), self.unit_window)
        with self.assertRaises(PatternParseError):
            load_pattern(self.points_file([[0.5, 0.5, 0.1]]), self.unit_window)
        with self.assertRaises(PatternParseError):
            load_pattern(join(self.scratch, "missing.csv"), self.unit_window)

    def test_empty_file_is_an_empty_pattern(self):
        path = join(self.scratch, "empty.csv")
        open(path, "w").close()
        self.assertEqual(load_pattern(path, self.unit_window).n, 0)

    def test_network_points_are_snapped(self):
        path = self.points_file([[0.5, 0.01], [1.5, 0.0]])
        pattern = load_pattern(path, self.small_network)
        self.assertEqual(pattern.report.snapped, 1)
        self.assert_array_equal(pattern.locations.segments, [0, 4])
        self.assert_allclose(pattern.locations.offsets, [0.5, 0.5], atol=1e-12)

    def test_network_points_beyond_the_snap_tolerance(self):
        path = self.points_file([[0.5, 0.5]])
        with self.assertRaises(PointOffDomainError):
            load_pattern(path, self.small_network)
        self.assertEqual(load_pattern(path, self.small_network, snap_tolerance=0.6).n, 1)

    def test_segment_offset_columns(self):
        path = self.points_file([[1, 0.25], [4, 0.75], [9, 0.1]], header=("segment", "offset"))
        with self.assertRaises(PointOffDomainError):
            load_pattern(path, self.small_network)
        pattern = load_pattern(path, self.small_network, strict=False)
        self.assertEqual(pattern.n, 2)
        self.assert_allclose(pattern.locations.coords, [[1.0, 0.25], [1.75, 0.0]], atol=1e-12)

    def test_save_and_reload_is_exact(self):
        pattern = self.generate_uniform_pattern(self.small_network, 25)
        pattern = PointPattern(pattern.locations, pattern.domain, {"w": np.arange(25) / 7.0})
        path = join(self.scratch, "saved.csv")
        save_pattern(pattern, path)
        reloaded = load_pattern(path, self.small_network)
        self.assert_array_equal(reloaded.locations.coords, pattern.locations.coords)
        self.assert_array_equal(reloaded.locations.offsets, pattern.locations.offsets)
        self.assert_array_equal(reloaded.columns["w"], pattern.columns["w"])


class TestCovariates(CommonTestCase):

    def test_raster_lookup_and_missing_data(self):
        raster = self.generate_gradient_raster(resolution=4)
        values = raster.raw_values(Locations([(0.1, 0.9), (0.6, 0.2), (1.0, 1.0), (1.2, 0.5)]))
        self.assert_allclose(values[:3], [0.125, 0.625, 0.875])
        self.assertTrue(np.isnan(values[3]))

    def test_missing_values_raise(self):
        field = CovariateField([self.generate_gradient_raster()], standardize=False)
        with self.assertRaises(MissingCovariateError):
            field.covariates_at(Locations([(2.0, 2.0)]))
        self.assertTrue(np.isnan(field.covariates_at(Locations([(2.0, 2.0)]), allow_missing=True)[0, 0]))

    def test_standardization(self):
        locations = self.unit_window.sample_uniform(200, self.rng())
        field = self.generate_field("z1").fit_standardization(locations)
        standardized = field.covariates_at(locations)
        self.assertAlmostEqual(standardized.mean(), 0.0, places=10)
        self.assertAlmostEqual(standardized.std(), 1.0, places=10)

    def test_unfitted_standardization_raises(self):
        with self.assertRaises(CovariateShapeError):
            self.generate_field("z1").covariates_at(Locations([(0.5, 0.5)]))

    def test_constant_covariates_are_only_centered(self):
        constant = RasterCovariate("c", (0.0, 1.0), (0.0, 1.0), np.full((2, 2), 3.0))
        field = CovariateField([constant]).fit_standardization(self.default_pattern.locations)
        self.assert_allclose(field.sds, [1.0])
        self.assert_allclose(field.covariates_at(Locations([(0.5, 0.5)])), [[0.0]])

    def test_back_transform_preserves_the_linear_predictor(self):
        locations = self.unit_window.sample_uniform(50, self.rng())
        field = self.generate_field("z1", "z2").fit_standardization(locations)
        beta = self.rng(3).normal(size=(50, 3))
        raw_design = np.column_stack([np.ones(50), CovariateField(field.covariates, False).raw_at(locations)])
        expected = (field.design_matrix(locations) * beta).sum(axis=1)
        self.assert_allclose((raw_design * field.back_transform(beta)).sum(axis=1), expected, atol=1e-10)

    def test_names_must_be_unique(self):
        with self.assertRaises(CovariateShapeError):
            self.generate_field("z1", "z1")

    def test_segment_covariate_pieces(self):
        covariate = SegmentCovariate("width", [1.0, 2.0, 3.0, 4.0, 5.0], [(0, 0.0, 0.5, 10.0)])
        values = covariate.raw_values(self.small_network.locations_at([0, 0, 4], [0.25, 0.75, 0.5]))
        self.assert_allclose(values, [10.0, 1.0, 5.0])
        with self.assertRaises(CovariateShapeError):
            covariate.raw_values(Locations([(0.5, 0.5)]))

    def test_point_column_covariate_reads_the_nearest_point(self):
        covariate = PointColumnCovariate("mark", Locations([(0.0, 0.0), (1.0, 1.0)]), [1.0, 2.0])
        self.assert_allclose(covariate.raw_values(Locations([(0.2, 0.1), (0.9, 0.6)])), [1.0, 2.0])


class TestCovariateFiles(CommonTestCase):

    def test_fixture_grid_is_listed_north_first(self):
        raster = load_csv_grid(FIXTURE_RASTER_CSV, "z1")
        self.assertEqual((raster.nx, raster.ny), (4, 4))
        self.assert_allclose(raster.raw_values(Locations([(0.1, 0.1), (0.9, 0.9)])), [0.125, 0.875])

    def test_grid_files_keep_missing_cells(self):
        values = np.array([[1.0, 2.0, 3.0], [4.0, np.nan, 6.0]])  # row 0 is the south row
        path = join(self.scratch, "grid.csv")
        save_csv_grid(RasterCovariate("g", (0.0, 3.0), (0.0, 2.0), values), path)
        reloaded = load_csv_grid(path, "g")
        self.assert_allclose(reloaded.values, values)
        self.assertAlmostEqual(reloaded.raw_values(Locations([(0.5, 0.5)]))[0], 1.0)

    def test_bad_grid_header(self):
        path = self.write_csv(join(self.scratch, "grid.csv"), ["a", "b"], [[1, 2]])
        with self.assertRaises(CovariateFileError):
            load_csv_grid(path, "g")

    def test_esri_ascii_grid(self):
        path = join(self.scratch, "grid.asc")
        with open(path, "w") as f:
            f.write("ncols 2\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 0.5\nNODATA_value -9999\n")
            f.write("1 2\n3 -9999\n")
        raster = load_esri_ascii(path, "g")
        self.assert_allclose(raster.raw_values(Locations([(0.25, 0.75), (0.25, 0.25)])), [1.0, 3.0])
        self.assertTrue(np.isnan(raster.raw_values(Locations([(0.75, 0.25)]))[0]))

    def test_field_from_config(self):
        pattern = load_pattern(FIXTURE_POINTS_CSV, self.unit_window)
        field = covariate_field_from_config(
            [{"name": "z1", "type": "raster", "path": FIXTURE_RASTER_CSV}, {"name": "mark", "type": "points"}],
            pattern,
        )
        self.assertEqual(field.names, ["z1", "mark"])
        with self.assertRaises(CovariateFileError):
            covariate_field_from_config([{"name": "q", "type": "points"}], pattern)
        with self.assertRaises(CovariateFileError):
            covariate_field_from_config([{"name": "q", "type": "cloud"}], pattern)
