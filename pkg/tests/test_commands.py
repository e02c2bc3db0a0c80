import importlib
import io
import os
from os.path import exists, join
from unittest import mock

import numpy as np

import config
import config.settings
import svci
from constants.cli_constants import (BIC_TABLE_CSV, COEFFICIENTS_CSV, ERROR_JSON, EVALUATION_JSON, EXIT_BAD_CONFIG,
    EXIT_FAILURE, EXIT_SUCCESS, GRAPH_CSV, MANIFEST_JSON, PATH_JSON, RESULT_JSON, RUN_JSON, SCHEME_CSV, TRACE_CSV,
    TRUTH_CSV)
from libs.exceptions import BadRuntimeConfigurationError
from libs.geometry.locations import Locations
from libs.model.exceptions import EvaluationInputError
from libs.simulate.scenarios import TruthTable
from serializers.result_serializers import CoefficientTable, read_coefficients_csv
from commands.exceptions import RunConfigError
from commands.handlers import evaluate_tables
from commands.run_config import RunConfig
from commands.runner import run_from_sources
from tests.common import CommonTestCase
from tests.helpers import FIXTURE_POINTS_CSV, FIXTURE_RUN_JSON, FIXTURES_DIRECTORY


class TestRunConfig(CommonTestCase):

    def test_paths_resolve_against_the_config_file(self):
        config = RunConfig.from_sources("fit", self.scratch, FIXTURE_RUN_JSON)
        self.assertEqual(config["points"], FIXTURE_POINTS_CSV)
        self.assertEqual(config["covariates"][0]["path"], join(FIXTURES_DIRECTORY, "z1.csv"))
        self.assertEqual(config["seed"], 3)
        self.assertEqual(config.solver_options().outer_max_iterations, 200)
        self.assertEqual(config.solver_options().seed, 3)

    def test_flags_override_the_file(self):
        config = RunConfig.from_sources(
            "fit", self.scratch, FIXTURE_RUN_JSON, {"lambda": 0.5, "graph": {"k": 6}, "seed": None}
        )
        self.assertEqual(config["lambda"], 0.5)
        self.assertEqual(config.graph_spec().as_dict(), {"method": "knn", "k": 6})
        self.assertEqual(config["seed"], 3)

    def test_every_violation_is_reported(self):
        with self.assertRaises(RunConfigError) as context:
            RunConfig.from_sources("fit", self.scratch, FIXTURE_RUN_JSON,
                                   {"lambda": -1.0, "threads": 0, "points": join(self.scratch, "nope.csv")})
        violations = " ".join(context.exception.violations)
        self.assert_present("positive lambda", violations)
        self.assert_present("threads", violations)
        self.assert_present("does not exist", violations)

    def test_unknown_keys_and_bad_files(self):
        path = self.write_json_file(join(self.scratch, "run.json"), {"points": "p.csv", "colour": "red"})
        with self.assertRaises(RunConfigError) as context:
            RunConfig.from_sources("fit", self.scratch, path)
        self.assert_present("colour", " ".join(context.exception.violations))
        broken = join(self.scratch, "broken.json")
        with open(broken, "w") as f:
            f.write("{not json")
        with self.assertRaises(RunConfigError):
            RunConfig.from_sources("fit", self.scratch, broken)

    def test_simulate_takes_the_scenario_seed(self):
        scenario = {"scenario": "2a", "scale": 1.0, "target_n": 50, "seed": 9}
        self.assertEqual(RunConfig.from_sources("simulate", self.scratch, None, {"scenario": scenario})["seed"], 9)
        config = RunConfig.from_sources("simulate", self.scratch, None, {"scenario": scenario, "seed": 2})
        self.assertEqual(config.scenario_spec().seed, 2)


class TestCommands(CommonTestCase):

    def out(self, name: str) -> str:
        return join(self.scratch, name)

    def test_fit(self):
        self.assertEqual(run_from_sources("fit", self.out("fit"), FIXTURE_RUN_JSON), EXIT_SUCCESS)
        for name in (RESULT_JSON, COEFFICIENTS_CSV, TRACE_CSV, SCHEME_CSV, GRAPH_CSV, MANIFEST_JSON):
            self.assertTrue(exists(join(self.out("fit"), name)), name)
        manifest = self.read_json_file(join(self.out("fit"), MANIFEST_JSON))
        self.assertEqual(manifest["seed"], 3)
        self.assertIn(RESULT_JSON, manifest["outputs"])
        self.assertEqual(manifest["seed_derivation"]["components"]["logistic_dummies"], 3)
        result = self.read_json_file(join(self.out("fit"), RESULT_JSON))
        self.assertEqual(result["names"], ["intercept", "z1"])
        self.assertEqual(result["quadrature"]["n"], 50)
        table = read_coefficients_csv(join(self.out("fit"), COEFFICIENTS_CSV))
        self.assertEqual(table.names, ["intercept", "z1"])
        self.assertEqual(len(table.locations), len(result["points"]["observed"]))

    def test_results_do_not_depend_on_threads(self):
        run_from_sources("fit", self.out("one"), FIXTURE_RUN_JSON, {"threads": 1})
        run_from_sources("fit", self.out("two"), FIXTURE_RUN_JSON, {"threads": 2})
        for name in (RESULT_JSON, COEFFICIENTS_CSV):
            with open(join(self.out("one"), name)) as a, open(join(self.out("two"), name)) as b:
                self.assertEqual(a.read(), b.read(), name)

    def test_path_with_an_explicit_grid(self):
        code = run_from_sources("path", self.out("path"), FIXTURE_RUN_JSON, {"lambdas": [0.005, 0.05]})
        self.assertEqual(code, EXIT_SUCCESS)
        payload = self.read_json_file(join(self.out("path"), PATH_JSON))
        self.assertEqual(payload["lambdas"], [0.05, 0.005])
        self.assertEqual(payload["selected_lambda"], payload["lambdas"][payload["selected_index"]])
        rows = self.read_csv_rows(join(self.out("path"), BIC_TABLE_CSV))
        self.assertEqual(len(rows), 2)
        self.assertEqual(sum(int(row["selected"]) for row in rows), 1)
        self.assertTrue(exists(join(self.out("path"), COEFFICIENTS_CSV)))

    def test_export_graph(self):
        self.assertEqual(run_from_sources("export-graph", self.out("graph"), FIXTURE_RUN_JSON), EXIT_SUCCESS)
        manifest = self.read_json_file(join(self.out("graph"), MANIFEST_JSON))
        edges = self.read_csv_rows(join(self.out("graph"), GRAPH_CSV))
        self.assertEqual(len(edges), manifest["summary"]["n_edges"])
        self.assertTrue(all(int(row["i"]) < int(row["j"]) for row in edges))
        self.assertEqual(len(self.read_csv_rows(join(self.out("graph"), SCHEME_CSV))), manifest["summary"]["n_vertices"])

    def test_bad_configurations_exit_2_with_an_error_record(self):
        code = run_from_sources("fit", self.out("bad"), FIXTURE_RUN_JSON, {"lambda": -1.0, "seed": -4})
        self.assertEqual(code, EXIT_BAD_CONFIG)
        error = self.read_json_file(join(self.out("bad"), ERROR_JSON))
        self.assertEqual(error["type"], "RunConfigError")
        self.assertEqual(len(error["violations"]), 2)
        self.assertFalse(exists(join(self.out("bad"), MANIFEST_JSON)))

    @mock.patch("commands.handlers.fit", side_effect=RuntimeError("solver exploded"))
    def test_failures_exit_1_with_an_error_record(self, _fit):
        self.assertEqual(run_from_sources("fit", self.out("failed"), FIXTURE_RUN_JSON), EXIT_FAILURE)
        error = self.read_json_file(join(self.out("failed"), ERROR_JSON))
        self.assertEqual(error["type"], "RuntimeError")
        self.assert_present("solver exploded", error["message"])

    def test_simulate_fit_evaluate(self):
        scenario = self.write_json_file(self.out("scenario.json"),
                                        {"scenario": "2a", "scale": 1.0, "target_n": 80, "seed": 5})
        self.assertEqual(svci.main(["simulate", "-c", scenario, "-o", self.out("data")]), EXIT_SUCCESS)
        manifest = self.read_json_file(join(self.out("data"), MANIFEST_JSON))
        self.assertEqual(manifest["seed"], 5)
        self.assertEqual(manifest["scenario"]["n_points"], manifest["summary"]["n_points"])
        for name in (RUN_JSON, TRUTH_CSV, "points.csv", "nodes.csv", "edges.csv"):
            self.assertTrue(exists(join(self.out("data"), name)), name)

        code = svci.main(["fit", "-c", join(self.out("data"), RUN_JSON), "-o", self.out("fit"), "--lambda", "0.05"])
        self.assertEqual(code, EXIT_SUCCESS)
        self.assertEqual(self.read_json_file(join(self.out("fit"), RESULT_JSON))["graph"]["method"], "network_chain")

        code = svci.main([
            "evaluate", "--truth", join(self.out("data"), TRUTH_CSV),
            "--est", join(self.out("fit"), COEFFICIENTS_CSV), "-o", self.out("evaluation"),
        ])
        self.assertEqual(code, EXIT_SUCCESS)
        report = self.read_json_file(join(self.out("evaluation"), EVALUATION_JSON))
        self.assertGreaterEqual(report["mise"]["intercept"], 0.0)
        self.assertIn("mise_log_intensity", report)
        self.assertTrue(0.0 <= report["rand_index"]["intercept"] <= 1.0)
        self.assertIsNone(report["mise_beta"])

    def test_simulation_is_reproducible(self):
        scenario = self.write_json_file(self.out("scenario.json"),
                                        {"scenario": "2a", "scale": 1.0, "target_n": 40, "seed": 1})
        svci.main(["simulate", "-c", scenario, "-o", self.out("a")])
        svci.main(["simulate", "-c", scenario, "-o", self.out("b")])
        with open(join(self.out("a"), "points.csv")) as a, open(join(self.out("b"), "points.csv")) as b:
            self.assertEqual(a.read(), b.read())


class TestEvaluateTables(CommonTestCase):

    def setUp(self):
        super().setUp()
        self.locations = Locations([(0.25, 0.25), (0.75, 0.25), (0.25, 0.75), (0.75, 0.75)])
        self.truth = TruthTable(self.locations, np.full(4, 0.25), np.array([0, 0, 1, 1]), {
            "intercept": np.array([0.0, 0.0, 1.0, 1.0]),
            "z1": np.array([1.0, 1.0, 1.0, 1.0]),
            "log_intensity": np.array([0.5, 0.5, 1.5, 1.5]),
        })

    def test_a_perfect_estimate(self):
        estimate = CoefficientTable(self.locations, {
            "intercept": np.array([0.0, 0.0, 1.0, 1.0]),
            "z1": np.ones(4),
            "label_intercept": np.array([3.0, 3.0, 4.0, 4.0]),
            "log_intensity": np.array([0.5, 0.5, 1.5, 1.5]),
        })
        report = evaluate_tables(self.truth, estimate)
        self.assertEqual(report["mise"], {"intercept": 0.0, "z1": 0.0})
        self.assertEqual(report["mise_beta"], 0.0)
        self.assertEqual(report["mise_log_intensity"], 0.0)
        self.assertEqual(report["rand_index"], {"intercept": 1.0})

    def test_estimates_are_matched_to_the_nearest_row(self):
        estimate = CoefficientTable(Locations([(0.2, 0.2), (0.8, 0.6)]), {"intercept": np.array([0.0, 2.0])})
        report = evaluate_tables(self.truth, estimate)
        # cells 1 and 3 read the second row, cells 0 and 2 the first
        self.assertAlmostEqual(report["mise"]["intercept"], 0.25 * (0.0 + 4.0 + 1.0 + 1.0))

    def test_no_shared_columns(self):
        with self.assertRaises(EvaluationInputError):
            evaluate_tables(self.truth, CoefficientTable(self.locations, {"z9": np.zeros(4)}))


class TestRuntimeSettings(CommonTestCase):

    def tearDown(self):
        super().tearDown()
        with mock.patch.dict(os.environ, clear=False):
            os.environ.pop("SVCI_THREADS", None)
            importlib.reload(config.settings)
            importlib.reload(config)

    def test_bad_thread_counts_are_a_configuration_error(self):
        for value, message in (("many", "SVCI_THREADS must be an integer"), ("0", "SVCI_THREADS must be at least 1")):
            with mock.patch.dict(os.environ, {"SVCI_THREADS": value}):
                importlib.reload(config.settings)
                with self.assertRaises(BadRuntimeConfigurationError) as caught:
                    importlib.reload(config)
            self.assert_present(message, str(caught.exception))

    def test_thread_counts_are_converted(self):
        with mock.patch.dict(os.environ, {"SVCI_THREADS": " 3 "}):
            importlib.reload(config.settings)
            importlib.reload(config)
        self.assertEqual(config.settings.SVCI_THREADS, 3)

    @mock.patch("svci.load_runner", side_effect=BadRuntimeConfigurationError("\nSVCI_THREADS must be an integer"))
    def test_bad_runtime_settings_exit_2(self, _load_runner):
        with mock.patch("sys.stderr", new_callable=io.StringIO) as stderr:
            code = svci.main(["fit", "-c", FIXTURE_RUN_JSON, "-o", join(self.scratch, "unused")])
        self.assertEqual(code, EXIT_BAD_CONFIG)
        self.assert_present("SVCI_THREADS", stderr.getvalue())
