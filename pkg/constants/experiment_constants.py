class ExperimentPreset:
    scenario_2a_comparison = "scenario_2a_comparison"
    sample_size_trend = "sample_size_trend"
    cluster_recovery = "cluster_recovery"
    dummy_sensitivity = "dummy_sensitivity"
    graph_comparison = "graph_comparison"
    throughput = "throughput"


# cells of the grid that MISE values are integrated over.
EVALUATION_CELLS = 2500

# lambda path length used for BIC selection inside replicate batches.
REPLICATE_N_LAMBDA = 10

DEFAULT_REPLICATES = 10
SCENARIO_2A_REPLICATES = 20
SCENARIO_2A_TARGET_N = 800
SAMPLE_SIZES = (800, 2400)
CLUSTER_RECOVERY_TARGET_N = 1600

# nd as a multiple of the expected number of points: fewer, as many and more dummies than points.
DUMMY_RATIOS = (0.5, 1.0, 2.0)

# graphs compared on the same data: name, graph block.
GRAPH_VARIANTS = (
    ("mst", {"method": "mst"}),
    ("3-nn", {"method": "knn", "k": 3}),
    ("4-nn", {"method": "knn", "k": 4}),
    ("5-nn", {"method": "knn", "k": 5}),
    ("delaunay", {"method": "delaunay"}),
)

# the single lambda of a throughput run, as a fraction of the certified lambda_max.
THROUGHPUT_LAMBDA_FRACTION = 0.1

# experiment scripts write their summaries here, relative to the working directory.
EXPERIMENT_RESULTS_DIRECTORY = "experiment_results"
