class Command:
    simulate = "simulate"
    fit = "fit"
    path = "path"
    evaluate = "evaluate"
    export_graph = "export-graph"
    
    @classmethod
    def values(cls):
        return [cls.simulate, cls.fit, cls.path, cls.evaluate, cls.export_graph]


# output artifact names
RESULT_JSON = "result.json"
PATH_JSON = "path.json"
COEFFICIENTS_CSV = "coefficients.csv"
BIC_TABLE_CSV = "bic_table.csv"
TRACE_CSV = "trace.csv"
SCHEME_CSV = "scheme.csv"
GRAPH_CSV = "graph_edges.csv"
MANIFEST_JSON = "manifest.json"
ERROR_JSON = "error.json"
EVALUATION_JSON = "evaluation.json"
POINTS_CSV = "points.csv"
TRUTH_CSV = "truth.csv"
RUN_JSON = "run.json"
NODES_CSV = "nodes.csv"
EDGES_CSV = "edges.csv"
WINDOW_JSON = "window.json"

EXIT_SUCCESS = 0
EXIT_FAILURE = 1
EXIT_BAD_CONFIG = 2
