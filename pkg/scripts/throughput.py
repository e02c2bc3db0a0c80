from constants.experiment_constants import ExperimentPreset
from services.experiments import save_experiment, throughput

results = throughput()
print(f"one fit, n={results['n_points']}, m={results['n_quadrature_points']}: {results['fit_seconds']:.2f}s "
      f"in {results['iterations']} iterations")
save_experiment(ExperimentPreset.throughput, results)
