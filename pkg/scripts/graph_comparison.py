from constants.experiment_constants import ExperimentPreset
from services.experiments import graph_comparison, save_experiment

results = graph_comparison()
print(f"{'graph':>10} {'MISE beta':>10} {'fit (s)':>8}")
for name, summary in results.items():
    print(f"{name:>10} {summary['mean_mise_beta']:>10.4f} {summary['mean_fit_seconds']:>8.2f}")
save_experiment(ExperimentPreset.graph_comparison, results)
