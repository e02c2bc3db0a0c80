from constants.experiment_constants import ExperimentPreset
from services.experiments import save_experiment, scenario_2a_comparison

# piecewise constant network intensity, poisson against logistic composite likelihood, nd = n.
results = scenario_2a_comparison()
for kind, summary in results.items():
    print(f"{kind:>10}: mean MISE log intensity {summary['mean_mise_log_intensity']:.4f} "
          f"over {summary['replicates']} replicates ({summary['failures']} failed)")
save_experiment(ExperimentPreset.scenario_2a_comparison, results)
