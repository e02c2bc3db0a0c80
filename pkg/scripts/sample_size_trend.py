from constants.experiment_constants import ExperimentPreset
from services.experiments import sample_size_trend, save_experiment

results = sample_size_trend()
for size, summary in results.items():
    print(f"n={size:>6}: mean MISE log intensity {summary['mean_mise_log_intensity']:.4f}")
save_experiment(ExperimentPreset.sample_size_trend, results)
