from constants.experiment_constants import ExperimentPreset
from services.experiments import dummy_sensitivity, save_experiment

results = dummy_sensitivity()
for label, summary in results.items():
    print(f"{label:>8}: mean MISE log intensity {summary['mean_mise_log_intensity']:.4f}, "
          f"mean fit {summary['mean_fit_seconds']:.2f}s")
save_experiment(ExperimentPreset.dummy_sensitivity, results)
