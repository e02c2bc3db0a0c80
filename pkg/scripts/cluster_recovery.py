from constants.experiment_constants import ExperimentPreset
from services.experiments import cluster_recovery, save_experiment

results = cluster_recovery()
for name, value in results["mean_rand_index"].items():
    print(f"{name:>10}: mean rand index {value:.3f}")
print(f"mean MISE beta {results['mean_mise_beta']:.4f}")
save_experiment(ExperimentPreset.cluster_recovery, results)
