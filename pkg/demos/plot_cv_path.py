"""
Regularization path and cross-validated lambda
==============================================

Simulate one benchmark replication, trace the path over the default
50-point grid, pick lambda by K-fold CV-PL and score the result.
"""

import numpy as np

from aftnet import ScenarioConfig, fit_aftnet, simulate_scenario
from aftnet.evaluation import c_index, roc_auc, selection_metrics, selection_roc

cfg = ScenarioConfig.preset("weak", sigma=1.0, seed=3)
train, test, prior, truth = simulate_scenario(cfg)
print(f"train {train.features.shape}, test {test.features.shape}, "
      f"{prior.n_edges} edges, {int(train.events.sum())} training events")

fit = fit_aftnet(train, prior, alpha=0.5, seed=cfg.seed)
sizes = [f.active_set.size for f in fit.path.fits]
print("support size every 10th lambda:", sizes[::10])
print(f"lambda_opt = {fit.cv.lambda_opt:.4f} (index {fit.cv.index_opt})")

m = selection_metrics(fit.beta_hat, truth, test.features)
print({k: round(v, 3) for k, v in m.as_dict().items() if isinstance(v, float)})
print("selection ROC AUC:", round(roc_auc(selection_roc(fit.path, truth)), 3))
risk = -(test.features @ fit.beta_hat)
print("test c-index:", round(c_index(risk, test.log_times, test.events), 3))
