"""
Weibull AFT likelihood on a toy dataset
=======================================

Evaluate the normalized negative log-likelihood, its gradient and the
observed information, and check the gradient against finite differences.
"""

import numpy as np

from aftnet import ModelParams, SurvivalDataset, gradient, neg_log_likelihood
from aftnet.survival_model import observed_information

rng = np.random.default_rng(0)
X = rng.normal(size=(8, 2))
y = X @ np.array([0.5, -0.3]) + np.log(rng.exponential(size=8))
events = np.array([1, 1, 0, 1, 1, 0, 1, 1])
data = SurvivalDataset(X, y, events)

params = ModelParams(beta=[0.4, -0.2], sigma=1.1)
print("nll:", neg_log_likelihood(params, data))
print("gradient (beta..., sigma):", gradient(params, data))

# central differences on the sigma coordinate
h = 1e-6
up = neg_log_likelihood(ModelParams(params.beta, params.sigma + h), data)
down = neg_log_likelihood(ModelParams(params.beta, params.sigma - h), data)
print("d/dsigma by finite differences:", (up - down) / (2 * h))

# information of the raw log-likelihood; divide by n for the normalized one
print(observed_information(params, data) / data.n)
