"""
Anatomy of the synthetic regulatory network
===========================================

Build the overlapping topology, draw a large design and look at the
TF/gene correlations and the censoring calibration.
"""

import numpy as np

from aftnet.synthetic import (OVERLAPPING, ScenarioConfig, gen_design,
                              gen_network, gen_survival, gen_true_beta)

cfg = ScenarioConfig(topology=OVERLAPPING, r=6, p_active=20, seed=5)
prior, mmap = gen_network(cfg)
print(f"p = {prior.p}, edges = {prior.n_edges}")
print("degree of each TF:", prior.degrees()[list(mmap.tfs)])

X = gen_design(prior, mmap, cfg, n=10000)
for tfs, genes in mmap.groups[:3]:
    cond = X[:, list(tfs)].sum(axis=1) / np.sqrt(len(tfs))
    r = [np.corrcoef(cond, X[:, g])[0, 1] for g in genes]
    print([mmap.names[t] for t in tfs], np.round(r, 2))

truth = gen_true_beta(cfg, mmap)
y, d = gen_survival(X, truth, cfg)  # 30% target by default
print(f"censored fraction: {1 - d.mean():.3f}")
