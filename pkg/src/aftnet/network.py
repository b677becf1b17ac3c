"""Graph Laplacian priors and the network (ridge-on-edges) penalty."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .exceptions import DimensionMismatchError


@dataclass(frozen=True)
class PenaltyConfig:
    """``lam * (alpha * ||b||_1 + (1 - alpha) * b^T L b)``."""

    lam: float
    alpha: float

    def __post_init__(self):
        if not (self.lam >= 0 and math.isfinite(self.lam)):
            raise ValueError(f"lambda must be finite and >= 0, got {self.lam}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")


@dataclass(frozen=True)
class NetworkPrior:
    """Adjacency matrix ``A`` and its Laplacian ``L = D - A`` (CSR)."""

    adjacency: sp.csr_matrix
    laplacian: sp.csr_matrix
    node_names: Optional[tuple] = field(default=None, compare=False)

    @property
    def p(self) -> int:
        return self.adjacency.shape[0]

    @property
    def n_edges(self) -> int:
        return int(sp.triu(self.adjacency, k=1).nnz)

    def degrees(self) -> np.ndarray:
        return np.asarray(self.adjacency.sum(axis=1)).ravel()

    def max_eigenvalue(self) -> float:
        """Largest Laplacian eigenvalue, bounded by ``2 * max degree``.

        The Gershgorin bound is used rather than an eigensolver; it is only
        needed as a safe curvature estimate.
        """
        if self.p == 0:
            return 0.0
        return float(2.0 * self.degrees().max())

    def quadratic_form(self, beta) -> float:
        beta = np.asarray(beta, dtype=float)
        return float(beta @ (self.laplacian @ beta))


def empty_prior(p: int) -> NetworkPrior:
    return build_laplacian(sp.csr_matrix((p, p)))


def build_laplacian(adjacency, node_names=None) -> NetworkPrior:
    """Validate ``adjacency`` and pair it with ``L = D - A``.

    ``adjacency`` may be dense or any scipy sparse format.  It must be square,
    symmetric, have a zero diagonal and nonnegative entries.
    """
    A = sp.csr_matrix(adjacency, dtype=float)
    if A.shape[0] != A.shape[1]:
        raise ValueError(f"adjacency must be square, got {A.shape}")
    A.sum_duplicates()
    A.eliminate_zeros()
    A.sort_indices()
    if A.nnz and A.data.min() < 0:
        coo = A.tocoo()
        k = int(np.argmin(coo.data))
        raise ValueError(f"negative edge weight {coo.data[k]} at "
                         f"({coo.row[k]}, {coo.col[k]})")
    diff = (A - A.T).tocoo()
    bad = np.flatnonzero(diff.data != 0)
    if bad.size:
        order = np.lexsort((diff.col[bad], diff.row[bad]))
        k = bad[order[0]]
        raise ValueError(f"adjacency is not symmetric: first mismatch at "
                         f"({diff.row[k]}, {diff.col[k]})")
    if np.any(A.diagonal() != 0):
        i = int(np.flatnonzero(A.diagonal())[0])
        raise ValueError(f"adjacency has a self-loop at ({i}, {i})")
    deg = np.asarray(A.sum(axis=1)).ravel()
    L = (sp.diags(deg) - A).tocsr()
    L.sort_indices()
    if node_names is not None:
        node_names = tuple(str(s) for s in node_names)
        if len(node_names) != A.shape[0]:
            raise DimensionMismatchError("node_names", A.shape[0],
                                         len(node_names))
    return NetworkPrior(A, L, node_names)


def _check(beta, prior):
    beta = np.asarray(beta, dtype=float).ravel()
    if beta.shape[0] != prior.p:
        raise DimensionMismatchError("beta vs network nodes", prior.p,
                                     beta.shape[0])
    return beta


def penalty_value(beta, cfg: PenaltyConfig, prior: NetworkPrior) -> float:
    beta = _check(beta, prior)
    l1 = np.abs(beta).sum()
    quad = prior.quadratic_form(beta) if cfg.alpha < 1 else 0.0
    return float(cfg.lam * (cfg.alpha * l1 + (1.0 - cfg.alpha) * quad))


def smooth_penalty_gradient(beta, cfg: PenaltyConfig,
                            prior: NetworkPrior) -> np.ndarray:
    """Gradient of the quadratic part only, ``2 lam (1 - alpha) L beta``."""
    beta = _check(beta, prior)
    return 2.0 * cfg.lam * (1.0 - cfg.alpha) * (prior.laplacian @ beta)
