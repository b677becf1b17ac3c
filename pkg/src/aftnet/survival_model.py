"""Weibull accelerated failure time likelihood for right-censored data.

On the log-time scale the model reads ``y_i = x_i^T beta + sigma * eps_i``
with ``eps_i`` standard Gumbel (minimum extreme value), so that
``T_i = exp(y_i)`` is Weibull with scale ``exp(x_i^T beta)`` and shape
``1 / sigma``.  With standardized residuals ``e_i = (y_i - x_i^T beta) / sigma``
the log-likelihood is::

    l(beta, sigma) = sum_i delta_i * (-log(sigma) + e_i) - exp(e_i)

Everything public here works in the normalized convention
``l_n = -l / n`` (a quantity to be *minimized*), except
:func:`observed_information`, whose entries are the raw ``-d^2 l`` values.
The two are related by ``hessian(l_n) = observed_information / n``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .exceptions import DimensionMismatchError

logger = logging.getLogger(__name__)

#: residuals above this threshold make ``exp(e_i)`` overflow-prone; any
#: evaluation touching one returns the +inf "diverged" sentinel.
EXP_OVERFLOW = 700.0


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SurvivalDataset:
    """Observed ``(y_i, delta_i, x_i)`` triples.

    Parameters
    ----------
    features : (n, p) array_like
        Design matrix, one row per subject.
    log_times : (n,) array_like
        ``y_i = min(log T_i, log C_i)``.
    events : (n,) array_like
        1 when the event was observed, 0 when censored.
    feature_names : sequence of str, optional
    """

    features: np.ndarray
    log_times: np.ndarray
    events: np.ndarray
    feature_names: Optional[tuple] = field(default=None, compare=False)

    def __post_init__(self):
        X = np.array(self.features, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        if X.ndim != 2:
            raise ValueError("features must be a 2-D matrix")
        y = np.array(self.log_times, dtype=float).ravel()
        d = np.array(self.events, dtype=float).ravel()
        n = X.shape[0]
        if y.shape[0] != n:
            raise DimensionMismatchError("log_times", n, y.shape[0])
        if d.shape[0] != n:
            raise DimensionMismatchError("events", n, d.shape[0])
        if not np.all((d == 0) | (d == 1)):
            raise ValueError("events must contain only 0 and 1")
        if not np.all(np.isfinite(y)):
            raise ValueError("log_times must be finite")
        if not np.all(np.isfinite(X)):
            raise ValueError("features must be finite")
        if d.sum() < 1:
            raise ValueError("at least one observed event is required "
                             "(all subjects are censored)")
        names = self.feature_names
        if names is not None:
            names = tuple(str(s) for s in names)
            if len(names) != X.shape[1]:
                raise DimensionMismatchError("feature_names", X.shape[1],
                                             len(names))
        object.__setattr__(self, "features", _frozen(X))
        object.__setattr__(self, "log_times", _frozen(y))
        object.__setattr__(self, "events", _frozen(d))
        object.__setattr__(self, "feature_names", names)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def p(self) -> int:
        return self.features.shape[1]

    def subset(self, index) -> "SurvivalDataset":
        index = np.asarray(index)
        return SurvivalDataset(self.features[index], self.log_times[index],
                               self.events[index], self.feature_names)

    def with_intercept(self) -> "SurvivalDataset":
        """Copy with a constant-1 column prepended."""
        X = np.column_stack([np.ones(self.n), self.features])
        names = None
        if self.feature_names is not None:
            names = ("(intercept)",) + self.feature_names
        return SurvivalDataset(X, self.log_times, self.events, names)


@dataclass(frozen=True)
class ModelParams:
    beta: np.ndarray
    sigma: float

    def __post_init__(self):
        beta = np.array(self.beta, dtype=float).ravel()
        if not np.all(np.isfinite(beta)):
            raise ValueError("beta entries must be finite")
        sigma = float(self.sigma)
        if not (sigma > 0 and math.isfinite(sigma)):
            raise ValueError(f"sigma must be positive and finite, got {sigma}")
        object.__setattr__(self, "beta", _frozen(beta))
        object.__setattr__(self, "sigma", sigma)

    @property
    def theta(self) -> np.ndarray:
        """Stacked ``(beta, sigma)`` vector."""
        return np.append(self.beta, self.sigma)


def _check_dims(params, data):
    if params.beta.shape[0] != data.p:
        raise DimensionMismatchError("beta vs feature columns", data.p,
                                     params.beta.shape[0])


# -- array-level kernels (used directly by the solvers) ----------------------

def residuals(X, y, beta, sigma, offset=0.0):
    return (y - X @ beta - offset) / sigma


def nll_value(e, delta, sigma):
    """``-l/n`` from precomputed residuals; +inf once any ``e_i`` overflows."""
    if e.max() > EXP_OVERFLOW:
        return math.inf
    n = e.shape[0]
    ll = np.dot(delta, e - math.log(sigma)) - np.exp(e).sum()
    return -ll / n


def nll_beta_gradient(X, e, delta, sigma):
    """Gradient of ``-l/n`` with respect to beta (length p)."""
    if e.max() > EXP_OVERFLOW:
        return np.full(X.shape[1], math.inf)
    w = np.exp(e) - delta
    return -(X.T @ w) / (sigma * e.shape[0])


def nll_sigma_derivative(e, delta, sigma):
    if e.max() > EXP_OVERFLOW:
        return math.inf
    s = np.dot(delta, -1.0 - e) + np.dot(np.exp(e), e)
    return -s / (sigma * e.shape[0])


# -- public dataset-level API ------------------------------------------------

def standardized_residuals(params: ModelParams,
                           data: SurvivalDataset) -> np.ndarray:
    """``e_i = (y_i - x_i^T beta) / sigma`` for every subject."""
    _check_dims(params, data)
    return residuals(data.features, data.log_times, params.beta, params.sigma)


def neg_log_likelihood(params: ModelParams, data: SurvivalDataset) -> float:
    """Normalized negative log-likelihood ``-l(beta, sigma) / n``.

    Returns ``math.inf`` (a diverged evaluation, not an exception) when any
    standardized residual exceeds :data:`EXP_OVERFLOW`.
    """
    e = standardized_residuals(params, data)
    return nll_value(e, data.events, params.sigma)


def gradient(params: ModelParams, data: SurvivalDataset) -> np.ndarray:
    """Gradient of :func:`neg_log_likelihood` in ``(beta, sigma)``.

    The first ``p`` entries are the beta components and the last is the sigma
    derivative.  Diverged evaluations are all ``+inf``.
    """
    e = standardized_residuals(params, data)
    if e.max() > EXP_OVERFLOW:
        return np.full(data.p + 1, math.inf)
    gb = nll_beta_gradient(data.features, e, data.events, params.sigma)
    gs = nll_sigma_derivative(e, data.events, params.sigma)
    return np.append(gb, gs)


def observed_information(params: ModelParams,
                         data: SurvivalDataset) -> np.ndarray:
    """Observed information ``-d^2 l`` in ``(beta, sigma)``, unnormalized.

    Block entries, with ``dl`` the raw (not normalized) score::

        I[j, k]         = sum_i x_ij x_ik exp(e_i) / sigma^2
        I[j, sigma]     = sum_i x_ij e_i exp(e_i) / sigma^2 + dl/dbeta_j / sigma
        I[sigma, sigma] = sum_i (e_i^2 exp(e_i) + delta_i) / sigma^2
                          + 2 dl/dsigma / sigma

    The raw score equals ``-n`` times :func:`gradient`.  Dividing the result
    by ``n`` gives the Hessian of :func:`neg_log_likelihood`.
    """
    e = standardized_residuals(params, data)
    p = data.p
    if e.max() > EXP_OVERFLOW:
        return np.full((p + 1, p + 1), math.inf)
    X, delta, sigma = data.features, data.events, params.sigma
    n = data.n
    ee = np.exp(e)
    raw_score = -n * np.append(nll_beta_gradient(X, e, delta, sigma),
                               nll_sigma_derivative(e, delta, sigma))
    info = np.empty((p + 1, p + 1))
    info[:p, :p] = (X.T * ee) @ X / sigma**2
    cross = X.T @ (e * ee) / sigma**2 + raw_score[:p] / sigma
    info[:p, p] = cross
    info[p, :p] = cross
    info[p, p] = (np.dot(e * e, ee) + delta.sum()) / sigma**2 \
        + 2.0 * raw_score[p] / sigma
    # the products above are not bitwise symmetric
    info[:p, :p] = 0.5 * (info[:p, :p] + info[:p, :p].T)
    return info


def beta_hessian(X, e, sigma):
    """Hessian of ``-l/n`` in beta alone: ``X^T diag(exp(e)) X / (n sigma^2)``."""
    ee = np.exp(np.minimum(e, EXP_OVERFLOW))
    H = (X.T * ee) @ X / (sigma**2 * X.shape[0])
    return 0.5 * (H + H.T)


def power_iteration(A, tol=1e-13, max_iter=10_000, seed=0):
    """Dominant eigenvalue of a symmetric PSD matrix.

    Returns ``(value, converged)``.  The start vector is drawn from a fixed
    seed so results are reproducible.
    """
    n = A.shape[0]
    v = np.random.default_rng(seed).standard_normal(n)
    v /= np.linalg.norm(v)
    value = 0.0
    for _ in range(max_iter):
        w = A @ v
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0, True
        new_value = float(v @ w)
        v = w / norm
        if abs(new_value - value) <= tol * abs(new_value):
            return new_value, True
        value = new_value
    return value, False


def lipschitz_bound(params: ModelParams, data: SurvivalDataset) -> float:
    """Largest eigenvalue of the beta-block of the information, divided by n.

    This bounds the local curvature of :func:`neg_log_likelihood` in beta and
    is used to seed the proximal gradient step parameter.  Should power
    iteration stall, the Frobenius norm (an upper bound) is returned and a
    warning is logged.
    """
    e = standardized_residuals(params, data)
    H = beta_hessian(data.features, e, params.sigma)
    value, converged = power_iteration(H)
    if not converged:
        fro = float(np.linalg.norm(H))
        logger.warning("power iteration did not converge; using Frobenius "
                       "bound %.6g instead of %.6g", fro, value)
        value = fro
    if not value > 0:
        # only possible for an all-zero design; keep the step finite
        value = np.finfo(float).tiny
    return float(value)
