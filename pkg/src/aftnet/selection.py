"""Lambda grids and K-fold selection by cross-validated linear predictors.

The CV criterion pools the held-out standardized residuals of all folds and
plugs them into the Weibull negative log-likelihood (with the scale held at
the full-data estimate), then picks the lambda minimizing it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .exceptions import AFTNetError, InfeasibleFoldError, NullProblemError
from .network import NetworkPrior, empty_prior
from .scale import ScaleFit, estimate_sigma
from .solver import SolutionPath, SolverOptions, _Problem, fit_path
from .survival_model import EXP_OVERFLOW, SurvivalDataset


@dataclass(frozen=True)
class LambdaGrid:
    values: np.ndarray
    lambda_max: float
    lambda_min: float
    n_lambda: int
    min_ratio: float

    def __len__(self):
        return self.n_lambda

    def __iter__(self):
        return iter(self.values)


@dataclass(frozen=True)
class CvReport:
    lambda_opt: float
    cv_curve: np.ndarray
    fold_assignment: np.ndarray
    seed: int
    lambdas: np.ndarray

    @property
    def index_opt(self) -> int:
        return int(np.flatnonzero(self.lambdas == self.lambda_opt)[0])


def lambda_max(data: SurvivalDataset, alpha: float, sigma_hat: float,
               opts: Optional[SolverOptions] = None) -> float:
    """Smallest lambda for which the zero vector solves the penalized problem."""
    if not 0 < alpha <= 1:
        raise ValueError(f"alpha must lie in (0, 1] for a finite lambda_max, "
                         f"got {alpha}")
    opts = opts or SolverOptions()
    problem = _Problem(data, empty_prior(data.p), sigma_hat, opts)
    b0 = problem.to_internal(np.zeros(data.p))
    _, g = problem.smooth_grad(b0, 0.0, alpha)
    gmax = float(np.max(np.abs(g[problem.weights > 0]), initial=0.0))
    if not gmax > 0:
        raise NullProblemError("null problem: likelihood gradient vanishes "
                               "at the origin (lambda_max = 0)")
    lam = gmax / alpha
    # round up so that lam * alpha >= gmax holds exactly in floating point
    while lam * alpha < gmax:
        lam = math.nextafter(lam, math.inf)
    return lam


def make_lambda_grid(data: SurvivalDataset, alpha: float, sigma_hat: float,
                     n_lambda: int = 50, min_ratio: float = 0.01,
                     opts: Optional[SolverOptions] = None) -> LambdaGrid:
    """Log10-equispaced grid from ``lambda_max`` down to ``min_ratio * lambda_max``."""
    if not 0 < min_ratio < 1:
        raise ValueError(f"min_ratio must lie in (0, 1), got {min_ratio}")
    if n_lambda < 1:
        raise ValueError("n_lambda must be >= 1")
    lmax = lambda_max(data, alpha, sigma_hat, opts)
    return grid_from_endpoints(lmax, n_lambda, min_ratio)


def grid_from_endpoints(lmax: float, n_lambda: int = 50,
                        min_ratio: float = 0.01) -> LambdaGrid:
    lmin = min_ratio * lmax
    if n_lambda == 1:
        values = np.array([lmax])
    else:
        values = 10.0 ** np.linspace(math.log10(lmax), math.log10(lmin),
                                     n_lambda)
        values[0], values[-1] = lmax, lmin
    values.setflags(write=False)
    return LambdaGrid(values=values, lambda_max=lmax, lambda_min=float(values[-1]),
                      n_lambda=n_lambda, min_ratio=min_ratio)


def assign_folds(events, K: int, seed: int, stratified: bool = True):
    """Seeded fold labels in ``0..K-1`` with sizes differing by at most one.

    With ``stratified`` the events and the censored subjects are each shuffled
    and dealt round-robin, so both are spread evenly over the folds.
    """
    events = np.asarray(events)
    n = events.shape[0]
    if K < 2:
        raise ValueError("K must be >= 2")
    if K > n:
        raise ValueError(f"K = {K} exceeds the number of subjects ({n})")
    rng = np.random.default_rng(seed)
    if stratified:
        groups = [np.flatnonzero(events == 1), np.flatnonzero(events == 0)]
    else:
        groups = [np.arange(n)]
    folds = np.empty(n, dtype=int)
    start = 0
    for idx in groups:
        idx = rng.permutation(idx)
        folds[idx] = (start + np.arange(idx.size)) % K
        start = (start + idx.size) % K
    return folds


def cv_criterion(e_cv, events, sigma_hat) -> float:
    """``-sum_i [delta_i (-log sigma + e_i) - exp(e_i)]`` on pooled residuals."""
    e_cv = np.asarray(e_cv, dtype=float)
    if e_cv.max() > EXP_OVERFLOW:
        return math.inf
    return float(-(np.dot(events, e_cv - math.log(sigma_hat))
                   - np.exp(e_cv).sum()))


def _annotate(exc, where):
    new = type(exc).__new__(type(exc))
    new.args = (f"{where}: {exc}",)
    new.__dict__.update(getattr(exc, "__dict__", {}))
    return new


def cv_pl(data: SurvivalDataset, prior: NetworkPrior, alpha: float, grid,
          K: int = 5, sigma_hat: float = None,
          opts: Optional[SolverOptions] = None, seed: int = 0,
          stratified: bool = True) -> CvReport:
    """Select lambda by K-fold cross-validated linear predictors.

    Each fold refits the whole (warm-started) path on the remaining folds
    with the same ``sigma_hat`` and grid.  Ties in the CV curve go to the
    larger lambda.
    """
    if sigma_hat is None:
        raise ValueError("sigma_hat is required")
    lambdas = np.asarray(getattr(grid, "values", grid), dtype=float)
    folds = assign_folds(data.events, K, seed, stratified)
    n = data.n
    residual = np.empty((lambdas.size, n))
    for k in range(K):
        test = np.flatnonzero(folds == k)
        train = np.flatnonzero(folds != k)
        if data.events[train].sum() < 1:
            raise InfeasibleFoldError(
                f"infeasible fold {k}: its training part has no events; "
                f"use fewer folds or stratified assignment")
        try:
            path = fit_path(data.subset(train), prior, alpha, lambdas,
                            sigma_hat, opts)
        except AFTNetError as exc:
            raise _annotate(exc, f"fold {k}") from exc
        Xt, yt = data.features[test], data.log_times[test]
        for j, fit in enumerate(path.fits):
            residual[j, test] = (yt - fit.linear_predictor(Xt)) / sigma_hat
    curve = np.array([cv_criterion(r, data.events, sigma_hat)
                      for r in residual])
    curve.setflags(write=False)
    best = int(np.argmin(curve))
    return CvReport(lambda_opt=float(lambdas[best]), cv_curve=curve,
                    fold_assignment=folds, seed=seed, lambdas=lambdas)


@dataclass(frozen=True)
class AFTNetFit:
    """Everything produced by :func:`fit_aftnet`."""

    scale: ScaleFit
    grid: LambdaGrid
    cv: CvReport
    path: SolutionPath

    @property
    def best(self):
        return self.path.fits[self.cv.index_opt]

    @property
    def beta_hat(self) -> np.ndarray:
        return self.best.beta_hat


def fit_aftnet(data: SurvivalDataset, prior: NetworkPrior, alpha: float = 0.5,
               n_lambda: int = 50, min_ratio: float = 0.01, K: int = 5,
               seed: int = 0, opts: Optional[SolverOptions] = None,
               stratified: bool = True) -> AFTNetFit:
    """Two-step estimator: scale from an intercept-only fit, then CV over a path.

    The full-data path is refit on all of ``data``; ``result.best`` is the fit
    at the selected lambda.
    """
    scale = estimate_sigma(data)
    grid = make_lambda_grid(data, alpha, scale.sigma_hat, n_lambda, min_ratio,
                            opts)
    report = cv_pl(data, prior, alpha, grid, K, scale.sigma_hat, opts, seed,
                   stratified)
    path = fit_path(data, prior, alpha, grid, scale.sigma_hat, opts)
    return AFTNetFit(scale=scale, grid=grid, cv=report, path=path)
