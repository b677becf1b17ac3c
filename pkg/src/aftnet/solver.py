"""Proximal gradient (ISTA) solver for the network-penalized Weibull AFT model.

For a fixed scale ``sigma_hat`` the problem is::

    minimize_beta  -l(beta)/n + lam*alpha*||beta||_1 + lam*(1-alpha)*beta^T L beta

The smooth part ``f`` collects the likelihood and the Laplacian term; the
l1 term is handled by soft-thresholding.  The step parameter ``M`` (inverse
step size) only ever grows: it is inflated by backtracking until the
quadratic upper model of ``f`` holds at the candidate point, and it is kept
across iterations and across the lambdas of a path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp

from .exceptions import DimensionMismatchError, StepCollapseError
from .network import NetworkPrior, PenaltyConfig
from .survival_model import (EXP_OVERFLOW, SurvivalDataset, beta_hessian,
                             power_iteration, residuals)

_EPS = np.finfo(float).eps
# dense Laplacian matvecs beat CSR overhead up to this size
_DENSE_MAX_P = 1500


@dataclass(frozen=True)
class SolverOptions:
    """Convergence and step-size knobs.

    ``tol`` bounds the relative change ``||b+ - b|| / max(1, ||b||)``.
    ``m_init`` overrides the curvature-based initial step parameter.
    """

    max_iter: int = 2000
    tol: float = 1e-6
    m_init: Optional[float] = None
    backtrack_factor: float = 2.0
    max_backtracks: int = 60
    fit_intercept: bool = False
    penalize_intercept: bool = False
    standardize: bool = False

    def __post_init__(self):
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if not self.backtrack_factor > 1:
            raise ValueError("backtrack_factor must exceed 1")
        if self.m_init is not None and not self.m_init > 0:
            raise ValueError("m_init must be positive")


@dataclass(frozen=True)
class FitResult:
    beta_hat: np.ndarray
    lam: float
    alpha: float
    sigma_hat: float
    objective_trace: np.ndarray
    iterations: int
    converged: bool
    final_M: float
    intercept: float = 0.0

    @property
    def objective(self) -> float:
        return float(self.objective_trace[-1])

    @property
    def active_set(self) -> np.ndarray:
        return np.flatnonzero(self.beta_hat)

    def linear_predictor(self, X) -> np.ndarray:
        return np.asarray(X, dtype=float) @ self.beta_hat + self.intercept


@dataclass(frozen=True)
class SolutionPath:
    """Fits along a strictly decreasing lambda grid."""

    lambdas: np.ndarray
    fits: tuple
    alpha: float
    sigma_hat: float
    metadata: dict = field(default_factory=dict, compare=False)

    def __len__(self):
        return len(self.fits)

    def __iter__(self):
        return iter(zip(self.lambdas, self.fits))

    def __getitem__(self, k) -> FitResult:
        return self.fits[k]

    def coef_matrix(self) -> np.ndarray:
        """``(n_lambda, p)`` stack of coefficient vectors."""
        return np.vstack([f.beta_hat for f in self.fits])

    def fit_at(self, lam: float) -> FitResult:
        k = int(np.argmin(np.abs(self.lambdas - lam)))
        if not math.isclose(self.lambdas[k], lam, rel_tol=1e-12):
            raise KeyError(f"lambda {lam} is not on this path")
        return self.fits[k]


def soft_threshold(u, t):
    """Componentwise ``sign(u) * max(|u| - t, 0)``; ``t`` may be a vector."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("threshold must be nonnegative")
    u = np.asarray(u, dtype=float)
    return np.where(u > t, u - t, np.where(u < -t, u + t, 0.0))


class _Problem:
    """Design, outcome and penalty structure prepared once per dataset.

    Handles the optional intercept column and column scaling so that the core
    iteration only sees plain arrays.
    """

    def __init__(self, data: SurvivalDataset, prior: NetworkPrior,
                 sigma: float, opts: SolverOptions):
        if prior.p != data.p:
            raise DimensionMismatchError("network nodes vs feature columns",
                                         data.p, prior.p)
        if not (sigma > 0 and math.isfinite(sigma)):
            raise ValueError(f"sigma_hat must be positive, got {sigma}")
        self.sigma = float(sigma)
        self.p = data.p
        self.opts = opts
        X = data.features
        self.center = np.zeros(self.p)
        self.scale = np.ones(self.p)
        if opts.standardize:
            sd = X.std(axis=0)
            self.scale = np.where(sd > 0, sd, 1.0)
            if opts.fit_intercept:
                self.center = X.mean(axis=0)
            X = (X - self.center) / self.scale
        L = prior.laplacian
        if self.p <= _DENSE_MAX_P:
            L = L.toarray()
        self.lap_max = prior.max_eigenvalue()
        weights = np.ones(self.p)
        self.icpt = opts.fit_intercept
        if self.icpt:
            X = np.column_stack([np.ones(data.n), X])
            L = sp.block_diag([sp.csr_matrix((1, 1)), sp.csr_matrix(L)],
                              format="csr")
            if self.p <= _DENSE_MAX_P:
                L = L.toarray()
            weights = np.append(1.0 if opts.penalize_intercept else 0.0,
                                weights)
        self.X = np.ascontiguousarray(X)
        self.y = data.log_times
        self.delta = data.events
        self.L = L
        self.weights = weights
        n = data.n
        self.inv_n = 1.0 / n
        self.inv_sigma = 1.0 / self.sigma
        self.log_sigma_term = self.delta.sum() * math.log(self.sigma) / n
        self.Xt_scaled = np.ascontiguousarray(self.X.T) / (self.sigma * n)

    # coordinates: internal vector b <-> (intercept, beta) on original scale
    def to_internal(self, beta, intercept=None):
        b = np.asarray(beta, dtype=float) * self.scale
        if not self.icpt:
            return b
        if intercept is None:
            intercept = self.null_intercept()
        else:
            intercept = intercept + float(self.center @ beta)
        return np.append(intercept, b)

    def to_external(self, b):
        if self.icpt:
            beta = b[1:] / self.scale
            return beta, float(b[0] - self.center @ beta)
        return b / self.scale, 0.0

    def null_intercept(self):
        # closed-form intercept maximizing the likelihood at beta = 0
        s = self.sigma
        z = self.y / s
        zmax = z.max()
        return s * (zmax + math.log(np.exp(z - zmax).sum() / self.delta.sum()))

    def evaluate(self, b, lam, alpha):
        """Smooth objective plus the pieces its gradient reuses.

        Same quantity as :func:`aftnet.survival_model.nll_value`, inlined so
        that ``exp(e)`` is computed once per point.
        """
        e = (self.y - self.X @ b) * self.inv_sigma
        if e.max() > EXP_OVERFLOW:
            return math.inf, None, None
        ee = np.exp(e)
        val = (ee.sum() - self.delta @ e) * self.inv_n + self.log_sigma_term
        Lb = None
        if alpha < 1 and lam > 0:
            Lb = self.L @ b
            val += lam * (1 - alpha) * float(b @ Lb)
        return float(val), ee, Lb

    def gradient(self, ee, Lb, lam, alpha):
        grad = self.Xt_scaled @ (self.delta - ee)
        if Lb is not None:
            grad += 2.0 * lam * (1 - alpha) * Lb
        return grad

    def smooth_grad(self, b, lam, alpha):
        val, e, Lb = self.evaluate(b, lam, alpha)
        return val, self.gradient(e, Lb, lam, alpha)

    def l1(self, b, lam, alpha):
        return lam * alpha * float(self.weights @ np.abs(b))

    def initial_M(self, lam, alpha):
        if self.opts.m_init is not None:
            return float(self.opts.m_init)
        b0 = self.to_internal(np.zeros(self.p))
        e = residuals(self.X, self.y, b0, self.sigma)
        lik, ok = power_iteration(beta_hessian(self.X, e, self.sigma))
        if not ok:
            lik = float(np.linalg.norm(beta_hessian(self.X, e, self.sigma)))
        M = lik + 2.0 * lam * (1 - alpha) * self.lap_max
        return max(M, np.finfo(float).tiny)


def _shrink(u, t):
    # soft_threshold without validation; "+ 0.0" turns -0.0 into 0.0
    return np.sign(u) * np.maximum(np.abs(u) - t, 0.0) + 0.0


def _ista(problem: _Problem, lam, alpha, b, M, opts: SolverOptions):
    f, e, Lb = problem.evaluate(b, lam, alpha)
    if not math.isfinite(f):
        raise ValueError("objective is not finite at the initial point")
    g = problem.gradient(e, Lb, lam, alpha)
    thresh_w = lam * alpha * problem.weights
    trace = [f + problem.l1(b, lam, alpha)]
    converged = False
    it = 0
    for it in range(1, opts.max_iter + 1):
        n_back = 0
        while True:
            step = 1.0 / M
            b_new = _shrink(b - step * g, thresh_w * step)
            d = b_new - b
            with np.errstate(over="ignore"):
                dd = float(d @ d)
            f_new, e_new, Lb_new = problem.evaluate(b_new, lam, alpha)
            bound = f + float(g @ d) + 0.5 * M * dd
            # rounding slack of a few ulps of f so that a converged iterate
            # is not mistaken for a curvature violation
            if math.isfinite(f_new) and f_new <= bound + 4 * _EPS * abs(f):
                break
            M *= opts.backtrack_factor
            n_back += 1
            if n_back > opts.max_backtracks:
                raise StepCollapseError(
                    f"step collapse: backtracking exceeded "
                    f"{opts.max_backtracks} inflations (M = {M:.3g})")
        rel = math.sqrt(dd) / max(1.0, math.sqrt(float(b @ b)))
        b, f = b_new, f_new
        g = problem.gradient(e_new, Lb_new, lam, alpha)
        trace.append(f + problem.l1(b, lam, alpha))
        if rel <= opts.tol:
            converged = True
            break
    return b, np.array(trace), it, converged, M


def _validate_sigma(sigma_hat):
    if not (sigma_hat > 0 and math.isfinite(sigma_hat)):
        raise ValueError(f"sigma_hat must be positive, got {sigma_hat}")


def prox_grad_fit(data: SurvivalDataset, prior: NetworkPrior,
                  cfg: PenaltyConfig, sigma_hat: float,
                  beta_init=None, opts: Optional[SolverOptions] = None,
                  *, intercept_init: Optional[float] = None) -> FitResult:
    """Fit the penalized model at a single ``(lam, alpha)``.

    Parameters
    ----------
    data : SurvivalDataset
    prior : NetworkPrior
        Must have one node per feature column.
    cfg : PenaltyConfig
    sigma_hat : float
        Fixed Weibull scale, typically from :func:`aftnet.scale.estimate_sigma`.
    beta_init : array_like, optional
        Starting coefficients (default zero).
    opts : SolverOptions, optional

    Returns
    -------
    FitResult
        ``objective_trace[0]`` is the objective at the starting point.

    Raises
    ------
    StepCollapseError
        If a single line search needs more than ``opts.max_backtracks``
        inflations of ``M``.
    """
    opts = opts or SolverOptions()
    _validate_sigma(sigma_hat)
    problem = _Problem(data, prior, sigma_hat, opts)
    if beta_init is None:
        beta_init = np.zeros(data.p)
    beta_init = np.asarray(beta_init, dtype=float)
    if beta_init.shape != (data.p,):
        raise DimensionMismatchError("beta_init", data.p, beta_init.size)
    b0 = problem.to_internal(beta_init, intercept_init)
    M0 = problem.initial_M(cfg.lam, cfg.alpha)
    return _fit_one(problem, cfg.lam, cfg.alpha, b0, M0, opts)


def _fit_one(problem, lam, alpha, b0, M, opts):
    b, trace, it, conv, M = _ista(problem, lam, alpha, b0, M, opts)
    beta, icpt = problem.to_external(b)
    beta.setflags(write=False)
    trace.setflags(write=False)
    return FitResult(beta_hat=beta, lam=float(lam), alpha=float(alpha),
                     sigma_hat=problem.sigma, objective_trace=trace,
                     iterations=it, converged=conv, final_M=M,
                     intercept=icpt)


def _as_grid(grid) -> np.ndarray:
    values = getattr(grid, "values", grid)
    values = np.asarray(values, dtype=float).ravel()
    if values.size == 0:
        raise ValueError("lambda grid is empty")
    if np.any(values < 0):
        raise ValueError("lambda grid must be nonnegative")
    if np.any(np.diff(values) >= 0):
        raise ValueError("lambda grid must be strictly decreasing")
    return values


def fit_path(data: SurvivalDataset, prior: NetworkPrior, alpha: float,
             grid, sigma_hat: float, opts: Optional[SolverOptions] = None,
             beta_init=None) -> SolutionPath:
    """Warm-started fits over a strictly decreasing lambda grid.

    ``grid`` is a :class:`aftnet.selection.LambdaGrid` or any decreasing
    sequence.  The step parameter carried over from one lambda seeds the
    next.
    """
    opts = opts or SolverOptions()
    _validate_sigma(sigma_hat)
    lambdas = _as_grid(grid)
    PenaltyConfig(float(lambdas[0]), alpha)
    problem = _Problem(data, prior, sigma_hat, opts)
    if beta_init is None:
        beta_init = np.zeros(data.p)
    b = problem.to_internal(np.asarray(beta_init, dtype=float))
    M = problem.initial_M(float(lambdas[0]), alpha)
    fits = []
    for lam in lambdas:
        fit = _fit_one(problem, float(lam), alpha, b, M, opts)
        fits.append(fit)
        M = fit.final_M
        b = problem.to_internal(fit.beta_hat, fit.intercept)
    return SolutionPath(lambdas=lambdas, fits=tuple(fits), alpha=float(alpha),
                        sigma_hat=float(sigma_hat),
                        metadata={"n": data.n, "p": data.p})


def kkt_violation(data: SurvivalDataset, prior: NetworkPrior,
                  cfg: PenaltyConfig, sigma_hat: float, beta) -> float:
    """Largest violation of the composite problem's optimality conditions.

    For zero coordinates ``|grad_j| <= lam*alpha``; for nonzero coordinates
    ``grad_j + lam*alpha*sign(beta_j) = 0``.  No intercept.
    """
    problem = _Problem(data, prior, sigma_hat, SolverOptions())
    beta = np.asarray(beta, dtype=float)
    _, g = problem.smooth_grad(beta, cfg.lam, cfg.alpha)
    t = cfg.lam * cfg.alpha
    nz = beta != 0
    viol = np.where(nz, np.abs(g + t * np.sign(beta)),
                    np.maximum(np.abs(g) - t, 0.0))
    return float(viol.max()) if viol.size else 0.0
