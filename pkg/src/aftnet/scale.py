"""Intercept-only Weibull fit used to fix the scale before penalized fitting."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import ConvergenceError, DegenerateScaleError
from .survival_model import (ModelParams, SurvivalDataset, gradient,
                             neg_log_likelihood, observed_information)

LOG_SIGMA_FLOOR = -20.0
MAX_HALVINGS = 30


@dataclass(frozen=True)
class ScaleFit:
    mu_hat: float
    sigma_hat: float
    iterations: int
    converged: bool


def _intercept_only(data: SurvivalDataset) -> SurvivalDataset:
    return SurvivalDataset(np.ones((data.n, 1)), data.log_times, data.events)


def _objective(d1, mu, log_sigma):
    return neg_log_likelihood(ModelParams([mu], math.exp(log_sigma)), d1)


def _grad_hess(d1, mu, log_sigma):
    # chain rule from (mu, sigma) to (mu, log sigma)
    sigma = math.exp(log_sigma)
    params = ModelParams([mu], sigma)
    g = gradient(params, d1)
    H = observed_information(params, d1) / d1.n
    grad = np.array([g[0], sigma * g[1]])
    hess = np.array([
        [H[0, 0], sigma * H[0, 1]],
        [sigma * H[0, 1], sigma**2 * H[1, 1] + sigma * g[1]],
    ])
    return grad, hess


def estimate_sigma(data: SurvivalDataset, tol: float = 1e-8,
                   max_iter: int = 100) -> ScaleFit:
    """Maximum-likelihood ``(mu, sigma)`` of ``y_i = mu + sigma * eps_i``.

    Damped Newton on ``(mu, log sigma)`` with step halving.  Starts from the
    Gumbel moment match of the uncensored log-times.

    Raises
    ------
    DegenerateScaleError
        Fewer than two distinct event times, or ``log sigma`` drifting below
        ``-20``.
    ConvergenceError
        No convergence within ``max_iter`` Newton steps.
    """
    y_ev = data.log_times[data.events == 1]
    if np.unique(y_ev).size < 2:
        raise DegenerateScaleError(
            "degenerate scale: fewer than two distinct event times")
    d1 = _intercept_only(data)

    sd = float(np.std(y_ev, ddof=1))
    mu, log_sigma = float(np.mean(y_ev)), math.log(sd * math.sqrt(6) / math.pi)
    f = _objective(d1, mu, log_sigma)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        g, H = _grad_hess(d1, mu, log_sigma)
        if np.max(np.abs(g)) <= tol:
            converged = True
            it -= 1
            break
        try:
            np.linalg.cholesky(H)
            step = -np.linalg.solve(H, g)
        except np.linalg.LinAlgError:
            step = -g
        t = 1.0
        for _ in range(MAX_HALVINGS + 1):
            mu_new, ls_new = mu + t * step[0], log_sigma + t * step[1]
            f_new = _objective(d1, mu_new, ls_new)
            if f_new <= f:
                break
            t *= 0.5
        else:
            # no decrease possible at machine precision
            converged = bool(np.max(np.abs(g)) <= tol)
            break
        mu, log_sigma, f = mu_new, ls_new, f_new
        if log_sigma < LOG_SIGMA_FLOOR:
            raise DegenerateScaleError(
                f"degenerate scale: log sigma fell to {log_sigma:.3g}")
    else:
        g, _ = _grad_hess(d1, mu, log_sigma)
        if np.max(np.abs(g)) <= tol:
            converged = True
        else:
            raise ConvergenceError(
                f"scale fit did not converge in {max_iter} iterations "
                f"(|grad|_inf = {np.max(np.abs(g)):.3g})",
                last_iterate=(mu, math.exp(log_sigma)))
    return ScaleFit(mu_hat=mu, sigma_hat=math.exp(log_sigma),
                    iterations=it, converged=converged)
