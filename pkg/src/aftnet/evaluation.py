"""Estimation, selection and prediction metrics."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .exceptions import DimensionMismatchError, NoComparablePairsError


@dataclass(frozen=True)
class MetricsReport:
    emse: float
    pmse: float
    fnr: float
    fpr: float
    nsr: float
    n_false_negative: int
    n_false_positive: int
    n_selected: int
    p_active: int
    p: int

    def as_dict(self) -> dict:
        return asdict(self)


def selection_metrics(beta_hat, truth, X_test) -> MetricsReport:
    """Compare an estimate with the true coefficients.

    ``emse`` is the plain l2 distance ``||beta* - beta_hat||``; ``pmse`` is
    ``||X_test (beta* - beta_hat)||^2 / n_test``.  A coefficient counts as
    selected when it is exactly nonzero.
    """
    beta_star = np.asarray(getattr(truth, "beta_star", truth), dtype=float)
    beta_hat = np.asarray(beta_hat, dtype=float)
    X_test = np.asarray(X_test, dtype=float)
    p = beta_star.shape[0]
    if beta_hat.shape != (p,):
        raise DimensionMismatchError("beta_hat", p, beta_hat.size)
    if X_test.ndim != 2 or X_test.shape[1] != p:
        raise DimensionMismatchError("test feature columns", p,
                                     X_test.shape[-1])
    active = beta_star != 0
    p_active = int(active.sum())
    if p_active == 0 or p_active == p:
        raise ValueError("need 0 < p_active < p for FNR/FPR")
    selected = beta_hat != 0
    diff = beta_star - beta_hat
    fn = int(np.count_nonzero(~selected & active))
    fp = int(np.count_nonzero(selected & ~active))
    ns = int(np.count_nonzero(selected))
    lp = X_test @ diff
    return MetricsReport(
        emse=float(np.linalg.norm(diff)),
        pmse=float(lp @ lp / X_test.shape[0]),
        fnr=fn / p_active,
        fpr=fp / (p - p_active),
        nsr=ns / p,
        n_false_negative=fn,
        n_false_positive=fp,
        n_selected=ns,
        p_active=p_active,
        p=p,
    )


def selection_roc(path, truth):
    """(FPR, TPR) of the support along a path.

    One point per lambda in path order (decreasing lambda), with ``(0, 0)``
    prepended and ``(1, 1)`` appended.

    Returns
    -------
    points : (n_lambda + 2, 2) ndarray
    """
    beta_star = np.asarray(getattr(truth, "beta_star", truth), dtype=float)
    active = beta_star != 0
    n_act, n_inact = active.sum(), (~active).sum()
    fits = getattr(path, "fits", path)
    if len(fits) == 0:
        raise ValueError("path is empty")
    pts = [(0.0, 0.0)]
    for fit in fits:
        beta = np.asarray(getattr(fit, "beta_hat", fit))
        sel = beta != 0
        pts.append((np.count_nonzero(sel & ~active) / n_inact,
                    np.count_nonzero(sel & active) / n_act))
    pts.append((1.0, 1.0))
    return np.array(pts)


def roc_auc(points) -> float:
    """Trapezoidal area under ROC points, ordered by (FPR, TPR)."""
    pts = np.asarray(points, dtype=float)
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    pts = pts[order]
    return float(np.trapezoid(pts[:, 1], pts[:, 0]))


def c_index(risk_scores, times, events) -> float:
    """Harrell's concordance index.

    A pair ``(i, j)`` is comparable when ``i`` had an observed event strictly
    before ``t_j``.  It is concordant when ``risk_i > risk_j``; tied risks
    score one half.  For an AFT fit pass ``-X @ beta_hat`` as the risk.
    """
    r = np.asarray(risk_scores, dtype=float).ravel()
    t = np.asarray(times, dtype=float).ravel()
    d = np.asarray(events).ravel()
    if not r.size == t.size == d.size:
        raise DimensionMismatchError("risk/times/events lengths", r.size,
                                     (t.size, d.size))
    comparable = (d[:, None] == 1) & (t[:, None] < t[None, :])
    n_pairs = int(comparable.sum())
    if n_pairs == 0:
        raise NoComparablePairsError("no comparable pairs")
    diff = r[:, None] - r[None, :]
    score = np.where(diff > 0, 1.0, np.where(diff == 0, 0.5, 0.0))
    return float(score[comparable].sum() / n_pairs)
