"""File formats: CSV datasets, edge lists, and JSON results.

* features: headered CSV, one row per subject, one column per covariate;
* outcomes: headered CSV with ``time`` (original scale) and ``status``;
* network: edge list CSV ``source,target[,weight]`` (header optional), node
  names resolved against the feature header or given as 0-based indices;
* results and truths: JSON, with sparse coefficient maps ``{"index": value}``.

Floats are written with :func:`repr`, which round-trips doubles exactly.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
import warnings
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .exceptions import ParseError
from .network import NetworkPrior, build_laplacian
from .survival_model import SurvivalDataset

logger = logging.getLogger(__name__)


def _read_rows(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [row for row in csv.reader(fh) if row and any(c.strip() for c in row)]
    if not rows:
        raise ParseError(f"{path}: file is empty")
    return rows


def _to_float(cell, row, column):
    try:
        value = float(cell)
    except ValueError:
        raise ParseError(f"non-numeric value {cell!r}", row, column) from None
    if not math.isfinite(value):
        raise ParseError(f"non-finite value {cell!r}", row, column)
    return value


def read_matrix(path):
    """Headered numeric CSV -> (names, matrix)."""
    rows = _read_rows(path)
    header = [h.strip() for h in rows[0]]
    data = np.empty((len(rows) - 1, len(header)))
    for i, row in enumerate(rows[1:], start=1):
        if len(row) != len(header):
            raise ParseError(f"expected {len(header)} fields, got {len(row)}",
                             i, None)
        for j, cell in enumerate(row):
            data[i - 1, j] = _to_float(cell, i, header[j])
    return header, data


def load_dataset(features_path, outcomes_path, log_times=False) -> SurvivalDataset:
    """Read a features/outcomes CSV pair.

    ``time`` is log-transformed unless ``log_times`` is set, in which case the
    values are taken as log-times as they are.  Row numbers in errors count
    data rows from 1.
    """
    names, X = read_matrix(features_path)
    rows = _read_rows(outcomes_path)
    header = [h.strip().lower() for h in rows[0]]
    for col in ("time", "status"):
        if col not in header:
            raise ParseError(f"{outcomes_path}: missing column {col!r}")
    it, ist = header.index("time"), header.index("status")
    body = rows[1:]
    if len(body) != X.shape[0]:
        raise ParseError(f"row count mismatch: {X.shape[0]} feature rows vs "
                         f"{len(body)} outcome rows")
    y = np.empty(len(body))
    d = np.empty(len(body))
    for i, row in enumerate(body, start=1):
        if len(row) != len(header):
            raise ParseError(f"expected {len(header)} fields, got {len(row)}",
                             i, None)
        t = _to_float(row[it], i, "time")
        s = _to_float(row[ist], i, "status")
        if s not in (0.0, 1.0):
            raise ParseError(f"status must be 0 or 1, got {row[ist]!r}",
                             i, "status")
        if not log_times:
            if t <= 0:
                raise ParseError(f"time must be positive, got {row[it]!r} "
                                 f"(pass log_times for log-scale input)",
                                 i, "time")
            t = math.log(t)
        y[i - 1], d[i - 1] = t, s
    return SurvivalDataset(X, y, d, names)


def write_dataset(data: SurvivalDataset, features_path, outcomes_path):
    names = data.feature_names or tuple(f"x{j + 1}" for j in range(data.p))
    with open(features_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for row in data.features:
            w.writerow([repr(float(v)) for v in row])
    with open(outcomes_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["time", "status"])
        for y, d in zip(data.log_times, data.events):
            w.writerow([repr(math.exp(y)), int(d)])


def _resolve(token, lookup, p):
    token = token.strip()
    if token in lookup:
        return lookup[token]
    try:
        k = int(token)
    except ValueError:
        return None
    return k if 0 <= k < p else None


def load_adjacency(path, feature_names) -> NetworkPrior:
    """Edge list -> :class:`NetworkPrior` over ``feature_names``.

    Edges are symmetrized and deduplicated; listing an edge once is enough.
    Self-loops are dropped, each with a :class:`UserWarning`.
    """
    names = [str(s) for s in feature_names]
    lookup = {s: j for j, s in enumerate(names)}
    p = len(names)
    rows = _read_rows(path)
    edges = {}
    n_loops = 0
    for i, row in enumerate(rows, start=1):
        if len(row) not in (2, 3):
            raise ParseError(f"edge lines need 2 or 3 fields, got {len(row)}",
                             i, None)
        a, b = _resolve(row[0], lookup, p), _resolve(row[1], lookup, p)
        if a is None or b is None:
            if i == 1:
                continue  # header line
            bad = row[0] if a is None else row[1]
            raise ParseError(f"unknown node {bad.strip()!r}", i,
                             "source" if a is None else "target")
        w = 1.0 if len(row) == 2 else _to_float(row[2], i, "weight")
        if w < 0:
            raise ParseError(f"negative edge weight {w}", i, "weight")
        if a == b:
            n_loops += 1
            warnings.warn(f"{path}: dropped self-loop on {names[a]!r} "
                          f"(line {i})", UserWarning, stacklevel=2)
            continue
        key = (min(a, b), max(a, b))
        if key in edges and edges[key] != w:
            raise ParseError(f"conflicting weights for edge "
                             f"({names[key[0]]}, {names[key[1]]})", i, "weight")
        edges[key] = w
    if n_loops:
        logger.warning("%s: dropped %d self-loop(s)", path, n_loops)
    if edges:
        keys = sorted(edges)
        r, c = np.array(keys).T
        w = np.array([edges[k] for k in keys])
        A = sp.coo_matrix((np.concatenate([w, w]),
                           (np.concatenate([r, c]), np.concatenate([c, r]))),
                          shape=(p, p))
    else:
        A = sp.csr_matrix((p, p))
    return build_laplacian(A, names)


def write_edge_list(prior: NetworkPrior, path):
    names = prior.node_names or tuple(str(j) for j in range(prior.p))
    upper = sp.triu(prior.adjacency, k=1).tocoo()
    order = np.lexsort((upper.col, upper.row))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["source", "target", "weight"])
        for k in order:
            w.writerow([names[upper.row[k]], names[upper.col[k]],
                        repr(float(upper.data[k]))])


def sparse_beta(beta) -> dict:
    beta = np.asarray(beta, dtype=float)
    return {str(int(j)): float(beta[j]) for j in np.flatnonzero(beta)}


def dense_beta(mapping, p) -> np.ndarray:
    beta = np.zeros(p)
    for k, v in mapping.items():
        beta[int(k)] = float(v)
    return beta


def fit_to_json(fit) -> dict:
    return {
        "lambda": fit.lam,
        "alpha": fit.alpha,
        "sigma_hat": fit.sigma_hat,
        "intercept": fit.intercept,
        "beta": sparse_beta(fit.beta_hat),
        "iterations": fit.iterations,
        "converged": fit.converged,
        "objective": fit.objective,
        "final_M": fit.final_M,
    }


def write_json(obj, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, indent=2, allow_nan=True)
        fh.write("\n")


def read_json(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def load_result(path):
    """Read a result JSON.

    Returns
    -------
    beta : ndarray
        Coefficients at the reported (selected) lambda.
    path_betas : list of ndarray
        One vector per lambda when the file carries a path, else empty.
    doc : dict
        The raw document.
    """
    doc = read_json(path)
    p = int(doc["p"])
    beta = dense_beta(doc["beta"], p)
    path_betas = [dense_beta(f["beta"], p) for f in doc.get("path", [])]
    return beta, path_betas, doc


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()
