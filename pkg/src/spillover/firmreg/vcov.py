"""One- and two-way cluster-robust covariance matrices."""

from __future__ import annotations

import warnings

import numpy as np
import pandas as pd

from ..errors import FewerClustersThanRegressors


def _bread(x: np.ndarray) -> np.ndarray:
    return np.linalg.inv(x.T @ x)


def _meat(scores: np.ndarray, labels) -> tuple[np.ndarray, int]:
    codes, uniques = pd.factorize(np.asarray(labels), use_na_sentinel=False)
    g = len(uniques)
    summed = np.zeros((g, scores.shape[1]))
    np.add.at(summed, codes, scores)
    return summed.T @ summed, g


def one_way(x: np.ndarray, resid: np.ndarray, labels, bread: np.ndarray | None = None) -> tuple[np.ndarray, int]:
    """Sandwich with cluster-summed scores and the G/(G-1)*(N-1)/(N-K) factor."""
    n, k = x.shape
    bread = _bread(x) if bread is None else bread
    meat, g = _meat(x * resid[:, None], labels)
    if g <= 1:
        raise ValueError("need at least two clusters")
    factor = g / (g - 1) * (n - 1) / (n - k)
    v = factor * bread @ meat @ bread
    return 0.5 * (v + v.T), g


def clustered_vcov(x, resid, clusters) -> tuple[np.ndarray, dict]:
    """Cluster-robust covariance of OLS coefficients.

    ``clusters`` is one label array or a pair of them. With two dimensions
    the Cameron-Gelbach-Miller combination V_a + V_b - V_ab is used; if that
    leaves a negative diagonal entry it is floored at the larger one-way
    variance and ``info['floored']`` is set.
    """
    x = np.asarray(x, dtype=float)
    resid = np.asarray(resid, dtype=float).ravel()
    if isinstance(clusters, (list, tuple)) and len(clusters) == 2 and np.ndim(clusters[0]) == 1:
        dims = [np.asarray(c) for c in clusters]
    else:
        dims = [np.asarray(clusters)]
    for d in dims:
        if len(d) != len(x):
            raise ValueError("cluster labels must cover every row")
    bread = _bread(x)
    k = x.shape[1]
    info = {"floored": False}
    if len(dims) == 1:
        v, g = one_way(x, resid, dims[0], bread)
        info["clusters"] = [g]
    else:
        inter = pd.MultiIndex.from_arrays(dims).factorize()[0]
        va, ga = one_way(x, resid, dims[0], bread)
        vb, gb = one_way(x, resid, dims[1], bread)
        if len(np.unique(inter)) > 1:
            vab, gab = one_way(x, resid, inter, bread)
        else:
            vab, gab = np.zeros_like(va), 1
        v = va + vb - vab
        info["clusters"] = [ga, gb, gab]
        diag = np.diag(v).copy()
        neg = diag < 0
        if neg.any():
            idx = np.flatnonzero(neg)
            v[idx, idx] = np.maximum(np.diag(va), np.diag(vb))[idx]
            info["floored"] = True
        g = min(ga, gb)
    if g < k:
        warnings.warn(f"{g} clusters for {k} regressors", FewerClustersThanRegressors, stacklevel=2)
    info["min_clusters"] = g
    return v, info
