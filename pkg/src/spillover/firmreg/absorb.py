"""Fixed-effect absorption by alternating projections."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd

from ..errors import NoVariationLeft


@dataclass
class Absorbed:
    data: np.ndarray  # demeaned columns, rows restricted to ``keep``
    keep: np.ndarray  # boolean mask over input rows
    singletons: int
    iterations: int


def _codes(labels) -> np.ndarray:
    return pd.factorize(np.asarray(labels), use_na_sentinel=False)[0]


def singleton_mask(fe_codes: list[np.ndarray]) -> np.ndarray:
    """Rows to keep after iteratively dropping singleton groups in any FE set."""
    n = len(fe_codes[0]) if fe_codes else 0
    keep = np.ones(n, dtype=bool)
    changed = True
    while changed:
        changed = False
        for codes in fe_codes:
            counts = np.bincount(codes[keep], minlength=codes.max() + 1 if n else 0)
            single = keep & (counts[codes] == 1)
            if single.any():
                keep &= ~single
                changed = True
    return keep


def _group_demean(x: np.ndarray, codes: np.ndarray, ngroups: int, counts: np.ndarray) -> np.ndarray:
    sums = np.zeros((ngroups, x.shape[1]))
    np.add.at(sums, codes, x)
    return sums[codes] / counts[codes][:, None]


def absorb_fixed_effects(
    data,
    fe_sets,
    tol: float = 1e-8,
    max_iter: int = 100_000,
    drop_singletons: bool = True,
    check_columns=None,
) -> Absorbed:
    """Remove every fixed-effect set from each column of ``data``.

    Sweeps group demeaning over all sets until the largest change in a sweep
    falls below ``tol``. ``check_columns`` lists column indices (regressors)
    that must keep some variation; a column absorbed to numerical zero
    raises NoVariationLeft.
    """
    x = np.asarray(data, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    codes = [_codes(f) for f in fe_sets]
    keep = singleton_mask(codes) if drop_singletons else np.ones(len(x), dtype=bool)
    singletons = int((~keep).sum())
    x = x[keep].copy()
    groups = []
    for c in codes:
        c = _codes(c[keep])
        ng = int(c.max()) + 1 if len(c) else 0
        groups.append((c, ng, np.bincount(c, minlength=ng).astype(float)))

    scale = np.maximum(np.max(np.abs(x), axis=0, initial=0.0), 1.0)
    iterations = 0
    if groups and len(x):
        # one set is an exact projection; more sets need iteration
        limit = 1 if len(groups) == 1 else max_iter
        for iterations in range(1, limit + 1):
            start = x.copy()
            for c, ng, counts in groups:
                x -= _group_demean(x, c, ng, counts)
            if len(groups) == 1 or np.max(np.abs(x - start)) < tol:
                break

    if check_columns is not None:
        for j in check_columns:
            if np.max(np.abs(x[:, j]), initial=0.0) < 1e-10 * scale[j]:
                raise NoVariationLeft(f"column {j} is fully absorbed by the fixed effects")
    return Absorbed(x, keep, singletons, iterations)


def dummy_matrix(fe_sets, drop_first_after: int = 1) -> np.ndarray:
    """Explicit dummy columns for every FE set (reference category dropped after the first set)."""
    cols = []
    for s, labels in enumerate(fe_sets):
        c = _codes(labels)
        d = np.eye(int(c.max()) + 1)[c]
        cols.append(d if s < drop_first_after else d[:, 1:])
    return np.hstack(cols)
