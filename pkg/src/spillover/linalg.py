"""Dense linear algebra and random sampling primitives.

Matrices are plain 2-D ``numpy`` float arrays. Randomness flows through
:class:`RngStream`, which derives an independent generator for every draw
from ``(seed, position)`` so that any draw can be reproduced in isolation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyInput, InvalidDegreesOfFreedom, NotPositiveDefinite, NotSymmetric

SYMMETRY_TOL = 1e-10


@dataclass
class RngStream:
    """Counter-based random stream.

    Every call to :meth:`generator` consumes one position. The generator
    handed out for position ``i`` depends only on ``(seed, i)``.
    """

    seed: int
    position: int = 0

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.position,))
        self.position += 1
        return np.random.Generator(np.random.PCG64(ss))

    def standard_normal(self, size) -> np.ndarray:
        return self.generator().standard_normal(size)

    def spawn(self, key: int) -> "RngStream":
        """Independent child stream, e.g. one per chain or per partition."""
        child = np.random.SeedSequence(entropy=self.seed, spawn_key=(2**32 + key,))
        return RngStream(int(child.generate_state(1, dtype=np.uint64)[0]))


def as_matrix(m) -> np.ndarray:
    a = np.atleast_2d(np.asarray(m, dtype=float))
    if a.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return a


def symmetrize(m: np.ndarray, tol: float = SYMMETRY_TOL) -> np.ndarray:
    """Return (M + M')/2 after checking M is symmetric to within ``tol``.

    The tolerance is relative to the largest entry so that large-scale
    covariance matrices are not rejected over round-off.
    """
    m = as_matrix(m)
    if m.shape[0] != m.shape[1]:
        raise NotSymmetric(f"matrix is not square: {m.shape}")
    scale = max(1.0, float(np.max(np.abs(m)))) if m.size else 1.0
    asym = float(np.max(np.abs(m - m.T))) if m.size else 0.0
    if asym > tol * scale:
        raise NotSymmetric(f"asymmetry {asym:.3g} exceeds tolerance")
    return 0.5 * (m + m.T)


def cholesky(m) -> np.ndarray:
    """Lower-triangular L with L @ L.T == M and a strictly positive diagonal."""
    s = symmetrize(m)
    n = s.shape[0]
    # explicit pivot check so the error names the failing pivot
    try:
        low = np.linalg.cholesky(s)
    except np.linalg.LinAlgError:
        low = None
    if low is None or not np.all(np.diag(low) > 0):
        pivot = _first_bad_pivot(s)
        raise NotPositiveDefinite(f"non-positive pivot at index {pivot} of {n}x{n} matrix")
    return low


def _first_bad_pivot(s: np.ndarray) -> int:
    for i in range(1, s.shape[0] + 1):
        if np.linalg.det(s[:i, :i]) <= 0:
            return i - 1
    return s.shape[0] - 1


def kronecker(a, b) -> np.ndarray:
    return np.kron(as_matrix(a), as_matrix(b))


def sample_matrix_normal(mean, row_cov, col_cov, rng: RngStream) -> np.ndarray:
    """One draw X ~ MN(mean, row_cov, col_cov), i.e. vec(X) ~ N(vec(mean), col_cov ⊗ row_cov).

    Degenerate (numerically zero) covariances return ``mean`` itself.
    """
    mean = as_matrix(mean)
    r, c = mean.shape
    row_chol = _chol_or_zero(row_cov)
    col_chol = _chol_or_zero(col_cov)
    z = rng.standard_normal((r, c))
    return mean + row_chol @ z @ col_chol.T


def _chol_or_zero(m) -> np.ndarray:
    m = as_matrix(m)
    if not np.any(m):
        return np.zeros_like(m)
    scale = float(np.max(np.abs(m)))
    # a pure scale factor does not change positive definiteness
    return cholesky(m / scale) * np.sqrt(scale)


def sample_inverse_wishart(scale, dof: float, rng: RngStream) -> np.ndarray:
    """One draw from IW(scale, dof) via the Bartlett decomposition.

    With W ~ Wishart(dof, scale^{-1}) the draw is W^{-1}, so the mean is
    scale / (dof - dim - 1) whenever dof > dim + 1.
    """
    s = symmetrize(scale)
    dim = s.shape[0]
    if not dof > dim - 1:
        raise InvalidDegreesOfFreedom(f"dof={dof} must exceed dim-1={dim - 1}")
    gen = rng.generator()
    # Bartlett factor A with W = (L A)(L A)', L = chol(scale^{-1})
    a = np.zeros((dim, dim))
    a[np.diag_indices(dim)] = np.sqrt(gen.chisquare(dof - np.arange(dim)))
    lower = np.tril_indices(dim, -1)
    a[lower] = gen.standard_normal(len(lower[0]))
    s_inv_chol = cholesky(np.linalg.inv(s))
    la = s_inv_chol @ a
    la_inv = np.linalg.solve(la, np.eye(dim))  # triangular, cheap at VAR sizes
    draw = la_inv.T @ la_inv
    return 0.5 * (draw + draw.T)


def quantiles(values, probs) -> np.ndarray:
    """Linear-interpolation quantiles (the common 'type 7' rule)."""
    v = np.asarray(values, dtype=float).ravel()
    if v.size == 0:
        raise EmptyInput("quantiles of an empty sample")
    p = np.asarray(probs, dtype=float)
    if np.any((p < 0) | (p > 1)):
        raise ValueError("probabilities must lie in [0, 1]")
    return np.quantile(v, p, method="linear")


def spectral_radius(m) -> float:
    m = as_matrix(m)
    if m.size == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvals(m))))
