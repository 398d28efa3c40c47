"""Bayesian estimation of single-country and pooled-panel VARs.

Coefficient matrices use the stacked layout ``B = [c'; A_1'; ...; A_p']``
of shape (k, n) with k = n*p + 1 (or n*p without a constant), so that a
design row ``x_t = [1, y_{t-1}', ..., y_{t-p}']`` predicts ``y_t' = x_t B``.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.linalg import cho_solve

from .errors import ConvergenceWarning, InsufficientObservations, NotPositiveDefinite, SchemaMismatch
from .linalg import RngStream, cholesky, sample_inverse_wishart, spectral_radius, symmetrize


@dataclass(frozen=True)
class NormalWishartPrior:
    """Conjugate prior: B | Sigma ~ MN(B0, Omega0, Sigma), Sigma ~ IW(S0, n + 2)."""

    overall_tightness: float = 0.1
    lag_decay: float = 1.0
    own_lag_mean: float = 1.0
    constant_variance: float = 1e6


@dataclass(frozen=True)
class MinnesotaPrior:
    """Independent normal prior on coefficients with Minnesota moments."""

    ar_coefficient: float = 0.8
    overall_tightness: float = 0.1
    cross_weight: float = 0.5
    lag_decay: float = 1.0
    constant_variance: float = 1e6


@dataclass(frozen=True)
class GibbsSettings:
    iterations: int = 12_000
    burn_in: int = 2_000

    def __post_init__(self):
        if not self.iterations > self.burn_in >= 0:
            raise ValueError("need iterations > burn_in >= 0")


@dataclass(frozen=True)
class VarSpec:
    variables: tuple
    lags: int = 2
    include_constant: bool = True
    prior: NormalWishartPrior | MinnesotaPrior = field(default_factory=NormalWishartPrior)
    gibbs: GibbsSettings = field(default_factory=GibbsSettings)
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        if self.lags < 1:
            raise ValueError("lags must be >= 1")
        if self.prior.overall_tightness <= 0:
            raise ValueError("overall tightness must be positive")

    @property
    def n(self) -> int:
        return len(self.variables)

    @property
    def k(self) -> int:
        return self.n * self.lags + int(self.include_constant)


@dataclass(frozen=True)
class PosteriorDraws:
    coefficients: np.ndarray  # (draws, k, n)
    covariances: np.ndarray  # (draws, n, n)
    spec: VarSpec
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.coefficients) != len(self.covariances):
            raise ValueError("coefficient and covariance draw counts differ")
        for a in (self.coefficients, self.covariances):
            a.setflags(write=False)

    def __len__(self) -> int:
        return len(self.coefficients)

    def lag_matrices(self, draw: int) -> list[np.ndarray]:
        return lag_matrices(self.coefficients[draw], self.spec.n, self.spec.lags, self.spec.include_constant)


def lag_matrices(coef: np.ndarray, n: int, p: int, include_constant: bool = True) -> list[np.ndarray]:
    """Split a stacked (k, n) coefficient matrix into [A_1, ..., A_p], each n x n."""
    off = int(include_constant)
    return [coef[off + j * n: off + (j + 1) * n, :].T for j in range(p)]


def stack_coefficients(lags_list, constant=None) -> np.ndarray:
    blocks = [np.asarray(a, dtype=float).T for a in lags_list]
    if constant is not None:
        blocks.insert(0, np.atleast_2d(np.asarray(constant, dtype=float)))
    return np.vstack(blocks)


# ------------------------------------------------------------------- design

def lagged_design(data: np.ndarray, p: int, include_constant: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Y (T-p, n) and X (T-p, np+c) for a single T x n block."""
    data = np.asarray(data, dtype=float)
    t, n = data.shape
    if t <= n * p + 1:
        raise InsufficientObservations(f"T={t} must exceed n*p+1={n * p + 1}")
    y = data[p:]
    cols = [data[p - j: t - j] for j in range(1, p + 1)]
    if include_constant:
        cols.insert(0, np.ones((t - p, 1)))
    return y, np.hstack(cols)


def stacked_design(blocks, p: int, include_constant: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Stack per-country designs vertically; coefficients are shared."""
    ys, xs = zip(*(lagged_design(b, p, include_constant) for b in blocks))
    return np.vstack(ys), np.vstack(xs)


def build_design(panel, spec: VarSpec, pooled: bool, countries=None) -> tuple[np.ndarray, np.ndarray]:
    """Regression matrices for one country or a pooled panel.

    The first variable of ``spec`` must be the panel's shock series.
    """
    if spec.variables[0] != panel.shock_name:
        raise SchemaMismatch(f"first VAR variable must be the shock {panel.shock_name!r}")
    countries = list(countries) if countries is not None else list(panel.countries)
    if pooled and len(countries) < 2:
        raise ValueError("pooled estimation needs at least two countries")
    if not pooled and len(countries) != 1:
        raise ValueError("single-country estimation needs exactly one country")
    blocks = [panel.country_block(c, spec.variables) for c in countries]
    return stacked_design(blocks, spec.lags, spec.include_constant)


# -------------------------------------------------------------------- prior

def ar_residual_scales(y: np.ndarray, x: np.ndarray, n: int, p: int, include_constant: bool = True) -> np.ndarray:
    """Residual sd of a univariate AR(p) per variable, fit on the VAR design."""
    off = int(include_constant)
    scales = np.empty(n)
    for i in range(n):
        cols = [off + j * n + i for j in range(p)]
        xi = x[:, ([0] if include_constant else []) + cols]
        coef, *_ = np.linalg.lstsq(xi, y[:, i], rcond=None)
        resid = y[:, i] - xi @ coef
        dof = max(len(resid) - xi.shape[1], 1)
        scales[i] = np.sqrt(resid @ resid / dof)
    if np.any(~(scales > 0)):
        raise NotPositiveDefinite("a univariate AR fit has zero residual variance")
    return scales


def prior_mean(spec: VarSpec) -> np.ndarray:
    n, off = spec.n, int(spec.include_constant)
    own = spec.prior.own_lag_mean if isinstance(spec.prior, NormalWishartPrior) else spec.prior.ar_coefficient
    b0 = np.zeros((spec.k, n))
    b0[off:off + n, :] = own * np.eye(n)
    return b0


def normal_wishart_moments(spec: VarSpec, scales: np.ndarray):
    """(B0, Omega0 diagonal, S0, nu0) for the conjugate prior."""
    pr = spec.prior
    n, p, off = spec.n, spec.lags, int(spec.include_constant)
    omega = np.empty(spec.k)
    if off:
        omega[0] = pr.constant_variance
    for lag in range(1, p + 1):
        for j in range(n):
            omega[off + (lag - 1) * n + j] = (pr.overall_tightness / (scales[j] * lag ** pr.lag_decay)) ** 2
    nu0 = n + 2
    s0 = (nu0 - n - 1) * np.diag(scales ** 2)
    return prior_mean(spec), omega, s0, nu0


def minnesota_prior_moments(spec: VarSpec, scales: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Prior mean and elementwise prior variance, both shaped like B (k, n).

    Variance of the lag-l coefficient on variable j in equation i is
    (l1 / l^l3)^2 when i == j and (l1 l2 s_i / (l^l3 s_j))^2 otherwise.
    """
    pr = spec.prior
    n, p, off = spec.n, spec.lags, int(spec.include_constant)
    scales = np.asarray(scales, dtype=float)
    var = np.empty((spec.k, n))
    if off:
        var[0, :] = pr.constant_variance
    for lag in range(1, p + 1):
        decay = lag ** pr.lag_decay
        for j in range(n):
            row = off + (lag - 1) * n + j
            for i in range(n):
                if i == j:
                    var[row, i] = (pr.overall_tightness / decay) ** 2
                else:
                    var[row, i] = (pr.overall_tightness * pr.cross_weight * scales[i] / (decay * scales[j])) ** 2
    b0 = np.zeros((spec.k, n))
    b0[off:off + n, :] = pr.ar_coefficient * np.eye(n)
    return b0, var


def conjugate_posterior(y, x, b0, omega0, s0, nu0):
    """Closed-form Normal-Wishart posterior (B_bar, Omega_bar, S_bar, nu_bar)."""
    omega0_inv = np.diag(1.0 / omega0)
    prec = omega0_inv + x.T @ x
    omega_bar = np.linalg.inv(prec)
    omega_bar = 0.5 * (omega_bar + omega_bar.T)
    b_bar = omega_bar @ (omega0_inv @ b0 + x.T @ y)
    s_bar = s0 + y.T @ y + b0.T @ omega0_inv @ b0 - b_bar.T @ prec @ b_bar
    return b_bar, omega_bar, 0.5 * (s_bar + s_bar.T), nu0 + len(y)


# --------------------------------------------------------------- estimation

def ols(y, x):
    coef, *_ = np.linalg.lstsq(x, y, rcond=None)
    resid = y - x @ coef
    dof = max(len(y) - x.shape[1], 1)
    return coef, resid.T @ resid / dof


def estimate(y, x, spec: VarSpec, rng: RngStream | None = None, scales=None) -> PosteriorDraws:
    """Gibbs sampler alternating coefficients | Sigma and Sigma | coefficients.

    ``scales`` are the per-variable residual sds feeding the prior; by default
    they come from univariate AR fits on the data. Retains
    ``iterations - burn_in`` draws.
    """
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    n, k = spec.n, spec.k
    if y.shape[1] != n or x.shape[1] != k or len(y) != len(x):
        raise ValueError(f"design shapes {y.shape}, {x.shape} do not match spec (n={n}, k={k})")
    rng = rng if rng is not None else RngStream(spec.seed)
    if scales is None:
        scales = ar_residual_scales(y, x, n, spec.lags, spec.include_constant)
    scales = np.asarray(scales, dtype=float)

    if isinstance(spec.prior, NormalWishartPrior):
        sampler = _NormalWishartGibbs(y, x, spec, scales)
    else:
        sampler = _IndependentGibbs(y, x, spec, scales)

    g = spec.gibbs
    kept = g.iterations - g.burn_in
    coefs = np.empty((kept, k, n))
    covs = np.empty((kept, n, n))
    sigma = sampler.initial_sigma()
    for it in range(g.iterations):
        try:
            b = sampler.draw_coefficients(sigma, rng)
            sigma = sampler.draw_sigma(b, rng)
        except NotPositiveDefinite as exc:
            raise NotPositiveDefinite(str(exc), iteration=it) from exc
        if it >= g.burn_in:
            coefs[it - g.burn_in] = b
            covs[it - g.burn_in] = sigma

    diagnostics = {
        "retained": kept,
        "explosive_draws": int(sum(stability(c, n, spec.lags, spec.include_constant) >= 1.0 for c in coefs)),
        "split_half_max": split_half_divergence(coefs.reshape(kept, -1)),
        "scales": scales.tolist(),
    }
    if diagnostics["split_half_max"] > 0.1:
        warnings.warn(
            f"split-half means differ by {diagnostics['split_half_max']:.3f} posterior sds",
            ConvergenceWarning, stacklevel=2,
        )
    return PosteriorDraws(coefs, covs, spec, diagnostics)


class _NormalWishartGibbs:
    def __init__(self, y, x, spec, scales):
        self.y, self.x = y, x
        self.b0, omega0, self.s0, self.nu0 = normal_wishart_moments(spec, scales)
        self.omega0_inv = np.diag(1.0 / omega0)
        self.b_bar, self.omega_bar, _, _ = conjugate_posterior(y, x, self.b0, omega0, self.s0, self.nu0)
        self.omega_chol = cholesky(self.omega_bar)
        self.t, self.k = x.shape

    def initial_sigma(self):
        if self.t > self.k:
            _, sigma = ols(self.y, self.x)
            try:
                cholesky(sigma)
                return sigma
            except NotPositiveDefinite:
                pass
        return self.s0 / max(self.nu0 - self.s0.shape[0] - 1, 1)

    def draw_coefficients(self, sigma, rng):
        z = rng.standard_normal(self.b_bar.shape)
        return self.b_bar + self.omega_chol @ z @ cholesky(sigma).T

    def draw_sigma(self, b, rng):
        resid = self.y - self.x @ b
        dev = b - self.b0
        scale = self.s0 + resid.T @ resid + dev.T @ self.omega0_inv @ dev
        return sample_inverse_wishart(scale, self.nu0 + self.t + self.k, rng)


class _IndependentGibbs:
    """Normal prior on vec(B) independent of an inverse-Wishart Sigma prior."""

    def __init__(self, y, x, spec, scales):
        self.y, self.x = y, x
        self.b0, var = minnesota_prior_moments(spec, scales)
        self.k, self.n = self.b0.shape
        # vec stacks B column by column, i.e. equation by equation
        self.v0_inv = 1.0 / var.T.ravel()
        self.v0_inv_b0 = self.v0_inv * self.b0.T.ravel()
        self.xtx = x.T @ x
        self.xty = x.T @ y
        self.nu0 = self.n + 2
        self.s0 = np.diag(scales ** 2)

    def initial_sigma(self):
        t, k = self.x.shape
        if t > k:
            _, sigma = ols(self.y, self.x)
            try:
                cholesky(sigma)
                return sigma
            except NotPositiveDefinite:
                pass
        return self.s0

    def draw_coefficients(self, sigma, rng):
        s_inv = np.linalg.inv(symmetrize(sigma))
        prec = np.kron(s_inv, self.xtx)
        prec[np.diag_indices_from(prec)] += self.v0_inv
        rhs = self.v0_inv_b0 + (self.xty @ s_inv).T.ravel()
        chol = cholesky(prec)
        mean = _chol_solve(chol, rhs)
        z = rng.standard_normal(len(rhs))
        # L' u = z gives u ~ N(0, prec^{-1})
        beta = mean + np.linalg.solve(chol.T, z)
        return beta.reshape(self.n, self.k).T

    def draw_sigma(self, b, rng):
        resid = self.y - self.x @ b
        return sample_inverse_wishart(self.s0 + resid.T @ resid, self.nu0 + len(self.y), rng)


def _chol_solve(chol, rhs):
    return cho_solve((chol, True), rhs)


def split_half_divergence(chain: np.ndarray) -> float:
    """Max |mean(first half) - mean(second half)| in posterior-sd units."""
    if len(chain) < 4:
        return 0.0
    half = len(chain) // 2
    sd = chain.std(axis=0)
    live = sd > 0
    if not live.any():
        return 0.0
    diff = np.abs(chain[:half].mean(axis=0) - chain[half:].mean(axis=0))
    return float(np.max(diff[live] / sd[live]))


def companion(coef: np.ndarray, n: int, p: int, include_constant: bool = True) -> np.ndarray:
    mats = lag_matrices(np.asarray(coef, dtype=float), n, p, include_constant)
    comp = np.zeros((n * p, n * p))
    comp[:n, :] = np.hstack(mats)
    comp[n:, :-n] = np.eye(n * (p - 1))
    return comp


def stability(coef: np.ndarray, n: int, p: int, include_constant: bool = True) -> float:
    """Spectral radius of the companion matrix; >= 1 means explosive."""
    coef = np.asarray(coef, dtype=float)
    if coef.shape != (n * p + int(include_constant), n):
        raise ValueError(f"coefficient shape {coef.shape} does not match n={n}, p={p}")
    return spectral_radius(companion(coef, n, p, include_constant))


def simulate_var(coef, sigma, t: int, rng: RngStream, burn: int = 200, include_constant: bool = True) -> np.ndarray:
    """Simulate T observations from a VAR with Gaussian innovations."""
    coef = np.asarray(coef, dtype=float)
    n = coef.shape[1]
    p = (coef.shape[0] - int(include_constant)) // n
    mats = lag_matrices(coef, n, p, include_constant)
    c = coef[0] if include_constant else np.zeros(n)
    shocks = rng.standard_normal((t + burn, n)) @ cholesky(sigma).T
    out = np.zeros((t + burn + p, n))
    for s in range(p, t + burn + p):
        out[s] = c + shocks[s - p] + sum(a @ out[s - j - 1] for j, a in enumerate(mats))
    return out[p + burn:]


# ------------------------------------------------------------- checkpoints

def save_draws(draws: PosteriorDraws, path) -> None:
    """CSV checkpoint: draw index, flattened coefficients, flattened covariance."""
    d, k, n = draws.coefficients.shape
    header = ["draw"] + [f"b_{i}_{j}" for i in range(k) for j in range(n)] + [f"s_{i}_{j}" for i in range(n) for j in range(n)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for i in range(d):
            row = np.concatenate([draws.coefficients[i].ravel(), draws.covariances[i].ravel()])
            w.writerow([i] + [repr(float(v)) for v in row])


def load_draws(path, spec: VarSpec) -> PosteriorDraws:
    data = np.loadtxt(Path(path), delimiter=",", skiprows=1, ndmin=2)
    k, n = spec.k, spec.n
    coefs = data[:, 1:1 + k * n].reshape(-1, k, n)
    covs = data[:, 1 + k * n:].reshape(-1, n, n)
    return PosteriorDraws(coefs, covs, spec)
