"""Recursive (Cholesky) identification and impulse responses with credible bands."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from . import bvar
from .errors import DegenerateNormalization, SchemaMismatch
from .linalg import RngStream, cholesky

SUMMARY_COLUMNS = ("median", "p16", "p84", "p05", "p95")
NORMALIZATION_FLOOR = 1e-12


@dataclass(frozen=True)
class IrfSpec:
    target_variable: str
    horizon: int = 48
    shock_index: int = 0
    target_response: float = 0.5
    band_probs: tuple = (0.68, 0.90)

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.shock_index != 0:
            raise ValueError("the shock must be ordered first (shock_index 0)")

    @property
    def quantile_levels(self) -> np.ndarray:
        inner, outer = self.band_probs
        return np.array([0.5, (1 - inner) / 2, (1 + inner) / 2, (1 - outer) / 2, (1 + outer) / 2])


@dataclass
class IrfResult:
    variables: tuple
    responses: np.ndarray  # (draws, horizon + 1, n), normalized
    summary: np.ndarray  # (horizon + 1, n, 5) in SUMMARY_COLUMNS order
    dropped_draws: int = 0
    explosive_draws: int = 0
    meta: dict = field(default_factory=dict)

    def to_frame(self) -> pd.DataFrame:
        h1, n, _ = self.summary.shape
        rows = []
        for v, name in enumerate(self.variables):
            for h in range(h1):
                rows.append((name, h, *self.summary[h, v]))
        return pd.DataFrame(rows, columns=["variable", "horizon", *SUMMARY_COLUMNS])

    def to_csv(self, path) -> None:
        self.to_frame().to_csv(path, index=False, float_format="%.12g")


def impact_matrix(sigma) -> np.ndarray:
    """Lower Cholesky factor; column 0 is the impact of the first-ordered shock."""
    return cholesky(sigma)


def impulse_responses(lag_mats, impact: np.ndarray, horizon: int) -> np.ndarray:
    """Responses (horizon+1, n) to a shock with impact vector ``impact``.

    Phi_0 = impact, Phi_h = sum_{j=1..min(h,p)} A_j Phi_{h-j}.
    """
    impact = np.asarray(impact, dtype=float)
    n = impact.shape[0]
    out = np.zeros((horizon + 1, n))
    out[0] = impact
    for h in range(1, horizon + 1):
        acc = np.zeros(n)
        for j, a in enumerate(lag_mats[:h], start=1):
            acc += a @ out[h - j]
        out[h] = acc
    return out


def compute_irf(draws: bvar.PosteriorDraws, spec: IrfSpec) -> IrfResult:
    """Normalized impulse responses to the first-ordered shock, per draw.

    Each draw is scaled so that the impact response of ``target_variable``
    equals ``target_response``; draws whose raw impact is below 1e-12 in
    magnitude are dropped and counted.
    """
    variables = draws.spec.variables
    if spec.target_variable not in variables:
        raise SchemaMismatch(f"target {spec.target_variable!r} not among VAR variables")
    target = variables.index(spec.target_variable)
    n, p, const = draws.spec.n, draws.spec.lags, draws.spec.include_constant

    coefs = np.asarray(draws.coefficients)
    covs = np.asarray(draws.covariances)
    impacts = _batched_impacts(covs)[:, :, spec.shock_index]
    raw = impacts[:, target]
    keep = np.abs(raw) >= NORMALIZATION_FLOOR
    dropped = int((~keep).sum())
    if not keep.any():
        raise DegenerateNormalization(f"all {dropped} draws have a degenerate impact on {spec.target_variable!r}")
    coefs, impacts, raw = coefs[keep], impacts[keep], raw[keep]
    off = int(const)
    # (draws, lag, n, n) with mats[d, j] = A_{j+1} of draw d
    mats = np.stack([np.swapaxes(coefs[:, off + j * n: off + (j + 1) * n, :], 1, 2) for j in range(p)], axis=1)
    explosive = int(np.sum(_batched_radius(mats) >= 1.0))
    responses = np.zeros((len(coefs), spec.horizon + 1, n))
    responses[:, 0] = impacts
    for h in range(1, spec.horizon + 1):
        for j in range(1, min(h, p) + 1):
            responses[:, h] += np.einsum("dij,dj->di", mats[:, j - 1], responses[:, h - j])
    responses *= (spec.target_response / raw)[:, None, None]
    responses[:, 0, target] = spec.target_response
    summary = np.moveaxis(np.quantile(responses, spec.quantile_levels, axis=0, method="linear"), 0, -1)
    return IrfResult(variables, responses, summary, dropped, explosive)


def _batched_impacts(covs: np.ndarray) -> np.ndarray:
    sym = 0.5 * (covs + np.swapaxes(covs, 1, 2))
    try:
        return np.linalg.cholesky(sym)
    except np.linalg.LinAlgError:
        # locate the offending draw through the checked factorization
        return np.stack([impact_matrix(c) for c in covs])


def _batched_radius(mats: np.ndarray) -> np.ndarray:
    d, p, n, _ = mats.shape
    comp = np.zeros((d, n * p, n * p))
    comp[:, :n, :] = np.concatenate(list(np.moveaxis(mats, 1, 0)), axis=2)
    comp[:, n:, :-n] = np.eye(n * (p - 1))
    return np.max(np.abs(np.linalg.eigvals(comp)), axis=1)


def fixed_irf(lag_mats, sigma, spec: IrfSpec, variables) -> IrfResult:
    """IRF for one known parameter set, wrapped as a single-draw result."""
    lag_mats = [np.asarray(a, dtype=float) for a in lag_mats]
    n = lag_mats[0].shape[0]
    coef = bvar.stack_coefficients(lag_mats, np.zeros(n))
    vspec = bvar.VarSpec(tuple(variables), lags=len(lag_mats))
    draws = bvar.PosteriorDraws(coef[None], np.asarray(sigma, dtype=float)[None].copy(), vspec)
    return compute_irf(draws, spec)


def estimate_irf(panel, var_spec: bvar.VarSpec, irf_spec: IrfSpec, countries=None, rng: RngStream | None = None):
    """Estimate a VAR on ``countries`` (pooled when more than one) and return (draws, IrfResult)."""
    countries = list(countries) if countries is not None else list(panel.countries)
    if not countries:
        raise ValueError("empty country set")
    y, x = bvar.build_design(panel, var_spec, pooled=len(countries) > 1, countries=countries)
    draws = bvar.estimate(y, x, var_spec, rng if rng is not None else RngStream(var_spec.seed))
    return draws, compute_irf(draws, irf_spec)


def subsample_compare(panel, split, var_spec: bvar.VarSpec, irf_spec: IrfSpec):
    """Independent estimations on two country groups, aligned on the same horizons."""
    first, second = (list(g) for g in split)
    if not first or not second:
        raise ValueError("both partitions must be nonempty")
    root = RngStream(var_spec.seed)
    _, a = estimate_irf(panel, var_spec, irf_spec, first, root.spawn(0))
    _, b = estimate_irf(panel, var_spec, irf_spec, second, root.spawn(1))
    a.meta["countries"], b.meta["countries"] = first, second
    return a, b


SHARE_VARIABLES = ("nx_share", "c_share", "g_share", "i_share")


def share_decomposition_run(panel, var_spec: bvar.VarSpec, irf_spec: IrfSpec, shares=SHARE_VARIABLES, replace=("investment",)):
    """Re-estimate with expenditure shares in place of the investment level.

    The shares are appended to the variable list (after dropping any of
    ``replace``); no adding-up constraint is imposed.
    """
    missing = [s for s in shares if s not in panel.variables]
    if missing:
        raise SchemaMismatch(f"share variables missing from panel: {missing}")
    variables = [v for v in var_spec.variables if v not in replace and v not in shares] + list(shares)
    spec = bvar.VarSpec(
        tuple(variables), var_spec.lags, var_spec.include_constant, var_spec.prior, var_spec.gibbs, var_spec.seed,
    )
    _, result = estimate_irf(panel, spec, irf_spec)
    return result
