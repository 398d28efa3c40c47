"""Interaction, indicator and local-projection regressions on the firm panel."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import pandas as pd
from scipy import stats

from ..errors import RankDeficient
from .absorb import absorb_fixed_effects
from .vcov import clustered_vcov

FIRM_CONTROLS = ("dlogk_lag", "mismatch_lag", "lev_lag")
AGGREGATE_LAGS = 4


@dataclass(frozen=True)
class RegressionSpec:
    """One column of a results table.

    ``fixed_effects`` is 'sector_time' (baseline; absorbs the shock
    level) or 'sector_season' (sector x calendar quarter, needed when the
    shock level enters on its own).
    """

    spec_id: str = "baseline"
    dependent: str = "dlogk_h0"
    interaction: str = "standardized"
    threshold: float = 0.0
    indicator_timing: str = "current"
    include_level_shock: bool = False
    fixed_effects: str = "sector_time"
    controls: tuple = ()
    aggregate_controls: bool = False
    clustering: tuple = ("firm", "time")

    def __post_init__(self):
        object.__setattr__(self, "controls", tuple(self.controls))
        object.__setattr__(self, "clustering", tuple(self.clustering))
        if self.interaction not in ("standardized", "indicator"):
            raise ValueError(f"unknown interaction {self.interaction!r}")
        if self.indicator_timing not in ("current", "lagged"):
            raise ValueError(f"unknown indicator timing {self.indicator_timing!r}")
        if self.fixed_effects not in ("sector_time", "sector_season"):
            raise ValueError(f"unknown fixed effects {self.fixed_effects!r}")
        if self.include_level_shock and self.fixed_effects == "sector_time":
            raise ValueError("the shock level is collinear with sector x time effects; use sector_season")
        if not set(self.clustering) <= {"firm", "time"} or not 1 <= len(self.clustering) <= 2:
            raise ValueError(f"clustering must be ('firm',) or ('firm', 'time'), got {self.clustering}")


@dataclass
class RegressionResult:
    spec_id: str
    horizon: int
    names: list
    coef: np.ndarray
    se: np.ndarray
    vcov: np.ndarray
    n_obs: int
    r2: float
    singletons: int
    iterations: int
    min_clusters: int
    info: dict = field(default_factory=dict)

    def __getitem__(self, name) -> float:
        return float(self.coef[self.names.index(name)])

    def se_of(self, name) -> float:
        return float(self.se[self.names.index(name)])

    def pvalues(self) -> np.ndarray:
        dof = max(self.min_clusters - 1, 1)
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.abs(self.coef / self.se)
        return 2 * stats.t.sf(t, dof)

    def stars(self) -> list[str]:
        out = []
        for p in self.pvalues():
            out.append("***" if p < 0.01 else "**" if p < 0.05 else "*" if p < 0.1 else "")
        return out

    def rows(self) -> list[tuple]:
        return [
            (self.spec_id, self.horizon, name, float(b), float(s), star, self.n_obs, self.r2)
            for name, b, s, star in zip(self.names, self.coef, self.se, self.stars())
        ]


RESULT_COLUMNS = ["spec_id", "horizon", "coef_name", "estimate", "se", "stars", "n_obs", "r2"]


def results_frame(results) -> pd.DataFrame:
    return pd.DataFrame([r for res in results for r in res.rows()], columns=RESULT_COLUMNS)


def write_results_csv(results, path) -> None:
    results_frame(results).to_csv(path, index=False, float_format="%.12g")


def _aggregate_lags(aggregates: pd.DataFrame, quarters: pd.Series) -> pd.DataFrame:
    aggregates = aggregates.sort_index()
    cols = {}
    for name in aggregates.columns:
        s = aggregates[name]
        for lag in range(1, AGGREGATE_LAGS + 1):
            shifted = pd.Series(s.to_numpy(), index=s.index + lag)
            cols[f"{name}_l{lag}"] = shifted.reindex(quarters.to_numpy()).to_numpy()
    return pd.DataFrame(cols, index=quarters.index)


def design_frame(panel: pd.DataFrame, shock: pd.Series, spec: RegressionSpec, aggregates=None, dependent=None):
    """Assemble (y, X, names, firm, time, fe_sets) for a specification, complete rows only."""
    df = panel
    eps = pd.Series(shock.reindex(df["quarter"].to_numpy()).to_numpy(dtype=float), index=df.index)
    if spec.interaction == "standardized":
        inter = df["z"] * eps
    else:
        base = df["lev_std"] if spec.indicator_timing == "current" else df["z"]
        inter = (base > spec.threshold).astype(float).where(base.notna()) * eps
    cols = {"interaction": inter}
    if spec.include_level_shock:
        cols["shock"] = eps
    for c in spec.controls:
        cols[c] = df[c].astype(float)
    x = pd.DataFrame(cols, index=df.index)
    if spec.aggregate_controls:
        if aggregates is None:
            raise ValueError("aggregate controls requested but no aggregate series supplied")
        x = pd.concat([x, _aggregate_lags(aggregates, df["quarter"])], axis=1)
    y = df[dependent or spec.dependent].astype(float)
    firm = df["firm_id"].astype(str)
    time = df["quarter"].astype(str)
    if spec.fixed_effects == "sector_time":
        second = df["sector"].astype(str) + "|" + time
    else:
        second = df["sector"].astype(str) + "|q" + df["quarter"].map(lambda q: q.quarter).astype(str)
    ok = y.notna() & x.notna().all(axis=1) & np.isfinite(x).all(axis=1) & np.isfinite(y)
    return (
        y[ok].to_numpy(), x[ok].to_numpy(), list(x.columns),
        firm[ok].to_numpy(), time[ok].to_numpy(), [firm[ok].to_numpy(), second[ok].to_numpy()],
    )


def estimate_spec(
    panel: pd.DataFrame,
    shock: pd.Series,
    spec: RegressionSpec,
    aggregates: pd.DataFrame | None = None,
    horizon: int | None = None,
    tol: float = 1e-8,
) -> RegressionResult:
    """Within-estimator OLS with firm and sector-level fixed effects and clustered SEs.

    ``panel`` must carry the columns built by ``build_firm_regressors`` and
    ``standardize_leverage``; ``shock`` is a quarterly series.
    """
    dependent = f"dlogk_h{horizon}" if horizon is not None else spec.dependent
    y, x, names, firm, time, fe_sets = design_frame(panel, shock, spec, aggregates, dependent)
    if len(y) == 0:
        raise RankDeficient("no complete observations")
    zero = [n for n, col in zip(names, x.T) if not np.any(col)]
    if zero:
        raise RankDeficient(f"regressors identically zero: {zero}")

    ab = absorb_fixed_effects(np.column_stack([y, x]), fe_sets, tol=tol, check_columns=range(1, x.shape[1] + 1))
    yd, xd = ab.data[:, 0], ab.data[:, 1:]
    if len(yd) <= xd.shape[1] or np.linalg.matrix_rank(xd) < xd.shape[1]:
        raise RankDeficient("absorbed regressor matrix is rank deficient")
    coef, *_ = np.linalg.lstsq(xd, yd, rcond=None)
    resid = yd - xd @ coef
    tss = float(yd @ yd)
    r2 = 1.0 - float(resid @ resid) / tss if tss > 0 else float("nan")

    labels = {"firm": firm[ab.keep], "time": time[ab.keep]}
    clusters = [labels[c] for c in spec.clustering]
    vcov, info = clustered_vcov(xd, resid, clusters if len(clusters) == 2 else clusters[0])
    se = np.sqrt(np.clip(np.diag(vcov), 0, None))
    return RegressionResult(
        spec.spec_id, 0 if horizon is None else horizon, names, coef, se, vcov,
        int(len(yd)), r2, ab.singletons, ab.iterations, info["min_clusters"], info,
    )


def local_projection(panel, shock, spec: RegressionSpec, horizons=range(0, 9), aggregates=None, tol: float = 1e-8):
    """One regression per horizon j with dependent log k_{t+j} - log k_{t-1}."""
    return [estimate_spec(panel, shock, spec, aggregates, horizon=j, tol=tol) for j in horizons]


def cumulative_specs(base: RegressionSpec, controls=FIRM_CONTROLS) -> list[RegressionSpec]:
    """Columns (1)-(4): controls added one at a time, as in the results tables."""
    out = []
    for i in range(len(controls) + 1):
        out.append(replace(base, spec_id=f"{base.spec_id}_{i + 1}", controls=tuple(controls[:i])))
    return out


def format_table(results, coef_names=("interaction",), title="Firm investment - dlog k") -> str:
    """Plain-text table with one column per result, SEs in parentheses."""
    width = 14
    head = f"{'':<28}" + "".join(f"{f'({i + 1})':>{width}}" for i in range(len(results)))
    lines = [title, head, "-" * len(head)]
    for name in coef_names:
        est, ses = [], []
        for r in results:
            if name in r.names:
                i = r.names.index(name)
                est.append(f"{r.coef[i]:.3f}{r.stars()[i]}")
                ses.append(f"({r.se[i]:.3f})")
            else:
                est.append("")
                ses.append("")
        lines.append(f"{name:<28}" + "".join(f"{e:>{width}}" for e in est))
        lines.append(f"{'':<28}" + "".join(f"{s:>{width}}" for s in ses))
    lines.append("-" * len(head))
    lines.append(f"{'Observations':<28}" + "".join(f"{r.n_obs:>{width},}" for r in results))
    lines.append(f"{'R2 (within)':<28}" + "".join(f"{r.r2:>{width}.3f}" for r in results))
    lines.append("Clustered standard errors in parentheses; *** p<0.01, ** p<0.05, * p<0.1")
    return "\n".join(lines)
