"""Loading macro and firm panels and constructing derived series."""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .errors import (
    InteriorMissing,
    MissingTick,
    NonMonthlyDates,
    NonPositiveLevel,
    SchemaMismatch,
    ZeroVariance,
)

MACRO_COLUMNS = ["country", "date", "variable", "value"]
FIRM_COLUMNS = [
    "firm_id", "sector", "quarter", "capital", "assets", "liab_total", "liab_short",
    "liab_long", "liab_bank", "fc_liab", "fc_assets",
]
EVENT_COLUMNS = ["timestamp", "value_before", "value_after"]
LEVERAGE_COLUMNS = {
    "total": "liab_total",
    "short": "liab_short",
    "long": "liab_long",
    "bank": "liab_bank",
}
# rows with this country label apply to every country (US variables, the shock)
BROADCAST_COUNTRY = "ALL"

FLOAT_FORMAT = "%.12g"


@dataclass
class MacroPanel:
    """Country x variable x month array plus the exogenous shock series.

    ``values`` has shape (len(countries), len(variables), len(months)).
    """

    countries: list
    variables: list
    months: pd.PeriodIndex
    values: np.ndarray
    shock: np.ndarray | None = None
    shock_name: str = "shock"
    coverage: dict = field(default_factory=dict)

    def series(self, country, variable) -> pd.Series:
        c = self.countries.index(country)
        v = self.variables.index(variable)
        return pd.Series(self.values[c, v], index=self.months, name=variable)

    def country_block(self, country, variables) -> np.ndarray:
        """T x n array for one country, the shock included under ``shock_name``."""
        c = self.countries.index(country)
        cols = []
        for name in variables:
            if name == self.shock_name:
                if self.shock is None:
                    raise SchemaMismatch("panel carries no shock series")
                cols.append(self.shock)
            elif name in self.variables:
                cols.append(self.values[c, self.variables.index(name)])
            else:
                raise SchemaMismatch(f"variable {name!r} not in panel")
        return np.column_stack(cols)

    def subset(self, countries=None, variables=None) -> "MacroPanel":
        countries = list(countries) if countries is not None else list(self.countries)
        variables = list(variables) if variables is not None else list(self.variables)
        for name in variables:
            if name not in self.variables:
                raise SchemaMismatch(f"variable {name!r} not in panel")
        ci = [self.countries.index(c) for c in countries]
        vi = [self.variables.index(v) for v in variables]
        return MacroPanel(
            countries, variables, self.months, self.values[np.ix_(ci, vi)].copy(),
            None if self.shock is None else self.shock.copy(), self.shock_name,
            {k: v for k, v in self.coverage.items() if k[0] in countries and k[1] in variables},
        )

    def window(self, start=None, end=None) -> "MacroPanel":
        start = self.months[0] if start is None else pd.Period(start, "M")
        end = self.months[-1] if end is None else pd.Period(end, "M")
        mask = (self.months >= start) & (self.months <= end)
        return MacroPanel(
            list(self.countries), list(self.variables), self.months[mask],
            self.values[:, :, mask].copy(),
            None if self.shock is None else self.shock[mask].copy(),
            self.shock_name, dict(self.coverage),
        )

    def balanced(self) -> "MacroPanel":
        """Trim edge months with missing values; interior gaps are an error."""
        stacked = self.values.reshape(-1, len(self.months))
        if self.shock is not None:
            stacked = np.vstack([stacked, self.shock])
        ok = np.all(np.isfinite(stacked), axis=0)
        if not ok.any():
            raise InteriorMissing("no month is observed for every series")
        first = int(np.argmax(ok))
        last = len(ok) - 1 - int(np.argmax(ok[::-1]))
        if not ok[first:last + 1].all():
            bad = self.months[first:last + 1][~ok[first:last + 1]]
            raise InteriorMissing(f"interior missing values at {', '.join(map(str, bad[:5]))}")
        return self.window(self.months[first], self.months[last])


def _to_month(dates: pd.Series) -> pd.PeriodIndex:
    try:
        parsed = pd.to_datetime(dates, format="ISO8601")
    except (ValueError, TypeError) as exc:
        raise SchemaMismatch(f"unparseable dates: {exc}") from None
    return pd.PeriodIndex(parsed, freq="M")


def load_macro_panel(
    path,
    shock_variable: str = "shock",
    start=None,
    end=None,
    countries=None,
    variables=None,
) -> MacroPanel:
    """Read a long-format ``country,date,variable,value`` CSV.

    Rows whose country is ``ALL`` are broadcast to every country; the shock
    series is read from rows named ``shock_variable``. The result is trimmed
    to ``[start, end]`` and then to the balanced window.
    """
    df = pd.read_csv(path, dtype={"country": str, "variable": str})
    if list(df.columns) != MACRO_COLUMNS:
        raise SchemaMismatch(f"expected columns {MACRO_COLUMNS}, got {list(df.columns)}")
    df["month"] = _to_month(df["date"])
    if df.duplicated(["country", "date", "variable"]).any():
        raise SchemaMismatch("duplicated (country, date, variable) rows")
    if df.duplicated(["country", "month", "variable"]).any():
        raise NonMonthlyDates("more than one observation per month for a series")
    months_present = df["month"].drop_duplicates().sort_values()
    steps = np.diff(months_present.map(lambda p: p.ordinal).to_numpy())
    if len(steps) and not np.any(steps == 1):
        raise NonMonthlyDates("dates are not at monthly frequency")

    shock_rows = df[df["variable"] == shock_variable]
    data_rows = df[df["variable"] != shock_variable]
    all_countries = sorted(set(data_rows["country"]) - {BROADCAST_COUNTRY})
    if not all_countries:
        raise SchemaMismatch("no country-specific rows")
    countries = list(countries) if countries is not None else all_countries
    missing = set(countries) - set(all_countries)
    if missing:
        raise SchemaMismatch(f"countries not in file: {sorted(missing)}")

    lo = months_present.iloc[0] if start is None else pd.Period(start, "M")
    hi = months_present.iloc[-1] if end is None else pd.Period(end, "M")
    months = pd.period_range(lo, hi, freq="M")

    wide = data_rows.pivot_table(index="month", columns=["country", "variable"], values="value", aggfunc="first")
    wide = wide.reindex(months)
    all_vars = sorted(set(data_rows["variable"]))
    variables = list(variables) if variables is not None else all_vars
    values = np.full((len(countries), len(variables), len(months)), np.nan)
    coverage = {}
    for ci, c in enumerate(countries):
        for vi, v in enumerate(variables):
            if (c, v) in wide.columns:
                col = wide[(c, v)]
            elif (BROADCAST_COUNTRY, v) in wide.columns:
                col = wide[(BROADCAST_COUNTRY, v)]
            else:
                raise SchemaMismatch(f"variable {v!r} missing for country {c!r}")
            values[ci, vi] = col.to_numpy(dtype=float)
            obs = col.dropna().index
            coverage[(c, v)] = (str(obs[0]), str(obs[-1])) if len(obs) else None

    shock = None
    if len(shock_rows):
        per_month = shock_rows.groupby("month")["value"]
        if (per_month.nunique() > 1).any():
            raise SchemaMismatch("conflicting shock values for the same month")
        shock = per_month.first().reindex(months).to_numpy(dtype=float)

    panel = MacroPanel(countries, variables, months, values, shock, shock_variable, coverage)
    return panel.balanced()


def write_macro_csv(panel: MacroPanel, path) -> None:
    rows = []
    for ci, c in enumerate(panel.countries):
        for vi, v in enumerate(panel.variables):
            for m, x in zip(panel.months, panel.values[ci, vi]):
                if np.isfinite(x):
                    rows.append((c, m.to_timestamp().strftime("%Y-%m-%d"), v, x))
    if panel.shock is not None:
        for m, x in zip(panel.months, panel.shock):
            rows.append((BROADCAST_COUNTRY, m.to_timestamp().strftime("%Y-%m-%d"), panel.shock_name, x))
    pd.DataFrame(rows, columns=MACRO_COLUMNS).to_csv(path, index=False, float_format=FLOAT_FORMAT)


def interpolate_quarterly_to_monthly(series, method: str = "log-linear"):
    """Fill months between quarter-end observations.

    Each quarterly value sits on the last month of its quarter. Accepts a
    plain sequence (returns an array of length 3(n-1)+1) or a Series with a
    quarterly PeriodIndex (returns a monthly Series).
    """
    if method not in ("log-linear", "linear"):
        raise ValueError(f"unknown interpolation method {method!r}")
    index = series.index if isinstance(series, pd.Series) else None
    q = np.asarray(series, dtype=float)
    if q.ndim != 1 or q.size == 0:
        raise ValueError("expected a non-empty 1-D series")
    if method == "log-linear":
        if np.any(~(q > 0)):
            raise NonPositiveLevel("log-linear interpolation needs strictly positive levels")
        base = np.log(q)
    else:
        base = q
    steps = np.arange(1, 3) / 3.0
    out = [base[0]]
    for a, b in zip(base[:-1], base[1:]):
        out.extend(a + (b - a) * steps)
        out.append(b)
    out = np.array(out)
    if method == "log-linear":
        out = np.exp(out)
        # quarter-end months reproduce the source exactly
        out[::3] = q
    if index is None:
        return out
    first = index[0].asfreq("M", how="end")
    months = pd.period_range(first, periods=len(out), freq="M")
    return pd.Series(out, index=months, name=getattr(series, "name", None))


def aggregate_shocks(events, target: str = "month", method: str | None = None, start=None, end=None) -> pd.Series:
    """Collapse dated shock observations to a complete monthly or quarterly series.

    Periods without an event carry 0. Defaults: median within a month, mean
    within a quarter.
    """
    if target not in ("month", "quarter"):
        raise ValueError(f"target must be 'month' or 'quarter', got {target!r}")
    method = method or ("median" if target == "month" else "mean")
    if method not in ("median", "mean"):
        raise ValueError(f"unknown method {method!r}")
    freq = "M" if target == "month" else "Q"
    s = events if isinstance(events, pd.Series) else pd.Series(dict(events))
    periods = pd.PeriodIndex(pd.to_datetime(s.index), freq=freq)
    grouped = pd.Series(s.to_numpy(dtype=float), index=periods).groupby(level=0)
    agg = grouped.median() if method == "median" else grouped.mean()
    lo = pd.Period(start, freq) if start is not None else (agg.index.min() if len(agg) else None)
    hi = pd.Period(end, freq) if end is not None else (agg.index.max() if len(agg) else None)
    if lo is None or hi is None:
        return pd.Series(dtype=float)
    full = pd.period_range(lo, hi, freq=freq)
    return agg.reindex(full, fill_value=0.0).astype(float)


@dataclass(frozen=True)
class ShockEvent:
    timestamp: dt.datetime
    value_before: float | None
    value_after: float | None


WINDOW_BEFORE = dt.timedelta(minutes=10)
WINDOW_AFTER = dt.timedelta(minutes=20)


def compute_fff_surprise(
    event: ShockEvent,
    rate_conversion: bool = False,
    days_in_month: int | None = None,
) -> float:
    """Change in the current-month fed funds futures price across the window.

    The default is the raw price difference. With ``rate_conversion`` the
    price is turned into an implied rate (100 - price) and scaled by
    D / (D - d) for an announcement on day d of a D-day month.
    """
    for v in (event.value_before, event.value_after):
        if v is None or not np.isfinite(v):
            raise MissingTick(f"missing futures tick around {event.timestamp}")
    diff = float(event.value_after) - float(event.value_before)
    if not rate_conversion:
        return diff
    ts = pd.Timestamp(event.timestamp)
    days = days_in_month or ts.days_in_month
    remaining = days - ts.day + 1
    return -diff * days / remaining


def event_from_ticks(timestamp, ticks: pd.Series, before=WINDOW_BEFORE, after=WINDOW_AFTER) -> ShockEvent:
    """Pick the last price at or before t-10min and the last price in (t, t+20min]."""
    ts = pd.Timestamp(timestamp)
    ticks = ticks.sort_index()
    pre = ticks[(ticks.index <= ts - before) & (ticks.index >= ts - before - dt.timedelta(hours=24))]
    post = ticks[(ticks.index > ts) & (ticks.index <= ts + after)]
    return ShockEvent(
        ts.to_pydatetime(),
        float(pre.iloc[-1]) if len(pre) else None,
        float(post.iloc[-1]) if len(post) else None,
    )


def load_shock_events(path) -> list[ShockEvent]:
    df = pd.read_csv(path)
    if list(df.columns) != EVENT_COLUMNS:
        raise SchemaMismatch(f"expected columns {EVENT_COLUMNS}, got {list(df.columns)}")
    out = []
    for row in df.itertuples(index=False):
        out.append(ShockEvent(
            pd.Timestamp(row.timestamp).to_pydatetime(),
            None if pd.isna(row.value_before) else float(row.value_before),
            None if pd.isna(row.value_after) else float(row.value_after),
        ))
    return out


def surprises_from_events(events, **kwargs) -> pd.Series:
    return pd.Series(
        [compute_fff_surprise(e, **kwargs) for e in events],
        index=pd.DatetimeIndex([e.timestamp for e in events]),
    )


# ---------------------------------------------------------------- firm panel

def load_firm_panel(path) -> pd.DataFrame:
    df = pd.read_csv(path, dtype={"firm_id": str, "sector": str})
    if list(df.columns) != FIRM_COLUMNS:
        raise SchemaMismatch(f"expected columns {FIRM_COLUMNS}, got {list(df.columns)}")
    df["quarter"] = pd.PeriodIndex(df["quarter"], freq="Q")
    if df.duplicated(["firm_id", "quarter"]).any():
        raise SchemaMismatch("duplicated (firm_id, quarter) rows")
    return df.sort_values(["firm_id", "quarter"]).reset_index(drop=True)


def _firm_shift(df: pd.DataFrame, col: str, k: int) -> pd.Series:
    """Value of ``col`` k quarters ahead (k>0) or behind (k<0) on the calendar.

    Works on the quarter grid, so an unobserved quarter yields NaN instead of
    bridging to the next observed row.
    """
    key = df["quarter"].map(lambda q: q.ordinal).to_numpy()
    lookup = pd.Series(df[col].to_numpy(), index=pd.MultiIndex.from_arrays([df["firm_id"].to_numpy(), key]))
    target = pd.MultiIndex.from_arrays([df["firm_id"].to_numpy(), key + k])
    return pd.Series(lookup.reindex(target).to_numpy(), index=df.index)


def _safe_log(x: pd.Series) -> pd.Series:
    x = x.astype(float)
    return np.log(x.where(x > 0))


def build_firm_regressors(
    panel: pd.DataFrame,
    leverage_def: str = "total",
    horizons=range(0, 9),
    winsorize: tuple[float, float] | None = None,
) -> pd.DataFrame:
    """Add growth, leverage and mismatch columns to a firm-quarter frame.

    New columns: ``dlogk_h{j}`` = log k_{t+j} - log k_{t-1}, ``lev``,
    ``mismatch``, lagged controls ``lev_lag``, ``dlogk_lag``,
    ``asset_growth_lag``, ``mismatch_lag`` and a ``valid_h{j}`` flag per
    horizon. Rows are never dropped.
    """
    if leverage_def not in LEVERAGE_COLUMNS:
        raise ValueError(f"leverage_def must be one of {sorted(LEVERAGE_COLUMNS)}")
    df = panel.sort_values(["firm_id", "quarter"]).reset_index(drop=True).copy()
    logk = _safe_log(df["capital"])
    df["_logk"] = logk
    df["_loga"] = _safe_log(df["assets"])
    logk_prev = _firm_shift(df, "_logk", -1)
    for j in horizons:
        lead = logk if j == 0 else _firm_shift(df, "_logk", j)
        growth = lead - logk_prev
        if winsorize is not None:
            lo, hi = growth.quantile(list(winsorize))
            growth = growth.clip(lo, hi)
        df[f"dlogk_h{j}"] = growth
        df[f"valid_h{j}"] = growth.notna()

    assets = df["assets"].astype(float).where(df["assets"] > 0)
    df["lev"] = df[LEVERAGE_COLUMNS[leverage_def]].astype(float) / assets
    df["mismatch"] = (df["fc_liab"].astype(float) - df["fc_assets"].astype(float)) / assets
    df["lev_defined"] = df["lev"].notna()
    df["_dlogk"] = df["_logk"] - logk_prev
    df["_dloga"] = df["_loga"] - _firm_shift(df, "_loga", -1)
    df["lev_lag"] = _firm_shift(df, "lev", -1)
    df["dlogk_lag"] = _firm_shift(df, "_dlogk", -1)
    df["asset_growth_lag"] = _firm_shift(df, "_dloga", -1)
    df["mismatch_lag"] = _firm_shift(df, "mismatch", -1)
    return df.drop(columns=["_logk", "_loga", "_dlogk", "_dloga"])


def standardize_leverage(panel: pd.DataFrame, min_obs: int = 3, strict: bool = True) -> pd.DataFrame:
    """Firm-by-firm standardized leverage.

    ``lev_std`` = (l_t - mean_i l) / sd_i l with the sample (n-1) sd, and
    ``z`` is its one-quarter lag, the regressor interacted with the shock.
    Firms with fewer than ``min_obs`` leverage observations get NaN and
    ``std_ok`` False. A firm with constant leverage raises ZeroVariance
    unless ``strict`` is False, in which case it is flagged like a short firm.
    """
    df = panel.copy()
    g = df.groupby("firm_id")["lev"]
    count = g.transform("count")
    mean = g.transform("mean")
    sd = g.transform(lambda s: s.std(ddof=1))
    enough = count >= min_obs
    flat = enough & ~(sd > 1e-14 * mean.abs().clip(lower=1.0))
    if flat.any():
        firms = sorted(df.loc[flat, "firm_id"].unique())
        if strict:
            raise ZeroVariance(f"constant leverage for firms {firms[:5]}")
    ok = enough & ~flat
    df["lev_std"] = ((df["lev"] - mean) / sd).where(ok)
    df["std_ok"] = ok
    df["z"] = _firm_shift(df, "lev_std", -1)
    return df


def write_firm_csv(panel: pd.DataFrame, path) -> None:
    out = panel[FIRM_COLUMNS].copy()
    out["quarter"] = out["quarter"].astype(str)
    out.to_csv(path, index=False, float_format=FLOAT_FORMAT)


def load_quarterly_series(path, column: str = "value") -> pd.Series:
    """Two-column CSV ``quarter,<column>`` into a quarterly Series."""
    df = pd.read_csv(path)
    if "quarter" not in df.columns or column not in df.columns:
        raise SchemaMismatch(f"expected columns quarter,{column}")
    return pd.Series(df[column].to_numpy(dtype=float), index=pd.PeriodIndex(df["quarter"], freq="Q"), name=column)

