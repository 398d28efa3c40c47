"""Synthetic stand-ins for the proprietary macro and firm datasets.

Both generators are deterministic in their seed and plant known structure
(common VAR dynamics, a known interaction coefficient) so that estimators
can be checked against the truth.
"""

from __future__ import annotations

import numpy as np
import pandas as pd

from .ingest import MacroPanel
from .linalg import RngStream

PANEL_COUNTRIES = ("Brazil", "Chile", "Indonesia", "Mexico", "Peru", "South Africa", "Turkey")
US_VARIABLES = ("us_10y", "us_gdp")
EM_VARIABLES = ("embi", "policy_rate", "gdp", "investment")
SHARES = ("nx_share", "c_share", "g_share", "i_share")


def _macro_dgp(n_us: int, n_em: int, rng: np.random.Generator):
    """Lag matrix and lower-triangular impact for [shock, US block, EM block]."""
    n = 1 + n_us + n_em
    a = np.zeros((n, n))
    for i in range(1, n):
        a[i, i] = rng.uniform(0.75, 0.9)
        for j in range(1, i):
            a[i, j] = rng.uniform(-0.08, 0.08)
    impact = np.zeros((n, n))
    impact[0, 0] = 0.05
    for i in range(1, n):
        impact[i, i] = rng.uniform(0.2, 0.4)
        impact[i, 0] = rng.uniform(0.5, 2.0) * (1 if i <= n_us else -1)
        for j in range(1, i):
            impact[i, j] = rng.uniform(-0.05, 0.05)
    return a, impact


def simulate_macro_panel(
    countries=PANEL_COUNTRIES,
    start: str = "2004-01",
    months: int = 180,
    seed: int = 0,
    us_variables=US_VARIABLES,
    em_variables=EM_VARIABLES,
    with_shares: bool = False,
    shock_name: str = "shock",
    burn: int = 100,
) -> MacroPanel:
    """Monthly panel where every country shares one VAR(1) with the shock ordered first.

    The shock and US block are common to all countries; each country draws
    its own EM innovations. With ``with_shares`` four expenditure shares are
    appended (the last one closes the adding-up identity) and only the
    investment share reacts to the shock on impact.
    """
    stream = RngStream(seed)
    gen = stream.generator()
    n_us, n_em = len(us_variables), len(em_variables)
    a, impact = _macro_dgp(n_us, n_em, gen)
    n = 1 + n_us + n_em
    total = months + burn
    common = stream.standard_normal((total, 1 + n_us))
    values = []
    for _ in countries:
        u = np.hstack([common, stream.standard_normal((total, n_em))])
        y = np.zeros((total, n))
        for t in range(total):
            prev = y[t - 1] if t else np.zeros(n)
            y[t] = a @ prev + impact @ u[t]
        values.append(y[burn:])
    values = np.stack(values)  # country, month, var
    shock = values[0, :, 0].copy()
    em = values[:, :, 1:]
    names = list(us_variables) + list(em_variables)
    data = np.moveaxis(em, 1, 2)  # country, var, month
    if with_shares:
        shares = _simulate_shares(len(countries), months, shock, stream)
        data = np.concatenate([data, shares], axis=1)
        names += list(SHARES)
    idx = pd.period_range(start, periods=months, freq="M")
    return MacroPanel(list(countries), names, idx, data, shock, shock_name)


def _simulate_shares(n_countries, months, shock, stream: RngStream) -> np.ndarray:
    means = np.array([0.05, 0.6, 0.15])
    out = np.empty((n_countries, 4, months))
    for c in range(n_countries):
        e = stream.standard_normal((months, 3)) * 0.005
        s = np.tile(means, (months, 1))
        for t in range(1, months):
            s[t] = means + 0.8 * (s[t - 1] - means) + e[t]
        i_share = 0.2 + np.zeros(months)
        ei = stream.standard_normal(months) * 0.005
        for t in range(1, months):
            i_share[t] = 0.2 + 0.8 * (i_share[t - 1] - 0.2) + ei[t] - 0.5 * shock[t]
        # net exports absorb the residual so the shares add up to one
        nx = 1.0 - s[:, 1] - s[:, 2] - i_share
        out[c] = np.vstack([nx, s[:, 1], s[:, 2], i_share])
    return out


def simulate_firm_panel(
    n_firms: int = 80,
    n_quarters: int = 40,
    n_sectors: int = 4,
    beta: float = -0.4,
    noise: float = 0.05,
    seed: int = 0,
    start: str = "2008Q1",
    exit_share: float = 0.0,
):
    """Firm-quarter panel with a planted leverage x shock interaction.

    Capital growth is firm effect + sector-quarter effect + beta * z * shock
    + noise, where z is the firm-standardized lagged total leverage. Returns
    (raw panel in the firm-CSV layout, quarterly shock series, quarterly
    aggregate controls).
    """
    stream = RngStream(seed)
    gen = stream.generator()
    quarters = pd.period_range(start, periods=n_quarters, freq="Q")
    shock = pd.Series(gen.normal(0, 0.1, n_quarters), index=quarters, name="shock")
    sector_time = gen.normal(0, 0.02, (n_sectors, n_quarters))
    rows = []
    for f in range(n_firms):
        sector = f % n_sectors
        length = n_quarters
        if exit_share and gen.uniform() < exit_share:
            length = int(gen.integers(n_quarters // 2, n_quarters))
        mean_lev = gen.uniform(0.3, 0.6)
        lev = np.empty(length)
        lev[0] = mean_lev
        for t in range(1, length):
            lev[t] = mean_lev + 0.8 * (lev[t - 1] - mean_lev) + gen.normal(0, 0.03)
        z_now = (lev - lev.mean()) / lev.std(ddof=1)
        z_lag = np.r_[np.nan, z_now[:-1]]
        growth = gen.normal(0.01, 0.005) + sector_time[sector, :length] + noise * gen.standard_normal(length)
        growth = growth + beta * np.nan_to_num(z_lag) * shock.to_numpy()[:length]
        log_k = np.log(gen.uniform(50, 500)) + np.cumsum(growth)
        assets = np.exp(log_k) * gen.uniform(1.5, 2.5) * np.exp(np.cumsum(gen.normal(0, 0.01, length)))
        liab = lev * assets
        fc_l = liab * gen.uniform(0, 0.4)
        fc_a = assets * gen.uniform(0, 0.1, length)
        for t in range(length):
            rows.append((
                f"F{f:04d}", f"S{sector}", quarters[t], float(np.exp(log_k[t])), assets[t],
                liab[t], 0.55 * liab[t], 0.45 * liab[t], 0.3 * liab[t], fc_l[t], fc_a[t],
            ))
    panel = pd.DataFrame(rows, columns=[
        "firm_id", "sector", "quarter", "capital", "assets", "liab_total", "liab_short",
        "liab_long", "liab_bank", "fc_liab", "fc_assets",
    ])
    aggregates = pd.DataFrame({
        "inflation": gen.normal(3, 1, n_quarters),
        "log_gdp": np.cumsum(gen.normal(0.005, 0.01, n_quarters)),
        "log_fx": np.cumsum(gen.normal(0, 0.03, n_quarters)),
    }, index=quarters)
    return panel, shock, aggregates
