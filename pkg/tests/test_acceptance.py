"""Acceptance suite: one test per criterion, reported as PASS/FAIL lines."""

import time

_START = time.perf_counter()

import numpy as np  # noqa: E402
import pytest  # noqa: E402
import yaml  # noqa: E402

from spillover import bvar, cli, entrepreneur as ent, ingest, irf, simulate  # noqa: E402
from spillover.firmreg import (  # noqa: E402
    RegressionSpec,
    absorb_fixed_effects,
    clustered_vcov,
    dummy_matrix,
    estimate_spec,
    local_projection,
)
from spillover.linalg import RngStream  # noqa: E402

FULL = bvar.GibbsSettings(iterations=12000, burn_in=2000)

VAR2_LAGS = [
    np.array([[0.5, 0.1, 0.0], [0.2, 0.4, 0.1], [0.0, -0.1, 0.6]]),
    np.array([[0.1, 0.0, 0.0], [0.0, 0.1, 0.05], [0.05, 0.0, -0.1]]),
]
VAR2_CONST = np.array([0.1, -0.2, 0.3])
VAR2_SIGMA = np.array([[1.0, 0.3, 0.1], [0.3, 1.0, 0.2], [0.1, 0.2, 1.0]])


def _batch_means_se(draws, batches=50):
    """Monte Carlo standard error of the mean from non-overlapping batch means."""
    m = len(draws) // batches
    means = draws[: m * batches].reshape(batches, m, *draws.shape[1:]).mean(axis=1)
    return means.std(axis=0, ddof=1) / np.sqrt(batches)


# --------------------------------------------------------------------- 1

def test_conjugate_posterior_oracle(criterion):
    with criterion(1, "Gibbs means match the analytic Normal-Wishart posterior within 3 MC SE"):
        truth = bvar.stack_coefficients([np.array([[0.6, 0.1], [0.2, 0.5]])], np.array([0.3, -0.1]))
        data = bvar.simulate_var(truth, np.array([[1.0, 0.4], [0.4, 0.8]]), 121, RngStream(11))
        y, x = bvar.lagged_design(data, 1)
        assert y.shape == (120, 2)
        spec = bvar.VarSpec(("a", "b"), 1, prior=bvar.NormalWishartPrior(overall_tightness=0.5), gibbs=FULL)
        scales = np.array([1.0, 0.9])

        start = time.perf_counter()
        draws = bvar.estimate(y, x, spec, RngStream(12), scales=scales)
        elapsed = time.perf_counter() - start
        assert len(draws) == 10000

        # closed form written out here, independent of the package's helper
        b0, omega0, s0, nu0 = bvar.normal_wishart_moments(spec, scales)
        prec = np.diag(1 / omega0) + x.T @ x
        b_bar = np.linalg.solve(prec, np.diag(1 / omega0) @ b0 + x.T @ y)
        s_bar = s0 + y.T @ y + b0.T @ np.diag(1 / omega0) @ b0 - b_bar.T @ prec @ b_bar
        sigma_mean = s_bar / (nu0 + len(y) - 2 - 1)

        b_se = _batch_means_se(draws.coefficients)
        s_se = _batch_means_se(draws.covariances)
        assert np.all(np.abs(draws.coefficients.mean(0) - b_bar) <= 3 * b_se)
        assert np.all(np.abs(draws.covariances.mean(0) - sigma_mean) <= 3 * s_se)
        pkg = bvar.conjugate_posterior(y, x, b0, omega0, s0, nu0)
        np.testing.assert_allclose(pkg[0], b_bar, atol=1e-10)
        assert elapsed < 60


# --------------------------------------------------------------------- 2

def test_pooled_simulation_recovery(criterion):
    with criterion(2, "pooled VAR(2) recovery: 90% band coverage and sqrt(N) sd shrinkage"):
        truth = bvar.stack_coefficients(VAR2_LAGS, VAR2_CONST)
        assert bvar.stability(truth, 3, 2) < 1
        blocks = [bvar.simulate_var(truth, VAR2_SIGMA, 300, RngStream(0).spawn(i)) for i in range(5)]
        # flat-ish prior centred on zero so the bands reflect the likelihood
        prior = bvar.NormalWishartPrior(overall_tightness=1.0, own_lag_mean=0.0)
        spec = bvar.VarSpec(("a", "b", "c"), 2, prior=prior, gibbs=FULL)

        y, x = bvar.stacked_design(blocks, 2)
        pooled = bvar.estimate(y, x, spec, RngStream(1))
        lo, hi = np.quantile(pooled.coefficients, [0.05, 0.95], axis=0)
        coverage = np.mean((truth >= lo) & (truth <= hi))
        assert coverage >= 0.90

        y1, x1 = bvar.lagged_design(blocks[0], 2)
        single = bvar.estimate(y1, x1, spec, RngStream(1))
        ratio = single.coefficients.std(0)[1:] / pooled.coefficients.std(0)[1:]
        assert np.all((ratio >= 1.8) & (ratio <= 2.8))


# --------------------------------------------------------------------- 3

def test_irf_matches_companion_powers(criterion):
    with criterion(3, "IRF equals companion-matrix power recursion; AR(1) gives 0.5^h"):
        rng = np.random.default_rng(21)
        n, p, horizon = 3, 3, 48
        lags = [rng.normal(scale=0.3, size=(n, n)) for _ in range(p)]
        coef = bvar.stack_coefficients(lags, np.zeros(n))
        sigma = np.cov(rng.normal(size=(n, 50)))
        comp = bvar.companion(coef, n, p)
        impact = np.linalg.cholesky(sigma)[:, 0]
        state = np.zeros(n * p)
        state[:n] = impact
        oracle = np.array([(np.linalg.matrix_power(comp, h) @ state)[:n] for h in range(horizon + 1)])

        raw = irf.impulse_responses(lags, impact, horizon)
        np.testing.assert_allclose(raw, oracle, rtol=0, atol=1e-10)
        res = irf.fixed_irf(lags, sigma, irf.IrfSpec("v1", horizon=horizon), ("v0", "v1", "v2"))
        np.testing.assert_allclose(res.responses[0], oracle * 0.5 / impact[1], rtol=0, atol=1e-10)

        ar = irf.fixed_irf([np.array([[0.5]])], np.eye(1), irf.IrfSpec("y", horizon=horizon, target_response=1.0), ("y",))
        np.testing.assert_array_equal(ar.responses[0, :, 0], 0.5 ** np.arange(horizon + 1))


# --------------------------------------------------------------------- 4

def test_normalization_contract(criterion):
    with criterion(4, "normalized impact is exactly 0.50 and doubling the target doubles every cell"):
        panel = simulate.simulate_macro_panel(months=150, seed=5)
        vspec = bvar.VarSpec(("shock", "us_10y", "embi", "gdp"), 2, gibbs=bvar.GibbsSettings(2000, 500))
        y, x = bvar.build_design(panel, vspec, pooled=True)
        draws = bvar.estimate(y, x, vspec, RngStream(5))
        half = irf.compute_irf(draws, irf.IrfSpec("us_10y", horizon=24))
        one = irf.compute_irf(draws, irf.IrfSpec("us_10y", horizon=24, target_response=1.0))
        assert half.dropped_draws == 0 and len(half.responses) == len(draws)
        assert np.all(half.responses[:, 0, 1] == 0.5)
        np.testing.assert_array_equal(one.responses, 2 * half.responses)


# --------------------------------------------------------------------- 5

def test_fixed_effect_absorption_equals_dummies(criterion):
    with criterion(5, "absorbed OLS equals dummy-variable OLS to 1e-8 on 20 fixtures"):
        for seed in range(20):
            rng = np.random.default_rng(seed)
            n = int(rng.integers(100, 501))
            firm = rng.integers(0, rng.integers(5, 40), n)
            cell = rng.integers(0, rng.integers(5, 40), n)
            x = rng.normal(size=(n, 3))
            y = x @ rng.normal(size=3) + rng.normal(size=firm.max() + 1)[firm] + rng.normal(size=cell.max() + 1)[cell]
            y = y + rng.normal(size=n)
            ab = absorb_fixed_effects(np.column_stack([y, x]), [firm, cell])
            b, *_ = np.linalg.lstsq(ab.data[:, 1:], ab.data[:, 0], rcond=None)
            keep = ab.keep
            dummies = dummy_matrix([firm[keep], cell[keep]])
            full, *_ = np.linalg.lstsq(np.column_stack([x[keep], dummies]), y[keep], rcond=None)
            np.testing.assert_allclose(b, full[:3], rtol=0, atol=1e-8)


# --------------------------------------------------------------------- 6

def _firm_panel(seed, noise):
    raw, shock, _ = simulate.simulate_firm_panel(seed=seed, noise=noise, beta=-0.4)
    panel = ingest.standardize_leverage(ingest.build_firm_regressors(raw, horizons=range(0, 1)))
    return panel, shock


def test_planted_coefficient_recovery(criterion):
    with criterion(6, "planted beta -0.400 recovered (1e-6 noiseless, 2 clustered SE over 20 seeds)"):
        panel, shock = _firm_panel(0, 0.0)
        assert estimate_spec(panel, shock, RegressionSpec())["interaction"] == pytest.approx(-0.4, abs=1e-6)
        for seed in range(20):
            panel, shock = _firm_panel(seed, 0.05)
            res = estimate_spec(panel, shock, RegressionSpec())
            assert abs(res["interaction"] + 0.4) <= 2 * res.se_of("interaction"), seed


# --------------------------------------------------------------------- 7

def _brute_force(x, e, labels):
    n, k = x.shape
    bread = np.linalg.inv(x.T @ x)
    meat = np.zeros((k, k))
    groups = sorted(set(labels))
    for g in groups:
        score = np.zeros(k)
        for i in range(n):
            if labels[i] == g:
                score += x[i] * e[i]
        meat += np.outer(score, score)
    G = len(groups)
    return G / (G - 1) * (n - 1) / (n - k) * bread @ meat @ bread


def test_clustered_covariance_oracle(criterion):
    with criterion(7, "one-way and two-way clustered covariances match brute force to 1e-10"):
        x = np.column_stack([np.ones(8), [0.5, -1.0, 2.0, 0.0, 1.5, -0.5, 0.3, 1.1]])
        e = np.array([0.3, -0.2, 0.5, -0.4, 0.1, 0.25, -0.15, 0.05])
        firm = ["a", "a", "b", "b", "c", "c", "d", "d"]
        time_ = ["1", "2", "1", "2", "1", "2", "1", "2"]
        v1, _ = clustered_vcov(x, e, np.array(firm))
        np.testing.assert_allclose(v1, _brute_force(x, e, firm), rtol=0, atol=1e-10)

        rng = np.random.default_rng(7)
        x = rng.normal(size=(60, 2))
        e = rng.normal(size=60)
        f = rng.integers(0, 10, 60)
        t = rng.integers(0, 6, 60)
        both = [f"{a}|{b}" for a, b in zip(f, t)]
        expected = _brute_force(x, e, list(f)) + _brute_force(x, e, list(t)) - _brute_force(x, e, both)
        assert np.all(np.diag(expected) > 0)
        v2, info = clustered_vcov(x, e, (f, t))
        assert not info["floored"]
        np.testing.assert_allclose(v2, expected, rtol=0, atol=1e-10)

        same, _ = clustered_vcov(x, e, (f, f.copy()))
        one, _ = clustered_vcov(x, e, f)
        np.testing.assert_allclose(same, one, rtol=0, atol=1e-10)


# --------------------------------------------------------------------- 8

def test_local_projection_horizon_zero(criterion):
    with criterion(8, "horizon-0 local projection equals the baseline regression exactly"):
        raw, shock, _ = simulate.simulate_firm_panel(seed=4)
        panel = ingest.standardize_leverage(ingest.build_firm_regressors(raw, horizons=range(0, 5)))
        for spec in (RegressionSpec(), RegressionSpec(controls=("dlogk_lag", "lev_lag"), clustering=("firm",))):
            base = estimate_spec(panel, shock, spec)
            lp = local_projection(panel, shock, spec, horizons=range(0, 3))
            assert lp[0]["interaction"] == base["interaction"]
            assert lp[0].se_of("interaction") == base.se_of("interaction")


# --------------------------------------------------------------------- 9

def test_unconstrained_closed_form(criterion):
    with criterion(9, "unconstrained k1* matches the closed form on a 100-point grid; 0.0625 example"):
        for alpha in np.linspace(0.1, 0.9, 10):
            for r1 in np.linspace(-0.05, 0.5, 10):
                s = ent.solve_unconstrained(ent.EntrepreneurParams(alpha=alpha, r1=r1, b0=-2.0))
                expected = np.exp(np.log((1 + r1) / alpha) / (alpha - 1))
                assert abs(s.k1 - expected) <= 1e-12 * max(1.0, expected)
        assert ent.solve(ent.EntrepreneurParams(alpha=0.5, r1=1.0, b0=-1.0)).k1 == pytest.approx(0.0625, abs=1e-15)


# -------------------------------------------------------------------- 10

def _random_params(rng):
    alpha = rng.uniform(0.2, 0.6)
    theta = rng.uniform(0.2, 0.8)
    limit = 1.0 / 1.05  # k0^alpha / (1 + r0) with k0 = 1
    return ent.EntrepreneurParams(alpha=alpha, theta=theta, b0=rng.uniform(-0.5, 0.9 * limit))


def test_grid_oracle_dominance(criterion):
    with criterion(10, "solve() utility within 1e-6 of a 400x400 grid optimum on 50 random draws"):
        rng = np.random.default_rng(2024)
        regimes = set()
        for _ in range(50):
            p = _random_params(rng)
            s = ent.solve(p)
            regimes.add(s.regime)
            kmax = p.wealth / (1 - p.theta)
            k = np.linspace(kmax / 400, kmax, 400)
            b = np.linspace(-p.wealth, p.theta * kmax, 400)
            kk, bb = np.meshgrid(k, b)
            u = np.where(bb <= p.theta * kk, ent.utility(p, kk, bb), -np.inf)
            assert np.isfinite(u.max())
            assert s.utility >= u.max() - 1e-6
        assert regimes == {"constrained", "unconstrained"}


# -------------------------------------------------------------------- 11

def test_proposition_rate_sensitivity(criterion):
    with criterion(11, "unconstrained capital responds more to the rate; closed-form derivative to 1e-6"):
        rep = ent.verify_propositions(ent.default_pair())
        assert rep.dk_dr_unconstrained < 0 and rep.dk_dr_constrained < 0
        assert abs(rep.dk_dr_unconstrained) > abs(rep.dk_dr_constrained)
        analytic = 1 / (0.3 * (0.3 - 1) * rep.unconstrained.k1 ** (0.3 - 2))
        assert abs(rep.dk_dr_unconstrained - analytic) <= 1e-6 * abs(analytic)
        assert rep.passed


# -------------------------------------------------------------------- 12

def test_proposition_leverage_cap(criterion):
    with criterion(12, "constrained capital increasing in theta on 20 instances; theta sweeps monotone"):
        rng = np.random.default_rng(12)
        found = 0
        while found < 20:
            base = _random_params(rng)
            p = base.with_(b0=rng.uniform(ent.kink_b0(base) + 0.02, 0.9 / 1.05))
            if p.b0 <= ent.kink_b0(p) + 0.02:
                continue
            s = ent.solve(p)
            assert s.regime == "constrained"
            h = 1e-5 * p.theta
            up = ent.solve(p.with_(theta=p.theta + h))
            down = ent.solve(p.with_(theta=p.theta - h))
            assert up.regime == down.regime == "constrained"
            assert (up.k1 - down.k1) / (2 * h) > 0
            sw = ent.sweep(p, "theta", np.linspace(0.2, 0.8, 31))
            k = sw.k1[~np.isnan(sw.k1)]
            assert len(k) > 1 and np.all(np.diff(k) >= -1e-12)
            found += 1


# -------------------------------------------------------------------- 13

def test_cli_reproducible(criterion, tmp_path):
    with criterion(13, "every CLI command rerun with the same config and seed gives identical CSVs"):
        short = {"var": {"gibbs": {"iterations": 1000, "burn_in": 200}}, "plots": False}
        commands = ("svar-panel", "svar-country", "firm-reg", "firm-lp", "model-sweep", "verify-props")
        for command in commands:
            args = []
            if command.startswith("svar"):
                path = tmp_path / f"{command}.yaml"
                path.write_text(yaml.safe_dump(short))
                args = ["-c", str(path)]
            outs = [tmp_path / f"{command}_{i}" for i in range(2)]
            for out in outs:
                assert cli.main([command, *args, "-o", str(out), "--seed", "17"]) == 0
            csvs = sorted(q.name for q in outs[0].glob("*.csv"))
            assert csvs
            for name in csvs:
                assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes(), (command, name)


# -------------------------------------------------------------------- 14

def test_suite_runtime(criterion):
    with criterion(14, "acceptance suite finishes within 10 minutes"):
        elapsed = time.perf_counter() - _START
        print(f"acceptance elapsed {elapsed:.1f}s")
        assert elapsed < 600
