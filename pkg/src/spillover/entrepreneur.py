"""Two-period entrepreneur with log utility, Cobb-Douglas output and a leverage cap.

The entrepreneur chooses (c0, c1, k1, b1) to maximize ln c0 + beta ln c1 s.t.

    c0 + k1 = k0**alpha + b1 - b0 (1 + r0)
    c1      = k1**alpha - b1 (1 + r1)
    b1     <= theta k1

Capital fully depreciates between periods.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace

import numpy as np
import pandas as pd
from scipy.optimize import brentq

from .errors import (
    ConstraintViolated,
    InfeasibleConsumption,
    NegativeMultiplier,
    NoBracket,
    RegimeMismatch,
    SpilloverError,
)

F_TOL = 1e-10
BRACKET_POINTS = 64


@dataclass(frozen=True)
class EntrepreneurParams:
    alpha: float = 0.3
    beta: float = 0.95
    theta: float = 0.5
    k0: float = 1.0
    b0: float = 0.6
    r0: float = 0.05
    r1: float = 0.05

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        if not 0 < self.beta <= 1:
            raise ValueError("beta must lie in (0, 1]")
        if not 0 < self.theta < 1:
            raise ValueError("theta must lie in (0, 1)")
        if not self.k0 > 0:
            raise ValueError("k0 must be positive")
        if not 1 + self.r1 > 0:
            raise ValueError("gross rate 1 + r1 must be positive")

    @property
    def gross(self) -> float:
        return 1.0 + self.r1

    @property
    def wealth(self) -> float:
        """Period-0 resources net of debt service, k0^alpha - b0 (1 + r0)."""
        return self.k0 ** self.alpha - self.b0 * (1.0 + self.r0)

    def with_(self, **changes) -> "EntrepreneurParams":
        return replace(self, **changes)


@dataclass(frozen=True)
class EntrepreneurSolution:
    c0: float
    c1: float
    k1: float
    b1: float
    mu: float
    regime: str
    params: EntrepreneurParams

    @property
    def utility(self) -> float:
        return math.log(self.c0) + self.params.beta * math.log(self.c1)

    def euler_residuals(self) -> tuple[float, float]:
        """(capital Euler, bond Euler) residuals; both zero at an optimum."""
        p = self.params
        cap = 1 / self.c0 - (p.beta / self.c1 * p.alpha * self.k1 ** (p.alpha - 1) + self.mu * p.theta)
        bond = 1 / self.c0 - (p.beta / self.c1 * p.gross + self.mu)
        return cap, bond

    def budget_residuals(self) -> tuple[float, float]:
        p = self.params
        r0 = self.c0 + self.k1 - (p.k0 ** p.alpha + self.b1 - p.b0 * (1 + p.r0))
        r1 = self.c1 - (self.k1 ** p.alpha - self.b1 * p.gross)
        return r0, r1


def utility(params: EntrepreneurParams, k1, b1):
    """Lifetime utility of (k1, b1); -inf where consumption is not positive."""
    k1 = np.asarray(k1, dtype=float)
    b1 = np.asarray(b1, dtype=float)
    c0 = params.wealth + b1 - k1
    c1 = np.where(k1 > 0, np.abs(k1) ** params.alpha, np.nan) - b1 * params.gross
    with np.errstate(divide="ignore", invalid="ignore"):
        u = np.log(c0) + params.beta * np.log(c1)
    return np.where((c0 > 0) & (c1 > 0) & (k1 > 0), u, -np.inf)


def unconstrained_capital(alpha: float, gross: float) -> float:
    """k1* = (gross / alpha)^(1 / (alpha - 1)), where alpha k^(alpha-1) = 1 + r1."""
    return (gross / alpha) ** (1.0 / (alpha - 1.0))


def unconstrained_debt(params: EntrepreneurParams, k1: float) -> float:
    """b1 solving the bond Euler 1/c0 = beta (1+r1)/c1 given k1 (linear in b1)."""
    r, beta = params.gross, params.beta
    return (k1 ** params.alpha - beta * r * (params.wealth - k1)) / (r * (1 + beta))


def solve_unconstrained(params: EntrepreneurParams) -> EntrepreneurSolution:
    k1 = unconstrained_capital(params.alpha, params.gross)
    b1 = unconstrained_debt(params, k1)
    c0 = params.wealth + b1 - k1
    c1 = k1 ** params.alpha - b1 * params.gross
    if not (c0 > 0 and c1 > 0):
        raise InfeasibleConsumption("no allocation gives positive consumption in both periods")
    if b1 > params.theta * k1:
        raise ConstraintViolated(f"unconstrained debt {b1:.6g} exceeds theta*k1 = {params.theta * k1:.6g}")
    return EntrepreneurSolution(c0, c1, k1, b1, 0.0, "unconstrained", params)


def constrained_upper_bound(params: EntrepreneurParams) -> float:
    """Largest k1 with c0 > 0 and c1 > 0 when b1 = theta k1."""
    p = params
    if p.wealth <= 0:
        raise InfeasibleConsumption(f"non-positive initial resources {p.wealth:.6g}")
    from_c0 = p.wealth / (1 - p.theta)
    from_c1 = (p.theta * p.gross) ** (1.0 / (p.alpha - 1.0))
    return min(from_c0, from_c1)


def implicit_f(k1, params: EntrepreneurParams, gross: float | None = None, theta: float | None = None):
    """F(k1, 1+r1, theta) whose root is the constrained capital choice.

    alpha k^(alpha-1) - (1+r1) - mu (1 - theta) c1 / beta with
    mu = 1/c0 - beta (1+r1)/c1 and b1 = theta k1.
    """
    p = params
    r = p.gross if gross is None else gross
    th = p.theta if theta is None else theta
    k1 = np.asarray(k1, dtype=float)
    c0 = p.wealth - k1 * (1 - th)
    c1 = k1 ** p.alpha - th * k1 * r
    mu = 1 / c0 - p.beta * r / c1
    return p.alpha * k1 ** (p.alpha - 1) - r - mu * (1 - th) / p.beta * c1


def solve_constrained(params: EntrepreneurParams) -> EntrepreneurSolution:
    p = params
    hi = constrained_upper_bound(p)
    # F -> +inf as k -> 0 and turns negative before either consumption hits 0
    grid = np.geomspace(hi * 1e-12, hi * (1 - 1e-12), BRACKET_POINTS)
    with np.errstate(divide="ignore", invalid="ignore"):
        vals = implicit_f(grid, p)
    sign_change = np.flatnonzero((vals[:-1] > 0) & (vals[1:] <= 0))
    if not len(sign_change):
        raise NoBracket("F has no sign change on the feasible capital interval")
    i = int(sign_change[0])
    a, b = grid[i], grid[i + 1]
    if vals[i + 1] == 0:
        k1 = b
    else:
        k1 = brentq(lambda k: float(implicit_f(k, p)), a, b, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
    resid = abs(float(implicit_f(k1, p)))
    if resid > F_TOL * max(1.0, p.gross):
        raise NoBracket(f"root refinement stalled with |F| = {resid:.3g}")
    b1 = p.theta * k1
    c0 = p.wealth - k1 * (1 - p.theta)
    c1 = k1 ** p.alpha - b1 * p.gross
    mu = 1 / c0 - p.beta * p.gross / c1
    if not mu > 0:
        raise NegativeMultiplier(f"multiplier {mu:.3g} is not positive; the constraint does not bind")
    return EntrepreneurSolution(c0, c1, k1, b1, mu, "constrained", p)


def solve(params: EntrepreneurParams) -> EntrepreneurSolution:
    """Unconstrained solution when it respects the cap, constrained otherwise."""
    try:
        return solve_unconstrained(params)
    except ConstraintViolated:
        return solve_constrained(params)


def kink_b0(params: EntrepreneurParams) -> float:
    """Initial debt at which the unconstrained plan exactly exhausts the cap."""
    p = params
    k = unconstrained_capital(p.alpha, p.gross)
    wealth = k + (k ** p.alpha - p.theta * k * p.gross * (1 + p.beta)) / (p.beta * p.gross)
    return (p.k0 ** p.alpha - wealth) / (1 + p.r0)


# -------------------------------------------------------------------- sweeps

AXES = {"r1": "r1", "theta": "theta", "b0": "b0"}
CURVE_COLUMNS = ["axis_value", "k1", "b1", "c0", "c1", "mu", "regime"]


@dataclass
class SweepResult:
    axis: str
    grid: np.ndarray
    solutions: list  # EntrepreneurSolution or None per grid point
    failures: dict  # grid index -> error class name
    kinks: list

    def frame(self) -> pd.DataFrame:
        rows = []
        for x, s, i in zip(self.grid, self.solutions, range(len(self.grid))):
            if s is None:
                rows.append((x, *(float("nan"),) * 5, f"failed:{self.failures[i]}"))
            else:
                rows.append((x, s.k1, s.b1, s.c0, s.c1, s.mu, s.regime))
        return pd.DataFrame(rows, columns=CURVE_COLUMNS)

    def to_csv(self, path) -> None:
        self.frame().to_csv(path, index=False, float_format="%.12g")

    @property
    def k1(self) -> np.ndarray:
        return np.array([np.nan if s is None else s.k1 for s in self.solutions])


def sweep(params: EntrepreneurParams, axis: str, grid) -> SweepResult:
    """Solve along a sorted grid of one parameter; failures are recorded, not raised."""
    if axis not in AXES:
        raise ValueError(f"axis must be one of {sorted(AXES)}")
    grid = np.asarray(grid, dtype=float)
    if np.any(np.diff(grid) < 0):
        raise ValueError("grid must be sorted")
    sols, failures = [], {}
    for i, x in enumerate(grid):
        try:
            sols.append(solve(params.with_(**{AXES[axis]: float(x)})))
        except (SpilloverError, ValueError) as exc:
            sols.append(None)
            failures[i] = type(exc).__name__
    kinks = []
    for i in range(len(grid) - 1):
        a, b = sols[i], sols[i + 1]
        if a is not None and b is not None and a.regime != b.regime:
            kinks.append(0.5 * (grid[i] + grid[i + 1]))
    return SweepResult(axis, grid, sols, failures, kinks)


# -------------------------------------------------------------- propositions

def unconstrained_rate_derivative(alpha: float, k1: float) -> float:
    """dk1/d(1+r1) = 1 / (alpha (alpha - 1) k1^(alpha - 2)) from the implicit function theorem."""
    return 1.0 / (alpha * (alpha - 1.0) * k1 ** (alpha - 2.0))


def implicit_derivative(params: EntrepreneurParams, k1: float, wrt: str, h: float = 1e-6) -> float:
    """-F_x / F_k for the constrained F, partials by central differences."""
    p = params
    dk = h * k1
    fk = (implicit_f(k1 + dk, p) - implicit_f(k1 - dk, p)) / (2 * dk)
    if wrt == "gross":
        d = h * p.gross
        fx = (implicit_f(k1, p, gross=p.gross + d) - implicit_f(k1, p, gross=p.gross - d)) / (2 * d)
    elif wrt == "theta":
        d = h * p.theta
        fx = (implicit_f(k1, p, theta=p.theta + d) - implicit_f(k1, p, theta=p.theta - d)) / (2 * d)
    else:
        raise ValueError(f"unknown parameter {wrt!r}")
    return float(-fx / fk)


def _central(params, field_name, h, regime):
    base = getattr(params, field_name)
    step = h * (1 + base) if field_name == "r1" else h * base
    up = solve(params.with_(**{field_name: base + step}))
    down = solve(params.with_(**{field_name: base - step}))
    if up.regime != regime or down.regime != regime:
        raise RegimeMismatch(f"perturbing {field_name} by {step:.3g} crosses the kink")
    return (up.k1 - down.k1) / (2 * step)


@dataclass
class PropositionReport:
    unconstrained: EntrepreneurSolution
    constrained: EntrepreneurSolution
    dk_dr_unconstrained: float
    dk_dr_constrained: float
    dk_dr_unconstrained_analytic: float
    dk_dr_constrained_implicit: float
    dk_dtheta_constrained: float
    dk_dtheta_constrained_implicit: float
    checks: dict

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def lines(self) -> list[str]:
        out = [
            f"unconstrained b0={self.unconstrained.params.b0:.6g} k1={self.unconstrained.k1:.10g}",
            f"constrained   b0={self.constrained.params.b0:.6g} k1={self.constrained.k1:.10g} mu={self.constrained.mu:.6g}",
            f"dk1/d(1+r1) unconstrained: numeric={self.dk_dr_unconstrained:.10g} analytic={self.dk_dr_unconstrained_analytic:.10g}",
            f"dk1/d(1+r1) constrained:   numeric={self.dk_dr_constrained:.10g} implicit={self.dk_dr_constrained_implicit:.10g}",
            f"dk1/dtheta  constrained:   numeric={self.dk_dtheta_constrained:.10g} implicit={self.dk_dtheta_constrained_implicit:.10g}",
        ]
        out += [f"{'PASS' if ok else 'FAIL'} {name}" for name, ok in self.checks.items()]
        return out

    def to_dict(self) -> dict:
        d = {k: v for k, v in self.__dict__.items() if isinstance(v, float)}
        d["checks"] = dict(self.checks)
        d["unconstrained_params"] = asdict(self.unconstrained.params)
        d["constrained_params"] = asdict(self.constrained.params)
        return d


def verify_propositions(params_pair, h: float = 1e-5, analytic_rtol: float = 1e-6) -> PropositionReport:
    """Finite-difference check of the rate and leverage-cap comparative statics.

    ``params_pair`` differ only in b0 and must straddle the kink.
    """
    a, b = params_pair
    if replace(a, b0=0.0) != replace(b, b0=0.0):
        raise ValueError("the pair must differ only in b0")
    sa, sb = solve(a), solve(b)
    if {sa.regime, sb.regime} != {"unconstrained", "constrained"}:
        raise RegimeMismatch(f"pair regimes are {sa.regime} and {sb.regime}; need one of each")
    unc, con = (sa, sb) if sa.regime == "unconstrained" else (sb, sa)

    du = _central(unc.params, "r1", h, "unconstrained")
    dc = _central(con.params, "r1", h, "constrained")
    dth = _central(con.params, "theta", h, "constrained")
    analytic = unconstrained_rate_derivative(unc.params.alpha, unc.k1)
    checks = {
        "rate derivatives negative": du < 0 and dc < 0,
        "unconstrained responds more to the rate": abs(du) > abs(dc),
        "unconstrained derivative matches closed form": abs(du - analytic) <= analytic_rtol * abs(analytic),
        "constrained capital increasing in theta": dth > 0,
    }
    return PropositionReport(
        unc, con, du, dc, analytic,
        implicit_derivative(con.params, con.k1, "gross"), dth,
        implicit_derivative(con.params, con.k1, "theta"), checks,
    )


def default_pair(params: EntrepreneurParams | None = None, gap: float = 0.05) -> tuple[EntrepreneurParams, EntrepreneurParams]:
    """Two entrepreneurs placed ``gap`` on either side of the kink in b0."""
    p = params or EntrepreneurParams()
    kb = kink_b0(p)
    return p.with_(b0=kb - gap), p.with_(b0=kb + gap)
