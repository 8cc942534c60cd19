"""Parameter sweeps and comparative statics of the numerical study.

Each operation emits a :class:`SweepTable` whose rows line up one-to-one
with the requested grid; failures are recorded per row rather than
aborting the sweep.  All numerics are deterministic, so rerunning a sweep
with the same configuration reproduces it bit for bit.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from .barrier_solver import solve_vb
from .optimize import find_tau_bar, optimize_alpha
from .params import Scenario
from .valuation import firm_value

SUBSTITUTION_SIGMA_STEP = 1e-4   # central-difference step in volatility


@dataclass
class SweepTable:
    """Grid-aligned sweep output: one row per grid point, errors kept per row."""

    axis: str
    values: np.ndarray
    columns: dict[str, np.ndarray]
    errors: list[str | None] = field(default_factory=list)

    def column_names(self) -> list[str]:
        return [self.axis, *self.columns.keys(), "error"]

    def rows(self):
        n = len(self.values)
        errs = self.errors or [None] * n
        for i in range(n):
            yield ([self.values[i]]
                   + [col[i] for col in self.columns.values()]
                   + [errs[i] or ""])

    @property
    def failure_fraction(self) -> float:
        if not self.errors:
            return 0.0
        return sum(e is not None for e in self.errors) / len(self.errors)


def _run_rows(axis, grid, fn, columns):
    grid = np.asarray(grid, dtype=float)
    out = {name: np.full(grid.shape, np.nan) for name in columns}
    errors: list[str | None] = [None] * grid.size
    for i, x in enumerate(grid):
        try:
            row = fn(float(x))
        except Exception as exc:  # per-row diagnostics, sweep continues
            errors[i] = f"{type(exc).__name__}: {exc}"
            continue
        for name, value in row.items():
            out[name][i] = value
    return SweepTable(axis, grid, out, errors)


def _with_axis(scenario: Scenario, axis: str, x: float) -> Scenario:
    c = scenario.contract
    if axis == "alpha":
        return scenario.with_contract(alpha=x)
    if axis == "g_over_p":
        return scenario.with_contract(g_total=x * c.p_lump)
    if axis == "p_over_v0":
        # The guarantee ratio travels with the lump sum.
        ratio = c.g_total / c.p_lump
        p = x * scenario.v0
        return scenario.with_contract(p_lump=p, g_total=ratio * p)
    if axis == "nu":
        return scenario.with_market(nu=x)
    if axis == "sigma":
        return scenario.with_market(sigma=x)
    if axis == "t_mat":
        return scenario.with_contract(t_mat=x)
    if axis == "tau1":
        return scenario.with_frictions(tau1=x)
    if axis == "tau2":
        return scenario.with_frictions(tau2=x)
    if axis == "tau":
        return scenario.with_frictions(tau1=x, tau2=x)
    raise ValueError(f"unknown sweep axis {axis!r}")


def sweep_vb(scenario: Scenario, axis: str, grid) -> SweepTable:
    """Bankruptcy barrier along a participation-rate or guarantee-ratio grid."""
    if axis not in ("alpha", "g_over_p"):
        raise ValueError("sweep_vb axis must be 'alpha' or 'g_over_p'")

    def fn(x):
        sol = solve_vb(_with_axis(scenario, axis, x))
        return {"vb": sol.vb, "vb_over_v0": sol.vb / scenario.v0,
                "immediate": float(sol.method == "immediate-bankruptcy"),
                "residual": sol.residual}

    return _run_rows(axis, grid, fn, ["vb", "vb_over_v0", "immediate", "residual"])


def immediate_bankruptcy_guarantee(scenario: Scenario,
                                   lo: float = 0.0, hi: float = 0.5,
                                   tol: float = 1e-6) -> float:
    """Guarantee ratio G/P at which the solved barrier first reaches V0."""

    def immediate(gp: float) -> bool:
        sol = solve_vb(_with_axis(scenario, "g_over_p", gp))
        return sol.method == "immediate-bankruptcy"

    if immediate(lo):
        return lo
    while not immediate(hi):
        hi *= 2.0
        if hi > 1e3:
            raise RuntimeError("no immediate-bankruptcy guarantee ratio found")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if immediate(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def curves_vs_guarantee(scenario: Scenario, grid) -> SweepTable:
    """Firm value, equity and liability along a G/P grid."""

    def fn(gp):
        s = _with_axis(scenario, "g_over_p", gp)
        sol = solve_vb(s)
        bd = firm_value(s, sol.vb)
        return {"v": bd.firm_value, "equity": bd.equity,
                "liability": bd.liability, "vb": sol.vb}

    return _run_rows("g_over_p", grid, fn, ["v", "equity", "liability", "vb"])


def curves_vs_asset(scenario: Scenario, v_grid, vb: float | None = None) -> SweepTable:
    """Firm value, equity and liability along an asset-value grid at fixed barrier."""
    if vb is None:
        vb = solve_vb(scenario).vb

    def fn(v):
        if v < vb:
            raise ValueError("asset grid point below the solved barrier")
        bd = firm_value(dataclasses.replace(scenario, v0=v), vb)
        return {"v": bd.firm_value, "equity": bd.equity,
                "liability": bd.liability}

    table = _run_rows("asset_value", v_grid, fn, ["v", "equity", "liability"])
    table.columns["vb"] = np.full(len(table.values), vb)
    return table


def sensitivity_alpha_star(scenario: Scenario, axis: str, grid) -> SweepTable:
    """Optimal participation rate along a nu, maturity, or tau2 grid."""
    if axis not in ("nu", "t_mat", "tau2"):
        raise ValueError("sensitivity axis must be 'nu', 't_mat' or 'tau2'")

    def fn(x):
        res = optimize_alpha(_with_axis(scenario, axis, x))
        return {"alpha_star": float(res.arg), "v": res.objective,
                "boundary": float(res.boundary_flag)}

    return _run_rows(axis, grid, fn, ["alpha_star", "v", "boundary"])


def _alpha_positive(scenario: Scenario) -> bool:
    """Whether offering participation is worthwhile: the marginal firm value
    at alpha = 0 must be positive, i.e. tau2 exceeds the threshold tax rate."""
    tau_bar = find_tau_bar(scenario)
    return tau_bar is not None and tau_bar < scenario.frictions.tau2


def _g_positive(scenario: Scenario) -> bool:
    """Whether a positive guarantee rate is worthwhile: the marginal firm
    value in g at g = 0 must be positive (the g-positivity condition)."""
    from .barrier_solver import _g_star_condition
    return _g_star_condition(scenario)


def region_scan(scenario: Scenario, which: str, x_grid, y_axis: str,
                y_grid) -> SweepTable:
    """Positivity region of an optimal rate over a (P/V0, y) parameter grid.

    ``which`` selects the tested optimum ('alpha' or 'g'); ``y_axis`` is
    'tau' (tau1 = tau2 together) or 'g_over_p'.  The emitted table has one
    row per (x, y) cell with a 0/1 ``positive`` column.
    """
    if which not in ("alpha", "g"):
        raise ValueError("region_scan tests 'alpha' or 'g'")
    if y_axis not in ("tau", "g_over_p"):
        raise ValueError("region_scan y_axis must be 'tau' or 'g_over_p'")
    x_grid = np.asarray(x_grid, dtype=float)
    y_grid = np.asarray(y_grid, dtype=float)
    cells = [(x, y) for x in x_grid for y in y_grid]

    def fn(i):
        x, y = cells[int(i)]
        s = _with_axis(_with_axis(scenario, "p_over_v0", x), y_axis, y)
        positive = _alpha_positive(s) if which == "alpha" else _g_positive(s)
        return {"p_over_v0": x, y_axis: y, "positive": float(positive)}

    return _run_rows("cell", np.arange(len(cells)), fn,
                     ["p_over_v0", y_axis, "positive"])


@dataclass
class SubstitutionReport:
    """Volatility comparative statics of equity and liability on an asset grid.

    The substitution flag marks cells where equity gains and liability loses
    from a volatility increase; the barrier is re-solved at each bumped
    volatility, and the central-difference step is recorded.
    """

    alpha: float
    t_mat: float
    v_grid: np.ndarray
    de_dsigma: np.ndarray
    dl_dsigma: np.ndarray
    sigma_step: float

    @property
    def flags(self) -> np.ndarray:
        return (self.de_dsigma > 0) & (self.dl_dsigma < 0)

    @property
    def onset(self) -> float | None:
        """Smallest grid asset value inside the substitution region, if any."""
        f = self.flags
        if not f.any():
            return None
        return float(self.v_grid[int(np.argmax(f))])

    @property
    def region_empty(self) -> bool:
        return not self.flags.any()


def _equity_liability_curves(scenario: Scenario, v_grid: np.ndarray):
    vb = solve_vb(scenario).vb
    eq = np.empty(v_grid.shape)
    li = np.empty(v_grid.shape)
    for i, v in enumerate(v_grid):
        if v <= vb:
            # Bankrupt already: policyholders hold the recovery value.
            eq[i] = 0.0
            li[i] = (1.0 - scenario.frictions.rho) * vb
            continue
        bd = firm_value(dataclasses.replace(scenario, v0=float(v)), vb)
        eq[i] = bd.firm_value - bd.liability
        li[i] = bd.liability
    return eq, li


def asset_substitution(scenario: Scenario, v_grid=None,
                       alphas=(0.0,), t_mats=None) -> list[SubstitutionReport]:
    """Volatility derivatives of equity and liability per (alpha, maturity).

    Central differences with step ``SUBSTITUTION_SIGMA_STEP``; the barrier is
    re-solved under each volatility bump (full-model comparative static).
    """
    if v_grid is None:
        v_grid = np.arange(0.5, 2.0 + 1e-9, 0.01) * scenario.v0
    v_grid = np.asarray(v_grid, dtype=float)
    if t_mats is None:
        t_mats = (scenario.contract.t_mat,)
    ds = SUBSTITUTION_SIGMA_STEP
    reports = []
    for t_mat in t_mats:
        for alpha in alphas:
            s = scenario.with_contract(alpha=float(alpha), t_mat=float(t_mat))
            up = s.with_market(sigma=s.market.sigma + ds)
            dn = s.with_market(sigma=s.market.sigma - ds)
            e_up, l_up = _equity_liability_curves(up, v_grid)
            e_dn, l_dn = _equity_liability_curves(dn, v_grid)
            reports.append(SubstitutionReport(
                alpha=float(alpha), t_mat=float(t_mat), v_grid=v_grid,
                de_dsigma=(e_up - e_dn) / (2.0 * ds),
                dl_dsigma=(l_up - l_dn) / (2.0 * ds),
                sigma_step=ds,
            ))
    return reports
