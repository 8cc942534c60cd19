"""Liability, tax-benefit, bankruptcy-cost, firm-value and equity computation.

The insurer continuously reissues contracts with maturities uniformly
spread over [0, T], so the portfolio liability is the maturity average of
single-cohort liabilities.  Tax benefits and bankruptcy costs persist
under perpetual refinancing and integrate over [0, inf).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import closedforms as cf
from .core import lambdas
from .params import Scenario
from .quadrature import integrate_finite, integrate_semi_infinite


@dataclass(frozen=True)
class ValuationBreakdown:
    """Value components of the insurance company at a given barrier."""

    firm_value: float
    equity: float
    liability: float
    tb1: float
    tb2: float
    bc: float
    vb: float


def _cdo_breakpoints(v: float, k: float, vb: float, sigma: float, t_mat: float):
    """Seed panel boundaries at the time scales where barrier/strike effects
    switch on, so narrow boundary layers cannot slip between quadrature nodes."""
    pts = []
    for ratio in ((v / vb if vb > 0 else 0.0), (v / k if k > 0 else 0.0)):
        if ratio > 1.0:
            t_knee = (math.log(ratio) / sigma) ** 2
            for s in (0.25, 1.0, 4.0):
                t = s * t_knee
                if 0.0 < t < t_mat:
                    pts.append(t)
    return pts


def integral_cdo_finite(v: float, k: float, vb: float, t_mat: float, m,
                        tol: float = 1e-9) -> float:
    """int_0^T c_do(v, k, vb, t) dt by adaptive quadrature."""
    if v <= vb:
        return 0.0

    def f(t):
        return cf.down_and_out_call(v, k, vb, t, m)

    bps = _cdo_breakpoints(v, k, vb, m.sigma, t_mat)
    return integrate_finite(f, 0.0, t_mat, tol=tol, breakpoints=bps).value


def integral_cdo_semi_infinite(v: float, k: float, vb: float, m,
                               tol: float = 1e-9) -> float:
    """int_0^inf c_do(v, k, vb, t) dt, truncated by the bound (v/nu) e^{-nu T}."""
    if v <= vb:
        return 0.0

    def f(t):
        return cf.down_and_out_call(v, k, vb, t, m)

    def tail(t_max):
        return (v / m.nu) * math.exp(-m.nu * t_max)

    bps = _cdo_breakpoints(v, k, vb, m.sigma, math.inf)
    return integrate_semi_infinite(f, tol=tol, tail_bound=tail, breakpoints=bps).value


def cohort_liability(scenario: Scenario, vb: float, t: float,
                     tol: float = 1e-9) -> float:
    """Liability of the single cohort maturing at ``t``:

    l = g/r + e^{-rt}(p - g/r)(1 - F(t)) + ((1-rho) vb - g/r) G(t) + alpha c_do.
    """
    c = scenario.contract
    m = scenario.market
    if not 0.0 < t <= c.t_mat * (1.0 + 1e-12):
        raise ValueError(f"cohort maturity must lie in (0, T], got {t}")
    if vb < 0 or vb > scenario.v0:
        raise ValueError("barrier must lie in [0, v0]")
    g, p = c.g_rate, c.p_rate
    if vb == 0:
        f_t, g_t = 0.0, 0.0
    else:
        f_t = float(cf.first_passage_cdf(scenario.v0, vb, t, m))
        g_t = float(cf.discounted_passage(scenario.v0, vb, t, m))
    out = (g / m.r
           + math.exp(-m.r * t) * (p - g / m.r) * (1.0 - f_t)
           + ((1.0 - scenario.frictions.rho) * vb - g / m.r) * g_t)
    if c.alpha > 0:
        out += c.alpha * float(cf.down_and_out_call(scenario.v0, c.k_threshold, vb, t, m))
    return out


def total_liability(scenario: Scenario, vb: float, tol: float = 1e-9) -> float:
    """Total portfolio liability

    L = G/r + (P - G/r)((1 - e^{-rT})/(rT) - I1) + ((1-rho) vb - G/r) I2
        + alpha int_0^T c_do dt.
    """
    c = scenario.contract
    m = scenario.market
    if vb < 0 or vb > scenario.v0 * (1.0 + 1e-12):
        raise ValueError("barrier must lie in [0, v0]")
    t_mat = c.t_mat
    g_ann = c.g_total / m.r
    if vb == 0:
        i1, i2 = 0.0, 0.0
    else:
        i1, i2 = cf.i1_i2(scenario.v0, vb, t_mat, m)
        i1, i2 = float(i1), float(i2)
    out = (g_ann
           + (c.p_lump - g_ann) * ((1.0 - math.exp(-m.r * t_mat)) / (m.r * t_mat) - i1)
           + ((1.0 - scenario.frictions.rho) * vb - g_ann) * i2)
    if c.alpha > 0:
        out += c.alpha * integral_cdo_finite(scenario.v0, c.k_threshold, vb, t_mat,
                                             m, tol=tol)
    return out


def firm_value(scenario: Scenario, vb: float, tol: float = 1e-9) -> ValuationBreakdown:
    """Firm value v = V + TB1 + TB2 - BC, liability and equity at barrier ``vb``.

    Equity is reported as exactly zero when v0 <= vb (absolute priority rule).
    """
    v = firm_value_only(scenario, vb, tol=tol)
    liab = total_liability(scenario, vb, tol=tol)
    tb1, tb2, bc = _value_components(scenario, vb, tol=tol)
    equity = v - liab
    if scenario.v0 <= vb:
        equity = 0.0
    return ValuationBreakdown(firm_value=v, equity=equity, liability=liab,
                              tb1=tb1, tb2=tb2, bc=bc, vb=vb)


def _value_components(scenario: Scenario, vb: float, tol: float = 1e-9):
    c = scenario.contract
    m = scenario.market
    fr = scenario.frictions
    lam23 = lambdas(m).lam23
    if vb == 0:
        passage_pow = 0.0
    else:
        passage_pow = math.exp(lam23 * (math.log(vb) - math.log(scenario.v0)))
    tb1 = fr.tau1 * (c.g_total / m.r) * (1.0 - passage_pow)
    bc = fr.rho * vb * passage_pow
    tb2 = 0.0
    if c.alpha > 0 and fr.tau2 > 0 and scenario.v0 > vb:
        tb2 = fr.tau2 * c.alpha * integral_cdo_semi_infinite(
            scenario.v0, c.k_threshold, vb, m, tol=tol)
    return tb1, tb2, bc


def firm_value_only(scenario: Scenario, vb: float, tol: float = 1e-9) -> float:
    """The scalar firm value, skipping the liability leg (optimizer objective)."""
    if vb < 0 or vb > scenario.v0 * (1.0 + 1e-12):
        raise ValueError("barrier must lie in [0, v0]")
    tb1, tb2, bc = _value_components(scenario, vb, tol=tol)
    return scenario.v0 + tb1 + tb2 - bc


def equity_curve(scenario: Scenario, vb: float, v_grid, tol: float = 1e-9):
    """Equity E(V) along an asset-value grid at a fixed barrier.

    Values below the barrier are zero by the absolute priority rule; above
    it the raw difference v - L is returned, which diagnostic plots rely on
    (it may go negative when the participation rate violates its bound).
    """
    v_grid = np.atleast_1d(np.asarray(v_grid, dtype=float))
    out = np.zeros_like(v_grid)
    for i, v in enumerate(v_grid):
        if v <= vb:
            out[i] = 0.0
            continue
        s = Scenario(v0=float(v), market=scenario.market,
                     contract=scenario.contract, frictions=scenario.frictions)
        bd = firm_value(s, vb, tol=tol)
        out[i] = bd.firm_value - bd.liability
    return out
