"""Closed-form valuation primitives.

First-passage distributions of the asset value to a lower barrier,
vanilla and down-and-out call prices under the risk-neutral dynamics
dV = (r - nu) V dt + sigma V dW, and the exact derivative expressions
the bankruptcy solver and the rate optimizer rely on.

All functions broadcast over numpy arrays in the asset value ``v``
and/or the horizon ``t``; barrier ``vb``, strike ``k`` and market
parameters are scalars.  Power-times-Phi tail products are evaluated in
log space so extreme barrier/asset ratios neither overflow nor
underflow prematurely.
"""
from __future__ import annotations

import math

import numpy as np

from .core import (
    a_constants,
    lambdas,
    log_pow_cdf,
    pow_pdf,
    std_normal_cdf,
    std_normal_pdf,
)
from .params import MarketParams


def _check_positive(name, x):
    if np.any(np.asarray(x) <= 0):
        raise ValueError(f"{name} must be positive")


def _d_pm(log_x, t, lam_coef, sigma):
    """(ln x + lam_coef * sigma^2 * t) / (sigma sqrt t) on arrays."""
    sqt = np.sqrt(t)
    return log_x / (sigma * sqt) + lam_coef * sigma * sqt


def first_passage_cdf(v, vb, t, m: MarketParams):
    """P(tau <= t): probability the asset hits the barrier ``vb`` by ``t``.

    F^V(t) = Phi(-d3(v/vb, t)) + (vb/v)^(2 lambda2) Phi(-d4(v/vb, t)).
    """
    _check_positive("barrier", vb)
    _check_positive("horizon", t)
    v = np.asarray(v, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(v < vb):
        raise ValueError("asset value must not be below the barrier")
    lam = lambdas(m)
    lr = math.log(vb) - np.log(v)          # ln(vb/v) <= 0
    d3 = _d_pm(-lr, t, lam.lambda2, m.sigma)
    d4 = _d_pm(-lr, t, -lam.lambda2, m.sigma)
    f = std_normal_cdf(-d3) + log_pow_cdf(2.0 * lam.lambda2, lr, -d4)
    return np.clip(f, 0.0, 1.0)


def discounted_passage(v, vb, t, m: MarketParams):
    """E[e^(-r tau) 1{tau <= t}], the discounted first-passage kernel.

    G^V(t) = (vb/v)^(l2-l3) Phi(-d5(v/vb, t)) + (vb/v)^(l2+l3) Phi(-d6(v/vb, t)).
    """
    _check_positive("barrier", vb)
    _check_positive("horizon", t)
    v = np.asarray(v, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(v < vb):
        raise ValueError("asset value must not be below the barrier")
    lam = lambdas(m)
    lr = math.log(vb) - np.log(v)
    d5 = _d_pm(-lr, t, lam.lambda3, m.sigma)
    d6 = _d_pm(-lr, t, -lam.lambda3, m.sigma)
    g = (log_pow_cdf(lam.lambda2 - lam.lambda3, lr, -d5)
         + log_pow_cdf(lam.lambda2 + lam.lambda3, lr, -d6))
    return np.clip(g, 0.0, 1.0)


def i1_i2(v, vb, t_mat, m: MarketParams):
    """The maturity-averaged passage integrals (I1, I2).

    I1 = (1/T) int_0^T e^{-rt} F^V(t) dt and I2 = (1/T) int_0^T G^V(t) dt,
    both via their closed forms:

    I1 = (G^V(T) - e^{-rT} F^V(T)) / (rT),
    I2 = [ (vb/v)^(l2-l3) Phi(-d5) d5 - (vb/v)^(l2+l3) Phi(-d6) d6 ] / (l3 sigma sqrt T).
    """
    _check_positive("barrier", vb)
    _check_positive("maturity", t_mat)
    v = np.asarray(v, dtype=float)
    if np.any(v < vb):
        raise ValueError("asset value must not be below the barrier")
    lam = lambdas(m)
    lr = math.log(vb) - np.log(v)
    f_t = first_passage_cdf(v, vb, t_mat, m)
    g_t = discounted_passage(v, vb, t_mat, m)
    i1 = (g_t - math.exp(-m.r * t_mat) * f_t) / (m.r * t_mat)

    d5 = _d_pm(-lr, t_mat, lam.lambda3, m.sigma)
    d6 = _d_pm(-lr, t_mat, -lam.lambda3, m.sigma)
    i2 = (log_pow_cdf(lam.lambda2 - lam.lambda3, lr, -d5) * d5
          - log_pow_cdf(lam.lambda2 + lam.lambda3, lr, -d6) * d6)
    i2 = i2 / (lam.lambda3 * m.sigma * math.sqrt(t_mat))
    return i1, i2


def i1_i2_dv_at_barrier(vb: float, t_mat: float, m: MarketParams) -> tuple[float, float]:
    """Derivatives of I1 and I2 in the asset value, evaluated at v = vb.

    dI1/dV|_{V=vb} = -2 A1 / (r T vb) and dI2/dV|_{V=vb} = -2 A2 / vb.
    """
    _check_positive("barrier", vb)
    ac = a_constants(m, t_mat)
    return (-2.0 * ac.a1 / (m.r * t_mat * vb), -2.0 * ac.a2 / vb)


def vanilla_call(v, k, t, m: MarketParams):
    """Dividend-adjusted European call: v e^{-nu t} Phi(d1) - k e^{-rt} Phi(d2)."""
    _check_positive("asset value", v)
    _check_positive("horizon", t)
    v = np.asarray(v, dtype=float)
    t = np.asarray(t, dtype=float)
    if k < 0:
        raise ValueError("strike must be nonnegative")
    if k == 0:
        return v * np.exp(-m.nu * t)
    lam = lambdas(m)
    lx = np.log(v) - math.log(k)
    d1 = _d_pm(lx, t, lam.lambda1, m.sigma)
    d2 = _d_pm(lx, t, lam.lambda2, m.sigma)
    return (v * np.exp(-m.nu * t) * std_normal_cdf(d1)
            - k * np.exp(-m.r * t) * std_normal_cdf(d2))


def cdo_barrier_below_strike(v, k, vb, t, m: MarketParams):
    """Down-and-out call formula for vb <= k (positive barrier)."""
    lam = lambdas(m)
    sigma = m.sigma
    lr = math.log(vb) - np.log(v)          # ln(vb/v)
    disc_nu = np.exp(-m.nu * t)
    disc_r = np.exp(-m.r * t)
    lk = np.log(v) - math.log(k)           # ln(v/k)
    lbk = 2.0 * math.log(vb) - np.log(v) - math.log(k)   # ln(vb^2/(v k))
    d1a = _d_pm(lk, t, lam.lambda1, sigma)
    d2a = _d_pm(lk, t, lam.lambda2, sigma)
    d1b = _d_pm(lbk, t, lam.lambda1, sigma)
    d2b = _d_pm(lbk, t, lam.lambda2, sigma)
    c = v * disc_nu * std_normal_cdf(d1a) - k * disc_r * std_normal_cdf(d2a)
    return (c
            - v * disc_nu * log_pow_cdf(2.0 * lam.lambda1, lr, d1b)
            + k * disc_r * log_pow_cdf(2.0 * lam.lambda1 - 2.0, lr, d2b))


def cdo_barrier_above_strike(v, k, vb, t, m: MarketParams):
    """Down-and-out call formula for vb >= k (positive barrier)."""
    lam = lambdas(m)
    sigma = m.sigma
    lr = math.log(vb) - np.log(v)
    disc_nu = np.exp(-m.nu * t)
    disc_r = np.exp(-m.r * t)
    lvb = -lr                               # ln(v/vb)
    d1a = _d_pm(lvb, t, lam.lambda1, sigma)
    d2a = _d_pm(lvb, t, lam.lambda2, sigma)
    d1b = _d_pm(lr, t, lam.lambda1, sigma)
    d2b = _d_pm(lr, t, lam.lambda2, sigma)
    out = (v * disc_nu * std_normal_cdf(d1a)
           - v * disc_nu * log_pow_cdf(2.0 * lam.lambda1, lr, d1b))
    if k > 0:
        out = (out - k * disc_r * std_normal_cdf(d2a)
               + k * disc_r * log_pow_cdf(2.0 * lam.lambda1 - 2.0, lr, d2b))
    return out


def down_and_out_call(v, k, vb, t, m: MarketParams):
    """Down-and-out call with barrier ``vb`` and strike ``k``.

    Dispatches between the vb <= k and vb > k pricing formulas, which
    coincide at vb = k; vb = 0 degenerates to the vanilla call.
    """
    _check_positive("asset value", v)
    _check_positive("horizon", t)
    if k < 0 or vb < 0:
        raise ValueError("strike and barrier must be nonnegative")
    v = np.asarray(v, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(v < vb):
        raise ValueError("asset value must not be below the barrier")
    if vb == 0:
        return vanilla_call(v, k, t, m)
    if vb <= k:
        out = cdo_barrier_below_strike(v, k, vb, t, m)
    else:
        out = cdo_barrier_above_strike(v, k, vb, t, m)
    return np.maximum(out, 0.0)


def dcdo_dv(v, k, vb, t, m: MarketParams):
    """Delta of the down-and-out call in the asset value (both branches)."""
    _check_positive("asset value", v)
    _check_positive("horizon", t)
    if k < 0 or vb < 0:
        raise ValueError("strike and barrier must be nonnegative")
    v = np.asarray(v, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(v < vb):
        raise ValueError("asset value must not be below the barrier")

    lam = lambdas(m)
    sigma = m.sigma
    sq = sigma * np.sqrt(t)
    disc_nu = np.exp(-m.nu * t)
    disc_r = np.exp(-m.r * t)

    if k == 0 and vb == 0:
        return disc_nu * np.ones_like(v * t)

    if vb <= k:
        # vb = 0 reduces to the vanilla delta (barrier terms vanish).
        lk = np.log(v) - math.log(k)
        d1a = _d_pm(lk, t, lam.lambda1, sigma)
        d2a = _d_pm(lk, t, lam.lambda2, sigma)
        out = (disc_nu * std_normal_cdf(d1a)
               + disc_nu * std_normal_pdf(d1a) / sq
               - k * disc_r * std_normal_pdf(d2a) / (sq * v))
        if vb > 0:
            lr = math.log(vb) - np.log(v)
            lbk = 2.0 * math.log(vb) - np.log(v) - math.log(k)
            d1b = _d_pm(lbk, t, lam.lambda1, sigma)
            d2b = _d_pm(lbk, t, lam.lambda2, sigma)
            out = (out
                   - (1.0 - 2.0 * lam.lambda1) * disc_nu
                   * log_pow_cdf(2.0 * lam.lambda1, lr, d1b)
                   + disc_nu * pow_pdf(2.0 * lam.lambda1, lr, d1b) / sq
                   + (2.0 - 2.0 * lam.lambda1) * (k * disc_r / v)
                   * log_pow_cdf(2.0 * lam.lambda1 - 2.0, lr, d2b)
                   - k * disc_r * pow_pdf(2.0 * lam.lambda1 - 2.0, lr, d2b) / (sq * v))
        return out

    lr = math.log(vb) - np.log(v)
    lvb = -lr
    d1a = _d_pm(lvb, t, lam.lambda1, sigma)
    d2a = _d_pm(lvb, t, lam.lambda2, sigma)
    d1b = _d_pm(lr, t, lam.lambda1, sigma)
    d2b = _d_pm(lr, t, lam.lambda2, sigma)
    out = (disc_nu * std_normal_cdf(d1a)
           + disc_nu * std_normal_pdf(d1a) / sq
           - (1.0 - 2.0 * lam.lambda1) * disc_nu * log_pow_cdf(2.0 * lam.lambda1, lr, d1b)
           + disc_nu * pow_pdf(2.0 * lam.lambda1, lr, d1b) / sq)
    if k > 0:
        out = (out
               - k * disc_r * std_normal_pdf(d2a) / (sq * v)
               + (2.0 - 2.0 * lam.lambda1) * (k * disc_r / v)
               * log_pow_cdf(2.0 * lam.lambda1 - 2.0, lr, d2b)
               - k * disc_r * pow_pdf(2.0 * lam.lambda1 - 2.0, lr, d2b) / (sq * v))
    return out


def dcdo_dv_at_barrier(vb, k, t, m: MarketParams):
    """The barrier delta D(t) = d c_do / dV evaluated at V = vb.

    D(t) = 2 e^{-nu t} [l1 Phi(d1(mr, t)) + phi(d1(mr, t)) / (sigma sqrt t)]
         - (2 k e^{-rt} / vb) [l2 Phi(d2(mr, t)) + phi(d2(mr, t)) / (sigma sqrt t)],
    with mr = min(vb/k, 1); for k = 0 only the first bracket survives.
    """
    _check_positive("barrier", vb)
    _check_positive("horizon", t)
    if k < 0:
        raise ValueError("strike must be nonnegative")
    t = np.asarray(t, dtype=float)
    lam = lambdas(m)
    sq = m.sigma * np.sqrt(t)
    log_mr = min(math.log(vb) - math.log(k), 0.0) if k > 0 else 0.0
    d1 = _d_pm(log_mr, t, lam.lambda1, m.sigma)
    out = 2.0 * np.exp(-m.nu * t) * (
        lam.lambda1 * std_normal_cdf(d1) + std_normal_pdf(d1) / sq)
    if k > 0:
        d2 = _d_pm(log_mr, t, lam.lambda2, m.sigma)
        out = out - (2.0 * k * np.exp(-m.r * t) / vb) * (
            lam.lambda2 * std_normal_cdf(d2) + std_normal_pdf(d2) / sq)
    return out


def d2cdo_dvb_dv_at_barrier(vb, k, t, m: MarketParams):
    """Sensitivity of the barrier delta D(t) to the barrier level itself.

    Equals (2 k e^{-rt} / vb^2) [l2 Phi(d2(mr,t)) + phi(d2(mr,t)) / (sigma sqrt t)]
    and is nonnegative; identically zero for k = 0.
    """
    _check_positive("barrier", vb)
    _check_positive("horizon", t)
    if k < 0:
        raise ValueError("strike must be nonnegative")
    t = np.asarray(t, dtype=float)
    if k == 0:
        return np.zeros_like(t)
    lam = lambdas(m)
    sq = m.sigma * np.sqrt(t)
    log_mr = min(math.log(vb) - math.log(k), 0.0)
    d2 = _d_pm(log_mr, t, lam.lambda2, m.sigma)
    out = (2.0 * k * np.exp(-m.r * t) / (vb * vb)) * (
        lam.lambda2 * std_normal_cdf(d2) + std_normal_pdf(d2) / sq)
    return np.maximum(out, 0.0)


def dcdo_dvb(v, k, vb, t, m: MarketParams):
    """Sensitivity of the down-and-out call to the barrier level.

    This is the factor multiplying V_B'(alpha) (resp. V_B'(g)) in the
    chain-rule derivatives of c_do with respect to the contract rates.
    """
    _check_positive("asset value", v)
    _check_positive("barrier", vb)
    _check_positive("horizon", t)
    if k < 0:
        raise ValueError("strike must be nonnegative")
    v = np.asarray(v, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(v < vb):
        raise ValueError("asset value must not be below the barrier")

    lam = lambdas(m)
    sigma = m.sigma
    sq = sigma * np.sqrt(t)
    disc_nu = np.exp(-m.nu * t)
    disc_r = np.exp(-m.r * t)
    lr = math.log(vb) - np.log(v)
    two_l1 = 2.0 * lam.lambda1

    if vb <= k:
        lbk = 2.0 * math.log(vb) - np.log(v) - math.log(k)
        d1b = _d_pm(lbk, t, lam.lambda1, sigma)
        d2b = _d_pm(lbk, t, lam.lambda2, sigma)
        return (-two_l1 * disc_nu * log_pow_cdf(two_l1 - 1.0, lr, d1b)
                - (2.0 * disc_nu / sq) * pow_pdf(two_l1 - 1.0, lr, d1b)
                + (two_l1 - 2.0) * (k / v) * disc_r * log_pow_cdf(two_l1 - 3.0, lr, d2b)
                + (2.0 * k * disc_r / (sq * vb)) * pow_pdf(two_l1 - 2.0, lr, d2b))

    lvb = -lr
    d1a = _d_pm(lvb, t, lam.lambda1, sigma)
    d2a = _d_pm(lvb, t, lam.lambda2, sigma)
    d1b = _d_pm(lr, t, lam.lambda1, sigma)
    d2b = _d_pm(lr, t, lam.lambda2, sigma)
    out = (-v * disc_nu * std_normal_pdf(d1a) / (sq * vb)
           + k * disc_r * std_normal_pdf(d2a) / (sq * vb)
           - two_l1 * disc_nu * log_pow_cdf(two_l1 - 1.0, lr, d1b)
           - (disc_nu / sq) * pow_pdf(two_l1 - 1.0, lr, d1b)
           + (two_l1 - 2.0) * (k / v) * disc_r * log_pow_cdf(two_l1 - 3.0, lr, d2b)
           + (k * disc_r / (sq * vb)) * pow_pdf(two_l1 - 2.0, lr, d2b))
    return out


def barrier_deriv_integrals_closed(vb: float, k: float, t_mat: float,
                                   m: MarketParams) -> tuple[float, float]:
    """Closed forms of the time integrals of the barrier delta for vb >= k.

    Returns (int_0^T D(t) dt, int_0^inf D(t) dt)
          = (A4 - (k/vb) A6, A3 - (k/vb) A5).
    """
    _check_positive("barrier", vb)
    if vb < k:
        raise ValueError("closed-form delta integrals require vb >= k")
    ac = a_constants(m, t_mat)
    ratio = k / vb
    return ac.a4 - ratio * ac.a6, ac.a3 - ratio * ac.a5
