"""Special functions and derived model constants.

Houses the standard normal CDF/PDF, the drift/volatility ratios
lambda_1..lambda_3, the d-factors d_1..d_6, and the maturity-dependent
constants A_1..A_6 together with the participation-rate bounds
alpha_bar and alpha_tilde.  Everything here is a pure function of the
market parameters, so the rest of the library can share one
implementation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import log_ndtr, ndtr

from .params import FrictionParams, MarketParams

_SQRT_2PI = math.sqrt(2.0 * math.pi)


def std_normal_cdf(x):
    """Standard normal CDF, accurate to ~1 ulp via the complementary error function."""
    return ndtr(x)


def std_normal_pdf(x):
    """Standard normal density."""
    x = np.asarray(x, dtype=float)
    return np.exp(-0.5 * x * x) / _SQRT_2PI


def log_pow_cdf(p, log_ratio, phi_arg):
    """log-space evaluation of x^p * Phi(a), i.e. exp(p*ln x + ln Phi(a)).

    Keeps the tail products bounded for extreme barrier/asset ratios, where
    the direct power term would overflow long before the product does.
    """
    return np.exp(p * log_ratio + log_ndtr(phi_arg))


def pow_pdf(p, log_ratio, pdf_arg):
    """log-space evaluation of x^p * phi(d) = exp(p*ln x - d^2/2) / sqrt(2 pi)."""
    return np.exp(p * log_ratio - 0.5 * pdf_arg * pdf_arg) / _SQRT_2PI


@dataclass(frozen=True)
class LambdaSet:
    """Dimensionless drift/volatility ratios shared by all closed forms."""

    lambda1: float
    lambda2: float
    lambda3: float

    @property
    def lam23(self) -> float:
        """lambda2 + lambda3, the exponent of the perpetual passage terms."""
        return self.lambda2 + self.lambda3


def lambdas(m: MarketParams) -> LambdaSet:
    """Compute lambda_1 = (r-nu+sigma^2/2)/sigma^2, lambda_2 = lambda_1 - 1,
    and lambda_3 = sqrt((lambda_2 sigma^2)^2 + 2 r sigma^2) / sigma^2."""
    s2 = m.sigma * m.sigma
    lam1 = (m.r - m.nu + 0.5 * s2) / s2
    lam2 = (m.r - m.nu - 0.5 * s2) / s2
    lam3 = math.sqrt((lam2 * s2) ** 2 + 2.0 * m.r * s2) / s2
    return LambdaSet(lam1, lam2, lam3)


def _d(log_x, t, coef, sigma):
    """Generic d-factor (ln x + coef*t) / (sigma sqrt(t)) on array input."""
    sqt = np.sqrt(t)
    return (log_x / sqt + coef * sqt) / sigma


def d_factor(index: int, x, t, m: MarketParams):
    """The factors d_1..d_6 evaluated at ratio ``x`` and horizon ``t``.

    d_{1/2}(x,t) = (ln x + (r - nu +/- sigma^2/2) t) / (sigma sqrt(t)),
    d_{3/4}(x,t) = (ln x +/- lambda2 sigma^2 t) / (sigma sqrt(t)),
    d_{5/6}(x,t) = (ln x +/- lambda3 sigma^2 t) / (sigma sqrt(t)).
    """
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(x <= 0):
        raise ValueError("d-factor ratio must be positive")
    if np.any(t <= 0):
        raise ValueError("d-factor horizon must be positive")
    lam = lambdas(m)
    s2 = m.sigma * m.sigma
    coefs = {
        1: m.r - m.nu + 0.5 * s2,
        2: m.r - m.nu - 0.5 * s2,
        3: lam.lambda2 * s2,
        4: -lam.lambda2 * s2,
        5: lam.lambda3 * s2,
        6: -lam.lambda3 * s2,
    }
    if index not in coefs:
        raise ValueError(f"d-factor index must be in 1..6, got {index}")
    return _d(np.log(x), t, coefs[index], m.sigma)


@dataclass(frozen=True)
class AConstants:
    """Maturity-dependent constants A_1..A_6 and the participation bounds.

    ``alpha_bar`` bounds the participation rate so that equity stays
    nonnegative in the asset value; ``alpha_tilde`` guarantees a unique
    root of the smooth-pasting equation.  ``None`` means the bound is
    unbounded (the defining denominator is nonpositive), which callers
    must treat differently from any finite value.
    """

    a1: float
    a2: float
    a3: float
    a4: float
    a5: float
    a6: float
    alpha_bar: float | None
    alpha_tilde: float | None


def _a_pair(lam: float, beta: float, sigma: float, t_mat: float) -> tuple[float, float]:
    """The pair (perpetual, finite-horizon) of integrals of
    e^{-beta t} (2 lam Phi(lam sigma sqrt t) + 2 phi(lam sigma sqrt t)/(sigma sqrt t)).

    With (lam, beta) = (lambda1, nu) this is (A3, A4); with
    (lambda2, r) it is (A5, A6).
    """
    root = math.sqrt(lam * lam * sigma * sigma + 2.0 * beta)
    sqt = math.sqrt(t_mat)
    a_inf = lam / beta + root / (sigma * beta)
    a_fin = (
        lam / beta * (1.0 - 2.0 * math.exp(-beta * t_mat) * float(ndtr(lam * sigma * sqt)))
        + root / (sigma * beta) * (2.0 * float(ndtr(root * sqt)) - 1.0)
    )
    return a_inf, a_fin


def a_constants(m: MarketParams, t_mat: float,
                frictions: FrictionParams | None = None) -> AConstants:
    """Evaluate A_1..A_6 and, when frictions are supplied, alpha_bar/alpha_tilde."""
    if t_mat <= 0:
        raise ValueError(f"maturity must be positive, got {t_mat}")
    lam = lambdas(m)
    l2, l3 = lam.lambda2, lam.lambda3
    sigma = m.sigma
    sqt = math.sqrt(t_mat)
    phi3 = float(std_normal_pdf(l3 * sigma * sqt))
    cdf3 = float(ndtr(l3 * sigma * sqt))
    cdf2 = float(ndtr(l2 * sigma * sqt))

    a1 = 0.5 * (l2 - l3) + l3 * cdf3 - l2 * math.exp(-m.r * t_mat) * cdf2
    a2 = (
        0.5 * (l2 - l3)
        - 1.0 / (2.0 * l3 * sigma * sigma * t_mat)
        + (l3 + 1.0 / (l3 * sigma * sigma * t_mat)) * cdf3
        + phi3 / (sigma * sqt)
    )
    a3, a4 = _a_pair(lam.lambda1, m.nu, sigma, t_mat)
    a5, a6 = _a_pair(l2, m.r, sigma, t_mat)

    alpha_bar = None
    alpha_tilde = None
    if frictions is not None:
        denom_bar = 1.0 - frictions.tau2 - math.exp(-m.nu * t_mat)
        if denom_bar > 0:
            alpha_bar = m.nu / denom_bar
        denom_tilde = a4 - frictions.tau2 * a3
        if denom_tilde > 0:
            rho = frictions.rho
            alpha_tilde = (1.0 + rho * lam.lam23 + 2.0 * (1.0 - rho) * a2) / denom_tilde
    return AConstants(a1, a2, a3, a4, a5, a6, alpha_bar, alpha_tilde)
