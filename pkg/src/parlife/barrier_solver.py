"""Endogenous bankruptcy-triggering asset level.

The barrier solves the smooth-pasting condition dE/dV = 0 at V = V_B,
written as the residual

    h2(vb) = 1 + rho (l2+l3) + 2 (1-rho) A2
             - (1/vb) [ 2 (P - G/r) A1 / (rT) + 2 (G/r) A2 - tau1 (G/r)(l2+l3) ]
             + tau2 alpha int_0^inf D(t) dt - alpha int_0^T D(t) dt,

where D(t) is the down-and-out call's delta at the barrier.  The solved
level is the minimum of V0 and the smallest root; no root below V0 means
immediate bankruptcy.  Closed forms cover alpha = 0 and barriers at or
above the participation threshold.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import closedforms as cf
from .core import a_constants, lambdas, std_normal_cdf, std_normal_pdf
from .params import MarketParams, Scenario
from .quadrature import (
    composite_gk_nodes,
    composite_gk_nodes_geometric,
    integrate_finite,
)
from .valuation import integral_cdo_finite, integral_cdo_semi_infinite

SCAN_POINTS = 2048
SCAN_EPS = 1e-6
PLATEAU_TOL = 1e-10
INNER_TOL = 1e-7      # quadrature tolerance inside root iterations
FINAL_TOL = 1e-9      # re-verification tolerance at the accepted root


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class AssumptionReport:
    """Direct evaluation of the model's standing assumptions at a solved barrier."""

    alpha_below_bar: bool
    alpha_below_tilde: bool
    guarantee_value_exceeds_tb: bool
    surplus_value_exceeds_tb: bool
    continuity_sufficient: bool
    g_star_positive_condition: bool


@dataclass(frozen=True)
class BarrierSolution:
    vb: float
    residual: float
    method: str            # closed-form-alpha-zero | closed-form-above-k |
                           # numeric-smallest-root | immediate-bankruptcy
    diagnostics: AssumptionReport | None = None


def _constant_terms(scenario: Scenario):
    """(C0, N0): the vb-free and 1/vb coefficients of the residual."""
    m, c, fr = scenario.market, scenario.contract, scenario.frictions
    lam = lambdas(m)
    ac = a_constants(m, c.t_mat, fr)
    g_ann = c.g_total / m.r
    c0 = 1.0 + fr.rho * lam.lam23 + 2.0 * (1.0 - fr.rho) * ac.a2
    n0 = (2.0 * (c.p_lump - g_ann) * ac.a1 / (m.r * c.t_mat)
          + 2.0 * g_ann * ac.a2 - fr.tau1 * g_ann * lam.lam23)
    return lam, ac, c0, n0


def _knee_breakpoints(vb: float, k: float, sigma: float, upper: float):
    """Time scales at which the barrier delta switches on when vb < k."""
    if k <= 0 or vb >= k:
        return []
    t_knee = (math.log(vb / k) / sigma) ** 2
    return [s * t_knee for s in (0.25, 1.0, 4.0) if 0.0 < s * t_knee < upper]


def _tail_start(m: MarketParams, t_mat: float) -> float:
    return max(2.0 * t_mat, 16.0)


def delta_integrals(m: MarketParams, k: float, vb: float, t_mat: float,
                    tol: float = FINAL_TOL) -> tuple[float, float]:
    """(int_0^T D(t) dt, int_0^inf D(t) dt) for the barrier delta D.

    Closed forms apply for vb >= k (including k = 0); otherwise adaptive
    quadrature with the explicit exponential tail bound.
    """
    if vb >= k:
        return cf.barrier_deriv_integrals_closed(vb, k, t_mat, m)

    def f(t):
        return cf.dcdo_dv_at_barrier(vb, k, t, m)

    lam = lambdas(m)
    sig_sqt = m.sigma * math.sqrt(t_mat)
    c_nu = 2.0 * (abs(lam.lambda1) + 0.4 / sig_sqt)
    c_r = (2.0 * k / vb) * (abs(lam.lambda2) + 0.4 / sig_sqt)

    def tail(t_max):
        return (c_nu * math.exp(-m.nu * t_max) / m.nu
                + c_r * math.exp(-m.r * t_max) / m.r)

    jt = integrate_finite(f, 0.0, t_mat, tol=0.5 * tol,
                          breakpoints=_knee_breakpoints(vb, k, m.sigma, t_mat)).value
    t_max = _tail_start(m, t_mat)
    while tail(t_max) > 0.25 * tol:
        t_max *= 2.0
    cuts = []
    c = 2.0 * t_mat
    while c < t_max:
        cuts.append(c)
        c *= 2.0
    j_tail = integrate_finite(f, t_mat, t_max, tol=0.25 * tol,
                              breakpoints=cuts).value
    return jt, jt + j_tail


def cross_delta_integrals(m: MarketParams, k: float, vb: float, t_mat: float,
                          tol: float = FINAL_TOL) -> tuple[float, float]:
    """(int_0^T, int_0^inf) of the barrier-delta sensitivity dD/dVB (>= 0).

    For vb >= k these are ((k/vb^2) A6, (k/vb^2) A5); k = 0 gives zero.
    """
    if k == 0:
        return 0.0, 0.0
    if vb >= k:
        ac = a_constants(m, t_mat)
        return k / vb ** 2 * ac.a6, k / vb ** 2 * ac.a5

    def f(t):
        return cf.d2cdo_dvb_dv_at_barrier(vb, k, t, m)

    lam = lambdas(m)
    sig_sqt = m.sigma * math.sqrt(t_mat)
    c_r = (2.0 * k / vb ** 2) * (abs(lam.lambda2) + 0.4 / sig_sqt)

    def tail(t_max):
        return c_r * math.exp(-m.r * t_max) / m.r

    kt = integrate_finite(f, 0.0, t_mat, tol=0.5 * tol,
                          breakpoints=_knee_breakpoints(vb, k, m.sigma, t_mat)).value
    t_max = _tail_start(m, t_mat)
    while tail(t_max) > 0.25 * tol:
        t_max *= 2.0
    cuts = []
    c = 2.0 * t_mat
    while c < t_max:
        cuts.append(c)
        c *= 2.0
    k_tail = integrate_finite(f, t_mat, t_max, tol=0.25 * tol,
                              breakpoints=cuts).value
    return kt, kt + k_tail


def smooth_pasting_residual(scenario: Scenario, vb: float,
                            tol: float = FINAL_TOL) -> float:
    """The residual h2(vb) whose smallest root is the bankruptcy barrier."""
    if vb <= 0:
        raise ValueError("barrier must be positive")
    _, _, c0, n0 = _constant_terms(scenario)
    c = scenario.contract
    out = c0 - n0 / vb
    if c.alpha > 0:
        jt, jinf = delta_integrals(scenario.market, c.k_threshold, vb,
                                   c.t_mat, tol=tol)
        out += c.alpha * (scenario.frictions.tau2 * jinf - jt)
    return out


# --- grid scan machinery -------------------------------------------------

@lru_cache(maxsize=16)
def _delta_integral_grid(m: MarketParams, t_mat: float, k: float, v0: float):
    """(vb grid, int_0^T D dt, int_0^inf D dt) on the log-spaced scan grid.

    The integrals depend only on (market, T, k), not on the contract rates,
    so one grid serves every solve of an optimization run.  Fixed composite
    Kronrod rules keep the evaluation deterministic and vectorized.
    """
    vbs = np.geomspace(SCAN_EPS * v0, v0, SCAN_POINTS)
    jt = np.empty_like(vbs)
    jinf = np.empty_like(vbs)

    above = vbs >= k
    if np.any(above):
        ac = a_constants(m, t_mat)
        ratio = k / vbs[above]
        jt[above] = ac.a4 - ratio * ac.a6
        jinf[above] = ac.a3 - ratio * ac.a5

    below = ~above
    if np.any(below):
        lam = lambdas(m)
        sig_sqt = m.sigma * math.sqrt(t_mat)
        vb_min = float(vbs[0])
        c_nu = 2.0 * (abs(lam.lambda1) + 0.4 / sig_sqt)
        c_r = (2.0 * k / vb_min) * (abs(lam.lambda2) + 0.4 / sig_sqt)
        t_max = _tail_start(m, t_mat)
        while (c_nu * math.exp(-m.nu * t_max) / m.nu
               + c_r * math.exp(-m.r * t_max) / m.r) > 1e-11:
            t_max *= 2.0
        u, wu = composite_gk_nodes(0.0, math.sqrt(t_mat), 24)
        t_fin, w_fin = u * u, 2.0 * u * wu
        t_tail, w_tail = composite_gk_nodes_geometric(t_mat, t_max, 16)
        t_all = np.concatenate([t_fin, t_tail])
        n_fin = t_fin.size

        idx = np.nonzero(below)[0]
        for start in range(0, idx.size, 256):
            chunk = idx[start:start + 256]
            d = _delta_matrix(m, lam, k, vbs[chunk], t_all)
            jt[chunk] = d[:, :n_fin] @ w_fin
            jinf[chunk] = jt[chunk] + d[:, n_fin:] @ w_tail
    return vbs, jt, jinf


def _delta_matrix(m: MarketParams, lam, k: float, vbs: np.ndarray,
                  t: np.ndarray) -> np.ndarray:
    """D(t) evaluated on the (barrier grid x time nodes) product."""
    sqt = np.sqrt(t)[None, :]
    sig_sqt = m.sigma * sqt
    lm = np.minimum(np.log(vbs / k), 0.0)[:, None]
    d1 = lm / sig_sqt + lam.lambda1 * sig_sqt
    d2 = lm / sig_sqt + lam.lambda2 * sig_sqt
    disc_nu = np.exp(-m.nu * t)[None, :]
    disc_r = np.exp(-m.r * t)[None, :]
    out = 2.0 * disc_nu * (lam.lambda1 * std_normal_cdf(d1)
                           + std_normal_pdf(d1) / sig_sqt)
    out -= (2.0 * k * disc_r / vbs[:, None]) * (
        lam.lambda2 * std_normal_cdf(d2) + std_normal_pdf(d2) / sig_sqt)
    return out


def residual_grid(scenario: Scenario) -> tuple[np.ndarray, np.ndarray]:
    """The residual on the scan grid (composite-rule accuracy)."""
    c = scenario.contract
    _, _, c0, n0 = _constant_terms(scenario)
    vbs, jt, jinf = _delta_integral_grid(scenario.market, c.t_mat,
                                         c.k_threshold, scenario.v0)
    h = c0 - n0 / vbs
    if c.alpha > 0:
        h = h + c.alpha * (scenario.frictions.tau2 * jinf - jt)
    return vbs, h


def vb_closed_form_alpha0(scenario: Scenario) -> float:
    """Barrier without participation:
    V_B* = N0 / (1 + rho (l2+l3) + 2 (1-rho) A2)."""
    if scenario.contract.alpha != 0:
        raise ValueError("closed form requires alpha = 0")
    _, _, c0, n0 = _constant_terms(scenario)
    return n0 / c0


def vb_closed_form_above_k(scenario: Scenario) -> float | None:
    """Barrier when it settles at or above the participation threshold.

    V_B** = (N0 + tau2 alpha k A5 - alpha k A6)
          / (C0 + tau2 alpha A3 - alpha A4),
    valid only when the result is >= k and alpha < alpha_tilde; returns
    None otherwise.
    """
    c, fr = scenario.contract, scenario.frictions
    _, ac, c0, n0 = _constant_terms(scenario)
    if ac.alpha_tilde is not None and c.alpha >= ac.alpha_tilde:
        return None
    denom = c0 + c.alpha * (fr.tau2 * ac.a3 - ac.a4)
    if denom <= 0:
        return None
    vb_hat = (n0 + c.alpha * c.k_threshold * (fr.tau2 * ac.a5 - ac.a6)) / denom
    if vb_hat >= c.k_threshold:
        return vb_hat
    return None


def _plateau_aware_signs(h: np.ndarray, scale: float) -> np.ndarray:
    s = np.zeros(h.shape, dtype=int)
    s[h > PLATEAU_TOL * scale] = 1
    s[h < -PLATEAU_TOL * scale] = -1
    return s


def _first_upcrossing(signs: np.ndarray) -> tuple[int, int] | None:
    """Indices (i, j) of the first strict -/+ transition, zeros in between allowed."""
    neg = None
    for i, s in enumerate(signs):
        if s < 0:
            neg = i
        elif s > 0:
            if neg is not None:
                return neg, i
            return None  # grid starts positive: pathological
    return None


def solve_vb(scenario: Scenario, with_diagnostics: bool = False) -> BarrierSolution:
    """Bankruptcy barrier: min(V0, smallest root of the smooth-pasting residual).

    Dispatch: alpha = 0 closed form; else the above-threshold closed form
    when valid; else a 2048-point log-spaced scan of the residual over
    [1e-6 V0, V0] with one 4x refinement pass around the sign change and
    bisection to relative tolerance 1e-10.
    """
    v0 = scenario.v0
    _, _, c0, _ = _constant_terms(scenario)

    if scenario.contract.alpha == 0:
        root = vb_closed_form_alpha0(scenario)
        if root >= v0:
            sol = BarrierSolution(v0, smooth_pasting_residual(scenario, v0),
                                  "immediate-bankruptcy")
        else:
            sol = BarrierSolution(root, smooth_pasting_residual(scenario, root),
                                  "closed-form-alpha-zero")
        return _attach(sol, scenario, with_diagnostics)

    root = vb_closed_form_above_k(scenario)
    if root is not None:
        if root >= v0:
            sol = BarrierSolution(v0, smooth_pasting_residual(scenario, v0),
                                  "immediate-bankruptcy")
        else:
            sol = BarrierSolution(root, smooth_pasting_residual(scenario, root),
                                  "closed-form-above-k")
        return _attach(sol, scenario, with_diagnostics)

    vbs, h = residual_grid(scenario)
    signs = _plateau_aware_signs(h, max(1.0, c0))

    k = scenario.contract.k_threshold
    in_tail = vbs >= k
    if np.any(in_tail) and np.all(signs[in_tail] == 0):
        # Residual flat at ~0 beyond the threshold: only roots below k count.
        vbs, h, signs = vbs[~in_tail], h[~in_tail], signs[~in_tail]

    if signs.size == 0 or signs[0] > 0:
        raise SolverError("residual does not start negative near vb = 0; "
                          "this contradicts its divergence and indicates "
                          "an invalid scenario")

    bracket = _first_upcrossing(signs)
    if bracket is None:
        sol = BarrierSolution(v0, smooth_pasting_residual(scenario, v0),
                              "immediate-bankruptcy")
        return _attach(sol, scenario, with_diagnostics)

    lo, hi = float(vbs[bracket[0]]), float(vbs[bracket[1]])
    root = _refine_root(scenario, lo, hi)
    if root >= v0:
        sol = BarrierSolution(v0, smooth_pasting_residual(scenario, v0),
                              "immediate-bankruptcy")
    else:
        sol = BarrierSolution(root, smooth_pasting_residual(scenario, root,
                                                            tol=FINAL_TOL),
                              "numeric-smallest-root")
    return _attach(sol, scenario, with_diagnostics)


def _refine_root(scenario: Scenario, lo: float, hi: float) -> float:
    """One 4x-density pass over the bracketing cell, then bisection."""
    f_lo = smooth_pasting_residual(scenario, lo, tol=INNER_TOL)
    f_hi = smooth_pasting_residual(scenario, hi, tol=INNER_TOL)
    # Composite-rule signs can disagree with the adaptive residual right at
    # the root; widen the bracket geometrically until it straddles.
    width = hi / lo
    tries = 0
    while f_lo > 0 and tries < 8:
        lo /= width
        f_lo = smooth_pasting_residual(scenario, lo, tol=INNER_TOL)
        tries += 1
    while f_hi < 0 and tries < 16:
        hi = min(hi * width, scenario.v0)
        f_hi = smooth_pasting_residual(scenario, hi, tol=INNER_TOL)
        tries += 1
        if hi >= scenario.v0 and f_hi < 0:
            return scenario.v0
    if f_lo > 0 or f_hi < 0:
        raise SolverError("failed to bracket the smooth-pasting root")

    cells = np.geomspace(lo, hi, 5)
    for a, b in zip(cells[:-1], cells[1:]):
        fb = smooth_pasting_residual(scenario, float(b), tol=INNER_TOL)
        if fb >= 0:
            lo, hi = float(a), float(b)
            break

    while (hi - lo) > 1e-10 * hi:
        mid = 0.5 * (lo + hi)
        if smooth_pasting_residual(scenario, mid, tol=INNER_TOL) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _attach(sol: BarrierSolution, scenario: Scenario,
            with_diagnostics: bool) -> BarrierSolution:
    if not with_diagnostics:
        return sol
    report = check_assumptions(scenario, sol.vb)
    return BarrierSolution(sol.vb, sol.residual, sol.method, report)


def check_assumptions(scenario: Scenario, vb: float) -> AssumptionReport:
    """Evaluate each standing assumption by its displayed inequality."""
    m, c, fr = scenario.market, scenario.contract, scenario.frictions
    lam, ac, c0, n0 = _constant_terms(scenario)
    v0 = scenario.v0

    below_bar = True if ac.alpha_bar is None else c.alpha < ac.alpha_bar
    below_tilde = True if ac.alpha_tilde is None else c.alpha < ac.alpha_tilde

    # Liability value of the guarantee vs its tax benefit.
    if c.g_total == 0:
        guarantee_ok = True
    else:
        g_ann = c.g_total / m.r
        i1, i2 = cf.i1_i2(v0, vb, c.t_mat, m)
        lhs = g_ann * (1.0 - ((1.0 - math.exp(-m.r * c.t_mat)) / (m.r * c.t_mat)
                              - float(i1)) - float(i2))
        pow_term = math.exp(lam.lam23 * (math.log(vb) - math.log(v0)))
        rhs = fr.tau1 * g_ann * (1.0 - pow_term)
        guarantee_ok = lhs >= rhs - 1e-12 * max(1.0, abs(rhs))

    # Liability value of the surplus participation vs its tax benefit.
    if c.k_threshold == 0 and v0 <= vb:
        surplus_ok = True
    else:
        cdo_t = integral_cdo_finite(v0, c.k_threshold, vb, c.t_mat, m)
        cdo_inf = integral_cdo_semi_infinite(v0, c.k_threshold, vb, m)
        surplus_ok = cdo_t >= fr.tau2 * cdo_inf - 1e-12 * max(1.0, cdo_inf)

    # Sufficient condition for continuity of the barrier in alpha and g.
    if vb >= c.k_threshold:
        continuity_ok = True
    else:
        kt, kinf = cross_delta_integrals(m, c.k_threshold, vb, c.t_mat)
        continuity_ok = (n0 + vb * vb * c.alpha * (fr.tau2 * kinf - kt)) > 0

    g_star_ok = _g_star_condition(scenario)

    return AssumptionReport(
        alpha_below_bar=below_bar,
        alpha_below_tilde=below_tilde,
        guarantee_value_exceeds_tb=guarantee_ok,
        surplus_value_exceeds_tb=surplus_ok,
        continuity_sufficient=continuity_ok,
        g_star_positive_condition=g_star_ok,
    )


def _g_star_condition(scenario: Scenario) -> bool:
    """The two-part condition under which a positive guarantee rate is optimal.

    Evaluated at the zero-guarantee barrier V_B(0): the implicit-derivative
    denominator must not vanish and the marginal firm value in g at g = 0
    must be positive.
    """
    m, c, fr = scenario.market, scenario.contract, scenario.frictions
    lam, ac, _, _ = _constant_terms(scenario)
    s0 = scenario.with_contract(g_total=0.0)
    vb0 = solve_vb(s0).vb
    if vb0 >= scenario.v0:
        return False

    denom = 2.0 * c.p_lump * ac.a1 / (vb0 ** 2 * m.r * c.t_mat)
    if c.alpha > 0:
        kt, kinf = cross_delta_integrals(m, c.k_threshold, vb0, c.t_mat)
        denom += c.alpha * (fr.tau2 * kinf - kt)
    if denom == 0:
        return False

    num = (c.t_mat / (vb0 * m.r)) * (-2.0 * ac.a1 / (m.r * c.t_mat)
                                     + 2.0 * ac.a2 - fr.tau1 * lam.lam23)
    vb_prime0 = num / denom

    pow_term = math.exp(lam.lam23 * (math.log(vb0) - math.log(scenario.v0)))
    cond = (fr.tau1 * c.t_mat / m.r * (1.0 - pow_term)
            - fr.rho * (lam.lam23 + 1.0) * pow_term * vb_prime0)
    if c.alpha > 0 and fr.tau2 > 0:
        cvb_inf = _dcdo_dvb_integral_inf(scenario, vb0)
        cond += c.alpha * fr.tau2 * vb_prime0 * cvb_inf
    return cond > 0


def _dcdo_dvb_integral_inf(scenario: Scenario, vb: float,
                           tol: float = FINAL_TOL) -> float:
    """int_0^inf of the barrier-level sensitivity of the option value."""
    m, c = scenario.market, scenario.contract
    v0, k = scenario.v0, c.k_threshold
    if v0 <= vb:
        return 0.0

    def f(t):
        return cf.dcdo_dvb(v0, k, vb, t, m)

    lam = lambdas(m)
    t_mat = c.t_mat
    sig_sqt = m.sigma * math.sqrt(t_mat)
    x = vb / v0
    p = 2.0 * lam.lambda1
    c_nu = (0.4 * v0 / (sig_sqt * vb) * max(x ** p, 1.0)
            + 2.0 * abs(lam.lambda1) * x ** (p - 1.0)
            + 0.8 / sig_sqt * x ** (p - 1.0))
    c_r = 0.0
    if k > 0:
        c_r = (0.4 * k / (sig_sqt * vb) * (1.0 + x ** (p - 2.0))
               + abs(p - 2.0) * (k / v0) * x ** (p - 3.0))

    def tail(t_max):
        return (c_nu * math.exp(-m.nu * t_max) / m.nu
                + (c_r * math.exp(-m.r * t_max) / m.r if c_r else 0.0))

    t_max = _tail_start(m, t_mat)
    while tail(t_max) > 0.5 * tol:
        t_max *= 2.0
    cuts = list(_knee_breakpoints(vb, k, m.sigma, t_max))
    cc = 1.0
    while cc < t_max:
        cuts.append(cc)
        cc *= 2.0
    return integrate_finite(f, 0.0, t_max, tol=tol, breakpoints=cuts).value
