"""Structural valuation of participating life insurance contracts.

A Leland-type model of an insurer issuing contracts with a guaranteed
payment, a maturity lump sum, and surplus participation above a threshold.
The library prices the participation as a down-and-out call, solves the
endogenous bankruptcy barrier from the smooth-pasting condition, and
computes optimal participation and guarantee rates.
"""
from .params import (
    ContractParams,
    FrictionParams,
    MarketParams,
    Scenario,
    base_scenario,
)
from .core import AConstants, LambdaSet, a_constants, d_factor, lambdas, std_normal_cdf
from .closedforms import (
    barrier_deriv_integrals_closed,
    d2cdo_dvb_dv_at_barrier,
    dcdo_dv,
    dcdo_dv_at_barrier,
    dcdo_dvb,
    discounted_passage,
    down_and_out_call,
    first_passage_cdf,
    i1_i2,
    i1_i2_dv_at_barrier,
    vanilla_call,
)
from .quadrature import IntegralResult, QuadratureError, integrate_finite, integrate_semi_infinite
from .valuation import ValuationBreakdown, cohort_liability, equity_curve, firm_value, total_liability
from .barrier_solver import (
    AssumptionReport,
    BarrierSolution,
    SolverError,
    check_assumptions,
    smooth_pasting_residual,
    solve_vb,
    vb_closed_form_above_k,
    vb_closed_form_alpha0,
)
from .optimize import (
    OptimumResult,
    dv_dalpha,
    dv_dg,
    find_tau_bar,
    optimize_alpha,
    optimize_g,
    optimize_joint,
    optimize_rates_ceteris_paribus,
    vb_prime_alpha,
    vb_prime_g,
)
from .mc import Estimate, McConfig, mc_barrier_call, mc_first_passage, mc_liability_components

__version__ = "0.1.0"
