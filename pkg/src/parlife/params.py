"""Parameter containers for the insurance company model.

All rates are decimals per year, times are in years, and monetary
quantities share one (arbitrary) currency unit.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace


@dataclass(frozen=True)
class MarketParams:
    """Risk-neutral market environment: interest rate, payout rate, volatility."""

    r: float         # risk-free rate per year
    nu: float        # total payout fraction per year
    sigma: float     # volatility per sqrt(year)

    def __post_init__(self):
        if not (self.r > 0 and self.nu > 0 and self.sigma > 0):
            raise ValueError(
                f"market parameters must be strictly positive, got "
                f"r={self.r}, nu={self.nu}, sigma={self.sigma}"
            )


@dataclass(frozen=True)
class ContractParams:
    """Aggregate contract terms of the stationary portfolio.

    ``g_total`` is the aggregate guarantee payment per year (G); the
    per-cohort guarantee rate is ``g = G / T``.  ``p_lump`` is the
    aggregate lump sum paid at maturity (P), with yearly rate ``p = P / T``.
    """

    t_mat: float          # contract maturity T in years
    p_lump: float         # aggregate lump sum P
    g_total: float = 0.0  # aggregate guarantee payment per year G
    k_threshold: float = 0.0   # surplus participation threshold k
    alpha: float = 0.0         # participation rate in [0, 1]

    def __post_init__(self):
        if self.t_mat <= 0:
            raise ValueError(f"maturity must be positive, got {self.t_mat}")
        if self.p_lump <= 0:
            raise ValueError(f"lump sum must be positive, got {self.p_lump}")
        if self.g_total < 0:
            raise ValueError(f"guarantee must be nonnegative, got {self.g_total}")
        if self.k_threshold < 0:
            raise ValueError(f"threshold must be nonnegative, got {self.k_threshold}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"participation rate must lie in [0,1], got {self.alpha}")

    @property
    def g_rate(self) -> float:
        """Per-cohort guarantee rate g = G / T."""
        return self.g_total / self.t_mat

    @property
    def p_rate(self) -> float:
        """Per-cohort lump sum rate p = P / T."""
        return self.p_lump / self.t_mat


@dataclass(frozen=True)
class FrictionParams:
    """Tax rates on the two liability components and the bankruptcy loss fraction."""

    tau1: float   # tax rate on the guaranteed payment
    tau2: float   # tax rate on the surplus participation
    rho: float    # fraction of asset value lost at bankruptcy

    def __post_init__(self):
        for name in ("tau1", "tau2", "rho"):
            x = getattr(self, name)
            if not 0.0 <= x <= 1.0:
                raise ValueError(f"{name} must lie in [0,1], got {x}")


@dataclass(frozen=True)
class Scenario:
    """A complete model scenario: initial assets, market, contract and frictions."""

    v0: float
    market: MarketParams
    contract: ContractParams
    frictions: FrictionParams

    def __post_init__(self):
        if self.v0 <= 0:
            raise ValueError(f"initial asset value must be positive, got {self.v0}")

    @property
    def k_below_v0(self) -> bool:
        """Whether the surplus threshold sits below the initial asset value.

        The model's standing assumption is k >= V0; the formulas remain
        valid below it, so such scenarios are accepted but flagged.
        """
        return self.contract.k_threshold < self.v0

    def with_contract(self, **changes) -> "Scenario":
        return replace(self, contract=replace(self.contract, **changes))

    def with_market(self, **changes) -> "Scenario":
        return replace(self, market=replace(self.market, **changes))

    def with_frictions(self, **changes) -> "Scenario":
        return replace(self, frictions=replace(self.frictions, **changes))


def base_scenario() -> Scenario:
    """Baseline parametrization used throughout the numerical study.

    r=1%, nu=5%, sigma=20%, T=30, P=95, G/P=2%, V0=100, k=150,
    alpha=5%, tau1=tau2=35%, rho=50%.
    """
    return Scenario(
        v0=100.0,
        market=MarketParams(r=0.01, nu=0.05, sigma=0.20),
        contract=ContractParams(
            t_mat=30.0, p_lump=95.0, g_total=0.02 * 95.0,
            k_threshold=150.0, alpha=0.05,
        ),
        frictions=FrictionParams(tau1=0.35, tau2=0.35, rho=0.50),
    )
