import numpy as np
import pytest

from parlife.params import (
    ContractParams,
    FrictionParams,
    MarketParams,
    Scenario,
    base_scenario,
)


@pytest.fixture
def base():
    return base_scenario()


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


def random_market(rng) -> MarketParams:
    return MarketParams(r=float(rng.uniform(0.003, 0.08)),
                        nu=float(rng.uniform(0.01, 0.12)),
                        sigma=float(rng.uniform(0.08, 0.5)))


def random_scenario(rng, alpha: float | None = None) -> Scenario:
    m = random_market(rng)
    v0 = float(rng.uniform(50.0, 200.0))
    p = float(rng.uniform(0.4, 1.2)) * v0
    t_mat = float(rng.uniform(5.0, 40.0))
    g = float(rng.uniform(0.0, 0.04)) * p
    k = float(rng.uniform(1.0, 2.0)) * v0
    a = float(rng.uniform(0.0, 0.1)) if alpha is None else alpha
    return Scenario(
        v0=v0,
        market=m,
        contract=ContractParams(t_mat=t_mat, p_lump=p, g_total=g,
                                k_threshold=k, alpha=a),
        frictions=FrictionParams(tau1=float(rng.uniform(0.0, 0.6)),
                                 tau2=float(rng.uniform(0.0, 0.6)),
                                 rho=float(rng.uniform(0.0, 1.0))),
    )
