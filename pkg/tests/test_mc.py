import math

import pytest

from parlife import closedforms as cf
from parlife.mc import McConfig, mc_barrier_call, mc_first_passage, mc_liability_components
from parlife.params import base_scenario

SMOKE = McConfig(paths=20_000, steps_per_year=252, seed=99)


class TestBarrierCall:
    def test_no_barrier_recovers_vanilla(self, base):
        m = base.market
        est = mc_barrier_call(100.0, 150.0, 0.0, 10.0, m, SMOKE)
        ref = float(cf.vanilla_call(100.0, 150.0, 10.0, m))
        assert est.distance_in_se(ref) < 10.0

    def test_unreachable_strike_is_worthless(self, base):
        m = base.market
        cfg = McConfig(paths=5_000, steps_per_year=12, seed=1)
        est = mc_barrier_call(100.0, 100.0 * 100.0, 45.0, 0.5, m, cfg)
        assert est.mean == pytest.approx(0.0, abs=1e-12)

    def test_agrees_with_closed_form(self, base):
        m = base.market
        est = mc_barrier_call(100.0, 150.0, 45.36, 10.0, m, SMOKE)
        ref = float(cf.down_and_out_call(100.0, 150.0, 45.36, 10.0, m))
        assert est.distance_in_se(ref) < 10.0


class TestFirstPassage:
    def test_started_at_barrier(self, base):
        cfg = McConfig(paths=2_000, steps_per_year=12, seed=5)
        f_est, _ = mc_first_passage(45.0, 45.0, 2.0, base.market, cfg)
        assert f_est.mean == pytest.approx(1.0)

    def test_single_step_far_barrier(self, base):
        cfg = McConfig(paths=5_000, steps_per_year=1, seed=5)
        f_est, g_est = mc_first_passage(100.0, 5.0, 1.0, base.market, cfg)
        assert f_est.mean == pytest.approx(0.0, abs=1e-6)
        assert g_est.mean == pytest.approx(0.0, abs=1e-6)

    def test_agrees_with_closed_forms(self, base):
        m = base.market
        f_est, g_est = mc_first_passage(100.0, 45.0, 10.0, m, SMOKE)
        f_ref = float(cf.first_passage_cdf(100.0, 45.0, 10.0, m))
        g_ref = float(cf.discounted_passage(100.0, 45.0, 10.0, m))
        assert f_est.distance_in_se(f_ref) < 10.0
        assert g_est.distance_in_se(g_ref) < 10.0


class TestLiabilityComponents:
    def test_full_loss_kills_recovery(self, base):
        s = base.with_frictions(rho=1.0)
        comps = mc_liability_components(s, 45.0, 5.0,
                                        McConfig(paths=2_000, steps_per_year=12, seed=2))
        assert comps["recovery"].mean == 0.0

    def test_no_participation_term_without_alpha(self, base):
        s = base.with_contract(alpha=0.0)
        comps = mc_liability_components(s, 45.0, 5.0,
                                        McConfig(paths=2_000, steps_per_year=12, seed=2))
        assert comps["participation"].mean == 0.0

    def test_components_sum_to_cohort_liability(self, base):
        from parlife.valuation import cohort_liability
        comps = mc_liability_components(base, 45.878, 10.0, SMOKE)
        total = sum(e.mean for e in comps.values())
        se = math.sqrt(sum(e.std_error ** 2 for e in comps.values()))
        ref = cohort_liability(base, 45.878, 10.0)
        assert abs(total - ref) / se < 10.0


class TestDeterminism:
    def test_same_seed_same_estimate(self, base):
        cfg = McConfig(paths=4_000, steps_per_year=24, seed=123)
        a = mc_barrier_call(100.0, 150.0, 45.0, 3.0, base.market, cfg)
        b = mc_barrier_call(100.0, 150.0, 45.0, 3.0, base.market, cfg)
        assert a == b

    def test_multi_batch_runs_are_reproducible(self, base):
        # More paths than one batch: the per-batch substreams and the fixed
        # reduction order must still give bit-identical results.
        from parlife.mc import BATCH_SIZE
        cfg = McConfig(paths=BATCH_SIZE + 1_000, steps_per_year=4, seed=7)
        a = mc_barrier_call(100.0, 120.0, 45.0, 1.0, base.market, cfg)
        b = mc_barrier_call(100.0, 120.0, 45.0, 1.0, base.market, cfg)
        assert a == b

    def test_different_seeds_differ(self, base):
        cfg_a = McConfig(paths=4_000, steps_per_year=24, seed=1)
        cfg_b = McConfig(paths=4_000, steps_per_year=24, seed=2)
        a = mc_barrier_call(100.0, 150.0, 45.0, 3.0, base.market, cfg_a)
        b = mc_barrier_call(100.0, 150.0, 45.0, 3.0, base.market, cfg_b)
        assert a.mean != b.mean

    def test_step_refinement_within_noise(self, base):
        # Bridge weighting keeps the estimator unbiased in the step size:
        # halving dt moves the estimate by no more than the pooled noise.
        m = base.market
        coarse = mc_barrier_call(100.0, 150.0, 45.0, 5.0, m,
                                 McConfig(paths=40_000, steps_per_year=26, seed=31))
        fine = mc_barrier_call(100.0, 150.0, 45.0, 5.0, m,
                               McConfig(paths=40_000, steps_per_year=52, seed=31))
        pooled = math.hypot(coarse.std_error, fine.std_error)
        assert abs(coarse.mean - fine.mean) <= 3.0 * pooled


def test_config_validation():
    with pytest.raises(ValueError):
        McConfig(paths=0)
    with pytest.raises(ValueError):
        McConfig(paths=10, steps_per_year=0)
