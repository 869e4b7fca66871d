import math
import warnings

import numpy as np
import pytest

from hardcore_sbd.cftp import (NEVER, RHO_ZERO_DIAGNOSTIC, Box, coalescence_absorbing, coincidence_time,
                               compare_horizons, rank_test, run_from_empty, sample_stationary, stationarity_check)
from hardcore_sbd.coupling import CoupledState, advance_coupled
from hardcore_sbd.dynamics import Configuration, simulate
from hardcore_sbd.geometry import ContractError, Window
from hardcore_sbd.params import SimParams


class TestBox:
    def test_unit(self):
        b = Box.unit(2, 3.0)
        assert b.lo == (3.0, 3.0) and b.hi == (4.0, 4.0) and b.volume == 1.0

    def test_distance_wraps_on_torus(self):
        b = Box.unit(2, 0.0)
        w = Window(2, 10.0)
        assert b.distance((9.5, 0.5), w) == pytest.approx(0.5)
        assert b.distance((9.5, 0.5), Window(2, 10.0, "free")) == pytest.approx(8.5)
        assert b.contains((0.5, 0.5), w)
        assert b.contains((2.0, 0.5), w, dilate=1.0)
        assert not b.contains((2.0, 2.0), w, dilate=1.0)


class TestHorizons:
    def test_tail_of_longer_run_is_bit_identical(self):
        # the execution from -T is the same object whether launched alone or
        # as the short half of a (T, 2T) comparison
        p = SimParams(d=2, L=10.0, rho=0.75, seed=6)
        alone = run_from_empty(p, -2.0, 0.0)
        cmp = compare_horizons(p, 2.0, 4.0)
        assert cmp.state.proc1.points == alone.points
        assert cmp.state.proc2.points == run_from_empty(p, -4.0, 0.0).points

    def test_slab_boundaries_do_not_matter(self):
        p = SimParams(d=2, L=8.0, rho=0.75, seed=2)
        a = run_from_empty(p, -3.0, 0.0)
        b = run_from_empty(p, -3.0, -1.3)
        from hardcore_sbd.dynamics import advance
        advance(b, p, 0.0)
        assert a.points == b.points

    def test_equal_horizons_agree_immediately(self):
        p = SimParams(d=2, L=8.0, rho=0.75, seed=1)
        cmp = compare_horizons(p, 2.0, 2.0)
        assert cmp.agree and cmp.last_clear == -2.0

    def test_bad_order(self):
        with pytest.raises(ContractError):
            compare_horizons(SimParams(d=2, L=8.0), 4.0, 2.0)

    def test_trace_matches_recount(self):
        p = SimParams(d=2, L=10.0, rho=0.75, seed=4)
        cmp = compare_horizons(p, 2.0, 4.0, trace=True)
        assert cmp.special_trace[-1][1] == len(cmp.state.specials())
        assert cmp.special_trace[0][1] == len(run_from_empty(p, -4.0, -2.0))


class TestSampleStationary:
    def test_rho_one_small_torus(self):
        stars = []
        for seed in range(10):
            r = sample_stationary(SimParams(d=2, L=10.0, rho=1.0, seed=seed), T_init=1.0, T_max=16.0)
            assert r.coalesced and not r.sample.hard_core_violations()
            stars.append(r.horizon_used)
        assert np.mean(stars) <= 4.0

    def test_rho_zero_diagnostic(self):
        r = sample_stationary(SimParams(d=2, L=10.0, rho=0.0, seed=1))
        assert not r.coalesced and r.diagnostic == RHO_ZERO_DIAGNOSTIC
        assert r.coincidence_time == NEVER
        assert r.sidecar()["coincidence_time"] is None

    def test_result_agrees_with_longer_horizon(self):
        p = SimParams(d=2, L=10.0, rho=0.75, seed=3)
        r = sample_stationary(p)
        assert r.coalesced
        assert r.sample.points == run_from_empty(p, -2 * r.horizon_used).points
        assert r.sample.points == run_from_empty(p, -4 * r.horizon_used).points
        assert r.horizons_tried[-1] == r.horizon_used
        assert -r.horizon_used <= r.coincidence_time <= 0.0

    def test_absorbing(self):
        p = SimParams(d=2, L=10.0, rho=0.75, seed=5)
        r = sample_stationary(p)
        assert coalescence_absorbing(p, r.horizon_used, 4)
        assert coalescence_absorbing(p, r.horizon_used, 8)

    def test_budget_exhausted(self):
        r = sample_stationary(SimParams(d=2, L=20.0, rho=0.55, seed=0), T_init=0.25, T_max=0.25)
        assert not r.coalesced and "no coalescence" in r.diagnostic
        assert r.horizons_tried == [0.25]

    def test_warns_below_threshold(self):
        with pytest.warns(RuntimeWarning):
            sample_stationary(SimParams(d=2, L=8.0, rho=0.3, seed=0), T_init=0.5, T_max=0.5)

    def test_no_warning_above_threshold(self):
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            sample_stationary(SimParams(d=2, L=8.0, rho=0.8, seed=0))

    def test_monotone_after_last_special_creation(self):
        p = SimParams(d=2, L=12.0, rho=0.75, seed=2)
        cmp = compare_horizons(p, 4.0, 8.0, trace=True)
        trace = cmp.special_trace
        ups = [i for i in range(1, len(trace)) if trace[i][1] > trace[i - 1][1]]
        tail = trace[ups[-1]:] if ups else trace
        assert all(b[1] <= a[1] for a, b in zip(tail, tail[1:]))


class TestCoincidenceTime:
    def test_identical(self):
        assert coincidence_time(SimParams(d=2, L=8.0, rho=0.75, seed=0), 2.0, 2.0) == 0.0

    def test_rho_zero_never(self):
        p = SimParams(d=2, L=10.0, rho=0.0, seed=0)
        assert coincidence_time(p, 2.0, 4.0) == NEVER

    def test_finite_and_bounded(self):
        p = SimParams(d=2, L=12.0, rho=0.75, seed=1)
        C = Box.unit(2, 5.0)
        tau_c = coincidence_time(p, 8.0, 16.0, C)
        tau = coincidence_time(p, 8.0, 16.0)
        assert 0.0 <= tau_c <= tau <= 8.0

    def test_matches_brute_force(self):
        # replay the coupled run and find the last discrepancy near C by hand
        p = SimParams(d=2, L=10.0, rho=0.75, seed=7)
        C = Box.unit(2, 4.0)
        w = p.window
        s = CoupledState(p, Configuration(w, -4.0), run_from_empty(p, -8.0, -4.0))
        last = -4.0
        near = lambda st: any(C.contains(st.position(q), w, 1.0) for q in st.specials())
        from hardcore_sbd.randomness import rain_between, MarkOracle
        from hardcore_sbd.coupling import coupled_apply_arrival
        marks = MarkOracle(p.seed, p.rho)
        was = near(s)
        for e in rain_between(p.seed, -4.0, 0.0, p.lam, p.slab_len, w):
            coupled_apply_arrival(s, e, marks)
            now = near(s)
            if was and not now:
                last = e.t
            was = now
        expected = NEVER if was else last + 4.0
        assert coincidence_time(p, 4.0, 8.0, C) == expected


class TestStationarity:
    def test_rank_identical(self):
        assert rank_test([3, 1, 2], [3, 1, 2]) == 1.0

    def test_rank_detects_shift(self):
        rng = np.random.default_rng(0)
        assert rank_test(rng.normal(0, 1, 50), rng.normal(2, 1, 50)) < 1e-6

    def test_inconclusive_when_budget_too_small(self):
        p = SimParams(d=2, L=20.0, rho=0.55, seed=0)
        rep = stationarity_check(p, 3, T_init=0.25, T_max=0.25)
        assert rep.inconclusive and rep.passed is None

    def test_too_few_samples(self):
        with pytest.raises(ContractError):
            stationarity_check(SimParams(), 1)

    def test_small_batch_runs(self):
        p = SimParams(d=2, L=8.0, rho=0.8, seed=0)
        rep = stationarity_check(p, 6, delta=1.0)
        assert rep.n_coalesced_a == 6 and len(rep.counts_b) == 6
        assert 0.0 <= rep.p_value <= 1.0
