import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hardcore_sbd.analysis import (HEXAGONAL_PACKING_2D, BoxFunction, fit_decay_rate, laplace_bound_check,
                                   laplace_functional, laplace_terms, matern2_intensity, packing_fraction, rho_sweep)
from hardcore_sbd.bounds import naive_rate, theorem_condition, theorem_threshold, theorem_value, theorem_value_mp
from hardcore_sbd.coupling import DensitySeries
from hardcore_sbd.dynamics import Configuration, generate_initial, simulate
from hardcore_sbd.geometry import ContractError, Window
from hardcore_sbd.params import SimParams


class TestTheoremCondition:
    def test_half_in_the_plane(self):
        expected = -(0.5 ** 6 * 0.25 * 1.25) / (16 * 5 * 1.25)
        assert expected == pytest.approx(-4.8828e-5, rel=1e-4)
        assert theorem_value(0.5, 2) == pytest.approx(expected, rel=1e-15)
        rep = theorem_condition(0.5, 2)
        assert rep.satisfied_theorem and not rep.satisfied_naive and rep.kappa == 6

    def test_point_six(self):
        rep = theorem_condition(0.6, 2)
        assert rep.naive_bound == pytest.approx(-0.2 * math.pi)
        assert rep.satisfied_naive and rep.satisfied_theorem

    def test_point_one(self):
        rep = theorem_condition(0.1, 2)
        extra = 0.1 ** 6 * 0.81 * 1.25 / (16 * 5 * 1.09)
        assert rep.theorem_value == pytest.approx(0.8 - extra, rel=1e-15)
        assert not rep.satisfied_theorem

    @pytest.mark.parametrize("d", [1, 2, 3])
    @pytest.mark.parametrize("rho", [0.0, 0.1, 0.3, 0.5, 0.6, 0.9, 1.0])
    def test_evaluators_agree(self, rho, d):
        a = theorem_value(rho, d)
        b = theorem_value_mp(rho, d)
        assert abs(a - float(b)) <= 1e-12 * max(1.0, abs(a))
        assert (a < 0) == (b < 0)

    @settings(max_examples=200)
    @given(st.floats(0.0, 1.0), st.sampled_from([1, 2, 3]))
    def test_naive_implies_theorem(self, rho, d):
        rep = theorem_condition(rho, d)
        if rep.satisfied_naive:
            assert rep.satisfied_theorem
        assert rep.theorem_value <= 1 - 2 * rho

    def test_single_sign_change(self):
        for d in (1, 2, 3):
            grid = np.linspace(0.0, 1.0, 2001)
            signs = np.sign([theorem_value(r, d) for r in grid])
            assert np.count_nonzero(np.diff(signs) != 0) == 1
            vals = np.array([theorem_value(r, d) for r in grid])
            assert np.max(np.abs(np.diff(vals))) < 2.5 * (grid[1] - grid[0])

    def test_threshold_2d(self):
        th = theorem_threshold(2)
        root = mpmath.findroot(lambda r: theorem_value_mp(r, 2), 0.49999)
        assert abs(th - float(root)) < 1e-6
        assert theorem_value(th - 1e-6, 2) > 0 > theorem_value(th + 1e-6, 2)

    def test_rejects_bad_input(self):
        with pytest.raises(ContractError):
            theorem_value(1.5, 2)
        with pytest.raises(ContractError):
            theorem_value(0.5, 4)

    def test_naive_rate(self):
        assert naive_rate(0.75, 2) == pytest.approx(-math.pi / 2)


class TestDecayFit:
    def test_exact_exponential(self):
        t = np.linspace(0.0, 5.0, 100)
        fit = fit_decay_rate((t, np.exp(-2 * t)), t_min=0.0)
        assert abs(fit.c_hat - 2.0) < 1e-6 and fit.r2 > 0.999999
        assert fit.alpha_hat == pytest.approx(1.0)

    def test_constant(self):
        t = np.linspace(0, 5, 50)
        fit = fit_decay_rate((t, np.full(50, 0.3)))
        assert fit.c_hat == pytest.approx(0.0, abs=1e-12) and 0 <= fit.r2 <= 1

    @settings(max_examples=50)
    @given(st.floats(0.01, 5.0), st.floats(1e-3, 10.0))
    def test_recovers_planted_rate(self, c, a):
        t = np.linspace(0.0, 4.0, 41)
        fit = fit_decay_rate((t, a * np.exp(-c * t)), t_min=0.5)
        assert fit.c_hat == pytest.approx(c, rel=1e-6, abs=1e-9)
        assert fit.alpha_hat == pytest.approx(a, rel=1e-6)

    def test_truncates_at_extinction(self):
        t = np.arange(30) * 0.1
        b = np.exp(-t)
        b[20:] = 0.0
        fit = fit_decay_rate((t, b), t_min=0.5)
        assert fit.extinction_time == pytest.approx(2.0)
        assert fit.c_hat == pytest.approx(1.0) and fit.window[1] == pytest.approx(1.9)

    def test_insufficient_rows(self):
        fit = fit_decay_rate((np.arange(5.0), np.ones(5)))
        assert not fit.conclusive and math.isnan(fit.c_hat)

    def test_accepts_series(self):
        s = DensitySeries([(t, 0.0, 0.0, math.exp(-t), math.exp(-t)) for t in np.arange(0, 3, 0.1)])
        assert fit_decay_rate(s).c_hat == pytest.approx(1.0)


class TestLaplace:
    def snapshots(self, n=40):
        out = []
        for seed in range(n):
            p = SimParams(d=2, L=8.0, rho=0.75, seed=seed)
            _, c = simulate(p, Configuration(p.window), 0.0, 2.0)
            out.append(c)
        return out

    def test_zero_function(self):
        snaps = self.snapshots(5)
        assert np.all(laplace_terms(snaps, BoxFunction((0, 0), (8, 8), 0.0)) == 1.0)

    def test_empty_configurations(self):
        w = Window(2, 8.0)
        mean, se = laplace_functional([Configuration(w)] * 3, BoxFunction((0, 0), (8, 8), 2.0))
        assert mean == 1.0 and se == 0.0

    def test_box_mgf_identity(self):
        snaps = self.snapshots()
        s = 0.7
        f = BoxFunction((2.0, 2.0), (4.0, 4.0), s)
        mean, se = laplace_functional(snaps, f)
        counts = np.array([sum(1 for x in c.points.values() if 2 <= x[0] <= 4 and 2 <= x[1] <= 4) for c in snaps])
        mgf = np.exp(-s * counts).mean()
        assert abs(mean - mgf) <= 3 * se + 1e-12

    def test_negative_height(self):
        with pytest.raises(ContractError):
            BoxFunction((0,), (1,), -1.0)

    def test_l1(self):
        assert BoxFunction((0, 0), (2, 3), 0.5).l1_norm == 3.0

    def test_time_zero_bound(self):
        # at t = 0 the gap is at most the expected f-mass of the special points
        p = SimParams(d=2, L=10.0, rho=0.75, seed=0)
        f = BoxFunction((4.0, 4.0), (5.0, 5.0), 1.0)
        rep = laplace_bound_check(p, f, 1.0, n_replicas=30, sample_dt=0.1)
        r0 = rep.rows[0]
        assert r0.t == 0.0 and r0.bound == pytest.approx(f.l1_norm * rep.beta_S0)
        assert not r0.violation
        assert len(rep.rows) == 11

    def test_bound_check_rows(self):
        p = SimParams(d=2, L=10.0, rho=0.75, seed=0)
        f = BoxFunction((4.0, 4.0), (5.0, 5.0), 1.0)
        rep = laplace_bound_check(p, f, 2.0, n_replicas=8, sample_dt=0.5)
        assert [r.t for r in rep.rows] == [0.0, 0.5, 1.0, 1.5, 2.0]
        assert all(r.bound <= rep.rows[0].bound + 1e-15 for r in rep.rows)
        assert rep.condition.satisfied_theorem


class TestPacking:
    def test_empty(self):
        assert packing_fraction(Configuration(Window(2, 10.0))) == 0.0

    def test_regular_1d(self):
        w = Window(1, 110.0)
        c = Configuration.from_points(w, [(0.5 + 1.1 * i,) for i in range(100)])
        assert not c.hard_core_violations()
        assert packing_fraction(c) == pytest.approx(100 / 110)

    @pytest.mark.parametrize("kind", ["matern2", "saturated_rsa"])
    def test_below_hexagonal(self, kind):
        c = generate_initial(kind, 1.0, SimParams(d=2, L=10.0, seed=0))
        assert 0 < packing_fraction(c) <= HEXAGONAL_PACKING_2D
        assert HEXAGONAL_PACKING_2D == pytest.approx(0.9069, abs=1e-4)


class TestSweep:
    def test_small_sweep(self):
        p = SimParams(d=2, L=8.0, seed=0)
        rows = rho_sweep(p, [0.75, 1.0], T=16.0, n_replicas=3)
        assert [r.rho for r in rows] == [0.75, 1.0]
        assert all(r.coalesced for r in rows)
        assert all(r.matern2_ref == pytest.approx(matern2_intensity(1.0, 2)) for r in rows)
        assert all(r.packing_fraction == pytest.approx(r.intensity * math.pi / 4) for r in rows)

    def test_rejects_zero(self):
        with pytest.raises(ContractError):
            rho_sweep(SimParams(d=2, L=8.0), [0.0], T=1.0)
