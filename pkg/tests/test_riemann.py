import numpy as np
import pytest

from pathfv import (
    CurveRangeError,
    FanPath,
    SimplifiedSystem,
    TwoSegmentPath,
    fan_split_integrals,
    path_integral,
    rarefaction_curve,
    sample,
    shock_curve_1,
    shock_curve_2,
    solve_riemann,
)
from conftest import random_simplified_states
from oracles import hugoniot_q_from_unit_left

Q_R = 0.530039370688997
XI_SHOCK = (Q_R - 1.0) / 0.8

SYS = SimplifiedSystem()


def lam1(w):
    u = w[1] / w[0]
    return u - w[0] * np.sqrt(u)


def lam2(w):
    u = w[1] / w[0]
    return u + w[0] * np.sqrt(u)


class TestWaveCurves:
    def test_zero_strength_shock(self):
        assert shock_curve_1([1.0, 1.0], 1.0) == pytest.approx(1.0, abs=1e-15)

    def test_reference_point(self):
        assert shock_curve_1([1.0, 1.0], 1.8) == pytest.approx(Q_R, abs=1e-14)
        assert shock_curve_1([1.0, 1.0], 1.8) == pytest.approx(
            hugoniot_q_from_unit_left(1.8), abs=1e-14
        )

    def test_shock_curve_satisfies_jump_conditions(self, rng):
        path = TwoSegmentPath()
        W = random_simplified_states(rng, 20)
        for wl in W:
            for hr in (wl[0] * 1.1, wl[0] * 1.6):
                qr = shock_curve_1(wl, hr)
                wr = np.array([hr, qr])
                xi = (qr - wl[1]) / (hr - wl[0])
                I = path_integral(path, SYS, wl, wr)
                assert np.abs(xi * (wr - wl) - I).max() < 1e-11

    def test_family2_branch_tangency(self):
        # d q / d h at the base point equals the matching eigenvalue
        wl = np.array([1.2, 0.9])
        eps = 1e-6
        s1 = (shock_curve_1(wl, wl[0] + eps) - wl[1]) / eps
        s2 = (shock_curve_2(wl, wl[0] + eps) - wl[1]) / eps
        assert s1 == pytest.approx(lam1(wl), abs=1e-5)
        assert s2 == pytest.approx(lam2(wl), abs=1e-5)

    def test_rarefaction_curve_values(self):
        assert rarefaction_curve(1, [1.0, 1.0], 1.0) == pytest.approx(1.0)
        # family 1 from (1,1) at h = 0.5: sqrt(u) = 1.25
        assert rarefaction_curve(1, [1.0, 1.0], 0.5) == pytest.approx(0.78125)

    def test_rarefaction_eigenvalue_monotone(self):
        wl = np.array([1.0, 1.0])
        hs = np.linspace(1.0, 0.3, 30)
        lams = [lam1([h, rarefaction_curve(1, wl, h)]) for h in hs]
        assert np.all(np.diff(lams) > 0)  # increases left to right in the fan

    def test_curve_leaves_state_space(self):
        with pytest.raises(CurveRangeError):
            rarefaction_curve(2, [2.0, 0.02], 0.01)


class TestSolveRiemann:
    def test_trivial(self):
        fan = solve_riemann([1.0, 1.0], [1.0, 1.0])
        assert all(w.kind == "null" for w in fan.waves)
        assert np.allclose(sample(fan, 0.0), [1.0, 1.0])

    def test_pure_one_shock(self):
        fan = solve_riemann([1.0, 1.0], [1.8, Q_R])
        kinds = [(w.family, w.kind) for w in fan.waves]
        assert kinds == [(1, "shock"), (2, "null")]
        assert fan.waves[0].speed == pytest.approx(XI_SHOCK, abs=1e-10)

    def test_rarefaction_then_shock(self):
        fan = solve_riemann([1.0, 1.0], [0.5, 0.5])
        kinds = [(w.family, w.kind) for w in fan.waves]
        assert kinds == [(1, "rarefaction"), (2, "shock")]
        assert 0.5 < fan.w_star[0] < 1.0

    def test_lax_inequalities(self, rng):
        W = random_simplified_states(rng, 40, h_range=(0.8, 1.3), u_range=(0.8, 1.5))
        for wl, wr in zip(W[::2], W[1::2]):
            fan = solve_riemann(wl, wr)
            for w in fan.waves:
                if w.kind != "shock":
                    continue
                lam = lam1 if w.family == 1 else lam2
                assert lam(w.left) > w.speed - 1e-9
                assert w.speed > lam(w.right) - 1e-9

    def test_round_trip_on_shock_locus(self, rng):
        # any admissible point produced by the forward shock curve comes back
        # as a single 1-shock whose speed satisfies the jump conditions
        path = TwoSegmentPath()
        W = random_simplified_states(rng, 10)
        for wl in W:
            hr = wl[0] * 1.25
            wr = np.array([hr, shock_curve_1(wl, hr)])
            if not SYS.is_admissible(wr):
                continue
            fan = solve_riemann(wl, wr)
            assert [w.kind for w in fan.waves] == ["shock", "null"]
            xi = fan.waves[0].speed
            I = path_integral(path, SYS, wl, wr)
            assert np.abs(xi * (wr - wl) - I).max() < 1e-10

    def test_classification_stable_under_perturbation(self, rng):
        W = random_simplified_states(rng, 30, h_range=(0.8, 1.2), u_range=(0.9, 1.4))
        for wl, wr in zip(W[::2], W[1::2]):
            fan = solve_riemann(wl, wr)
            kinds = [w.kind for w in fan.waves]
            if "null" in kinds:
                continue  # at a classification boundary by construction
            for _ in range(3):
                wl2 = wl * (1 + 1e-8 * rng.standard_normal(2))
                wr2 = wr * (1 + 1e-8 * rng.standard_normal(2))
                fan2 = solve_riemann(wl2, wr2)
                assert [w.kind for w in fan2.waves] == kinds


class TestSample:
    fan = solve_riemann([1.0, 1.0], [0.5, 0.5])

    def test_outside_fan(self):
        lo = self.fan.waves[0].speed_left
        hi = self.fan.waves[1].speed_right
        assert np.allclose(sample(self.fan, lo - 0.5), [1.0, 1.0])
        assert np.allclose(sample(self.fan, hi + 0.5), [0.5, 0.5])

    def test_shock_with_negative_speed_at_origin(self):
        fan = solve_riemann([1.0, 1.0], [1.8, Q_R])
        assert np.allclose(sample(fan, 0.0), [1.8, Q_R])

    def test_piecewise_continuity(self):
        xs = np.linspace(-1.5, 3.0, 1200)
        vals = np.array([sample(self.fan, x) for x in xs])
        jumps = np.abs(np.diff(vals, axis=0)).max(axis=1)
        shock_speed = self.fan.waves[1].speed
        big = xs[:-1][jumps > 1e-2]
        assert np.all(np.abs(big - shock_speed) < 2 * (xs[1] - xs[0]))

    def test_inside_rarefaction_matches_eigenvalue(self):
        w1 = self.fan.waves[0]
        xi = 0.5 * (w1.speed_left + w1.speed_right)
        w = sample(self.fan, xi)
        assert lam1(w) == pytest.approx(xi, abs=1e-12)


class TestFanIntegrals:
    def test_trivial(self):
        fan = solve_riemann([1.0, 1.0], [1.0, 1.0])
        mm, mp = fan_split_integrals(fan)
        assert np.abs(mm).max() == 0.0 and np.abs(mp).max() == 0.0

    def test_single_negative_shock_goes_left(self):
        wl = np.array([1.0, 1.0])
        wr = np.array([1.8, Q_R])
        fan = solve_riemann(wl, wr)
        mm, mp = fan_split_integrals(fan)
        assert np.abs(mp).max() == 0.0
        I = path_integral(TwoSegmentPath(), SYS, wl, wr)
        assert np.abs(mm - I).max() < 1e-10

    def test_conservative_component_telescopes(self, rng):
        W = random_simplified_states(rng, 30, h_range=(0.7, 1.4), u_range=(0.8, 1.6))
        for wl, wr in zip(W[::2], W[1::2]):
            fan = solve_riemann(wl, wr)
            mm, mp = fan_split_integrals(fan)
            assert (mm + mp)[0] == pytest.approx(wr[1] - wl[1], abs=1e-12)

    def test_sum_matches_wave_path_quadrature(self, rng):
        # the two parts add up to the path integral along the wave-curve path
        W = random_simplified_states(rng, 16, h_range=(0.8, 1.3), u_range=(0.9, 1.5))
        for wl, wr in zip(W[::2], W[1::2]):
            fan = solve_riemann(wl, wr)
            mm, mp = fan_split_integrals(fan)
            fanpath = FanPath(fan)
            I = path_integral(fanpath, SYS, wl, wr, method="quadrature")
            assert np.abs((mm + mp) - I).max() < 1e-10

    def test_transonic_rarefaction_splits_at_sonic_state(self):
        # a 1-rarefaction straddling x/t = 0: left of the split has lam1 < 0
        wl = np.array([1.0, 1.0])  # lam1(wl) = 0
        wr_h = 0.55
        wr = np.array([wr_h, rarefaction_curve(1, wl, wr_h)])
        fan = solve_riemann(wl * np.array([1.02, 0.98]), wr)
        w1 = fan.waves[0]
        if not (w1.kind == "rarefaction" and w1.speed_left < 0 < w1.speed_right):
            pytest.skip("datum no longer transonic")
        mm, mp = fan_split_integrals(fan)
        fanpath = FanPath(fan)
        I = path_integral(fanpath, SYS, fan.w_l, fan.w_r, method="quadrature")
        assert np.abs((mm + mp) - I).max() < 1e-10
        assert np.abs(mm).max() > 0 and np.abs(mp).max() > 0
