import numpy as np
import pytest

from pathfv import (
    BlowUpError,
    CFLViolationError,
    DirichletBoundary,
    DomainError,
    FreeBoundary,
    GlimmScheme,
    GodunovScheme,
    Grid,
    LaxFriedrichsScheme,
    ModifiedLaxFriedrichsScheme,
    RoeScheme,
    SegmentsPath,
    ShallowWaterSystem,
    SimplifiedSystem,
    SkewedSegmentsPath,
    Solution,
    TwoLayerSystem,
    TwoSegmentPath,
    VanDerCorputSampler,
    cfl_dt,
    evolve,
    glimm_step,
    path_integral,
    roe_fluctuations,
    roe_matrix,
    solve_riemann,
    step,
)
from conftest import (
    random_shallow_water_states,
    random_simplified_states,
    random_two_layer_states,
)
from oracles import lf_single_interface_update

G = 9.81
Q_R = 0.530039370688997
SIMPLE = SimplifiedSystem()
SW = ShallowWaterSystem(G)
TWO = TwoLayerSystem(G, 0.95)


def make_solution(states, x_min=0.0, x_max=1.0):
    states = np.asarray(states, dtype=float)
    return Solution(Grid(x_min, x_max, states.shape[0]), 0.0, states)


class TestGridSolution:
    def test_grid_validation(self):
        with pytest.raises(DomainError):
            Grid(0.0, 1.0, 2)
        with pytest.raises(DomainError):
            Grid(1.0, 0.0, 10)
        g = Grid(-1.0, 1.0, 10)
        assert g.dx == pytest.approx(0.2)
        assert g.centers[0] == pytest.approx(-0.9)

    def test_solution_rejects_nonfinite(self):
        with pytest.raises(BlowUpError) as err:
            make_solution([[1.0, 1.0], [np.nan, 1.0], [1.0, 1.0]])
        assert err.value.cell == 1


class TestCflDt:
    def test_simplified_uniform(self):
        sol = make_solution(np.tile([1.0, 1.0], (5, 1)))
        # max |lam| = 2 at (1, 1)
        assert cfl_dt(SIMPLE, sol, 0.9) == pytest.approx(0.9 * sol.grid.dx / 2.0)

    def test_godunov_cap(self):
        sol = make_solution(np.tile([1.0, 1.0], (5, 1)))
        assert cfl_dt(SIMPLE, sol, 0.9, max_cfl=0.5) == pytest.approx(
            0.5 * sol.grid.dx / 2.0
        )

    def test_still_water(self):
        sol = make_solution(np.tile([1.0, 0.0, 0.0], (5, 1)))
        assert cfl_dt(SW, sol, 0.9) == pytest.approx(0.9 * sol.grid.dx / np.sqrt(G))

    def test_invalid_cfl(self):
        sol = make_solution(np.tile([1.0, 1.0], (5, 1)))
        with pytest.raises(DomainError):
            cfl_dt(SIMPLE, sol, 1.5)


def all_schemes():
    return [
        RoeScheme(SIMPLE, TwoSegmentPath()),
        LaxFriedrichsScheme(SIMPLE, TwoSegmentPath()),
        LaxFriedrichsScheme(SIMPLE, SegmentsPath()),
        GodunovScheme(SIMPLE),
        RoeScheme(SW, SegmentsPath()),
        ModifiedLaxFriedrichsScheme(SW, SegmentsPath()),
        LaxFriedrichsScheme(SW, SegmentsPath()),
        RoeScheme(TWO, SegmentsPath()),
        RoeScheme(TWO, SkewedSegmentsPath(0.05)),
        LaxFriedrichsScheme(TWO, SegmentsPath()),
        LaxFriedrichsScheme(TWO, SkewedSegmentsPath(0.05)),
    ]


def constant_state_for(system):
    return {
        "simplified": np.array([1.0, 1.0]),
        "shallow_water": np.array([1.2, 0.4, 0.3]),
        "two_layer": np.array([0.8, 0.1, 1.1, -0.1]),
    }[system.name]


class TestStep:
    def test_constant_data_preserved(self):
        for scheme in all_schemes():
            w = constant_state_for(scheme.system)
            sol = make_solution(np.tile(w, (6, 1)))
            dt = cfl_dt(scheme.system, sol, 0.4, max_cfl=scheme.max_cfl)
            out = scheme.advance(sol, dt)
            assert np.array_equal(out.states, sol.states), scheme.name

    def test_cfl_violation_refused(self):
        sol = make_solution(np.tile([1.0, 1.0], (6, 1)))
        scheme = RoeScheme(SIMPLE, TwoSegmentPath())
        dt_max = cfl_dt(SIMPLE, sol, 1.0)
        with pytest.raises(CFLViolationError) as err:
            step(scheme, sol, 2.0 * dt_max)
        assert err.value.required_dt == pytest.approx(dt_max)

    def test_lf_update_matches_hand_oracle(self):
        # three cells, dt/dx = 0.1, middle-cell update against the dense
        # single-interface formula
        states = np.array([[1.0, 1.0], [1.0, 1.0], [0.5, 0.5]])
        sol = make_solution(states, 0.0, 3.0)
        for path in (TwoSegmentPath(), SegmentsPath()):
            scheme = LaxFriedrichsScheme(SIMPLE, path)
            out = step(scheme, sol, 0.1)
            expect = lf_single_interface_update(
                states[0], states[1], states[2], SIMPLE, path, 0.1
            )
            assert np.abs(out.states[1] - expect).max() < 1e-10

    def test_lf_frozen_values(self):
        # frozen expected middle-cell values for the two path families
        states = np.array([[1.0, 1.0], [1.0, 1.0], [0.5, 0.5]])
        sol = make_solution(states, 0.0, 3.0)
        out_two = step(LaxFriedrichsScheme(SIMPLE, TwoSegmentPath()), sol, 0.1)
        assert np.allclose(out_two.states[1], [0.775, 0.79375], atol=1e-14)
        out_seg = step(LaxFriedrichsScheme(SIMPLE, SegmentsPath()), sol, 0.1)
        assert np.allclose(
            out_seg.states[1], [0.775, 0.75 + 0.05 * (0.5 + 0.5 * 0.58333333333333337)],
            atol=1e-12,
        )

    def test_conservative_component_telescopes(self, rng):
        # total change of a conservative component equals the boundary
        # fluctuation difference
        W = random_simplified_states(rng, 12, h_range=(0.8, 1.3), u_range=(0.8, 1.4))
        sol = make_solution(W, 0.0, 1.0)
        for scheme in (
            RoeScheme(SIMPLE, TwoSegmentPath()),
            LaxFriedrichsScheme(SIMPLE, TwoSegmentPath()),
            GodunovScheme(SIMPLE),
        ):
            dt = cfl_dt(SIMPLE, sol, 0.4, max_cfl=scheme.max_cfl)
            ext = FreeBoundary().extend(sol.states)
            mm, mp = scheme.fluctuations(ext[:-1], ext[1:], sol.grid.dx, dt)
            out = scheme.advance(sol, dt)
            change = (out.states[:, 0] - sol.states[:, 0]).sum() * sol.grid.dx
            # interior interfaces telescope to flow-rate jumps; only the
            # boundary fluctuations survive
            interior_dq = (ext[1:, 1] - ext[:-1, 1])[1:-1].sum()
            expect = -dt * (mp[0, 0] + mm[-1, 0] + interior_dq)
            assert change == pytest.approx(expect, abs=1e-12), scheme.name


class TestConsistencyProperties:
    def test_zero_fluctuations_at_coincident_states(self, rng):
        for scheme in all_schemes():
            w = constant_state_for(scheme.system)
            UL = np.tile(w, (4, 1))
            mm, mp = scheme.fluctuations(UL, UL.copy(), 0.01, 0.001)
            assert np.abs(mm).max() < 1e-13 and np.abs(mp).max() < 1e-13, scheme.name

    def _random_pairs(self, rng, system, n):
        draw = {
            "simplified": lambda: random_simplified_states(
                rng, 2 * n, h_range=(0.8, 1.3), u_range=(0.8, 1.5)
            ),
            "shallow_water": lambda: random_shallow_water_states(rng, 2 * n),
            "two_layer": lambda: random_two_layer_states(rng, 2 * n),
        }[system.name]
        W = draw()
        W = W[system.is_admissible(W)]
        m = len(W) // 2
        return W[:m], W[m : 2 * m]

    def test_fluctuation_sum_is_path_integral(self, rng):
        for scheme in all_schemes():
            if isinstance(scheme, GodunovScheme):
                continue  # its path follows the wave fan; checked in riemann tests
            UL, UR = self._random_pairs(rng, scheme.system, 50)
            dx, dt = 0.01, 0.0005
            mm, mp = scheme.fluctuations(UL, UR, dx, dt)
            for a, b, s in zip(UL, UR, mm + mp):
                I = path_integral(scheme.path, scheme.system, a, b)
                assert np.abs(s - I).max() < 1e-10, scheme.name


class TestRoe:
    def test_matrix_reference_entries(self):
        A = roe_matrix(SIMPLE, TwoSegmentPath(), [1.0, 1.0], [4.0, 8.0])
        assert A[1, 0] == pytest.approx(-25.0 / 9.0 + 2.5, abs=1e-13)
        assert A[1, 1] == pytest.approx(10.0 / 3.0, abs=1e-13)
        assert A[0, 0] == pytest.approx(0.0, abs=1e-13)
        assert A[0, 1] == pytest.approx(1.0, abs=1e-13)

    def test_matrix_consistency_at_coincident_states(self):
        w = np.array([1.3, 0.9])
        A = roe_matrix(SIMPLE, TwoSegmentPath(), w, w)
        assert np.abs(A - SIMPLE.matrix(w)).max() < 1e-12
        W = np.array([1.1, 0.7, 0.2])
        Asw = roe_matrix(SW, SegmentsPath(), W, W)
        assert np.abs(Asw - SW.matrix(W)).max() < 1e-11

    def test_jump_identity(self):
        wl = np.array([1.0, 1.0])
        wr = np.array([1.8, Q_R])
        A = roe_matrix(SIMPLE, TwoSegmentPath(), wl, wr)
        I = path_integral(TwoSegmentPath(), SIMPLE, wl, wr)
        assert np.abs(A @ (wr - wl) - I).max() < 1e-12

    def test_two_layer_jump_identity(self, rng):
        W = random_two_layer_states(rng, 20)
        for path in (SegmentsPath(), SkewedSegmentsPath(0.04)):
            for a, b in zip(W[::2], W[1::2]):
                A = roe_matrix(TWO, path, a, b)
                I = path_integral(path, TWO, a, b)
                assert np.abs(A @ (b - a) - I).max() < 1e-9

    def test_upwind_limits(self):
        # all speeds positive: the whole jump integral travels right (enters
        # the cell on the right through M+), and symmetrically for negative
        A = np.array([[2.0, 0.3], [0.1, 1.5]])  # both eigenvalues positive
        du = np.array([0.4, -0.2])
        mm, mp = roe_fluctuations(A, [0.0, 0.0], du)
        assert np.abs(mp - A @ du).max() < 1e-13
        assert np.abs(mm).max() < 1e-13
        mm, mp = roe_fluctuations(-A, [0.0, 0.0], du)
        assert np.abs(mp).max() < 1e-13
        assert np.abs(mm + A @ du).max() < 1e-13

    def test_split_matches_dense_eigendecomposition(self):
        wl, wr = np.array([1.0, 1.0]), np.array([4.0, 8.0])
        A = roe_matrix(SIMPLE, TwoSegmentPath(), wl, wr)
        lam, K = np.linalg.eig(A)
        order = np.argsort(lam)
        lam, K = lam[order].real, K[:, order].real
        du = wr - wl
        coeff = np.linalg.solve(K, du)
        mm_ref = K @ (np.minimum(lam, 0) * coeff)
        mp_ref = K @ (np.maximum(lam, 0) * coeff)
        mm, mp = roe_fluctuations(A, wl, wr)
        assert np.abs(mm - mm_ref).max() < 1e-12
        assert np.abs(mp - mp_ref).max() < 1e-12
        scheme = RoeScheme(SIMPLE, TwoSegmentPath())
        mm2, mp2 = scheme.fluctuations(wl, wr, 0.1, 0.01)
        assert np.abs(mm2 - mm_ref).max() < 1e-12


class TestModifiedLF:
    def test_needs_balance_law(self):
        with pytest.raises(DomainError):
            ModifiedLaxFriedrichsScheme(SIMPLE, TwoSegmentPath())

    def test_sigma_bit_identical(self, rng):
        W = random_shallow_water_states(rng, 12)
        sol = make_solution(W, 0.0, 1.0)
        scheme = ModifiedLaxFriedrichsScheme(SW, SegmentsPath())
        dt = cfl_dt(SW, sol, 0.5)
        out = scheme.advance(sol, dt)
        assert np.array_equal(out.states[:, 2], sol.states[:, 2])

    def test_reduces_to_roe_linearized_lf_without_standing_mode(self):
        # with the standing-mode filter replaced by the identity the update
        # is (1/2)(-+ (dx/dt) Id + A_roe) du; verified through the eigenbasis
        from pathfv.schemes import _roe_eigendata

        wl = np.array([1.1, 0.8])
        wr = np.array([1.4, 0.6])
        lam, K, _ = _roe_eigendata(SIMPLE, TwoSegmentPath(), wl, wr)
        du = wr - wl
        coeff = np.linalg.solve(K, du)
        dx, dt = 0.01, 0.002
        mm = K @ (0.5 * (-(dx / dt) + lam) * coeff)  # identity weight: no zero modes
        A = roe_matrix(SIMPLE, TwoSegmentPath(), wl, wr)
        mm_ref = 0.5 * (-(dx / dt) * np.eye(2) + A) @ du
        assert np.abs(mm - mm_ref).max() < 1e-12

    def test_still_water_equilibrium_is_exact(self):
        x = np.linspace(-1, 1, 24)
        sig = np.where(x < 0, 0.0, 1.0)
        W = np.stack([1.0 + sig, np.zeros_like(sig), sig], axis=-1)
        sol = make_solution(W, -1.0, 1.0)
        for scheme in (
            ModifiedLaxFriedrichsScheme(SW, SegmentsPath()),
            RoeScheme(SW, SegmentsPath()),
        ):
            out = sol
            for _ in range(20):
                out = scheme.advance(out, cfl_dt(SW, out, 0.9))
            assert np.abs(out.states - sol.states).max() < 1e-13, scheme.name


class TestGodunov:
    def test_requires_simple_system(self):
        with pytest.raises(DomainError):
            GodunovScheme(SW)

    def test_single_negative_shock_fluctuations(self):
        scheme = GodunovScheme(SIMPLE)
        wl = np.array([1.0, 1.0])
        wr = np.array([1.8, Q_R])
        mm, mp = scheme.fluctuations(wl, wr, 0.01, 0.001)
        I = path_integral(TwoSegmentPath(), SIMPLE, wl, wr)
        assert np.abs(mm - I).max() < 1e-10
        assert np.abs(mp).max() == 0.0

    def test_max_cfl_is_half(self):
        assert GodunovScheme(SIMPLE).max_cfl == 0.5


class TestGlimm:
    def test_van_der_corput_values(self):
        s = VanDerCorputSampler()
        assert [s.take() for _ in range(7)] == [
            0.5, 0.25, 0.75, 0.125, 0.625, 0.375, 0.875,
        ]

    def test_seed_offsets_sequence(self):
        a = VanDerCorputSampler(offset=3)
        b = VanDerCorputSampler()
        for _ in range(3):
            b.take()
        assert a.take() == b.take()

    def test_constant_data_unchanged(self):
        sol = make_solution(np.tile([1.0, 1.0], (8, 1)))
        out = glimm_step(solve_riemann, sol, 1e-3, VanDerCorputSampler())
        assert np.array_equal(out.states, sol.states)

    def test_isolated_shock_advances_by_cells(self):
        # the sampled shock moves by exactly 0 or dx each step and its mean
        # drift tracks the true speed
        wl = np.array([1.0, 1.0])
        wr = np.array([1.8, Q_R])
        m = 400
        grid = Grid(-1.0, 1.0, m)
        states = np.where(grid.centers[:, None] < 0, wl, wr)
        sol = Solution(grid, 0.0, states)
        scheme = GlimmScheme(SIMPLE, seed=0)
        n_steps = 160
        positions = []
        for _ in range(n_steps):
            dt = cfl_dt(SIMPLE, sol, 0.5, max_cfl=0.5)
            new = scheme.advance(sol, dt)
            assert np.all(np.isin(np.abs(new.states[:, 0] - sol.states[:, 0]),
                                  np.abs(np.array([0.0, wl[0] - wr[0]]))))
            sol = new
            positions.append(grid.centers[np.argmax(np.abs(np.diff(sol.states[:, 0])))])
        xi = (Q_R - 1.0) / 0.8
        drift_err = abs(positions[-1] - xi * sol.t)
        n = n_steps
        assert drift_err < 2 * grid.dx + 2 * np.log2(n + 1) * grid.dx


def test_evolve_hits_snapshot_times_exactly():
    sol = make_solution(np.tile([1.0, 1.0], (8, 1)))
    scheme = RoeScheme(SIMPLE, TwoSegmentPath())
    snaps = evolve(scheme, sol, 0.05, 0.9, snapshot_times=[0.02, 0.035, 0.05])
    assert [s.t for s in snaps] == pytest.approx([0.02, 0.035, 0.05], abs=1e-13)


def test_dirichlet_boundary_fixes_ghost():
    bc = DirichletBoundary(left=np.array([9.0, 9.0]))
    states = np.tile([1.0, 1.0], (4, 1))
    ext = bc.extend(states)
    assert np.allclose(ext[0], [9.0, 9.0])
    assert np.allclose(ext[-1], [1.0, 1.0])
