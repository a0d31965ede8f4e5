import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ctrlgap import (BoundarySpec, ControlTrajectory, SimulationOverflowError,
                     StateTrajectory, build_affine, l2_norm, make_lti_system,
                     simulate, weighted_norm)

from conftest import scalar_integrator


def di_system():
    return make_lti_system([[0, 1], [0, 0]], [[0], [1]], 0, 1)


def sampled_linear_control(grid, coeffs=(-4.0, 6.0)):
    c0, c1 = coeffs
    vals = (c0 + c1 * grid.left_nodes).reshape(-1, 1)
    return ControlTrajectory(values=vals, grid=grid)


class TestSimulate:
    def test_zero_control_drift(self):
        sys_ = di_system()
        grid = sys_.grid(10)
        u = ControlTrajectory.zeros(grid, 1)
        x = simulate(sys_, grid, [0.0, 1.0], u)
        # velocity stays 1, position accumulates k*h exactly under Euler
        np.testing.assert_array_equal(x.values[:, 1], np.ones(11))
        np.testing.assert_allclose(x.values[:, 0], grid.nodes, atol=1e-15)

    def test_constant_control_riemann_sum(self):
        sys_ = scalar_integrator()
        grid = sys_.grid(4)
        u = ControlTrajectory(values=np.ones((4, 1)), grid=grid)
        x = simulate(sys_, grid, [0.0], u)
        assert x.last[0] == pytest.approx(1.0, abs=1e-15)

    def test_min_energy_control_reaches_origin(self):
        # closed-form two-moment control 6t-4 steers (0,1) to (0,0); Euler
        # inherits a first-order bias
        sys_ = di_system()
        grid = sys_.grid(2000)
        x = simulate(sys_, grid, [0.0, 1.0], sampled_linear_control(grid))
        assert np.linalg.norm(x.last) <= 10 * grid.h

    def test_dimension_mismatch(self):
        sys_ = di_system()
        grid = sys_.grid(4)
        u = ControlTrajectory.zeros(grid, 1)
        with pytest.raises(ValueError, match="x0"):
            simulate(sys_, grid, [0.0], u)

    def test_overflow_reported(self):
        sys_ = make_lti_system([[1e8]], [[1.0]], 0, 1)
        grid = sys_.grid(200)
        u = ControlTrajectory(values=np.ones((200, 1)), grid=grid)
        with pytest.raises(SimulationOverflowError, match="unstable"):
            simulate(sys_, grid, [1.0], u)

    def test_refinement_first_order(self):
        # |x_N(N) - x_N(2N)| shrinks linearly in h for a smooth control
        sys_ = di_system()
        errs = []
        for N in (250, 500, 1000, 2000):
            grid = sys_.grid(N)
            x = simulate(sys_, grid, [0.0, 1.0], sampled_linear_control(grid))
            errs.append(np.linalg.norm(x.last))
        ratios = [errs[i] / errs[i + 1] for i in range(3)]
        for r in ratios:
            assert 1.5 <= r <= 2.5


class TestBuildAffine:
    def test_single_step_formulas(self):
        sys_ = di_system()
        grid = sys_.grid(1)
        aff = build_affine(sys_, grid, BoundarySpec(x0=[0, 1], xf=[0, 0]))
        np.testing.assert_array_equal(aff.Phi, [[1, 1], [0, 1]])
        np.testing.assert_array_equal(aff.G, [[0], [1]])
        np.testing.assert_array_equal(aff.xi, [-1, -1])
        assert not aff.controllable  # one step cannot steer two states

    def test_two_step_columns(self):
        sys_ = di_system()
        grid = sys_.grid(2)
        aff = build_affine(sys_, grid, BoundarySpec(x0=[0, 1], xf=[0, 0]))
        np.testing.assert_allclose(aff.G, [[0.25, 0.0], [0.5, 0.5]])

    def test_phi_is_ordered_product(self):
        # time-varying system: Phi must multiply the step matrices from the
        # last step leftward
        from ctrlgap import make_ltv_system
        sys_ = make_ltv_system(
            lambda t: np.array([[0.0, 1.0], [-t, -0.5]]),
            lambda t: np.array([[0.0], [1.0 + t]]),
            n=2, m=1, t0=0.0, tf=1.0)
        grid = sys_.grid(7)
        aff = build_affine(sys_, grid, BoundarySpec(x0=[0, 1], xf=[0, 0]))
        P = np.eye(2)
        for t in grid.left_nodes:
            P = (np.eye(2) + grid.h * sys_.a_at(t)) @ P
        np.testing.assert_allclose(aff.Phi, P, rtol=1e-14)
        assert aff.G.shape == (2, grid.N * 1)

    @settings(deadline=None, max_examples=25)
    @given(seed=st.integers(0, 10_000), N=st.integers(2, 25))
    def test_terminal_state_consistency(self, seed, N):
        # simulate(...).last == Phi x0 + G u for random systems and controls
        rng = np.random.default_rng(seed)
        n = int(rng.integers(1, 4))
        m = int(rng.integers(1, 3))
        sys_ = make_lti_system(rng.normal(0, 1, (n, n)), rng.normal(0, 1, (n, m)),
                               0.0, 1.0)
        grid = sys_.grid(N)
        x0 = rng.normal(0, 1, n)
        xf = rng.normal(0, 1, n)
        aff = build_affine(sys_, grid, BoundarySpec(x0=x0, xf=xf))
        u = ControlTrajectory(values=rng.normal(0, 1, (N, m)), grid=grid)
        end = simulate(sys_, grid, x0, u).last
        predicted = aff.Phi @ x0 + aff.G @ u.flat
        assert np.linalg.norm(end - predicted) <= 1e-12 * (1 + np.linalg.norm(end))

    def test_projection_residual_contract(self, di_aff_2000):
        grid, aff = di_aff_2000
        from ctrlgap import project_affine
        rng = np.random.default_rng(1)
        u = ControlTrajectory(values=rng.normal(0, 2, (grid.N, 1)), grid=grid)
        out = project_affine(u, aff)
        res = np.linalg.norm(aff.G @ out.flat - aff.xi)
        assert res <= 1e-10 * (1 + np.linalg.norm(aff.xi))


class TestNorms:
    def test_zero(self):
        grid = di_system().grid(8)
        assert l2_norm(ControlTrajectory.zeros(grid, 1)) == 0.0

    @pytest.mark.parametrize("N", [1, 7, 100])
    def test_unit_constant(self, N):
        grid = di_system().grid(N)
        u = ControlTrajectory(values=np.ones((N, 1)), grid=grid)
        assert l2_norm(u) == pytest.approx(1.0, abs=1e-12)

    def test_linear_control_matches_integral(self):
        # int (6t-4)^2 dt over [0,1] equals 4, so the norm approaches 2
        grid = di_system().grid(10_000)
        u = sampled_linear_control(grid)
        assert l2_norm(u) == pytest.approx(2.0, abs=1e-3)

    @given(s=st.floats(0.1, 10))
    def test_homogeneous(self, s):
        grid = di_system().grid(32)
        vals = np.linspace(-1, 1, 32).reshape(-1, 1)
        u1 = ControlTrajectory(values=vals, grid=grid)
        u2 = ControlTrajectory(values=s * vals, grid=grid)
        assert l2_norm(u2) == pytest.approx(s * l2_norm(u1), rel=1e-12)


class TestTrajectoryTypes:
    def test_control_row_count_enforced(self):
        grid = di_system().grid(4)
        with pytest.raises(ValueError, match="rows"):
            ControlTrajectory(values=np.zeros((5, 1)), grid=grid)

    def test_state_row_count_enforced(self):
        grid = di_system().grid(4)
        with pytest.raises(ValueError, match="rows"):
            StateTrajectory(values=np.zeros((4, 2)), grid=grid)

    def test_finite_enforced(self):
        grid = di_system().grid(2)
        with pytest.raises(ValueError, match="finite"):
            ControlTrajectory(values=np.array([[np.nan], [0.0]]), grid=grid)

    def test_flat_round_trip(self):
        grid = di_system().grid(3)
        vals = np.arange(6.0).reshape(3, 2)
        u = ControlTrajectory(values=vals, grid=grid)
        back = ControlTrajectory.from_flat(u.flat, grid, 2)
        np.testing.assert_array_equal(back.values, vals)
