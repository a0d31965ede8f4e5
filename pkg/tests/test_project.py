import numpy as np
import pytest

from ctrlgap import (BoundarySpec, Bounds, ControlTrajectory,
                     InfeasibleIntersectionError, SolveOptions,
                     UncontrollableGridError, build_affine, builtin_instance,
                     dykstra_min_energy, l2_norm, make_lti_system,
                     project_affine, project_box, solve_gap_map, weighted_norm)

from conftest import scalar_integrator


@pytest.fixture(scope="module")
def di():
    inst = builtin_instance("double_integrator")
    grid = inst.system.grid(2000)
    return grid, build_affine(inst.system, grid, inst.boundary)


def random_control(grid, rng, scale=2.0, m=1):
    return ControlTrajectory(values=rng.normal(0, scale, (grid.N, m)), grid=grid)


class TestProjectBox:
    def test_inside_unchanged(self, di, rng):
        grid, _ = di
        u = ControlTrajectory(values=rng.uniform(-1, 1, (grid.N, 1)), grid=grid)
        out = project_box(u, Bounds.symmetric(1.0))
        np.testing.assert_array_equal(out.values, u.values)

    def test_clamps(self):
        grid = scalar_integrator().grid(3)
        u = ControlTrajectory(values=np.array([[3.0], [-2.0], [0.5]]), grid=grid)
        out = project_box(u, Bounds.symmetric(1.0))
        np.testing.assert_array_equal(out.values, [[1.0], [-1.0], [0.5]])

    def test_time_varying_bounds(self):
        # clamp a unit control to the widening box [-t, t] (horizon kept
        # away from zero so lower < upper holds everywhere)
        grid = scalar_integrator(0.5, 1.5).grid(4)
        b = Bounds(lower=lambda t: np.array([-t]), upper=lambda t: np.array([t]))
        u = ControlTrajectory(values=np.ones((4, 1)), grid=grid)
        out = project_box(u, b)
        np.testing.assert_allclose(out.values[:, 0],
                                   np.minimum(1.0, grid.left_nodes))

    def test_idempotent(self, di, rng):
        grid, _ = di
        u = random_control(grid, rng)
        b = Bounds.symmetric(0.7)
        once = project_box(u, b)
        twice = project_box(once, b)
        np.testing.assert_array_equal(once.values, twice.values)


class TestProjectAffine:
    def test_fixed_point_unchanged(self, di):
        grid, aff = di
        u0 = project_affine(ControlTrajectory.zeros(grid, 1), aff)
        again = project_affine(u0, aff)
        assert np.max(np.abs(again.values - u0.values)) <= \
            1e-12 * (1 + np.max(np.abs(u0.values)))

    def test_minimum_norm_control_converges(self, di):
        grid, aff = di
        out = project_affine(ControlTrajectory.zeros(grid, 1), aff)
        # compare against the closed-form control on the step midpoints it
        # represents; first-order transcription bias is ~3h there
        mids = grid.left_nodes + grid.h / 2
        err = np.max(np.abs(out.values[:, 0] - (6 * mids - 4)))
        assert err <= 5 * grid.h

    def test_scalar_least_norm_is_constant(self):
        sys_ = scalar_integrator()
        grid = sys_.grid(4)
        aff = build_affine(sys_, grid, BoundarySpec(x0=[0.0], xf=[1.0]))
        out = project_affine(ControlTrajectory.zeros(grid, 1), aff)
        np.testing.assert_allclose(out.values, np.ones((4, 1)), atol=1e-12)

    def test_displacement_in_row_space(self, di, rng):
        grid, aff = di
        u = random_control(grid, rng)
        out = project_affine(u, aff)
        move = out.flat - u.flat
        _, res, *_ = np.linalg.lstsq(aff.G.T, move, rcond=None)
        denom = max(np.linalg.norm(move), 1e-30)
        assert np.sqrt(res[0]) / denom <= 1e-10 if res.size else True

    def test_nonexpansive(self, di, rng):
        grid, aff = di
        for _ in range(5):
            a = random_control(grid, rng)
            b = random_control(grid, rng)
            pa, pb = project_affine(a, aff), project_affine(b, aff)
            lhs = weighted_norm(pa.values - pb.values, grid.h)
            rhs = weighted_norm(a.values - b.values, grid.h)
            assert lhs <= rhs * (1 + 1e-12)

    def test_box_nonexpansive(self, di, rng):
        grid, _ = di
        bounds = Bounds.symmetric(0.5)
        for _ in range(5):
            a = random_control(grid, rng)
            b = random_control(grid, rng)
            lhs = weighted_norm(project_box(a, bounds).values
                                - project_box(b, bounds).values, grid.h)
            rhs = weighted_norm(a.values - b.values, grid.h)
            assert lhs <= rhs * (1 + 1e-12)

    def test_singular_gram_refused(self):
        inst = builtin_instance("double_integrator")
        grid = inst.system.grid(1)
        aff = build_affine(inst.system, grid, inst.boundary)
        with pytest.raises(UncontrollableGridError):
            project_affine(ControlTrajectory.zeros(grid, 1), aff)


class TestDykstra:
    def test_wide_box_reaches_unconstrained_optimum(self, di):
        grid, aff = di
        u, stats = dykstra_min_energy(aff, Bounds.symmetric(10.0))
        mids = grid.left_nodes + grid.h / 2
        assert np.max(np.abs(u.values[:, 0] - (6 * mids - 4))) <= 5 * grid.h
        assert stats.converged and stats.residual <= 1e-9 * (1 + np.linalg.norm(aff.xi))

    def test_huge_box_equals_affine_projection(self, di):
        grid, aff = di
        u, _ = dykstra_min_energy(aff, Bounds.symmetric(1e6))
        direct = project_affine(ControlTrajectory.zeros(grid, 1), aff)
        assert np.max(np.abs(u.values - direct.values)) <= 1e-10

    def test_three_piece_structure_near_critical(self, di):
        # low bang, linear ramp, high bang; junction values are not pinned
        grid, aff = di
        a = 2.5
        u, stats = dykstra_min_energy(aff, Bounds.symmetric(a))
        vals = u.values[:, 0]
        at_lower = vals <= -a + 1e-9
        at_upper = vals >= a - 1e-9
        interior = ~(at_lower | at_upper)
        assert at_lower[0] and at_upper[-1]
        assert at_lower.sum() > 10 and at_upper.sum() > 10 and interior.sum() > 10
        idx = np.flatnonzero(interior)
        assert np.all(np.diff(idx) == 1)  # single contiguous ramp
        t = grid.left_nodes[idx]
        coef = np.polyfit(t, vals[idx], 1)
        assert np.max(np.abs(np.polyval(coef, t) - vals[idx])) <= 1e-8
        assert coef[0] > 0

    def test_two_piece_structure_when_upper_inactive(self, di):
        # at a=3 the re-optimized ramp peaks below the bound, so only the
        # lower bang survives
        grid, aff = di
        u, _ = dykstra_min_energy(aff, Bounds.symmetric(3.0))
        vals = u.values[:, 0]
        assert vals[0] <= -3.0 + 1e-9
        assert np.max(vals) < 3.0 - 1e-6
        idx = np.flatnonzero(np.abs(vals) < 3.0 - 1e-9)
        coef = np.polyfit(grid.left_nodes[idx], vals[idx], 1)
        assert np.max(np.abs(np.polyval(coef, grid.left_nodes[idx]) - vals[idx])) <= 1e-8

    def test_box_exact_and_weakly_optimal(self, rng):
        # the minimum-norm feasible control beats feasible points obtained
        # by running the gap solver from random starts
        inst = builtin_instance("double_integrator")
        grid = inst.system.grid(200)
        aff = build_affine(inst.system, grid, inst.boundary)
        bounds = Bounds.symmetric(3.0)
        u, stats = dykstra_min_energy(aff, bounds)
        lo, hi = bounds.sample(grid, 1)
        assert np.all(u.values >= lo) and np.all(u.values <= hi)
        best = l2_norm(u)
        for _ in range(100):
            start = ControlTrajectory(values=rng.normal(0, 3, (grid.N, 1)), grid=grid)
            res = solve_gap_map(aff, bounds, SolveOptions(tol=1e-10, warm_start=start))
            assert res.gap_norm <= 1e-6  # feasible instance
            assert best <= l2_norm(res.uB) + 1e-9

    def test_infeasible_detected(self, di):
        _, aff = di
        with pytest.raises(InfeasibleIntersectionError):
            dykstra_min_energy(aff, Bounds.symmetric(1.0))

    def test_unconverged_flag(self, di):
        _, aff = di
        u, stats = dykstra_min_energy(aff, Bounds.symmetric(2.5), tol=1e-14,
                                      max_iter=3)
        assert not stats.converged and stats.iterations == 3
