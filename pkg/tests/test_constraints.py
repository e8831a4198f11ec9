"""Constraint evaluation, ray bounds, feasibility, interior points."""

import math

import numpy as np
import pytest

from raybound.constraints import (ConstraintSet, LinearConstraint,
                                  QuadraticConstraint, RayBound, eval_constraint,
                                  find_interior_point, is_feasible,
                                  ray_bound_linear, ray_bound_quadratic,
                                  system_ray_bound, constraint_set_from_dict,
                                  constraint_set_to_dict)
from raybound.exceptions import InfeasibleSetError

from oracles import bisect_ray_bound, random_mixed_set

UNIT_DISK = QuadraticConstraint(2.0 * np.eye(2), np.zeros(2), 1.0)


def unit_disk_set():
    return ConstraintSet(2, quadratic=[UNIT_DISK], interior_point=np.zeros(2))


class TestEvalConstraint:
    def test_point_on_hyperplane(self):
        c = LinearConstraint(np.array([1.0, 0.0]), 1.0)
        assert eval_constraint(c, np.array([1.0, 0.0])) == 0.0

    def test_unit_disk_center(self):
        assert eval_constraint(UNIT_DISK, np.zeros(2)) == -1.0

    def test_analytic_substitution(self):
        c = LinearConstraint(np.array([1.0, 2.0]), 3.0)
        assert eval_constraint(c, np.array([1.0, 1.0])) == 0.0

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            eval_constraint(UNIT_DISK, np.zeros(3))

    def test_convexity_spot_check(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            n = int(rng.integers(2, 6))
            M = rng.standard_normal((n, n))
            c = QuadraticConstraint(M.T @ M, rng.standard_normal(n), 0.5)
            x, y = rng.standard_normal((2, n))
            for a in rng.uniform(0.0, 1.0, 5):
                mid = eval_constraint(c, a * x + (1 - a) * y)
                assert mid <= max(eval_constraint(c, x), eval_constraint(c, y)) + 1e-9


class TestRayBoundLinear:
    C = LinearConstraint(np.array([1.0, 0.0]), 1.0)

    def test_unit_step_to_hyperplane(self):
        rb = ray_bound_linear(self.C, np.zeros(2), np.array([1.0, 0.0]))
        assert rb.value == pytest.approx(1.0) and rb.active_index is not None

    def test_parallel_ray_is_infinite(self):
        rb = ray_bound_linear(self.C, np.zeros(2), np.array([0.0, 1.0]))
        assert rb.value == math.inf and rb.active_index is None

    def test_remaining_distance(self):
        rb = ray_bound_linear(self.C, np.array([0.5, 0.0]), np.array([1.0, 0.0]))
        assert rb.value == pytest.approx(0.5)

    def test_inward_ray_is_infinite(self):
        assert ray_bound_linear(self.C, np.zeros(2), np.array([-1.0, 0.0])).value == math.inf

    def test_precondition_breach(self):
        with pytest.raises(InfeasibleSetError):
            ray_bound_linear(self.C, np.array([2.0, 0.0]), np.array([1.0, 0.0]))


class TestRayBoundQuadratic:
    def test_unit_disk_unit_ray(self):
        rb = ray_bound_quadratic(UNIT_DISK, np.zeros(2), np.array([1.0, 0.0]))
        assert rb.value == pytest.approx(1.0)

    def test_offset_start(self):
        rb = ray_bound_quadratic(UNIT_DISK, np.array([0.5, 0.0]), np.array([1.0, 0.0]))
        assert rb.value == pytest.approx(0.5)

    def test_degenerate_linear_case(self):
        c = QuadraticConstraint(np.diag([2.0, 0.0]), np.array([0.0, 1.0]), 1.0)
        rb = ray_bound_quadratic(c, np.zeros(2), np.array([0.0, 1.0]))
        assert rb.value == pytest.approx(1.0)
        # substitution check: h(p + a*r) = 0 at the bound
        assert eval_constraint(c, np.array([0.0, rb.value])) == pytest.approx(0.0)

    def test_degenerate_inward_is_infinite(self):
        c = QuadraticConstraint(np.diag([2.0, 0.0]), np.array([0.0, 1.0]), 1.0)
        assert ray_bound_quadratic(c, np.zeros(2), np.array([0.0, -1.0])).value == math.inf

    def test_non_psd_rejected_at_construction(self):
        with pytest.raises(ValueError):
            QuadraticConstraint(np.diag([1.0, -1.0]), np.zeros(2), 1.0)


class TestSystemRayBound:
    def test_min_and_active_index(self):
        omega = ConstraintSet(2, [LinearConstraint(np.array([1.0, 0.0]), 1.0),
                                  LinearConstraint(np.array([0.0, 1.0]), 1.0)],
                              interior_point=np.zeros(2))
        rb = system_ray_bound(omega, np.zeros(2), np.array([1.0, 0.0]))
        assert rb.value == pytest.approx(1.0) and rb.active_index == 0

    def test_min_of_two_parallel(self):
        omega = ConstraintSet(2, [LinearConstraint(np.array([1.0, 0.0]), 1.0),
                                  LinearConstraint(np.array([1.0, 0.0]), 2.0)],
                              interior_point=np.zeros(2))
        rb = system_ray_bound(omega, np.zeros(2), np.array([1.0, 0.0]))
        assert rb.value == pytest.approx(1.0) and rb.active_index == 0

    def test_all_infinite(self):
        omega = ConstraintSet(2, [LinearConstraint(np.array([1.0, 0.0]), 1.0)],
                              interior_point=np.zeros(2))
        rb = system_ray_bound(omega, np.zeros(2), np.array([-1.0, 0.0]))
        assert rb.value == math.inf and rb.active_index is None

    def test_tie_breaks_to_lowest_index(self):
        omega = ConstraintSet(2, [LinearConstraint(np.array([0.0, 1.0]), 1.0),
                                  LinearConstraint(np.array([0.0, 1.0]), 1.0)],
                              interior_point=np.zeros(2))
        rb = system_ray_bound(omega, np.zeros(2), np.array([0.0, 1.0]))
        assert rb.active_index == 0

    def test_positive_scale_equivariance(self):
        rng = np.random.default_rng(11)
        for _ in range(40):
            omega = random_mixed_set(rng, int(rng.integers(2, 6)), 8)
            r = rng.standard_normal(omega.dim)
            base = system_ray_bound(omega, np.zeros(omega.dim), r).value
            if not math.isfinite(base):
                continue
            for c in (0.25, 3.0, 17.0):
                scaled = system_ray_bound(omega, np.zeros(omega.dim), c * r).value
                assert scaled == pytest.approx(base / c, rel=1e-12)

    def test_bound_lands_on_active_surface(self):
        rng = np.random.default_rng(13)
        for _ in range(60):
            omega = random_mixed_set(rng, 3, 10)
            r = rng.standard_normal(3)
            rb = system_ray_bound(omega, np.zeros(3), r)
            if not rb.finite:
                continue
            c = omega.constraint(rb.active_index)
            val = eval_constraint(c, rb.value * r)
            assert abs(val) <= 1e-7 * (1.0 + abs(c.b))

    def test_segment_stays_feasible_fuzz(self):
        # 1e5 (set, ray, t) probes: p + t*r feasible for t in [0, bound)
        rng = np.random.default_rng(17)
        total = 0
        while total < 100_000:
            n = int(rng.integers(2, 8))
            omega = random_mixed_set(rng, n, int(rng.integers(4, 16)))
            B = 4000
            R = rng.standard_normal((B, n))
            alpha, _ = omega.ray_bounds_batch(np.zeros(n), R)
            t = rng.uniform(0.0, 1.0, B) * np.where(np.isfinite(alpha), alpha, 1e6)
            X = t[:, None] * R
            assert omega.values_batch(X).max() <= 1e-9 * max(1.0, np.abs(X).max())
            total += B

    def test_agrees_with_bisection_oracle(self):
        rng = np.random.default_rng(19)
        checked = 0
        while checked < 60:
            omega = random_mixed_set(rng, 2, int(rng.integers(4, 12)))
            r = rng.standard_normal(2)
            rb = system_ray_bound(omega, np.zeros(2), r)
            oracle = bisect_ray_bound(omega, np.zeros(2), r)
            if not rb.finite:
                assert oracle == math.inf
                continue
            assert rb.value == pytest.approx(oracle, rel=1e-4)
            checked += 1


class TestFeasibility:
    def test_center_boundary_outside(self):
        omega = unit_disk_set()
        assert is_feasible(omega, np.zeros(2), 0.0)
        assert is_feasible(omega, np.array([1.0, 0.0]), 0.0)
        assert not is_feasible(omega, np.array([1.1, 0.0]), 1e-9)

    def test_negative_tol_rejected(self):
        with pytest.raises(ValueError):
            is_feasible(unit_disk_set(), np.zeros(2), -1.0)


class TestFindInteriorPoint:
    def test_1d_box(self):
        omega = ConstraintSet(1, [LinearConstraint(np.array([1.0]), 1.0),
                                  LinearConstraint(np.array([-1.0]), 1.0)])
        p = find_interior_point(omega, margin=1e-6)
        assert abs(p[0]) < 1.0 - 1e-6
        assert omega.interior_point is not None

    def test_contradictory_constraints(self):
        omega = ConstraintSet(1, [LinearConstraint(np.array([1.0]), -1.0),
                                  LinearConstraint(np.array([-1.0]), -1.0)])
        with pytest.raises(InfeasibleSetError):
            find_interior_point(omega, max_iters=2000)

    def test_disk_start_already_interior(self):
        omega = ConstraintSet(2, quadratic=[UNIT_DISK])
        p = find_interior_point(omega)
        assert np.allclose(p, 0.0)

    def test_shifted_polytope(self):
        # feasible box [2, 4] x [2, 4]: origin infeasible, search must move
        cons = [LinearConstraint(np.array([1.0, 0.0]), 4.0),
                LinearConstraint(np.array([-1.0, 0.0]), -2.0),
                LinearConstraint(np.array([0.0, 1.0]), 4.0),
                LinearConstraint(np.array([0.0, -1.0]), -2.0)]
        omega = ConstraintSet(2, cons)
        p = find_interior_point(omega, margin=1e-3)
        assert omega.values(p).max() <= -1e-3


class TestConstructionInvariants:
    def test_interior_margin_enforced(self):
        with pytest.raises(InfeasibleSetError):
            ConstraintSet(2, quadratic=[UNIT_DISK], interior_point=[1.0, 0.0])

    def test_needs_a_constraint(self):
        with pytest.raises(ValueError):
            ConstraintSet(2)

    def test_zero_normal_rejected(self):
        with pytest.raises(ValueError):
            LinearConstraint(np.zeros(2), 1.0)

    def test_ray_bound_invariants(self):
        with pytest.raises(ValueError):
            RayBound(-1.0, active_index=0)
        with pytest.raises(ValueError):
            RayBound(1.0, active_index=None)
        with pytest.raises(ValueError):
            RayBound(math.inf, active_index=3)


class TestJsonSchema:
    def test_round_trip(self):
        rng = np.random.default_rng(23)
        omega = random_mixed_set(rng, 3, 8)
        again = constraint_set_from_dict(constraint_set_to_dict(omega))
        assert again.dim == omega.dim
        assert len(again.linear) == len(omega.linear)
        assert len(again.quadratic) == len(omega.quadratic)
        x = rng.standard_normal(3)
        assert np.allclose(again.values(x), omega.values(x), rtol=0, atol=1e-15)
        assert np.allclose(again.interior_point, omega.interior_point)
