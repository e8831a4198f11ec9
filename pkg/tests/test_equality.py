"""Equality elimination: particular solutions, kernel bases, reductions."""

import numpy as np
import pytest

from raybound.constraints import (ConstraintSet, LinearConstraint,
                                  QuadraticConstraint)
from raybound.equality import (EqualitySystem, kernel_basis, lift,
                               particular_solution, reduce,
                               reduce_constraint_set, reduce_linear,
                               reduce_quadratic)
from raybound.exceptions import InfeasibleSetError

SUM_TO_ONE = EqualitySystem(np.array([[1.0, 1.0]]), np.array([1.0]))


class TestParticularSolution:
    def test_min_norm_solution(self):
        u, res = particular_solution(SUM_TO_ONE)
        assert np.allclose(u, [0.5, 0.5]) and res < 1e-12

    def test_unique_solution(self):
        u, res = particular_solution(EqualitySystem(np.eye(2), np.array([3.0, 4.0])))
        assert np.allclose(u, [3.0, 4.0]) and res < 1e-12

    def test_inconsistent_residual(self):
        sys = EqualitySystem(np.array([[1.0, 0.0], [1.0, 0.0]]), np.array([1.0, 2.0]))
        _, res = particular_solution(sys)
        assert res == pytest.approx(np.sqrt(0.5))
        with pytest.raises(InfeasibleSetError):
            reduce(sys)

    def test_min_norm_matches_lstsq_oracle(self):
        rng = np.random.default_rng(5)
        for _ in range(40):
            n = int(rng.integers(2, 9))
            mu = int(rng.integers(1, n + 1))
            Q = rng.standard_normal((mu, n))
            e = Q @ rng.standard_normal(n)
            u, res = particular_solution(EqualitySystem(Q, e))
            oracle = np.linalg.pinv(Q) @ e
            assert np.allclose(u, oracle, atol=1e-9)
            assert res <= 1e-9 * (1 + np.linalg.norm(e))


class TestKernelBasis:
    def test_line_kernel(self):
        R = kernel_basis(SUM_TO_ONE)
        assert R.shape == (2, 1)
        assert abs(abs(R[0, 0]) - 1 / np.sqrt(2)) < 1e-12
        assert np.allclose(R[0], -R[1])

    def test_full_rank_empty_kernel(self):
        R = kernel_basis(EqualitySystem(np.eye(2), np.zeros(2)))
        assert R.shape == (2, 0)

    def test_zero_map_full_kernel(self):
        R = kernel_basis(EqualitySystem(np.zeros((1, 2)), np.zeros(1)))
        assert R.shape == (2, 2)
        assert np.allclose(R.T @ R, np.eye(2), atol=1e-12)

    def test_rank_tol_monotonicity(self):
        rng = np.random.default_rng(9)
        Q = rng.standard_normal((4, 6))
        Q[3] = Q[0] + 1e-6 * rng.standard_normal(6)   # nearly dependent row
        sys = EqualitySystem(Q, np.zeros(4))
        deltas = [kernel_basis(sys, tol).shape[1] for tol in (1e-12, 1e-8, 1e-4, 1e-1)]
        assert all(b >= a for a, b in zip(deltas, deltas[1:]))


class TestReduceLinear:
    def test_worked_example(self):
        red = reduce(SUM_TO_ONE)
        B, t = reduce_linear(np.array([[1.0, 0.0]]), np.array([1.0]), red)
        assert abs(abs(B[0, 0]) - 1 / np.sqrt(2)) < 1e-12
        assert t[0] == pytest.approx(0.5)

    def test_redundant_row_dropped(self):
        red = reduce(SUM_TO_ONE)
        B, t = reduce_linear(np.array([[1.0, 1.0]]), np.array([2.0]), red)
        assert B.shape == (0, 1) and t.shape == (0,)

    def test_contradictory_row_raises(self):
        red = reduce(SUM_TO_ONE)
        with pytest.raises(InfeasibleSetError):
            reduce_linear(np.array([[1.0, 1.0]]), np.array([0.5]), red)


class TestReduceQuadratic:
    def test_disk_reduces_to_interval(self):
        red = reduce(SUM_TO_ONE)
        c = QuadraticConstraint(2.0 * np.eye(2), np.zeros(2), 1.0)
        rc = reduce_quadratic(c, red)
        assert rc.P.shape == (1, 1) and rc.P[0, 0] == pytest.approx(2.0)
        assert rc.q[0] == pytest.approx(0.0, abs=1e-12)
        assert rc.b == pytest.approx(0.5)

    def test_single_point_accept_and_reject(self):
        sys = EqualitySystem(np.eye(2), np.array([0.5, 0.5]))
        red = reduce(sys)
        ok = QuadraticConstraint(2.0 * np.eye(2), np.zeros(2), 1.0)
        assert reduce_quadratic(ok, red) is None
        bad = QuadraticConstraint(2.0 * np.eye(2), np.zeros(2), 0.1)
        with pytest.raises(InfeasibleSetError):
            reduce_quadratic(bad, red)

    def test_degenerate_quadratic_matches_linear_path(self):
        red = reduce(SUM_TO_ONE)
        a, beta = np.array([1.0, 0.0]), 1.0
        rc = reduce_quadratic(QuadraticConstraint(np.zeros((2, 2)), a, beta), red)
        B, t = reduce_linear(a[None, :], np.array([beta]), red)
        assert np.allclose(rc.q, B[0]) and rc.b == pytest.approx(t[0])


class TestLift:
    def test_lift_origin_gives_particular_solution(self):
        red = reduce(SUM_TO_ONE)
        assert np.allclose(lift(red, np.zeros(1)), [0.5, 0.5])

    def test_lift_along_kernel(self):
        red = reduce(SUM_TO_ONE)
        x = lift(red, np.array([np.sqrt(2.0)]))
        assert x.sum() == pytest.approx(1.0)
        assert sorted(np.round(x, 9).tolist()) == [-0.5, 1.5]

    def test_delta_zero_always_u(self):
        red = reduce(EqualitySystem(np.eye(2), np.array([3.0, 4.0])))
        assert np.allclose(lift(red, np.zeros(0)), [3.0, 4.0])


class TestProperties:
    def test_round_trip_and_equivalence(self):
        rng = np.random.default_rng(21)
        for _ in range(50):
            n = int(rng.integers(2, 9))
            mu = int(rng.integers(1, n))
            Q = rng.standard_normal((mu, n))
            e = Q @ rng.standard_normal(n)
            sys = EqualitySystem(Q, e)
            red = reduce(sys)
            if red.delta == 0:
                continue
            scale = 1e-9 * (1.0 + np.linalg.norm(e))
            for _ in range(4):
                w = rng.standard_normal(red.delta)
                x = lift(red, w)
                assert np.abs(Q @ x - e).max() <= scale
                a, b = rng.standard_normal(n), rng.normal()
                B, t = red.R.T @ a, b - a @ red.u
                orig = a @ x - b
                assert abs((B @ w - t) - orig) <= 1e-9 * (1.0 + abs(orig))
                M = rng.standard_normal((n, n))
                c = QuadraticConstraint(M.T @ M, rng.standard_normal(n), rng.normal())
                rc = reduce_quadratic(c, red)
                if rc is None:
                    continue
                red_val = 0.5 * w @ rc.P @ w + rc.q @ w - rc.b
                orig_val = c.value(x)
                assert abs(red_val - orig_val) <= 1e-8 * (1.0 + abs(orig_val))

    def test_basis_invariants_on_construction(self):
        rng = np.random.default_rng(33)
        for _ in range(30):
            n = int(rng.integers(2, 10))
            mu = int(rng.integers(1, n + 2))
            Q = rng.standard_normal((mu, n))
            red = reduce(EqualitySystem(Q, Q @ rng.standard_normal(n)))
            if red.delta:
                assert np.abs(Q @ red.R).max() <= 1e-9 * max(np.abs(Q).max(), 1.0)
                assert np.abs(red.R.T @ red.R - np.eye(red.delta)).max() <= 1e-10


class TestReduceConstraintSet:
    def test_bounded_simplex_reduction(self):
        eye = np.eye(3)
        lin = ([LinearConstraint(-eye[i], 0.0) for i in range(3)]
               + [LinearConstraint(eye[i], 0.75) for i in range(3)])
        omega = ConstraintSet(3, lin)
        sys = EqualitySystem(np.ones((1, 3)), np.ones(1))
        reduced, red = reduce_constraint_set(omega, sys)
        assert reduced.dim == 2 and len(reduced.linear) == 6
        rng = np.random.default_rng(3)
        for _ in range(20):
            w = rng.uniform(-0.2, 0.2, 2)
            x = lift(red, w)
            assert x.sum() == pytest.approx(1.0)
            inside_w = reduced.values(w).max() <= 0
            inside_x = omega.values(x).max() <= 1e-12
            assert inside_w == inside_x
