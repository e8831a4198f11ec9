"""Dense net forward/backward, Adam, and objective functions."""

import numpy as np
import pytest

from raybound.constraints import ConstraintSet, QuadraticConstraint
from raybound.layer import HardLayer, backward_batch, forward_batch
from raybound.net import (AdamState, DenseLayer, DenseNet, Objective,
                          adam_step, eval_objective, eval_objective_batch,
                          net_backward, net_forward)

from oracles import central_diff_gradient, rel_gap


def identity_net(W, activation="identity"):
    W = np.asarray(W, dtype=float)
    return DenseNet([DenseLayer(W=W, b=np.zeros(W.shape[0]), activation=activation)])


class TestNetForward:
    def test_identity_layer(self):
        out, _ = net_forward(identity_net(np.eye(2)), np.array([1.0, 2.0]))
        assert np.allclose(out, [1.0, 2.0])

    def test_relu_layer(self):
        out, _ = net_forward(identity_net(np.eye(2), "relu"), np.array([-1.0, 2.0]))
        assert np.allclose(out, [0.0, 2.0])

    def test_two_layer_chain(self):
        net = DenseNet([DenseLayer(2.0 * np.eye(2), np.zeros(2), "identity"),
                        DenseLayer(3.0 * np.eye(2), np.zeros(2), "identity")])
        out, _ = net_forward(net, np.array([1.0, 0.0]))
        assert np.allclose(out, [6.0, 0.0])

    def test_batched_matches_single(self):
        net = DenseNet.create([3, 8, 2], seed=0)
        rng = np.random.default_rng(0)
        Z = rng.standard_normal((5, 3))
        batch_out, _ = net_forward(net, Z)
        for i in range(5):
            single, _ = net_forward(net, Z[i])
            assert np.allclose(single, batch_out[i])

    def test_dimension_check(self):
        with pytest.raises(ValueError):
            net_forward(identity_net(np.eye(2)), np.array([1.0, 2.0, 3.0]))


class TestNetBackward:
    def test_identity_input_gradient(self):
        net = identity_net(np.eye(2))
        _, cache = net_forward(net, np.array([0.3, -0.7]))
        grads = net_backward(net, cache, np.array([1.0, 0.0]))
        assert np.allclose(grads.input_grad, [1.0, 0.0])

    def test_relu_gate(self):
        net = identity_net(np.eye(2), "relu")
        _, cache = net_forward(net, np.array([-1.0, 2.0]))
        grads = net_backward(net, cache, np.array([1.0, 1.0]))
        assert np.allclose(grads.input_grad, [0.0, 1.0])

    def test_parameter_gradients_match_fd(self):
        rng = np.random.default_rng(3)
        net = DenseNet.create([3, 6, 5, 2], hidden_activation="tanh", seed=1)
        z = rng.standard_normal(3)
        u = rng.standard_normal(2)

        def loss(params_flat):
            offset = 0
            for layer in net.layers:
                for arr in (layer.W, layer.b):
                    arr.flat[:] = params_flat[offset:offset + arr.size]
                    offset += arr.size
            out, _ = net_forward(net, z)
            return float(out @ u)

        flat = np.concatenate([p.ravel() for p in net.parameters()])
        fd = central_diff_gradient(loss, flat)
        loss(flat)  # restore parameters
        _, cache = net_forward(net, z)
        grads = net_backward(net, cache, u)
        analytic = np.concatenate([g.ravel() for g in grads.as_list()])
        assert rel_gap(analytic, fd) <= 1e-6

    def test_input_gradients_match_fd(self):
        rng = np.random.default_rng(5)
        for act in ("relu", "tanh", "identity"):
            net = DenseNet.create([4, 10, 3], hidden_activation=act, seed=2)
            z = rng.standard_normal(4)
            u = rng.standard_normal(3)
            _, cache = net_forward(net, z)
            grads = net_backward(net, cache, u)
            fd = central_diff_gradient(
                lambda zz: float(net_forward(net, zz)[0] @ u), z)
            assert rel_gap(grads.input_grad, fd) <= 1e-5


class TestAdam:
    def test_first_step_is_lr_sized(self):
        params = [np.zeros(3)]
        state = AdamState(lr=0.1)
        adam_step(state, params, [np.ones(3)])
        assert np.allclose(params[0], -0.1, atol=1e-8)

    def test_zero_gradient_keeps_params(self):
        params = [np.array([1.0, 2.0])]
        state = AdamState(lr=0.1)
        adam_step(state, params, [np.zeros(2)])
        assert np.allclose(params[0], [1.0, 2.0])

    def test_monotone_loss_on_quadratic(self):
        x = [np.array([3.0])]
        state = AdamState(lr=0.05)
        losses = []
        for _ in range(60):
            losses.append(float(x[0][0] ** 2))
            adam_step(state, x, [2.0 * x[0]])
        assert all(b < a for a, b in zip(losses[:10], losses[1:11]))


class TestObjectives:
    def test_rosenbrock_minimum(self):
        value, grad = eval_objective(Objective.rosenbrock(), np.array([1.0, 1.0]))
        assert value == 0.0
        assert np.allclose(grad, 0.0)

    def test_linear_value_and_gradient(self):
        value, grad = eval_objective(Objective.linear([1.0, 2.0]), np.array([3.0, 1.0]))
        assert value == pytest.approx(5.0)
        assert np.allclose(grad, [1.0, 2.0])

    def test_gradients_match_fd(self):
        rng = np.random.default_rng(7)
        H = rng.standard_normal((3, 3))
        objectives = [Objective.bird(), Objective.rosenbrock(),
                      Objective.quadratic(H.T @ H, rng.standard_normal(3)),
                      Objective.lp_distance(2, rng.standard_normal(3)),
                      Objective.lp_distance(1, rng.standard_normal(3))]
        for obj in objectives:
            n = 2 if obj.kind in ("bird", "rosenbrock") else 3
            for _ in range(20):
                x = rng.uniform(-4.0, 4.0, n)
                _, grad = eval_objective(obj, x)
                fd = central_diff_gradient(lambda xx: eval_objective(obj, xx)[0], x)
                assert rel_gap(grad, fd) <= 1e-5

    def test_cross_entropy_examples(self):
        obj = Objective.cross_entropy()
        value, grad = eval_objective(obj, np.array([0.2, 0.5, 0.3]), aux=1)
        assert value == pytest.approx(-np.log(0.5))
        assert grad[1] == pytest.approx(-2.0) and grad[0] == 0.0

    def test_cross_entropy_rejects_non_probabilities(self):
        with pytest.raises(ValueError):
            eval_objective(Objective.cross_entropy(), np.array([1.4, -0.4, 0.0]), aux=0)

    def test_cross_entropy_clamps_log(self):
        value, _ = eval_objective(Objective.cross_entropy(),
                                  np.array([0.0, 1.0]), aux=0)
        assert value == pytest.approx(-np.log(1e-12))

    def test_hinge_example(self):
        value, grad = eval_objective(Objective.hinge(), np.array([0.6, 0.3, 0.1]), aux=0)
        # margins: 1 + 0.3 - 0.6 = 0.7, 1 + 0.1 - 0.6 = 0.5
        assert value == pytest.approx(1.2)
        assert np.allclose(grad, [-2.0, 1.0, 1.0])

    def test_quadratic_requires_psd(self):
        with pytest.raises(ValueError):
            Objective.quadratic(np.diag([1.0, -1.0]), np.zeros(2))


class TestEndToEnd:
    def test_composite_gradient_matches_fd(self):
        rng = np.random.default_rng(11)
        omega = ConstraintSet(2, quadratic=[QuadraticConstraint(2.0 * np.eye(2),
                                                                np.zeros(2), 1.0)],
                              interior_point=np.zeros(2))
        layer = HardLayer(omega)
        obj = Objective.quadratic(np.eye(2), np.array([0.3, -0.2]))
        net = DenseNet.create([3, 8, 3], hidden_activation="tanh", seed=4)

        def loss(z):
            out, _ = net_forward(net, z[None, :])
            X, _ = forward_batch(layer, out[:, :2], out[:, 2])
            return float(eval_objective_batch(obj, X)[0][0])

        checked = 0
        while checked < 25:
            z = rng.standard_normal(3)
            out, ncache = net_forward(net, z[None, :])
            X, cache = forward_batch(layer, out[:, :2], out[:, 2])
            if cache.capped[0]:
                continue
            _, gx = eval_objective_batch(obj, X)
            gR, gs = backward_batch(layer, cache, gx)
            gz = net_backward(net, ncache,
                              np.concatenate([gR, gs[:, None]], axis=1)).input_grad[0]
            fd = central_diff_gradient(loss, z)
            assert rel_gap(gz, fd) <= 1e-4
            checked += 1

    def test_training_decreases_loss(self):
        # a small trunk + layer on a random quadratic-constraint problem
        from raybound.bench.generators import gen_quadratic_problem
        problem = gen_quadratic_problem(3, 10, seed=5, loss_kind="quadratic")
        layer = HardLayer(problem.omega)
        net = DenseNet.create([3] + [100] * 5 + [4], seed=6)
        params = net.parameters()
        state = AdamState(lr=1e-3)
        rng = np.random.default_rng(9)
        Z = rng.standard_normal((16, 3))
        losses = []
        for _ in range(50):
            out, ncache = net_forward(net, Z)
            X, cache = forward_batch(layer, out[:, :3], out[:, 3])
            vals, gx = eval_objective_batch(problem.objective, X)
            losses.append(float(vals.mean()))
            gR, gs = backward_batch(layer, cache, gx / len(Z))
            grads = net_backward(net, ncache, np.concatenate([gR, gs[:, None]], axis=1))
            adam_step(state, params, grads.as_list())
        assert losses[-1] < losses[0]
        chunks = [float(np.mean(losses[i:i + 10])) for i in range(0, 50, 10)]
        assert all(b < a for a, b in zip(chunks, chunks[1:]))

    def test_deterministic_replay(self):
        from raybound.bench.generators import gen_linear_problem
        from raybound.bench.solve import layer_solve
        problem = gen_linear_problem(2, 20, seed=3)
        a = layer_solve(problem, iters=150, lr=0.1, restarts=2, seed=1)
        b = layer_solve(problem, iters=150, lr=0.1, restarts=2, seed=1)
        assert a.value == b.value
        assert np.array_equal(a.x, b.x)
