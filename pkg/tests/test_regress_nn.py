"""Tests for the feedforward regressor: activations, initialization,
backpropagation, training determinism and checkpointing."""

import numpy as np
import pytest

from cecert.model import DistortionSpec, StructuralModel
from cecert.regress_nn import (
    NetworkSpec,
    TrainSchedule,
    TrainedNetwork,
    forward,
    init_running,
    load_checkpoint,
    loss_and_gradients,
    lse,
    lse_grad,
    save_checkpoint,
    train,
    xavier_init,
)
from cecert.sampling import RngStream, standard_normal_batch


def tiny_spec(activation="tanh", input_dim=2):
    return NetworkSpec(input_dim=input_dim, depth=3, hidden_widths=(4, 3),
                       activation=activation)


def fresh_net(spec, seed=0):
    return TrainedNetwork(spec=spec, params=xavier_init(spec, RngStream(seed, 0)),
                          running=init_running(spec))


def toy_model(d=2):
    def h(x, v):
        return x[..., 0] ** 2 + x[..., 1] + 0.1 * v[..., 0]

    return StructuralModel(
        d=d, k=1,
        x_sampler=lambda s, n, dist: standard_normal_batch(s, n * d).reshape(n, d),
        v_sampler=lambda s, n: standard_normal_batch(s, n).reshape(n, 1),
        h=h, name="toy",
    )


class TestLse:
    def test_value_at_zero(self):
        assert lse(0.0) == pytest.approx(np.log(2.0))

    def test_limits(self):
        # For large positive x the unit branch dominates, for large negative
        # x the alpha branch dominates.
        assert lse(50.0, 0.01) == pytest.approx(50.0, abs=1e-12)
        assert lse(-50.0, 0.01) == pytest.approx(-0.5, abs=1e-12)

    def test_no_overflow(self):
        assert np.isfinite(lse(1e8))
        assert np.isfinite(lse(-1e8))

    def test_bounds_leaky_relu(self):
        x = np.linspace(-30.0, 30.0, 10_001)
        alpha = 0.01
        leaky = np.maximum(alpha * x, x)
        y = lse(x, alpha)
        assert np.all(y >= leaky)
        assert np.all(y <= leaky + np.log(2.0))

    def test_grad_matches_finite_differences(self):
        x = np.linspace(-5.0, 5.0, 101)
        eps = 1e-6
        fd = (lse(x + eps) - lse(x - eps)) / (2.0 * eps)
        np.testing.assert_allclose(lse_grad(x), fd, atol=1e-8)

    def test_grad_range(self):
        g = lse_grad(np.linspace(-100.0, 100.0, 1001), 0.01)
        assert np.all(g >= 0.01 - 1e-15)
        assert np.all(g <= 1.0 + 1e-15)
        assert np.all(np.diff(g) >= -1e-15)

    def test_alpha_validated(self):
        with pytest.raises(ValueError):
            lse(1.0, alpha=1.5)


class TestSpecValidation:
    def test_width_count_must_match_depth(self):
        with pytest.raises(ValueError):
            NetworkSpec(input_dim=2, depth=4, hidden_widths=(8, 8))

    def test_unknown_activation(self):
        with pytest.raises(ValueError):
            NetworkSpec(input_dim=2, depth=2, hidden_widths=(4,), activation="swish")

    def test_schedule_rates_strictly_decreasing(self):
        with pytest.raises(ValueError):
            TrainSchedule(total_steps=10, lr_stages=((0, 0.1), (5, 0.1)))
        with pytest.raises(ValueError):
            TrainSchedule(total_steps=10, lr_stages=((1, 0.1), (5, 0.01)))

    def test_rate_at_steps(self):
        sched = TrainSchedule(total_steps=100,
                              lr_stages=((0, 0.1), (10, 0.01), (50, 0.001)))
        assert sched.rate_at(0) == 0.1
        assert sched.rate_at(9) == 0.1
        assert sched.rate_at(10) == 0.01
        assert sched.rate_at(99) == 0.001


class TestInitialization:
    def test_xavier_shapes_and_bounds(self):
        spec = tiny_spec()
        params = xavier_init(spec, RngStream(0, 0))
        assert params["W1"].shape == (4, 2)
        assert params["W2"].shape == (3, 4)
        assert params["W3"].shape == (1, 3)
        for i, (fan_in, fan_out) in enumerate([(2, 4), (4, 3), (3, 1)], start=1):
            bound = np.sqrt(6.0 / (fan_in + fan_out))
            assert np.all(np.abs(params[f"W{i}"]) < bound)
            np.testing.assert_array_equal(params[f"b{i}"], np.zeros(fan_out))
        np.testing.assert_array_equal(params["gamma1"], np.ones(4))
        np.testing.assert_array_equal(params["beta2"], np.zeros(3))

    def test_init_is_deterministic(self):
        spec = tiny_spec()
        a = xavier_init(spec, RngStream(3, 0))
        b = xavier_init(spec, RngStream(3, 0))
        for key in a:
            np.testing.assert_array_equal(a[key], b[key])


class TestForward:
    def test_infer_is_deterministic_and_batch_independent(self):
        net = fresh_net(tiny_spec())
        X = standard_normal_batch(RngStream(1, 1), 40).reshape(20, 2)
        whole = net.predict(X)
        parts = np.concatenate([net.predict(X[:7]), net.predict(X[7:])])
        np.testing.assert_array_equal(whole, parts)
        np.testing.assert_array_equal(whole, net.predict(X))

    def test_train_mode_normalizes_with_batch_stats(self):
        net = fresh_net(tiny_spec())
        X = standard_normal_batch(RngStream(2, 1), 400).reshape(200, 2) * 5.0 + 3.0
        _, cache = forward(net, X, mode="train")
        shat = cache["layers"][0]["shat"]
        np.testing.assert_allclose(shat.mean(axis=0), 0.0, atol=1e-12)
        np.testing.assert_allclose(shat.std(axis=0), 1.0, atol=1e-2)

    def test_train_mode_updates_running_stats(self):
        net = fresh_net(tiny_spec())
        before = net.running["mean1"].copy()
        X = standard_normal_batch(RngStream(2, 2), 400).reshape(200, 2) + 10.0
        forward(net, X, mode="train")
        assert not np.array_equal(net.running["mean1"], before)

    def test_infer_leaves_running_stats_untouched(self):
        net = fresh_net(tiny_spec())
        snapshot = {k: v.copy() for k, v in net.running.items()}
        net.predict(np.ones((5, 2)))
        for key, value in snapshot.items():
            np.testing.assert_array_equal(net.running[key], value)

    def test_shape_validation(self):
        net = fresh_net(tiny_spec())
        with pytest.raises(ValueError):
            net.predict(np.ones((5, 3)))
        with pytest.raises(ValueError):
            forward(net, np.ones((1, 2)), mode="train")
        with pytest.raises(ValueError):
            forward(net, np.ones((5, 2)), mode="test")


class TestGradients:
    @pytest.mark.parametrize("activation", ["tanh", "lse"])
    def test_finite_difference_check(self, activation):
        # Small enough net to perturb every parameter individually.
        spec = tiny_spec(activation)
        net = fresh_net(spec, seed=4)
        rng = np.random.default_rng(4)
        X = rng.normal(size=(16, 2))
        y = rng.normal(size=16)
        _, grads = loss_and_gradients(net, X, y)
        eps = 1e-6
        for key, g in grads.items():
            flat_param = net.params[key].ravel()
            flat_grad = g.ravel()
            for idx in range(flat_param.size):
                orig = flat_param[idx]
                flat_param[idx] = orig + eps
                lp, _ = loss_and_gradients(net, X, y)
                flat_param[idx] = orig - eps
                lm, _ = loss_and_gradients(net, X, y)
                flat_param[idx] = orig
                fd = (lp - lm) / (2.0 * eps)
                assert fd == pytest.approx(flat_grad[idx], rel=1e-4, abs=1e-8), key

    def test_misaligned_targets_rejected(self):
        net = fresh_net(tiny_spec())
        with pytest.raises(ValueError):
            loss_and_gradients(net, np.ones((8, 2)), np.ones(7))


class TestTraining:
    def _schedule(self, steps=150):
        return TrainSchedule(total_steps=steps, minibatch_size=64,
                             lr_stages=((0, 0.05), (50, 0.01), (100, 0.001)))

    def _streams(self, seed=0):
        return (RngStream(seed, 10), RngStream(seed, 11), RngStream(seed, 12))

    def test_zero_steps_returns_initialization(self):
        spec = tiny_spec()
        sched = TrainSchedule(total_steps=0, minibatch_size=64, lr_stages=((0, 0.1),))
        net = train(spec, sched, toy_model(), DistortionSpec.none(), self._streams())
        reference = xavier_init(spec, RngStream(0, 10))
        for key, value in reference.items():
            np.testing.assert_array_equal(net.params[key], value)

    def test_training_is_deterministic(self):
        spec = tiny_spec()
        a = train(spec, self._schedule(), toy_model(), DistortionSpec.none(),
                  self._streams(7))
        b = train(spec, self._schedule(), toy_model(), DistortionSpec.none(),
                  self._streams(7))
        for key in a.params:
            np.testing.assert_array_equal(a.params[key], b.params[key])
        for key in a.running:
            np.testing.assert_array_equal(a.running[key], b.running[key])

    def test_training_reduces_loss(self):
        spec = tiny_spec()
        model = toy_model()
        trained = train(spec, self._schedule(300), model, DistortionSpec.none(),
                        self._streams(1))
        untrained = fresh_net(spec, seed=99)
        from cecert.model import sample_pairs
        X, y = sample_pairs(model, DistortionSpec.none(), 5000,
                            (RngStream(5, 0), RngStream(5, 1)))
        mse_trained = np.mean((trained.predict(X) - y) ** 2)
        mse_untrained = np.mean((untrained.predict(X) - y) ** 2)
        assert mse_trained < 0.5 * mse_untrained
        assert trained.steps_taken == 300
        assert trained.fit_seconds > 0.0


class TestCheckpoint:
    def test_roundtrip_is_bit_exact(self, tmp_path):
        spec = tiny_spec("lse")
        net = train(spec, TrainSchedule(total_steps=20, minibatch_size=32,
                                        lr_stages=((0, 0.01),)),
                    toy_model(), DistortionSpec.none(),
                    (RngStream(0, 20), RngStream(0, 21), RngStream(0, 22)))
        path = tmp_path / "net.npz"
        save_checkpoint(net, path)
        loaded = load_checkpoint(path)
        assert loaded.spec == net.spec
        assert loaded.steps_taken == net.steps_taken
        for key in net.params:
            np.testing.assert_array_equal(loaded.params[key], net.params[key])
        for key in net.running:
            np.testing.assert_array_equal(loaded.running[key], net.running[key])
        X = standard_normal_batch(RngStream(6, 0), 100).reshape(50, 2)
        np.testing.assert_array_equal(loaded.predict(X), net.predict(X))
