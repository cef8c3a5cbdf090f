import numpy as np
import pytest

import saedetect as sd
from _oracles import fd_gradients, max_relative_gradient_error, scalar_dense_forward


def layer(w, b, act=sd.IDENTITY):
    return sd.DenseLayer(np.asarray(w, dtype=float), np.asarray(b, dtype=float), act)


# -- forward pass ------------------------------------------------------------

def test_forward_zero_weights_tanh_gives_tanh_bias():
    l = layer(np.zeros((3, 4)), [0.5, -0.2, 1.0], sd.TANH)
    out = sd.dense_forward(l, np.ones(4))
    assert out == pytest.approx(np.tanh([0.5, -0.2, 1.0]), abs=1e-15)


def test_forward_identity_passthrough():
    l = layer([[1.0]], [0.0], sd.IDENTITY)
    assert sd.dense_forward(l, np.array([0.5])) == pytest.approx([0.5])


def test_forward_matches_scalar_loop_oracle():
    rng = np.random.default_rng(4)
    for act in (sd.TANH, sd.IDENTITY):
        l = layer(rng.normal(0, 0.5, (2, 3)), rng.normal(0, 0.5, 2), act)
        x = rng.normal(size=3)
        expected = scalar_dense_forward(l.weights, l.biases, x, act)
        assert np.max(np.abs(sd.dense_forward(l, x) - expected)) < 1e-12


def test_forward_batch_matches_vector():
    rng = np.random.default_rng(6)
    l = layer(rng.normal(0, 0.3, (5, 7)), rng.normal(0, 0.3, 5), sd.TANH)
    X = rng.normal(size=(4, 7))
    batch = sd.dense_forward(l, X)
    for i in range(4):
        assert batch[i] == pytest.approx(sd.dense_forward(l, X[i]), abs=1e-12)


def test_forward_dimension_mismatch_reports_sizes():
    l = layer(np.zeros((2, 3)), np.zeros(2))
    with pytest.raises(ValueError, match="3.*4|4.*3"):
        sd.dense_forward(l, np.zeros(4))


def test_forward_tanh_strictly_inside_unit_interval():
    rng = np.random.default_rng(8)
    l = sd.init_layer(20, 10, sd.TANH, rng)
    out = sd.dense_forward(l, rng.uniform(-50, 50, 20))
    assert np.all(out > -1.0) and np.all(out < 1.0)


def test_init_layer_bounds_and_determinism():
    r = np.sqrt(6.0 / (30 + 20))
    a = sd.init_layer(30, 20, sd.TANH, np.random.default_rng(5))
    b = sd.init_layer(30, 20, sd.TANH, np.random.default_rng(5))
    assert np.array_equal(a.weights, b.weights)
    assert np.all(np.abs(a.weights) <= r)
    assert np.array_equal(a.biases, np.zeros(20))


# -- losses --------------------------------------------------------------

def test_mse_identical_is_zero():
    x = np.arange(5.0)
    assert sd.mse(x, x.copy()) == 0.0


def test_mse_arithmetic():
    assert sd.mse([0.0, 0.0], [2.0, 2.0]) == 4.0
    assert sd.mse([1.0, 0.0, -1.0], [0.0, 0.0, 0.0]) == pytest.approx(2.0 / 3.0)


def test_mse_length_mismatch():
    with pytest.raises(ValueError):
        sd.mse([1.0], [1.0, 2.0])


def test_mse_nonnegative_zero_iff_equal():
    rng = np.random.default_rng(12)
    for _ in range(30):
        a, b = rng.normal(size=(2, 16))
        v = sd.mse(a, b)
        assert v >= 0.0
        assert (v == 0.0) == bool(np.array_equal(a, b))


def test_squared_distance_examples():
    assert sd.squared_distance([1.0, 3.0], [0.0, 0.0]) == 5.0
    a = np.zeros(4)
    assert sd.squared_distance(a, a) == 0.0


def test_squared_distance_equals_mse_exactly():
    rng = np.random.default_rng(14)
    a, b = rng.normal(size=(2, 500))
    assert sd.squared_distance(a, b) == sd.mse(a, b)


# -- gradients ---------------------------------------------------------------

def test_backward_zero_error_gives_zero_gradients():
    l = layer([[1.0, 0.0], [0.0, 1.0]], [0.0, 0.0], sd.IDENTITY)
    x = np.array([0.3, -0.7])
    grads = sd.backward([l], x, x)
    assert np.array_equal(grads[0][0], np.zeros((2, 2)))
    assert np.array_equal(grads[0][1], np.zeros(2))


def test_backward_1_1_1_identity_closed_form():
    # out = w2*(w1*x + b1) + b2, loss = (out - y)^2; differentiate by hand
    w1, b1, w2, b2, x, y = 1.3, 0.2, -0.7, 0.4, 0.5, 1.1
    net = [layer([[w1]], [b1], sd.IDENTITY), layer([[w2]], [b2], sd.IDENTITY)]
    a1 = w1 * x + b1
    out = w2 * a1 + b2
    g = 2.0 * (out - y)
    grads = sd.backward(net, np.array([x]), np.array([y]))
    assert grads[0][0][0, 0] == pytest.approx(g * w2 * x, rel=1e-12)
    assert grads[0][1][0] == pytest.approx(g * w2, rel=1e-12)
    assert grads[1][0][0, 0] == pytest.approx(g * a1, rel=1e-12)
    assert grads[1][1][0] == pytest.approx(g, rel=1e-12)


def test_backward_matches_finite_differences_small_net():
    rng = np.random.default_rng(17)
    net = [
        sd.init_layer(6, 4, sd.TANH, rng),
        sd.init_layer(4, 6, sd.TANH, rng),
    ]
    x = rng.uniform(0, 1, 6)
    y = rng.uniform(0, 1, 6)
    analytic = sd.backward(net, x, y)
    numeric = fd_gradients(net, x, y)
    assert max_relative_gradient_error(analytic, numeric) < 1e-5


def test_backward_batch_is_mean_of_singles():
    rng = np.random.default_rng(19)
    net = [sd.init_layer(5, 3, sd.TANH, rng), sd.init_layer(3, 5, sd.IDENTITY, rng)]
    X = rng.uniform(0, 1, (4, 5))
    Y = rng.uniform(0, 1, (4, 5))
    batch = sd.backward(net, X, Y)
    singles = [sd.backward(net, X[i], Y[i]) for i in range(4)]
    for k in range(len(net)):
        mean_w = np.mean([s[k][0] for s in singles], axis=0)
        mean_b = np.mean([s[k][1] for s in singles], axis=0)
        assert batch[k][0] == pytest.approx(mean_w, abs=1e-14)
        assert batch[k][1] == pytest.approx(mean_b, abs=1e-14)


def test_backward_dimension_mismatch():
    net = [layer(np.zeros((2, 3)), np.zeros(2))]
    with pytest.raises(ValueError, match="mismatch"):
        sd.backward(net, np.zeros(3), np.zeros(5))


# -- optimizer -----------------------------------------------------------

def _scalar_setup(value=1.0):
    l = layer([[value]], [0.0], sd.IDENTITY)
    state = sd.TrainState.zeros_like([l])
    return l, state


def test_sgd_zero_grad_keeps_parameters():
    l, state = _scalar_setup()
    sd.sgd_step([l], [(np.zeros((1, 1)), np.zeros(1))], state, sd.TrainConfig())
    assert l.weights[0, 0] == 1.0


def test_sgd_plain_step():
    l, state = _scalar_setup(1.0)
    cfg = sd.TrainConfig(learning_rate=0.1, momentum=0.0)
    sd.sgd_step([l], [(np.array([[2.0]]), np.zeros(1))], state, cfg)
    assert l.weights[0, 0] == pytest.approx(0.8, abs=1e-15)


def test_sgd_momentum_two_steps():
    # constant gradient g: second delta is -lr*g*(1 + momentum)
    l, state = _scalar_setup(0.0)
    cfg = sd.TrainConfig(learning_rate=0.1, momentum=0.9)
    g = [(np.array([[2.0]]), np.zeros(1))]
    sd.sgd_step([l], g, state, cfg)
    first = l.weights[0, 0]
    sd.sgd_step([l], g, state, cfg)
    second = l.weights[0, 0] - first
    assert first == pytest.approx(-0.1 * 2.0, abs=1e-15)
    assert second == pytest.approx(-0.1 * 2.0 * 1.9, abs=1e-15)


def test_sgd_momentum_zero_reduces_to_plain_descent():
    rng = np.random.default_rng(23)
    l = sd.init_layer(4, 3, sd.TANH, rng)
    before = l.weights.copy()
    grads = [(rng.normal(size=(3, 4)), rng.normal(size=3))]
    cfg = sd.TrainConfig(learning_rate=0.05, momentum=0.0)
    sd.sgd_step([l], grads, sd.TrainState.zeros_like([l]), cfg)
    assert np.array_equal(l.weights, before - 0.05 * grads[0][0])


# -- training loop -------------------------------------------------------

def test_train_zero_epochs_keeps_layers():
    rng = np.random.default_rng(29)
    net = [sd.init_layer(4, 2, sd.TANH, rng)]
    before = net[0].weights.copy()
    losses = sd.train_epochs(net, rng.uniform(0, 1, (8, 4)), rng.uniform(0, 1, (8, 2)),
                             sd.TrainConfig(epochs=0))
    assert losses == []
    assert np.array_equal(net[0].weights, before)


def test_train_single_point_converges():
    rng = np.random.default_rng(31)
    net = [sd.init_layer(6, 3, sd.TANH, rng), sd.init_layer(3, 6, sd.IDENTITY, rng)]
    x = rng.uniform(0.2, 0.8, (1, 6))
    losses = sd.train_epochs(net, x, x, sd.TrainConfig(
        learning_rate=0.5, epochs=400, batch_size=1, early_stop_patience=0))
    assert losses[-1] < losses[0]
    assert losses[-1] < 1e-4


def test_train_deterministic_histories():
    rng = np.random.default_rng(37)
    X = rng.uniform(0, 1, (20, 5))
    def run():
        r = np.random.default_rng(0)
        net = [sd.init_layer(5, 3, sd.TANH, r), sd.init_layer(3, 5, sd.TANH, r)]
        return sd.train_epochs(net, X, X, sd.TrainConfig(epochs=15, rng_seed=123)), net
    la, na = run()
    lb, nb = run()
    assert la == lb
    assert np.array_equal(na[0].weights, nb[0].weights)


def test_train_empty_set_rejected():
    net = [layer(np.zeros((2, 2)), np.zeros(2))]
    with pytest.raises(ValueError, match="empty"):
        sd.train_epochs(net, np.empty((0, 2)), np.empty((0, 2)), sd.TrainConfig())


def test_train_config_validation():
    with pytest.raises(ValueError):
        sd.TrainConfig(learning_rate=0.0)
    with pytest.raises(ValueError):
        sd.TrainConfig(momentum=1.0)
    with pytest.raises(ValueError):
        sd.TrainConfig(momentum=-0.1)
