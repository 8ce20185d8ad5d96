import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from prae.nn import (
    ACTIVATIONS,
    AdamState,
    ConfigurationError,
    DenseNet,
    Layer,
    LayerSpec,
    RowAdamState,
    ShapeError,
    adam_step,
    backward,
    encode,
    forward,
    init_dense_net,
    mirrored_specs,
    row_adam_step,
)

from _oracles import central_difference, rel_err


def _loss_and_grads(net, X, target):
    recon, cache = forward(net, X)
    diff = recon - target
    return float(np.sum(diff**2)), backward(net, cache, 2 * diff)


def _random_net(rng, widths, activation):
    specs = [LayerSpec(widths[i], widths[i + 1], activation) for i in range(len(widths) - 1)]
    net = init_dense_net(specs, latent_dim=min(widths[1:-1], default=widths[-1]), rng_seed=int(rng.integers(1 << 30)))
    for layer in net.layers:
        layer.b[:] = rng.normal(scale=0.3, size=layer.b.shape)
    return net


def test_init_shapes_and_zero_biases():
    net = init_dense_net([LayerSpec(3, 2), LayerSpec(2, 3)], latent_dim=2, rng_seed=7)
    assert [l.W.shape for l in net.layers] == [(2, 3), (3, 2)]
    assert [l.b.shape for l in net.layers] == [(2,), (3,)]
    assert all(np.all(l.b == 0) for l in net.layers)
    assert net.latent_dim == 2 and net.n_encoder == 1


def test_init_is_deterministic():
    specs = [LayerSpec(3, 2), LayerSpec(2, 3)]
    a = init_dense_net(specs, 2, 7)
    b = init_dense_net(specs, 2, 7)
    assert all(np.array_equal(p, q) for p, q in zip(a.parameters(), b.parameters()))


def test_init_rejects_broken_chain():
    with pytest.raises(ConfigurationError, match="layer 0 .* layer 1"):
        init_dense_net([LayerSpec(3, 2), LayerSpec(5, 3)], 2, 0)


def test_init_requires_square_map_and_latent():
    with pytest.raises(ConfigurationError):
        init_dense_net([LayerSpec(3, 2), LayerSpec(2, 4)], 2, 0)
    with pytest.raises(ConfigurationError):
        init_dense_net([LayerSpec(3, 2), LayerSpec(2, 3)], 5, 0)


def test_layer_spec_validation():
    with pytest.raises(ConfigurationError):
        LayerSpec(0, 2)
    with pytest.raises(ConfigurationError):
        LayerSpec(2, 2, "sigmoid")


def test_init_variance_scales_with_fan_in():
    net = init_dense_net([LayerSpec(400, 300), LayerSpec(300, 400)], 300, 0)
    assert net.layers[0].W.var() == pytest.approx(1 / 400, rel=0.02)


def test_mirrored_specs_shape():
    specs = mirrored_specs(6, (5, 4), 2, "tanh")
    assert [(s.input_width, s.output_width) for s in specs] == [(6, 5), (5, 4), (4, 2), (2, 4), (4, 5), (5, 6)]
    assert [s.activation for s in specs] == ["tanh", "tanh", "linear", "tanh", "tanh", "linear"]


def test_forward_affine_arithmetic():
    net = DenseNet([Layer(np.array([[2.0]]), np.array([1.0]), "linear")], 1)
    out, _ = forward(net, [[3.0]])
    assert out.tolist() == [[7.0]]


def test_forward_relu():
    net = DenseNet([Layer(np.array([[1.0]]), np.array([0.0]), "relu")], 1)
    assert forward(net, [[-2.0]])[0].tolist() == [[0.0]]


def test_leaky_relu_slope():
    net = DenseNet([Layer(np.array([[1.0]]), np.array([0.0]), "leaky_relu", 0.1)], 1)
    assert forward(net, [[-2.0]])[0][0, 0] == pytest.approx(-0.2)


@given(st.integers(1, 6), st.integers(1, 5), st.integers(0, 2**31 - 1))
def test_identity_network(dim, batch, seed):
    eye = np.eye(dim)
    net = DenseNet([Layer(eye.copy(), np.zeros(dim), "linear"), Layer(eye.copy(), np.zeros(dim), "linear")], 1)
    X = np.random.default_rng(seed).normal(size=(batch, dim))
    np.testing.assert_array_equal(forward(net, X)[0], X)


def test_forward_cache_depth():
    net = init_dense_net(mirrored_specs(4, (3,), 2), 2, 0)
    X = np.ones((5, 4))
    _, cache = forward(net, X)
    assert len(cache.pre) == len(cache.post) == len(net.layers)
    assert all(a.shape[0] == 5 for a in cache.pre)


def test_forward_shape_error():
    net = init_dense_net(mirrored_specs(4, (3,), 2), 2, 0)
    with pytest.raises(ShapeError):
        forward(net, np.ones((2, 5)))


def test_encode_matches_forward_prefix():
    net = init_dense_net(mirrored_specs(4, (3,), 2, "tanh"), 2, 1)
    X = np.random.default_rng(0).normal(size=(6, 4))
    _, cache = forward(net, X)
    np.testing.assert_allclose(encode(net, X), cache.post[net.n_encoder - 1])


def test_zero_output_grad_gives_zero_grads():
    net = init_dense_net(mirrored_specs(4, (3,), 2, "tanh"), 2, 0)
    recon, cache = forward(net, np.ones((3, 4)))
    assert all(np.all(g == 0) for g in backward(net, cache, np.zeros_like(recon)))


def test_single_linear_layer_sum_of_outputs():
    rng = np.random.default_rng(3)
    W, b = rng.normal(size=(3, 4)), rng.normal(size=3)
    net = DenseNet([Layer(W, b, "linear")], 1)
    X = rng.normal(size=(5, 4))
    recon, cache = forward(net, X)
    gW, gb = backward(net, cache, np.ones_like(recon))
    # d/dW_jk sum_i (X W^T)_ij = sum_i X_ik for every j
    np.testing.assert_allclose(gW, np.tile(X.sum(axis=0), (3, 1)), rtol=1e-12)
    np.testing.assert_allclose(gb, np.full(3, 5.0))
    for idx in [(0, 0), (2, 3), (1, 2)]:
        d = np.zeros_like(W)
        d[idx] = 1.0
        fd = central_difference(lambda: float(forward(net, X)[0].sum()), W, d)
        assert rel_err(gW[idx], fd) < 1e-6


def test_deep_tanh_net_matches_finite_differences():
    rng = np.random.default_rng(11)
    net = _random_net(rng, [5, 4, 3, 5], "tanh")
    X, T = rng.normal(size=(7, 5)), rng.normal(size=(7, 5))
    _, grads = _loss_and_grads(net, X, T)
    for p, g in zip(net.parameters(), grads):
        for _ in range(5):
            d = np.zeros_like(p)
            d[tuple(rng.integers(s) for s in p.shape)] = 1.0
            fd = central_difference(lambda: _loss_and_grads(net, X, T)[0], p, d)
            assert rel_err(float(np.sum(g * d)), fd) < 1e-5


@pytest.mark.parametrize("activation", ACTIVATIONS)
def test_gradient_probes_per_activation(activation):
    """100 random directional probes on random nets of up to 4 layers."""
    rng = np.random.default_rng(ACTIVATIONS.index(activation))
    worst = 0.0
    for probe in range(100):
        depth = 1 + probe % 4
        widths = [int(rng.integers(2, 6)) for _ in range(depth)]
        widths.append(widths[0])
        net = _random_net(rng, widths, activation)
        X, T = rng.normal(size=(6, widths[0])), rng.normal(size=(6, widths[0]))
        # finite differences are meaningless across a ReLU kink; redraw such inputs
        while activation in ("relu", "leaky_relu") and min(np.abs(a).min() for a in forward(net, X)[1].pre) < 1e-3:
            X = rng.normal(size=X.shape)
        _, grads = _loss_and_grads(net, X, T)
        params = net.parameters()
        k = int(rng.integers(len(params)))
        d = rng.normal(size=params[k].shape)
        fd = central_difference(lambda: _loss_and_grads(net, X, T)[0], params[k], d)
        worst = max(worst, rel_err(float(np.sum(grads[k] * d)), fd))
    assert worst < 1e-4


def test_backward_rejects_mismatched_cache():
    net = init_dense_net(mirrored_specs(4, (3,), 2), 2, 0)
    recon, cache = forward(net, np.ones((3, 4)))
    with pytest.raises(ShapeError):
        backward(net, cache, np.ones((3, 5)))
    other = init_dense_net(mirrored_specs(4, (3, 3), 2), 2, 0)
    with pytest.raises(ShapeError):
        backward(other, cache, recon)


def test_backward_preserves_parameter_shapes():
    net = init_dense_net(mirrored_specs(6, (5, 4), 2), 2, 0)
    recon, cache = forward(net, np.ones((3, 6)))
    grads = backward(net, cache, recon)
    assert [g.shape for g in grads] == [p.shape for p in net.parameters()]


def test_adam_first_step_is_lr_times_sign():
    p = [np.array([1.0, -2.0])]
    state = AdamState.like(p, lr=0.1)
    adam_step(state, p, [np.array([3.0, -0.5])])
    # after bias correction m_hat / sqrt(v_hat) = g / |g|
    np.testing.assert_allclose(p[0], [1.0 - 0.1, -2.0 + 0.1], atol=1e-8)
    assert state.t == 1


def test_adam_two_steps_hand_unrolled():
    lr, b1, b2, eps, g = 0.01, 0.9, 0.999, 1e-8, 0.7
    p = [np.array([0.5])]
    state = AdamState.like(p, lr=lr)
    adam_step(state, p, [np.array([g])])
    adam_step(state, p, [np.array([g])])
    x = 0.5
    m = v = 0.0
    for t in (1, 2):
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        x -= lr * (m / (1 - b1**t)) / (np.sqrt(v / (1 - b2**t)) + eps)
    assert p[0][0] == x
    assert state.t == 2


def test_adam_shape_mismatch():
    p = [np.zeros(2)]
    with pytest.raises(ShapeError):
        adam_step(AdamState.like(p), p, [np.zeros(3)])


def test_row_adam_matches_dense_adam_on_full_rows():
    rng = np.random.default_rng(0)
    a, b = rng.normal(size=5), None
    b = a.copy()
    dense = AdamState.like([a], lr=0.05)
    rows = RowAdamState.like(b, lr=0.05)
    for _ in range(3):
        g = rng.normal(size=5)
        adam_step(dense, [a], [g])
        row_adam_step(rows, b, np.arange(5), g)
    np.testing.assert_allclose(a, b, rtol=0, atol=1e-15)


def test_row_adam_leaves_other_rows_alone():
    mu = np.zeros(4)
    state = RowAdamState.like(mu, lr=0.1)
    row_adam_step(state, mu, np.array([1, 3]), np.array([1.0, -1.0]))
    np.testing.assert_allclose(mu, [0.0, -0.1, 0.0, 0.1], atol=1e-8)
    assert state.t.tolist() == [0, 1, 0, 1]


def test_forward_backward_deterministic():
    net = init_dense_net(mirrored_specs(5, (4,), 2, "tanh"), 2, 3)
    X = np.random.default_rng(1).normal(size=(4, 5))
    r1, g1 = _loss_and_grads(net, X, X)
    r2, g2 = _loss_and_grads(net, X, X)
    assert r1 == r2 and all(np.array_equal(a, b) for a, b in zip(g1, g2))
