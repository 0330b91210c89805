import numpy as np
import pytest

from uavrrm import nn
from uavrrm.errors import DatasetFormatError, TrainingError


def fd_grad(loss_fn, param, h=1e-6):
    """Central finite differences over every entry of `param`."""
    g = np.zeros_like(param)
    it = np.nditer(param, flags=["multi_index"])
    while not it.finished:
        idx = it.multi_index
        orig = param[idx]
        param[idx] = orig + h
        hi = loss_fn()
        param[idx] = orig - h
        lo = loss_fn()
        param[idx] = orig
        g[idx] = (hi - lo) / (2 * h)
        it.iternext()
    return g


def test_orthogonal_init_is_orthogonal(rng):
    w = nn.orthogonal_init(rng, 8, 8, gain=1.0)
    assert np.allclose(w @ w.T, np.eye(8), atol=1e-10)
    w = nn.orthogonal_init(rng, 4, 10, gain=2.0)
    assert np.allclose(w @ w.T, 4.0 * np.eye(4), atol=1e-10)
    w = nn.orthogonal_init(rng, 10, 4)
    assert np.allclose(w.T @ w, np.eye(4), atol=1e-10)
    assert w.flags["C_CONTIGUOUS"]


def test_dense_forward_matches_matmul(rng):
    layer = nn.Dense(5, 3, rng)
    x = rng.standard_normal((4, 5))
    assert np.allclose(layer.forward(x), x @ layer.weight.T + layer.bias)


def test_dense_width_mismatch(rng):
    layer = nn.Dense(5, 3, rng)
    with pytest.raises(TrainingError):
        layer.forward(rng.standard_normal((2, 4)))


def test_dense_backward_finite_difference(rng):
    layer = nn.Dense(4, 3, rng)
    x = rng.standard_normal((6, 4))
    target = rng.standard_normal((6, 3))

    def loss():
        return 0.5 * float(((layer.forward(x) - target) ** 2).sum())

    layer.grad_weight[...] = 0.0
    layer.grad_bias[...] = 0.0
    out = layer.forward(x)
    dx = layer.backward(out - target)
    assert np.allclose(layer.grad_weight, fd_grad(loss, layer.weight), rtol=1e-6,
                       atol=1e-8)
    assert np.allclose(layer.grad_bias, fd_grad(loss, layer.bias), rtol=1e-6,
                       atol=1e-8)
    # input gradient against FD on x
    def loss_x():
        return 0.5 * float(((layer.forward(x) - target) ** 2).sum())
    assert np.allclose(dx, fd_grad(loss_x, x), rtol=1e-6, atol=1e-8)


def test_chain_backward_finite_difference(rng):
    net = nn.mlp([3, 8, 4, 2], rng)
    x = rng.standard_normal((5, 3))
    target = rng.standard_normal((5, 2))

    def loss():
        return 0.5 * float(((net.forward(x) - target) ** 2).sum())

    for _, g in net.parameters():
        g[...] = 0.0
    out = net.forward(x)
    net.backward(out - target)
    for p, g in net.parameters():
        assert np.allclose(g, fd_grad(loss, p), rtol=1e-5, atol=1e-7)


def test_relu_gradient_mask(rng):
    relu = nn.ReLU()
    x = np.array([[-1.0, 0.0, 2.0]])
    out = relu.forward(x)
    assert np.array_equal(out, [[0.0, 0.0, 2.0]])
    assert np.array_equal(relu.backward(np.ones_like(x)), [[0.0, 0.0, 1.0]])


def test_softmax_stability_and_sum():
    logits = np.array([[1000.0, 1000.0, 999.0], [-1000.0, 0.0, 1.0]])
    p = nn.softmax(logits)
    assert np.all(np.isfinite(p))
    assert np.allclose(p.sum(axis=1), 1.0)
    assert np.allclose(np.exp(nn.log_softmax(logits)), p)


def test_entropy_uniform_and_deterministic():
    assert nn.entropy(np.full(4, 0.25)) == pytest.approx(np.log(4))
    assert nn.entropy(np.array([1.0, 0.0, 0.0])) == pytest.approx(0.0)


def test_sample_categorical_frequencies(rng):
    probs = np.array([0.1, 0.2, 0.7])
    counts = np.zeros(3)
    for _ in range(20000):
        counts[nn.sample_categorical(probs, rng)] += 1
    assert np.allclose(counts / 20000, probs, atol=0.02)


def test_sample_categorical_batch(rng):
    probs = np.tile([0.0, 1.0, 0.0], (5, 1))
    assert np.array_equal(nn.sample_categorical(probs, rng), np.ones(5, dtype=int))


def test_adam_reduces_quadratic(rng):
    p = np.array([5.0, -3.0])
    g = np.zeros_like(p)
    opt = nn.Adam([(p, g)], lr=0.1, clip_norm=None)
    for _ in range(500):
        g[...] = 2.0 * p
        opt.step()
    assert np.allclose(p, 0.0, atol=1e-3)


def test_adam_global_norm_clip(rng):
    p = np.zeros(3)
    g = np.array([3.0, 4.0, 0.0])
    opt = nn.Adam([(p, g)], lr=1.0, clip_norm=0.5)
    assert opt.global_grad_norm() == pytest.approx(5.0)
    opt.step()
    # first Adam step magnitude is lr regardless of scale, so check the
    # internal first moment reflects the clipped gradient instead
    assert np.allclose(opt.m[0], 0.1 * g * (0.5 / 5.0))


def test_adam_nonfinite_gradient_raises():
    p = np.zeros(2)
    g = np.array([np.nan, 1.0])
    opt = nn.Adam([(p, g)], lr=0.1)
    with pytest.raises(TrainingError):
        opt.step()


def test_checkpoint_roundtrip(tmp_path, rng):
    flat = rng.standard_normal(100)
    norm = rng.standard_normal(6)
    path = tmp_path / "ck.bin"
    nn.save_checkpoint(path, 1, [4, 2, 4, 96, 8], norm, flat)
    kind, dims, norm2, flat2 = nn.load_checkpoint(path)
    assert kind == 1
    assert dims == (4, 2, 4, 96, 8)
    assert np.array_equal(norm, norm2)
    assert np.array_equal(flat, flat2)


def test_checkpoint_truncation(tmp_path, rng):
    path = tmp_path / "ck.bin"
    nn.save_checkpoint(path, 2, [1], np.zeros(6), rng.standard_normal(10))
    data = path.read_bytes()
    path.write_bytes(data[:-4])
    with pytest.raises(DatasetFormatError):
        nn.load_checkpoint(path)


def test_flatten_load_roundtrip(rng):
    net = nn.mlp([3, 5, 2], rng)
    flat = nn.flatten_params(net.parameters())
    net2 = nn.mlp([3, 5, 2], np.random.default_rng(99))
    nn.load_into_params(net2.parameters(), flat)
    x = rng.standard_normal((2, 3))
    assert np.allclose(net.forward(x), net2.forward(x))
