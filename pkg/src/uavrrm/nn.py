"""Minimal float64 neural substrate: dense layers, ReLU, categorical heads,
reverse-mode gradients, Adam with global-norm clipping, checkpoint IO.

Everything runs in 64-bit floats; layers cache their forward inputs so a
single backward() pass per forward() returns exact gradients. A network is
single-writer during training; inference on a frozen copy is read-safe.
"""

import struct

import numpy as np

from .errors import DatasetFormatError, TrainingError

CHECKPOINT_MAGIC = b"AERRN1"
CHECKPOINT_VERSION = 1


def orthogonal_init(rng, out_dim, in_dim, gain=1.0):
    """Orthogonal weight matrix scaled by `gain`."""
    a = rng.standard_normal((max(out_dim, in_dim), min(out_dim, in_dim)))
    q, r = np.linalg.qr(a)
    q = q * np.sign(np.diag(r))
    if out_dim < in_dim:
        q = q.T
    return np.ascontiguousarray(gain * q[:out_dim, :in_dim])


class Dense:
    """Affine layer y = x W^T + b with gradient buffers."""

    def __init__(self, in_dim, out_dim, rng, gain=np.sqrt(2.0)):
        self.weight = orthogonal_init(rng, out_dim, in_dim, gain)
        self.bias = np.zeros(out_dim)
        self.grad_weight = np.zeros_like(self.weight)
        self.grad_bias = np.zeros_like(self.bias)
        self._input = None

    @property
    def in_dim(self):
        return self.weight.shape[1]

    @property
    def out_dim(self):
        return self.weight.shape[0]

    def forward(self, x):
        if x.shape[-1] != self.in_dim:
            raise TrainingError(
                f"dense layer expected input width {self.in_dim}, got {x.shape[-1]}")
        self._input = x
        return x @ self.weight.T + self.bias

    def backward(self, grad_out):
        if self._input is None:
            raise TrainingError("backward called before forward")
        self.grad_weight += grad_out.T @ self._input
        self.grad_bias += grad_out.sum(axis=0)
        return grad_out @ self.weight

    def parameters(self):
        return [(self.weight, self.grad_weight), (self.bias, self.grad_bias)]


class ReLU:
    def __init__(self):
        self._mask = None

    def forward(self, x):
        self._mask = x > 0.0
        return np.where(self._mask, x, 0.0)

    def backward(self, grad_out):
        return np.where(self._mask, grad_out, 0.0)

    def parameters(self):
        return []


class Chain:
    """A straight stack of layers."""

    def __init__(self, layers):
        self.layers = layers

    def forward(self, x):
        for layer in self.layers:
            x = layer.forward(x)
        return x

    def backward(self, grad_out):
        for layer in reversed(self.layers):
            grad_out = layer.backward(grad_out)
        return grad_out

    def parameters(self):
        out = []
        for layer in self.layers:
            out.extend(layer.parameters())
        return out


def mlp(dims, rng, final_gain=1.0, final_activation=False):
    """Dense/ReLU stack through `dims`; hidden layers get sqrt(2) init gain."""
    layers = []
    for i in range(len(dims) - 1):
        last = i == len(dims) - 2
        layers.append(Dense(dims[i], dims[i + 1], rng,
                            gain=final_gain if last else np.sqrt(2.0)))
        if not last or final_activation:
            layers.append(ReLU())
    return Chain(layers)


# ---------------------------------------------------------------------------
# categorical distribution helpers (numerically stable via max subtraction)

def softmax(logits):
    z = logits - np.max(logits, axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def log_softmax(logits):
    z = logits - np.max(logits, axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


def sample_categorical(probs, rng):
    """Inverse-CDF sample; supports a batch of distributions as rows."""
    p = np.atleast_2d(probs)
    u = rng.random(p.shape[0])
    idx = (p.cumsum(axis=1) < u[:, None]).sum(axis=1)
    idx = np.minimum(idx, p.shape[1] - 1)
    return int(idx[0]) if np.ndim(probs) == 1 else idx


def log_prob(probs, index):
    return float(np.log(probs[index]))


def entropy(probs):
    p = np.asarray(probs, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0.0, p * np.log(np.where(p > 0.0, p, 1.0)), 0.0)
    return -terms.sum(axis=-1)


# ---------------------------------------------------------------------------
# optimizer

class Adam:
    """Bias-corrected adaptive-moment optimizer over (param, grad) pairs.

    Applies an optional global-norm clip across all gradients before the
    update. Gradients are accumulated externally into the paired buffers.
    """

    def __init__(self, param_grad_pairs, lr, beta1=0.9, beta2=0.999,
                 eps=1e-8, clip_norm=0.5):
        self.pairs = list(param_grad_pairs)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.clip_norm = clip_norm
        self.step_count = 0
        self.m = [np.zeros_like(p) for p, _ in self.pairs]
        self.v = [np.zeros_like(p) for p, _ in self.pairs]

    def zero_grads(self):
        for _, g in self.pairs:
            g[...] = 0.0

    def global_grad_norm(self):
        total = 0.0
        for _, g in self.pairs:
            total += float((g * g).sum())
        return np.sqrt(total)

    def step(self):
        norm = self.global_grad_norm()
        if not np.isfinite(norm):
            raise TrainingError("non-finite gradient norm")
        scale = 1.0
        if self.clip_norm is not None and norm > self.clip_norm and norm > 0.0:
            scale = self.clip_norm / norm
        self.step_count += 1
        c1 = 1.0 - self.beta1 ** self.step_count
        c2 = 1.0 - self.beta2 ** self.step_count
        for (p, g), m, v in zip(self.pairs, self.m, self.v):
            grad = g * scale
            m *= self.beta1
            m += (1.0 - self.beta1) * grad
            v *= self.beta2
            v += (1.0 - self.beta2) * grad * grad
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


# ---------------------------------------------------------------------------
# checkpoint format

def flatten_params(param_grad_pairs):
    return np.concatenate([p.ravel() for p, _ in param_grad_pairs]) \
        if param_grad_pairs else np.zeros(0)


def load_into_params(param_grad_pairs, flat):
    offset = 0
    for p, _ in param_grad_pairs:
        n = p.size
        if offset + n > flat.size:
            raise DatasetFormatError("checkpoint parameter payload too short")
        p[...] = flat[offset:offset + n].reshape(p.shape)
        offset += n
    if offset != flat.size:
        raise DatasetFormatError("checkpoint parameter payload too long")


def save_checkpoint(path, kind, dims, norm_stats, flat_params):
    """Write a versioned checkpoint: header dims + flat float64 parameters."""
    norm = np.asarray(norm_stats, dtype=float)
    if norm.shape != (6,):
        raise DatasetFormatError("norm_stats must hold 3 means and 3 stds")
    flat = np.asarray(flat_params, dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<3I", CHECKPOINT_VERSION, kind, len(dims)))
        fh.write(struct.pack(f"<{len(dims)}I", *dims))
        fh.write(norm.astype("<f8").tobytes())
        fh.write(struct.pack("<Q", flat.size))
        fh.write(flat.tobytes())


def load_checkpoint(path):
    with open(path, "rb") as fh:
        data = fh.read()
    base = len(CHECKPOINT_MAGIC)
    if len(data) < base + 12 or data[:base] != CHECKPOINT_MAGIC:
        raise DatasetFormatError("not an AERRN1 checkpoint")
    version, kind, ndims = struct.unpack_from("<3I", data, base)
    if version != CHECKPOINT_VERSION:
        raise DatasetFormatError(f"unsupported checkpoint version {version}")
    offset = base + 12
    dims = struct.unpack_from(f"<{ndims}I", data, offset)
    offset += 4 * ndims
    norm = np.frombuffer(data, dtype="<f8", count=6, offset=offset).copy()
    offset += 48
    (nparams,) = struct.unpack_from("<Q", data, offset)
    offset += 8
    if len(data) != offset + 8 * nparams:
        raise DatasetFormatError("checkpoint parameter payload truncated")
    flat = np.frombuffer(data, dtype="<f8", count=nparams, offset=offset).copy()
    return kind, dims, norm, flat
