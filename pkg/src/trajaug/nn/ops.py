"""Differentiable building blocks with explicit forward/backward passes.

Everything is float64 numpy.  Layers cache the intermediates of their
most recent forward pass; backward must therefore follow the matching
forward before any other forward on the same layer.  Gradients
accumulate into Parameter.grad (call zero_grad between steps).
"""

from __future__ import annotations

import math

import numpy as np


class Parameter:
    """A named weight tensor paired with its gradient accumulator."""

    __slots__ = ("name", "value", "grad")

    def __init__(self, value, name=""):
        self.value = np.asarray(value, dtype=np.float64)
        self.grad = np.zeros_like(self.value)
        self.name = name

    def zero_grad(self):
        self.grad[...] = 0.0

    def __repr__(self):
        return f"Parameter({self.name!r}, shape={self.value.shape})"


def glorot_uniform(rng: np.random.Generator, shape) -> np.ndarray:
    """Uniform init in +/- sqrt(6 / (fan_in + fan_out))."""
    fan_in, fan_out = shape[0], shape[-1]
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def softmax(x: np.ndarray, axis: int = -1) -> np.ndarray:
    """Max-subtraction stabilized softmax; tolerates -inf entries."""
    m = np.max(x, axis=axis, keepdims=True)
    e = np.exp(x - m)
    return e / e.sum(axis=axis, keepdims=True)


def softmax_backward(y: np.ndarray, dy: np.ndarray, axis: int = -1) -> np.ndarray:
    return y * (dy - (dy * y).sum(axis=axis, keepdims=True))


# -- scaled dot-product attention ------------------------------------------

def attention_forward(q, k, v, valid=None):
    """softmax(q k^T / sqrt(d_k)) v with optional key-validity mask.

    q: (..., S, d_k), k: (..., T, d_k), v: (..., T, d_v);
    valid: broadcastable to (..., T), True at attendable keys.
    Returns (out, cache); attention weights are cache[3].
    """
    d_k = q.shape[-1]
    if d_k == 0:
        raise ValueError("attention requires d_k >= 1")
    if k.shape[-1] != d_k:
        raise ValueError(f"query dim {d_k} != key dim {k.shape[-1]}")
    if k.shape[-2] != v.shape[-2]:
        raise ValueError(f"key count {k.shape[-2]} != value count {v.shape[-2]}")
    scale = 1.0 / math.sqrt(d_k)
    logits = (q @ np.swapaxes(k, -1, -2)) * scale
    if valid is not None:
        logits = np.where(np.asarray(valid)[..., None, :], logits, -np.inf)
    w = softmax(logits)
    out = w @ v
    return out, (q, k, v, w, scale)


def attention_backward(dout, cache):
    q, k, v, w, scale = cache
    dv = np.swapaxes(w, -1, -2) @ dout
    dw = dout @ np.swapaxes(v, -1, -2)
    dlogits = softmax_backward(w, dw)
    dq = (dlogits @ k) * scale
    dk = (np.swapaxes(dlogits, -1, -2) @ q) * scale
    return dq, dk, dv


def scaled_dot_attention(q, k, v, valid=None):
    """Forward-only convenience: returns (output, attention weights)."""
    out, cache = attention_forward(q, k, v, valid)
    return out, cache[3]


def positional_encoding(seq_len: int, dim: int) -> np.ndarray:
    """Sinusoidal position table: sin on even dims, cos on odd dims."""
    if seq_len < 1 or dim < 1:
        raise ValueError("positional encoding needs seq_len >= 1 and dim >= 1")
    pos = np.arange(seq_len)[:, None]
    i = np.arange(dim)[None, :]
    angle = pos / np.power(10000.0, (2 * (i // 2)) / dim)
    table = np.empty((seq_len, dim))
    table[:, 0::2] = np.sin(angle[:, 0::2])
    table[:, 1::2] = np.cos(angle[:, 1::2])
    return table


# -- layers -----------------------------------------------------------------

class Linear:
    """Affine map along the last axis."""

    def __init__(self, d_in, d_out, rng, name="linear"):
        self.d_in = d_in
        self.d_out = d_out
        self.W = Parameter(glorot_uniform(rng, (d_in, d_out)), f"{name}.W")
        self.b = Parameter(np.zeros(d_out), f"{name}.b")
        self._x = None

    def parameters(self):
        return [self.W, self.b]

    def forward(self, x):
        if x.shape[-1] != self.d_in:
            raise ValueError(
                f"{self.W.name}: input shape {x.shape} incompatible with weight "
                f"shape {self.W.value.shape}"
            )
        self._x = x
        return x @ self.W.value + self.b.value

    def backward(self, dout):
        x2 = self._x.reshape(-1, self.d_in)
        d2 = dout.reshape(-1, self.d_out)
        self.W.grad += x2.T @ d2
        self.b.grad += d2.sum(axis=0)
        return dout @ self.W.value.T


class ReLU:
    def __init__(self):
        self._mask = None

    def parameters(self):
        return []

    def forward(self, x):
        self._mask = x > 0
        return x * self._mask

    def backward(self, dout):
        return dout * self._mask


class Dropout:
    """Inverted dropout: active only in training mode, identity otherwise."""

    def __init__(self, p):
        if not 0.0 <= p < 1.0:
            raise ValueError(f"dropout probability must be in [0, 1), got {p}")
        self.p = p
        self._mask = None

    def parameters(self):
        return []

    def forward(self, x, train=False, rng=None):
        if not train or self.p == 0.0:
            self._mask = None
            return x
        if rng is None:
            raise ValueError("training-mode dropout needs an rng")
        self._mask = (rng.random(x.shape) >= self.p) / (1.0 - self.p)
        return x * self._mask

    def backward(self, dout):
        if self._mask is None:
            return dout
        return dout * self._mask


class LayerNorm:
    """Normalize the last axis to zero mean / unit variance, then affine."""

    def __init__(self, dim, name="ln", eps=1e-12):
        self.dim = dim
        self.eps = eps
        self.gamma = Parameter(np.ones(dim), f"{name}.gamma")
        self.beta = Parameter(np.zeros(dim), f"{name}.beta")
        self._cache = None

    def parameters(self):
        return [self.gamma, self.beta]

    def forward(self, x):
        mu = x.mean(axis=-1, keepdims=True)
        var = x.var(axis=-1, keepdims=True)
        inv = 1.0 / np.sqrt(var + self.eps)
        xhat = (x - mu) * inv
        self._cache = (xhat, inv)
        return xhat * self.gamma.value + self.beta.value

    def backward(self, dout):
        xhat, inv = self._cache
        self.gamma.grad += (dout * xhat).reshape(-1, self.dim).sum(axis=0)
        self.beta.grad += dout.reshape(-1, self.dim).sum(axis=0)
        dxhat = dout * self.gamma.value
        m1 = dxhat.mean(axis=-1, keepdims=True)
        m2 = (dxhat * xhat).mean(axis=-1, keepdims=True)
        return (dxhat - m1 - xhat * m2) * inv


class MultiHeadSelfAttention:
    """h parallel attention heads over learned projections of one sequence."""

    def __init__(self, dim, n_heads, rng, name="mha"):
        if dim % n_heads != 0:
            raise ValueError(f"model dim {dim} not divisible by head count {n_heads}")
        self.dim = dim
        self.n_heads = n_heads
        self.d_head = dim // n_heads
        self.wq = Linear(dim, dim, rng, f"{name}.wq")
        self.wk = Linear(dim, dim, rng, f"{name}.wk")
        self.wv = Linear(dim, dim, rng, f"{name}.wv")
        self.wo = Linear(dim, dim, rng, f"{name}.wo")
        self._cache = None

    def parameters(self):
        return [p for lin in (self.wq, self.wk, self.wv, self.wo) for p in lin.parameters()]

    def _split(self, x):
        b, s, _ = x.shape
        return x.reshape(b, s, self.n_heads, self.d_head).transpose(0, 2, 1, 3)

    def _merge(self, x):
        b, h, s, d = x.shape
        return x.transpose(0, 2, 1, 3).reshape(b, s, h * d)

    def forward(self, x, valid=None):
        q = self._split(self.wq.forward(x))
        k = self._split(self.wk.forward(x))
        v = self._split(self.wv.forward(x))
        head_valid = None if valid is None else np.asarray(valid)[:, None, :]
        ctx, att_cache = attention_forward(q, k, v, head_valid)
        self._cache = att_cache
        return self.wo.forward(self._merge(ctx))

    def backward(self, dout):
        dctx = self._split(self.wo.backward(dout))
        dq, dk, dv = attention_backward(dctx, self._cache)
        dx = self.wq.backward(self._merge(dq))
        dx = dx + self.wk.backward(self._merge(dk))
        dx = dx + self.wv.backward(self._merge(dv))
        return dx

    @property
    def last_weights(self):
        """Attention weights of the latest forward, (B, h, S, S)."""
        return None if self._cache is None else self._cache[3]


class FeedForward:
    """Position-wise two-layer MLP with ReLU."""

    def __init__(self, d_in, d_hidden, d_out, rng, name="ffn"):
        self.lin1 = Linear(d_in, d_hidden, rng, f"{name}.lin1")
        self.relu = ReLU()
        self.lin2 = Linear(d_hidden, d_out, rng, f"{name}.lin2")

    def parameters(self):
        return self.lin1.parameters() + self.lin2.parameters()

    def forward(self, x):
        return self.lin2.forward(self.relu.forward(self.lin1.forward(x)))

    def backward(self, dout):
        return self.lin1.backward(self.relu.backward(self.lin2.backward(dout)))


class EncoderLayer:
    """Post-norm transformer block: self-attention and feed-forward sublayers."""

    def __init__(self, dim, n_heads, d_ff, dropout, rng, name="enc"):
        self.mha = MultiHeadSelfAttention(dim, n_heads, rng, f"{name}.mha")
        self.drop1 = Dropout(dropout)
        self.ln1 = LayerNorm(dim, f"{name}.ln1")
        self.ffn = FeedForward(dim, d_ff, dim, rng, f"{name}.ffn")
        self.drop2 = Dropout(dropout)
        self.ln2 = LayerNorm(dim, f"{name}.ln2")

    def parameters(self):
        return self.mha.parameters() + self.ln1.parameters() + \
            self.ffn.parameters() + self.ln2.parameters()

    def forward(self, x, valid=None, train=False, rng=None):
        a = self.drop1.forward(self.mha.forward(x, valid), train, rng)
        u = self.ln1.forward(x + a)
        f = self.drop2.forward(self.ffn.forward(u), train, rng)
        return self.ln2.forward(u + f)

    def backward(self, dout):
        du = self.ln2.backward(dout)
        du = du + self.ffn.backward(self.drop2.backward(du))
        dx = self.ln1.backward(du)
        return dx + self.mha.backward(self.drop1.backward(dx))


class EncoderStack:
    def __init__(self, n_layers, dim, n_heads, d_ff, dropout, rng, name="encoder"):
        self.layers = [
            EncoderLayer(dim, n_heads, d_ff, dropout, rng, f"{name}.{i}")
            for i in range(n_layers)
        ]

    def parameters(self):
        return [p for layer in self.layers for p in layer.parameters()]

    def forward(self, x, valid=None, train=False, rng=None):
        for layer in self.layers:
            x = layer.forward(x, valid, train, rng)
        return x

    def backward(self, dout):
        for layer in reversed(self.layers):
            dout = layer.backward(dout)
        return dout


class FeatureEmbedding:
    """Per-timestep affine feature map plus the sinusoidal position table."""

    def __init__(self, n_features, dim, max_len, rng, name="embed"):
        self.lin = Linear(n_features, dim, rng, name)
        self.table = positional_encoding(max_len, dim)

    def parameters(self):
        return self.lin.parameters()

    def forward(self, x):
        s = x.shape[-2]
        if s > self.table.shape[0]:
            raise ValueError(f"sequence length {s} exceeds position table {self.table.shape[0]}")
        return self.lin.forward(x) + self.table[:s]

    def backward(self, dout):
        return self.lin.backward(dout)
