"""Minimal dense network framework with manual differentiation.

Implements the per-action Q-networks (baseline 6-layer MLP, residual
architecture A with k blocks inserted after the input layer, residual
architecture B replacing the MLP trunk at equal depth) and the 6-layer
bidding MLP with dropout. float32 by default; float64 mode exists for
finite-difference gradient checks.
"""

from __future__ import annotations

import numpy as np

from .encoding import ACTION_WIDTH, BID_FEATURES_WIDTH, STATE_WIDTH

Q_INPUT_WIDTH = STATE_WIDTH + ACTION_WIDTH  # 1255


class ShapeMismatch(ValueError):
    pass


class NonFiniteGradient(FloatingPointError):
    pass


class Dense:
    """Affine layer with optional ReLU. W is (out, in)."""

    def __init__(self, n_in, n_out, relu, rng, dtype):
        scale = np.sqrt(2.0 / n_in)
        self.W = (rng.standard_normal((n_out, n_in)) * scale).astype(dtype)
        self.b = np.zeros(n_out, dtype=dtype)
        self.relu = relu
        self.dW = np.zeros_like(self.W)
        self.db = np.zeros_like(self.b)
        self._x = None
        self._pre = None

    def forward(self, x, train, rng):
        if x.shape[1] != self.W.shape[1]:
            raise ShapeMismatch(
                f"expected input width {self.W.shape[1]}, got {x.shape[1]}")
        pre = x @ self.W.T + self.b
        self._x, self._pre = x, pre
        return np.maximum(pre, 0) if self.relu else pre

    def backward(self, dy):
        if self.relu:
            dy = dy * (self._pre > 0)
        self.dW += dy.T @ self._x
        self.db += dy.sum(axis=0)
        return dy @ self.W

    def params(self):
        return [self.W, self.b]

    def grads(self):
        return [self.dW, self.db]


class Dropout:
    """Inverted dropout; active only in train mode."""

    def __init__(self, p):
        self.p = p
        self._mask = None

    def forward(self, x, train, rng):
        if not train or self.p == 0.0:
            self._mask = None
            return x
        keep = 1.0 - self.p
        self._mask = (rng.random(x.shape) < keep).astype(x.dtype) / keep
        return x * self._mask

    def backward(self, dy):
        return dy if self._mask is None else dy * self._mask

    def params(self):
        return []

    def grads(self):
        return []


class LayerNorm:
    """Per-feature normalization with learned gain and shift."""

    def __init__(self, width, dtype, eps=1e-5):
        self.g = np.ones(width, dtype=dtype)
        self.beta = np.zeros(width, dtype=dtype)
        self.eps = eps
        self.dg = np.zeros_like(self.g)
        self.dbeta = np.zeros_like(self.beta)
        self._cache = None

    def forward(self, x, train, rng):
        mu = x.mean(axis=1, keepdims=True)
        var = x.var(axis=1, keepdims=True)
        inv = 1.0 / np.sqrt(var + self.eps)
        xhat = (x - mu) * inv
        self._cache = (xhat, inv)
        return xhat * self.g + self.beta

    def backward(self, dy):
        xhat, inv = self._cache
        self.dg += (dy * xhat).sum(axis=0)
        self.dbeta += dy.sum(axis=0)
        n = xhat.shape[1]
        dxhat = dy * self.g
        return (dxhat - dxhat.mean(axis=1, keepdims=True)
                - xhat * (dxhat * xhat).mean(axis=1, keepdims=True)) * inv

    def params(self):
        return [self.g, self.beta]

    def grads(self):
        return [self.dg, self.dbeta]


class ResidualBlock:
    """Linear-ReLU-Linear plus skip, then ReLU. Zero params = ReLU(x)."""

    def __init__(self, width, rng, dtype, normalize=False):
        self.l1 = Dense(width, width, relu=True, rng=rng, dtype=dtype)
        self.l2 = Dense(width, width, relu=False, rng=rng, dtype=dtype)
        self.norm = LayerNorm(width, dtype) if normalize else None
        self._pre = None

    def forward(self, x, train, rng):
        h = self.l1.forward(x, train, rng)
        h = self.l2.forward(h, train, rng)
        if self.norm is not None:
            h = self.norm.forward(h, train, rng)
        pre = h + x
        self._pre = pre
        return np.maximum(pre, 0)

    def backward(self, dy):
        dy = dy * (self._pre > 0)
        dh = dy
        if self.norm is not None:
            dh = self.norm.backward(dh)
        dh = self.l2.backward(dh)
        dh = self.l1.backward(dh)
        return dh + dy  # skip path

    def zero_parameters(self):
        for p in self.params():
            p[...] = 0
        if self.norm is not None:  # restore the neutral gain
            self.norm.g[...] = 1

    def params(self):
        out = self.l1.params() + self.l2.params()
        if self.norm is not None:
            out += self.norm.params()
        return out

    def grads(self):
        out = self.l1.grads() + self.l2.grads()
        if self.norm is not None:
            out += self.norm.grads()
        return out


class Network:
    """A layer stack with scalar output and MSE training objective."""

    def __init__(self, arch: dict, seed=0, dtype=np.float32):
        self.arch = dict(arch)
        self.dtype = np.dtype(dtype)
        rng = np.random.default_rng(seed)
        self.layers = self._build(rng)

    # -- construction ------------------------------------------------------

    def _build(self, rng):
        a = self.arch
        kind = a["kind"]
        dtype = self.dtype
        h = a.get("hidden", 512)
        n_in = a.get("input", Q_INPUT_WIDTH)
        norm = a.get("normalize", False)
        if kind == "baseline":
            return self._mlp(n_in, h, rng, dtype)
        if kind == "resA":
            blocks = [ResidualBlock(h, rng, dtype, norm)
                      for _ in range(a["blocks"])]
            mlp = self._mlp(n_in, h, rng, dtype)
            if a.get("blocks_after_mlp"):
                return mlp[:-1] + blocks + mlp[-1:]
            return mlp[:1] + blocks + mlp[1:]
        if kind == "resB":
            layers = [Dense(n_in, h, relu=True, rng=rng, dtype=dtype)]
            layers += [ResidualBlock(h, rng, dtype, norm) for _ in range(3)]
            layers.append(Dense(h, 1, relu=False, rng=rng, dtype=dtype))
            return layers
        if kind == "bid":
            widths = a.get("widths", [256, 256, 128, 64, 32])
            drops = a.get("dropout", [0.5, 0.5, 0.3, 0.3])
            layers = []
            prev = a.get("input", BID_FEATURES_WIDTH)
            for i, w in enumerate(widths):
                layers.append(Dense(prev, w, relu=True, rng=rng, dtype=dtype))
                if i < len(drops) and drops[i] > 0:
                    layers.append(Dropout(drops[i]))
                prev = w
            layers.append(Dense(prev, 1, relu=False, rng=rng, dtype=dtype))
            return layers
        raise ValueError(f"unknown architecture kind {kind!r}")

    @staticmethod
    def _mlp(n_in, h, rng, dtype):
        # the 6-layer MLP: five ReLU layers then a 1-wide linear head
        layers = [Dense(n_in, h, relu=True, rng=rng, dtype=dtype)]
        layers += [Dense(h, h, relu=True, rng=rng, dtype=dtype)
                   for _ in range(4)]
        layers.append(Dense(h, 1, relu=False, rng=rng, dtype=dtype))
        return layers

    # -- inference / training ---------------------------------------------

    def forward(self, x, train=False, rng=None):
        x = np.asarray(x, dtype=self.dtype)
        if x.ndim == 1:
            x = x[np.newaxis, :]
        if train and rng is None:
            rng = np.random.default_rng(0)
        for layer in self.layers:
            x = layer.forward(x, train, rng)
        return x[:, 0]

    def backward(self, dout):
        dy = np.asarray(dout, dtype=self.dtype)[:, np.newaxis]
        for layer in reversed(self.layers):
            dy = layer.backward(dy)
        return dy

    def zero_grads(self):
        for g in self.grads():
            g[...] = 0

    def train_batch(self, x, target, rng=None):
        """One MSE forward/backward; returns (loss, prediction)."""
        target = np.asarray(target, dtype=self.dtype)
        self.zero_grads()
        pred = self.forward(x, train=True, rng=rng)
        if pred.shape != target.shape:
            raise ShapeMismatch("target shape does not match prediction")
        resid = pred - target
        loss = float(np.mean(resid ** 2))
        self.backward(2.0 * resid / resid.shape[0])
        return loss, pred

    def params(self):
        out = []
        for layer in self.layers:
            out += layer.params()
        return out

    def grads(self):
        out = []
        for layer in self.layers:
            out += layer.grads()
        return out

    def param_count(self):
        return sum(p.size for p in self.params())

    def residual_blocks(self):
        return [l for l in self.layers if isinstance(l, ResidualBlock)]

    def copy(self):
        clone = Network(self.arch, seed=0, dtype=self.dtype)
        for dst, src in zip(clone.params(), self.params()):
            dst[...] = src
        return clone


def q_network(arch="baseline", blocks=0, hidden=512, input_width=None,
              seed=0, dtype=np.float32, normalize=False,
              blocks_after_mlp=False) -> Network:
    spec = {"kind": arch, "hidden": hidden,
            "input": input_width or Q_INPUT_WIDTH}
    if arch == "resA":
        spec["blocks"] = blocks
        spec["blocks_after_mlp"] = blocks_after_mlp
    if normalize:
        spec["normalize"] = True
    return Network(spec, seed=seed, dtype=dtype)


def bid_network(seed=0, dtype=np.float32, dropout=None, widths=None,
                input_width=None) -> Network:
    spec = {"kind": "bid", "input": input_width or BID_FEATURES_WIDTH}
    if dropout is not None:
        spec["dropout"] = dropout
    if widths is not None:
        spec["widths"] = widths
    return Network(spec, seed=seed, dtype=dtype)


class RMSProp:
    """Squared-gradient moving-average update (decay 0.99, eps 1e-5)."""

    def __init__(self, net: Network, lr=1e-4, decay=0.99, eps=1e-5):
        self.lr = lr
        self.decay = decay
        self.eps = eps
        self.sq = [np.zeros_like(p, dtype=np.float64) for p in net.params()]

    def step(self, net: Network):
        for p, g, s in zip(net.params(), net.grads(), self.sq):
            if not np.all(np.isfinite(g)):
                raise NonFiniteGradient("non-finite gradient")
            s *= self.decay
            s += (1 - self.decay) * np.square(g, dtype=np.float64)
            p -= (self.lr * g / (np.sqrt(s) + self.eps)).astype(p.dtype)

    def state_tensors(self):
        return self.sq
