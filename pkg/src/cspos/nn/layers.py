"""Embedding, LSTM, BiLSTM, linear and dropout layers with explicit backward passes.

Layers cache what their backward pass needs during ``forward``; calling
``backward`` without a preceding ``forward`` raises ``UsageError``.
"""

from __future__ import annotations

import numpy as np

from ..errors import UsageError
from .params import Module, Parameter


def sigmoid(x):
    return 0.5 * (np.tanh(0.5 * x) + 1.0)


def _require(cache, layer):
    if cache is None:
        raise UsageError(f"{layer}: backward called before forward")
    return cache


class Embedding(Module):
    def __init__(self, name, num, dim, rng=None, init=None, dtype=np.float32):
        if init is None:
            rng = rng or np.random.default_rng(0)
            bound = np.sqrt(3.0 / dim)
            init = rng.uniform(-bound, bound, size=(num, dim))
        self.weight = Parameter(f"{name}.weight", np.asarray(init, dtype=dtype), sparse=True)
        self._cache = None

    def forward(self, ids, fallback=None):
        """Rows for ``ids``; where ``fallback`` has a row (mask not NaN) use it verbatim."""
        ids = np.asarray(ids, dtype=np.int64)
        out = self.weight.value[ids]
        mask = None
        if fallback is not None:
            mask = ~np.isnan(fallback[:, 0])
            if mask.any():
                out = out.copy()
                out[mask] = fallback[mask]
        self._cache = (ids, mask)
        return out

    def backward(self, dout):
        ids, mask = _require(self._cache, "Embedding")
        if mask is not None and mask.any():
            keep = ~mask
            ids, dout = ids[keep], dout[keep]
        if not self.weight.trainable:
            self._cache = None
            return
        np.add.at(self.weight.grad, ids, dout)
        self.weight.rows.update(ids.tolist())
        self._cache = None


class Linear(Module):
    def __init__(self, name, n_in, n_out, rng, dtype=np.float32):
        bound = np.sqrt(1.0 / n_in)
        self.W = Parameter(f"{name}.W", rng.uniform(-bound, bound, size=(n_out, n_in)).astype(dtype))
        self.b = Parameter(f"{name}.b", np.zeros(n_out, dtype=dtype))
        self._cache = None

    def forward(self, x):
        self._cache = x
        return x @ self.W.value.T + self.b.value

    def backward(self, dout):
        x = _require(self._cache, "Linear")
        self.W.grad += dout.T @ x
        self.b.grad += dout.sum(axis=0)
        self._cache = None
        return dout @ self.W.value


def lstm_step(W, U, b, x_t, h_prev, c_prev):
    """One LSTM step.  Gate blocks are stacked in the order input, forget, cell, output.

    ``W`` is (4H, in), ``U`` is (4H, H), ``b`` is (4H,).
    """
    H = h_prev.shape[0]
    if W.shape[0] != 4 * H or U.shape != (4 * H, H) or b.shape != (4 * H,) or W.shape[1] != x_t.shape[0]:
        raise UsageError("lstm_step: inconsistent parameter / input shapes")
    if c_prev.shape != (H,):
        raise UsageError("lstm_step: cell state shape mismatch")
    a = W @ x_t + U @ h_prev + b
    i = sigmoid(a[:H])
    f = sigmoid(a[H:2 * H])
    g = np.tanh(a[2 * H:3 * H])
    o = sigmoid(a[3 * H:])
    c = f * c_prev + i * g
    return o * np.tanh(c), c


class LSTM(Module):
    """Unidirectional LSTM over a whole sequence."""

    def __init__(self, name, n_in, hidden, rng, dtype=np.float32):
        bound = np.sqrt(1.0 / hidden)
        H = hidden
        self.hidden = H
        self.W = Parameter(f"{name}.W", rng.uniform(-bound, bound, size=(4 * H, n_in)).astype(dtype))
        self.U = Parameter(f"{name}.U", rng.uniform(-bound, bound, size=(4 * H, H)).astype(dtype))
        b = np.zeros(4 * H, dtype=dtype)
        b[H:2 * H] = 1.0
        self.b = Parameter(f"{name}.b", b)
        self._cache = None

    def forward(self, X):
        L = X.shape[0]
        H = self.hidden
        dtype = self.W.value.dtype
        Z = X @ self.W.value.T + self.b.value
        UT = self.U.value.T
        hs = np.zeros((L + 1, H), dtype=dtype)
        cs = np.zeros((L + 1, H), dtype=dtype)
        gates = np.empty((L, 4 * H), dtype=dtype)
        tcs = np.empty((L, H), dtype=dtype)
        for t in range(L):
            a = Z[t] + hs[t] @ UT
            s = gates[t]
            s[:2 * H] = sigmoid(a[:2 * H])
            s[2 * H:3 * H] = np.tanh(a[2 * H:3 * H])
            s[3 * H:] = sigmoid(a[3 * H:])
            cs[t + 1] = s[H:2 * H] * cs[t] + s[:H] * s[2 * H:3 * H]
            tcs[t] = np.tanh(cs[t + 1])
            hs[t + 1] = s[3 * H:] * tcs[t]
        self._cache = (X, hs, cs, gates, tcs)
        return hs[1:]

    def backward(self, dH):
        X, hs, cs, gates, tcs = _require(self._cache, "LSTM")
        L = X.shape[0]
        H = self.hidden
        U = self.U.value
        dZ = np.empty_like(gates)
        dh_next = np.zeros(H, dtype=dH.dtype)
        dc_next = np.zeros(H, dtype=dH.dtype)
        for t in range(L - 1, -1, -1):
            s = gates[t]
            i, f, g, o = s[:H], s[H:2 * H], s[2 * H:3 * H], s[3 * H:]
            dh = dH[t] + dh_next
            dc = dh * o * (1.0 - tcs[t] ** 2) + dc_next
            da = dZ[t]
            da[:H] = dc * g * i * (1.0 - i)
            da[H:2 * H] = dc * cs[t] * f * (1.0 - f)
            da[2 * H:3 * H] = dc * i * (1.0 - g * g)
            da[3 * H:] = dh * tcs[t] * o * (1.0 - o)
            dc_next = dc * f
            dh_next = da @ U
        self.U.grad += dZ.T @ hs[:-1]
        self.W.grad += dZ.T @ X
        self.b.grad += dZ.sum(axis=0)
        self._cache = None
        return dZ @ self.W.value


class BiLSTM(Module):
    """Forward and backward LSTMs with independent parameters; outputs concatenated."""

    def __init__(self, name, n_in, hidden, rng, dtype=np.float32):
        self.fwd = LSTM(f"{name}.fwd", n_in, hidden, rng, dtype)
        self.bwd = LSTM(f"{name}.bwd", n_in, hidden, rng, dtype)
        self.hidden = hidden

    def forward(self, X):
        if X.shape[0] < 1:
            raise UsageError("BiLSTM needs a sequence of length >= 1")
        hf = self.fwd.forward(X)
        hb = self.bwd.forward(X[::-1])[::-1]
        return np.concatenate([hf, hb], axis=1)

    def backward(self, dout):
        H = self.hidden
        dx = self.fwd.backward(np.ascontiguousarray(dout[:, :H]))
        dx = dx + self.bwd.backward(np.ascontiguousarray(dout[::-1, H:]))[::-1]
        return dx


def bilstm_encode(layer: BiLSTM, X):
    return layer.forward(np.asarray(X))


def dropout_apply(x, rate, training, rng):
    """Inverted dropout.  Returns the output; identity when not training or rate 0."""
    if not 0.0 <= rate < 1.0:
        raise UsageError("dropout rate must lie in [0, 1)")
    if not training or rate == 0.0:
        return x
    mask = (rng.random(x.shape) >= rate).astype(x.dtype) / x.dtype.type(1.0 - rate)
    return x * mask


class Dropout(Module):
    def __init__(self, rate):
        if not 0.0 <= rate < 1.0:
            raise UsageError("dropout rate must lie in [0, 1)")
        self.rate = rate
        self._mask = None

    def forward(self, x, training, rng):
        if not training or self.rate == 0.0:
            self._mask = None
            return x
        self._mask = (rng.random(x.shape) >= self.rate).astype(x.dtype) / x.dtype.type(1.0 - self.rate)
        return x * self._mask

    def backward(self, dout):
        return dout if self._mask is None else dout * self._mask
