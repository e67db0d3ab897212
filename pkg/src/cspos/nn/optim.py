"""Adam with global-norm gradient clipping."""

from __future__ import annotations

import numpy as np
from numba import njit

from ..errors import TrainingError


@njit(cache=True)
def _adam_dense(value, grad, m, v, scale, b1, b2, lr_t, eps):
    for k in range(value.size):
        g = grad[k] * scale
        m[k] = b1 * m[k] + (1.0 - b1) * g
        v[k] = b2 * v[k] + (1.0 - b2) * g * g
        value[k] -= lr_t * m[k] / (np.sqrt(v[k]) + eps)


class Adam:
    def __init__(self, params, lr=1e-3, clip_norm=5.0, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = [p for p in params if p.trainable]
        self.lr = lr
        self.clip_norm = clip_norm
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.step_count = 0
        self.m = {id(p): np.zeros_like(p.value) for p in self.params}
        self.v = {id(p): np.zeros_like(p.value) for p in self.params}

    def _grad_view(self, p):
        if p.sparse:
            rows = np.fromiter(sorted(p.rows), dtype=np.int64, count=len(p.rows))
            return rows, p.grad[rows]
        return None, p.grad

    def step(self):
        views = []
        sq = 0.0
        for p in self.params:
            rows, g = self._grad_view(p)
            gsq = float(np.vdot(g, g))
            if not np.isfinite(gsq):
                raise TrainingError(f"non-finite gradient in parameter {p.name}")
            sq += gsq
            views.append((p, rows, g))
        norm = np.sqrt(sq)
        scale = 1.0
        if self.clip_norm and norm > self.clip_norm:
            scale = self.clip_norm / norm
        self.step_count += 1
        t = self.step_count
        b1, b2 = self.beta1, self.beta2
        lr_t = self.lr * np.sqrt(1.0 - b2 ** t) / (1.0 - b1 ** t)
        for p, rows, g in views:
            if rows is not None and len(rows) == 0:
                continue
            m, v = self.m[id(p)], self.v[id(p)]
            if rows is None:
                _adam_dense(p.value.reshape(-1), p.grad.reshape(-1), m.reshape(-1), v.reshape(-1),
                            scale, b1, b2, lr_t, self.eps)
            else:
                g = g * scale if scale != 1.0 else g
                m[rows] = b1 * m[rows] + (1 - b1) * g
                v[rows] = b2 * v[rows] + (1 - b2) * g * g
                p.value[rows] -= (lr_t * m[rows] / (np.sqrt(v[rows]) + self.eps)).astype(p.value.dtype)
            p.zero_grad()
        return norm


def sgd_adam_step(optimizer: Adam, params=None):
    return optimizer.step()
