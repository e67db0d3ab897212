"""Parameters and the module base class."""

from __future__ import annotations

import numpy as np


class Parameter:
    """A named tensor with a same-shaped gradient buffer.

    ``sparse`` parameters (embedding tables) record which rows received
    gradient so the optimizer can update just those rows.
    """

    def __init__(self, name: str, value: np.ndarray, sparse: bool = False):
        self.name = name
        self.value = value
        self.grad = np.zeros_like(value)
        self.sparse = sparse
        self.rows: set[int] = set()
        self.trainable = True

    @property
    def shape(self):
        return self.value.shape

    def zero_grad(self):
        if self.sparse:
            if self.rows:
                self.grad[list(self.rows)] = 0
            self.rows.clear()
        else:
            self.grad.fill(0)

    def __repr__(self):
        return f"Parameter({self.name!r}, shape={self.value.shape})"


class Module:
    def parameters(self) -> list[Parameter]:
        out = []
        for v in vars(self).values():
            if isinstance(v, Parameter):
                out.append(v)
            elif isinstance(v, Module):
                out.extend(v.parameters())
            elif isinstance(v, (list, tuple)):
                for x in v:
                    if isinstance(x, Module):
                        out.extend(x.parameters())
        return out

    def named_parameters(self) -> dict[str, Parameter]:
        return {p.name: p for p in self.parameters()}

    def zero_grad(self):
        for p in self.parameters():
            p.zero_grad()
