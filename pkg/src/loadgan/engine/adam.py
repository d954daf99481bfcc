"""Adam optimizer with bias correction."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .tensor import ShapeError, Tensor


class Adam:
    def __init__(self, params: Sequence[Tensor], lr: float = 1e-4,
                 beta1: float = 0.5, beta2: float = 0.9, eps: float = 1e-8):
        self.params = list(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]

    def step(self, grads: Sequence[np.ndarray]) -> None:
        if len(grads) != len(self.params):
            raise ShapeError(f"expected {len(self.params)} gradients, got {len(grads)}")
        self.step_count += 1
        c1 = 1.0 - self.beta1**self.step_count
        c2 = 1.0 - self.beta2**self.step_count
        for i, (p, g) in enumerate(zip(self.params, grads)):
            if g.shape != p.data.shape:
                raise ShapeError(f"gradient shape {g.shape} != parameter shape {p.data.shape}")
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * (g * g)
            p.data = p.data - self.lr * (self.m[i] / c1) / (np.sqrt(self.v[i] / c2) + self.eps)

    def state_dict(self) -> dict:
        return {"step": self.step_count, "m": list(self.m), "v": list(self.v)}

    def load_state_dict(self, state: dict) -> None:
        if len(state["m"]) != len(self.params) or len(state["v"]) != len(self.params):
            raise ShapeError("optimizer state does not match parameter count")
        self.step_count = int(state["step"])
        self.m = [np.asarray(a) for a in state["m"]]
        self.v = [np.asarray(a) for a in state["v"]]
