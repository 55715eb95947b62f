"""AdamW with decoupled weight decay and a linear warmup / linear decay schedule."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import DimensionError


def linear_schedule(step: int, warmup_steps: int, total_steps: int) -> float:
    """Learning-rate multiplier for the update that follows ``step`` completed updates."""
    if step < warmup_steps:
        return step / max(1, warmup_steps)
    return max(0.0, (total_steps - step) / max(1, total_steps - warmup_steps))


def warmup_steps_for(total_steps: int, warmup_ratio: float) -> int:
    return int(math.ceil(total_steps * warmup_ratio))


@dataclass
class OptimizerState:
    lr: float
    total_steps: int
    beta1: float = 0.9
    beta2: float = 0.98
    eps: float = 1e-6
    weight_decay: float = 0.01
    warmup_ratio: float = 0.06
    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def warmup_steps(self) -> int:
        return warmup_steps_for(self.total_steps, self.warmup_ratio)

    def current_lr(self) -> float:
        return self.lr * linear_schedule(self.step, self.warmup_steps, self.total_steps)


def adamw_step(
    params: dict[str, np.ndarray],
    grads: dict[str, np.ndarray],
    state: OptimizerState,
    no_decay: frozenset[str] = frozenset(),
) -> float:
    """Apply one update in place; returns the learning rate that was used.

    Parameters whose name is in ``no_decay`` skip the decoupled decay term.
    Missing gradients are treated as zero.
    """
    lr = state.current_lr()
    t = state.step + 1
    b1, b2 = state.beta1, state.beta2
    bias1 = 1.0 - b1**t
    bias2 = 1.0 - b2**t
    for name, p in params.items():
        g = grads.get(name)
        if g is None:
            g = np.zeros_like(p)
        elif g.shape != p.shape:
            raise DimensionError(f"adamw: grad {g.shape} does not match param {name} {p.shape}")
        m = state.m.get(name)
        if m is None:
            m = state.m[name] = np.zeros_like(p)
            state.v[name] = np.zeros_like(p)
        v = state.v[name]
        if m.shape != p.shape:
            raise DimensionError(f"adamw: moment {m.shape} does not match param {name} {p.shape}")

        if state.weight_decay and name not in no_decay:
            p *= 1.0 - lr * state.weight_decay
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        p -= lr * (m / bias1) / (np.sqrt(v / bias2) + state.eps)
    state.step = t
    return lr
