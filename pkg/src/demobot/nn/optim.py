"""RMSProp with elementwise gradient clipping."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

EPSILON = 1e-8
CLIP_LIMIT = 1.0


@dataclass
class OptimizerState:
    """Per-parameter running average of squared gradients."""

    learning_rate: float = 0.001
    decay: float = 0.99
    cache: dict = field(default_factory=dict)
    epsilon: float = EPSILON

    def __post_init__(self):
        if not 0.99 <= self.decay <= 0.999:
            raise ValueError(f"decay {self.decay} outside [0.99, 0.999]")


def clip_gradients(grads: dict, limit: float = CLIP_LIMIT) -> dict:
    """Elementwise clamp of every gradient tensor to [-limit, limit]."""
    return {name: np.clip(g, -limit, limit) for name, g in grads.items()}


def rmsprop_update(params: dict, grads: dict, state: OptimizerState):
    """Divide each gradient by the running average of its recent magnitude.

    cache <- decay * cache + (1 - decay) * g^2
    param <- param - lr * g / sqrt(cache + eps)

    Updates params and state in place and returns them for chaining.
    """
    for name, g in grads.items():
        p = params[name]
        if p.shape != g.shape:
            raise ValueError(f"shape mismatch for {name}: {p.shape} vs {g.shape}")
        cache = state.cache.get(name)
        if cache is None:
            cache = np.zeros_like(p)
            state.cache[name] = cache
        cache *= state.decay
        cache += (1.0 - state.decay) * g * g
        with np.errstate(invalid="ignore", over="ignore"):
            step = state.learning_rate * g / np.sqrt(cache + state.epsilon)
        if not np.all(np.isfinite(step)):
            raise FloatingPointError(f"non-finite update for parameter {name}")
        p -= step
    return params, state
