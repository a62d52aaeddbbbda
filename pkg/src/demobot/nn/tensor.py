"""Validated float64 tensors and parameter initialization."""

from __future__ import annotations

import math

import numpy as np

INIT_BOUND = 0.08


def tensor(data, shape=None) -> np.ndarray:
    """Build a float64 array, rejecting NaN/Inf values and shape mismatches."""
    arr = np.array(data, dtype=np.float64)
    if shape is not None:
        expected = int(np.prod(shape))
        if arr.size != expected:
            raise ValueError(
                f"data length {arr.size} does not match shape {tuple(shape)}")
        arr = arr.reshape(shape)
    if not np.all(np.isfinite(arr)):
        raise ValueError("tensor data contains NaN or Inf")
    return arr


def check_finite(name: str, arr: np.ndarray) -> None:
    if not np.all(np.isfinite(arr)):
        raise FloatingPointError(f"non-finite values in {name}")


def init_uniform(shape, rng: np.random.Generator, bound: float = INIT_BOUND) -> np.ndarray:
    """Sample a tensor i.i.d. uniform on [-bound, bound]."""
    shape = tuple(int(s) for s in np.atleast_1d(shape))
    if len(shape) == 0 or math.prod(shape) == 0:
        raise ValueError(f"refusing zero-sized shape {shape}")
    return rng.uniform(-bound, bound, size=shape)
