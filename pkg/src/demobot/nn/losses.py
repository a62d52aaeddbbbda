"""Regression losses with analytic gradients."""

from __future__ import annotations

import numpy as np


def mse_loss(prediction, target):
    """Mean squared error over components; returns (loss, d_loss/d_prediction)."""
    p = np.asarray(prediction, dtype=float)
    t = np.asarray(target, dtype=float)
    if p.shape != t.shape:
        raise ValueError(f"shape mismatch {p.shape} vs {t.shape}")
    diff = p - t
    c = p.shape[-1]
    loss = float(np.mean(diff * diff))
    return loss, 2.0 * diff / c


def masked_mse(raw: np.ndarray, targets: np.ndarray, mask: np.ndarray):
    """Masked-mean MSE over a (T, B, c) prediction block.

    Step losses are averaged over the c components, then averaged over the
    unmasked steps. Returns (loss, d_loss/d_raw); an empty mask yields zero.
    """
    diff = raw - targets
    c = raw.shape[-1]
    count = float(mask.sum())
    if count == 0.0:
        return 0.0, np.zeros_like(raw)
    per_step = (diff * diff).mean(axis=-1) * mask
    loss = float(per_step.sum() / count)
    d_raw = (2.0 / (c * count)) * diff * mask[..., None]
    return loss, d_raw
