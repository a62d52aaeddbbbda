"""Minibatch training with windowed BPTT, clipping, RMSProp and early stopping."""

from __future__ import annotations

import dataclasses
import time
from dataclasses import dataclass, field

import numpy as np
from threadpoolctl import threadpool_limits

from .. import mdn
from ..nn.losses import masked_mse
from ..nn.network import NetworkSpec, init_params, forward_sequence, backward_sequence
from ..nn.optim import OptimizerState, clip_gradients, rmsprop_update
from .checkpoint import Checkpoint
from .windows import make_windows, stack_batch

DECAY_WAYPOINT_THRESHOLD = 100_000


@dataclass
class TrainConfig:
    minibatch: int = 10
    learning_rate: float = 0.001
    decay: float | None = None  # None: 0.99 under 1e5 training waypoints, else 0.999
    clip: float = 1.0
    patience: int = 20
    min_rel_improvement: float = 1e-5
    max_epochs: int = 150
    seed: int = 0
    val_batch: int = 256


@dataclass
class TrainStats:
    train_losses: list = field(default_factory=list)
    val_losses: list = field(default_factory=list)
    epochs: int = 0
    best_epoch: int = -1
    decay: float = 0.99
    wall_time: float = 0.0


def _batch_loss(spec: NetworkSpec, params: dict, inputs, targets, mask):
    """Masked-mean head loss over one stacked batch, with d(raw) gradients."""
    raw, cache = forward_sequence(spec, params, inputs)
    count = float(mask.sum())
    if spec.head == "mse":
        loss, d_raw = masked_mse(raw, targets, mask)
    else:
        nll, d_raw = mdn.sequence_nll(raw, targets, spec.mixture_count,
                                      spec.output_dim, spec.density_norm)
        if count == 0.0:
            return 0.0, np.zeros_like(raw), cache, 0.0
        loss = float((nll * mask).sum() / count)
        d_raw = d_raw * (mask[..., None] / count)
    return loss, d_raw, cache, count


def split_loss(spec: NetworkSpec, params: dict, windows, batch_size: int = 256) -> float:
    """Masked mean loss over a whole window collection, no updates."""
    total, count = 0.0, 0.0
    for start in range(0, len(windows), batch_size):
        chunk = windows[start:start + batch_size]
        inputs, targets, mask = stack_batch(chunk)
        loss, _, _, n = _batch_loss(spec, params, inputs, targets, mask)
        total += loss * n
        count += n
    return total / count if count else 0.0


def pick_decay(train_demos) -> float:
    waypoints = sum(len(d) for d in train_demos)
    return 0.99 if waypoints < DECAY_WAYPOINT_THRESHOLD else 0.999


def train(dataset, spec: NetworkSpec, cfg: TrainConfig, task: str = "",
          config_digest: str = "", log=None):
    """Train one controller on a split dataset; returns (Checkpoint, TrainStats).

    Stops when the validation loss has not improved by more than the
    configured relative threshold for `patience` consecutive epochs, and
    returns the best-validation parameters (quantized to the checkpoint's
    storage precision, with the validation loss recomputed to match).
    """
    if dataset.stats is None or not dataset.train or not dataset.val:
        raise ValueError("dataset must be split and carry normalization stats")
    if cfg.decay is None:
        cfg = dataclasses.replace(cfg, decay=pick_decay(dataset.train))
    train_windows = make_windows(dataset.train, dataset.stats, spec.unroll_limit)
    val_windows = make_windows(dataset.val, dataset.stats, spec.unroll_limit)
    return train_on_windows(train_windows, val_windows, spec, cfg,
                            stats=dataset.stats, task=task,
                            config_digest=config_digest, log=log)


def train_on_windows(train_windows, val_windows, spec: NetworkSpec, cfg: TrainConfig,
                     stats=None, task: str = "", config_digest: str = "", log=None):
    """train() on prebuilt window collections (synthetic studies use this)."""
    with threadpool_limits(1):  # tiny GEMMs: threaded BLAS only adds overhead
        return _train(train_windows, val_windows, spec, cfg, stats, task,
                      config_digest, log)


def _train(train_windows, val_windows, spec, cfg, norm_stats, task, config_digest, log):
    started = time.time()

    if cfg.decay is not None:
        decay = cfg.decay
    else:
        waypoints = sum(w.length for w in train_windows) + len(train_windows)
        decay = 0.99 if waypoints < DECAY_WAYPOINT_THRESHOLD else 0.999
    params = init_params(spec, np.random.default_rng(cfg.seed))
    opt = OptimizerState(learning_rate=cfg.learning_rate, decay=decay)
    shuffle_rng = np.random.default_rng([cfg.seed, 1])

    stats = TrainStats(decay=decay)
    best_val = None
    best_params = None
    stale = 0

    for epoch in range(cfg.max_epochs):
        order = shuffle_rng.permutation(len(train_windows))
        epoch_loss, epoch_count = 0.0, 0.0
        for start in range(0, len(order), cfg.minibatch):
            batch = [train_windows[i] for i in order[start:start + cfg.minibatch]]
            inputs, targets, mask = stack_batch(batch)
            loss, d_raw, cache, n = _batch_loss(spec, params, inputs, targets, mask)
            if not np.isfinite(loss):
                raise FloatingPointError(
                    f"training diverged at epoch {epoch}, batch {start // cfg.minibatch}")
            if n == 0.0:
                continue
            grads = backward_sequence(spec, params, cache, d_raw)
            grads = clip_gradients(grads, cfg.clip)
            rmsprop_update(params, grads, opt)
            epoch_loss += loss * n
            epoch_count += n

        val = split_loss(spec, params, val_windows, cfg.val_batch)
        stats.train_losses.append(epoch_loss / max(epoch_count, 1.0))
        stats.val_losses.append(val)
        stats.epochs = epoch + 1
        if log:
            log(f"epoch {epoch:3d}  train {stats.train_losses[-1]:+.5f}  val {val:+.5f}")

        improved = best_val is None or (
            best_val - val > cfg.min_rel_improvement * max(1.0, abs(best_val)))
        if improved:
            best_val = val
            best_params = {k: v.copy() for k, v in params.items()}
            stats.best_epoch = epoch
            stale = 0
        else:
            stale += 1
            if stale >= cfg.patience:
                break

    if best_params is None:  # zero-epoch run
        best_params = params
        stats.best_epoch = stats.epochs - 1

    ckpt = Checkpoint(spec=spec, params=best_params, stats=norm_stats,
                      seed=cfg.seed, config_digest=config_digest,
                      val_loss=0.0, task=task).quantized()
    ckpt.val_loss = split_loss(spec, ckpt.params, val_windows, cfg.val_batch)
    stats.wall_time = time.time() - started
    return ckpt, stats


def validate(ckpt: Checkpoint, demos, batch_size: int = 256) -> float:
    """Masked mean head loss of a checkpoint over the given demonstrations."""
    windows = make_windows(demos, ckpt.stats, ckpt.spec.unroll_limit)
    return split_loss(ckpt.spec, ckpt.params, windows, batch_size)
