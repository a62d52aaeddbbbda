"""Turn normalized demonstrations into fixed-length supervised windows.

Each low-frequency demonstration yields (input, target, mask) triples: the
input at step t is the normalized observation, the target is the normalized
gripper vector of step t+1 (teacher forcing). Windows are padded to the
unroll limit with the padding masked out; demonstrations longer than the
limit split into non-overlapping windows, each restarting from zero
recurrent state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..demos.dataset import NormStats

GRIPPER_SLICE = slice(7, 15)  # gripper pose + open flag inside the observation


@dataclass
class Window:
    inputs: np.ndarray   # (unroll, obs_dim)
    targets: np.ndarray  # (unroll, target_dim)
    mask: np.ndarray     # (unroll,) 1.0 on supervised steps
    length: int

    @property
    def supervised_steps(self) -> int:
        return self.length


def window_demo(demo, stats: NormStats, unroll: int = 50) -> list:
    """Windows for one demonstration (teacher-forced next-gripper targets)."""
    obs = stats.normalize(demo.observations())
    inputs = obs[:-1]
    targets = obs[1:, GRIPPER_SLICE]
    out = []
    for start in range(0, inputs.shape[0], unroll):
        xs = inputs[start:start + unroll]
        ys = targets[start:start + unroll]
        n = xs.shape[0]
        pad_x = np.zeros((unroll, inputs.shape[1]))
        pad_y = np.zeros((unroll, targets.shape[1]))
        mask = np.zeros(unroll)
        pad_x[:n] = xs
        pad_y[:n] = ys
        mask[:n] = 1.0
        out.append(Window(inputs=pad_x, targets=pad_y, mask=mask, length=n))
    return out


def make_windows(demos, stats: NormStats, unroll: int = 50) -> list:
    """Windows for a demonstration collection, in deterministic order."""
    windows = []
    for demo in demos:
        windows.extend(window_demo(demo, stats, unroll))
    return windows


def stack_batch(windows) -> tuple:
    """Stack windows into (inputs (T,B,d), targets (T,B,c), mask (T,B)).

    The batch is trimmed to the longest unpadded window it contains; the
    all-masked tail contributes nothing either way.
    """
    t_max = max(w.length for w in windows)
    t_max = max(t_max, 1)
    inputs = np.stack([w.inputs[:t_max] for w in windows], axis=1)
    targets = np.stack([w.targets[:t_max] for w in windows], axis=1)
    mask = np.stack([w.mask[:t_max] for w in windows], axis=1)
    return inputs, targets, mask
