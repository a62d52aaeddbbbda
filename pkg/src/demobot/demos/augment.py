"""Trajectory augmentation: rigid shifts along the shelf and frequency reduction."""

from __future__ import annotations

import math

import numpy as np

from ..sim import PICK_PLACE, TaskSpec, pick_place_task
from .dataset import Demonstration

DEFAULT_SHIFT_COUNT = 6
RECORD_HZ = 33
TRAIN_HZ = 4


def _shift_interval(demo: Demonstration, task: TaskSpec) -> tuple:
    """Feasible rigid x-offsets keeping every pose inside the workspace/shelf."""
    xs = np.concatenate([demo.objects[:, :, 0].ravel(), demo.grippers[:, 0]])
    lo_ws, hi_ws = task.workspace[0]
    lo_sh, hi_sh = task.shelf_region[0]
    margin = max(task.box_half) + 0.01
    lo = max(lo_ws + margin, lo_sh + margin) - xs.min()
    hi = min(hi_ws - margin, hi_sh - margin) - xs.max()
    return lo, hi


def shift_augment(demo: Demonstration, count: int = DEFAULT_SHIFT_COUNT,
                  task: TaskSpec | None = None) -> list:
    """Rigidly translated copies of a pick-and-place demonstration.

    Returns `count` trajectories (the unshifted original among them), each
    displacing every gripper and object waypoint by the same offset along
    the shelf axis. Offsets are evenly spaced over the feasible range; the
    one closest to zero is snapped to zero so the original is included.
    Push demonstrations are rejected: that task needs a specific target pose.
    """
    if demo.task != PICK_PLACE:
        raise ValueError("shift augmentation only applies to pick-and-place")
    if count < 1:
        raise ValueError("count must be >= 1")
    task = task or pick_place_task()
    if count == 1:
        out = demo.copy()
        out.aug = dict(demo.aug, shift=0.0)
        return [out]

    lo, hi = _shift_interval(demo, task)
    if hi < lo:  # no room to move; return count copies of the original
        offsets = np.zeros(count)
    else:
        offsets = np.linspace(lo, hi, count)
        offsets[int(np.argmin(np.abs(offsets)))] = 0.0
    out = []
    for off in offsets:
        copy = demo.copy()
        copy.objects[:, :, 0] += off
        copy.grippers[:, 0] += off
        copy.source = demo.source if off == 0.0 else "augmented"
        copy.aug = dict(demo.aug, shift=float(off))
        out.append(copy)
    return out


def frequency_reduce(demo: Demonstration, record_hz: float = RECORD_HZ,
                     train_hz: float = TRAIN_HZ) -> list:
    """Split one high-rate trajectory into k = floor(record/train) interleaved
    low-rate trajectories; sub-trajectory j keeps waypoints j, j+k, j+2k, ...

    A demonstration shorter than k waypoints comes back as a single
    truncated trajectory flagged in its metadata.
    """
    if record_hz <= train_hz:
        raise ValueError("record_hz must exceed train_hz")
    k = int(math.floor(record_hz / train_hz))
    if k == 1:
        return [demo.copy()]
    low_hz = record_hz / k
    if len(demo) < 2 * k:
        # not enough points for k sub-trajectories of >= 2 waypoints each:
        # emit one truncated low-rate trajectory, flagged
        idx = np.arange(0, len(demo), k)
        hz = low_hz
        if idx.size < 2:
            idx = np.array([0, len(demo) - 1])
            hz = record_hz / (len(demo) - 1)
        copy = demo.copy()
        copy.record_hz = hz
        copy.objects = demo.objects[idx].copy()
        copy.grippers = demo.grippers[idx].copy()
        copy.source = "augmented"
        copy.aug = dict(demo.aug, subsample=0, truncated=True)
        return [copy]
    out = []
    for j in range(k):
        sub = Demonstration(
            task=demo.task,
            record_hz=low_hz,
            objects=demo.objects[j::k].copy(),
            grippers=demo.grippers[j::k].copy(),
            source="augmented",
            outcome=demo.outcome,
            raw_id=demo.raw_id,
            aug=dict(demo.aug, subsample=j),
        )
        out.append(sub)
    return out


def augment_pipeline(demos, task: TaskSpec, shift_count: int | None = None,
                     record_hz: float = RECORD_HZ, train_hz: float = TRAIN_HZ) -> list:
    """Shift (pick-and-place only) then frequency-reduce a demo collection."""
    out = []
    for demo in demos:
        if task.kind == PICK_PLACE and shift_count is not None and shift_count > 1:
            shifted = shift_augment(demo, shift_count, task)
        else:
            shifted = [demo]
        for s in shifted:
            out.extend(frequency_reduce(s, record_hz=record_hz, train_hz=train_hz))
    return out
