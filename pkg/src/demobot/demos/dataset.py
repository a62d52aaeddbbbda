"""Demonstration records, dataset files, splitting and normalization.

File format: line-delimited JSON. The first line is a header record with a
schema name, major version and optional metadata (augmentation flags,
normalization statistics, split assignment). Every following line is one
demonstration:

    {"task": ..., "record_hz": ..., "source": ..., "outcome": ...,
     "raw_id": ..., "waypoints": [{"objects": [[7 floats], ...],
                                   "gripper": [8 floats]}, ...]}

Floats are serialized as shortest round-trip decimals, so save -> load ->
save is byte-identical.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from ..sim import OBS_DIM

SCHEMA = "demobot.dataset"
SCHEMA_VERSION = 1

SOURCES = ("scripted", "human", "augmented", "controller")
OUTCOMES = ("success", "failure")

STD_FLOOR = 1e-8


@dataclass
class Demonstration:
    """One recorded trajectory: per-tick (object poses, gripper state) pairs."""

    task: str
    record_hz: float
    objects: np.ndarray   # (T, M, 7)
    grippers: np.ndarray  # (T, 8)
    source: str = "scripted"
    outcome: str = "success"
    raw_id: str = ""
    aug: dict = field(default_factory=dict)

    def __post_init__(self):
        self.objects = np.asarray(self.objects, dtype=float)
        self.grippers = np.asarray(self.grippers, dtype=float)
        if self.objects.ndim != 3 or self.grippers.ndim != 2:
            raise ValueError("objects must be (T, M, 7), grippers (T, 8)")
        if len(self) < 2:
            raise ValueError("a demonstration needs at least 2 waypoints")
        if self.objects.shape[0] != self.grippers.shape[0]:
            raise ValueError("objects/grippers length mismatch")
        if self.source not in SOURCES:
            raise ValueError(f"unknown source {self.source!r}")
        if self.outcome not in OUTCOMES:
            raise ValueError(f"unknown outcome {self.outcome!r}")
        if not (np.all(np.isfinite(self.objects)) and np.all(np.isfinite(self.grippers))):
            raise ValueError("non-finite waypoint values")

    def __len__(self) -> int:
        return self.grippers.shape[0]

    @property
    def times(self) -> np.ndarray:
        """Waypoint timestamps implied by the recording rate."""
        return np.arange(len(self)) / self.record_hz

    def observations(self) -> np.ndarray:
        """(T, 15) observation vectors: box pose, gripper pose, open flag."""
        return np.concatenate([self.objects[:, 0, :], self.grippers], axis=1)

    def copy(self) -> "Demonstration":
        return replace(self, objects=self.objects.copy(), grippers=self.grippers.copy(),
                       aug=dict(self.aug))


def demo_to_record(demo: Demonstration) -> dict:
    rec = {
        "task": demo.task,
        "record_hz": demo.record_hz,
        "source": demo.source,
        "outcome": demo.outcome,
        "raw_id": demo.raw_id,
        "waypoints": [
            {"objects": demo.objects[t].tolist(), "gripper": demo.grippers[t].tolist()}
            for t in range(len(demo))
        ],
    }
    if demo.aug:
        rec["aug"] = demo.aug
    return rec


def demo_from_record(rec: dict) -> Demonstration:
    wps = rec["waypoints"]
    objects = np.array([w["objects"] for w in wps], dtype=float)
    grippers = np.array([w["gripper"] for w in wps], dtype=float)
    return Demonstration(task=rec["task"], record_hz=rec["record_hz"],
                         objects=objects, grippers=grippers,
                         source=rec["source"], outcome=rec["outcome"],
                         raw_id=rec["raw_id"], aug=rec.get("aug", {}))


@dataclass
class NormStats:
    """Per-dimension mean/std of training-split input vectors."""

    mean: np.ndarray
    std: np.ndarray

    def normalize(self, x: np.ndarray) -> np.ndarray:
        return (x - self.mean) / self.std

    def denormalize(self, x: np.ndarray, dims=None) -> np.ndarray:
        if dims is None:
            return x * self.std + self.mean
        return x * self.std[dims] + self.mean[dims]

    def to_json(self) -> dict:
        return {"mean": self.mean.tolist(), "std": self.std.tolist()}

    @classmethod
    def from_json(cls, data: dict) -> "NormStats":
        return cls(mean=np.array(data["mean"], dtype=float),
                   std=np.array(data["std"], dtype=float))


@dataclass
class Dataset:
    """Demonstrations plus split assignment and normalization statistics."""

    demos: list
    split: dict = field(default_factory=dict)   # raw_id -> "train" | "val"
    stats: NormStats | None = None
    augmented: dict = field(default_factory=dict)

    def subset(self, which: str) -> list:
        return [d for d in self.demos if self.split.get(d.raw_id) == which]

    @property
    def train(self) -> list:
        return self.subset("train")

    @property
    def val(self) -> list:
        return self.subset("val")


def training_inputs(demo: Demonstration) -> np.ndarray:
    """The observation rows actually consumed as network inputs (all but last)."""
    return demo.observations()[:-1]


def compute_stats(demos) -> NormStats:
    """Mean/std over the input vectors of the given demonstrations.

    Dimensions with (near-)zero variance keep scale 1 so constant features
    normalize to plain mean-removal instead of dividing by noise.
    """
    rows = np.concatenate([training_inputs(d) for d in demos], axis=0)
    mean = rows.mean(axis=0)
    std = rows.std(axis=0)
    std = np.where(std < STD_FLOOR, 1.0, std)
    return NormStats(mean=mean, std=std)


def split_dataset(demos, rng: np.random.Generator, train_fraction: float = 0.8) -> Dataset:
    """Random train/validation split at raw-demonstration granularity.

    Every trajectory derived from the same raw demonstration lands in the
    same split, so augmented copies can never leak across. Normalization
    statistics come from the training split only.
    """
    if len({d.raw_id for d in demos}) < 5:
        raise ValueError("need at least 5 distinct raw demonstrations to split")
    raw_ids = sorted({d.raw_id for d in demos})
    order = rng.permutation(len(raw_ids))
    n_train = int(len(raw_ids) * train_fraction)
    train_ids = {raw_ids[i] for i in order[:n_train]}
    split = {rid: ("train" if rid in train_ids else "val") for rid in raw_ids}
    ds = Dataset(demos=list(demos), split=split)
    ds.stats = compute_stats(ds.train)
    return ds


def save_dataset(path, demos, augmented=None, split=None, stats=None) -> None:
    header = {"schema": SCHEMA, "version": SCHEMA_VERSION}
    if augmented:
        header["augmented"] = augmented
    if split:
        header["split"] = split
    if stats is not None:
        header["stats"] = stats.to_json()
    with open(path, "w") as fh:
        fh.write(json.dumps(header) + "\n")
        for demo in demos:
            fh.write(json.dumps(demo_to_record(demo)) + "\n")


def append_demo(path, demo: Demonstration) -> None:
    """Append one demonstration, writing the header when the file is new."""
    import os

    if not os.path.exists(path) or os.path.getsize(path) == 0:
        save_dataset(path, [demo])
        return
    with open(path, "a") as fh:
        fh.write(json.dumps(demo_to_record(demo)) + "\n")


def load_dataset(path) -> Dataset:
    with open(path) as fh:
        header = json.loads(fh.readline())
        if header.get("schema") != SCHEMA:
            raise ValueError(f"{path}: not a {SCHEMA} file")
        if header.get("version") != SCHEMA_VERSION:
            raise ValueError(f"{path}: unsupported schema version {header.get('version')}")
        demos = [demo_from_record(json.loads(line)) for line in fh if line.strip()]
    ds = Dataset(demos=demos,
                 split=header.get("split", {}),
                 stats=NormStats.from_json(header["stats"]) if "stats" in header else None,
                 augmented=header.get("augmented", {}))
    return ds


def save_dataset_obj(path, ds: Dataset) -> None:
    save_dataset(path, ds.demos, augmented=ds.augmented or None,
                 split=ds.split or None, stats=ds.stats)
