"""One declarative configuration document for every command.

The file is JSON with five sections (all optional, defaults applied):

    {"seed": 0,
     "task": {"kind": "pick-place", ...scene/limit overrides...},
     "imperfection": {...demonstrator mistake rates...},
     "demos": {...generation and augmentation settings...},
     "training": {...optimizer and early-stopping settings...},
     "execution": {...closed-loop execution settings...}}

Unknown keys anywhere are rejected. Where a published constant exists it is
the default (recording rate 33 Hz, training rate 4 Hz, minibatch 10,
learning rate 0.001, clip range [-1, 1], patience 20 epochs, unroll 50,
box 10x7x7 cm, target margin 3 cm, time limits 60/120 s, wait quantum
0.2 s). Command-line flags override file values; overrides are recorded in
report provenance.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field

from .demos.augment import DEFAULT_SHIFT_COUNT, RECORD_HZ, TRAIN_HZ
from .demos.scripted import ImperfectionConfig
from .runtime import ExecutionConfig
from .sim import TaskSpec, make_task
from .training.loop import TrainConfig


@dataclass
class DemoGenConfig:
    count: int = 600
    record_hz: float = float(RECORD_HZ)
    train_hz: float = float(TRAIN_HZ)
    shift_count: int = DEFAULT_SHIFT_COUNT
    include_failures: bool = True


@dataclass
class Config:
    seed: int = 0
    task_kind: str = "pick-place"
    task_overrides: dict = field(default_factory=dict)
    imperfection: ImperfectionConfig = field(default_factory=ImperfectionConfig)
    demos: DemoGenConfig = field(default_factory=DemoGenConfig)
    training: TrainConfig = field(default_factory=TrainConfig)
    execution: ExecutionConfig = field(default_factory=ExecutionConfig)

    def task(self) -> TaskSpec:
        return make_task(self.task_kind, **self.task_overrides)

    def to_json(self) -> dict:
        return {
            "seed": self.seed,
            "task": {"kind": self.task_kind, **self.task_overrides},
            "imperfection": dataclasses.asdict(self.imperfection),
            "demos": dataclasses.asdict(self.demos),
            "training": dataclasses.asdict(self.training),
            "execution": dataclasses.asdict(self.execution),
        }

    def digest(self) -> str:
        blob = json.dumps(self.to_json(), sort_keys=True).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()


def _build(cls, data: dict, where: str):
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ValueError(f"unknown config keys in {where}: {', '.join(unknown)}")
    return cls(**data)


def config_from_dict(data: dict) -> Config:
    data = dict(data)
    allowed = {"seed", "task", "imperfection", "demos", "training", "execution"}
    unknown = sorted(set(data) - allowed)
    if unknown:
        raise ValueError(f"unknown top-level config keys: {', '.join(unknown)}")

    task_section = dict(data.get("task", {}))
    task_kind = task_section.pop("kind", "pick-place")
    task_fields = {f.name for f in dataclasses.fields(TaskSpec)} - {"kind"}
    unknown = sorted(set(task_section) - task_fields)
    if unknown:
        raise ValueError(f"unknown config keys in task: {', '.join(unknown)}")
    # lists from JSON stand in for the tuple-valued scene fields
    task_overrides = {k: _jsonable_to_tuple(v) for k, v in task_section.items()}

    cfg = Config(
        seed=int(data.get("seed", 0)),
        task_kind=task_kind,
        task_overrides=task_overrides,
        imperfection=_build(ImperfectionConfig, data.get("imperfection", {}), "imperfection"),
        demos=_build(DemoGenConfig, data.get("demos", {}), "demos"),
        training=_build(TrainConfig, data.get("training", {}), "training"),
        execution=_build(ExecutionConfig, data.get("execution", {}), "execution"),
    )
    cfg.task()  # validate the overrides build a legal task
    return cfg


def _jsonable_to_tuple(value):
    if isinstance(value, list):
        return tuple(_jsonable_to_tuple(v) for v in value)
    return value


def load_config(path) -> Config:
    with open(path) as fh:
        return config_from_dict(json.load(fh))
