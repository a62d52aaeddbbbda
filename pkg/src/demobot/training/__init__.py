from .windows import Window, make_windows, window_demo
from .loop import TrainConfig, TrainStats, train, train_on_windows, validate, split_loss
from .checkpoint import Checkpoint, save_checkpoint, load_checkpoint, checkpoint_digest

__all__ = [
    "Window", "make_windows", "window_demo",
    "TrainConfig", "TrainStats", "train", "train_on_windows", "validate", "split_loss",
    "Checkpoint", "save_checkpoint", "load_checkpoint", "checkpoint_digest",
]
