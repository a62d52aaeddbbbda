from .dataset import (
    SCHEMA,
    SCHEMA_VERSION,
    Demonstration,
    Dataset,
    NormStats,
    compute_stats,
    split_dataset,
    training_inputs,
    save_dataset,
    save_dataset_obj,
    load_dataset,
    demo_to_record,
    demo_from_record,
)
from .augment import (
    DEFAULT_SHIFT_COUNT,
    RECORD_HZ,
    TRAIN_HZ,
    shift_augment,
    frequency_reduce,
    augment_pipeline,
)
from .scripted import (
    ImperfectionConfig,
    scripted_pick_place,
    scripted_push,
    generate_demos,
)

__all__ = [
    "SCHEMA", "SCHEMA_VERSION", "Demonstration", "Dataset", "NormStats",
    "compute_stats", "split_dataset", "training_inputs",
    "save_dataset", "save_dataset_obj", "load_dataset",
    "demo_to_record", "demo_from_record",
    "DEFAULT_SHIFT_COUNT", "RECORD_HZ", "TRAIN_HZ",
    "shift_augment", "frequency_reduce", "augment_pipeline",
    "ImperfectionConfig", "scripted_pick_place", "scripted_push", "generate_demos",
]
