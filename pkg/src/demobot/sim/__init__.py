from .world import (
    TICK_HZ,
    OBS_DIM,
    PICK_PLACE,
    PUSH,
    TASK_KINDS,
    TaskSpec,
    EnvState,
    pick_place_task,
    push_task,
    make_task,
    reset,
    step,
    observe,
    env_from_observation,
    push_displacement,
    in_contact,
    success,
    push_yaw_error,
    force_detach,
    displace_box,
)

__all__ = [
    "TICK_HZ", "OBS_DIM", "PICK_PLACE", "PUSH", "TASK_KINDS",
    "TaskSpec", "EnvState", "pick_place_task", "push_task", "make_task",
    "reset", "step", "observe", "env_from_observation",
    "push_displacement", "in_contact", "success", "push_yaw_error",
    "force_detach", "displace_box",
]
