"""Deterministic quasi-static tabletop world.

One free-flying two-finger gripper (7 pose DOF + open/close) and one movable
box on a table with a raised shelf. There is no momentum and no gravity
integration: the box is always resting on a support surface, rigidly
attached to the gripper, or being displaced by a push. All motion happens in
fixed ticks; identical (task, seed, command sequence) triples give
bit-identical trajectories.

Contact model:
  * an open gripper never collides with the box (the fingers straddle it)
  * a closed gripper is a disc at pushing height; when a motion step carries
    it into the box footprint, the box yields along the entered face's
    inward normal and rotates about its center according to the lever arm
  * closing the gripper within the grasp tolerance of the box center
    attaches the box rigidly; opening drops it onto the surface below

The box only rotates about the vertical axis (tabletop constraint); poses
still carry full quaternions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..geometry import (
    make_pose,
    quat_from_yaw,
    quat_normalize,
    quat_multiply,
    quat_conjugate,
    rotate_vector,
    quat_angle,
    slerp,
    yaw_from_quat,
    wrap_half_angle,
)

TICK_HZ = 33
PICK_PLACE = "pick-place"
PUSH = "push"
TASK_KINDS = (PICK_PLACE, PUSH)

OBS_DIM = 15  # box pose (7) + gripper pose (7) + open flag (1)


@dataclass(frozen=True)
class TaskSpec:
    """Scene geometry, physics gains and task limits (all SI units)."""

    kind: str
    box_size: tuple = (0.10, 0.07, 0.07)
    time_limit: float = 60.0
    # axis-aligned rectangles as ((xmin, xmax), (ymin, ymax))
    # the table surface extends under the raised shelf at the back
    workspace: tuple = ((-0.50, 0.50), (-0.45, 0.45), (0.0, 0.60))
    table_region: tuple = ((-0.45, 0.45), (-0.40, 0.42))
    box_spawn_region: tuple = ((-0.28, 0.28), (-0.28, 0.12))
    gripper_spawn_region: tuple = ((-0.35, 0.35), (-0.30, 0.08), (0.10, 0.30))
    shelf_region: tuple = ((-0.33, 0.33), (0.26, 0.42))
    shelf_height: float = 0.25
    # push target: rectangle centered on target_center at target_yaw, each
    # dimension `target_margin` wider than the box footprint
    target_center: tuple = (0.0, -0.06)
    target_yaw: float = 0.0
    target_margin: float = 0.03
    initial_yaw_offset: float = math.pi / 2
    yaw_offset_jitter: float = 0.10
    min_start_to_target: float = 0.10
    # gripper motion and grasping
    linear_speed: float = 0.5
    angular_speed: float = 2.0
    grasp_tolerance: float = 0.03
    gripper_radius: float = 0.01
    retreat_clearance: float = 0.06
    # quasi-static push model
    push_translation_gain: float = 1.0
    push_rotation_gain: float = 300.0
    push_translation_cap: float = 0.03
    push_rotation_cap: float = 0.35
    object_count: int = 1
    tick_hz: int = TICK_HZ

    def __post_init__(self):
        if self.kind not in TASK_KINDS:
            raise ValueError(f"unknown task kind {self.kind!r}")

    @property
    def dt(self) -> float:
        return 1.0 / self.tick_hz

    @property
    def box_half(self) -> tuple:
        return (self.box_size[0] / 2.0, self.box_size[1] / 2.0)

    @property
    def box_rest_z(self) -> float:
        return self.box_size[2] / 2.0

    @property
    def shelf_rest_z(self) -> float:
        return self.shelf_height + self.box_size[2] / 2.0

    @property
    def target_rect_half(self) -> tuple:
        """Half-extents of the push target rectangle in its own frame."""
        return ((self.box_size[0] + self.target_margin) / 2.0,
                (self.box_size[1] + self.target_margin) / 2.0)


def pick_place_task(**overrides) -> TaskSpec:
    overrides.setdefault("time_limit", 60.0)
    return TaskSpec(kind=PICK_PLACE, **overrides)


def push_task(**overrides) -> TaskSpec:
    overrides.setdefault("time_limit", 120.0)
    return TaskSpec(kind=PUSH, **overrides)


def make_task(kind: str, **overrides) -> TaskSpec:
    if kind == PICK_PLACE:
        return pick_place_task(**overrides)
    if kind == PUSH:
        return push_task(**overrides)
    raise ValueError(f"unknown task kind {kind!r}")


@dataclass
class EnvState:
    """Full world state. Treated as a value: step() returns a new one."""

    task: TaskSpec
    objects: np.ndarray          # (M, 7) poses
    gripper: np.ndarray          # (8,) pose + open flag
    attached: int | None = None
    attach_offset: np.ndarray | None = None  # box position in gripper frame
    attach_quat: np.ndarray | None = None    # box orientation in gripper frame
    clock: float = 0.0
    command_clamped: bool = False

    def copy(self) -> "EnvState":
        return EnvState(
            task=self.task,
            objects=self.objects.copy(),
            gripper=self.gripper.copy(),
            attached=self.attached,
            attach_offset=None if self.attach_offset is None else self.attach_offset.copy(),
            attach_quat=None if self.attach_quat is None else self.attach_quat.copy(),
            clock=self.clock,
            command_clamped=self.command_clamped,
        )

    @property
    def box(self) -> np.ndarray:
        return self.objects[0]

    @property
    def gripper_open(self) -> bool:
        return self.gripper[7] >= 0.5


def _uniform_in(rng: np.random.Generator, interval) -> float:
    return float(rng.uniform(interval[0], interval[1]))


def reset(task: TaskSpec, rng: np.random.Generator, max_tries: int = 1000) -> EnvState:
    """Fresh task instance with randomized box and gripper placement."""
    for _ in range(max_tries):
        bx = _uniform_in(rng, task.box_spawn_region[0])
        by = _uniform_in(rng, task.box_spawn_region[1])
        if task.kind == PUSH:
            yaw = task.target_yaw + task.initial_yaw_offset \
                - rng.uniform(0.0, task.yaw_offset_jitter)
            dist = math.hypot(bx - task.target_center[0], by - task.target_center[1])
            if dist < task.min_start_to_target:
                continue
        else:
            yaw = rng.uniform(-math.pi, math.pi)
        break
    else:
        raise RuntimeError("could not place the box after bounded retries")

    box = make_pose((bx, by, task.box_rest_z), quat_from_yaw(yaw))
    for _ in range(max_tries):
        gx = _uniform_in(rng, task.gripper_spawn_region[0])
        gy = _uniform_in(rng, task.gripper_spawn_region[1])
        gz = _uniform_in(rng, task.gripper_spawn_region[2])
        if math.dist((gx, gy, gz), tuple(box[:3])) >= 0.12:
            break
    else:
        raise RuntimeError("could not place the gripper after bounded retries")

    gripper = np.zeros(8)
    gripper[:7] = make_pose((gx, gy, gz))
    gripper[7] = 1.0 if task.kind == PICK_PLACE else 0.0
    objects = np.zeros((task.object_count, 7))
    objects[0] = box
    return EnvState(task=task, objects=objects, gripper=gripper)


def observe(state: EnvState) -> np.ndarray:
    """Fixed-order observation: [box pose | gripper pose | open flag]."""
    return np.concatenate([state.box, state.gripper[:7],
                           [1.0 if state.gripper_open else 0.0]])


def env_from_observation(obs, task: TaskSpec) -> EnvState:
    """Rebuild a world state from an observation vector (detached, clock 0)."""
    obs = np.asarray(obs, dtype=float)
    if obs.shape != (OBS_DIM,):
        raise ValueError(f"expected a {OBS_DIM}-vector, got shape {obs.shape}")
    objects = np.zeros((task.object_count, 7))
    objects[0] = obs[:7]
    gripper = np.zeros(8)
    gripper[:7] = obs[7:14]
    gripper[7] = obs[14]
    return EnvState(task=task, objects=objects, gripper=gripper)


def _support_z(task: TaskSpec, x: float, y: float, from_z: float) -> float:
    """Rest height for a box released at (x, y) from height from_z."""
    (sx0, sx1), (sy0, sy1) = task.shelf_region
    if sx0 <= x <= sx1 and sy0 <= y <= sy1 and from_z >= task.shelf_height:
        return task.shelf_rest_z
    return task.box_rest_z


def _clamp_to_workspace(task: TaskSpec, pos: np.ndarray):
    lo = np.array([task.workspace[0][0], task.workspace[1][0], task.workspace[2][0]])
    hi = np.array([task.workspace[0][1], task.workspace[1][1], task.workspace[2][1]])
    clamped = np.minimum(np.maximum(pos, lo), hi)
    return clamped, bool(np.any(clamped != pos))


def _move_toward(pos: np.ndarray, target: np.ndarray, max_step: float) -> np.ndarray:
    delta = target - pos
    dist = float(np.linalg.norm(delta))
    # snap when within one step so that commanding a recorded pose replays it exactly
    if dist <= max_step * (1.0 + 1e-9):
        return target.copy()
    return pos + delta * (max_step / dist)


def _rotate_toward(quat: np.ndarray, target: np.ndarray, max_angle: float) -> np.ndarray:
    angle = quat_angle(quat, target)
    if angle <= max_angle * (1.0 + 1e-9) or angle < 1e-12:
        return quat_normalize(target)
    return slerp(quat, target, max_angle / angle)


def push_displacement(contact, push, box_pose, task: TaskSpec):
    """Planar displacement of the box for one push increment.

    contact: world xy point on the box perimeter; push: world xy vector.
    Only the component of the push along the contacted face's inward normal
    moves the box: the translation is that component scaled by the
    translation gain, the yaw change is the rotation gain times the moment
    of the normal push about the box center. Both are capped per step.
    Returns (translation xy, yaw delta); a tangential push returns zeros.
    """
    contact = np.asarray(contact, dtype=float)
    push = np.asarray(push, dtype=float)
    center = np.asarray(box_pose[:2], dtype=float)
    yaw = yaw_from_quat(box_pose[3:7])
    cos_y, sin_y = math.cos(yaw), math.sin(yaw)
    rel = contact - center
    local = np.array([cos_y * rel[0] + sin_y * rel[1],
                      -sin_y * rel[0] + cos_y * rel[1]])
    a, b = task.box_half
    # which face the contact sits on: the axis proportionally closest to its extent
    if abs(local[0]) / a >= abs(local[1]) / b:
        n_local = np.array([-math.copysign(1.0, local[0]), 0.0])
    else:
        n_local = np.array([0.0, -math.copysign(1.0, local[1])])
    normal = np.array([cos_y * n_local[0] - sin_y * n_local[1],
                       sin_y * n_local[0] + cos_y * n_local[1]])
    depth = float(np.dot(push, normal))
    if depth <= 0.0:
        return np.zeros(2), 0.0
    magnitude = min(depth * task.push_translation_gain, task.push_translation_cap)
    translation = normal * magnitude
    torque = rel[0] * normal[1] - rel[1] * normal[0]
    dyaw = task.push_rotation_gain * torque * depth
    dyaw = max(-task.push_rotation_cap, min(task.push_rotation_cap, dyaw))
    return translation, dyaw


def _box_local(box_pose: np.ndarray, point_xy: np.ndarray) -> np.ndarray:
    yaw = yaw_from_quat(box_pose[3:7])
    cos_y, sin_y = math.cos(yaw), math.sin(yaw)
    rel = point_xy - box_pose[:2]
    return np.array([cos_y * rel[0] + sin_y * rel[1],
                     -sin_y * rel[0] + cos_y * rel[1]])


def _resolve_push(state: EnvState, prev_xy: np.ndarray, new_xy: np.ndarray) -> None:
    """Apply the push model if the gripper disc entered the box footprint."""
    task = state.task
    box = state.objects[0]
    a, b = task.box_half
    ia, ib = a + task.gripper_radius, b + task.gripper_radius
    local_new = _box_local(box, new_xy)
    if abs(local_new[0]) >= ia or abs(local_new[1]) >= ib:
        return

    local_prev = _box_local(box, prev_xy)
    # face entered: largest entry parameter along the segment prev -> new
    yaw = yaw_from_quat(box[3:7])
    best_axis, best_sign, best_t = 0, 1.0, -1.0
    for axis, half in ((0, ia), (1, ib)):
        d = local_new[axis] - local_prev[axis]
        for sign in (1.0, -1.0):
            # crossing of plane axis = sign*half moving inward
            if sign * local_prev[axis] >= half and abs(d) > 1e-15:
                t = (sign * half - local_prev[axis]) / d
                if 0.0 <= t <= 1.0 and t > best_t:
                    best_axis, best_sign, best_t = axis, sign, t
    if best_t < 0.0:
        # started inside (grazing numerical case): shallowest penetration axis
        pen_x = ia - abs(local_new[0])
        pen_y = ib - abs(local_new[1])
        if pen_x <= pen_y:
            best_axis, best_sign = 0, math.copysign(1.0, local_new[0])
        else:
            best_axis, best_sign = 1, math.copysign(1.0, local_new[1])

    half = ia if best_axis == 0 else ib
    depth = half - best_sign * local_new[best_axis]
    if depth <= 0.0:
        return
    # contact point: gripper position clamped onto the touched (inflated) face
    contact_local = local_new.copy()
    contact_local[best_axis] = best_sign * half
    other = 1 - best_axis
    lim = ia if other == 0 else ib
    contact_local[other] = max(-lim, min(lim, contact_local[other]))
    cos_y, sin_y = math.cos(yaw), math.sin(yaw)
    rot = np.array([[cos_y, -sin_y], [sin_y, cos_y]])
    contact_world = box[:2] + rot @ contact_local
    n_local = np.zeros(2)
    n_local[best_axis] = -best_sign
    normal_world = rot @ n_local

    translation, dyaw = push_displacement(contact_world, normal_world * depth, box, task)
    box[:2] += translation
    if dyaw != 0.0:
        box[3:7] = quat_normalize(quat_multiply(quat_from_yaw(dyaw), box[3:7]))

    # residual separation so the tick ends contact-free
    local_after = _box_local(box, new_xy)
    if abs(local_after[0]) < ia and abs(local_after[1]) < ib:
        n_local_after = np.zeros(2)
        n_local_after[best_axis] = -best_sign
        residual = (ia if best_axis == 0 else ib) - best_sign * local_after[best_axis]
        if residual > 0.0:
            yaw_after = yaw_from_quat(box[3:7])
            ca, sa = math.cos(yaw_after), math.sin(yaw_after)
            rot_after = np.array([[ca, -sa], [sa, ca]])
            correction = rot_after @ n_local_after * min(residual, task.push_translation_cap)
            box[:2] += correction

    # keep the box over the table, and re-settle it: a box shoved past the
    # shelf edge drops onto the table below
    (tx0, tx1), (ty0, ty1) = task.table_region
    box[0] = max(tx0, min(tx1, box[0]))
    box[1] = max(ty0, min(ty1, box[1]))
    box[2] = _support_z(task, box[0], box[1], box[2])


def _gripper_in_contact_band(task: TaskSpec, gripper_z: float, box_z: float) -> bool:
    half_h = task.box_size[2] / 2.0
    return box_z - half_h <= gripper_z <= box_z + half_h


def in_contact(state: EnvState) -> bool:
    """True when the closed gripper overlaps the (inflated) box footprint."""
    if state.gripper_open or state.attached is not None:
        return False
    task = state.task
    box = state.box
    if not _gripper_in_contact_band(task, state.gripper[2], box[2]):
        return False
    local = _box_local(box, state.gripper[:2])
    a, b = task.box_half
    return (abs(local[0]) < a + task.gripper_radius
            and abs(local[1]) < b + task.gripper_radius)


def step(state: EnvState, command, dt: float | None = None) -> EnvState:
    """Advance one tick toward a commanded gripper state.

    command is an 8-vector: target pose + open flag (values >= 0.5 open).
    Out-of-workspace position commands are clamped and flagged.
    """
    task = state.task
    if dt is None:
        dt = task.dt
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    command = np.asarray(command, dtype=float)
    if command.shape != (8,):
        raise ValueError("command must be an 8-vector (pose + open flag)")

    nxt = state.copy()
    target_pos, clamped = _clamp_to_workspace(task, command[:3])
    nxt.command_clamped = clamped

    was_open = state.gripper_open
    prev_xy = state.gripper[:2].copy()
    nxt.gripper[:3] = _move_toward(state.gripper[:3], target_pos, task.linear_speed * dt)
    nxt.gripper[3:7] = _rotate_toward(state.gripper[3:7], quat_normalize(command[3:7]),
                                      task.angular_speed * dt)
    want_open = command[7] >= 0.5
    nxt.gripper[7] = 1.0 if want_open else 0.0

    if nxt.attached is not None:
        if want_open:
            # release: the box drops straight down onto whatever is below
            box = nxt.objects[nxt.attached]
            box[2] = _support_z(task, box[0], box[1], box[2])
            box[3:7] = quat_from_yaw(yaw_from_quat(box[3:7]))  # settle flat
            nxt.attached = None
            nxt.attach_offset = None
            nxt.attach_quat = None
        else:
            box = nxt.objects[nxt.attached]
            box[:3] = nxt.gripper[:3] + rotate_vector(nxt.gripper[3:7], nxt.attach_offset)
            box[3:7] = quat_normalize(quat_multiply(nxt.gripper[3:7], nxt.attach_quat))
    else:
        grasped = False
        if (task.kind == PICK_PLACE and was_open and not want_open):
            box = nxt.objects[0]
            if math.dist(tuple(nxt.gripper[:3]), tuple(box[:3])) <= task.grasp_tolerance:
                nxt.attached = 0
                inv = quat_conjugate(nxt.gripper[3:7])
                nxt.attach_offset = rotate_vector(inv, box[:3] - nxt.gripper[:3])
                nxt.attach_quat = quat_normalize(quat_multiply(inv, box[3:7]))
                grasped = True
        if not grasped and not want_open:
            box = nxt.objects[0]
            if _gripper_in_contact_band(task, nxt.gripper[2], box[2]):
                _resolve_push(nxt, prev_xy, nxt.gripper[:2])

    nxt.clock = state.clock + dt
    return nxt


def _footprint_corners(box_pose: np.ndarray, half: tuple) -> np.ndarray:
    yaw = yaw_from_quat(box_pose[3:7])
    cos_y, sin_y = math.cos(yaw), math.sin(yaw)
    rot = np.array([[cos_y, -sin_y], [sin_y, cos_y]])
    a, b = half
    corners = np.array([[a, b], [a, -b], [-a, -b], [-a, b]])
    return box_pose[:2] + corners @ rot.T


def _corners_inside_rect(corners: np.ndarray, center, yaw: float, half) -> bool:
    cos_y, sin_y = math.cos(yaw), math.sin(yaw)
    rel = corners - np.asarray(center)
    local_x = cos_y * rel[:, 0] + sin_y * rel[:, 1]
    local_y = -sin_y * rel[:, 0] + cos_y * rel[:, 1]
    eps = 1e-12
    return bool(np.all(np.abs(local_x) < half[0] - eps)
                and np.all(np.abs(local_y) < half[1] - eps))


def success(state: EnvState) -> bool:
    """Task success predicate.

    Pick and place: the box rests on the shelf fully inside the shelf
    bounds, the gripper has released it and retreated beyond the clearance.
    Push: the box footprint lies strictly inside the target rectangle
    (orientation folded modulo 180 degrees) and the gripper is not touching
    the box.
    """
    task = state.task
    box = state.box
    if task.kind == PICK_PLACE:
        if state.attached is not None or not state.gripper_open:
            return False
        if abs(box[2] - task.shelf_rest_z) > 1e-6:
            return False
        (sx0, sx1), (sy0, sy1) = task.shelf_region
        shelf_center = ((sx0 + sx1) / 2.0, (sy0 + sy1) / 2.0)
        shelf_half = ((sx1 - sx0) / 2.0, (sy1 - sy0) / 2.0)
        corners = _footprint_corners(box, task.box_half)
        if not _corners_inside_rect(corners, shelf_center, 0.0, shelf_half):
            return False
        return math.dist(tuple(state.gripper[:3]), tuple(box[:3])) >= task.retreat_clearance
    else:
        if abs(box[2] - task.box_rest_z) > 1e-6 or state.attached is not None:
            return False
        corners = _footprint_corners(box, task.box_half)
        if not _corners_inside_rect(corners, task.target_center, task.target_yaw,
                                    task.target_rect_half):
            return False
        return not in_contact(state)


def push_yaw_error(state: EnvState) -> float:
    """Signed yaw distance to the push target, folded modulo 180 degrees."""
    return wrap_half_angle(yaw_from_quat(state.box[3:7]) - state.task.target_yaw)


def force_detach(state: EnvState) -> EnvState:
    """Break the grasp without a command (slip): the box falls where it is."""
    if state.attached is None:
        return state
    nxt = state.copy()
    box = nxt.objects[nxt.attached]
    box[2] = _support_z(nxt.task, box[0], box[1], box[2])
    box[3:7] = quat_from_yaw(yaw_from_quat(box[3:7]))
    nxt.attached = None
    nxt.attach_offset = None
    nxt.attach_quat = None
    return nxt


def displace_box(state: EnvState, offset) -> EnvState:
    """Teleport the box by a planar offset (breaking any grasp) and settle it.

    Rejects displacements that would leave the table region.
    """
    offset = np.asarray(offset, dtype=float)
    nxt = force_detach(state) if state.attached is not None else state.copy()
    box = nxt.objects[0]
    new_x = box[0] + offset[0]
    new_y = box[1] + offset[1]
    (tx0, tx1), (ty0, ty1) = nxt.task.table_region
    if not (tx0 <= new_x <= tx1 and ty0 <= new_y <= ty1):
        raise ValueError("displacement would push the box outside the table")
    box[0] = new_x
    box[1] = new_y
    box[2] = _support_z(nxt.task, new_x, new_y, box[2])
    return nxt
