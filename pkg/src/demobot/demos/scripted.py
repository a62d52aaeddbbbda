"""Scripted demonstrators with injected imperfections and corrective retries.

Both scripts are closed-loop controllers stepped at the recording tick: they
re-read the world every tick, so any injected mistake (missed grasp, grasp
slip, overpush) is followed by a correction computed from the disturbed
state, the way a human demonstrator fixes their own errors. Demonstrations
that run out of retries or time keep outcome="failure" and stay in the
dataset.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..geometry import quat_from_yaw, yaw_from_quat, IDENTITY_QUAT
from ..sim import (
    EnvState,
    TaskSpec,
    PICK_PLACE,
    PUSH,
    make_task,
    reset,
    step,
    observe,
    success,
    force_detach,
    push_yaw_error,
)
from .dataset import Demonstration

ARRIVE_TOL = 0.008

# pick-and-place geometry
HOVER_Z = 0.18
CARRY_Z = 0.33
SHELF_APPROACH_Y = 0.14
RELEASE_DROP = 0.02
PAUSE_TICKS = 3  # brief hold at each reached waypoint

# push geometry; the done-tolerances guarantee the containment predicate
# (corner reach at 1.0 cm offset and 0.08 rad stays inside the target rect)
RING_RADIUS = 0.14
STAGE_DIST = 0.07
ROTATE_LEVER_FRACTION = 0.8
POS_DONE = 0.010
YAW_DONE = 0.08
CLEAR_RADIUS = 0.17


@dataclass
class ImperfectionConfig:
    """Rates for the demonstrator's injected mistakes."""

    grasp_miss: float = 0.15
    drop_per_second: float = 0.02
    overpush: float = 0.2
    jitter_std: float = 0.005
    max_retries: int = 3

    def __post_init__(self):
        for name in ("grasp_miss", "drop_per_second", "overpush"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [0, 1]")

    @classmethod
    def perfect(cls) -> "ImperfectionConfig":
        return cls(grasp_miss=0.0, drop_per_second=0.0, overpush=0.0,
                   jitter_std=0.0, max_retries=3)


def _cmd(position, open_flag: float) -> np.ndarray:
    out = np.zeros(8)
    out[:3] = position
    out[3:7] = IDENTITY_QUAT
    out[7] = open_flag
    return out


class PickPlaceScript:
    """Phase machine: approach, descend, close, verify, lift, transport,
    insert, release, retreat. Missed grasps and slips re-enter approach."""

    CARRY_PHASES = ("lift", "transport", "insert")

    def __init__(self, env: EnvState, rng: np.random.Generator, cfg: ImperfectionConfig):
        self.task = env.task
        self.rng = rng
        self.cfg = cfg
        # placement margin must exceed the worst-case footprint corner reach
        # (hypot of the half extents, 6.1 cm) at any carried yaw
        (sx0, sx1), (sy0, sy1) = self.task.shelf_region
        margin = math.hypot(*self.task.box_half) + 0.01
        self.place_x = rng.uniform(sx0 + margin, sx1 - margin)
        self.place_y = rng.uniform(sy0 + margin, sy1 - margin)
        self.release_z = self.task.shelf_rest_z + RELEASE_DROP
        self.attempts = 0
        self.recoveries = 0
        self.dwell = 0
        self.pause = 0
        self.aborting = False
        self._enter_approach(env)

    def _jitter(self, n: int = 3) -> np.ndarray:
        if self.cfg.jitter_std <= 0.0:
            return np.zeros(n)
        return self.rng.normal(0.0, self.cfg.jitter_std, size=n)

    def _enter_approach(self, env: EnvState) -> None:
        box = env.box
        self.phase = "approach"
        self.open_cmd = 1.0
        self.target = np.array([box[0], box[1], HOVER_Z]) + self._jitter()

    def _enter_descend(self, env: EnvState) -> None:
        box = env.box
        self.phase = "descend"
        self.open_cmd = 1.0
        self.attempts += 1
        target = box[:3].copy()
        if self.rng.random() < self.cfg.grasp_miss:
            # aim beyond the grasp tolerance so the close comes up empty
            angle = self.rng.uniform(0.0, 2.0 * math.pi)
            radius = self.task.grasp_tolerance + self.rng.uniform(0.015, 0.04)
            target[0] += radius * math.cos(angle)
            target[1] += radius * math.sin(angle)
        self.target = target + self._jitter()

    def _enter_close(self, env: EnvState) -> None:
        self.phase = "close"
        self.open_cmd = 0.0
        self.dwell = 6

    def _enter_lift(self, env: EnvState) -> None:
        self.phase = "lift"
        g = env.gripper
        self.target = np.array([g[0], g[1], CARRY_Z]) + self._jitter()

    def _enter_transport(self, env: EnvState) -> None:
        # stop in front of the shelf before moving in over it
        self.phase = "transport"
        self.target = np.array([self.place_x, SHELF_APPROACH_Y, CARRY_Z]) + self._jitter()

    def _enter_insert(self, env: EnvState) -> None:
        self.phase = "insert"
        self.target = np.array([self.place_x, self.place_y, self.release_z]) + self._jitter()

    def _enter_release(self, env: EnvState) -> None:
        self.phase = "release"
        self.open_cmd = 1.0
        self.dwell = 5

    def _enter_retreat(self, env: EnvState) -> None:
        self.phase = "retreat"
        self.open_cmd = 1.0
        g = env.gripper
        self.target = np.array([g[0], g[1] - 0.28, CARRY_Z])

    def _enter_reopen(self, env: EnvState) -> None:
        # failed grasp: release, go back above the box and try again
        self.phase = "reopen"
        self.open_cmd = 1.0
        self.dwell = 2

    def _abort(self, env: EnvState) -> None:
        self.aborting = True
        self._enter_retreat(env)

    def _box_safe_on_shelf(self, env: EnvState) -> bool:
        box = env.box
        (sx0, sx1), (sy0, sy1) = self.task.shelf_region
        margin = math.hypot(*self.task.box_half)
        return (abs(box[2] - self.task.shelf_rest_z) < 1e-6
                and sx0 + margin < box[0] < sx1 - margin
                and sy0 + margin < box[1] < sy1 - margin)

    def command(self, env: EnvState):
        if self.phase == "done":
            return None

        if self.phase in self.CARRY_PHASES and env.attached is None:
            # the box slipped out mid-carry
            if self._box_safe_on_shelf(env):
                self._enter_retreat(env)
            elif self.recoveries < self.cfg.max_retries:
                self.recoveries += 1
                self._enter_approach(env)
            else:
                self._abort(env)

        if self.phase in ("close", "release", "reopen"):
            if self.dwell > 0:
                self.dwell -= 1
            elif self.phase == "close":
                if env.attached is not None:
                    self._enter_lift(env)
                elif self.attempts <= self.cfg.max_retries:
                    self._enter_reopen(env)
                else:
                    self._abort(env)
            elif self.phase == "release":
                self._enter_retreat(env)
            else:  # reopen finished
                self._enter_approach(env)
        else:
            arrived = math.dist(tuple(env.gripper[:3]), tuple(self.target)) < ARRIVE_TOL
            if arrived and self.pause < PAUSE_TICKS:
                self.pause += 1
            elif arrived:
                self.pause = 0
                if self.phase == "approach":
                    self._enter_descend(env)
                elif self.phase == "descend":
                    self._enter_close(env)
                elif self.phase == "lift":
                    self._enter_transport(env)
                elif self.phase == "transport":
                    self._enter_insert(env)
                elif self.phase == "insert":
                    self._enter_release(env)
                elif self.phase == "retreat":
                    self.phase = "done"
                    return None

        if self.phase in ("close", "release", "reopen"):
            return _cmd(env.gripper[:3], self.open_cmd)
        return _cmd(self.target, self.open_cmd)

    def after_step(self, env: EnvState) -> EnvState:
        if (env.attached is not None and self.phase in self.CARRY_PHASES
                and self.cfg.drop_per_second > 0.0
                and self.rng.random() < self.cfg.drop_per_second * env.task.dt):
            return force_detach(env)
        return env


class PushScript:
    """Push cycles: route around the box, stage at a contact, drive in, back
    off. Each cycle re-plans from the live box pose; the per-demo strategy
    decides whether rotation or translation is finished first."""

    def __init__(self, env: EnvState, rng: np.random.Generator, cfg: ImperfectionConfig):
        self.task = env.task
        self.rng = rng
        self.cfg = cfg
        self.strategy = "rotate-first" if rng.random() < 0.5 else "translate-first"
        self.alt_side = 1.0
        self.cycles = 0
        self.route: list = []
        self.open_cmd = 0.0
        self.phase = "align"
        g = env.gripper
        bearing = self._bearing(env, g[:2])
        self.target = np.array([*self._ring_point(env, bearing), g[2]])

    def _jitter(self, n: int = 2) -> np.ndarray:
        if self.cfg.jitter_std <= 0.0:
            return np.zeros(n)
        return self.rng.normal(0.0, self.cfg.jitter_std, size=n)

    @property
    def push_z(self) -> float:
        return self.task.box_rest_z

    def _bearing(self, env: EnvState, point_xy) -> float:
        c = env.box[:2]
        return math.atan2(point_xy[1] - c[1], point_xy[0] - c[0])

    def _ring_point(self, env: EnvState, bearing: float) -> np.ndarray:
        c = env.box[:2]
        return c + RING_RADIUS * np.array([math.cos(bearing), math.sin(bearing)])

    def _objective(self, env: EnvState) -> str:
        yaw_bad = abs(push_yaw_error(env)) >= YAW_DONE
        pos_bad = (math.dist(tuple(env.box[:2]), tuple(self.task.target_center))
                   >= POS_DONE)
        order = ("rotate", "translate") if self.strategy == "rotate-first" \
            else ("translate", "rotate")
        for obj in order:
            if obj == "rotate" and yaw_bad:
                return "rotate"
            if obj == "translate" and pos_bad:
                return "translate"
        return "done"

    def _plan_cycle(self, env: EnvState):
        """Pick a contact and return (stage point, drive point) in world xy."""
        task = self.task
        box = env.box
        yaw = yaw_from_quat(box[3:7])
        cos_y, sin_y = math.cos(yaw), math.sin(yaw)
        rot = np.array([[cos_y, -sin_y], [sin_y, cos_y]])
        a, b = task.box_half
        r = task.gripper_radius
        to_target = np.asarray(task.target_center) - box[:2]
        dist = float(np.linalg.norm(to_target))
        yaw_err = push_yaw_error(env)
        objective = self._objective(env)

        if objective == "rotate":
            # push a long (+-y) face near its end to torque the box; depth is
            # sized so one push bleeds off roughly the remaining yaw error
            if dist >= 0.05:
                s = max((1.0, -1.0),
                        key=lambda sign: float(np.dot(rot @ np.array([0.0, -sign]),
                                                      to_target)))
            else:
                self.alt_side = -self.alt_side
                s = self.alt_side
            lever_arm = ROTATE_LEVER_FRACTION * a
            u = math.copysign(lever_arm, yaw_err) * s
            contact_local = np.array([u, s * (b + r)])
            normal_local = np.array([0.0, -s])
            depth = float(np.clip(
                abs(yaw_err) / (task.push_rotation_gain * lever_arm), 0.012, 0.045))
        else:
            # push the face whose inward normal points most toward the target,
            # offsetting the contact to bleed off any residual yaw error
            direction = to_target / max(dist, 1e-9)
            faces = [(0, 1.0), (0, -1.0), (1, 1.0), (1, -1.0)]
            axis, s = max(faces,
                          key=lambda f: float(np.dot(rot @ self._inward(f), direction)))
            depth = float(np.clip(dist * 0.95, 0.012, 0.05))
            desired_dyaw = float(np.clip(-yaw_err, -0.25, 0.25))
            lever = desired_dyaw / (task.push_rotation_gain * depth)
            if axis == 1:
                u = float(np.clip(-lever * s, -0.7 * a, 0.7 * a))
                contact_local = np.array([u, s * (b + r)])
                normal_local = np.array([0.0, -s])
            else:
                v = float(np.clip(lever * s, -0.7 * b, 0.7 * b))
                contact_local = np.array([s * (a + r), v])
                normal_local = np.array([-s, 0.0])

        if self.cfg.overpush > 0.0 and self.rng.random() < self.cfg.overpush:
            depth *= 1.9
        contact_world = box[:2] + rot @ (contact_local + self._jitter())
        normal_world = rot @ normal_local
        stage = contact_world - normal_world * STAGE_DIST
        drive = contact_world + normal_world * depth
        return stage, drive

    @staticmethod
    def _inward(face) -> np.ndarray:
        axis, s = face
        n = np.zeros(2)
        n[axis] = -s
        return n

    def _path_clear(self, env: EnvState, start_xy, end_xy) -> bool:
        box = env.box
        yaw = yaw_from_quat(box[3:7])
        cos_y, sin_y = math.cos(yaw), math.sin(yaw)
        a, b = self.task.box_half
        ia = a + self.task.gripper_radius + 0.015
        ib = b + self.task.gripper_radius + 0.015
        for t in np.linspace(0.0, 1.0, 24):
            p = start_xy + t * (np.asarray(end_xy) - start_xy)
            rel = p - box[:2]
            lx = cos_y * rel[0] + sin_y * rel[1]
            ly = -sin_y * rel[0] + cos_y * rel[1]
            if abs(lx) < ia and abs(ly) < ib:
                return False
        return True

    def _route_to(self, env: EnvState, dest_xy) -> list:
        """Waypoints from the gripper to dest, arcing around the box if the
        straight line would drag through it."""
        start = env.gripper[:2].copy()
        if self._path_clear(env, start, dest_xy):
            return [np.asarray(dest_xy, dtype=float)]
        points = []
        b0 = self._bearing(env, start)
        b1 = self._bearing(env, dest_xy)
        if np.linalg.norm(start - env.box[:2]) < RING_RADIUS - 0.005:
            points.append(self._ring_point(env, b0))
        sweep = (b1 - b0 + math.pi) % (2.0 * math.pi) - math.pi
        steps = max(1, int(math.ceil(abs(sweep) / 0.8)))
        for i in range(1, steps + 1):
            points.append(self._ring_point(env, b0 + sweep * i / steps))
        points.append(np.asarray(dest_xy, dtype=float))
        return points

    def command(self, env: EnvState):
        if self.phase == "done":
            return None
        arrived = math.dist(tuple(env.gripper[:3]), tuple(self.target)) < ARRIVE_TOL

        if self.phase == "align":
            if arrived:
                self.phase = "drop"
                self.target = np.array([*env.gripper[:2], self.push_z])
        elif self.phase == "drop":
            if arrived:
                self._start_cycle(env)
        elif self.phase == "route":
            if arrived:
                if self.route:
                    nxt = self.route.pop(0)
                    self.target = np.array([nxt[0], nxt[1], self.push_z])
                else:
                    self.phase = "drive"
                    self.target = np.array([self.drive[0], self.drive[1], self.push_z])
        elif self.phase == "drive":
            if arrived:
                self.phase = "back"
                self.target = np.array([self.stage[0], self.stage[1], self.push_z])
        elif self.phase == "back":
            if arrived:
                self._start_cycle(env)
        elif self.phase == "clear":
            if arrived or success(env):
                if success(env):
                    self.phase = "done"
                    return None
                self._start_cycle(env)

        return _cmd(self.target, self.open_cmd)

    def _start_cycle(self, env: EnvState) -> None:
        if self._objective(env) == "done":
            bearing = self._bearing(env, env.gripper[:2])
            away = env.box[:2] + CLEAR_RADIUS * np.array([math.cos(bearing),
                                                          math.sin(bearing)])
            self.phase = "clear"
            self.target = np.array([away[0], away[1], self.push_z])
            return
        self.cycles += 1
        if self.cycles > 60:
            self.phase = "done"
            return
        self.stage, self.drive = self._plan_cycle(env)
        self.route = self._route_to(env, self.stage)
        first = self.route.pop(0)
        self.phase = "route"
        self.target = np.array([first[0], first[1], self.push_z])

    def after_step(self, env: EnvState) -> EnvState:
        return env


def _run(env: EnvState, script, settle_ticks: int = 2):
    task = env.task
    objects = [env.objects.copy()]
    grippers = [env.gripper.copy()]
    while env.clock < task.time_limit:
        cmd = script.command(env)
        if cmd is None:
            break
        env = step(env, cmd, task.dt)
        env = script.after_step(env)
        objects.append(env.objects.copy())
        grippers.append(env.gripper.copy())
    for _ in range(settle_ticks):
        env = step(env, env.gripper.copy(), task.dt)
        objects.append(env.objects.copy())
        grippers.append(env.gripper.copy())
    outcome = "success" if success(env) else "failure"
    demo = Demonstration(task=task.kind, record_hz=float(task.tick_hz),
                         objects=np.array(objects), grippers=np.array(grippers),
                         source="scripted", outcome=outcome)
    return demo, env


def scripted_pick_place(env: EnvState, rng: np.random.Generator,
                        cfg: ImperfectionConfig | None = None) -> Demonstration:
    """Record one scripted pick-and-place demonstration at the tick rate."""
    if env.task.kind != PICK_PLACE:
        raise ValueError("environment is not a pick-and-place instance")
    demo, _ = _run(env, PickPlaceScript(env, rng, cfg or ImperfectionConfig()))
    return demo


def scripted_push(env: EnvState, rng: np.random.Generator,
                  cfg: ImperfectionConfig | None = None) -> Demonstration:
    """Record one scripted push-to-pose demonstration at the tick rate."""
    if env.task.kind != PUSH:
        raise ValueError("environment is not a push instance")
    demo, _ = _run(env, PushScript(env, rng, cfg or ImperfectionConfig()))
    return demo


def generate_demos(task: TaskSpec, count: int, seed: int,
                   cfg: ImperfectionConfig | None = None) -> list:
    """Generate `count` demonstrations, one deterministic rng stream each."""
    cfg = cfg or ImperfectionConfig()
    out = []
    for i in range(count):
        rng = np.random.default_rng([seed, i])
        env = reset(task, rng)
        if task.kind == PICK_PLACE:
            demo = scripted_pick_place(env, rng, cfg)
        else:
            demo = scripted_push(env, rng, cfg)
        demo.raw_id = f"{task.kind}.s{seed}.{i:05d}"
        out.append(demo)
    return out
