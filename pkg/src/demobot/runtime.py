"""Closed-loop execution of trained controllers in the simulator.

The execution loop mirrors how waypoints are dispatched on hardware that
cannot teleport: the controller predicts the next gripper waypoint from the
current (normalized) observation, the gripper is driven toward it through
interpolated substeps, and after every wait quantum the loop checks whether
the simulated gripper pose is within the arrival threshold of the commanded
one. On arrival (or a per-waypoint timeout) the next waypoint is requested.
A trial ends on task success or on the task time limit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from threadpoolctl import threadpool_limits

from . import mdn
from .demos.dataset import Demonstration
from .geometry import quat_normalize, slerp, quat_angle
from .nn.network import LstmState, step_output
from .sim import (
    EnvState,
    TaskSpec,
    displace_box,
    make_task,
    observe,
    reset,
    step,
    success,
)
from .training.checkpoint import Checkpoint
from .training.windows import GRIPPER_SLICE


@dataclass
class ExecutionConfig:
    wait_quantum: float = 0.2          # seconds between arrival checks
    arrival_pos: float = 0.01          # meters
    arrival_rot: float = 0.1           # radians
    waypoint_timeout: float = 2.0      # seconds before giving up on a waypoint
    substeps: int = 7                  # interpolation commands per quantum
    sampling: str = "sample"           # "sample" | "mode" for mixture heads

    def __post_init__(self):
        if self.substeps < 1:
            raise ValueError("substeps must be >= 1")
        if self.sampling not in ("sample", "mode"):
            raise ValueError(f"unknown sampling mode {self.sampling!r}")


@dataclass
class TrialResult:
    success: bool
    elapsed: float
    waypoints: int
    waypoint_timeouts: int
    failure_reason: str               # "none" | "timeout" | "waypoint-timeout"
    commands: list = field(default_factory=list)   # per-tick 8-vectors
    states: list = field(default_factory=list)     # per-tick observations
    seed: int = 0
    initial_obs: np.ndarray | None = None

    def trace_demo(self, task: TaskSpec, initial_obs) -> Demonstration:
        """Export the trace as a demonstration (source "controller")."""
        rows = [initial_obs] + self.states
        objects = np.array([[row[:7]] for row in rows])
        grippers = np.array([row[7:15] for row in rows])
        return Demonstration(task=task.kind, record_hz=float(task.tick_hz),
                             objects=objects, grippers=grippers,
                             source="controller",
                             outcome="success" if self.success else "failure",
                             raw_id=f"{task.kind}.trial.{self.seed}")


def next_waypoint(ckpt: Checkpoint, state, obs, rng: np.random.Generator,
                  sampling: str = "sample"):
    """One controller step: observation in, next gripper command out.

    Mixture heads draw a sample (or take the strongest kernel's center in
    "mode" sampling); regression heads pass their prediction through. The
    quaternion slice is renormalized and the open/close coordinate is
    thresholded at 0.5 after denormalization.
    """
    stats = ckpt.stats
    xn = stats.normalize(np.asarray(obs, dtype=float))
    raw, state = step_output(ckpt.spec, ckpt.params, xn, state)
    if ckpt.spec.head == "mdn":
        params = mdn.split_activations(raw, ckpt.spec.mixture_count,
                                       ckpt.spec.output_dim)
        yn = mdn.sample(params, rng) if sampling == "sample" \
            else mdn.mixture_mode_mean(params)
    else:
        yn = raw
    y = stats.denormalize(yn, GRIPPER_SLICE)
    if not np.all(np.isfinite(y)):
        raise FloatingPointError("controller produced a non-finite waypoint")
    target = np.empty(8)
    target[:3] = y[:3]
    target[3:7] = quat_normalize(y[3:7])
    target[7] = 1.0 if y[7] >= 0.5 else 0.0
    return target, state


def interpolate(current_pose, target_pose, substeps: int) -> list:
    """Intermediate pose commands from current to target.

    Positions interpolate linearly, orientations along the great arc; the
    open/close command only switches on the final substep.
    """
    if substeps < 1:
        raise ValueError("substeps must be >= 1")
    cur_open = current_pose[7]
    out = []
    for i in range(1, substeps + 1):
        frac = i / substeps
        cmd = np.empty(8)
        cmd[:3] = current_pose[:3] + frac * (target_pose[:3] - current_pose[:3])
        cmd[3:7] = slerp(current_pose[3:7], target_pose[3:7], frac)
        cmd[7] = target_pose[7] if i == substeps else cur_open
        out.append(cmd)
    return out


def _arrived(state: EnvState, target, cfg: ExecutionConfig) -> bool:
    # the check uses the simulated gripper pose, never the commanded one
    pos_ok = math.dist(tuple(state.gripper[:3]), tuple(target[:3])) <= cfg.arrival_pos
    rot_ok = quat_angle(state.gripper[3:7], target[3:7]) <= cfg.arrival_rot
    grip_ok = (state.gripper[7] >= 0.5) == (target[7] >= 0.5)
    return pos_ok and rot_ok and grip_ok


def rollout(ckpt: Checkpoint, task: TaskSpec, seed: int,
            cfg: ExecutionConfig | None = None,
            perturbation=None, record_trace: bool = True) -> TrialResult:
    """Run one closed-loop trial from a fresh random task instance.

    `perturbation`, when given, is (trigger_step, offset, require_carry):
    at the first waypoint index >= trigger_step (optionally waiting until
    the box is actually held) the box is displaced by the planar offset,
    breaking any grasp.
    """
    cfg = cfg or ExecutionConfig()
    if ckpt.task and ckpt.task != task.kind:
        raise ValueError(f"checkpoint was trained for {ckpt.task!r}, not {task.kind!r}")
    env = reset(task, np.random.default_rng([seed, 0]))
    rng = np.random.default_rng([seed, 1])
    state = None
    quantum_ticks = max(1, round(cfg.wait_quantum * task.tick_hz))
    result = TrialResult(success=False, elapsed=0.0, waypoints=0,
                         waypoint_timeouts=0, failure_reason="none", seed=seed)
    initial_obs = observe(env)
    pending = perturbation

    def tick(cmd) -> None:
        nonlocal env
        env = step(env, cmd, task.dt)
        if record_trace:
            result.commands.append(np.asarray(cmd, dtype=float).copy())
            result.states.append(observe(env))

    done = False
    reached_last = False
    while not done and env.clock < task.time_limit:
        if pending is not None:
            trigger, offset, require_carry = pending
            if result.waypoints >= trigger and (not require_carry or env.attached is not None):
                env = displace_box(env, offset)
                pending = None
        obs = observe(env)
        target, state = next_waypoint(ckpt, state, obs, rng, cfg.sampling)
        result.waypoints += 1
        waited = 0.0
        commands = interpolate(env.gripper.copy(), target, cfg.substeps)
        reached_last = False
        while env.clock < task.time_limit:
            for cmd in commands:
                tick(cmd)
                if success(env):
                    done = True
                    break
                if env.clock >= task.time_limit:
                    break
            if done:
                break
            commands = [target] * quantum_ticks  # keep driving at the target
            waited += quantum_ticks * task.dt
            if _arrived(env, target, cfg):
                reached_last = True
                break
            if waited >= cfg.waypoint_timeout:
                result.waypoint_timeouts += 1
                break

    result.success = success(env)
    result.elapsed = env.clock
    if not result.success:
        unreached = result.waypoint_timeouts > 0 and not reached_last
        result.failure_reason = "waypoint-timeout" if unreached else "timeout"
    result.initial_obs = initial_obs
    return result


def perturb_and_rollout(ckpt: Checkpoint, task: TaskSpec, seed: int,
                        offset, trigger_step: int,
                        cfg: ExecutionConfig | None = None,
                        require_carry: bool = True) -> TrialResult:
    """rollout() with a mid-trial box displacement (a simulated slip)."""
    offset = np.asarray(offset, dtype=float)
    return rollout(ckpt, task, seed, cfg,
                   perturbation=(trigger_step, offset, require_carry))


@dataclass
class Evaluation:
    task: str
    trials: int
    successes: int
    results: list

    @property
    def success_rate(self) -> float:
        return self.successes / self.trials if self.trials else 0.0


def evaluate(ckpt: Checkpoint, task: TaskSpec, trials: int = 20,
             base_seed: int = 0, cfg: ExecutionConfig | None = None,
             record_traces: bool = False) -> Evaluation:
    """Success rate over `trials` freshly randomized task instances."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    results = []
    with threadpool_limits(1):
        for i in range(trials):
            results.append(rollout(ckpt, task, seed=base_seed + i, cfg=cfg,
                                   record_trace=record_traces))
    wins = sum(r.success for r in results)
    return Evaluation(task=task.kind, trials=trials, successes=wins, results=results)


def replay_commands(task: TaskSpec, initial_obs, commands) -> EnvState:
    """Feed a recorded command sequence through a fresh simulator."""
    from .sim import env_from_observation

    env = env_from_observation(initial_obs, task)
    for cmd in commands:
        env = step(env, cmd, task.dt)
    return env


def replay_demo(demo: Demonstration, task: TaskSpec | None = None,
                on_tick=None) -> EnvState:
    """Re-drive a recorded demonstration open loop.

    The environment starts from the demonstration's first waypoint; each
    subsequent recorded gripper state is issued as the command for one tick.
    Only tick-rate recordings replay faithfully.
    """
    from .sim import env_from_observation

    task = task or make_task(demo.task)
    if abs(demo.record_hz - task.tick_hz) > 1e-9:
        raise ValueError("only tick-rate demonstrations can be replayed")
    obs0 = demo.observations()[0]
    env = env_from_observation(obs0, task)
    for t in range(1, len(demo)):
        env = step(env, demo.grippers[t], task.dt)
        if on_tick:
            on_tick(t, env)
    return env
