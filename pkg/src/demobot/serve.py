"""Demonstration-collection service for the browser teleoperation UI.

One websocket endpoint (/ws) carries single-line JSON records, each with a
"type" field:

  server -> client:  hello{task, role, scene}
                     state{tick, objects, gripper, attached, recording}
                     saved{raw_id}
                     error{message}
  client -> server:  control{dx, dy, dz, dyaw, grip_toggle}
                     begin_demo{}
                     end_demo{outcome}

The first connected client pilots the gripper; later clients spectate and
receive the same state stream. The simulator ticks at the recording rate;
control messages accumulate between ticks. end_demo saves the recording to
the dataset file, acknowledges with the new raw_id, and immediately resets
to a fresh randomized instance.
"""

from __future__ import annotations

import asyncio
import contextlib
import json
from pathlib import Path

import numpy as np
from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.responses import FileResponse
from fastapi.staticfiles import StaticFiles

from .config import Config
from .demos.dataset import Demonstration, append_demo
from .geometry import quat_from_yaw, quat_multiply, quat_normalize
from .sim import reset, step


class Session:
    """Single shared world: one pilot, any number of spectators."""

    def __init__(self, cfg: Config, out_path: str, seed: int | None = None):
        self.cfg = cfg
        self.task = cfg.task()
        self.out_path = out_path
        self.seed = cfg.seed if seed is None else seed
        self.instance = 0
        self.demo_count = 0
        self.tick = 0
        self.clients: list[WebSocket] = []
        self.pilot: WebSocket | None = None
        self.recording = False
        self.buffer_objects: list = []
        self.buffer_grippers: list = []
        self.pending = np.zeros(4)  # dx, dy, dz, dyaw
        self.grip_toggle = False
        self.env = self._fresh_instance()

    def _fresh_instance(self):
        rng = np.random.default_rng([self.seed, self.instance])
        self.instance += 1
        return reset(self.task, rng)

    def scene_message(self, role: str) -> dict:
        t = self.task
        return {
            "type": "hello",
            "task": t.kind,
            "role": role,
            "scene": {
                "box_size": list(t.box_size),
                "workspace": [list(b) for b in t.workspace],
                "table_region": [list(b) for b in t.table_region],
                "shelf_region": [list(b) for b in t.shelf_region],
                "shelf_height": t.shelf_height,
                "target_center": list(t.target_center),
                "target_yaw": t.target_yaw,
                "target_margin": t.target_margin,
                "tick_hz": t.tick_hz,
            },
        }

    def state_message(self) -> dict:
        env = self.env
        return {
            "type": "state",
            "tick": self.tick,
            "objects": [row.tolist() for row in env.objects],
            "gripper": env.gripper.tolist(),
            "attached": env.attached,
            "recording": self.recording,
        }

    def apply_control(self, msg: dict) -> None:
        self.pending[0] += float(msg.get("dx", 0.0))
        self.pending[1] += float(msg.get("dy", 0.0))
        self.pending[2] += float(msg.get("dz", 0.0))
        self.pending[3] += float(msg.get("dyaw", 0.0))
        if msg.get("grip_toggle"):
            self.grip_toggle = True

    def advance(self) -> None:
        g = self.env.gripper
        command = g.copy()
        command[:3] += self.pending[:3]
        if self.pending[3] != 0.0:
            command[3:7] = quat_normalize(
                quat_multiply(quat_from_yaw(self.pending[3]), g[3:7]))
        if self.grip_toggle:
            command[7] = 0.0 if g[7] >= 0.5 else 1.0
        self.pending[:] = 0.0
        self.grip_toggle = False
        self.env = step(self.env, command, self.task.dt)
        self.tick += 1
        if self.recording:
            self.buffer_objects.append(self.env.objects.copy())
            self.buffer_grippers.append(self.env.gripper.copy())

    def begin_demo(self) -> None:
        self.recording = True
        self.buffer_objects = [self.env.objects.copy()]
        self.buffer_grippers = [self.env.gripper.copy()]

    def end_demo(self, outcome: str):
        if not self.recording:
            return None, "no demonstration in progress"
        if outcome not in ("success", "failure"):
            return None, f"bad outcome {outcome!r}"
        if len(self.buffer_grippers) < 2:
            self.recording = False
            return None, "demonstration too short to save"
        raw_id = f"{self.task.kind}.h{self.seed}.{self.demo_count:05d}"
        demo = Demonstration(
            task=self.task.kind,
            record_hz=float(self.task.tick_hz),
            objects=np.array(self.buffer_objects),
            grippers=np.array(self.buffer_grippers),
            source="human",
            outcome=outcome,
            raw_id=raw_id,
        )
        append_demo(self.out_path, demo)
        self.demo_count += 1
        self.recording = False
        self.env = self._fresh_instance()
        return raw_id, None


def build_app(cfg: Config | None = None, out_path: str = "human_demos.jsonl",
              seed: int | None = None, realtime: bool = True) -> FastAPI:
    cfg = cfg or Config()
    session = Session(cfg, out_path, seed)

    @contextlib.asynccontextmanager
    async def lifespan(app: FastAPI):
        ticker = asyncio.create_task(_tick_loop(app))
        yield
        ticker.cancel()
        with contextlib.suppress(asyncio.CancelledError):
            await ticker

    app = FastAPI(lifespan=lifespan)
    app.state.session = session
    app.state.realtime = realtime

    async def _tick_loop(app: FastAPI):
        s: Session = app.state.session
        dt = s.task.dt
        while True:
            if s.clients:
                s.advance()
                payload = json.dumps(s.state_message())
                for ws in list(s.clients):
                    try:
                        await ws.send_text(payload)
                    except Exception:
                        _drop_client(s, ws)
            await asyncio.sleep(dt if app.state.realtime else 0)

    def _drop_client(s: Session, ws: WebSocket) -> None:
        if ws in s.clients:
            s.clients.remove(ws)
        if s.pilot is ws:
            s.pilot = s.clients[0] if s.clients else None

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket):
        s: Session = app.state.session
        await ws.accept()
        role = "pilot" if s.pilot is None else "spectator"
        if s.pilot is None:
            s.pilot = ws
        s.clients.append(ws)
        await ws.send_text(json.dumps(s.scene_message(role)))
        try:
            while True:
                raw = await ws.receive_text()
                try:
                    msg = json.loads(raw)
                except json.JSONDecodeError:
                    await ws.send_text(json.dumps(
                        {"type": "error", "message": "malformed message"}))
                    continue
                if ws is not s.pilot:
                    continue  # spectators are read-only
                kind = msg.get("type")
                if kind == "control":
                    s.apply_control(msg)
                elif kind == "begin_demo":
                    s.begin_demo()
                elif kind == "end_demo":
                    raw_id, err = s.end_demo(msg.get("outcome", "success"))
                    if err:
                        await ws.send_text(json.dumps({"type": "error", "message": err}))
                    else:
                        await ws.send_text(json.dumps({"type": "saved", "raw_id": raw_id}))
                else:
                    await ws.send_text(json.dumps(
                        {"type": "error", "message": f"unknown message type {kind!r}"}))
        except WebSocketDisconnect:
            pass
        finally:
            _drop_client(s, ws)

    _mount_ui(app)
    return app


def _mount_ui(app: FastAPI) -> None:
    """Serve the browser UI when a built frontend sits next to the package."""
    root = Path(__file__).resolve().parents[2] / "frontend"
    dist = root / "dist"
    index = root / "index.html"
    if not (dist.is_dir() and index.is_file()):
        return
    app.mount("/static", StaticFiles(directory=dist), name="static")

    @app.get("/")
    async def ui_index():
        return FileResponse(index)


def run_server(cfg: Config, host: str = "127.0.0.1", port: int = 8321,
               out_path: str = "human_demos.jsonl") -> None:
    import uvicorn

    app = build_app(cfg, out_path=out_path)
    print(f"demonstration service for task {cfg.task_kind!r} on ws://{host}:{port}/ws")
    print(f"recordings append to {out_path}")
    uvicorn.run(app, host=host, port=port, log_level="warning")
