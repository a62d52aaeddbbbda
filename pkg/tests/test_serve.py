"""Demonstration-collection service tests over a real websocket session."""

import json
import math

import numpy as np
import pytest
from starlette.testclient import TestClient

from demobot.config import Config, config_from_dict
from demobot.demos import load_dataset
from demobot.serve import build_app


def recv_until(ws, wanted, limit=400):
    """Read frames until one of type `wanted` arrives."""
    for _ in range(limit):
        msg = json.loads(ws.receive_text())
        if msg["type"] == wanted:
            return msg
    raise AssertionError(f"no {wanted!r} message within {limit} frames")


@pytest.fixture()
def client(tmp_path):
    cfg = config_from_dict({"seed": 123})
    app = build_app(cfg, out_path=str(tmp_path / "human.jsonl"))
    with TestClient(app) as tc:
        yield tc, tmp_path / "human.jsonl"


class TestSession:
    def test_hello_carries_scene_geometry(self, client):
        tc, _ = client
        with tc.websocket_connect("/ws") as ws:
            hello = json.loads(ws.receive_text())
            assert hello["type"] == "hello"
            assert hello["role"] == "pilot"
            scene = hello["scene"]
            assert scene["box_size"] == [0.10, 0.07, 0.07]
            assert scene["target_margin"] == 0.03
            assert scene["tick_hz"] == 33

    def test_state_stream_and_control(self, client):
        tc, _ = client
        with tc.websocket_connect("/ws") as ws:
            recv_until(ws, "hello")
            s0 = recv_until(ws, "state")
            before = np.array(s0["gripper"][:3])
            for _ in range(5):
                ws.send_text(json.dumps({"type": "control", "dx": 0.01}))
            # wait a few ticks for the motion to land
            for _ in range(20):
                s1 = recv_until(ws, "state")
            after = np.array(s1["gripper"][:3])
            assert after[0] > before[0]

    def test_grip_toggle(self, client):
        tc, _ = client
        with tc.websocket_connect("/ws") as ws:
            recv_until(ws, "hello")
            s0 = recv_until(ws, "state")
            ws.send_text(json.dumps({"type": "control", "grip_toggle": True}))
            for _ in range(10):
                s1 = recv_until(ws, "state")
                if s1["gripper"][7] != s0["gripper"][7]:
                    break
            assert s1["gripper"][7] != s0["gripper"][7]

    def test_record_save_and_fresh_instance(self, client):
        tc, out_path = client
        with tc.websocket_connect("/ws") as ws:
            recv_until(ws, "hello")
            first = recv_until(ws, "state")
            ws.send_text(json.dumps({"type": "begin_demo"}))
            for _ in range(8):
                ws.send_text(json.dumps({"type": "control", "dy": 0.005}))
                recv_until(ws, "state")
            ws.send_text(json.dumps({"type": "end_demo", "outcome": "failure"}))
            saved = recv_until(ws, "saved")
            assert saved["raw_id"].startswith("pick-place.h123.")
            fresh = recv_until(ws, "state")
            # a new randomized instance: the box moved
            assert not np.allclose(np.array(fresh["objects"][0][:2]),
                                   np.array(first["objects"][0][:2]))
        ds = load_dataset(out_path)
        assert len(ds.demos) == 1
        demo = ds.demos[0]
        assert demo.source == "human"
        assert demo.outcome == "failure"
        assert demo.record_hz == 33.0
        assert len(demo) >= 2

    def test_end_without_begin_is_an_error(self, client):
        tc, _ = client
        with tc.websocket_connect("/ws") as ws:
            recv_until(ws, "hello")
            ws.send_text(json.dumps({"type": "end_demo", "outcome": "success"}))
            msg = recv_until(ws, "error")
            assert "no demonstration" in msg["message"]

    def test_malformed_message_reports_error(self, client):
        tc, _ = client
        with tc.websocket_connect("/ws") as ws:
            recv_until(ws, "hello")
            ws.send_text("this is not json")
            msg = recv_until(ws, "error")
            assert "malformed" in msg["message"]

    def test_spectators_are_read_only(self, client):
        tc, _ = client
        with tc.websocket_connect("/ws") as pilot:
            recv_until(pilot, "hello")
            with tc.websocket_connect("/ws") as spectator:
                hello = json.loads(spectator.receive_text())
                assert hello["role"] == "spectator"
                s0 = recv_until(spectator, "state")
                g0 = np.array(s0["gripper"][:3])
                for _ in range(5):
                    spectator.send_text(json.dumps({"type": "control", "dx": 0.05}))
                for _ in range(15):
                    s1 = recv_until(spectator, "state")
                assert np.allclose(np.array(s1["gripper"][:3]), g0, atol=1e-12)


class TestRoundTrip:
    def test_recorded_human_demo_trains(self, client):
        """A piloted session produces a demo that merges with scripted data
        and trains without error."""
        tc, out_path = client
        with tc.websocket_connect("/ws") as ws:
            recv_until(ws, "hello")
            state = recv_until(ws, "state")
            ws.send_text(json.dumps({"type": "begin_demo"}))
            # drive a crude approach toward the box at a fixed rate
            for _ in range(120):
                state = recv_until(ws, "state")
                box = np.array(state["objects"][0][:3])
                grip = np.array(state["gripper"][:3])
                delta = np.clip(box - grip, -0.012, 0.012)
                ws.send_text(json.dumps({"type": "control", "dx": delta[0],
                                         "dy": delta[1], "dz": delta[2]}))
                if np.linalg.norm(box - grip) < 0.02:
                    break
            ws.send_text(json.dumps({"type": "end_demo", "outcome": "success"}))
            recv_until(ws, "saved")

        from demobot.demos import frequency_reduce, generate_demos, split_dataset
        from demobot.nn import NetworkSpec
        from demobot.sim import pick_place_task
        from demobot.training import TrainConfig, train

        human = load_dataset(out_path).demos
        scripted = generate_demos(pick_place_task(), 8, seed=77)
        lows = [s for d in human + scripted for s in frequency_reduce(d)]
        ds = split_dataset(lows, np.random.default_rng(0))
        spec = NetworkSpec(body="lstm", layer_widths=(8,), head="mdn",
                           input_dim=15, output_dim=8, mixture_count=3)
        ckpt, stats = train(ds, spec, TrainConfig(max_epochs=2, seed=1))
        assert stats.epochs == 2
        assert math.isfinite(ckpt.val_loss)
