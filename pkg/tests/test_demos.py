"""Demonstration pipeline tests: scripted demonstrators, the two
augmentations, dataset splitting, normalization and file round-trips."""

import json
import math

import numpy as np
import pytest

from demobot.demos import (
    Demonstration,
    ImperfectionConfig,
    compute_stats,
    frequency_reduce,
    generate_demos,
    load_dataset,
    save_dataset,
    scripted_pick_place,
    scripted_push,
    shift_augment,
    split_dataset,
    training_inputs,
)
from demobot.demos.scripted import PushScript
from demobot.geometry import yaw_from_quat
from demobot.runtime import replay_demo
from demobot.sim import pick_place_task, push_task, reset, success


def synthetic_demo(n=16, task="pick-place", raw_id="syn.0", seed=0):
    rng = np.random.default_rng(seed)
    objects = np.zeros((n, 1, 7))
    grippers = np.zeros((n, 8))
    objects[:, 0, :3] = rng.uniform(-0.2, 0.2, (n, 3))
    objects[:, 0, 3:7] = [0, 0, 0, 1]
    grippers[:, :3] = rng.uniform(-0.2, 0.2, (n, 3))
    grippers[:, 3:7] = [0, 0, 0, 1]
    grippers[:, 7] = (rng.random(n) > 0.5).astype(float)
    return Demonstration(task=task, record_hz=33.0, objects=objects,
                         grippers=grippers, raw_id=raw_id)


class TestScriptedPickPlace:
    def test_perfect_config_succeeds_on_every_seed(self):
        task = pick_place_task()
        demos = generate_demos(task, 100, seed=5, cfg=ImperfectionConfig.perfect())
        assert all(d.outcome == "success" for d in demos)

    def test_forced_miss_with_no_retries_fails(self):
        task = pick_place_task()
        cfg = ImperfectionConfig(grasp_miss=1.0, drop_per_second=0.0,
                                 overpush=0.0, jitter_std=0.0, max_retries=0)
        rng = np.random.default_rng(1)
        env = reset(task, rng)
        demo = scripted_pick_place(env, rng, cfg)
        assert demo.outcome == "failure"

    def test_recorded_at_tick_rate(self):
        task = pick_place_task()
        rng = np.random.default_rng(2)
        env = reset(task, rng)
        demo = scripted_pick_place(env, rng, ImperfectionConfig())
        assert demo.record_hz == 33.0
        spacing = np.diff(demo.times)
        assert np.allclose(spacing, 1.0 / 33.0)

    def test_wrong_task_rejected(self):
        rng = np.random.default_rng(3)
        env = reset(push_task(), rng)
        with pytest.raises(ValueError):
            scripted_pick_place(env, rng, ImperfectionConfig())


class TestScriptedPush:
    def test_zero_imperfection_success_rate(self):
        task = push_task()
        demos = generate_demos(task, 100, seed=7, cfg=ImperfectionConfig.perfect())
        wins = sum(d.outcome == "success" for d in demos)
        assert wins >= 95

    def test_strategy_draw_is_balanced(self):
        task = push_task()
        rotate_first = 0
        for i in range(1000):
            rng = np.random.default_rng([11, i])
            env = reset(task, rng)
            script = PushScript(env, rng, ImperfectionConfig())
            rotate_first += script.strategy == "rotate-first"
        assert abs(rotate_first / 1000 - 0.5) < 0.05

    def test_planned_contacts_sit_on_the_box_rim(self):
        task = push_task()
        for i in range(50):
            rng = np.random.default_rng([13, i])
            env = reset(task, rng)
            script = PushScript(env, rng, ImperfectionConfig.perfect())
            stage, drive = script._plan_cycle(env)
            # the drive vector crosses the (inflated) box rim: its start sits
            # outside the footprint, its end strictly inside
            a, b = task.box_half
            r = task.gripper_radius
            yaw = yaw_from_quat(env.box[3:7])
            rot = np.array([[math.cos(yaw), math.sin(yaw)],
                            [-math.sin(yaw), math.cos(yaw)]])
            ls = rot @ (stage - env.box[:2])
            ld = rot @ (drive - env.box[:2])
            assert abs(ls[0]) >= a + r or abs(ls[1]) >= b + r
            assert abs(ld[0]) < a + r + 1e-9 and abs(ld[1]) < b + r + 1e-9


class TestShiftAugment:
    def test_table_ratio(self):
        demos = [synthetic_demo(raw_id=f"s.{i}", seed=i) for i in range(650)]
        shifted = []
        for d in demos:
            shifted.extend(shift_augment(d, 6))
        assert len(shifted) == 3900

    def test_original_copy_is_identical(self):
        demo = synthetic_demo(seed=3)
        copies = shift_augment(demo, 6)
        zero = [c for c in copies if c.aug.get("shift") == 0.0]
        assert len(zero) == 1
        assert np.array_equal(zero[0].objects, demo.objects)
        assert np.array_equal(zero[0].grippers, demo.grippers)

    def test_relative_transforms_preserved(self):
        demo = synthetic_demo(seed=4)
        for copy in shift_augment(demo, 6):
            rel = copy.grippers[:, :3] - copy.objects[:, 0, :3]
            rel0 = demo.grippers[:, :3] - demo.objects[:, 0, :3]
            assert np.allclose(rel, rel0, atol=1e-12)

    def test_offsets_distinct_and_inside_workspace(self):
        task = pick_place_task()
        demo = synthetic_demo(seed=5)
        copies = shift_augment(demo, 6, task)
        offsets = [c.aug["shift"] for c in copies]
        assert len(set(offsets)) == 6
        (x0, x1) = task.workspace[0]
        for c in copies:
            assert c.grippers[:, 0].min() >= x0
            assert c.grippers[:, 0].max() <= x1

    def test_push_demo_rejected(self):
        demo = synthetic_demo(task="push")
        with pytest.raises(ValueError):
            shift_augment(demo, 6)


class TestFrequencyReduce:
    def test_table_ratios(self):
        # 33 Hz -> 4 Hz gives k = 8 interleaved trajectories
        demos = [synthetic_demo(n=24, raw_id=f"r.{i}") for i in range(650)]
        lows = [s for d in demos for s in frequency_reduce(d)]
        assert len(lows) == 650 * 8
        push = [synthetic_demo(n=30, task="push", raw_id=f"p.{i}") for i in range(1614)]
        lows = [s for d in push for s in frequency_reduce(d)]
        assert len(lows) == 12912

    def test_interleaving_partition(self):
        demo = synthetic_demo(n=24, seed=6)
        subs = frequency_reduce(demo)
        assert len(subs) == 8
        assert all(len(s) == 3 for s in subs)
        # union of sub-trajectories is exactly the original multiset
        rows = np.concatenate([s.grippers for s in subs], axis=0)
        orig = demo.grippers
        assert np.array_equal(np.sort(rows, axis=0), np.sort(orig, axis=0))
        # within one sub-trajectory, source order is preserved
        assert np.array_equal(subs[2].grippers, demo.grippers[2::8])

    def test_unit_ratio_is_identity(self):
        demo = synthetic_demo(n=9, seed=7)
        out = frequency_reduce(demo, record_hz=4, train_hz=3)
        assert len(out) == 1
        assert np.array_equal(out[0].grippers, demo.grippers)

    def test_short_demo_flagged(self):
        demo = synthetic_demo(n=6, seed=8)
        out = frequency_reduce(demo)
        assert len(out) == 1
        assert out[0].aug.get("truncated") is True
        assert len(out[0]) >= 2

    def test_metadata_inherited(self):
        demo = synthetic_demo(n=24, seed=9)
        demo.outcome = "failure"
        subs = frequency_reduce(demo)
        assert all(s.outcome == "failure" and s.raw_id == demo.raw_id for s in subs)


class TestSplitDataset:
    def make_lows(self, n_raw=100):
        out = []
        for i in range(n_raw):
            raw = synthetic_demo(n=24, raw_id=f"raw.{i}", seed=i)
            out.extend(frequency_reduce(raw))
        return out

    def test_eighty_twenty_by_raw_demo(self):
        lows = self.make_lows(100)
        ds = split_dataset(lows, np.random.default_rng(0))
        train_ids = {d.raw_id for d in ds.train}
        val_ids = {d.raw_id for d in ds.val}
        assert len(train_ids) == 80
        assert len(val_ids) == 20

    def test_no_leakage_across_splits(self):
        lows = self.make_lows(40)
        ds = split_dataset(lows, np.random.default_rng(1))
        assert not ({d.raw_id for d in ds.train} & {d.raw_id for d in ds.val})

    def test_normalized_training_inputs_are_standardized(self):
        lows = self.make_lows(30)
        ds = split_dataset(lows, np.random.default_rng(2))
        rows = np.concatenate([training_inputs(d) for d in ds.train])
        normalized = ds.stats.normalize(rows)
        varying = rows.std(axis=0) >= 1e-8
        assert np.all(np.abs(normalized.mean(axis=0)) < 1e-9)
        assert np.all(np.abs(normalized[:, varying].std(axis=0) - 1.0) < 1e-9)

    def test_stats_come_from_training_split_only(self):
        lows = self.make_lows(20)
        ds = split_dataset(lows, np.random.default_rng(3))
        recomputed = compute_stats(ds.train)
        assert np.array_equal(recomputed.mean, ds.stats.mean)
        assert np.array_equal(recomputed.std, ds.stats.std)

    def test_too_few_demos_rejected(self):
        with pytest.raises(ValueError):
            split_dataset([synthetic_demo(raw_id="only")], np.random.default_rng(0))


class TestDatasetFiles:
    def test_round_trip_is_byte_identical(self, tmp_path):
        task = pick_place_task()
        demos = generate_demos(task, 3, seed=21, cfg=ImperfectionConfig())
        p1 = tmp_path / "a.jsonl"
        p2 = tmp_path / "b.jsonl"
        save_dataset(p1, demos)
        ds = load_dataset(p1)
        save_dataset(p2, ds.demos)
        assert p1.read_bytes() == p2.read_bytes()

    def test_schema_version_enforced(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text(json.dumps({"schema": "demobot.dataset", "version": 99}) + "\n")
        with pytest.raises(ValueError):
            load_dataset(path)
        path.write_text(json.dumps({"schema": "other"}) + "\n")
        with pytest.raises(ValueError):
            load_dataset(path)

    def test_values_survive_exactly(self, tmp_path):
        demo = synthetic_demo(seed=10)
        demo.grippers[0, 0] = 0.1 + 0.2  # classic non-representable decimal
        path = tmp_path / "exact.jsonl"
        save_dataset(path, [demo])
        loaded = load_dataset(path).demos[0]
        assert loaded.grippers[0, 0] == demo.grippers[0, 0]
        assert np.array_equal(loaded.objects, demo.objects)


class TestReplayClosure:
    @pytest.mark.parametrize("kind,seed", [("pick-place", 31), ("pick-place", 32),
                                           ("push", 33), ("push", 34)])
    def test_replayed_scripted_demo_reproduces_success(self, kind, seed):
        task = pick_place_task() if kind == "pick-place" else push_task()
        cfg = ImperfectionConfig()  # imperfections included: corrections replay too
        demos = generate_demos(task, 6, seed=seed, cfg=cfg)
        for demo in demos:
            if demo.outcome != "success":
                continue
            final = replay_demo(demo, task)
            assert success(final)
