"""Command-line operator surface.

    demobot gen-demos --task push --count 600 --seed 7 --out raw.jsonl
    demobot augment   --in raw.jsonl --out aug.jsonl
    demobot train     --data aug.jsonl --arch lstm-mdn --out ctl.ckpt
    demobot eval      --checkpoint ctl.ckpt --trials 20 --seed 0 --out report.jsonl
    demobot replay    --in raw.jsonl --index 0
    demobot serve     --port 8321 --out human.jsonl

Every command is reproducible from (config file, seed); reports embed the
config digest and any flag overrides.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

import numpy as np

from . import runtime
from .config import Config, load_config
from .demos import (
    ImperfectionConfig,
    augment_pipeline,
    generate_demos,
    load_dataset,
    save_dataset,
    split_dataset,
    save_dataset_obj,
)
from .nn.network import CONTROLLER_VARIANTS, controller_spec
from .runtime import evaluate, replay_demo
from .sim import PICK_PLACE, make_task, observe, success
from .training import load_checkpoint, save_checkpoint, train, validate


def _load_config(args) -> tuple:
    cfg = load_config(args.config) if args.config else Config()
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
        cfg.seed = args.seed
    if getattr(args, "task", None):
        overrides["task.kind"] = args.task
        cfg.task_kind = args.task
    return cfg, overrides


def cmd_gen_demos(args) -> int:
    cfg, overrides = _load_config(args)
    count = args.count if args.count is not None else cfg.demos.count
    imperfection = ImperfectionConfig.perfect() if args.perfect else cfg.imperfection
    task = cfg.task()
    demos = generate_demos(task, count, cfg.seed, imperfection)
    if not cfg.demos.include_failures and not args.perfect:
        demos = [d for d in demos if d.outcome == "success"]
    save_dataset(args.out, demos)
    ok = sum(d.outcome == "success" for d in demos)
    print(f"wrote {len(demos)} demonstrations ({ok} successful) to {args.out}"
          f" [config {cfg.digest()[:12]}{' overrides ' + str(overrides) if overrides else ''}]")
    return 0


def cmd_augment(args) -> int:
    cfg, _ = _load_config(args)
    ds = load_dataset(args.inp)
    if ds.augmented:
        print("error: input dataset is already augmented", file=sys.stderr)
        return 1
    if not ds.demos:
        print("error: empty dataset", file=sys.stderr)
        return 1
    kind = ds.demos[0].task
    task = make_task(kind)
    shift = args.shift_count if args.shift_count is not None else cfg.demos.shift_count
    if kind != PICK_PLACE:
        shift = None  # shifting needs a free placement axis; push has none
    out = augment_pipeline(ds.demos, task, shift_count=shift,
                           record_hz=cfg.demos.record_hz, train_hz=cfg.demos.train_hz)
    save_dataset(args.out, out,
                 augmented={"shift": bool(shift and shift > 1), "frequency": True})
    print(f"augmented {len(ds.demos)} -> {len(out)} demonstrations ({args.out})")
    return 0


def cmd_train(args) -> int:
    cfg, overrides = _load_config(args)
    if args.arch not in CONTROLLER_VARIANTS:
        print(f"error: unknown architecture {args.arch!r} "
              f"(choose from {sorted(CONTROLLER_VARIANTS)})", file=sys.stderr)
        return 1
    ds = load_dataset(args.data)
    if not ds.split:
        ds = split_dataset(ds.demos, np.random.default_rng(cfg.seed))
    kind = ds.demos[0].task
    spec = controller_spec(args.arch)
    tcfg = dataclasses.replace(cfg.training, seed=cfg.seed)
    if args.max_epochs is not None:
        tcfg.max_epochs = args.max_epochs
    ckpt, stats = train(ds, spec, tcfg, task=kind, config_digest=cfg.digest(),
                        log=print if args.verbose else None)
    save_checkpoint(args.out, ckpt)
    report = {
        "type": "train_report",
        "arch": args.arch,
        "task": kind,
        "config_digest": cfg.digest(),
        "overrides": overrides,
        "seed": cfg.seed,
        "epochs": stats.epochs,
        "best_epoch": stats.best_epoch,
        "decay": stats.decay,
        "val_loss": ckpt.val_loss,
        "train_losses": stats.train_losses,
        "val_losses": stats.val_losses,
        "wall_time_s": round(stats.wall_time, 3),
    }
    if args.report:
        with open(args.report, "w") as fh:
            fh.write(json.dumps(report) + "\n")
    print(f"trained {args.arch} on {kind}: {stats.epochs} epochs "
          f"(best {stats.best_epoch}), val loss {ckpt.val_loss:+.5f} -> {args.out}")
    return 0


def _format_table(rows) -> str:
    """Fixed-width comparison table, one row per controller."""
    tasks = ["pick-place", "push"]
    header = f"{'Controller':<18}{'Pick and place':>16}{'Push to pose':>16}"
    lines = [header, "-" * len(header)]
    for name in sorted(rows):
        cells = rows[name]
        line = f"{name:<18}"
        for t in tasks:
            line += f"{cells[t]:>15.0%} " if t in cells else f"{'-':>15} "
        lines.append(line.rstrip())
    return "\n".join(lines)


def cmd_eval(args) -> int:
    cfg, overrides = _load_config(args)
    records = []
    table: dict = {}
    traces = []
    for path in args.checkpoint:
        ckpt = load_checkpoint(path)
        task = make_task(ckpt.task or cfg.task_kind)
        ev = evaluate(ckpt, task, trials=args.trials, base_seed=cfg.seed,
                      cfg=cfg.execution, record_traces=bool(args.traces_out))
        if args.traces_out:
            traces.extend(r.trace_demo(task, r.initial_obs) for r in ev.results)
        name = f"{ckpt.spec.body}-{ckpt.spec.head}"
        table.setdefault(name, {})[task.kind] = ev.success_rate
        records.append({
            "type": "controller",
            "checkpoint": str(path),
            "name": name,
            "task": task.kind,
            "success_rate": ev.success_rate,
            "trials": [
                {"seed": r.seed, "success": r.success,
                 "elapsed_s": round(r.elapsed, 4), "waypoints": r.waypoints,
                 "waypoint_timeouts": r.waypoint_timeouts,
                 "failure_reason": r.failure_reason}
                for r in ev.results
            ],
        })
    header = {"type": "eval_report", "config_digest": cfg.digest(),
              "overrides": overrides, "seed": cfg.seed, "trials_per_controller": args.trials}
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(json.dumps(header) + "\n")
            for rec in records:
                fh.write(json.dumps(rec) + "\n")
    if args.traces_out:
        save_dataset(args.traces_out, traces)
    print(_format_table(table))
    if args.out:
        print(f"report: {args.out}")
    return 0


def cmd_replay(args) -> int:
    ds = load_dataset(args.inp)
    try:
        demo = ds.demos[args.index]
    except IndexError:
        print(f"error: index {args.index} out of range ({len(ds.demos)} demos)",
              file=sys.stderr)
        return 1
    task = make_task(demo.task)
    if abs(demo.record_hz - task.tick_hz) > 1e-9:
        print("error: only tick-rate recordings can be replayed", file=sys.stderr)
        return 1
    print(f"replaying {demo.raw_id} ({demo.task}, {len(demo)} waypoints, "
          f"recorded outcome {demo.outcome})")

    every = max(1, len(demo) // 25)

    def on_tick(t, env):
        if t % every == 0 or t == len(demo) - 1:
            box = env.box
            g = env.gripper
            print(f"  t={env.clock:6.2f}s box=({box[0]:+.3f},{box[1]:+.3f},{box[2]:+.3f}) "
                  f"gripper=({g[0]:+.3f},{g[1]:+.3f},{g[2]:+.3f}) "
                  f"open={int(g[7] >= 0.5)} attached={env.attached is not None}")

    final = replay_demo(demo, task, on_tick=on_tick)
    outcome = "success" if success(final) else "failure"
    print(f"replay outcome: {outcome} (recorded: {demo.outcome})")
    if args.export:
        save_dataset(args.export, [demo])
        print(f"exported to {args.export}")
    return 0 if outcome == demo.outcome else 2


def cmd_serve(args) -> int:
    from .serve import run_server

    cfg, _ = _load_config(args)
    run_server(cfg, host=args.host, port=args.port, out_path=args.out)
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="demobot",
                                     description="train and evaluate gripper "
                                                 "controllers from demonstrations")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, seed=True, task=False):
        p.add_argument("--config", help="JSON configuration file")
        if seed:
            p.add_argument("--seed", type=int, default=None)
        if task:
            p.add_argument("--task", choices=["pick-place", "push"], default=None)

    p = sub.add_parser("gen-demos", help="generate scripted demonstrations")
    common(p, task=True)
    p.add_argument("--count", type=int, default=None)
    p.add_argument("--perfect", action="store_true",
                   help="disable every injected imperfection")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_demos)

    p = sub.add_parser("augment", help="shift and frequency-reduce a dataset")
    common(p, seed=False)
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--shift-count", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("train", help="train a controller on a dataset")
    common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--arch", required=True,
                   help="ff-mse | lstm-mse | ff-mdn | lstm-mdn")
    p.add_argument("--max-epochs", type=int, default=None)
    p.add_argument("--report", help="write a JSON training report here")
    p.add_argument("--verbose", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="closed-loop evaluation of checkpoints")
    common(p)
    p.add_argument("--checkpoint", action="append", required=True)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--out", help="write a line-delimited report here")
    p.add_argument("--traces-out",
                   help="export every trial trace as a dataset file (replayable)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("replay", help="replay a recorded demonstration")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--index", type=int, default=0)
    p.add_argument("--export", help="re-export the demo to this path")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("serve", help="demonstration-collection service")
    common(p)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8321)
    p.add_argument("--out", default="human_demos.jsonl",
                   help="dataset file to append recorded demos to")
    p.set_defaults(func=cmd_serve)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
