"""Acceptance suite.

Each test implements one acceptance criterion at its stated tolerance and
prints a single PASS/FAIL line. The architecture-comparison and recovery
experiments train full controllers; their checkpoints are cached under
.accept_cache/ (keyed by corpus and architecture), so a warm re-run takes
minutes while a cold run trains everything from scratch.

Run with:  pytest tests/test_acceptance.py -s
"""

import hashlib
import json
import math
import sys
from pathlib import Path

import numpy as np
import pytest
from scipy.integrate import quad

from demobot import mdn
from demobot.demos import (
    Demonstration,
    ImperfectionConfig,
    augment_pipeline,
    frequency_reduce,
    generate_demos,
    shift_augment,
    split_dataset,
)
from demobot.nn import NetworkSpec, controller_spec, init_params
from demobot.nn.network import backward_sequence, forward_sequence
from demobot.runtime import evaluate, perturb_and_rollout
from demobot.sim import make_task
from demobot.training import (
    TrainConfig,
    load_checkpoint,
    save_checkpoint,
    train,
    train_on_windows,
)
from demobot.training.windows import Window

CACHE = Path(__file__).resolve().parent.parent / ".accept_cache"
CACHE_TAG = "v1"

CORPUS_SEEDS = {"pick-place": 100, "push": 200, "pick-place-perfect": 300}
TRAIN_SEED = 3
EVAL_SEED = 9000
PERTURB_SEED = 9500
TRIALS = 20


def report(ok: bool, name: str, detail: str) -> bool:
    line = f"{'PASS' if ok else 'FAIL'}  {name}: {detail}"
    print(line, file=sys.stderr, flush=True)
    return ok


# ---------------------------------------------------------------------------
# shared trained controllers (disk-cached; deterministic given seeds)

def corpus(kind: str, perfect: bool = False):
    task = make_task(kind)
    seed = CORPUS_SEEDS[kind + ("-perfect" if perfect else "")]
    cfg = ImperfectionConfig.perfect() if perfect else ImperfectionConfig()
    raw = generate_demos(task, 600, seed=seed, cfg=cfg)
    low = augment_pipeline(raw, task)  # frequency reduction; see ledger on shift
    return split_dataset(low, np.random.default_rng(0))


def trained(arch: str, kind: str, perfect: bool = False):
    name = f"{CACHE_TAG}-{arch}-{kind}{'-perfect' if perfect else ''}.ckpt"
    path = CACHE / name
    if path.exists():
        return load_checkpoint(path)
    ds = corpus(kind, perfect)
    spec = controller_spec(arch)
    cfg = TrainConfig(seed=TRAIN_SEED)
    print(f"[acceptance] training {arch} on {kind}"
          f"{' (perfect demos)' if perfect else ''} ...", file=sys.stderr, flush=True)
    ckpt, stats = train(ds, spec, cfg, task=kind)
    CACHE.mkdir(exist_ok=True)
    save_checkpoint(path, ckpt)
    print(f"[acceptance]   {stats.epochs} epochs (best {stats.best_epoch}), "
          f"val {ckpt.val_loss:+.4f}, {stats.wall_time:.0f}s", file=sys.stderr, flush=True)
    return load_checkpoint(path)


# ---------------------------------------------------------------------------
# exact property criteria

def test_gradient_exactness():
    """Analytic mixture-NLL and full BPTT gradients match central finite
    differences (f64, eps = 1e-5) within 1e-4 over 100+ random setups."""
    eps = 1e-5

    def fd_ok(analytic, numeric):
        if abs(analytic - numeric) < 1e-9:
            return 0.0
        return abs(analytic - numeric) / max(abs(analytic), abs(numeric))

    rng = np.random.default_rng(42)
    worst_mdn = 0.0
    configs = 0
    for m in (1, 2, 5, 20):
        for c in (1, 3, 8):
            for _ in range(9):
                raw = rng.normal(scale=1.5, size=(c + 2) * m)
                y = rng.normal(size=c)
                params = mdn.split_activations(raw, m, c)
                _, grad = mdn.nll_loss(params, y)
                idx = rng.choice(raw.size, size=min(8, raw.size), replace=False)
                for i in idx:
                    rp = raw.copy(); rp[i] += eps
                    rm = raw.copy(); rm[i] -= eps
                    lp, _ = mdn.nll_loss(mdn.split_activations(rp, m, c), y)
                    lm, _ = mdn.nll_loss(mdn.split_activations(rm, m, c), y)
                    worst_mdn = max(worst_mdn, fd_ok(grad[i], (lp - lm) / (2 * eps)))
                configs += 1
    assert configs >= 100

    worst_lstm = 0.0
    net_configs = 0
    for trial in range(100):
        layer_rng = np.random.default_rng([7, trial])
        widths = tuple(int(w) for w in layer_rng.integers(2, 6, layer_rng.integers(1, 3)))
        spec = NetworkSpec(body="lstm", layer_widths=widths, head="mse",
                           input_dim=int(layer_rng.integers(2, 5)),
                           output_dim=int(layer_rng.integers(1, 4)))
        params = init_params(spec, layer_rng)
        for k in params:
            params[k] *= 4.0
        total = sum(p.size for p in params.values())
        assert total <= 500
        T = int(layer_rng.integers(2, 9))
        X = layer_rng.normal(size=(T, 1, spec.input_dim))
        Y = layer_rng.normal(size=(T, 1, spec.output_dim))

        def loss():
            raw, cache = forward_sequence(spec, params, X)
            diff = raw - Y
            return float((diff * diff).mean()), 2.0 * diff / diff.size, cache

        _, d_raw, cache = loss()
        grads = backward_sequence(spec, params, cache, d_raw)
        for name, g in grads.items():
            flat_p = params[name].ravel()
            flat_g = g.ravel()
            for i in layer_rng.choice(flat_p.size, size=min(4, flat_p.size), replace=False):
                old = flat_p[i]
                flat_p[i] = old + eps
                lp = loss()[0]
                flat_p[i] = old - eps
                lm = loss()[0]
                flat_p[i] = old
                worst_lstm = max(worst_lstm, fd_ok(flat_g[i], (lp - lm) / (2 * eps)))
        net_configs += 1
    assert net_configs >= 100

    ok = worst_mdn < 1e-4 and worst_lstm < 1e-4
    assert report(ok, "gradient-exactness",
                  f"mixture-NLL max rel err {worst_mdn:.2e}, "
                  f"BPTT max rel err {worst_lstm:.2e} (tolerance 1e-4)")


def test_pipeline_ratios():
    """650 pick demos -> 3900 shifted -> 31200 low-frequency;
    1614 push demos -> 12912 low-frequency."""
    def synthetic(task, n, length=24):
        rng = np.random.default_rng(1)
        out = []
        for i in range(n):
            objects = np.zeros((length, 1, 7))
            grippers = np.zeros((length, 8))
            objects[:, 0, :3] = rng.uniform(-0.1, 0.1, (length, 3))
            objects[:, 0, 6] = 1.0
            grippers[:, :3] = rng.uniform(-0.1, 0.1, (length, 3))
            grippers[:, 6] = 1.0
            out.append(Demonstration(task=task, record_hz=33.0, objects=objects,
                                     grippers=grippers, raw_id=f"{task}.{i}"))
        return out

    pick = synthetic("pick-place", 650)
    shifted = [c for d in pick for c in shift_augment(d, 6)]
    low_pick = [s for d in shifted for s in frequency_reduce(d)]
    push = synthetic("push", 1614)
    low_push = [s for d in push for s in frequency_reduce(d)]
    ok = (len(shifted) == 3900 and len(low_pick) == 31200 and len(low_push) == 12912)
    assert report(ok, "pipeline-ratios",
                  f"650 -> {len(shifted)} -> {len(low_pick)}; 1614 -> {len(low_push)}")


def test_mixture_correctness():
    """Simplex and positivity constraints for a million random raw
    activations; unit integral at c=1; sampling frequencies match alphas."""
    m, c = 20, 8
    rng = np.random.default_rng(11)
    worst_sum = 0.0
    min_sigma = np.inf
    remaining = 1_000_000
    while remaining > 0:
        n = min(100_000, remaining)
        raw = rng.normal(scale=3.0, size=(n, (c + 2) * m))
        mus, width_slots, mix_slots = mdn.split_raw(raw, m, c)
        shifted = mix_slots - mix_slots.max(axis=1, keepdims=True)
        alphas = np.exp(shifted)
        alphas /= alphas.sum(axis=1, keepdims=True)
        worst_sum = max(worst_sum, float(np.abs(alphas.sum(axis=1) - 1.0).max()))
        min_sigma = min(min_sigma, float(np.maximum(np.exp(width_slots), 1e-6).min()))
        remaining -= n

    total, _ = quad(lambda y: mdn.kernel_density([y], [0.3], 0.7), 0.3 - 8 * 0.7, 0.3 + 8 * 0.7)
    integral_err = abs(total - 1.0)

    params = mdn.split_activations(rng.normal(size=(1 + 2) * 6), 6, 1)
    params.mus[:, 0] = np.arange(6) * 100.0  # separate the kernels
    params.sigmas[:] = 1e-9
    draws = np.array([mdn.sample(params, rng)[0] for _ in range(100_000)])
    freqs = np.array([np.abs(draws - k * 100.0).__lt__(1.0).mean() for k in range(6)])
    freq_err = float(np.abs(freqs - params.alphas).max())

    ok = worst_sum <= 1e-12 and min_sigma > 0 and integral_err < 1e-6 and freq_err < 0.01
    assert report(ok, "mixture-correctness",
                  f"max |sum(alpha)-1| {worst_sum:.1e} over 1e6 draws, "
                  f"c=1 integral err {integral_err:.1e}, "
                  f"sampling freq err {freq_err:.4f}")


def test_determinism():
    """(seed, config) fully determines dataset files, checkpoints and
    evaluation outcomes across two independent runs."""
    import tempfile

    from demobot.cli import main

    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        config = tmp / "config.json"
        config.write_text(json.dumps({
            "seed": 77,
            "demos": {"count": 12},
            "training": {"max_epochs": 3},
        }))

        digests = {"data": [], "ckpt": [], "eval": []}
        for run in ("a", "b"):
            raw = tmp / f"raw-{run}.jsonl"
            assert main(["gen-demos", "--config", str(config), "--out", str(raw)]) == 0
            aug = tmp / f"aug-{run}.jsonl"
            assert main(["augment", "--config", str(config), "--in", str(raw),
                         "--shift-count", "1", "--out", str(aug)]) == 0
            ckpt = tmp / f"ctl-{run}.ckpt"
            assert main(["train", "--config", str(config), "--data", str(aug),
                         "--arch", "lstm-mdn", "--out", str(ckpt)]) == 0
            rep = tmp / f"rep-{run}.jsonl"
            assert main(["eval", "--config", str(config), "--checkpoint", str(ckpt),
                         "--trials", "3", "--out", str(rep)]) == 0
            digests["data"].append(hashlib.sha256(raw.read_bytes()).hexdigest())
            digests["ckpt"].append(hashlib.sha256(ckpt.read_bytes()).hexdigest())
            trials = [json.loads(l) for l in rep.read_text().splitlines()][1]["trials"]
            digests["eval"].append(json.dumps(trials, sort_keys=True))

    ok = all(v[0] == v[1] for v in digests.values())
    assert report(ok, "determinism",
                  f"dataset digests equal: {digests['data'][0] == digests['data'][1]}, "
                  f"checkpoint digests equal: {digests['ckpt'][0] == digests['ckpt'][1]}, "
                  f"per-trial outcomes equal: {digests['eval'][0] == digests['eval'][1]}")


def test_bimodality_pathology():
    """On a 1-D bimodal dataset the trained mixture head samples two clusters
    at -1/+1 while the trained squared-error head predicts the useless mean."""
    length, n_seq = 6, 400
    rng = np.random.default_rng(5)

    def windows(count, offset=0):
        # the input stream carries no information about the target's sign,
        # so both heads face a perfectly bimodal conditional distribution
        out = []
        for i in range(count):
            sign = 1.0 if (i + offset) % 2 == 0 else -1.0
            inputs = rng.normal(size=(length, 1))
            targets = np.full((length, 1), sign) + rng.normal(scale=0.01, size=(length, 1))
            out.append(Window(inputs=inputs, targets=targets,
                              mask=np.ones(length), length=length))
        return out

    train_w = windows(n_seq)
    val_w = windows(80, offset=1)

    mdn_spec = NetworkSpec(body="lstm", layer_widths=(16,), head="mdn",
                           input_dim=1, output_dim=1, mixture_count=5,
                           unroll_limit=length)
    mdn_ckpt, _ = train_on_windows(train_w, val_w, mdn_spec,
                                   TrainConfig(max_epochs=400, seed=2, patience=60))
    mse_spec = NetworkSpec(body="feedforward", layer_widths=(32,), head="mse",
                           input_dim=1, output_dim=1, unroll_limit=length)
    mse_ckpt, _ = train_on_windows(train_w, val_w, mse_spec,
                                   TrainConfig(max_epochs=400, seed=2, patience=60))

    zero_input = np.zeros((length, 1, 1))
    raw_mdn, _ = forward_sequence(mdn_spec, mdn_ckpt.params, zero_input)
    params = mdn.split_activations(raw_mdn[2, 0], 5, 1)
    draw_rng = np.random.default_rng(9)
    samples = np.array([mdn.sample(params, draw_rng)[0] for _ in range(2000)])
    lo_mass = float(np.mean(np.abs(samples + 1.0) <= 0.15))
    hi_mass = float(np.mean(np.abs(samples - 1.0) <= 0.15))

    raw_mse, _ = forward_sequence(mse_spec, mse_ckpt.params, zero_input)
    mse_out = float(raw_mse[2, 0, 0])

    mixture_mean = float(mdn.mixture_mean(params)[0])
    ok = lo_mass >= 0.35 and hi_mass >= 0.35 and abs(mse_out) <= 0.15
    assert report(ok, "bimodality-pathology",
                  f"mixture sample mass near -1: {lo_mass:.2f}, near +1: {hi_mass:.2f} "
                  f"(need >= 0.35 each); squared-error output {mse_out:+.3f} "
                  f"(|.| <= 0.15); mixture mean {mixture_mean:+.3f}")


# ---------------------------------------------------------------------------
# trained-controller criteria (slow; cached)

@pytest.fixture(scope="module")
def comparison():
    rates = {}
    for arch in ("ff-mse", "lstm-mse", "ff-mdn", "lstm-mdn"):
        ckpt = trained(arch, "push")
        ev = evaluate(ckpt, make_task("push"), trials=TRIALS, base_seed=EVAL_SEED)
        rates[(arch, "push")] = ev.success_rate
    ckpt = trained("lstm-mdn", "pick-place")
    ev = evaluate(ckpt, make_task("pick-place"), trials=TRIALS, base_seed=EVAL_SEED)
    rates[("lstm-mdn", "pick-place")] = ev.success_rate
    return rates


def test_architecture_ordering(comparison):
    """Recurrent mixture controller clears both tasks; the feedforward
    squared-error controller cannot push."""
    rates = comparison
    lines = ", ".join(f"{a}/{t[:4]}: {r:.0%}" for (a, t), r in sorted(rates.items()))
    pick = rates[("lstm-mdn", "pick-place")]
    push = rates[("lstm-mdn", "push")]
    ffmse = rates[("ff-mse", "push")]
    ok = (pick >= 0.80 and push >= 0.50 and (push - ffmse) >= 0.30 and ffmse <= 0.20)
    assert report(ok, "architecture-ordering",
                  f"{lines} | need pick>=80%, push>=50%, gap>=30pp, ff-mse<=20%")


def test_self_correction(comparison):
    """A controller trained with corrected mistakes in its data recovers from
    a mid-carry box displacement far more often than one trained only on
    perfect demonstrations."""
    task = make_task("pick-place")
    offset = np.array([0.07, -0.11])
    rates = {}
    for label, perfect in (("imperfect", False), ("perfect", True)):
        ckpt = trained("lstm-mdn", "pick-place", perfect=perfect)
        wins = 0
        for i in range(TRIALS):
            r = perturb_and_rollout(ckpt, task, seed=PERTURB_SEED + i,
                                    offset=offset, trigger_step=6,
                                    require_carry=True)
            wins += r.success
        rates[label] = wins / TRIALS
    ok = rates["imperfect"] >= rates["perfect"] + 0.15
    assert report(ok, "self-correction",
                  f"recovery with corrections in training data: {rates['imperfect']:.0%}, "
                  f"without: {rates['perfect']:.0%} (need >= 15pp advantage)")
