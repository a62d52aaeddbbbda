"""Self-describing binary checkpoints.

Layout: magic "DBCK", u32 major version, u64 header length, UTF-8 JSON
header (network spec, task, seed, config digest, validation loss,
normalization statistics, tensor order), then one block per tensor:
u16 name length, name bytes, u8 rank, u32 dims, IEEE-754 little-endian
float32 data. Training math runs in float64; storage quantizes to float32,
and the recorded validation loss is computed with the quantized weights so
reloading reproduces it exactly.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass, asdict

import numpy as np

from ..demos.dataset import NormStats
from ..nn.network import NetworkSpec

MAGIC = b"DBCK"
FORMAT_VERSION = 1


@dataclass
class Checkpoint:
    spec: NetworkSpec
    params: dict
    stats: NormStats | None
    seed: int
    config_digest: str
    val_loss: float
    task: str = ""

    def quantized(self) -> "Checkpoint":
        """Round-trip every tensor through float32 (the storage precision)."""
        params = {k: v.astype("<f4").astype(np.float64) for k, v in self.params.items()}
        return Checkpoint(spec=self.spec, params=params, stats=self.stats,
                          seed=self.seed, config_digest=self.config_digest,
                          val_loss=self.val_loss, task=self.task)


def _spec_to_json(spec: NetworkSpec) -> dict:
    d = asdict(spec)
    d["layer_widths"] = list(spec.layer_widths)
    return d


def _spec_from_json(d: dict) -> NetworkSpec:
    d = dict(d)
    d["layer_widths"] = tuple(d["layer_widths"])
    return NetworkSpec(**d)


def save_checkpoint(path, ckpt: Checkpoint) -> None:
    names = sorted(ckpt.params)
    header = {
        "format_version": FORMAT_VERSION,
        "spec": _spec_to_json(ckpt.spec),
        "task": ckpt.task,
        "seed": ckpt.seed,
        "config_digest": ckpt.config_digest,
        "val_loss": ckpt.val_loss,
        "stats": None if ckpt.stats is None else ckpt.stats.to_json(),
        "tensors": names,
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", FORMAT_VERSION))
        fh.write(struct.pack("<Q", len(blob)))
        fh.write(blob)
        for name in names:
            arr = np.ascontiguousarray(ckpt.params[name], dtype="<f4")
            encoded = name.encode("utf-8")
            fh.write(struct.pack("<H", len(encoded)))
            fh.write(encoded)
            fh.write(struct.pack("<B", arr.ndim))
            fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            fh.write(arr.tobytes())


def load_checkpoint(path) -> Checkpoint:
    with open(path, "rb") as fh:
        if fh.read(4) != MAGIC:
            raise ValueError(f"{path}: not a checkpoint file")
        (version,) = struct.unpack("<I", fh.read(4))
        if version != FORMAT_VERSION:
            raise ValueError(f"{path}: unsupported checkpoint version {version}")
        (hlen,) = struct.unpack("<Q", fh.read(8))
        header = json.loads(fh.read(hlen).decode("utf-8"))
        params = {}
        for expected in header["tensors"]:
            (nlen,) = struct.unpack("<H", fh.read(2))
            name = fh.read(nlen).decode("utf-8")
            if name != expected:
                raise ValueError(f"{path}: tensor order mismatch ({name} != {expected})")
            (ndim,) = struct.unpack("<B", fh.read(1))
            shape = struct.unpack(f"<{ndim}I", fh.read(4 * ndim))
            count = int(np.prod(shape)) if ndim else 1
            data = np.frombuffer(fh.read(4 * count), dtype="<f4").reshape(shape)
            if not np.all(np.isfinite(data)):
                raise ValueError(f"{path}: non-finite values in tensor {name}")
            params[name] = data.astype(np.float64)
    stats = None if header["stats"] is None else NormStats.from_json(header["stats"])
    return Checkpoint(spec=_spec_from_json(header["spec"]), params=params,
                      stats=stats, seed=header["seed"],
                      config_digest=header["config_digest"],
                      val_loss=header["val_loss"], task=header.get("task", ""))


def checkpoint_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()
