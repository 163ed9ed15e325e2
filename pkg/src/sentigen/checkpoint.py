"""Binary checkpoint format for model parameters.

Layout: magic bytes ``DDCK``, one version byte (1), a little-endian uint32
length prefix followed by a UTF-8 JSON manifest, then the raw tensor data.
The manifest carries the model kind, the architecture dimensions and one
(name, shape, offset) entry per tensor; data is little-endian float32
concatenated in manifest order, offsets relative to the data section.
"""
from __future__ import annotations

import json
import struct

import numpy as np

from .errors import CheckpointFormatError, ModelMismatchError
from .model import ModelParams, init_params, param_layout

MAGIC = b"DDCK"
VERSION = 1


def save_checkpoint(params: ModelParams, path) -> None:
    entries = []
    offset = 0
    blobs = []
    for name, tensor in params.tensors.items():
        blob = np.ascontiguousarray(tensor.data, dtype="<f4").tobytes()
        entries.append({"name": name, "shape": list(tensor.shape), "offset": offset})
        offset += len(blob)
        blobs.append(blob)
    manifest = {
        "kind": params.kind,
        "emb_dim": params.emb_dim,
        "hidden": params.hidden,
        "post_vocab": params.post_vocab,
        "resp_vocab": params.resp_vocab,
        "tensors": entries,
    }
    payload = json.dumps(manifest, separators=(",", ":"), sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(bytes([VERSION]))
        fh.write(struct.pack("<I", len(payload)))
        fh.write(payload)
        for blob in blobs:
            fh.write(blob)


def read_manifest(path) -> dict:
    with open(path, "rb") as fh:
        head = fh.read(5)
        if len(head) < 5 or head[:4] != MAGIC:
            raise CheckpointFormatError(f"{path}: bad magic bytes")
        if head[4] != VERSION:
            raise CheckpointFormatError(f"{path}: unsupported version {head[4]}")
        (length,) = struct.unpack("<I", fh.read(4))
        manifest = json.loads(fh.read(length).decode("utf-8"))
    manifest["_data_start"] = 9 + length
    return manifest


def load_checkpoint(path, expected_kind: str | None = None) -> ModelParams:
    """Rebuild parameters from a checkpoint, validating every tensor name
    and shape against the architecture implied by the manifest dims."""
    manifest = read_manifest(path)
    kind = manifest["kind"]
    if expected_kind is not None and kind != expected_kind:
        raise ModelMismatchError(
            f"{path}: checkpoint is kind {kind!r}, requested {expected_kind!r}"
        )
    layout = param_layout(
        kind, manifest["emb_dim"], manifest["hidden"],
        manifest["post_vocab"], manifest["resp_vocab"],
    )
    expected = {name: tuple(shape) for name, shape in layout}
    listed = {e["name"]: tuple(e["shape"]) for e in manifest["tensors"]}
    if listed != expected:
        missing = sorted(set(expected) - set(listed))
        extra = sorted(set(listed) - set(expected))
        bad = sorted(n for n in expected.keys() & listed.keys() if expected[n] != listed[n])
        raise CheckpointFormatError(
            f"{path}: manifest does not match architecture "
            f"(missing={missing}, extra={extra}, shape-mismatch={bad})"
        )
    params = init_params(
        kind, manifest["post_vocab"], manifest["resp_vocab"],
        manifest["emb_dim"], manifest["hidden"], seed=0, dtype=np.float32,
    )
    start = manifest["_data_start"]
    with open(path, "rb") as fh:
        for entry in manifest["tensors"]:
            shape = tuple(entry["shape"])
            count = int(np.prod(shape)) if shape else 1
            fh.seek(start + entry["offset"])
            raw = fh.read(count * 4)
            if len(raw) != count * 4:
                raise CheckpointFormatError(f"{path}: truncated data for {entry['name']}")
            arr = np.frombuffer(raw, dtype="<f4").reshape(shape)
            params.tensors[entry["name"]].data[...] = arr
    return params
