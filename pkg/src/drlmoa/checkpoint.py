"""Checkpoint container for one subproblem's actor and critic.

Layout::

    DRLMOA-CKPT\\n
    <header length in bytes, decimal>\\n
    <JSON header: version, metadata, dtype, tensor directory, sha256>
    <raw little-endian tensor payload>

Tensor names are ``actor.<param>`` and ``critic.<param>``; each directory
entry records its shape, byte offset into the payload and byte count.
"""
from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .autodiff import Tensor
from .errors import CheckpointError
from .pointer import ActorParams, CriticParams

MAGIC = b"DRLMOA-CKPT\n"
VERSION = 1
DTYPES = {"<f4": np.dtype("<f4"), "<f8": np.dtype("<f8")}


def save_checkpoint(path, actor: ActorParams, critic: CriticParams, metadata: dict | None = None,
                    dtype: str = "<f4"):
    if dtype not in DTYPES:
        raise CheckpointError(f"unsupported storage dtype {dtype!r}")
    meta = dict(metadata or {})
    meta.setdefault("d_h", actor.d_h)
    meta.setdefault("d_input", actor.d_input)
    directory = []
    chunks = []
    offset = 0
    for prefix, params in (("actor", actor), ("critic", critic)):
        for name, t in params.tensors.items():
            raw = np.ascontiguousarray(t.data, dtype=DTYPES[dtype]).tobytes()
            directory.append({"name": f"{prefix}.{name}", "shape": list(t.shape),
                              "offset": offset, "nbytes": len(raw)})
            chunks.append(raw)
            offset += len(raw)
    payload = b"".join(chunks)
    header = {
        "format": "drlmoa-checkpoint",
        "version": VERSION,
        "dtype": dtype,
        "metadata": meta,
        "tensors": directory,
        "payload_bytes": len(payload),
        "sha256": hashlib.sha256(payload).hexdigest(),
    }
    head = json.dumps(header, indent=1, sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(f"{len(head)}\n".encode())
        fh.write(head)
        fh.write(payload)


def _read(path) -> tuple[dict, bytes]:
    blob = Path(path).read_bytes()
    if not blob.startswith(MAGIC):
        raise CheckpointError(f"{path}: bad magic, not a checkpoint file")
    rest = blob[len(MAGIC):]
    nl = rest.find(b"\n")
    try:
        hlen = int(rest[:nl])
        header = json.loads(rest[nl + 1 : nl + 1 + hlen])
    except ValueError as exc:
        raise CheckpointError(f"{path}: unreadable header ({exc})") from None
    payload = rest[nl + 1 + hlen :]
    if header.get("version") != VERSION:
        raise CheckpointError(f"{path}: unsupported version {header.get('version')!r}")
    if header.get("dtype") not in DTYPES:
        raise CheckpointError(f"{path}: unsupported dtype {header.get('dtype')!r}")
    if len(payload) != header.get("payload_bytes"):
        raise CheckpointError(
            f"{path}: payload_bytes declares {header.get('payload_bytes')}, file holds {len(payload)}")
    if hashlib.sha256(payload).hexdigest() != header.get("sha256"):
        raise CheckpointError(f"{path}: sha256 mismatch, payload corrupt")
    return header, payload


def load_checkpoint(path, expect_d_input: int | None = None, expect_d_h: int | None = None):
    """Return ``(actor, critic, metadata)``; tensors come back as float64."""
    header, payload = _read(path)
    meta = header["metadata"]
    for field, want in (("d_input", expect_d_input), ("d_h", expect_d_h)):
        if want is not None and meta.get(field) != want:
            raise CheckpointError(f"{path}: {field} mismatch, file has {meta.get(field)}, expected {want}")
    d_input, d_h = meta.get("d_input"), meta.get("d_h")
    dt = DTYPES[header["dtype"]]
    found = {}
    for entry in header["tensors"]:
        name, shape = entry["name"], tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        if entry["nbytes"] != count * dt.itemsize or entry["offset"] + entry["nbytes"] > len(payload):
            raise CheckpointError(f"{path}: tensor {name} extent does not match shape {list(shape)}")
        arr = np.frombuffer(payload, dtype=dt, count=count, offset=entry["offset"]).reshape(shape)
        found[name] = arr.astype(np.float64)
    sets = []
    for prefix, cls in (("actor", ActorParams), ("critic", CriticParams)):
        expected = cls.expected_shapes(d_input, d_h)
        tensors = {}
        for name, shape in expected.items():
            key = f"{prefix}.{name}"
            if key not in found:
                raise CheckpointError(f"{path}: missing tensor {key}")
            if found[key].shape != shape:
                raise CheckpointError(
                    f"{path}: tensor {key} has shape {list(found[key].shape)}, "
                    f"metadata (d_input={d_input}, d_h={d_h}) implies {list(shape)}")
            tensors[name] = Tensor(found[key], requires_grad=True)
        sets.append(cls(tensors))
    return sets[0], sets[1], meta
