"""Binary model file.

    b"CSVM" | u32 version | u32 header length | JSON header | float32 payload

All integers and floats are little-endian. The JSON header holds the input
shape, the architecture, the train config and an array manifest
(name, shape, byte offset into the payload); the payload holds the filter
banks and head weights back to back in manifest order.
"""
from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path

import numpy as np

from .errors import ModelFormatError
from .layers import FilterBank
from .linsvm import SvmModel
from .net import BlockSpec, CsvmNetwork, TrainConfig, output_shapes

MAGIC = b"CSVM"
VERSION = 1
_F32 = np.dtype("<f4")


def to_bytes(net: CsvmNetwork) -> bytes:
    arrays = []
    for d, (_, bank) in enumerate(net.blocks, start=1):
        arrays.append((f"bank_{d}", bank.weights))
    for d, head in enumerate(net.heads, start=1):
        arrays.append((f"head_{d}", head.weights))

    manifest, chunks, offset = [], [], 0
    for name, arr in arrays:
        raw = np.ascontiguousarray(arr, dtype=_F32).tobytes()
        manifest.append({"name": name, "shape": list(arr.shape), "offset": offset, "nbytes": len(raw)})
        chunks.append(raw)
        offset += len(raw)

    header = {
        "input_spec": list(net.input_spec),
        "arch": [spec.to_dict() for spec, _ in net.blocks],
        "train_config": net.config.to_dict(),
        "seed": net.config.master_seed,
        "class_names": list(net.class_names),
        "heads": [
            {"penalty_c": h.penalty_c, "iterations_run": h.iterations_run,
             "final_objective": h.final_objective}
            for h in net.heads
        ],
        "arrays": manifest,
    }
    hbytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return MAGIC + struct.pack("<II", VERSION, len(hbytes)) + hbytes + b"".join(chunks)


def from_bytes(buf: bytes) -> CsvmNetwork:
    if len(buf) < 12 or buf[:4] != MAGIC:
        raise ModelFormatError("not a CSVM model file (bad magic)")
    version, hlen = struct.unpack_from("<II", buf, 4)
    if version != VERSION:
        raise ModelFormatError(f"unsupported model format version {version}")
    try:
        header = json.loads(buf[12:12 + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ModelFormatError(f"corrupt model header: {exc}") from exc
    payload = memoryview(buf)[12 + hlen:]

    arrays = {}
    for entry in header["arrays"]:
        shape = tuple(entry["shape"])
        start, nbytes = entry["offset"], entry["nbytes"]
        if start + nbytes > len(payload) or nbytes != 4 * int(np.prod(shape)):
            raise ModelFormatError(f"array {entry['name']} out of bounds or mis-sized")
        arrays[entry["name"]] = np.frombuffer(payload[start:start + nbytes], dtype=_F32).reshape(shape)

    try:
        cfg = TrainConfig.from_dict(header["train_config"])
        arch = [BlockSpec.from_dict(d) for d in header["arch"]]
        blocks = tuple(
            (spec, FilterBank(arrays[f"bank_{d}"], spec.stride))
            for d, spec in enumerate(arch, start=1)
        )
        heads = tuple(
            SvmModel(arrays[f"head_{d}"].astype(np.float32), meta["penalty_c"],
                     meta["iterations_run"], meta["final_objective"])
            for d, meta in enumerate(header["heads"], start=1)
        )
        input_spec = tuple(header["input_spec"])
        class_names = tuple(header.get("class_names", ("positive", "negative")))
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"inconsistent model header: {exc}") from exc
    _validate(input_spec, blocks, heads, cfg)
    return CsvmNetwork(input_spec, blocks, heads, cfg, class_names)


def _validate(input_spec, blocks, heads, cfg):
    if len(heads) != len(blocks) or not blocks:
        raise ModelFormatError(f"{len(blocks)} blocks but {len(heads)} heads")
    channels = input_spec[2]
    shapes = output_shapes(input_spec, [spec for spec, _ in blocks])
    for d, ((spec, bank), head, shp) in enumerate(zip(blocks, heads, shapes), start=1):
        if bank.in_channels != channels or bank.n_filters != spec.n_filters or bank.kernel != spec.kernel:
            raise ModelFormatError(f"bank {d} shape {bank.weights.shape} inconsistent with {spec}")
        want = shp["head_dim"] + (1 if cfg.head_bias else 0)
        if head.dim != want:
            raise ModelFormatError(f"head {d} has {head.dim} weights, expected {want}")
        channels = spec.n_filters


def save(net: CsvmNetwork, path) -> str:
    """Write the model and return the SHA-256 of the file."""
    buf = to_bytes(net)
    Path(path).write_bytes(buf)
    return hashlib.sha256(buf).hexdigest()


def load(path) -> CsvmNetwork:
    return from_bytes(Path(path).read_bytes())
