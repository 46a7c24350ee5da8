"""Versioned binary container for trained models.

Byte layout (all integers little-endian):

    bytes 0..7    magic "SCENEBM1"
    bytes 8..11   uint32 header length N
    bytes 12..11+N  UTF-8 JSON header
    remainder     tensor payloads, concatenated in header order

Header fields: ``format_version`` (1), ``model_kind`` (cosmo|gbm|rbm),
``dims``, ``vocabulary`` (full vocabulary record, optional),
``vocabulary_fingerprint``, ``schedule`` (annealing schedule used in
training, optional) and ``tensors`` -- a list of {name, shape} entries
declaring the payload order. Each payload is the tensor's float64
little-endian C-order bytes. Files round-trip bit-exactly.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import Optional

import numpy as np

from scenebm.errors import ModelFileError
from scenebm.models.state import ModelDims
from scenebm.vocab import VocabularySet

MAGIC = b"SCENEBM1"
FORMAT_VERSION = 1


def save_model(model, path: str | Path, vocabulary: Optional[VocabularySet] = None) -> None:
    tensors = model.weight_tensors()
    header = {
        "format_version": FORMAT_VERSION,
        "model_kind": model.kind,
        "dims": model.dims.to_json(),
        "vocabulary": vocabulary.to_json() if vocabulary is not None else None,
        "vocabulary_fingerprint": (
            vocabulary.fingerprint() if vocabulary is not None
            else model.vocab_fingerprint
        ),
        "schedule": model.schedule_used,
        "tensors": [
            {"name": name, "shape": list(arr.shape)} for name, arr in tensors.items()
        ],
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        for arr in tensors.values():
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_model(path: str | Path):
    """Load a model container; returns (model, vocabulary-or-None)."""
    from scenebm.models.cosmo import CosmoModel
    from scenebm.models.gbm import GbmModel
    from scenebm.models.rbm import RbmModel

    path = Path(path)
    if not path.exists():
        raise ModelFileError(f"model file not found: {path}")
    raw = path.read_bytes()
    if len(raw) < 12 or raw[:8] != MAGIC:
        raise ModelFileError(f"{path}: not a model file (bad magic)")
    (header_len,) = struct.unpack("<I", raw[8:12])
    if len(raw) < 12 + header_len:
        raise ModelFileError(f"{path}: truncated header")
    try:
        header = json.loads(raw[12 : 12 + header_len].decode("utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ModelFileError(f"{path}: corrupt header: {exc}") from exc
    if header.get("format_version") != FORMAT_VERSION:
        raise ModelFileError(
            f"{path}: unsupported format version {header.get('format_version')!r}"
        )
    dims = ModelDims.from_json(header["dims"])
    offset = 12 + header_len
    tensors: dict[str, np.ndarray] = {}
    for entry in header["tensors"]:
        shape = tuple(int(x) for x in entry["shape"])
        nbytes = int(np.prod(shape)) * 8
        if offset + nbytes > len(raw):
            raise ModelFileError(f"{path}: truncated payload at {entry['name']}")
        tensors[entry["name"]] = (
            np.frombuffer(raw[offset : offset + nbytes], dtype="<f8")
            .reshape(shape)
            .copy()
        )
        offset += nbytes
    if offset != len(raw):
        raise ModelFileError(f"{path}: {len(raw) - offset} trailing bytes")

    kind = header.get("model_kind")
    fingerprint = header.get("vocabulary_fingerprint")
    schedule = header.get("schedule")
    n_hh = dims.n_layers - 1
    hh = [tensors[f"w_hh_{m}"] for m in range(n_hh)]
    try:
        if kind == "cosmo":
            model = CosmoModel(
                dims, tensors["w_hv"], tensors["w_r"], tensors["w_rh"],
                tensors["w_a"], tensors["w_ah"], hh,
                vocab_fingerprint=fingerprint, schedule_used=schedule,
            )
        elif kind == "gbm":
            model = GbmModel(
                dims, tensors["w_vv"], tensors["w_vh"], hh,
                vocab_fingerprint=fingerprint, schedule_used=schedule,
            )
        elif kind == "rbm":
            model = RbmModel(
                dims, tensors["w_vh"], hh,
                vocab_fingerprint=fingerprint, schedule_used=schedule,
            )
        else:
            raise ModelFileError(f"{path}: unknown model kind {kind!r}")
    except KeyError as exc:
        raise ModelFileError(f"{path}: missing tensor {exc}") from exc
    vocabulary = None
    if header.get("vocabulary") is not None:
        vocabulary = VocabularySet.from_json(header["vocabulary"])
    return model, vocabulary
