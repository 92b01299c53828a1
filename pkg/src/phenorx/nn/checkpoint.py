"""Checkpoint format: <stem>.json manifest + <stem>.bin blob.

The manifest lists every array's name, shape and element offset into one
contiguous blob of little-endian IEEE-754 float32 values, plus a
caller-supplied metadata object and the blob's SHA-256. Round-trips are
bit-exact because storage is float32 on both sides.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

FORMAT = "f32-blob/1"


class CheckpointError(RuntimeError):
    pass


def save_checkpoint(stem: str | Path, arrays: dict[str, np.ndarray], meta: dict | None = None) -> Path:
    """Write <stem>.json and <stem>.bin; returns the JSON path."""
    stem = Path(stem)
    entries = []
    chunks = []
    offset = 0
    for name, arr in arrays.items():
        data = np.ascontiguousarray(arr, dtype="<f4")
        entries.append({"name": name, "shape": list(data.shape), "offset": offset})
        chunks.append(data.tobytes())
        offset += data.size
    blob = b"".join(chunks)
    manifest = {
        "format": FORMAT,
        "meta": meta or {},
        "blob_sha256": hashlib.sha256(blob).hexdigest(),
        "entries": entries,
    }
    stem.parent.mkdir(parents=True, exist_ok=True)
    with open(stem.with_suffix(".bin"), "wb") as fh:
        fh.write(blob)
    with open(stem.with_suffix(".json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return stem.with_suffix(".json")


def load_checkpoint(stem: str | Path) -> tuple[dict[str, np.ndarray], dict]:
    """Read arrays and metadata back; verifies blob hash and coverage."""
    stem = Path(stem)
    try:
        with open(stem.with_suffix(".json"), "r", encoding="utf-8") as fh:
            manifest = json.load(fh)
        with open(stem.with_suffix(".bin"), "rb") as fh:
            blob = fh.read()
    except OSError as exc:
        raise CheckpointError(f"cannot read checkpoint {stem}: {exc}") from exc
    if manifest.get("format") != FORMAT:
        raise CheckpointError(f"unknown checkpoint format {manifest.get('format')!r}")
    if hashlib.sha256(blob).hexdigest() != manifest["blob_sha256"]:
        raise CheckpointError(f"checkpoint blob corrupted for {stem}")
    flat = np.frombuffer(blob, dtype="<f4")
    arrays = {}
    total = 0
    for entry in manifest["entries"]:
        shape = tuple(entry["shape"])
        size = int(np.prod(shape)) if shape else 1
        piece = flat[entry["offset"]:entry["offset"] + size]
        if piece.size != size:
            raise CheckpointError(f"checkpoint entry {entry['name']} exceeds blob")
        arrays[entry["name"]] = piece.reshape(shape).copy()
        total += size
    if total != flat.size:
        raise CheckpointError(f"checkpoint blob has {flat.size - total} unclaimed values")
    return arrays, manifest["meta"]
