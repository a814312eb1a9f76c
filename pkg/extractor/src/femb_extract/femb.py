"""Independent FEMB writer.

Byte layout: magic "FEMB", then a payload of three little-endian u32s
(version = 1, row count, dimension) followed by the rows as little-endian
float32, then the CRC32 of the payload as a little-endian u32. The label
manifest is a sibling .jsonl with one {id, label, row} object per row.

This module deliberately shares no code with any consumer of the format;
conformance is established by tests that read the emitted files back with
an independent implementation.
"""

from __future__ import annotations

import json
import os
import struct
import zlib
from pathlib import Path

import numpy as np

FEMB_MAGIC = b"FEMB"
FEMB_VERSION = 1


def manifest_path(path) -> Path:
    return Path(path).with_suffix(".jsonl")


def _atomic_write(path: Path, data: bytes):
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


def write_femb(path, vectors: np.ndarray, ids: list, labels: list):
    """Write the matrix and its manifest; both writes are atomic."""
    path = Path(path)
    vectors = np.ascontiguousarray(vectors, dtype="<f4")
    if vectors.ndim != 2:
        raise ValueError(f"expected a 2-d matrix, got shape {vectors.shape}")
    count, dim = vectors.shape
    if len(ids) != count or len(labels) != count:
        raise ValueError("ids/labels length must match the row count")

    payload = struct.pack("<III", FEMB_VERSION, count, dim) + vectors.tobytes()
    _atomic_write(path, FEMB_MAGIC + payload
                  + struct.pack("<I", zlib.crc32(payload)))

    lines = [json.dumps({"id": i, "label": lab, "row": row})
             for row, (i, lab) in enumerate(zip(ids, labels))]
    _atomic_write(manifest_path(path), ("\n".join(lines) + "\n").encode())
