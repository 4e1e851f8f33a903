"""Writer for the CEMB embeddings interchange format.

Little-endian binary: magic "CEMB", version u32=1, dim u32, count u64, then
count records of [id_len u16, id bytes UTF-8, dim x f32]. This mirrors the
downstream reader's published format so files hand off without conversion.
"""

from __future__ import annotations

import struct
from pathlib import Path
from typing import Mapping

import numpy as np

MAGIC = b"CEMB"
VERSION = 1


def write_cemb(entries: Mapping[str, np.ndarray], dim: int, path: str | Path) -> None:
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", VERSION))
        fh.write(struct.pack("<I", dim))
        fh.write(struct.pack("<Q", len(entries)))
        for cid, vec in entries.items():
            arr = np.ascontiguousarray(vec, dtype="<f4")
            if arr.shape != (dim,):
                raise ValueError(f"vector for {cid!r} has shape {arr.shape}, expected ({dim},)")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"vector for {cid!r} has non-finite components")
            id_bytes = cid.encode("utf-8")
            if len(id_bytes) > 0xFFFF:
                raise ValueError(f"character id too long: {cid[:32]!r}...")
            fh.write(struct.pack("<H", len(id_bytes)))
            fh.write(id_bytes)
            fh.write(arr.tobytes())
