"""Grid solution container and its binary serialization.

Binary layout (little-endian):
  bytes 0:8     magic "IRRGRID1"
  bytes 8:12    uint32 header length H
  bytes 12:12+H UTF-8 JSON header: axis names/lengths, field names/shapes,
                solver metadata
  remainder     float64 blocks: each axis array in order, then each field
                array in header order (C order)
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import numpy as np

_MAGIC = b"IRRGRID1"


@dataclass
class GridSolution:
    """Axes (one per coordinate, time included), field arrays, metadata."""

    axes: List[Tuple[str, np.ndarray]]
    fields: Dict[str, np.ndarray]
    meta: dict = field(default_factory=dict)

    def axis(self, name: str) -> np.ndarray:
        for n, arr in self.axes:
            if n == name:
                return arr
        raise KeyError(name)

    def shape(self):
        return tuple(len(arr) for _, arr in self.axes)


def save_grid(path, sol: GridSolution) -> None:
    header = {
        "axes": [{"name": n, "len": int(len(a))} for n, a in sol.axes],
        "fields": [
            {"name": n, "shape": [int(s) for s in arr.shape]} for n, arr in sol.fields.items()
        ],
        "meta": sol.meta,
    }
    blob = json.dumps(header).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        for _, arr in sol.axes:
            fh.write(np.asarray(arr, dtype="<f8").tobytes())
        for name, arr in sol.fields.items():
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_grid(path) -> GridSolution:
    with open(path, "rb") as fh:
        if fh.read(8) != _MAGIC:
            raise ValueError(f"not a grid container: {path}")
        (hlen,) = struct.unpack("<I", fh.read(4))
        header = json.loads(fh.read(hlen).decode("utf-8"))
        axes = []
        for ax in header["axes"]:
            data = np.frombuffer(fh.read(8 * ax["len"]), dtype="<f8")
            axes.append((ax["name"], data.copy()))
        fields = {}
        for fd in header["fields"]:
            count = int(np.prod(fd["shape"]))
            data = np.frombuffer(fh.read(8 * count), dtype="<f8")
            fields[fd["name"]] = data.reshape(fd["shape"]).copy()
    return GridSolution(axes=axes, fields=fields, meta=header.get("meta", {}))


def save_csv_slice(path, columns: Dict[str, np.ndarray]) -> None:
    """Write named 1D columns of equal length as CSV."""
    names = list(columns)
    arrays = [np.asarray(columns[n]).ravel() for n in names]
    n = len(arrays[0])
    with open(path, "w") as fh:
        fh.write(",".join(names) + "\n")
        for i in range(n):
            fh.write(",".join(f"{a[i]:.12g}" for a in arrays) + "\n")
