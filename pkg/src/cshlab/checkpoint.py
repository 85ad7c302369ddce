"""Binary checkpoints of CSH and Euler states.

Byte layout (all integers and floats little-endian)::

    offset  size  content
    0       8     magic b"CSHCHK\\x00\\x01"
    8       8     uint64 n, length of the header in bytes
    16      n     UTF-8 JSON header
    16+n    ...   arrays, in header order, raw float64

The header holds ``kind`` ("csh" or "euler"), ``grid`` (nx, ny, lx, ly),
``t``, the scaling parameters (CSH) or ``gamma`` (Euler), and ``arrays``: a
list of ``{"name", "dtype", "shape"}``.  A ``complex128`` array is stored as
interleaved (real, imag) float64 pairs in C order.
"""
from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .csh import CshState
from .errors import ConfigError
from .euler import EulerState
from .grid import FieldGrid
from .scaling import ScalingParams

MAGIC = b"CSHCHK\x00\x01"


def _grid_dict(grid: FieldGrid) -> dict:
    return {"nx": grid.nx, "ny": grid.ny, "lx": grid.lx, "ly": grid.ly}


def save(path, grid: FieldGrid, state) -> None:
    if isinstance(state, CshState):
        p = state.params
        header = {
            "kind": "csh",
            "params": {"eps": p.eps, "delta": p.delta, "gamma": p.gamma, "lam": p.lam},
        }
        arrays = {"psi": state.psi, "chi": state.chi}
    elif isinstance(state, EulerState):
        header = {"kind": "euler", "gamma": state.gamma}
        arrays = {"rho": state.rho, "u": state.u}
    else:
        raise TypeError(f"cannot checkpoint {type(state).__name__}")
    header["grid"] = _grid_dict(grid)
    header["t"] = float(state.t)
    header["arrays"] = []
    blobs = []
    for name, arr in arrays.items():
        arr = np.ascontiguousarray(arr)
        dtype = "complex128" if np.iscomplexobj(arr) else "float64"
        header["arrays"].append({"name": name, "dtype": dtype, "shape": list(arr.shape)})
        blobs.append(arr.astype("<c16" if dtype == "complex128" else "<f8").tobytes())
    hbytes = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<Q", len(hbytes)))
        fh.write(hbytes)
        for b in blobs:
            fh.write(b)


def load(path):
    """Return ``(grid, state)``."""
    data = Path(path).read_bytes()
    if data[:8] != MAGIC:
        raise ConfigError(f"{path}: not a checkpoint file")
    (n,) = struct.unpack("<Q", data[8:16])
    header = json.loads(data[16 : 16 + n].decode("utf-8"))
    offset = 16 + n
    arrays = {}
    for entry in header["arrays"]:
        shape = tuple(entry["shape"])
        dt = np.dtype("<c16" if entry["dtype"] == "complex128" else "<f8")
        size = int(np.prod(shape)) * dt.itemsize
        if offset + size > len(data):
            raise ConfigError(f"{path}: truncated array {entry['name']!r}")
        arrays[entry["name"]] = np.frombuffer(data[offset : offset + size], dtype=dt).reshape(shape).astype(dt.newbyteorder("="))
        offset += size
    if offset != len(data):
        raise ConfigError(f"{path}: trailing or missing bytes")
    grid = FieldGrid(**header["grid"])
    if header["kind"] == "csh":
        state = CshState(arrays["psi"], arrays["chi"], header["t"], ScalingParams(**header["params"]))
    else:
        state = EulerState(arrays["rho"], arrays["u"], header["t"], header["gamma"])
    return grid, state
