"""Binary checkpoint format, CSV emission and the run manifest.

Checkpoint layout (all little-endian):
    magic   b"GNSE"
    version u32 (currently 1)
    header  d u64, n u64, m u64, alpha f64, s f64, seed u64, member u64, time f64
    payload d contiguous complex128 arrays in FFT lattice order (C order)
    footer  crc32 u32 over every preceding byte

Writes are atomic (temp file + rename) so a resumed run never sees a torn
checkpoint; the CRC and magic guard against truncation and foreign files.
"""
from __future__ import annotations

import csv
import json
import os
import struct
import time as _time
import zlib
from dataclasses import dataclass, field as dc_field

import numpy as np

from .spectral import Grid, SpectralVectorField

MAGIC = b"GNSE"
VERSION = 1
_HEADER = struct.Struct("<QQQddQQd")


class CheckpointError(IOError):
    pass


def write_checkpoint(path, field, alpha, s, seed=0, member=0, time=0.0):
    g = field.grid
    head = MAGIC + struct.pack("<I", VERSION) + _HEADER.pack(
        g.d, g.n, g.m, float(alpha), float(s), int(seed), int(member), float(time)
    )
    payload = np.ascontiguousarray(field.coeffs).astype("<c16").tobytes()
    blob = head + payload
    blob += struct.pack("<I", zlib.crc32(blob) & 0xFFFFFFFF)
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "wb") as fh:
        fh.write(blob)
    os.replace(tmp, path)
    return path


def read_checkpoint(path):
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 8 + _HEADER.size + 4 or blob[:4] != MAGIC:
        raise CheckpointError(f"{path}: bad magic")
    (crc,) = struct.unpack("<I", blob[-4:])
    if crc != (zlib.crc32(blob[:-4]) & 0xFFFFFFFF):
        raise CheckpointError(f"{path}: CRC mismatch")
    (version,) = struct.unpack("<I", blob[4:8])
    if version != VERSION:
        raise CheckpointError(f"{path}: unsupported version {version}")
    d, n, m, alpha, s, seed, member, time = _HEADER.unpack(
        blob[8 : 8 + _HEADER.size]
    )
    grid = Grid(d=int(d), n=int(n), m=int(m))
    count = d * n**d
    data = np.frombuffer(blob, dtype="<c16", offset=8 + _HEADER.size, count=count)
    coeffs = data.reshape((d,) + grid.shape).astype(np.complex128)
    field = SpectralVectorField(grid, coeffs.copy())
    header = {
        "d": int(d),
        "n": int(n),
        "m": int(m),
        "alpha": float(alpha),
        "s": float(s),
        "seed": int(seed),
        "member": int(member),
        "time": float(time),
    }
    return field, header


def write_csv(path, columns, rows):
    """RFC-4180-style CSV, header row, full double precision."""
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([repr(float(v)) if isinstance(v, (int, float, np.floating)) else v for v in row])
    os.replace(tmp, path)
    return path


def read_csv(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        columns = next(reader)
        rows = [[float(v) for v in row] for row in reader]
    return columns, np.asarray(rows)


@dataclass
class RunManifest:
    command: str
    config_snapshot: dict
    code_version: str = ""
    seed_status: dict = dc_field(default_factory=dict)
    artifacts: list = dc_field(default_factory=list)
    timings: dict = dc_field(default_factory=dict)
    started: float = dc_field(default_factory=_time.time)

    def add_artifact(self, path):
        self.artifacts.append(str(path))

    def write(self, path):
        """Atomic write; refuses to name artifacts that do not exist."""
        missing = [a for a in self.artifacts if not os.path.exists(a)]
        if missing:
            raise CheckpointError(f"manifest names missing artifacts: {missing}")
        payload = {
            "command": self.command,
            "config": self.config_snapshot,
            "code_version": self.code_version,
            "seed_status": self.seed_status,
            "artifacts": self.artifacts,
            "timings": self.timings,
            "started": self.started,
            "finished": _time.time(),
        }
        tmp = f"{path}.tmp.{os.getpid()}"
        with open(tmp, "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
        os.replace(tmp, path)
        return path
