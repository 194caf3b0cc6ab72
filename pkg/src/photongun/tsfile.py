"""Binary and CSV timestamp files.

Binary layout, little-endian::

    header (16 bytes): magic b"PGUN", version u16, channel_count u16,
                       resolution_ps u32, reserved u32
    record (16 bytes): t u64 (ps), origin u8, channel u8, 6 bytes padding

CSV layout: header row ``t_ps,origin,channel``; origin written by name.
"""
from __future__ import annotations

import csv
import io
import struct
from pathlib import Path

import numpy as np

from .errors import TimestampFormatError
from .simulator import PHOTON_DTYPE, Origin

MAGIC = b"PGUN"
VERSION = 1
HEADER = struct.Struct("<4sHHII")
RECORD_DTYPE = np.dtype({
    "names": ["t", "origin", "channel"],
    "formats": ["<u8", "u1", "u1"],
    "offsets": [0, 8, 9],
    "itemsize": 16,
})
CSV_COLUMNS = ("t_ps", "origin", "channel")


def to_bytes(stream: np.ndarray, resolution_ps: int = 1) -> bytes:
    channels = int(stream["channel"].max()) + 1 if stream.size else 1
    body = np.zeros(stream.size, dtype=RECORD_DTYPE)
    for name in ("t", "origin", "channel"):
        body[name] = stream[name]
    return HEADER.pack(MAGIC, VERSION, channels, resolution_ps, 0) + body.tobytes()


def from_bytes(data: bytes) -> np.ndarray:
    if len(data) < HEADER.size:
        raise TimestampFormatError(f"truncated header: {len(data)} of {HEADER.size} bytes", offset=len(data))
    magic, version, _channels, resolution, _reserved = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise TimestampFormatError(f"bad magic {magic!r}, expected {MAGIC!r}", offset=0)
    if version != VERSION:
        raise TimestampFormatError(f"unsupported version {version}, expected {VERSION}", offset=4)
    if resolution != 1:
        raise TimestampFormatError(f"unsupported resolution {resolution} ps", offset=8)
    body = len(data) - HEADER.size
    if body % RECORD_DTYPE.itemsize:
        whole = body // RECORD_DTYPE.itemsize
        offset = HEADER.size + whole * RECORD_DTYPE.itemsize
        raise TimestampFormatError(
            f"truncated record {whole}: {body % RECORD_DTYPE.itemsize} of {RECORD_DTYPE.itemsize} bytes",
            offset=offset)
    raw = np.frombuffer(data, dtype=RECORD_DTYPE, offset=HEADER.size)
    stream = np.empty(raw.size, dtype=PHOTON_DTYPE)
    for name in ("t", "origin", "channel"):
        stream[name] = raw[name]
    bad = np.flatnonzero(stream["origin"] > max(Origin))
    if bad.size:
        raise TimestampFormatError(f"record {bad[0]} has unknown origin code {stream['origin'][bad[0]]}",
                                   offset=HEADER.size + int(bad[0]) * 16 + 8)
    if stream.size > 1:
        t = stream["t"]
        back = np.flatnonzero(t[1:] < t[:-1])
        if back.size:
            raise TimestampFormatError(f"timestamps decrease at record {back[0] + 1}",
                                       offset=HEADER.size + int(back[0] + 1) * 16)
    return stream


def write_binary(path, stream: np.ndarray) -> None:
    Path(path).write_bytes(to_bytes(stream))


def read_binary(path) -> np.ndarray:
    return from_bytes(Path(path).read_bytes())


def write_csv(path, stream: np.ndarray) -> None:
    names = {o.value: o.name.lower() for o in Origin}
    with open(path, "w", newline="") as fh:
        fh.write(",".join(CSV_COLUMNS) + "\n")
        buf = io.StringIO()
        for t, origin, channel in stream.tolist():
            buf.write(f"{t},{names[origin]},{channel}\n")
        fh.write(buf.getvalue())


def read_csv(path) -> np.ndarray:
    codes = {o.name.lower(): o.value for o in Origin}
    codes.update({str(o.value): o.value for o in Origin})
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != CSV_COLUMNS:
            raise TimestampFormatError(f"CSV header must be {','.join(CSV_COLUMNS)}, got {header}")
        t, origin, channel = [], [], []
        for lineno, row in enumerate(reader, start=2):
            try:
                t.append(int(row[0]))
                if t[-1] < 0 or t[-1] >= 2**64:
                    raise ValueError("timestamp out of range")
                origin.append(codes[row[1].strip().lower()])
                channel.append(int(row[2]))
            except (IndexError, KeyError, ValueError):
                raise TimestampFormatError(f"malformed CSV row at line {lineno}: {row}") from None
    stream = np.empty(len(t), dtype=PHOTON_DTYPE)
    stream["t"], stream["origin"], stream["channel"] = t, origin, channel
    return stream


def read_any(path) -> np.ndarray:
    """Read a timestamp file, choosing the format by extension (``.csv`` or binary)."""
    return read_csv(path) if str(path).lower().endswith(".csv") else read_binary(path)


def write_any(path, stream: np.ndarray) -> None:
    (write_csv if str(path).lower().endswith(".csv") else write_binary)(path, stream)
