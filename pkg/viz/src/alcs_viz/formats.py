"""Readers for the simulator's on-disk formats.

This package talks to the solver only through its published interfaces:
the "ALCS" binary snapshot layout and the delimited diagnostics tables.
Nothing here imports the solver.

Snapshot layout (little-endian): magic "ALCS", u32 version = 1, u32 d,
u32 N, f64 L, f64 t, u32 nfields, then per field a 16-byte zero-padded
ASCII name followed by N^d float64 values, row-major.
"""

import struct

import numpy as np

__all__ = ["FormatError", "Snapshot", "read_snapshot", "read_csv_table"]

_MAGIC = b"ALCS"
_VERSION = 1
_HEADER = struct.Struct("<4sIIIddI")


class FormatError(ValueError):
    pass


class Snapshot:
    def __init__(self, n, length, t, fields):
        self.n = n
        self.length = length
        self.t = t
        self.fields = fields

    def __getitem__(self, name):
        return self.fields[name]


def read_snapshot(path):
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _HEADER.size:
        raise FormatError(f"file too short for a header ({len(blob)} bytes)")
    magic, version, d, n, length, t, nfields = _HEADER.unpack(
        blob[:_HEADER.size])
    if magic != _MAGIC:
        raise FormatError(f"bad magic {magic!r}")
    if version != _VERSION:
        raise FormatError(f"unsupported version {version}")
    if d != 2:
        raise FormatError(f"unsupported dimension {d}")
    per_field = 16 + 8 * n * n
    expected = _HEADER.size + nfields * per_field
    if len(blob) != expected:
        raise FormatError(
            f"expected {expected} bytes, got {len(blob)}")
    fields = {}
    off = _HEADER.size
    for _ in range(nfields):
        name = blob[off:off + 16].rstrip(b"\0").decode("ascii")
        off += 16
        data = np.frombuffer(blob, dtype="<f8", count=n * n, offset=off)
        fields[name] = data.reshape(n, n).copy()
        off += 8 * n * n
    return Snapshot(n, length, t, fields)


def read_csv_table(path):
    """Header + float columns of a diagnostics table, as a dict of
    numpy arrays keyed by column name."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines:
        raise FormatError("empty table")
    names = lines[0].split(",")
    rows = []
    for i, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != len(names):
            raise FormatError(
                f"row {i} has {len(parts)} cells, expected {len(names)}")
        try:
            rows.append([float(x) for x in parts])
        except ValueError as err:
            raise FormatError(f"row {i}: {err}") from None
    data = np.array(rows) if rows else np.zeros((0, len(names)))
    return {name: data[:, j] for j, name in enumerate(names)}
