"""Binary snapshot format and the delimited outputs.

Snapshot layout (all little-endian):

    magic   4 bytes  b"ALCS"
    version u32      1
    d       u32      spatial dimension
    N       u32      points per side
    L       f64      box length
    t       f64      sample time
    nfields u32
    then per field: 16-byte zero-padded ASCII name + N^d f64 row-major

Reads validate the magic, version, and exact byte count, so truncated or
foreign files are rejected with a sizing message instead of garbage.
"""

import struct

import numpy as np

from .diagnostics import CSV_COLUMNS
from .dynamics import StateFields
from .spectral import Grid2D, QTensorField, VelocityField

__all__ = [
    "SnapshotError",
    "write_snapshot",
    "read_snapshot",
    "read_header",
    "state_field_map",
    "write_energy_csv",
    "write_twin_csv",
]

MAGIC = b"ALCS"
VERSION = 1
_HEADER = struct.Struct("<4sIIIddI")
STATE_FIELDS = ("q11", "q12", "ux", "uy")


class SnapshotError(ValueError):
    pass


def state_field_map(state):
    return {
        "q11": state.q.q11,
        "q12": state.q.q12,
        "ux": state.u.ux,
        "uy": state.u.uy,
    }


def write_snapshot(path, state):
    g = state.q.grid
    fmap = state_field_map(state)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, 2, g.n, g.length, state.t,
                              len(STATE_FIELDS)))
        for name in STATE_FIELDS:
            fh.write(name.encode("ascii").ljust(16, b"\0"))
            fh.write(np.ascontiguousarray(
                fmap[name], dtype="<f8").tobytes())


def read_header(path):
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
    if len(head) < _HEADER.size:
        raise SnapshotError(
            f"truncated header: expected {_HEADER.size} bytes, "
            f"got {len(head)}")
    magic, version, d, n, length, t, nfields = _HEADER.unpack(head)
    if magic != MAGIC:
        raise SnapshotError(f"bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise SnapshotError(f"unsupported version {version}")
    return {"d": d, "N": n, "L": length, "t": t, "nfields": nfields}


def read_snapshot(path):
    header = read_header(path)
    d, n = header["d"], header["N"]
    if d != 2:
        raise SnapshotError(f"only 2D snapshots are supported, got d={d}")
    per_field = 16 + 8 * n**d
    expected = _HEADER.size + header["nfields"] * per_field
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) != expected:
        raise SnapshotError(
            f"truncated snapshot: expected {expected} bytes, "
            f"got {len(blob)}")
    fields = {}
    off = _HEADER.size
    for _ in range(header["nfields"]):
        name = blob[off:off + 16].rstrip(b"\0").decode("ascii")
        off += 16
        data = np.frombuffer(blob, dtype="<f8", count=n * n, offset=off)
        off += 8 * n * n
        fields[name] = data.reshape(n, n).astype(float)
    missing = [f for f in STATE_FIELDS if f not in fields]
    if missing:
        raise SnapshotError(f"snapshot lacks fields: {', '.join(missing)}")
    grid = Grid2D(n, header["L"])
    state = StateFields(
        header["t"],
        QTensorField(grid, fields["q11"], fields["q12"]),
        VelocityField(grid, fields["ux"], fields["uy"]),
    )
    return state


def _row(values):
    return ",".join(repr(float(v)) for v in values)


def write_energy_csv(path, records):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(CSV_COLUMNS) + "\n")
        for rec in records:
            fh.write(_row(rec.csv_row()) + "\n")


def write_twin_csv(path, deltas):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("t,dQ_l2,dQ_h1,du_l2\n")
        for d in deltas:
            fh.write(_row([d.t, d.dQ_l2, d.dQ_h1, d.du_l2]) + "\n")
