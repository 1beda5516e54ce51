"""Binary checkpoints and CSV diagnostics.

Checkpoint layout (all little-endian)::

    offset 0   4 bytes   magic b"DNSE"
    offset 4   uint32    format version (1)
    offset 8   uint32    record count
    then, per record:
               float64 x5  L, nu, mu, dt, t
               uint32      N
               float64 x (2 * 3 * N**3)
                           (re, im) per mode, component-major, then
                           row-major over the (k1, k2, k3) slot index

A single field is written as a one-record file.
"""
from __future__ import annotations

import csv
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .linearized import Trajectory, energy_residual_series
from .spectral import SpectralField, divergence_max, make_lattice, sobolev_norm

__all__ = [
    "MAGIC",
    "FORMAT_VERSION",
    "CheckpointError",
    "CheckpointRecord",
    "write_checkpoint",
    "read_checkpoint",
    "write_diagnostics",
    "DIAGNOSTIC_COLUMNS",
]

MAGIC = b"DNSE"
FORMAT_VERSION = 1
_PREAMBLE = struct.Struct("<4sII")
_HEADER = struct.Struct("<dddddI")

DIAGNOSTIC_COLUMNS = (
    "t",
    "norm0",
    "norm1",
    "norm_alpha",
    "div_max",
    "energy_residual_running",
    "ledger_enstrophy",
    "ledger_forcing",
)


class CheckpointError(ValueError):
    pass


@dataclass(frozen=True)
class CheckpointRecord:
    L: float
    nu: float
    mu: float
    dt: float
    t: float
    N: int
    field: SpectralField


def _records(obj, nu, mu, dt, t):
    if isinstance(obj, SpectralField):
        yield (nu, mu, dt, t, obj)
    elif isinstance(obj, Trajectory):
        for tk, u in zip(obj.times, obj.states):
            yield (obj.nu, obj.mu, obj.dt, float(tk), u)
    else:
        raise TypeError(f"cannot checkpoint {type(obj).__name__}")


def write_checkpoint(obj, path, nu: float = 0.0, mu: float = 0.0, dt: float = 0.0, t: float = 0.0):
    """Write a field or a trajectory.

    For a bare field the header scalars come from the keyword arguments; a
    trajectory supplies its own.
    """
    recs = list(_records(obj, nu, mu, dt, t))
    with open(path, "wb") as fh:
        fh.write(_PREAMBLE.pack(MAGIC, FORMAT_VERSION, len(recs)))
        for nu_, mu_, dt_, t_, u in recs:
            lat = u.lattice
            fh.write(_HEADER.pack(lat.L, nu_, mu_, dt_, t_, lat.N))
            fh.write(np.ascontiguousarray(u.coeffs, dtype="<c16").tobytes())


def read_checkpoint(path) -> list[CheckpointRecord]:
    data = Path(path).read_bytes()
    if len(data) < _PREAMBLE.size:
        raise CheckpointError(f"truncated file: preamble needs {_PREAMBLE.size} bytes at offset 0")
    magic, version, count = _PREAMBLE.unpack_from(data, 0)
    if magic != MAGIC:
        raise CheckpointError(f"bad magic {magic!r} at offset 0 (expected {MAGIC!r})")
    if version != FORMAT_VERSION:
        raise CheckpointError(f"unsupported version {version} at offset 4")
    off = _PREAMBLE.size
    out = []
    first_lattice = None
    for i in range(count):
        if off + _HEADER.size > len(data):
            raise CheckpointError(f"truncated file: record {i} header at offset {off}")
        L, nu, mu, dt, t, N = _HEADER.unpack_from(data, off)
        try:
            lat = make_lattice(L, N)
        except (ValueError, TypeError) as exc:
            raise CheckpointError(f"inconsistent header in record {i} at offset {off}: {exc}") from None
        if first_lattice is None:
            first_lattice = lat
        elif lat != first_lattice:
            raise CheckpointError(f"record {i} at offset {off} changes the lattice")
        off += _HEADER.size
        nbytes = 16 * 3 * N**3
        if off + nbytes > len(data):
            raise CheckpointError(f"truncated file: record {i} coefficients at offset {off}")
        c = np.frombuffer(data, dtype="<c16", count=3 * N**3, offset=off)
        off += nbytes
        field = SpectralField(lat, c.astype(np.complex128).reshape((3,) + lat.shape))
        out.append(CheckpointRecord(L, nu, mu, dt, t, N, field))
    if off != len(data):
        raise CheckpointError(f"{len(data) - off} trailing bytes at offset {off}")
    return out


def write_diagnostics(traj: Trajectory, path):
    """One CSV row per stored state, 17 significant digits."""
    res = energy_residual_series(traj)
    rows = []
    for k, (t, u) in enumerate(zip(traj.times, traj.states)):
        rows.append(
            (
                t,
                sobolev_norm(u, 0.0),
                sobolev_norm(u, 1.0),
                sobolev_norm(u, traj.alpha),
                divergence_max(u),
                res[k],
                traj.ledger.enstrophy[k],
                traj.ledger.forcing[k],
            )
        )
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(DIAGNOSTIC_COLUMNS)
        for r in rows:
            w.writerow([f"{float(x):.17g}" for x in r])
