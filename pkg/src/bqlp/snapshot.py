"""Bit-exact binary snapshots of solver states.

Layout (version 1, all little-endian; full byte map in docs/formats.md):

    offset 0   magic "BQLP" (4 bytes)
    offset 4   u32 version = 1
    offset 8   u32 n
    offset 12  u32 oversample_factor
    offset 16  f64 t
    offset 24  f64 nu
    offset 32  f64 kappa
    offset 40  f64 dealias_fraction
    offset 48  u32 field count
    then per field: u32 name length, ASCII name, n^3 complex coefficients
    as interleaved (re, im) f64 pairs in C order over FFT indices.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .solver import SolverState
from .spectral import GridSpec, SpectralScalarField, SpectralVectorField

MAGIC = b"BQLP"
VERSION = 1
_HEADER = struct.Struct("<4sIIIddddI")
FIELD_NAMES = ("u1", "u2", "u3", "theta")


class SnapshotError(ValueError):
    """Malformed, truncated, or incompatible snapshot file."""


def save_snapshot(
    state: SolverState, path: str | Path, nu: float = float("nan"), kappa: float = float("nan")
) -> None:
    """Write a state (plus the run's dissipation coefficients) to disk."""
    grid = state.u.grid
    parts = [
        _HEADER.pack(
            MAGIC,
            VERSION,
            grid.n,
            grid.oversample_factor,
            state.t,
            nu,
            kappa,
            grid.dealias_fraction,
            len(FIELD_NAMES),
        )
    ]
    arrays = [state.u.coeffs[0], state.u.coeffs[1], state.u.coeffs[2], state.theta.coeffs]
    for name, arr in zip(FIELD_NAMES, arrays):
        encoded = name.encode("ascii")
        parts.append(struct.pack("<I", len(encoded)))
        parts.append(encoded)
        parts.append(np.ascontiguousarray(arr, dtype="<c16").tobytes())
    Path(path).write_bytes(b"".join(parts))


def load_snapshot(
    path: str | Path, expected_n: int | None = None
) -> tuple[SolverState, dict]:
    """Read a snapshot; returns the state and a metadata dict (nu, kappa, grid).

    Raises SnapshotError on a bad magic, unsupported version, truncated
    payload, or (when expected_n is given) a grid size mismatch.
    """
    raw = Path(path).read_bytes()
    if raw[:4] != MAGIC:
        raise SnapshotError(f"{path}: not a BQLP snapshot")
    if len(raw) < _HEADER.size:
        raise SnapshotError(f"{path}: truncated header")
    magic, version, n, oversample, t, nu, kappa, dealias_fraction, count = _HEADER.unpack_from(raw, 0)
    if version != VERSION:
        raise SnapshotError(f"{path}: unsupported snapshot version {version}")
    if expected_n is not None and n != expected_n:
        raise SnapshotError(f"{path}: grid size {n} does not match requested {expected_n}")
    grid = GridSpec(n, dealias_fraction, oversample)

    offset = _HEADER.size
    fields: dict[str, np.ndarray] = {}
    cube_bytes = 16 * n**3
    for _ in range(count):
        if offset + 4 > len(raw):
            raise SnapshotError(f"{path}: truncated field table")
        (name_len,) = struct.unpack_from("<I", raw, offset)
        offset += 4
        if offset + name_len + cube_bytes > len(raw):
            raise SnapshotError(f"{path}: truncated payload")
        name = raw[offset : offset + name_len].decode("ascii")
        offset += name_len
        cube = np.frombuffer(raw, dtype="<c16", count=n**3, offset=offset)
        offset += cube_bytes
        fields[name] = cube.reshape(n, n, n).astype(np.complex128)

    missing = [name for name in FIELD_NAMES if name not in fields]
    if missing:
        raise SnapshotError(f"{path}: missing fields {missing}")
    ucoef = np.stack([fields["u1"], fields["u2"], fields["u3"]])
    state = SolverState(
        SpectralVectorField(grid, ucoef),
        SpectralScalarField(grid, fields["theta"]),
        t,
    )
    return state, {"nu": nu, "kappa": kappa, "grid": grid, "version": version}
