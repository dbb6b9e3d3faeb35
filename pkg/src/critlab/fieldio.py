"""Binary field files.

Layout (little-endian)::

    magic   4 bytes  b"CLFD"
    version uint32   FORMAT_VERSION
    dim     uint32
    n       uint32
    L       float64  box length
    m       uint32   components
    coeffs  m * n**dim complex128 (real, imag float64 pairs), row-major
            over (component, k_1, ..., k_dim) in FFT order
"""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .spectral import Grid, SpectralField

__all__ = ["FieldFormatError", "FORMAT_VERSION", "MAGIC", "write_field", "read_field", "encode_field", "decode_field"]

MAGIC = b"CLFD"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sIIIdI")


class FieldFormatError(ValueError):
    pass


def encode_field(f: SpectralField) -> bytes:
    g = f.grid
    head = _HEADER.pack(MAGIC, FORMAT_VERSION, g.dim, g.n, g.box_length, f.components)
    return head + np.ascontiguousarray(f.coeffs, dtype="<c16").tobytes()


def decode_field(data: bytes, dealias_fraction: float = 2.0 / 3.0) -> SpectralField:
    if len(data) < _HEADER.size:
        raise FieldFormatError(f"truncated header: {len(data)} of {_HEADER.size} bytes")
    magic, version, dim, n, box, m = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FieldFormatError(f"bad magic {magic!r}, not a field file")
    if version != FORMAT_VERSION:
        raise FieldFormatError(
            f"unsupported field format version {version} (this reader handles {FORMAT_VERSION})"
        )
    try:
        grid = Grid(dim, n, box, dealias_fraction)
    except ValueError as exc:
        raise FieldFormatError(f"invalid grid in header: {exc}") from None
    if m < 1:
        raise FieldFormatError("component count must be >= 1")
    count = m * n**dim
    need = _HEADER.size + 16 * count
    if len(data) < need:
        raise FieldFormatError(f"truncated payload: {len(data)} of {need} bytes")
    if len(data) > need:
        raise FieldFormatError(f"{len(data) - need} trailing bytes after payload")
    coeffs = np.frombuffer(data, dtype="<c16", count=count, offset=_HEADER.size)
    return SpectralField(grid, coeffs.astype(np.complex128).reshape((m,) + grid.shape))


def write_field(path, f: SpectralField) -> Path:
    path = Path(path)
    path.write_bytes(encode_field(f))
    return path


def read_field(path, dealias_fraction: float = 2.0 / 3.0) -> SpectralField:
    return decode_field(Path(path).read_bytes(), dealias_fraction)
