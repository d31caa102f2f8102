"""CSV and binary serialization for signals and sensing matrices.

Binary container layout (little-endian)::

    offset  size  content
    0       4     magic b"PLS1"
    4       4     uint32 field tag (0 = real float64, 1 = complex complex128)
    8       4     uint32 rows m
    12      4     uint32 columns n
    16      ...   m*n scalars, row-major

Vectors are stored as n x 1 columns in both formats. CSV writes one matrix row per
line; complex scalars are written as ``re+imj`` with ``repr`` precision so that
the text round-trips exactly.
"""
from __future__ import annotations

import struct
from pathlib import Path
from typing import Union

import numpy as np

from .errors import InputError
from .signal_model import Field, MeasurementEnsemble, SignalVector, as_ensemble, as_signal

MAGIC = b"PLS1"
_HEADER = struct.Struct("<4sIII")
_TAGS = {Field.REAL: 0, Field.COMPLEX: 1}
_DTYPES = {0: np.dtype("<f8"), 1: np.dtype("<c16")}

PathLike = Union[str, Path]


def format_scalar(v, fld: Field) -> str:
    if fld is Field.REAL:
        return repr(float(v))
    v = complex(v)
    im = repr(v.imag)
    if not im.startswith("-"):
        im = "+" + im
    return f"{v.real!r}{im}j"


def parse_scalar(token: str, fld: Field):
    token = token.strip()
    try:
        if fld is Field.REAL:
            return float(token)
        return complex(token)
    except ValueError:
        raise InputError(f"cannot parse {token!r} as a {fld.value} scalar") from None


def write_csv(path: PathLike, a: np.ndarray, fld: Field) -> None:
    a = np.asarray(a)
    if a.ndim == 1:
        a = a[:, None]
    lines = [",".join(format_scalar(v, fld) for v in row) for row in a]
    Path(path).write_text("\n".join(lines) + "\n")


def read_csv(path: PathLike, fld: Union[Field, str, None] = None) -> np.ndarray:
    """Read a CSV grid; the field is inferred from the presence of ``j`` when not given."""
    text = Path(path).read_text()
    rows = [line.split(",") for line in text.splitlines() if line.strip()]
    if not rows:
        raise InputError(f"{path}: empty CSV file")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise InputError(f"{path}: ragged CSV rows")
    if fld is None:
        fld = Field.COMPLEX if any("j" in tok for r in rows for tok in r) else Field.REAL
    fld = Field.parse(fld)
    return np.array([[parse_scalar(t, fld) for t in r] for r in rows], dtype=fld.dtype)


def write_binary(path: PathLike, a: np.ndarray, fld: Field) -> None:
    a = np.asarray(a)
    if a.ndim == 1:
        a = a[:, None]
    m, n = a.shape
    tag = _TAGS[fld]
    data = np.ascontiguousarray(a, dtype=_DTYPES[tag])
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, tag, m, n))
        fh.write(data.tobytes(order="C"))


def read_binary(path: PathLike):
    """Return ``(array, field)`` from a binary container."""
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise InputError(f"{path}: file too short for header")
    magic, tag, m, n = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise InputError(f"{path}: bad magic {magic!r}")
    if tag not in _DTYPES:
        raise InputError(f"{path}: unknown field tag {tag}")
    dt = _DTYPES[tag]
    expected = _HEADER.size + m * n * dt.itemsize
    if len(raw) != expected:
        raise InputError(f"{path}: expected {expected} bytes, found {len(raw)}")
    a = np.frombuffer(raw, dtype=dt, offset=_HEADER.size).reshape(m, n).astype(dt.newbyteorder("="))
    return a, (Field.REAL if tag == 0 else Field.COMPLEX)


def _is_binary(path: PathLike) -> bool:
    with open(path, "rb") as fh:
        return fh.read(4) == MAGIC


def save_matrix(path: PathLike, A, fmt: str = "bin") -> None:
    A = as_ensemble(A)
    if fmt == "csv":
        write_csv(path, A.entries, A.field)
    elif fmt == "bin":
        write_binary(path, A.entries, A.field)
    else:
        raise InputError(f"unknown format {fmt!r}")


def load_matrix(path: PathLike, field=None) -> MeasurementEnsemble:
    """Load a matrix from either format (detected by the magic bytes)."""
    if not Path(path).is_file():
        raise InputError(f"{path}: no such file")
    if _is_binary(path):
        a, fld = read_binary(path)
        if field is not None and Field.parse(field) is not fld:
            raise InputError(f"{path}: stored field {fld.value} differs from requested {field}")
    else:
        a = read_csv(path, field)
        fld = Field.of_array(a)
    return MeasurementEnsemble(fld, a)


def save_vector(path: PathLike, x, fmt: str = "csv") -> None:
    x = as_signal(x)
    if fmt == "csv":
        write_csv(path, x.entries, x.field)
    elif fmt == "bin":
        write_binary(path, x.entries, x.field)
    else:
        raise InputError(f"unknown format {fmt!r}")


def load_vector(path: PathLike, field=None) -> SignalVector:
    A = load_matrix(path, field)
    a = A.entries
    if a.shape[1] != 1 and a.shape[0] != 1:
        raise InputError(f"{path}: expected a vector, found shape {a.shape}")
    return SignalVector(A.field, a.reshape(-1))
