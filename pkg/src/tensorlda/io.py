"""TLDA1 binary tensor files.

Layout: one ASCII header line ``TLDA1 <M> <d_1> ... <d_M> <f64|u8>`` followed
by the little-endian payload in column-major order (first index fastest).
``f64`` carries real tensors and matrices, ``u8`` carries 0/1 masks.
"""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np

MAGIC = "TLDA1"
_DTYPES = {"f64": np.dtype("<f8"), "u8": np.dtype("u1")}


class FormatError(ValueError):
    pass


def _header(shape, kind: str) -> bytes:
    return (" ".join([MAGIC, str(len(shape)), *(str(int(d)) for d in shape), kind]) + "\n").encode("ascii")


def write_tensor(path: str | os.PathLike, X: np.ndarray) -> None:
    X = np.asarray(X, dtype=np.float64)
    if not np.all(np.isfinite(X)):
        raise FormatError("refusing to write non-finite values")
    _write(path, X, "f64")


def write_mask(path: str | os.PathLike, S: np.ndarray) -> None:
    S = np.asarray(S)
    if not np.all((S == 0) | (S == 1)):
        raise FormatError("mask entries must be 0 or 1")
    _write(path, S.astype(np.uint8), "u8")


def _write(path, X: np.ndarray, kind: str) -> None:
    if X.ndim == 0:
        X = X.reshape(1)
    with open(path, "wb") as fh:
        fh.write(_header(X.shape, kind))
        fh.write(np.asarray(X, dtype=_DTYPES[kind]).ravel(order="F").tobytes())


def read(path: str | os.PathLike) -> tuple[np.ndarray, str]:
    """Read a TLDA1 file, returning ``(array, kind)``."""
    raw = Path(path).read_bytes()
    nl = raw.find(b"\n")
    if nl < 0:
        raise FormatError(f"{path}: missing header line")
    fields = raw[:nl].decode("ascii", errors="replace").split()
    if len(fields) < 3 or fields[0] != MAGIC:
        raise FormatError(f"{path}: not a {MAGIC} file")
    try:
        order = int(fields[1])
        shape = tuple(int(f) for f in fields[2 : 2 + order])
    except ValueError as exc:
        raise FormatError(f"{path}: malformed header") from exc
    if order < 1 or len(fields) != order + 3 or any(d < 1 for d in shape):
        raise FormatError(f"{path}: malformed header")
    kind = fields[-1]
    if kind not in _DTYPES:
        raise FormatError(f"{path}: unknown payload type {kind!r}")
    payload = raw[nl + 1 :]
    dtype = _DTYPES[kind]
    count = int(np.prod(shape))
    if len(payload) != count * dtype.itemsize:
        raise FormatError(f"{path}: payload has {len(payload)} bytes, expected {count * dtype.itemsize}")
    data = np.frombuffer(payload, dtype=dtype).reshape(shape, order="F")
    if kind == "u8":
        if np.any(data > 1):
            raise FormatError(f"{path}: mask payload contains values other than 0/1")
        return data.astype(bool), kind
    data = data.astype(np.float64)
    if not np.all(np.isfinite(data)):
        raise FormatError(f"{path}: non-finite values in payload")
    return data, kind


def read_tensor(path: str | os.PathLike) -> np.ndarray:
    X, kind = read(path)
    if kind != "f64":
        raise FormatError(f"{path}: expected f64 payload, found {kind}")
    return X


def read_mask(path: str | os.PathLike) -> np.ndarray:
    S, kind = read(path)
    if kind != "u8":
        raise FormatError(f"{path}: expected u8 payload, found {kind}")
    return S


def write_kv(path: str | os.PathLike, values: dict) -> None:
    """Flat ``key = value`` text, one pair per line."""
    with open(path, "w", encoding="utf-8") as fh:
        for key, value in values.items():
            if isinstance(value, (list, tuple)):
                value = ",".join(str(v) for v in value)
            fh.write(f"{key} = {value}\n")


def read_kv(path: str | os.PathLike) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise FormatError(f"{path}:{lineno}: expected 'key = value'")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out
