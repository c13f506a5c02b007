"""msgpack helpers for bit-exact array round trips."""

from __future__ import annotations

from pathlib import Path
from typing import Any

import msgpack
import numpy as np

from errors import SchemaError

__all__ = ('pack_array', 'unpack_array', 'write_document', 'read_document')

_DTYPES = {'f8': np.dtype('<f8'), 'i8': np.dtype('<i8')}


def pack_array(array: np.ndarray) -> dict[str, Any]:
    array = np.asarray(array)
    code = 'i8' if np.issubdtype(array.dtype, np.integer) else 'f8'
    return {
        'dtype': code,
        'shape': list(array.shape),
        'data': np.ascontiguousarray(array, dtype=_DTYPES[code]).tobytes(),
    }


def unpack_array(raw: dict[str, Any]) -> np.ndarray:
    dtype = _DTYPES[raw['dtype']]
    return np.frombuffer(raw['data'], dtype=dtype).reshape(raw['shape']).astype(dtype.newbyteorder('='))


def write_document(path: str | Path, kind: str, version: int, body: dict[str, Any]) -> Path:
    """Write a msgpack document tagged with its format name and version."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'wb') as f:
        f.write(msgpack.packb({'format': kind, 'version': version, **body}, use_bin_type=True))
    return path


def read_document(path: str | Path, kind: str, versions: tuple[int, ...] = (1,)) -> dict[str, Any]:
    with open(path, 'rb') as f:
        raw = msgpack.unpackb(f.read(), raw=False, strict_map_key=False)
    if raw.get('format') != kind:
        raise SchemaError(f'{path} is not a {kind} document (found {raw.get("format")!r})')
    if raw.get('version') not in versions:
        raise SchemaError(f'{path} has unsupported {kind} version {raw.get("version")!r}')
    return raw
