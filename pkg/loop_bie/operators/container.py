"""Binary container for operator blocks and current coefficients.

Layout (little endian)::

    b"LBIE"            magic
    uint32             header length in bytes
    header             JSON object
    payload            complex128 values, row-major, entries back to back

The header holds `format`, `version`, free metadata (wavenumber, block layout, ...) and the
`entries` list of `{name, shape, offset}` where `offset` counts values from the payload start.
"""

from __future__ import annotations

from typing import (
    Any,
    BinaryIO,
    Dict,
    NamedTuple,
    Union
)

import os
import struct

import numpy as np
import orjson

MAGIC = b"LBIE"
FORMAT = "loop-bie-container"
VERSION = 1

_DTYPE = np.dtype("<c16")


class ContainerFormatError(ValueError):
    """The stream is not a readable container"""
    pass


class Container(NamedTuple):
    metadata: Dict[str, Any]
    entries: Dict[str, np.ndarray]


def _default(value: Any) -> Any:
    if isinstance(value, complex):
        return [value.real, value.imag]
    if isinstance(value, np.generic):
        return value.item() if not np.iscomplexobj(value) else [float(value.real), float(value.imag)]
    raise TypeError(f"Cannot serialize {type(value).__name__}")


def dump_container(stream: BinaryIO, entries: Dict[str, np.ndarray], **metadata: Any):
    """Writes complex arrays (any dimension) with metadata to a binary stream."""

    offset = 0
    listing = []
    arrays = []
    for (name, array) in entries.items():
        array = np.ascontiguousarray(np.asarray(array, dtype=_DTYPE))
        listing.append({"name": name, "shape": list(array.shape), "offset": offset})
        offset += array.size
        arrays.append(array)

    header = orjson.dumps(
        {"format": FORMAT, "version": VERSION, "metadata": metadata, "entries": listing},
        default=_default,
        option=orjson.OPT_SORT_KEYS | orjson.OPT_SERIALIZE_NUMPY,
    )

    stream.write(MAGIC)
    stream.write(struct.pack("<I", len(header)))
    stream.write(header)
    for array in arrays:
        stream.write(array.tobytes(order="C"))


def load_container(stream: BinaryIO) -> Container:
    """
    Raises:
        ContainerFormatError:
    """

    if stream.read(4) != MAGIC:
        raise ContainerFormatError("Not a loop-bie container (bad magic)")

    try:
        (length,) = struct.unpack("<I", stream.read(4))
        header = orjson.loads(stream.read(length))
    except (struct.error, orjson.JSONDecodeError) as error:
        raise ContainerFormatError(f"Unreadable container header. {str(error)}") from error

    if header.get("format") != FORMAT or header.get("version") != VERSION:
        raise ContainerFormatError(f"Unsupported container {header.get('format')} v{header.get('version')}")

    payload = np.frombuffer(stream.read(), dtype=_DTYPE)

    entries = {}
    for entry in header["entries"]:
        size = int(np.prod(entry["shape"], dtype=np.int64))
        start = entry["offset"]
        if start + size > payload.size:
            raise ContainerFormatError(f"Truncated payload for entry \"{entry['name']}\"")
        entries[entry["name"]] = payload[start:start + size].reshape(entry["shape"]).copy()

    return Container(metadata=header["metadata"], entries=entries)


def write_container(path: Union[str, os.PathLike], entries: Dict[str, np.ndarray], **metadata: Any):
    with open(path, "wb") as stream:
        dump_container(stream, entries, **metadata)


def read_container(path: Union[str, os.PathLike]) -> Container:
    with open(path, "rb") as stream:
        return load_container(stream)
