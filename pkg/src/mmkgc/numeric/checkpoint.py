"""The `MOMK` checkpoint format: named groups of little-endian 32-bit reals.

Layout: magic `MOMK`, u32 format version, u32 group count, then per group a u32 name length, the
UTF-8 name, u32 rank, one u32 per dimension and the values in C order.
"""

import logging
import struct
from pathlib import Path
from typing import Dict, Mapping, Union

import numpy as np

from .exceptions import CheckpointError
from .params import ParamStore

logger = logging.getLogger(__name__)

CHECKPOINT_MAGIC = b"MOMK"
CHECKPOINT_VERSION = 1

_U32 = struct.Struct("<I")


def save_checkpoint(path: Union[str, Path], groups: Mapping[str, np.ndarray]) -> None:
    """Write named arrays to a checkpoint file.

    Args:
        path (Union[str, Path]): The destination
        groups (Mapping[str, np.ndarray]): Arrays keyed by group name, written in mapping order
    """
    chunks = [CHECKPOINT_MAGIC, _U32.pack(CHECKPOINT_VERSION), _U32.pack(len(groups))]
    for name, value in groups.items():
        array = np.ascontiguousarray(value, dtype="<f4")
        encoded = name.encode("utf-8")
        chunks.append(_U32.pack(len(encoded)))
        chunks.append(encoded)
        chunks.append(_U32.pack(array.ndim))
        chunks.extend(_U32.pack(dim) for dim in array.shape)
        chunks.append(array.tobytes())
    Path(path).write_bytes(b"".join(chunks))
    logger.debug(f"Wrote {len(groups)} groups to {path}")


def load_checkpoint(path: Union[str, Path]) -> Dict[str, np.ndarray]:
    """Read every group of a checkpoint file.

    Args:
        path (Union[str, Path]): The checkpoint

    Raises:
        CheckpointError: Raised for an unreadable file, a bad magic, an unsupported version or a truncated file

    Returns:
        Dict[str, np.ndarray]: 32-bit arrays keyed by group name, in file order
    """
    try:
        data = Path(path).read_bytes()
    except OSError as e:
        raise CheckpointError(f"Cannot read checkpoint: {e}") from e
    if data[:4] != CHECKPOINT_MAGIC:
        raise CheckpointError(f"{path} is not a checkpoint (bad magic)")

    offset = 4

    def read_u32() -> int:
        nonlocal offset
        if offset + 4 > len(data):
            raise CheckpointError(f"{path} is truncated")
        (value,) = _U32.unpack_from(data, offset)
        offset += 4
        return int(value)

    version = read_u32()
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(f"{path} has format version {version}, expected {CHECKPOINT_VERSION}")

    groups: Dict[str, np.ndarray] = {}
    for _ in range(read_u32()):
        length = read_u32()
        try:
            name = data[offset : offset + length].decode("utf-8")
        except UnicodeDecodeError as e:
            raise CheckpointError(f"{path} holds a group name that is not valid UTF-8") from e
        offset += length
        shape = tuple(read_u32() for _ in range(read_u32()))
        count = int(np.prod(shape, dtype=np.int64))
        if offset + 4 * count > len(data):
            raise CheckpointError(f"{path} is truncated inside group '{name}'")
        groups[name] = np.frombuffer(data, dtype="<f4", count=count, offset=offset).reshape(shape).astype(np.float32)
        offset += 4 * count
    if offset != len(data):
        raise CheckpointError(f"{path} has {len(data) - offset} trailing bytes")
    return groups


def store_groups(*stores: ParamStore) -> Dict[str, np.ndarray]:
    """Merge the parameters of several stores into one mapping for `save_checkpoint`.

    Raises:
        CheckpointError: Raised if two stores share a group name
    """
    merged: Dict[str, np.ndarray] = {}
    for store in stores:
        for name in store:
            if name in merged:
                raise CheckpointError(f"Group '{name}' exists in more than one store")
            merged[name] = store[name]
    return merged


def restore_store(store: ParamStore, groups: Mapping[str, np.ndarray]) -> None:
    """Copy checkpoint values into every group of a store.

    Args:
        store (ParamStore): The store to fill; its group set defines what is required
        groups (Mapping[str, np.ndarray]): Loaded checkpoint groups

    Raises:
        CheckpointError: Raised if a group is missing or has a different shape
    """
    for name in store:
        if name not in groups:
            raise CheckpointError(f"Checkpoint lacks group '{name}'")
        if groups[name].shape != store[name].shape:
            raise CheckpointError(
                f"Group '{name}' has shape {groups[name].shape} in the checkpoint, the model expects {store[name].shape}"
            )
        store[name][...] = groups[name]
