"""
Portable checkpoint container

Layout (UTF-8 header, then binary payload):

    IMAGINE-CHECKPOINT v1
    kind=<model kind tag>
    meta=<JSON object, sorted keys: layer dims, activation tags, hyperparameters>
    array=<name> shape=<d1,d2,...>      (one line per tensor, payload order)
    end
    <little-endian float64 arrays, concatenated in header order>
"""

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Union

import numpy as np

from src.errors import ConfigError
from src.numerics.network import DenseNet

MAGIC = "IMAGINE-CHECKPOINT v1"
_LE_F8 = np.dtype("<f8")


@dataclass
class Checkpoint:
    kind: str
    meta: Dict[str, Any] = field(default_factory=dict)
    arrays: Dict[str, np.ndarray] = field(default_factory=dict)


def encode_checkpoint(checkpoint: Checkpoint) -> bytes:
    """Serialize a checkpoint to bytes"""
    if "\n" in checkpoint.kind:
        raise ConfigError("Checkpoint kind must be a single line")
    lines = [MAGIC, f"kind={checkpoint.kind}", "meta=" + json.dumps(checkpoint.meta, sort_keys=True)]
    payload = []
    for name, array in checkpoint.arrays.items():
        if any(ch in name for ch in " \n="):
            raise ConfigError(f"Invalid tensor name '{name}'")
        array = np.asarray(array, dtype=np.float64)
        lines.append(f"array={name} shape={','.join(str(d) for d in array.shape)}")
        payload.append(np.ascontiguousarray(array, dtype=_LE_F8).tobytes())
    lines.append("end")
    return ("\n".join(lines) + "\n").encode("utf-8") + b"".join(payload)


def decode_checkpoint(blob: bytes, source: str = "<bytes>") -> Checkpoint:
    """Parse bytes produced by encode_checkpoint"""
    marker = b"\nend\n"
    cut = blob.find(marker)
    if cut < 0:
        raise ConfigError(f"{source}: checkpoint header is not terminated")
    header = blob[:cut].decode("utf-8").split("\n")
    payload = memoryview(blob)[cut + len(marker):]

    if not header or header[0] != MAGIC:
        raise ConfigError(f"{source}: not a checkpoint container")
    if len(header) < 3 or not header[1].startswith("kind=") or not header[2].startswith("meta="):
        raise ConfigError(f"{source}: malformed checkpoint header")
    kind = header[1][len("kind="):]
    try:
        meta = json.loads(header[2][len("meta="):])
    except json.JSONDecodeError as e:
        raise ConfigError(f"{source}: bad meta JSON: {e}") from e

    arrays: Dict[str, np.ndarray] = {}
    offset = 0
    for line in header[3:]:
        try:
            name_part, shape_part = line.split(" ")
            name = name_part[len("array="):]
            dims = shape_part[len("shape="):]
            shape = tuple(int(d) for d in dims.split(",")) if dims else ()
        except ValueError as e:
            raise ConfigError(f"{source}: malformed array line '{line}'") from e
        count = int(np.prod(shape)) if shape else 1
        nbytes = count * _LE_F8.itemsize
        if offset + nbytes > len(payload):
            raise ConfigError(f"{source}: payload truncated at tensor '{name}'")
        arrays[name] = np.frombuffer(payload[offset:offset + nbytes], dtype=_LE_F8).astype(np.float64).reshape(shape)
        offset += nbytes
    if offset != len(payload):
        raise ConfigError(f"{source}: {len(payload) - offset} trailing payload bytes")
    return Checkpoint(kind=kind, meta=meta, arrays=arrays)


def save_checkpoint(path: Union[str, Path], checkpoint: Checkpoint) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_checkpoint(checkpoint))
    return path


def load_checkpoint(path: Union[str, Path]) -> Checkpoint:
    path = Path(path)
    return decode_checkpoint(path.read_bytes(), source=str(path))


def describe_net(net: DenseNet) -> Dict[str, Any]:
    """Header description of a DenseNet: layer dims and activation tags"""
    return {"dims": net.dims, "activations": net.activations}


def restore_net(description: Dict[str, Any], arrays: Dict[str, np.ndarray], prefix: str) -> DenseNet:
    """Rebuild a DenseNet from describe_net output and its prefixed tensors"""
    net = DenseNet.build(description["dims"], description["activations"], rng=None)
    try:
        net.load_parameters(arrays, prefix=prefix)
    except KeyError as e:
        raise ConfigError(f"Checkpoint is missing tensor {e}") from e
    return net
