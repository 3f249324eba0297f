"""Binary checkpoint container for named MLPs.

Layout, all integers and floats little-endian:

    b"AGCK"                         magic
    u32 version                     currently 1
    u32 header_length
    header_length bytes             UTF-8 JSON object, must contain "mlps": [name, ...]
    for each name in header["mlps"]:
        u32 depth                   number of layer dims
        depth x i64                 layer dims, input width first
        u8 output activation        0 linear, 1 sigmoid
        for each layer:
            d_in*d_out x f8         weight matrix, row-major
            d_out x f8              bias vector
"""

import json
import logging
from pathlib import Path

import numpy as np

from utils.exceptions import CheckpointError

from .mlp import Activation, MlpParams
from .tensor import Tensor

logger = logging.getLogger(__name__)

MAGIC = b"AGCK"
VERSION = 1

_ACTIVATION_CODES = {Activation.LINEAR: 0, Activation.SIGMOID: 1}


def _u32(value: int) -> bytes:
    return np.array([value], dtype="<u4").tobytes()


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.offset = 0

    def take(self, n: int) -> bytes:
        if self.offset + n > len(self.data):
            raise CheckpointError("checkpoint is truncated")
        chunk = self.data[self.offset : self.offset + n]
        self.offset += n
        return chunk

    def array(self, dtype: str, count: int) -> np.ndarray:
        size = np.dtype(dtype).itemsize
        return np.frombuffer(self.take(size * count), dtype=dtype).copy()


def encode_checkpoint(header: dict, mlps: dict[str, MlpParams]) -> bytes:
    header = {**header, "mlps": list(mlps)}
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    parts = [MAGIC, _u32(VERSION), _u32(len(header_bytes)), header_bytes]
    for params in mlps.values():
        parts.append(_u32(len(params.layer_dims)))
        parts.append(np.asarray(params.layer_dims, dtype="<i8").tobytes())
        parts.append(np.array([_ACTIVATION_CODES[params.output_activation]], dtype="<u1").tobytes())
        for w, b in zip(params.weights, params.biases):
            parts.append(np.ascontiguousarray(w.values, dtype="<f8").tobytes())
            parts.append(np.ascontiguousarray(b.values, dtype="<f8").tobytes())
    return b"".join(parts)


def decode_checkpoint(data: bytes) -> tuple[dict, dict[str, MlpParams]]:
    reader = _Reader(data)
    if reader.take(4) != MAGIC:
        raise CheckpointError("not a checkpoint file (bad magic)")
    version = int(reader.array("<u4", 1)[0])
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    header_length = int(reader.array("<u4", 1)[0])
    try:
        header = json.loads(reader.take(header_length).decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CheckpointError(f"corrupt checkpoint header: {e}") from e

    codes = {code: act for act, code in _ACTIVATION_CODES.items()}
    mlps = {}
    for name in header.get("mlps", []):
        depth = int(reader.array("<u4", 1)[0])
        dims = [int(d) for d in reader.array("<i8", depth)]
        code = int(reader.array("<u1", 1)[0])
        if code not in codes:
            raise CheckpointError(f"unknown activation code {code} for '{name}'")
        weights, biases = [], []
        for d_in, d_out in zip(dims, dims[1:]):
            weights.append(Tensor.parameter(reader.array("<f8", d_in * d_out).reshape(d_in, d_out)))
            biases.append(Tensor.parameter(reader.array("<f8", d_out)))
        mlps[name] = MlpParams(dims, weights, biases, output_activation=codes[code])
    if reader.offset != len(data):
        raise CheckpointError(f"{len(data) - reader.offset} trailing bytes in checkpoint")
    return header, mlps


def write_checkpoint(path: str | Path, header: dict, mlps: dict[str, MlpParams]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_checkpoint(header, mlps))
    logger.info("checkpoint written: %s (%s)", path, ", ".join(mlps))


def read_checkpoint(path: str | Path) -> tuple[dict, dict[str, MlpParams]]:
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"checkpoint not found: {path}")
    return decode_checkpoint(path.read_bytes())
