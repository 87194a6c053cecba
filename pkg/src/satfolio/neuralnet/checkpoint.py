"""Binary checkpoint files.

Layout (little-endian):

    magic      4 bytes  b"GRSS"
    version    u16
    schema     u64      feature schema hash
    hidden     u32
    n_layers   u32
    n_solvers  u32
    flags      u32      bit 0: homogeneous, bits 1-2: feature mode code
    feat_seed  u64      seed of the random node features
    tensors    until end of file, each:
        name length u16, name (utf-8), rank u8, dims u32 * rank, float32 * prod(dims)

Tensors are written in canonical parameter order. Float32 parameters round-trip
bit-exactly.
"""

import struct
from pathlib import Path

import numpy as np

from satfolio.core.graph import FEATURE_SCHEMA_HASH, FeatureMode
from satfolio.neuralnet.params import ModelParameters, param_shapes

MAGIC = b"GRSS"
FORMAT_VERSION = 2

_HEADER = struct.Struct("<4sHQIIIIQ")


class CheckpointFormatError(ValueError):
    pass


class SchemaMismatch(ValueError):
    pass


def _flags(params: ModelParameters) -> int:
    return int(params.homogeneous) | (params.feature_mode.code << 1)


def dumps(params: ModelParameters) -> bytes:
    chunks = [
        _HEADER.pack(
            MAGIC,
            FORMAT_VERSION,
            params.schema_hash,
            params.hidden,
            params.n_layers,
            params.n_solvers,
            _flags(params),
            params.feature_seed,
        )
    ]
    for name, tensor in params.tensors.items():
        encoded = name.encode("utf-8")
        chunks.append(struct.pack("<H", len(encoded)) + encoded)
        chunks.append(struct.pack(f"<B{tensor.ndim}I", tensor.ndim, *tensor.shape))
        chunks.append(np.ascontiguousarray(tensor, dtype="<f4").tobytes())
    return b"".join(chunks)


def loads(data: bytes) -> ModelParameters:
    if len(data) < _HEADER.size:
        raise CheckpointFormatError("Truncated checkpoint header")
    magic, version = struct.unpack_from("<4sH", data)
    if magic != MAGIC:
        raise CheckpointFormatError(f"Bad magic bytes: {magic!r}")
    if version != FORMAT_VERSION:
        raise CheckpointFormatError(f"Unsupported checkpoint version: {version}")
    _, _, schema_hash, hidden, n_layers, n_solvers, flags, feature_seed = _HEADER.unpack_from(
        data
    )

    homogeneous = bool(flags & 1)
    try:
        feature_mode = FeatureMode.from_code((flags >> 1) & 0b11)
    except IndexError:
        raise CheckpointFormatError(f"Unknown feature mode in flags {flags:#x}") from None

    tensors = {}
    offset = _HEADER.size
    try:
        while offset < len(data):
            (name_len,) = struct.unpack_from("<H", data, offset)
            offset += 2
            name = data[offset : offset + name_len].decode("utf-8")
            offset += name_len
            (rank,) = struct.unpack_from("<B", data, offset)
            offset += 1
            dims = struct.unpack_from(f"<{rank}I", data, offset)
            offset += 4 * rank
            size = int(np.prod(dims, dtype=np.int64))
            if offset + 4 * size > len(data):
                raise CheckpointFormatError(f"Truncated tensor `{name}`")
            tensors[name] = (
                np.frombuffer(data, dtype="<f4", count=size, offset=offset)
                .astype(np.float32)
                .reshape(dims)
            )
            offset += 4 * size
    except (struct.error, UnicodeDecodeError) as e:
        raise CheckpointFormatError(f"Corrupted checkpoint: {e}") from None

    expected = param_shapes(hidden, n_layers, n_solvers, homogeneous, feature_mode)
    actual = {name: t.shape for name, t in tensors.items()}
    if actual != expected:
        raise CheckpointFormatError(
            f"Tensors do not match the declared architecture: "
            f"missing {sorted(set(expected) - set(actual))}, "
            f"unexpected {sorted(set(actual) - set(expected))}"
        )

    return ModelParameters(
        hidden=hidden,
        n_layers=n_layers,
        n_solvers=n_solvers,
        tensors={name: tensors[name] for name in expected},
        homogeneous=homogeneous,
        feature_mode=feature_mode,
        schema_hash=schema_hash,
        feature_seed=feature_seed,
    )


def save_checkpoint(params: ModelParameters, path: Path | str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        f.write(dumps(params))


def load_checkpoint(path: Path | str) -> ModelParameters:
    with open(path, "rb") as f:
        return loads(f.read())


def check_schema(params: ModelParameters):
    """Ensures a checkpoint was trained on the features this version computes"""
    if params.schema_hash != FEATURE_SCHEMA_HASH:
        raise SchemaMismatch(
            f"Checkpoint feature schema {params.schema_hash:#018x} does not match "
            f"the featurizer's {FEATURE_SCHEMA_HASH:#018x}"
        )
