"""Parameter containers shared by the aggregation, attack and training code.

A :class:`ParamVector` is an immutable float64 array with a shape attached.
All arithmetic happens on the flat row-major view so every peer agrees on
element order bit for bit.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np


class ParamError(ValueError):
    """Base class for invalid parameter-vector operations."""


class ShapeMismatchError(ParamError):
    pass


class NonFiniteError(ParamError):
    pass


_MAGIC = b"PVEC"


@dataclass(frozen=True, eq=False)
class ParamVector:
    """Flat float64 values plus the tensor shape they came from."""

    data: np.ndarray
    shape: tuple[int, ...]

    def __post_init__(self):
        arr = np.ascontiguousarray(self.data, dtype=np.float64).reshape(-1)
        shape = tuple(int(s) for s in self.shape)
        if any(s <= 0 for s in shape):
            raise ShapeMismatchError(f"shape entries must be positive, got {shape}")
        if int(np.prod(shape, dtype=np.int64)) != arr.size:
            raise ShapeMismatchError(
                f"shape {shape} holds {int(np.prod(shape))} values, data has {arr.size}"
            )
        if not np.all(np.isfinite(arr)):
            raise NonFiniteError("parameter vector contains NaN or Inf")
        if arr is self.data or not arr.flags.owndata:
            arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)
        object.__setattr__(self, "shape", shape)

    @classmethod
    def from_array(cls, values) -> "ParamVector":
        arr = np.asarray(values, dtype=np.float64)
        if arr.ndim == 0:
            arr = arr.reshape(1)
        return cls(arr.reshape(-1), arr.shape)

    @classmethod
    def zeros(cls, shape: Sequence[int] | int) -> "ParamVector":
        shape = (shape,) if isinstance(shape, int) else tuple(shape)
        return cls(np.zeros(int(np.prod(shape))), shape)

    def __len__(self) -> int:
        return self.data.size

    def __eq__(self, other) -> bool:
        if not isinstance(other, ParamVector):
            return NotImplemented
        return self.shape == other.shape and np.array_equal(self.data, other.data)

    __hash__ = None

    def __repr__(self) -> str:
        return f"ParamVector(shape={self.shape}, data={np.array2string(self.data, threshold=8)})"

    def as_array(self) -> np.ndarray:
        """Read-only view in the original tensor shape."""
        return self.data.reshape(self.shape)

    def with_data(self, values: np.ndarray) -> "ParamVector":
        return ParamVector(values, self.shape)

    # -- serialization -------------------------------------------------
    def to_json_obj(self) -> dict:
        return {"shape": list(self.shape), "data": [float(v) for v in self.data]}

    @classmethod
    def from_json_obj(cls, obj) -> "ParamVector":
        if isinstance(obj, dict):
            return cls(np.asarray(obj["data"], dtype=np.float64), tuple(obj["shape"]))
        return cls.from_array(obj)

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj())

    @classmethod
    def from_json(cls, text: str) -> "ParamVector":
        return cls.from_json_obj(json.loads(text))

    def to_bytes(self) -> bytes:
        header = _MAGIC + struct.pack("<I", len(self.shape))
        header += struct.pack(f"<{len(self.shape)}Q", *self.shape)
        return header + self.data.astype("<f8").tobytes()

    @classmethod
    def from_bytes(cls, blob: bytes) -> "ParamVector":
        if blob[:4] != _MAGIC:
            raise ParamError("not a serialized ParamVector")
        (ndim,) = struct.unpack_from("<I", blob, 4)
        shape = struct.unpack_from(f"<{ndim}Q", blob, 8)
        offset = 8 + 8 * ndim
        return cls(np.frombuffer(blob, dtype="<f8", offset=offset).astype(np.float64), shape)


def check_same_shape(*vectors: ParamVector) -> tuple[int, ...]:
    if not vectors:
        raise ShapeMismatchError("no vectors given")
    shape = vectors[0].shape
    for v in vectors[1:]:
        if v.shape != shape:
            raise ShapeMismatchError(f"shape mismatch: {shape} vs {v.shape}")
    return shape


def axpy_combine(coeffs: Sequence[float], vectors: Sequence[ParamVector]) -> ParamVector:
    """Return ``sum(coeffs[i] * vectors[i])``, accumulated in list order."""
    if len(coeffs) != len(vectors):
        raise ShapeMismatchError(f"{len(coeffs)} coefficients for {len(vectors)} vectors")
    shape = check_same_shape(*vectors)
    out = np.zeros(vectors[0].data.size)
    with np.errstate(over="ignore", invalid="ignore"):
        for c, v in zip(coeffs, vectors):
            out += float(c) * v.data
    if not np.all(np.isfinite(out)):
        raise NonFiniteError("linear combination overflowed")
    return ParamVector(out, shape)


def vector_sum(vectors: Iterable[ParamVector]) -> ParamVector:
    """Left-to-right elementwise sum; order is the caller's contract."""
    vectors = list(vectors)
    shape = check_same_shape(*vectors)
    out = vectors[0].data.copy()
    for v in vectors[1:]:
        out += v.data
    return ParamVector(out, shape)


def mse(a: ParamVector, b: ParamVector) -> float:
    check_same_shape(a, b)
    diff = a.data - b.data
    return float(np.dot(diff, diff) / diff.size)


def l2_distance(a: ParamVector, b: ParamVector) -> float:
    check_same_shape(a, b)
    return float(np.linalg.norm(a.data - b.data))


def exact_mean(vectors: Sequence[ParamVector]) -> ParamVector:
    """Plain average in ascending index order (the aggregation target)."""
    total = vector_sum(vectors)
    return total.with_data(total.data / len(vectors))
