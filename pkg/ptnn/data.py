"""
Synthetic data, sampling masks, projections and file I/O.

Linear indices follow the tensor storage convention used throughout the
package: i1 varies fastest, then i2, then i3 (Fortran order).

Random streams: every generator is numpy's PCG64 seeded from
SeedSequence(seed, spawn_key=(stream,)). Stream 0 draws low-rank factors,
stream 1 draws masks, so the tensor and the mask of one trial are independent
while both stay reproducible across platforms.
"""

import logging
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Tuple, Union

import numpy as np
from numpy.typing import NDArray
from PIL import Image, UnidentifiedImageError

from .errors import (
    DimensionMismatchError,
    DomainError,
    ImageFormatError,
    MaskFormatError,
    TensorFormatError,
)
from .talg import Tensor3, as_tensor3, tprod

logger = logging.getLogger(__name__)

Dims = Tuple[int, int, int]
PathLike = Union[str, Path]

RngSeed = int
TENSOR_STREAM = 0
MASK_STREAM = 1

TENSOR_MAGIC = b"TNS3"
MASK_MAGIC = b"MSK3"
FORMAT_VERSION = 1
_TENSOR_HEADER = struct.Struct("<4sIQQQ")
_MASK_HEADER = struct.Struct("<4sIQQQQ")
# Refuse headers describing more than 2**40 entries; real inputs are far below.
_MAX_ENTRIES = 1 << 40


def make_rng(seed: RngSeed, stream: int = TENSOR_STREAM) -> np.random.Generator:
    """PCG64 generator for (seed, stream)."""
    if not 0 <= int(seed) < 2**64:
        raise DomainError(f"seed must be a 64-bit unsigned integer, got {seed}")
    seq = np.random.SeedSequence(int(seed), spawn_key=(stream,))
    return np.random.Generator(np.random.PCG64(seq))


def _check_dims(dims) -> Dims:
    dims = tuple(int(d) for d in dims)
    if len(dims) != 3 or min(dims) < 1:
        raise DomainError(f"dims must be three positive integers, got {dims}")
    return dims


# ---------------------------------------------------------------------------
# Sampling masks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SamplingMask:
    """
    Observed index set Ω.

    Attributes:
        dims: tensor dimensions (I1, I2, I3)
        observed: sorted, unique linear indices (i1 fastest)
    """

    dims: Dims
    observed: NDArray[np.int64]
    _bool: NDArray[np.bool_] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        dims = _check_dims(self.dims)
        idx = np.array(self.observed, dtype=np.int64)
        if idx.ndim != 1:
            raise DomainError("observed indices must be one-dimensional")
        size = int(np.prod(dims))
        if idx.size and (idx[0] < 0 or idx[-1] >= size):
            raise DomainError(f"observed index out of range for dims {dims}")
        if idx.size > 1 and np.any(np.diff(idx) <= 0):
            raise DomainError("observed indices must be strictly increasing")
        flags = np.zeros(size, dtype=bool)
        flags[idx] = True
        idx.setflags(write=False)
        flags = flags.reshape(dims, order="F")
        flags.setflags(write=False)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "observed", idx)
        object.__setattr__(self, "_bool", flags)

    @property
    def size(self) -> int:
        return int(np.prod(self.dims))

    @property
    def count(self) -> int:
        return int(self.observed.size)

    @property
    def sr(self) -> float:
        """Sampling rate |Ω| / (I1 I2 I3)."""
        return self.count / self.size

    def to_bool(self) -> NDArray[np.bool_]:
        """Read-only boolean array of shape dims, True on Ω."""
        return self._bool

    @classmethod
    def from_bool(cls, flags: np.ndarray) -> "SamplingMask":
        flags = np.asarray(flags, dtype=bool)
        if flags.ndim != 3:
            raise DimensionMismatchError(f"mask must be third-order, got shape {flags.shape}")
        return cls(flags.shape, np.flatnonzero(flags.ravel(order="F")))

    @classmethod
    def full(cls, dims: Dims) -> "SamplingMask":
        dims = _check_dims(dims)
        return cls(dims, np.arange(int(np.prod(dims)), dtype=np.int64))

    def __eq__(self, other) -> bool:
        if not isinstance(other, SamplingMask):
            return NotImplemented
        return self.dims == other.dims and np.array_equal(self.observed, other.observed)

    def __hash__(self) -> int:
        return hash((self.dims, self.observed.tobytes()))


def gen_mask(dims: Dims, sr: float, seed: RngSeed) -> SamplingMask:
    """
    Uniform subset of exactly round(sr * I1 I2 I3) indices, without replacement.

    Args:
        dims: tensor dims (I1, I2, I3)
        sr: sampling rate in (0, 1]
        seed: integer seed; masks use their own stream of it

    Returns:
        SamplingMask with sorted observed indices.
    """
    dims = _check_dims(dims)
    if not 0 < sr <= 1:
        raise DomainError(f"sampling rate must lie in (0, 1], got {sr}")
    size = int(np.prod(dims))
    count = int(round(sr * size))
    if count < 1:
        raise DomainError(f"sampling rate {sr} observes no entry of a {dims} tensor")
    rng = make_rng(seed, MASK_STREAM)
    observed = np.sort(rng.choice(size, size=count, replace=False)).astype(np.int64)
    logger.debug(f"Generated mask dims={dims} sr={sr} count={count} seed={seed}")
    return SamplingMask(dims, observed)


def _check_mask(x: Tensor3, mask: SamplingMask) -> None:
    if tuple(x.shape) != mask.dims:
        raise DimensionMismatchError(f"tensor {x.shape} does not match mask {mask.dims}")


def project(x: Tensor3, mask: SamplingMask) -> Tensor3:
    """P_Ω(x): keep observed entries, zero the rest."""
    x = as_tensor3(x)
    _check_mask(x, mask)
    return np.where(mask.to_bool(), x, 0.0)


def project_complement(x: Tensor3, mask: SamplingMask) -> Tensor3:
    """P_Ω̄(x) = x - P_Ω(x)."""
    x = as_tensor3(x)
    _check_mask(x, mask)
    return np.where(mask.to_bool(), 0.0, x)


observe = project


# ---------------------------------------------------------------------------
# Synthetic tensors
# ---------------------------------------------------------------------------


def gen_lowrank(dims: Dims, r: int, seed: RngSeed) -> Tensor3:
    """
    Tensor of tubal rank at most r: P * Q with standard normal P (I1 x r x I3)
    and Q (r x I2 x I3), drawn in that order from stream 0 of the seed.

    Raises:
        DomainError: r outside [1, min(I1, I2)]
    """
    i1, i2, i3 = _check_dims(dims)
    if not 1 <= r <= min(i1, i2):
        raise DomainError(f"rank must lie in [1, {min(i1, i2)}], got {r}")
    rng = make_rng(seed, TENSOR_STREAM)
    p = rng.standard_normal((i1, r, i3))
    q = rng.standard_normal((r, i2, i3))
    return tprod(p, q)


# ---------------------------------------------------------------------------
# Tensor and mask files
# ---------------------------------------------------------------------------


def _read_bytes(path: PathLike) -> bytes:
    return Path(path).read_bytes()


def _check_entries(dims: Dims, error_cls) -> int:
    if min(dims) < 1:
        raise error_cls(f"header has an empty dimension: {dims}")
    size = 1
    for d in dims:
        size *= d
        if size > _MAX_ENTRIES:
            raise error_cls(f"header dimensions {dims} overflow the entry limit")
    return size


def write_tensor(path: PathLike, x: Tensor3) -> None:
    """Write x as 'TNS3' | u32 version | 3 x u64 dims | little-endian f64, i1 fastest."""
    x = as_tensor3(x)
    header = _TENSOR_HEADER.pack(TENSOR_MAGIC, FORMAT_VERSION, *x.shape)
    payload = np.asarray(x, dtype="<f8").tobytes(order="F")
    Path(path).write_bytes(header + payload)
    logger.debug(f"Wrote tensor {x.shape} to {path}")


def read_tensor(path: PathLike) -> Tensor3:
    data = _read_bytes(path)
    if len(data) < _TENSOR_HEADER.size:
        raise TensorFormatError(f"{path}: truncated header")
    magic, version, *dims = _TENSOR_HEADER.unpack_from(data)
    if magic != TENSOR_MAGIC:
        raise TensorFormatError(f"{path}: bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise TensorFormatError(f"{path}: unsupported version {version}")
    dims = tuple(dims)
    size = _check_entries(dims, TensorFormatError)
    payload = data[_TENSOR_HEADER.size :]
    if len(payload) != size * 8:
        raise TensorFormatError(
            f"{path}: payload holds {len(payload)} bytes, header dims {dims} need {size * 8}"
        )
    x = np.frombuffer(payload, dtype="<f8").reshape(dims, order="F").astype(np.float64)
    if not np.all(np.isfinite(x)):
        raise TensorFormatError(f"{path}: payload contains NaN or Inf")
    return x


def write_mask(path: PathLike, mask: SamplingMask) -> None:
    """Write 'MSK3' | u32 version | 3 x u64 dims | u64 count | count x u64 indices."""
    header = _MASK_HEADER.pack(MASK_MAGIC, FORMAT_VERSION, *mask.dims, mask.count)
    payload = np.asarray(mask.observed, dtype="<u8").tobytes()
    Path(path).write_bytes(header + payload)
    logger.debug(f"Wrote mask {mask.dims} with {mask.count} entries to {path}")


def read_mask(path: PathLike) -> SamplingMask:
    data = _read_bytes(path)
    if len(data) < _MASK_HEADER.size:
        raise MaskFormatError(f"{path}: truncated header")
    magic, version, i1, i2, i3, count = _MASK_HEADER.unpack_from(data)
    if magic != MASK_MAGIC:
        raise MaskFormatError(f"{path}: bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise MaskFormatError(f"{path}: unsupported version {version}")
    dims = (i1, i2, i3)
    size = _check_entries(dims, MaskFormatError)
    payload = data[_MASK_HEADER.size :]
    if count > size or len(payload) != count * 8:
        raise MaskFormatError(f"{path}: payload does not hold {count} indices")
    idx = np.frombuffer(payload, dtype="<u8")
    if idx.size and int(idx.max()) >= size:
        raise MaskFormatError(f"{path}: index out of range for dims {dims}")
    if idx.size > 1 and np.any(idx[1:] <= idx[:-1]):
        raise MaskFormatError(f"{path}: indices are not strictly increasing (duplicate or unsorted)")
    return SamplingMask(dims, idx.astype(np.int64))


# ---------------------------------------------------------------------------
# Images
# ---------------------------------------------------------------------------


def image_to_tensor(path: PathLike) -> Tensor3:
    """Load an 8-bit image as an H x W x 3 tensor scaled to [0, 1]."""
    try:
        with Image.open(path) as img:
            if img.mode not in ("RGB", "L", "P", "RGBA"):
                raise ImageFormatError(f"{path}: unsupported pixel mode {img.mode}")
            pixels = np.asarray(img.convert("RGB"), dtype=np.uint8)
    except FileNotFoundError:
        raise
    except UnidentifiedImageError as e:
        raise ImageFormatError(f"{path}: unrecognized image format") from e
    except (OSError, SyntaxError) as e:
        raise ImageFormatError(f"{path}: cannot decode image: {e}") from e
    return pixels.astype(np.float64) / 255.0


def quantize(x: Tensor3) -> NDArray[np.uint8]:
    """Clamp to [0, 1] and round to 8-bit levels."""
    return np.round(np.clip(as_tensor3(x), 0.0, 1.0) * 255.0).astype(np.uint8)


def tensor_to_image(x: Tensor3, path: PathLike) -> None:
    """Write an H x W x 3 (or H x W x 1) tensor as an 8-bit image; format from the suffix."""
    x = as_tensor3(x)
    if x.shape[2] == 3:
        img = Image.fromarray(quantize(x))
    elif x.shape[2] == 1:
        img = Image.fromarray(quantize(x)[:, :, 0])
    else:
        raise DimensionMismatchError(f"images need 1 or 3 frontal slices, got {x.shape[2]}")
    try:
        img.save(path)
    except (KeyError, ValueError) as e:
        raise ImageFormatError(f"{path}: unsupported output format") from e
    logger.debug(f"Wrote image {x.shape[:2]} to {path}")
