"""Core volume container, EMVOL file I/O, binarization, morphology and splits.

Volumes are stored as C-order ``(z, y, x)`` numpy arrays so that the flat
buffer is x-fastest, matching the on-disk EMVOL layout.
"""

from __future__ import annotations

import math
import os
import struct
import tempfile
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np
from scipy import ndimage

from .errors import (
    BadMagic,
    DegenerateSplit,
    DimOverflow,
    IoFailure,
    OutOfRangeProbability,
    TruncatedFile,
    UnknownDtype,
)

MAGIC = b"EMVOL1"
_HEADER = struct.Struct("<6sB3I3f")  # magic, dtype, dims (nx,ny,nz), spacing (sx,sy,sz)
HEADER_SIZE = _HEADER.size  # 31 bytes

_MAX_DIM = 2**32 - 1
_MAX_VOXELS = 2**64 - 1


class Dtype(Enum):
    """Voxel encodings supported by the EMVOL container."""

    U8 = 0
    F32 = 1

    @property
    def numpy_dtype(self) -> np.dtype:
        return np.dtype(np.uint8) if self is Dtype.U8 else np.dtype(np.float32)


@dataclass(eq=False)
class Volume:
    """A 3D scalar grid (grayscale, probability or binary label).

    ``data`` has shape ``(nz, ny, nx)``; ``spacing`` is ``(sx, sy, sz)`` in
    nanometers and is kept at 32-bit float precision (the container's
    precision) so save/load round-trips are exact.
    """

    data: np.ndarray
    spacing: tuple[float, float, float] = (1.0, 1.0, 1.0)

    def __post_init__(self):
        arr = np.asarray(self.data)
        if arr.ndim != 3:
            raise ValueError(f"volume data must be 3D (z, y, x), got ndim={arr.ndim}")
        if arr.dtype not in (np.dtype(np.uint8), np.dtype(np.float32)):
            raise ValueError(f"unsupported voxel dtype {arr.dtype}; use uint8 or float32")
        if any(s <= 0 for s in arr.shape):
            raise ValueError(f"all dimensions must be positive, got shape {arr.shape}")
        self.data = np.ascontiguousarray(arr)
        spacing = tuple(float(np.float32(s)) for s in self.spacing)
        if len(spacing) != 3 or any(not math.isfinite(s) or s <= 0 for s in spacing):
            raise ValueError(f"spacing components must be finite and > 0, got {self.spacing}")
        self.spacing = spacing

    @property
    def dims(self) -> tuple[int, int, int]:
        """(nx, ny, nz) voxel counts."""
        nz, ny, nx = self.data.shape
        return (nx, ny, nz)

    @property
    def nx(self) -> int:
        return self.data.shape[2]

    @property
    def ny(self) -> int:
        return self.data.shape[1]

    @property
    def nz(self) -> int:
        return self.data.shape[0]

    @property
    def dtype(self) -> Dtype:
        return Dtype.U8 if self.data.dtype == np.uint8 else Dtype.F32

    @property
    def voxel_count(self) -> int:
        return int(self.data.size)

    def copy(self) -> "Volume":
        return Volume(self.data.copy(), self.spacing)

    def with_data(self, data: np.ndarray) -> "Volume":
        """New volume with the same spacing but different voxels."""
        return Volume(data, self.spacing)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Volume):
            return NotImplemented
        return (
            self.data.shape == other.data.shape
            and self.data.dtype == other.data.dtype
            and self.spacing == other.spacing
            and np.array_equal(self.data, other.data)
        )

    def __repr__(self) -> str:
        nx, ny, nz = self.dims
        return f"Volume({nx}x{ny}x{nz}, {self.dtype.name}, spacing={self.spacing})"


def new_volume(dims: tuple[int, int, int], dtype: Dtype, spacing=(1.0, 1.0, 1.0),
               fill=0) -> Volume:
    """Allocate a constant-filled volume with dims given as (nx, ny, nz)."""
    nx, ny, nz = dims
    arr = np.full((nz, ny, nx), fill, dtype=dtype.numpy_dtype)
    return Volume(arr, spacing)


def is_binary(v: Volume) -> bool:
    return v.dtype is Dtype.U8 and bool(np.isin(v.data, (0, 1)).all())


def require_binary(v: Volume, what: str = "input") -> None:
    if v.dtype is not Dtype.U8:
        raise ValueError(f"{what} must be a U8 binary mask, got {v.dtype.name}")
    if not np.isin(v.data, (0, 1)).all():
        raise ValueError(f"{what} must contain only 0/1 voxel values")


def require_probabilities(v: Volume, what: str = "input") -> None:
    if v.dtype is not Dtype.F32:
        raise OutOfRangeProbability(f"{what} must be an F32 probability volume, got {v.dtype.name}")
    d = v.data
    if not bool(((d >= 0.0) & (d <= 1.0)).all()):
        raise OutOfRangeProbability(
            f"{what} has values outside [0, 1] (min={d.min()}, max={d.max()})"
        )


# --- EMVOL container ---------------------------------------------------------

def save_volume(v: Volume, path) -> None:
    """Write the EMVOL v1 layout: 31-byte header followed by the raw buffer.

    The write is atomic (temp file + rename) so readers never observe a
    partially written volume.
    """
    nx, ny, nz = v.dims
    if max(nx, ny, nz) > _MAX_DIM or nx * ny * nz > _MAX_VOXELS:
        raise DimOverflow(f"dims {v.dims} do not fit the container")
    header = _HEADER.pack(MAGIC, v.dtype.value, nx, ny, nz, *v.spacing)
    path = Path(path)
    tmp_fd, tmp_name = tempfile.mkstemp(dir=path.parent or ".", suffix=".emvol.tmp")
    try:
        with os.fdopen(tmp_fd, "wb") as fh:
            fh.write(header)
            fh.write(v.data.tobytes())
        os.replace(tmp_name, path)
    except OSError as exc:
        try:
            os.unlink(tmp_name)
        except OSError:
            pass
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def load_volume(path) -> Volume:
    """Read an EMVOL file, validating magic, dtype, dims and buffer length."""
    try:
        blob = Path(path).read_bytes()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    if len(blob) < len(MAGIC):
        raise TruncatedFile(f"{path}: {len(blob)} bytes is too short for a header")
    if blob[: len(MAGIC)] != MAGIC:
        raise BadMagic(f"{path}: bad magic {blob[:len(MAGIC)]!r}")
    if len(blob) < HEADER_SIZE:
        raise TruncatedFile(f"{path}: header needs {HEADER_SIZE} bytes, file has {len(blob)}")
    _, dtype_byte, nx, ny, nz, sx, sy, sz = _HEADER.unpack_from(blob)
    try:
        dtype = Dtype(dtype_byte)
    except ValueError:
        raise UnknownDtype(f"{path}: unknown dtype byte {dtype_byte}") from None
    if min(nx, ny, nz) == 0 or nx * ny * nz > _MAX_VOXELS:
        raise DimOverflow(f"{path}: bad dims ({nx}, {ny}, {nz})")
    expected = nx * ny * nz * dtype.numpy_dtype.itemsize
    body = blob[HEADER_SIZE:]
    if len(body) != expected:
        raise TruncatedFile(f"{path}: expected {expected} data bytes, found {len(body)}")
    arr = np.frombuffer(body, dtype=dtype.numpy_dtype).reshape(nz, ny, nx).copy()
    return Volume(arr, (sx, sy, sz))


# --- binarization ------------------------------------------------------------

def binarize(p: Volume, threshold: float = 0.5) -> Volume:
    """Threshold a probability volume into a binary mask.

    A voxel becomes foreground iff its value is >= threshold, so ties at the
    threshold map to foreground.
    """
    require_probabilities(p, "binarize input")
    if not (0.0 <= threshold <= 1.0):
        raise OutOfRangeProbability(f"threshold must lie in [0, 1], got {threshold}")
    return p.with_data((p.data >= threshold).astype(np.uint8))


# --- binary morphology -------------------------------------------------------

def _morph_size(radius: int, structure: str, nz: int) -> tuple[int, int, int]:
    if not isinstance(radius, int) or radius < 1:
        raise ValueError(f"radius must be an integer >= 1, got {radius}")
    k = 2 * radius + 1
    if structure == "square2d":
        return (1, k, k)
    if structure == "cube3d":
        return (k, k, k)
    raise ValueError(f"unknown structuring element {structure!r}")


def dilate(m: Volume, radius: int = 1, structure: str = "square2d") -> Volume:
    """Binary dilation (max filter) with a square/cube structuring element.

    ``square2d`` applies a (2r+1)^2 square independently to each z-slice;
    out-of-bounds voxels count as background.
    """
    require_binary(m, "dilate input")
    size = _morph_size(radius, structure, m.nz)
    out = ndimage.maximum_filter(m.data, size=size, mode="constant", cval=0)
    return m.with_data(out)


def erode(m: Volume, radius: int = 1, structure: str = "square2d") -> Volume:
    """Binary erosion (min filter); borders erode because out-of-bounds
    voxels count as background."""
    require_binary(m, "erode input")
    size = _morph_size(radius, structure, m.nz)
    out = ndimage.minimum_filter(m.data, size=size, mode="constant", cval=0)
    return m.with_data(out)


def complement(m: Volume) -> Volume:
    require_binary(m, "complement input")
    return m.with_data((1 - m.data).astype(np.uint8))


# --- dataset splits ----------------------------------------------------------

class SplitMode(Enum):
    RANDOM_SLICES = "random"
    CONSECUTIVE_TAIL = "consecutive"


@dataclass(frozen=True)
class SplitSpec:
    """How to carve validation slices out of a training stack."""

    fraction: float
    mode: SplitMode = SplitMode.RANDOM_SLICES
    seed: int = 0

    def __post_init__(self):
        if not (0.0 < self.fraction < 1.0):
            raise ValueError(f"fraction must lie in (0, 1), got {self.fraction}")


def split_validation(n_slices: int, spec: SplitSpec) -> tuple[list[int], list[int]]:
    """Partition slice indices 0..n-1 into (train, validation).

    Validation size is round-half-up of fraction * n. ``CONSECUTIVE_TAIL``
    takes the final slices; ``RANDOM_SLICES`` draws without replacement from
    the seeded generator. Deterministic for a fixed seed.
    """
    if n_slices < 2:
        raise DegenerateSplit(f"need at least 2 slices, got {n_slices}")
    n_val = math.floor(spec.fraction * n_slices + 0.5)
    if n_val < 1:
        raise DegenerateSplit(f"fraction {spec.fraction} of {n_slices} slices rounds to empty")
    if n_val >= n_slices:
        raise DegenerateSplit(f"validation would take all {n_slices} slices")
    if spec.mode is SplitMode.CONSECUTIVE_TAIL:
        val = list(range(n_slices - n_val, n_slices))
    else:
        rng = np.random.default_rng(spec.seed)
        val = sorted(int(i) for i in rng.choice(n_slices, size=n_val, replace=False))
    val_set = set(val)
    train = [i for i in range(n_slices) if i not in val_set]
    return train, val


def replicate_slices(v: Volume, factor: int) -> Volume:
    """Concatenate ``factor`` copies of the volume along z (training-set
    duplication)."""
    if not isinstance(factor, int) or factor < 1:
        raise ValueError(f"factor must be an integer >= 1, got {factor}")
    if factor * v.nz > _MAX_DIM or factor * v.voxel_count > _MAX_VOXELS:
        raise DimOverflow(f"replicating z={v.nz} by {factor} overflows the container")
    if factor == 1:
        return v.copy()
    return v.with_data(np.concatenate([v.data] * factor, axis=0))
