"""Patch extraction, probability-weighted sampling, and output reconstruction.

Reconstruction supports the non-overlapping mosaic, the 50 %-overlap mean,
and overlap blending with a second-order spline weight window.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .errors import (
    EmptyMask,
    LayoutMismatch,
    OddLength,
    PatchLargerThanVolume,
    WrongPatchCount,
)
from .volcore import Dtype, Volume, require_binary


class PatchShape(NamedTuple):
    """Patch extent in voxels; pz = 1 expresses 2D patches."""

    px: int
    py: int
    pz: int = 1


class Overlap(Enum):
    NONE = "none"
    HALF = "half"


@dataclass
class PatchLayout:
    """Geometry tying extracted patches back to their source positions.

    Origins live in the padded coordinate frame and are ordered x-fastest
    (x varies quickest, then y, then z).
    """

    source_dims: tuple[int, int, int]
    patch: PatchShape
    stride: tuple[int, int, int]
    padding: tuple[int, int, int]
    overlap: Overlap
    origins: list[tuple[int, int, int]] = field(default_factory=list)

    @property
    def padded_dims(self) -> tuple[int, int, int]:
        return tuple(d + p for d, p in zip(self.source_dims, self.padding))

    def __post_init__(self):
        self.patch = PatchShape(*self.patch)
        if any(s < 1 for s in self.stride):
            raise LayoutMismatch(f"stride components must be >= 1, got {self.stride}")
        seen = set()
        padded = self.padded_dims
        for o in self.origins:
            if o in seen:
                raise LayoutMismatch(f"duplicate origin {o}")
            seen.add(o)
            if any(c < 0 or c + p > d for c, p, d in zip(o, self.patch, padded)):
                raise LayoutMismatch(f"origin {o} + patch {tuple(self.patch)} exceeds {padded}")
        if self.origins != sorted(self.origins, key=lambda o: (o[2], o[1], o[0])):
            raise LayoutMismatch("origins must be sorted x-fastest")

    def to_json(self) -> str:
        doc = {
            "source_dims": list(self.source_dims),
            "patch": list(self.patch),
            "stride": list(self.stride),
            "padding": list(self.padding),
            "overlap": self.overlap.value,
            "origins": [list(o) for o in self.origins],
        }
        return json.dumps(doc, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "PatchLayout":
        doc = json.loads(text)
        return cls(
            source_dims=tuple(doc["source_dims"]),
            patch=PatchShape(*doc["patch"]),
            stride=tuple(doc["stride"]),
            padding=tuple(doc["padding"]),
            overlap=Overlap(doc["overlap"]),
            origins=[tuple(o) for o in doc["origins"]],
        )


def _axis_grid(dim: int, p: int, overlap: Overlap) -> tuple[int, int, list[int]]:
    """Stride, padded size and origin list along one axis."""
    padded = math.ceil(dim / p) * p
    if overlap is Overlap.NONE:
        stride = p
    else:
        stride = math.ceil(p / 2)
        rem = (padded - p) % stride
        if rem:
            padded += stride - rem  # last patch must end exactly at the border
    return stride, padded, list(range(0, padded - p + 1, stride))


def plan_grid(dims: tuple[int, int, int], patch: PatchShape, overlap: Overlap) -> PatchLayout:
    """Lay out a regular patch grid over a volume of the given dims.

    ``NONE`` tiles with stride = patch after padding dims up to a multiple of
    the patch; ``HALF`` uses stride = ceil(patch/2) so interior voxels are
    covered 2^d times for d overlapping axes.
    """
    patch = PatchShape(*patch)
    if any(p < 1 for p in patch):
        raise PatchLargerThanVolume(f"patch components must be >= 1, got {tuple(patch)}")
    if any(p > d for p, d in zip(patch, dims)):
        raise PatchLargerThanVolume(f"patch {tuple(patch)} exceeds volume dims {dims}")
    per_axis = [_axis_grid(d, p, overlap) for d, p in zip(dims, patch)]
    stride = tuple(a[0] for a in per_axis)
    padding = tuple(a[1] - d for a, d in zip(per_axis, dims))
    xs, ys, zs = (a[2] for a in per_axis)
    origins = [(x, y, z) for z in zs for y in ys for x in xs]
    return PatchLayout(tuple(dims), patch, stride, padding, overlap, origins)


def _pad_reflect(arr: np.ndarray, padding: tuple[int, int, int]) -> np.ndarray:
    ax, ay, az = padding
    if ax == ay == az == 0:
        return arr
    return np.pad(arr, ((0, az), (0, ay), (0, ax)), mode="symmetric")


def extract(v: Volume, layout: PatchLayout) -> list[Volume]:
    """Cut the layout's patches out of the volume, mirror-padding the tail."""
    if tuple(v.dims) != tuple(layout.source_dims):
        raise LayoutMismatch(f"volume dims {v.dims} != layout source dims {layout.source_dims}")
    padded = _pad_reflect(v.data, layout.padding)
    px, py, pz = layout.patch
    out = []
    for ox, oy, oz in layout.origins:
        chunk = padded[oz : oz + pz, oy : oy + py, ox : ox + px]
        out.append(Volume(np.ascontiguousarray(chunk), v.spacing))
    return out


def _check_patches(patches: Sequence[Volume], layout: PatchLayout,
                   require_f32: bool = False) -> None:
    if len(patches) != len(layout.origins):
        raise WrongPatchCount(f"layout has {len(layout.origins)} origins, got {len(patches)} patches")
    for p in patches:
        if tuple(p.dims) != tuple(layout.patch):
            raise LayoutMismatch(f"patch dims {p.dims} != layout patch {tuple(layout.patch)}")
        if require_f32 and p.dtype is not Dtype.F32:
            raise LayoutMismatch(f"this reconstruction needs F32 patches, got {p.dtype.name}")


def _crop(arr: np.ndarray, dims: tuple[int, int, int]) -> np.ndarray:
    nx, ny, nz = dims
    return np.ascontiguousarray(arr[:nz, :ny, :nx])


def reconstruct_mosaic(patches: Sequence[Volume], layout: PatchLayout,
                       spacing=None) -> Volume:
    """Tile non-overlapping patches back into a volume; exact inverse of
    extract for padding-free layouts."""
    if layout.overlap is not Overlap.NONE:
        raise LayoutMismatch("mosaic reconstruction needs a no-overlap layout")
    _check_patches(patches, layout)
    px, py, pz = layout.patch
    pnx, pny, pnz = layout.padded_dims
    canvas = np.zeros((pnz, pny, pnx), dtype=patches[0].data.dtype)
    for p, (ox, oy, oz) in zip(patches, layout.origins):
        canvas[oz : oz + pz, oy : oy + py, ox : ox + px] = p.data
    return Volume(_crop(canvas, layout.source_dims), spacing or patches[0].spacing)


def reconstruct_overlap_mean(patches: Sequence[Volume], layout: PatchLayout,
                             spacing=None) -> Volume:
    """Average all patches covering each voxel (the 50 %-overlap strategy)."""
    if layout.overlap is not Overlap.HALF:
        raise LayoutMismatch("overlap-mean reconstruction needs a half-overlap layout")
    _check_patches(patches, layout, require_f32=True)
    px, py, pz = layout.patch
    pnx, pny, pnz = layout.padded_dims
    acc = np.zeros((pnz, pny, pnx), dtype=np.float64)
    cnt = np.zeros((pnz, pny, pnx), dtype=np.int64)
    for p, (ox, oy, oz) in zip(patches, layout.origins):
        acc[oz : oz + pz, oy : oy + py, ox : ox + px] += p.data
        cnt[oz : oz + pz, oy : oy + py, ox : ox + px] += 1
    out = (acc / cnt).astype(np.float32)
    return Volume(_crop(out, layout.source_dims), spacing or patches[0].spacing)


# --- spline blending ------------------------------------------------------------

def _spline_bump(t: float) -> float:
    # second-order spline: 2t^2 rising to 1 - 2(1-t)^2, meeting at t = 0.5
    if t <= 0.5:
        return 2.0 * t * t
    u = 1.0 - t
    return 1.0 - 2.0 * u * u


def spline_window_1d(length: int) -> np.ndarray:
    """Second-order spline weight window of even length.

    Symmetric, strictly positive, and shifted copies at stride length/2 sum
    to exactly 1 at every position.
    """
    if length < 2 or length % 2 != 0:
        raise OddLength(f"window length must be even and >= 2, got {length}")
    return _window_any(length)


def _window_any(length: int) -> np.ndarray:
    """Spline window for any positive length (length 1 degenerates to [1])."""
    if length == 1:
        return np.ones(1, dtype=np.float64)
    w = np.empty(length, dtype=np.float64)
    for i in range((length + 1) // 2):
        w[i] = _spline_bump((i + 0.5) * 2.0 / length)
    for i in range((length + 1) // 2, length):
        w[i] = w[length - 1 - i]  # mirror keeps the window exactly symmetric
    return w


def blend_weights(patch: PatchShape) -> np.ndarray:
    """Separable per-voxel blend weight block for one patch."""
    px, py, pz = patch
    wx, wy, wz = _window_any(px), _window_any(py), _window_any(pz)
    return wz[:, None, None] * wy[None, :, None] * wx[None, None, :]


def reconstruct_blend(patches: Sequence[Volume], layout: PatchLayout,
                      spacing=None) -> Volume:
    """Weighted overlap-add of half-overlapping patches with spline windows.

    Voxel value = sum_k w_k * patch_k / sum_k w_k; normalizing by the
    accumulated weight keeps border and padded voxels well-defined.
    """
    if layout.overlap is not Overlap.HALF:
        raise LayoutMismatch("blend reconstruction needs a half-overlap layout")
    _check_patches(patches, layout, require_f32=True)
    px, py, pz = layout.patch
    pnx, pny, pnz = layout.padded_dims
    w = blend_weights(layout.patch)
    acc = np.zeros((pnz, pny, pnx), dtype=np.float64)
    den = np.zeros((pnz, pny, pnx), dtype=np.float64)
    for p, (ox, oy, oz) in zip(patches, layout.origins):
        acc[oz : oz + pz, oy : oy + py, ox : ox + px] += w * p.data
        den[oz : oz + pz, oy : oy + py, ox : ox + px] += w
    out = (acc / den).astype(np.float32)
    return Volume(_crop(out, layout.source_dims), spacing or patches[0].spacing)


# --- probability-weighted sampling ------------------------------------------------

@dataclass
class ProbabilityMap:
    """Per-voxel sampling distribution giving fixed total mass to each class.

    Probabilities are kept in float64 (shape ``(nz, ny, nx)``) so the total
    mass is 1 to within accumulation error; every foreground voxel carries
    the same value, likewise background.
    """

    probs: np.ndarray
    class_mass: tuple[float, float]  # (foreground, background)
    spacing: tuple[float, float, float] = (1.0, 1.0, 1.0)

    def __post_init__(self):
        total = float(self.probs.sum())
        if not math.isclose(total, 1.0, abs_tol=1e-6):
            raise ValueError(f"probability map must sum to 1, got {total}")

    @property
    def dims(self) -> tuple[int, int, int]:
        nz, ny, nx = self.probs.shape
        return (nx, ny, nz)

    def as_volume(self) -> Volume:
        return Volume(self.probs.astype(np.float32), self.spacing)


def build_probability_map(gt: Volume, fg_mass: float) -> ProbabilityMap:
    """Spread fg_mass uniformly over foreground voxels and the rest over
    background; a single-class mask degenerates to the uniform map."""
    require_binary(gt, "probability-map ground truth")
    if not (0.0 < fg_mass < 1.0):
        raise ValueError(f"fg_mass must lie in (0, 1), got {fg_mass}")
    n = gt.voxel_count
    if n == 0:
        raise EmptyMask("ground-truth mask has no voxels")
    fg = gt.data.astype(bool)
    n_fg = int(fg.sum())
    n_bg = n - n_fg
    probs = np.empty(gt.data.shape, dtype=np.float64)
    if n_fg == 0 or n_bg == 0:
        probs.fill(1.0 / n)
        mass = (0.0, 1.0) if n_fg == 0 else (1.0, 0.0)
    else:
        probs[fg] = fg_mass / n_fg
        probs[~fg] = (1.0 - fg_mass) / n_bg
        mass = (fg_mass, 1.0 - fg_mass)
    return ProbabilityMap(probs, mass, gt.spacing)


def sample_centers(pmap: ProbabilityMap, n: int, seed: int) -> np.ndarray:
    """Draw n voxel centers i.i.d. from the map; returns an (n, 3) array of
    (x, y, z) coordinates. Deterministic per seed."""
    if n < 1:
        raise ValueError(f"need n >= 1 samples, got {n}")
    rng = np.random.default_rng(seed)
    flat = pmap.probs.ravel()
    idx = rng.choice(flat.size, size=n, replace=True, p=flat / flat.sum())
    nx, ny, _ = pmap.dims
    x = idx % nx
    y = (idx // nx) % ny
    z = idx // (nx * ny)
    return np.stack([x, y, z], axis=1).astype(np.int64)


def sample_patch_origins(pmap: ProbabilityMap, patch: PatchShape, n: int,
                         seed: int) -> list[tuple[int, int, int]]:
    """Sample patch origins by drawing centers from the map and clamping each
    surrounding patch into bounds."""
    patch = PatchShape(*patch)
    dims = pmap.dims
    if any(p > d for p, d in zip(patch, dims)):
        raise PatchLargerThanVolume(f"patch {tuple(patch)} exceeds map dims {dims}")
    centers = sample_centers(pmap, n, seed)
    origins = []
    for cx, cy, cz in centers:
        o = tuple(
            int(np.clip(c - p // 2, 0, d - p))
            for c, p, d in zip((cx, cy, cz), patch, dims)
        )
        origins.append(o)
    return origins


def foreground_fraction(gt_patch: Volume) -> float:
    require_binary(gt_patch, "patch ground truth")
    return float(gt_patch.data.sum()) / gt_patch.voxel_count


def discard_low_foreground(patch_gt_pairs: Iterable[tuple[Volume, Volume]],
                           min_fg_fraction: float) -> list[tuple[Volume, Volume]]:
    """Keep (patch, gt) pairs whose ground-truth foreground fraction reaches
    the minimum."""
    if not (0.0 <= min_fg_fraction < 1.0):
        raise ValueError(f"min_fg_fraction must lie in [0, 1), got {min_fg_fraction}")
    return [(p, g) for p, g in patch_gt_pairs if foreground_fraction(g) >= min_fg_fraction]
