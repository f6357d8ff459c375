"""Invertible rigid transforms for test-time augmentation, plus the
stochastic training-time transforms (free rotation, shift, shear, zoom,
brightness, median filtering, elastic deformation).

Conventions: volumes are (z, y, x); quarter turns rotate in the xy-plane
with positive = counter-clockwise for x rightward / y downward; all
out-of-support resampling fills by edge-inclusive mirror reflection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np
from scipy import ndimage

from .errors import BadKernelSize, InterpolationOnMask
from .volcore import Dtype, Volume


class Interp(Enum):
    BILINEAR = "bilinear"
    NEAREST = "nearest"


def _order_for(v: Volume, interpolation: Interp, op: str) -> int:
    if interpolation is Interp.BILINEAR:
        if v.dtype is Dtype.U8:
            raise InterpolationOnMask(f"{op}: bilinear interpolation requested on a U8 mask")
        return 1
    return 0


# --- the rigid TTA group -----------------------------------------------------

@dataclass(frozen=True)
class RigidTransform:
    """One element of the 8-element (2D) or 16-element (3D) rigid group.

    The action is: flip x (optional), then k quarter turns in the xy-plane,
    then flip z (3D only). Every element has an exact inverse in the group.
    """

    ndim: int
    quarter_turns: int = 0
    flip_x: bool = False
    flip_z: bool = False

    def __post_init__(self):
        if self.ndim not in (2, 3):
            raise ValueError(f"dimensionality must be 2 or 3, got {self.ndim}")
        if not 0 <= self.quarter_turns <= 3:
            raise ValueError(f"quarter_turns must be in 0..3, got {self.quarter_turns}")
        if self.ndim == 2 and self.flip_z:
            raise ValueError("2D transforms cannot flip z")

    @property
    def name(self) -> str:
        parts = [f"r{90 * self.quarter_turns}"]
        if self.flip_x:
            parts.append("fx")
        if self.flip_z:
            parts.append("fz")
        return "+".join(parts)

    def is_identity(self) -> bool:
        return self.quarter_turns == 0 and not self.flip_x and not self.flip_z


def enumerate_tta(dimensionality: int) -> list[RigidTransform]:
    """All 8 (2D) or 16 (3D) rigid variants, identity first, in canonical
    order: quarter turns fastest, then x-flip, then z-flip."""
    if dimensionality == 2:
        return [
            RigidTransform(2, k, bool(fx))
            for fx in (0, 1)
            for k in range(4)
        ]
    if dimensionality == 3:
        return [
            RigidTransform(3, k, bool(fx), bool(fz))
            for fz in (0, 1)
            for fx in (0, 1)
            for k in range(4)
        ]
    raise ValueError(f"dimensionality must be 2 or 3, got {dimensionality}")


def apply_rigid(v: Volume, t: RigidTransform) -> Volume:
    """Apply a rigid transform as a pure voxel permutation (bit-exact)."""
    arr = v.data
    if t.flip_x:
        arr = np.flip(arr, axis=2)
    if t.quarter_turns:
        arr = np.rot90(arr, t.quarter_turns, axes=(1, 2))
    if t.flip_z:
        arr = np.flip(arr, axis=0)
    sx, sy, sz = v.spacing
    spacing = (sy, sx, sz) if t.quarter_turns % 2 else (sx, sy, sz)
    return Volume(np.ascontiguousarray(arr), spacing)


def invert_rigid(t: RigidTransform) -> RigidTransform:
    """Group inverse: pure rotations invert their turn count; every flipped
    element is an involution."""
    if t.flip_x:
        return t
    return RigidTransform(t.ndim, (4 - t.quarter_turns) % 4, False, t.flip_z)


def compose_rigid(first: RigidTransform, second: RigidTransform) -> RigidTransform:
    """The group element acting like ``second`` applied after ``first``."""
    if first.ndim != second.ndim:
        raise ValueError("cannot compose transforms of different dimensionality")
    # dihedral composition R^k2 F^f2 . R^k1 F^f1: pushing the second flip
    # left past the first rotation negates its turn count (F R^k = R^-k F)
    k1, f1 = first.quarter_turns, first.flip_x
    k2, f2 = second.quarter_turns, second.flip_x
    k = (k2 + k1) % 4 if not f2 else (k2 - k1) % 4
    fx = f1 != f2
    fz = first.flip_z != second.flip_z
    return RigidTransform(first.ndim, k, fx, fz if first.ndim == 3 else False)


# --- standalone training-time rigid transforms ----------------------------------

def square_rotation(v: Volume, k: int) -> Volume:
    """Rotate every slice by k quarter turns (lossless permutation)."""
    if k not in (0, 1, 2, 3):
        raise ValueError(f"k must be one of 0..3, got {k}")
    return apply_rigid(v, RigidTransform(2, k))


_FLIP_AXES = {"x": 2, "y": 1, "z": 0}


def flip(v: Volume, axis: str) -> Volume:
    """Mirror the volume along one named axis."""
    if axis not in _FLIP_AXES:
        raise ValueError(f"axis must be one of x/y/z, got {axis!r}")
    return v.with_data(np.ascontiguousarray(np.flip(v.data, axis=_FLIP_AXES[axis])))


# --- resampling transforms ---------------------------------------------------------

def rotate_free(v: Volume, angle_degrees: float, interpolation: Interp = Interp.BILINEAR) -> Volume:
    """Rotate every slice about its center by an arbitrary angle, keeping the
    original dims; positive angles match the quarter-turn direction."""
    order = _order_for(v, interpolation, "rotate_free")
    if angle_degrees % 360 == 0:
        return v.copy()
    out = ndimage.rotate(v.data, angle_degrees, axes=(1, 2), reshape=False,
                         order=order, mode="reflect")
    return v.with_data(out.astype(v.data.dtype, copy=False))


def shift(v: Volume, dx_frac: float, dy_frac: float,
          interpolation: Interp = Interp.BILINEAR) -> Volume:
    """Translate slices by a fraction of the x/y extent."""
    order = _order_for(v, interpolation, "shift")
    if dx_frac == 0 and dy_frac == 0:
        return v.copy()
    out = ndimage.shift(v.data, (0.0, dy_frac * v.ny, dx_frac * v.nx),
                        order=order, mode="reflect")
    return v.with_data(out.astype(v.data.dtype, copy=False))


def shear(v: Volume, factor: float, interpolation: Interp = Interp.BILINEAR) -> Volume:
    """Shear slices along x proportionally to the centered y coordinate."""
    order = _order_for(v, interpolation, "shear")
    if factor == 0:
        return v.copy()
    cy = (v.ny - 1) / 2.0
    matrix = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, factor, 1.0]])
    offset = np.array([0.0, 0.0, -factor * cy])
    out = ndimage.affine_transform(v.data, matrix, offset=offset, order=order, mode="reflect")
    return v.with_data(out.astype(v.data.dtype, copy=False))


def zoom(v: Volume, factor: float, interpolation: Interp = Interp.BILINEAR) -> Volume:
    """Scale slices about their center, keeping dims (reflection fills when
    zooming out)."""
    if factor <= 0:
        raise ValueError(f"zoom factor must be > 0, got {factor}")
    order = _order_for(v, interpolation, "zoom")
    if factor == 1.0:
        return v.copy()
    cy, cx = (v.ny - 1) / 2.0, (v.nx - 1) / 2.0
    matrix = np.diag([1.0, 1.0 / factor, 1.0 / factor])
    offset = np.array([0.0, cy - cy / factor, cx - cx / factor])
    out = ndimage.affine_transform(v.data, matrix, offset=offset, order=order, mode="reflect")
    return v.with_data(out.astype(v.data.dtype, copy=False))


def brightness(v: Volume, factor: float) -> Volume:
    """Multiply intensities by a factor and clamp back into [0, 1]."""
    if v.dtype is not Dtype.F32:
        raise InterpolationOnMask("brightness applies to F32 intensity volumes only")
    if factor < 0:
        raise ValueError(f"brightness factor must be >= 0, got {factor}")
    return v.with_data(np.clip(v.data * np.float32(factor), 0.0, 1.0).astype(np.float32))


def median_filter_2d(v: Volume, size: int) -> Volume:
    """Per-slice square median filter; size 1 is the identity."""
    if not isinstance(size, int) or size < 1 or size % 2 == 0:
        raise BadKernelSize(f"median kernel size must be odd and >= 1, got {size}")
    if size == 1:
        return v.copy()
    out = ndimage.median_filter(v.data, size=(1, size, size), mode="reflect")
    return v.with_data(out)


# --- elastic deformation --------------------------------------------------------------

@dataclass(frozen=True)
class ElasticParams:
    """Displacement magnitude (voxels), Gaussian smoothing std (voxels), seed."""

    alpha: float = 8.0
    sigma: float = 4.0
    seed: int = 0

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")
        if self.sigma <= 0:
            raise ValueError(f"sigma must be > 0, got {self.sigma}")


def elastic_fields(dims: tuple[int, int, int], params: ElasticParams) -> list[np.ndarray]:
    """Per-axis displacement fields: Gaussian-smoothed uniform noise in
    [-1, 1], scaled by alpha. Returned in (dz, dy, dx) order; dz is zero for
    single-slice volumes. The same seed always consumes the same random draws,
    so fields scale exactly linearly with alpha."""
    nx, ny, nz = dims
    shape = (nz, ny, nx)
    rng = np.random.default_rng(params.seed)
    smooth_sigma = (params.sigma if nz > 1 else 0.0, params.sigma, params.sigma)
    fields = []
    for axis in range(3):
        if axis == 0 and nz == 1:
            fields.append(np.zeros(shape))
            continue
        noise = rng.uniform(-1.0, 1.0, size=shape)
        fields.append(ndimage.gaussian_filter(noise, sigma=smooth_sigma, mode="reflect") * params.alpha)
    return fields


def elastic_deform(v: Volume, params: ElasticParams,
                   interpolation: Interp = Interp.BILINEAR) -> Volume:
    """Resample through a smooth random displacement field; deterministic per
    seed and the identity at alpha = 0."""
    order = _order_for(v, interpolation, "elastic_deform")
    if params.alpha == 0:
        return v.copy()
    dz, dy, dx = elastic_fields(v.dims, params)
    zz, yy, xx = np.meshgrid(
        np.arange(v.nz), np.arange(v.ny), np.arange(v.nx), indexing="ij"
    )
    coords = [zz + dz, yy + dy, xx + dx]
    out = ndimage.map_coordinates(v.data, coords, order=order, mode="reflect")
    return v.with_data(out.astype(v.data.dtype, copy=False))


# --- augmentation specs (bridge to the sweep notation) ----------------------------------

_RANGE_TERMS = {"rotation_range", "shift", "shearing", "zoom", "brightness_range"}
_KNOWN_TERMS = _RANGE_TERMS | {"flips", "square_rotations", "median_filtering", "elastic"}


@dataclass
class AugmentSpec:
    """Ordered list of augmentation terms parsed from the sweep-notation term
    syntax, e.g. ``flips, rotation_range([-180,180])``."""

    terms: list = field(default_factory=list)

    @classmethod
    def from_expr(cls, expr) -> "AugmentSpec":
        from . import sweepdsl

        items = list(expr.terms) if isinstance(expr, sweepdsl.TermList) else [expr]
        spec = cls(items)
        spec.validate()
        return spec

    @classmethod
    def from_text(cls, text: str) -> "AugmentSpec":
        from . import sweepdsl

        return cls.from_expr(sweepdsl.parse_expr(text))

    def to_text(self) -> str:
        from . import sweepdsl

        return ", ".join(sweepdsl.render_expr(t) for t in self.terms)

    def term_names(self) -> list[str]:
        names = []
        for t in self.terms:
            names.append(getattr(t, "name", None) or getattr(t, "value", None))
        return names

    def validate(self) -> None:
        from . import sweepdsl

        for t in self.terms:
            name = t.name if isinstance(t, sweepdsl.Term) else getattr(t, "value", None)
            if name not in _KNOWN_TERMS:
                raise ValueError(f"unknown augmentation term {name!r}")
            if isinstance(t, sweepdsl.Term):
                self._validate_args(name, t)

    @staticmethod
    def _validate_args(name: str, term) -> None:
        from . import sweepdsl

        args = [a.value for a in term.args]
        if name in _RANGE_TERMS:
            if len(args) != 1 or not isinstance(args[0], sweepdsl.RangeExpr):
                raise ValueError(f"{name} expects a single [lo, hi] range")
        elif name == "square_rotations":
            if len(args) != 1 or not isinstance(args[0], sweepdsl.ListExpr):
                raise ValueError("square_rotations expects a list of angles")
            for lit in args[0].items:
                angle = getattr(lit, "value", None)
                if not isinstance(angle, (int, float)) or angle % 90 != 0:
                    raise ValueError(f"square_rotations angles must be multiples of 90, got {angle}")
        elif name == "median_filtering":
            for a in args:
                size = getattr(a, "value", None)
                if isinstance(a, sweepdsl.ChoiceExpr):
                    sizes = [getattr(o, "value", None) for o in a.options]
                else:
                    sizes = [size]
                for s in sizes:
                    if not isinstance(s, int) or s < 1 or s % 2 == 0:
                        raise ValueError(f"median_filtering sizes must be odd positive, got {s}")
