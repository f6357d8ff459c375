import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from emseg.errors import LayoutMismatch, OddLength, PatchLargerThanVolume, WrongPatchCount
from emseg.patchkit import (
    Overlap,
    PatchLayout,
    PatchShape,
    build_probability_map,
    discard_low_foreground,
    extract,
    plan_grid,
    reconstruct_blend,
    reconstruct_mosaic,
    reconstruct_overlap_mean,
    sample_centers,
    sample_patch_origins,
    spline_window_1d,
)
from emseg.volcore import Dtype, Volume, new_volume

from conftest import random_f32_volume, random_mask


def coverage_counts(layout):
    pnx, pny, pnz = layout.padded_dims
    px, py, pz = layout.patch
    cnt = np.zeros((pnz, pny, pnx), dtype=np.int64)
    for ox, oy, oz in layout.origins:
        cnt[oz : oz + pz, oy : oy + py, ox : ox + px] += 1
    return cnt


# --- grid planning -------------------------------------------------------------

def test_plan_grid_divisible_no_padding():
    layout = plan_grid((1024, 768, 1), PatchShape(256, 256, 1), Overlap.NONE)
    assert len(layout.origins) == 12  # 4 x 3 tiling
    assert layout.padding == (0, 0, 0)
    assert layout.stride == (256, 256, 1)


def test_plan_grid_single_patch():
    layout = plan_grid((512, 512, 1), PatchShape(512, 512, 1), Overlap.NONE)
    assert layout.origins == [(0, 0, 0)]


def test_plan_grid_half_overlap_pads_to_patch_multiple():
    layout = plan_grid((768, 512, 1), PatchShape(512, 512, 1), Overlap.HALF)
    assert layout.stride[0] == 256
    assert layout.padded_dims[0] == 1024
    assert [o[0] for o in layout.origins] == [0, 256, 512]
    assert len(layout.origins) == 3


def test_plan_grid_rejects_oversized_patch():
    with pytest.raises(PatchLargerThanVolume):
        plan_grid((100, 100, 1), PatchShape(128, 128, 1), Overlap.NONE)


def test_origins_x_fastest():
    layout = plan_grid((4, 4, 2), PatchShape(2, 2, 1), Overlap.NONE)
    assert layout.origins == [
        (0, 0, 0), (2, 0, 0), (0, 2, 0), (2, 2, 0),
        (0, 0, 1), (2, 0, 1), (0, 2, 1), (2, 2, 1),
    ]


@given(
    nx=st.integers(1, 24), ny=st.integers(1, 24), nz=st.integers(1, 6),
    data=st.data(),
)
@settings(max_examples=40, deadline=None)
def test_plan_grid_total_coverage(nx, ny, nz, data):
    patch = PatchShape(
        data.draw(st.integers(1, nx)),
        data.draw(st.integers(1, ny)),
        data.draw(st.integers(1, nz)),
    )
    overlap = data.draw(st.sampled_from([Overlap.NONE, Overlap.HALF]))
    layout = plan_grid((nx, ny, nz), patch, overlap)
    cnt = coverage_counts(layout)
    assert cnt.min() >= 1
    if overlap is Overlap.NONE:
        assert cnt.max() == 1
    for o in layout.origins:
        assert all(c + p <= d for c, p, d in zip(o, patch, layout.padded_dims))


def test_half_overlap_interior_coverage_is_power_of_two():
    layout = plan_grid((32, 16, 8), PatchShape(8, 8, 4), Overlap.HALF)
    cnt = coverage_counts(layout)
    sx, sy, sz = layout.stride
    pnx, pny, pnz = layout.padded_dims
    interior = cnt[sz : pnz - sz, sy : pny - sy, sx : pnx - sx]
    assert (interior == 8).all()  # 2^3: all three axes overlap


# --- extraction and mosaic -------------------------------------------------------

def test_extract_constant_volume(rng):
    v = new_volume((8, 8, 2), Dtype.F32, fill=0.7)
    layout = plan_grid(v.dims, PatchShape(4, 4, 1), Overlap.NONE)
    for p in extract(v, layout):
        assert (p.data == np.float32(0.7)).all()


def test_extract_quadrants():
    ramp = np.arange(16, dtype=np.uint8).reshape(1, 4, 4)
    v = Volume(ramp)
    layout = plan_grid((4, 4, 1), PatchShape(2, 2, 1), Overlap.NONE)
    patches = extract(v, layout)
    assert [p.data[0].tolist() for p in patches] == [
        [[0, 1], [4, 5]], [[2, 3], [6, 7]],
        [[8, 9], [12, 13]], [[10, 11], [14, 15]],
    ]


def test_extract_requires_matching_dims(rng):
    v = random_f32_volume(rng, dims=(6, 5, 4))
    layout = plan_grid((6, 5, 3), PatchShape(2, 2, 1), Overlap.NONE)
    with pytest.raises(LayoutMismatch):
        extract(v, layout)


def test_mosaic_round_trip_padding_free(rng):
    v = random_f32_volume(rng, dims=(8, 6, 4))
    layout = plan_grid(v.dims, PatchShape(4, 3, 2), Overlap.NONE)
    assert layout.padding == (0, 0, 0)
    assert reconstruct_mosaic(extract(v, layout), layout) == v


def test_mosaic_crops_padding(rng):
    v = random_f32_volume(rng, dims=(7, 5, 3))
    layout = plan_grid(v.dims, PatchShape(4, 4, 2), Overlap.NONE)
    assert reconstruct_mosaic(extract(v, layout), layout) == v


def test_mosaic_wrong_patch_count(rng):
    v = random_f32_volume(rng, dims=(8, 8, 1))
    layout = plan_grid(v.dims, PatchShape(4, 4, 1), Overlap.NONE)
    with pytest.raises(WrongPatchCount):
        reconstruct_mosaic(extract(v, layout)[:-1], layout)


def test_mosaic_rejects_half_layout(rng):
    v = random_f32_volume(rng, dims=(8, 8, 1))
    layout = plan_grid(v.dims, PatchShape(4, 4, 1), Overlap.HALF)
    with pytest.raises(LayoutMismatch):
        reconstruct_mosaic(extract(v, layout), layout)


# --- overlap mean ------------------------------------------------------------------

def test_overlap_mean_identity(rng):
    for dims in [(8, 8, 1), (10, 6, 4), (7, 5, 3)]:
        v = random_f32_volume(rng, dims=dims)
        layout = plan_grid(dims, PatchShape(4, 4, min(2, dims[2])), Overlap.HALF)
        out = reconstruct_overlap_mean(extract(v, layout), layout)
        assert out == v  # all covering patches agree, so the mean is exact


def test_overlap_mean_averages_disagreeing_patches():
    layout = PatchLayout(
        source_dims=(6, 2, 1), patch=PatchShape(4, 2, 1), stride=(2, 2, 1),
        padding=(0, 0, 0), overlap=Overlap.HALF,
        origins=[(0, 0, 0), (2, 0, 0)],
    )
    a = new_volume((4, 2, 1), Dtype.F32, fill=0.2)
    b = new_volume((4, 2, 1), Dtype.F32, fill=0.6)
    out = reconstruct_overlap_mean([a, b], layout)
    assert np.allclose(out.data[0, :, 0:2], 0.2)
    assert np.allclose(out.data[0, :, 2:4], np.float32(0.4))
    assert np.allclose(out.data[0, :, 4:6], 0.6)


def test_overlap_mean_requires_f32(rng):
    m = random_mask(rng, dims=(8, 8, 1))
    layout = plan_grid((8, 8, 1), PatchShape(4, 4, 1), Overlap.HALF)
    with pytest.raises(LayoutMismatch):
        reconstruct_overlap_mean(extract(m, layout), layout)


# --- spline window -----------------------------------------------------------------

def test_spline_window_length_4_exact():
    w = spline_window_1d(4)
    assert w.tolist() == [0.125, 0.875, 0.875, 0.125]


def test_spline_window_rejects_odd():
    for bad in (3, 7, 1, 0):
        with pytest.raises(OddLength):
            spline_window_1d(bad)


@pytest.mark.parametrize("length", [2, 4, 8, 16, 64, 256])
def test_spline_window_symmetry_positivity(length):
    w = spline_window_1d(length)
    assert (w > 0).all()
    assert np.array_equal(w, w[::-1])


@pytest.mark.parametrize("length", [4, 8, 16, 64, 256])
def test_spline_window_partition_of_unity(length):
    w = spline_window_1d(length)
    stride = length // 2
    # tile enough shifted copies to cover an interior span, then check sums
    span = 6 * stride
    acc = np.zeros(span + length)
    for start in range(0, span, stride):
        acc[start : start + length] += w
    interior = acc[length : span]  # fully covered region
    assert np.abs(interior - 1.0).max() <= 1e-12


# --- blend ---------------------------------------------------------------------------

def test_blend_constant_patches(rng):
    v = new_volume((12, 8, 1), Dtype.F32, fill=0.7)
    layout = plan_grid(v.dims, PatchShape(4, 4, 1), Overlap.HALF)
    out = reconstruct_blend(extract(v, layout), layout)
    assert np.abs(out.data - 0.7).max() < 1e-6


def test_blend_identity_on_self_consistent_extraction(rng):
    for dims in [(16, 16, 1), (13, 9, 5), (8, 8, 8)]:
        v = random_f32_volume(rng, dims=dims)
        pz = 1 if dims[2] == 1 else 4
        layout = plan_grid(dims, PatchShape(4, 4, pz), Overlap.HALF)
        out = reconstruct_blend(extract(v, layout), layout)
        assert np.abs(out.data.astype(np.float64) - v.data).max() < 1e-6


def test_blend_smooths_seams():
    # two half-overlapping constant patches that disagree: 0 on the left, 1 on the right
    layout = PatchLayout(
        source_dims=(12, 2, 1), patch=PatchShape(8, 2, 1), stride=(4, 2, 1),
        padding=(0, 0, 0), overlap=Overlap.HALF,
        origins=[(0, 0, 0), (4, 0, 0)],
    )
    a = new_volume((8, 2, 1), Dtype.F32, fill=0.0)
    b = new_volume((8, 2, 1), Dtype.F32, fill=1.0)
    blended = reconstruct_blend([a, b], layout).data[0, 0]
    mean = reconstruct_overlap_mean([a, b], layout).data[0, 0]
    blend_jump = np.abs(np.diff(blended)).max()
    mean_jump = np.abs(np.diff(mean)).max()
    assert blend_jump < mean_jump  # spline weighting beats the hard average
    assert blend_jump < 1.0  # and beats the raw mosaic step


def test_blend_odd_patch_sizes(rng):
    v = random_f32_volume(rng, dims=(11, 7, 3))
    layout = plan_grid(v.dims, PatchShape(5, 3, 3), Overlap.HALF)
    out = reconstruct_blend(extract(v, layout), layout)
    assert np.abs(out.data.astype(np.float64) - v.data).max() < 1e-6


# --- probability map -------------------------------------------------------------------

def test_probability_map_values():
    gt = new_volume((10, 10, 10), Dtype.U8, fill=0)
    gt.data.reshape(-1)[:100] = 1  # 100 fg, 900 bg
    pmap = build_probability_map(gt, 0.94)
    fg_vals = pmap.probs[gt.data.astype(bool)]
    bg_vals = pmap.probs[~gt.data.astype(bool)]
    assert np.allclose(fg_vals, 0.0094)
    assert np.allclose(bg_vals, 0.06 / 900)
    assert pmap.class_mass == pytest.approx((0.94, 0.06))


def test_probability_map_degenerate_uniform():
    gt = new_volume((5, 5, 2), Dtype.U8, fill=0)
    pmap = build_probability_map(gt, 0.94)
    assert np.allclose(pmap.probs, 1.0 / 50)
    assert pmap.class_mass == (0.0, 1.0)


def test_probability_map_sums_to_one(rng):
    gt = random_mask(rng, dims=(16, 16, 4))
    pmap = build_probability_map(gt, 0.9)
    assert abs(pmap.probs.sum() - 1.0) <= 1e-9


# --- sampling -------------------------------------------------------------------------

def test_delta_map_sampling():
    gt = new_volume((9, 9, 1), Dtype.U8, fill=0)
    gt.data[0, 4, 4] = 1
    pmap = build_probability_map(gt, 0.999999)
    # nearly all mass on one voxel is awkward; use an exact delta instead
    pmap.probs.fill(0.0)
    pmap.probs[0, 4, 4] = 1.0
    origins = sample_patch_origins(pmap, PatchShape(3, 3, 1), 20, seed=5)
    assert set(origins) == {(3, 3, 0)}


def test_sampling_deterministic(rng):
    gt = random_mask(rng, dims=(20, 20, 2))
    pmap = build_probability_map(gt, 0.94)
    a = sample_patch_origins(pmap, PatchShape(5, 5, 1), 50, seed=11)
    b = sample_patch_origins(pmap, PatchShape(5, 5, 1), 50, seed=11)
    assert a == b
    assert sample_patch_origins(pmap, PatchShape(5, 5, 1), 50, seed=12) != a


def test_sampling_hits_foreground_at_requested_rate(rng):
    gt = random_mask(rng, dims=(32, 32, 4), p_fg=0.1)
    pmap = build_probability_map(gt, 0.94)
    centers = sample_centers(pmap, 10_000, seed=3)
    on_fg = gt.data[centers[:, 2], centers[:, 1], centers[:, 0]].astype(bool)
    assert abs(on_fg.mean() - 0.94) <= 0.02


def test_sampled_origins_in_bounds(rng):
    gt = random_mask(rng, dims=(15, 11, 3))
    pmap = build_probability_map(gt, 0.9)
    patch = PatchShape(6, 4, 2)
    for ox, oy, oz in sample_patch_origins(pmap, patch, 200, seed=0):
        assert 0 <= ox <= 15 - 6 and 0 <= oy <= 11 - 4 and 0 <= oz <= 3 - 2


def test_sampling_rejects_oversized_patch(rng):
    gt = random_mask(rng, dims=(8, 8, 1))
    pmap = build_probability_map(gt, 0.9)
    with pytest.raises(PatchLargerThanVolume):
        sample_patch_origins(pmap, PatchShape(9, 3, 1), 5, seed=0)


# --- discard filter ----------------------------------------------------------------------

def _pair(fg_voxels: int, total=1024):
    gt = new_volume((32, 32, 1), Dtype.U8, fill=0)
    gt.data.reshape(-1)[:fg_voxels] = 1
    img = new_volume((32, 32, 1), Dtype.F32, fill=0.5)
    return (img, gt)


def test_discard_zero_min_keeps_all():
    pairs = [_pair(0), _pair(5), _pair(1024)]
    assert len(discard_low_foreground(pairs, 0.0)) == 3


def test_discard_below_five_percent():
    kept = discard_low_foreground([_pair(5)], 0.05)  # 5/1024 = 0.488 %
    assert kept == []


def test_all_foreground_survives():
    assert len(discard_low_foreground([_pair(1024)], 0.99)) == 1


# --- layout JSON ----------------------------------------------------------------------------

def test_layout_json_round_trip():
    layout = plan_grid((768, 512, 1), PatchShape(512, 512, 1), Overlap.HALF)
    back = PatchLayout.from_json(layout.to_json())
    assert back == layout
