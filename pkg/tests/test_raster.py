import time

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra import numpy as hnp

from fragscan import raster
from fragscan.errors import InvalidArgument
from fragscan.raster import BACKGROUND, BODY, BOUNDARY

from oracles import erode_dilate, nearest_centre_labels


# -- rescale -------------------------------------------------------------------

def test_rescale_camera_to_model_size():
    img = np.zeros((3000, 4000), dtype=np.uint8)
    out = raster.rescale_bilinear(img, 4096, 3072)
    assert out.shape == (3072, 4096)


def test_rescale_constant():
    img = np.full((2, 2), 77, dtype=np.uint8)
    for w, h in [(1, 1), (3, 5), (17, 4)]:
        out = raster.rescale_bilinear(img, w, h, quantize=False)
        assert out.shape == (h, w)
        assert np.all(out == 77)


def test_rescale_half_pixel_row():
    row = np.array([[0, 255]], dtype=np.uint8)
    out = raster.rescale_bilinear(row, 4, 1, quantize=False)
    np.testing.assert_allclose(out, [[0.0, 63.75, 191.25, 255.0]])


def test_rescale_zero_size():
    with pytest.raises(InvalidArgument):
        raster.rescale_bilinear(np.zeros((2, 2), np.uint8), 0, 3)


@settings(max_examples=50, deadline=None)
@given(hnp.arrays(np.uint8, hnp.array_shapes(min_dims=2, max_dims=2, min_side=1, max_side=12)),
       st.integers(1, 20), st.integers(1, 20))
def test_rescale_stays_in_range(img, w, h):
    out = raster.rescale_bilinear(img, w, h, quantize=False)
    assert out.min() >= img.min() - 1e-9
    assert out.max() <= img.max() + 1e-9


# -- tiling ---------------------------------------------------------------------

def test_plan_tiles_full_photo():
    layout = raster.plan_tiles(4096, 3072, 512, 256)
    assert layout.grid == (15, 11)
    assert len(layout.tile_origins) == 165
    assert layout.padded_size == (4096, 3072)


@pytest.mark.parametrize("w,h,expect", [(512, 512, (1, 1)), (768, 512, (2, 1)), (100, 40, (1, 1)), (513, 512, (2, 1))])
def test_plan_tiles_counts(w, h, expect):
    assert raster.plan_tiles(w, h, 512, 256).grid == expect


def test_plan_tiles_rejects_large_stride():
    with pytest.raises(InvalidArgument):
        raster.plan_tiles(100, 100, 8, 9)


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 300), st.integers(1, 300), st.integers(1, 64), st.data())
def test_plan_tiles_covers_padded_image(w, h, window, data):
    stride = data.draw(st.integers(1, window))
    layout = raster.plan_tiles(w, h, window, stride)
    pw, ph = layout.padded_size
    assert pw >= w and ph >= h and (pw - window) % stride == 0 and (ph - window) % stride == 0
    # smallest such size
    assert pw - stride < max(w, window) or pw == window
    cover = np.zeros((ph, pw), dtype=np.int64)
    for x, y in layout.tile_origins:
        cover[y:y + window, x:x + window] += 1
    assert cover.min() >= 1
    assert list(layout.tile_origins) == sorted(layout.tile_origins, key=lambda o: (o[1], o[0]))


def test_half_overlap_interior_covered_twice():
    layout = raster.plan_tiles(64, 64, 16, 8)
    cover = np.zeros((64,), dtype=np.int64)
    for x in sorted({o[0] for o in layout.tile_origins}):
        cover[x:x + 16] += 1
    assert cover[8:-8].min() >= 2


def test_extract_tile_top_left():
    m = np.arange(16, dtype=np.uint8).reshape(4, 4)
    layout = raster.plan_tiles(4, 4, 2, 2)
    np.testing.assert_array_equal(raster.extract_tile(m, layout, (0, 0)), m[:2, :2])


def test_extract_tile_reflect_pad(rng):
    img = rng.integers(0, 255, size=(512, 520), dtype=np.uint8)
    layout = raster.plan_tiles(520, 512, 512, 256)
    assert layout.padded_size == (768, 512)
    tile = raster.extract_tile(img, layout, (256, 0))
    # explicit reflection: padded column 520 + k mirrors column 518 - k
    ref = np.empty((512, 512), dtype=np.uint8)
    for j in range(512):
        col = 256 + j
        src = col if col < 520 else 2 * 519 - col
        ref[:, j] = img[:, src]
    np.testing.assert_array_equal(tile, ref)
    np.testing.assert_array_equal(tile[:, :264], img[:, 256:])


def test_extract_tile_bad_origin():
    layout = raster.plan_tiles(16, 16, 8, 4)
    with pytest.raises(InvalidArgument):
        raster.extract_tile(np.zeros((16, 16), np.uint8), layout, (9999, 0))
    with pytest.raises(InvalidArgument):
        raster.extract_tile(np.zeros((16, 16), np.uint8), layout, (3, 0))


# -- stitching -------------------------------------------------------------------

def _cut(mask, layout):
    return [(o, t.copy()) for o, t in raster.iter_tiles(mask, layout)]


def test_stitch_idempotent(backend, rng):
    mask = rng.integers(0, 3, size=(300, 420), dtype=np.uint8)
    layout = raster.plan_tiles(420, 300, 64, 32)
    out = raster.stitch(_cut(mask, layout), layout)
    assert out.dtype == np.uint8
    np.testing.assert_array_equal(out, mask)


def test_stitch_tie_goes_to_lower_index(backend):
    # window 4, stride 3: pixel column 3 (centre 3.5) is 1.5 from both tile centres 2 and 5
    layout = raster.plan_tiles(7, 4, 4, 3)
    assert layout.grid == (2, 1)
    tiles = [((0, 0), np.full((4, 4), 1, np.uint8)), ((3, 0), np.full((4, 4), 2, np.uint8))]
    out = raster.stitch(tiles, layout)
    np.testing.assert_array_equal(out[0], [1, 1, 1, 1, 2, 2, 2])
    # order of the input list does not matter
    np.testing.assert_array_equal(raster.stitch(tiles[::-1], layout), out)


def test_stitch_keeps_central_block():
    layout = raster.plan_tiles(1024, 1024, 512, 256)
    tiles = [(o, np.full((512, 512), k % 3, np.uint8)) for k, o in enumerate(layout.tile_origins)]
    out = raster.stitch(tiles, layout)
    # interior tile (1, 1) (index 4) owns exactly its central 256x256 block
    assert np.all(out[384:640, 384:640] == 4 % 3)
    assert out[383, 500] == 1 % 3 and out[640, 500] == 7 % 3


def test_stitch_matches_brute_force(backend, rng):
    layout = raster.plan_tiles(1024, 1024, 512, 256)
    tiles = [rng.integers(0, 3, size=(512, 512), dtype=np.uint8) for _ in layout.tile_origins]
    out = raster.stitch(list(zip(layout.tile_origins, tiles)), layout)
    ys = rng.integers(0, 1024, 20000)
    xs = rng.integers(0, 1024, 20000)
    ref = nearest_centre_labels(tiles, layout.tile_origins, 512, ys, xs)
    np.testing.assert_array_equal(out[ys, xs], ref)


def test_stitch_missing_tile():
    layout = raster.plan_tiles(4096, 3072, 512, 256)
    tiles = [(o, np.zeros((512, 512), np.uint8)) for o in layout.tile_origins if o != (3584, 2560)]
    with pytest.raises(InvalidArgument, match=r"\(3584, 2560\)"):
        raster.stitch(tiles, layout)


def test_stitch_crops_padding(rng):
    mask = rng.integers(0, 3, size=(50, 70), dtype=np.uint8)
    layout = raster.plan_tiles(70, 50, 32, 16)
    assert layout.padded_size != (70, 50)
    out = raster.stitch(_cut(mask, layout), layout)
    assert out.shape == (50, 70)
    np.testing.assert_array_equal(out, mask)


# -- morphology -------------------------------------------------------------------

def _blank(n=21):
    return np.zeros((n, n), dtype=np.uint8)


@pytest.mark.parametrize("shape", ["square", "disk"])
def test_open_removes_small_blob(backend, shape):
    m = _blank()
    m[9:12, 9:12] = BODY
    assert not raster.morphological_open(m, 4, shape).any()


def test_open_keeps_square_block_with_square_element(backend):
    m = _blank()
    m[5:14, 5:14] = BOUNDARY
    m[7:12, 7:12] = BODY
    out = raster.morphological_open(m, 4, "square")
    np.testing.assert_array_equal(out, m)


def test_open_ring_core_matches_manual_oracle(backend):
    m = _blank(25)
    m[8:17, 8:17] = BOUNDARY
    m[10:15, 10:15] = BODY
    for shape in ("square", "disk"):
        fg = erode_dilate(m > 0, 4, shape)
        expected = np.where(fg, m, BACKGROUND)
        np.testing.assert_array_equal(raster.morphological_open(m, 4, shape), expected)
    # the Body core survives either way
    assert (raster.morphological_open(m, 4, "disk") == BODY).sum() == 25


def test_open_treats_body_and_boundary_as_one_set(backend):
    # a 3x3 Body patch would vanish on its own, but survives inside a Boundary frame
    m = _blank()
    m[4:17, 4:17] = BOUNDARY
    m[9:12, 9:12] = BODY
    out = raster.morphological_open(m, 4, "square")
    assert (out == BODY).sum() == 9


@pytest.mark.parametrize("shape", ["square", "disk"])
def test_open_random_matches_oracle(backend, rng, shape):
    for _ in range(3):
        m = rng.choice(3, size=(30, 34), p=[0.3, 0.4, 0.3]).astype(np.uint8)
        m[5:20, 4:22] = BODY
        fg = erode_dilate(m > 0, 2, shape)
        np.testing.assert_array_equal(raster.morphological_open(m, 2, shape), np.where(fg, m, 0))


@settings(max_examples=40, deadline=None)
@given(hnp.arrays(np.uint8, (24, 24), elements=st.sampled_from([0, 1, 2])),
       st.integers(0, 3), st.sampled_from(["square", "disk"]))
def test_open_antiextensive_and_idempotent(m, se_half, shape):
    once = raster.morphological_open(m, se_half, shape)
    assert np.all((once > 0) <= (m > 0))
    assert np.all((once == m) | (once == 0))
    np.testing.assert_array_equal(raster.morphological_open(once, se_half, shape), once)


def test_open_backends_agree(rng):
    from fragscan import accel
    m = rng.choice(3, size=(200, 180), p=[0.3, 0.4, 0.3]).astype(np.uint8)
    results = []
    for be in ["numba", "numpy"] if accel.HAVE_NUMBA else ["numpy"]:
        prev = accel.set_backend(be)
        results.append(raster.morphological_open(m))
        accel.set_backend(prev)
    for r in results[1:]:
        np.testing.assert_array_equal(r, results[0])


def test_invalid_label_rejected():
    m = _blank()
    m[0, 0] = 7
    with pytest.raises(InvalidArgument, match="invalid class label"):
        raster.morphological_open(m)


def test_calibration_validation():
    assert raster.Calibration(0.125).cm_per_pixel == 0.125
    for bad in (0.0, -1.0, float("inf"), float("nan")):
        with pytest.raises(InvalidArgument):
            raster.Calibration(bad)


def test_layout_roundtrip():
    layout = raster.plan_tiles(700, 300, 128, 64)
    assert raster.TileLayout.from_dict(layout.to_dict()) == layout


def test_plan_tiles_fast():
    t = time.perf_counter()
    raster.plan_tiles(4096, 3072, 512, 256)
    assert time.perf_counter() - t < 0.01
