import io
import warnings

import numpy as np
import pytest
import tifffile
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from PIL import Image

from graylitho.calibration import build_lut, linear_fit
from graylitho.errors import ClampWarning, NotTiff, UnsupportedFeature
from graylitho.mask import (
    GrayMask,
    encode_mask,
    load_field,
    read_field_csv,
    read_field_tiff,
    read_tiff,
    save_field,
    write_field_csv,
    write_field_tiff,
    write_pgm,
    write_tiff,
)
from graylitho.raster import HeightField, WorkingArea
from graylitho.shapes import ShapeSpec, generate

from oracles import hand_built_tiff

LINEAR = build_lut(linear_fit(15), 15)


def test_one_pixel_decodes_in_independent_readers():
    data = write_tiff(GrayMask(np.zeros((1, 1), np.uint8), 0.5, 0.5))
    ref = tifffile.imread(io.BytesIO(data))
    assert ref.shape == (1, 1) and ref[0, 0] == 0
    img = Image.open(io.BytesIO(data))
    assert img.size == (1, 1) and img.mode == "L" and img.getpixel((0, 0)) == 0


def test_two_by_two_round_trip():
    mask = GrayMask(np.array([[0, 255], [128, 64]], np.uint8), 0.5, 0.5, "demo")
    assert read_tiff(write_tiff(mask)) == mask


def test_golden_bytes_match_documented_layout():
    pixels = np.array([[0, 255, 7], [128, 64, 1]], np.uint8)
    mask = GrayMask(pixels, 0.5, 0.5, "golden")
    assert write_tiff(mask) == hand_built_tiff(pixels, 20000, "golden")
    assert write_tiff(mask) == write_tiff(GrayMask(pixels.copy(), 0.5, 0.5, "golden"))


def test_full_scale_resolution_tags():
    mask = GrayMask(np.zeros((1080, 1920), np.uint8), 0.5, 0.5)
    with tifffile.TiffFile(io.BytesIO(write_tiff(mask))) as tf:
        page = tf.pages[0]
        assert page.tags["XResolution"].value == (20000, 1)
        assert page.tags["YResolution"].value == (20000, 1)
        assert page.tags["ResolutionUnit"].value == 3
        assert page.tags["Compression"].value == 1
        assert page.tags["PhotometricInterpretation"].value == 1
        assert page.tags["RowsPerStrip"].value == 1080
        assert page.tags["StripByteCounts"].value == (1920 * 1080,)


def test_big_endian_from_independent_writer():
    pixels = np.arange(48, dtype=np.uint8).reshape(6, 8) * 5
    buf = io.BytesIO()
    tifffile.imwrite(buf, pixels, byteorder=">", photometric="minisblack",
                     resolution=(20000, 20000), resolutionunit="CENTIMETER")
    data = buf.getvalue()
    assert data[:2] == b"MM"
    back = read_tiff(data)
    np.testing.assert_array_equal(back.pixels, pixels)
    assert back.pitch_x == 0.5 and back.pitch_y == 0.5


def test_multi_strip_file_from_independent_writer():
    pixels = np.random.default_rng(0).integers(0, 256, (37, 11), dtype=np.uint8)
    buf = io.BytesIO()
    tifffile.imwrite(buf, pixels, photometric="minisblack", rowsperstrip=4)
    back = read_tiff(buf.getvalue())
    np.testing.assert_array_equal(back.pixels, pixels)
    assert back.pitch_x is None


def test_png_is_not_tiff():
    buf = io.BytesIO()
    Image.new("L", (2, 2)).save(buf, format="PNG")
    with pytest.raises(NotTiff):
        read_tiff(buf.getvalue())
    with pytest.raises(NotTiff):
        read_tiff(b"")


@pytest.mark.parametrize(
    "kwargs",
    [
        {"compression": "zlib"},
        {"tile": (16, 16)},
        {"dtype": np.uint16},
        {"photometric": "rgb"},
    ],
)
def test_unsupported_features_raise(kwargs):
    kwargs = dict(kwargs)
    dtype = kwargs.pop("dtype", np.uint8)
    shape = (32, 32, 3) if kwargs.get("photometric") == "rgb" else (32, 32)
    kwargs.setdefault("photometric", "minisblack")
    buf = io.BytesIO()
    tifffile.imwrite(buf, np.ones(shape, dtype=dtype), **kwargs)
    with pytest.raises(UnsupportedFeature):
        read_tiff(buf.getvalue())


@settings(max_examples=50, deadline=None)
@given(arrays(np.uint8, st.tuples(st.integers(1, 30), st.integers(1, 30))),
       st.floats(0.1, 10), st.floats(0.1, 10))
def test_round_trip_property(pixels, px, py):
    mask = GrayMask(pixels, px, py, "p")
    back = read_tiff(write_tiff(mask))
    np.testing.assert_array_equal(back.pixels, pixels)
    assert abs(back.pitch_x - px) <= 1e-9 and abs(back.pitch_y - py) <= 1e-9


@settings(max_examples=25, deadline=None)
@given(arrays(np.uint8, st.tuples(st.integers(1, 20), st.integers(1, 20))))
def test_independent_reader_agrees(pixels):
    data = write_tiff(GrayMask(pixels, 0.5, 0.5))
    np.testing.assert_array_equal(tifffile.imread(io.BytesIO(data)), pixels)
    np.testing.assert_array_equal(np.asarray(Image.open(io.BytesIO(data))), pixels)


def test_encode_examples():
    area = WorkingArea(3, 2, 3, 2)
    assert np.all(encode_mask(HeightField(area, np.zeros((2, 3)), 15), LINEAR).pixels == 0)
    assert np.all(encode_mask(HeightField(area, np.full((2, 3), 15.0), 15), LINEAR).pixels == 255)
    mid = encode_mask(HeightField(area, np.full((2, 3), 7.5), 15), LINEAR)
    assert np.all(mid.pixels == 128)


def test_encode_ramp_column():
    area = WorkingArea(250, 250, 500, 500)
    field = generate(ShapeSpec("ramp"), area)
    mask = encode_mask(field, LINEAR)
    # Removal 7.515 um at column 250 sits between the 127.5 and 128.5 gray thresholds.
    assert np.all(mask.pixels[:, 250] == 128)
    assert mask.pitch_x == 0.5 and mask.provenance.startswith(f"lut={LINEAR.identifier}")


def test_encode_clamps_once_with_count():
    area = WorkingArea(3, 1, 3, 1)
    field = HeightField(area, [[3.0, 18.0, 20.0]], 20)
    with pytest.warns(ClampWarning, match="2 pixel") as record:
        mask = encode_mask(field, LINEAR)
    assert len(record) == 1
    assert list(mask.pixels[0]) == [51, 255, 255]


@given(arrays(np.float64, (4, 6), elements=st.floats(0, 15)))
def test_encode_is_monotone(removal):
    field = HeightField(WorkingArea(6, 4, 6, 4), removal, 15)
    px = encode_mask(field, LINEAR).pixels.ravel().astype(int)
    r = field.removal.ravel()
    order = np.argsort(r, kind="stable")
    assert np.all(np.diff(px[order]) >= 0)


def test_pgm_matches_tiff_pixels():
    pixels = np.array([[0, 255, 3], [9, 8, 7]], np.uint8)
    data = write_pgm(GrayMask(pixels, 1, 1))
    assert data.startswith(b"P5\n3 2\n255\n")
    np.testing.assert_array_equal(np.asarray(Image.open(io.BytesIO(data))), pixels)


def test_field_csv_round_trip_is_exact():
    area = WorkingArea(5, 2, 5, 2)
    field = HeightField(area, np.random.default_rng(3).uniform(0, 15, (2, 5)), 15)
    assert read_field_csv(write_field_csv(field)) == field


def test_field_tiff_round_trip_through_float32(tmp_path):
    area = WorkingArea(5, 2, 10, 4)
    removal = np.random.default_rng(4).uniform(0, 15, (4, 10))
    field = HeightField(area, removal, 15)
    back = read_field_tiff(write_field_tiff(field))
    np.testing.assert_array_equal(back.removal, field.removal.astype(np.float32).astype(float).clip(max=15))
    assert back.max_depth == 15 and back.area.pitch_x == 0.5
    ref = tifffile.imread(io.BytesIO(write_field_tiff(field)))
    np.testing.assert_array_equal(ref, field.removal.astype(np.float32))
    save_field(field, tmp_path / "f.csv")
    assert load_field(tmp_path / "f.csv") == field


def test_field_tiff_is_not_a_mask():
    field = HeightField(WorkingArea(2, 2, 2, 2), np.zeros((2, 2)), 1)
    with pytest.raises(UnsupportedFeature):
        read_tiff(write_field_tiff(field))


def test_mask_validation():
    with pytest.raises(ValueError):
        GrayMask(np.array([[256]]))
    with pytest.raises(ValueError):
        GrayMask(np.zeros((2, 2), np.uint8), 0.0, 1.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        GrayMask(np.array([[0, 255]]), 1.0, 1.0)
