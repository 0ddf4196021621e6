"""8-bit grayscale masks and the file formats of the pipeline.

Formats
-------
Mask TIFF
    Baseline TIFF 6.0, little-endian, uncompressed, 8 bits, BlackIsZero,
    one strip, tags in fixed order (see :mod:`graylitho.tiff`).  Pixel pitch
    is stored as X/YResolution in pixels per centimetre (ResolutionUnit 3),
    so 0.5 um/px is 20000 px/cm.  Provenance goes in ImageDescription.
Mask PGM
    Binary ``P5`` with maxval 255, same pixel order; debugging only.
Field TIFF
    Same layout with 32-bit IEEE float samples (SampleFormat 3) holding
    removal depth in um.  ImageDescription is ``max_depth_um=<value>``.
Field CSV
    Two comment lines followed by one comma-separated row per pixel row::

        # graylitho height field
        # width_um=960.0 height_um=540.0 px_w=1920 px_h=1080 max_depth_um=15.0
        0.0,0.0,...

    Values are written with ``repr`` so they read back bit-exactly.
"""

import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import tiff
from .errors import ClampWarning, UnsupportedFeature
from .raster import HeightField, WorkingArea

__all__ = [
    "GrayMask",
    "encode_mask",
    "write_tiff",
    "read_tiff",
    "write_pgm",
    "write_field_tiff",
    "read_field_tiff",
    "write_field_csv",
    "read_field_csv",
    "save_field",
    "load_field",
]


@dataclass(frozen=True, eq=False)
class GrayMask:
    """Digital mask: gray 0-255 per pixel, row 0 at the top.

    ``pitch_x``/``pitch_y`` are um per pixel, or ``None`` when unknown (a
    TIFF read without resolution tags).
    """

    pixels: np.ndarray
    pitch_x: float = None
    pitch_y: float = None
    provenance: str = ""

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 2:
            raise ValueError("mask pixels must be a 2-D grid")
        if px.dtype != np.uint8:
            if np.any((px < 0) | (px > 255)) or np.any(px != np.round(px)):
                raise ValueError("mask pixels must be integers in 0-255")
            px = px.astype(np.uint8)
        px = px.copy()
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)
        for p in (self.pitch_x, self.pitch_y):
            if p is not None and not p > 0:
                raise ValueError(f"pitch must be > 0, got {p}")

    @property
    def px_w(self):
        return self.pixels.shape[1]

    @property
    def px_h(self):
        return self.pixels.shape[0]

    @property
    def area(self):
        if self.pitch_x is None or self.pitch_y is None:
            raise ValueError("mask pitch is unknown")
        return WorkingArea.from_pitch(self.px_w, self.px_h, self.pitch_x, self.pitch_y)

    def __eq__(self, other):
        if not isinstance(other, GrayMask):
            return NotImplemented
        return (
            np.array_equal(self.pixels, other.pixels)
            and self.pitch_x == other.pitch_x
            and self.pitch_y == other.pitch_y
            and self.provenance == other.provenance
        )

    __hash__ = None


def encode_mask(field, lut):
    """Map removal depths to gray through ``lut``.

    Depths beyond ``lut.max_depth`` are clamped; a single
    :class:`ClampWarning` reports how many pixels were affected.
    """
    removal = field.removal
    over = int(np.count_nonzero(removal > lut.max_depth))
    if over:
        warnings.warn(
            f"{over} pixel(s) deeper than the LUT max depth {lut.max_depth:g} um were clamped",
            ClampWarning,
            stacklevel=2,
        )
    pixels = lut.gray_for_depth(removal)
    return GrayMask(
        pixels,
        field.pitch_x,
        field.pitch_y,
        provenance=f"lut={lut.identifier} max_depth_um={lut.max_depth!r}",
    )


def write_tiff(mask):
    return tiff.encode(mask.pixels, mask.pitch_x, mask.pitch_y, mask.provenance)


def read_tiff(data):
    """Decode an 8-bit grayscale TIFF into a :class:`GrayMask`.

    Raises ``NotTiff`` for non-TIFF input and ``UnsupportedFeature`` for
    compressed, tiled, multi-channel or non-8-bit files.
    """
    img = tiff.decode(data, allowed_bits=(8,))
    return GrayMask(img.pixels, img.pitch_x, img.pitch_y, img.description)


def write_pgm(mask):
    header = f"P5\n{mask.px_w} {mask.px_h}\n255\n".encode("ascii")
    return header + mask.pixels.tobytes()


def write_field_tiff(field):
    return tiff.encode(
        field.removal.astype(np.float32),
        field.pitch_x,
        field.pitch_y,
        f"max_depth_um={field.max_depth!r}",
    )


def read_field_tiff(data):
    """Read a float32 field TIFF.  Depths pass through float32 on the way."""
    img = tiff.decode(data, allowed_bits=(32,))
    if img.pitch_x is None:
        raise UnsupportedFeature("field TIFF lacks resolution tags; pitch is required")
    meta = dict(kv.split("=", 1) for kv in img.description.split() if "=" in kv)
    removal = img.pixels.astype(float)
    max_depth = float(meta["max_depth_um"]) if "max_depth_um" in meta else float(removal.max() or 1.0)
    area = WorkingArea.from_pitch(removal.shape[1], removal.shape[0], img.pitch_x, img.pitch_y)
    return HeightField(area, np.minimum(removal, max_depth), max_depth)


def write_field_csv(field):
    a = field.area
    lines = [
        "# graylitho height field",
        f"# width_um={a.width_um!r} height_um={a.height_um!r} px_w={a.px_w} px_h={a.px_h} "
        f"max_depth_um={field.max_depth!r}",
    ]
    lines += [",".join(repr(float(v)) for v in row) for row in field.removal]
    return "\n".join(lines) + "\n"


def read_field_csv(text):
    lines = text.splitlines()
    meta = {}
    body = []
    for line in lines:
        if line.startswith("#"):
            meta.update(kv.split("=", 1) for kv in line[1:].split() if "=" in kv)
        elif line.strip():
            body.append([float(v) for v in line.split(",")])
    try:
        area = WorkingArea(float(meta["width_um"]), float(meta["height_um"]), int(meta["px_w"]), int(meta["px_h"]))
        max_depth = float(meta["max_depth_um"])
    except KeyError as exc:
        raise ValueError(f"field CSV header lacks {exc.args[0]}") from None
    return HeightField(area, np.array(body, dtype=float).reshape(area.shape), max_depth)


def save_field(field, path):
    """Write a field as CSV or float TIFF depending on the file extension."""
    path = Path(path)
    if path.suffix.lower() == ".csv":
        path.write_text(write_field_csv(field))
    else:
        path.write_bytes(write_field_tiff(field))


def load_field(path):
    path = Path(path)
    if path.suffix.lower() == ".csv":
        return read_field_csv(path.read_text())
    return read_field_tiff(path.read_bytes())
