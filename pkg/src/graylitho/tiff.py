"""Minimal baseline TIFF codec for single-channel, single-strip images.

Files are written little-endian with a fixed tag order so identical images
always produce identical bytes::

    offset 0   header  "II", 42, IFD offset = 8
    offset 8   IFD     entry count, entries sorted by tag, next-IFD = 0
    ...        out-of-line tag values (description, resolutions), word aligned
    ...        pixel strip, rows top to bottom

The reader accepts either byte order and any number of strips, and refuses
anything it cannot decode faithfully.
"""

import struct
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import NotTiff, UnsupportedFeature

__all__ = ["TiffImage", "encode", "decode", "to_rational"]

# Tag ids
IMAGE_WIDTH = 256
IMAGE_LENGTH = 257
BITS_PER_SAMPLE = 258
COMPRESSION = 259
PHOTOMETRIC = 262
IMAGE_DESCRIPTION = 270
STRIP_OFFSETS = 273
SAMPLES_PER_PIXEL = 277
ROWS_PER_STRIP = 278
STRIP_BYTE_COUNTS = 279
X_RESOLUTION = 282
Y_RESOLUTION = 283
PLANAR_CONFIG = 284
RESOLUTION_UNIT = 296
TILE_WIDTH = 322
SAMPLE_FORMAT = 339

# Field types
BYTE, ASCII, SHORT, LONG, RATIONAL = 1, 2, 3, 4, 5
_TYPE_SIZE = {1: 1, 2: 1, 3: 2, 4: 4, 5: 8, 6: 1, 7: 1, 8: 2, 9: 4, 10: 8, 11: 4, 12: 8}
_TYPE_CODE = {1: "B", 2: "s", 3: "H", 4: "I", 5: "II", 6: "b", 7: "B", 8: "h", 9: "i", 10: "ii", 11: "f", 12: "d"}

UNIT_NONE, UNIT_INCH, UNIT_CM = 1, 2, 3
_UM_PER_UNIT = {UNIT_INCH: 25400.0, UNIT_CM: 10000.0}


@dataclass
class TiffImage:
    """Decoded image plus the metadata graylitho cares about.

    ``pixels`` is ``uint8`` or ``float32`` with shape ``(rows, cols)``.
    Pitches are in um per pixel, ``None`` when the file has no usable
    resolution tags.
    """

    pixels: np.ndarray
    pitch_x: float = None
    pitch_y: float = None
    description: str = ""


def to_rational(value):
    """Closest fraction to ``value`` with numerator and denominator below 2**32."""
    limit = 2**32 - 1
    frac = Fraction(value).limit_denominator(limit)
    if frac.numerator > limit:
        frac = Fraction(value).limit_denominator(max(1, int(limit / value)))
    return frac.numerator, frac.denominator


def encode(pixels, pitch_x=None, pitch_y=None, description=""):
    """Serialize a 2-D ``uint8`` or ``float32`` array as a single-strip TIFF."""
    pixels = np.asarray(pixels)
    if pixels.ndim != 2:
        raise ValueError("expected a 2-D image")
    if pixels.dtype == np.uint8:
        bits, sample_format = 8, None
    elif pixels.dtype == np.float32:
        bits, sample_format = 32, 3
    else:
        raise ValueError(f"unsupported pixel dtype {pixels.dtype}")
    rows, cols = pixels.shape
    data = pixels.astype(pixels.dtype.newbyteorder("<"), copy=False).tobytes()

    entries = [
        (IMAGE_WIDTH, LONG, [cols]),
        (IMAGE_LENGTH, LONG, [rows]),
        (BITS_PER_SAMPLE, SHORT, [bits]),
        (COMPRESSION, SHORT, [1]),
        (PHOTOMETRIC, SHORT, [1]),
    ]
    if description:
        entries.append((IMAGE_DESCRIPTION, ASCII, description.encode("ascii") + b"\0"))
    entries += [
        (STRIP_OFFSETS, LONG, [0]),  # patched below
        (SAMPLES_PER_PIXEL, SHORT, [1]),
        (ROWS_PER_STRIP, LONG, [rows]),
        (STRIP_BYTE_COUNTS, LONG, [len(data)]),
    ]
    if pitch_x is not None and pitch_y is not None:
        entries += [
            (X_RESOLUTION, RATIONAL, [to_rational(10000.0 / pitch_x)]),
            (Y_RESOLUTION, RATIONAL, [to_rational(10000.0 / pitch_y)]),
            (RESOLUTION_UNIT, SHORT, [UNIT_CM]),
        ]
    if sample_format is not None:
        entries.append((SAMPLE_FORMAT, SHORT, [sample_format]))

    ifd_size = 2 + 12 * len(entries) + 4
    extra_offset = 8 + ifd_size
    blobs = []
    packed = []
    for tag, typ, values in entries:
        if typ == ASCII:
            raw = values
            count = len(raw)
        elif typ == RATIONAL:
            raw = b"".join(struct.pack("<II", *v) for v in values)
            count = len(values)
        else:
            raw = struct.pack("<" + _TYPE_CODE[typ] * len(values), *values)
            count = len(values)
        packed.append([tag, typ, count, raw])
    for item in packed:
        raw = item[3]
        if len(raw) > 4:
            offset = extra_offset + sum(len(b) for b in blobs)
            blobs.append(raw + b"\0" * (len(raw) % 2))
            item[3] = struct.pack("<I", offset)
    pixel_offset = extra_offset + sum(len(b) for b in blobs)
    for item in packed:
        if item[0] == STRIP_OFFSETS:
            item[3] = struct.pack("<I", pixel_offset)

    out = bytearray(b"II" + struct.pack("<HI", 42, 8))
    out += struct.pack("<H", len(packed))
    for tag, typ, count, raw in packed:
        out += struct.pack("<HHI", tag, typ, count) + raw.ljust(4, b"\0")
    out += struct.pack("<I", 0)
    for blob in blobs:
        out += blob
    assert len(out) == pixel_offset
    out += data
    return bytes(out)


def _read_ifd(buf, bo, offset):
    try:
        (n,) = struct.unpack_from(bo + "H", buf, offset)
    except struct.error:
        raise NotTiff("IFD offset points outside the file") from None
    tags = {}
    for k in range(n):
        pos = offset + 2 + 12 * k
        try:
            tag, typ, count = struct.unpack_from(bo + "HHI", buf, pos)
        except struct.error:
            raise NotTiff("truncated IFD") from None
        if typ not in _TYPE_SIZE:
            continue
        size = _TYPE_SIZE[typ] * count
        if size <= 4:
            start = pos + 8
        else:
            (start,) = struct.unpack_from(bo + "I", buf, pos + 8)
        raw = buf[start:start + size]
        if len(raw) != size:
            raise NotTiff(f"tag {tag} value lies outside the file")
        if typ == ASCII:
            tags[tag] = raw.split(b"\0", 1)[0].decode("latin-1")
        elif typ in (RATIONAL, 10):
            vals = struct.unpack(bo + _TYPE_CODE[typ][0] * (2 * count), raw)
            tags[tag] = [(vals[i], vals[i + 1]) for i in range(0, len(vals), 2)]
        else:
            tags[tag] = list(struct.unpack(bo + _TYPE_CODE[typ] * count, raw))
    return tags


def _scalar(tags, tag, default=None):
    if tag not in tags:
        return default
    return tags[tag][0]


def _pitch(tags, tag):
    unit = _scalar(tags, RESOLUTION_UNIT, UNIT_INCH)
    if tag not in tags or unit not in _UM_PER_UNIT:
        return None
    num, den = tags[tag][0]
    if num == 0 or den == 0:
        return None
    return _UM_PER_UNIT[unit] * den / num


def decode(data, allowed_bits=(8,)):
    """Decode a baseline, uncompressed, single-channel TIFF."""
    buf = bytes(data)
    if buf[:4] == b"II*\0":
        bo = "<"
    elif buf[:4] == b"MM\0*":
        bo = ">"
    else:
        raise NotTiff("missing TIFF byte-order mark and magic number 42")
    (ifd_offset,) = struct.unpack_from(bo + "I", buf, 4)
    tags = _read_ifd(buf, bo, ifd_offset)

    if TILE_WIDTH in tags:
        raise UnsupportedFeature("tiled TIFF files are not supported")
    compression = _scalar(tags, COMPRESSION, 1)
    if compression != 1:
        raise UnsupportedFeature(f"compression {compression} is not supported (only 1 = none)")
    spp = _scalar(tags, SAMPLES_PER_PIXEL, 1)
    if spp != 1:
        raise UnsupportedFeature(f"{spp} samples per pixel; only single-channel images are supported")
    bits = _scalar(tags, BITS_PER_SAMPLE, 1)
    if bits not in allowed_bits:
        raise UnsupportedFeature(f"BitsPerSample={bits} is not supported (expected {allowed_bits})")
    fmt = _scalar(tags, SAMPLE_FORMAT, 1)
    if bits == 8 and fmt != 1:
        raise UnsupportedFeature(f"SampleFormat={fmt} with 8 bits is not supported")
    if bits == 32 and fmt != 3:
        raise UnsupportedFeature("32-bit samples must be IEEE floats (SampleFormat=3)")
    photometric = _scalar(tags, PHOTOMETRIC)
    if photometric not in (0, 1):
        raise UnsupportedFeature(f"PhotometricInterpretation={photometric} is not grayscale")
    try:
        cols = _scalar(tags, IMAGE_WIDTH)
        rows = _scalar(tags, IMAGE_LENGTH)
        offsets = tags[STRIP_OFFSETS]
        counts = tags[STRIP_BYTE_COUNTS]
    except KeyError as exc:
        raise NotTiff(f"required tag {exc.args[0]} missing") from None
    if cols is None or rows is None:
        raise NotTiff("image dimensions missing")

    dtype = np.dtype(np.uint8) if bits == 8 else np.dtype(bo + "f4")
    need = rows * cols * dtype.itemsize
    strip = b"".join(buf[o:o + c] for o, c in zip(offsets, counts))
    if len(strip) < need:
        raise NotTiff(f"pixel data truncated: need {need} bytes, found {len(strip)}")
    pixels = np.frombuffer(strip[:need], dtype=dtype).reshape(rows, cols)
    pixels = pixels.astype(np.uint8 if bits == 8 else np.float32)
    if photometric == 0:
        if bits != 8:
            raise UnsupportedFeature("WhiteIsZero is only supported for 8-bit images")
        pixels = 255 - pixels
    return TiffImage(
        pixels=pixels,
        pitch_x=_pitch(tags, X_RESOLUTION),
        pitch_y=_pitch(tags, Y_RESOLUTION),
        description=tags.get(IMAGE_DESCRIPTION, ""),
    )
