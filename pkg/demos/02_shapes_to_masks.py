"""
Procedural test structures as 8-bit masks
=========================================

Builds the usual test designs on a 1920 x 1080 px field at 0.5 um per pixel,
encodes them through a straight-line calibration and writes one TIFF per
design.  The last part produces a mold/replica pair with inverted relief.
"""

import sys
from pathlib import Path

import numpy as np

from graylitho import (
    ShapeSpec,
    WorkingArea,
    build_lut,
    combine,
    encode_mask,
    generate,
    invert_relief,
    linear_fit,
    write_tiff,
)

out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).parent / "_output"
out.mkdir(exist_ok=True)

field = WorkingArea()  # 960 x 540 um, 1920 x 1080 px
lut = build_lut(linear_fit(15.0), 15.0)

# 250 x 250 um footprints, centred in the field.
origin = ((field.width_um - 250) / 2, (field.height_um - 250) / 2)
designs = {
    "ramp": ShapeSpec("ramp"),
    "stairs": ShapeSpec("stairs", n_steps=5),
    "sinusoid": ShapeSpec("sinusoid", freq_x=0.02, freq_y=0.02),
    "lenses": ShapeSpec("lens_array", lens_diameter=30, lens_pitch=32),
}
for name, spec in designs.items():
    design = generate(spec, field, origin)
    mask = encode_mask(design, lut)
    (out / f"{name}.tif").write_bytes(write_tiff(mask))
    used = np.unique(mask.pixels)
    print(f"{name:9s} depth 0-{design.removal.max():5.2f} um -> {len(used):3d} gray levels")

# Several structures on one field: deeper removal wins where they overlap.
layout = combine([
    generate(ShapeSpec("cone", footprint=(120, 120), size=100, height=10), field, (60, 60)),
    generate(ShapeSpec("pyramid", footprint=(120, 120), size=100, height=10), field, (240, 60)),
    generate(ShapeSpec("hemisphere", footprint=(120, 120), size=100, height=10), field, (420, 60)),
    generate(ShapeSpec("cylinder", footprint=(120, 120), size=100, height=10), field, (600, 60)),
])
(out / "primitives.tif").write_bytes(write_tiff(encode_mask(layout, lut)))

# Mold and replica: the inverted relief's mask is the gray complement.
lenses = generate(designs["lenses"], field, origin)
mold = encode_mask(lenses, lut)
replica = encode_mask(invert_relief(lenses, 15.0), lut)
assert np.all(mold.pixels.astype(int) + replica.pixels == lut.full_scale)
(out / "lenses_inverted.tif").write_bytes(write_tiff(replica))
print(f"wrote masks to {out}")
