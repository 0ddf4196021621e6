"""
From a contrast curve to a depth -> gray lookup table
=====================================================

Reads gray/depth pairs measured on exposed test squares, fits a monotone
curve through them and inverts it into the 256-entry table used to encode
masks.
"""

import sys
from pathlib import Path

import numpy as np

from graylitho import build_lut, fit_contrast, load_calibration

here = Path(__file__).parent
out = Path(sys.argv[1]) if len(sys.argv) > 1 else here / "_output"
out.mkdir(exist_ok=True)

curve = load_calibration(here / "data" / "contrast_curve.csv")
print(f"{len(curve)} calibration points, gray {curve.gray[0]}-{curve.gray[-1]}, "
      f"depth up to {curve.depth.max():.2f} um")

# The reading at gray 220 dips below its neighbour.  The default method
# pools it with gray 210 before interpolating, so the curve stays monotone.
fit = fit_contrast(curve, "monotone-pchip")
print(f"monotone-pchip      residual {fit.max_residual:.3f} um")

smooth = fit_contrast(curve, "isotonic+smoothing")
print(f"isotonic+smoothing  residual {smooth.max_residual:.3f} um, {len(smooth.knots)} knots")

sweep = np.linspace(fit.g_min, fit.g_max, 10_000)
assert np.all(np.diff(fit(sweep)) >= 0)

# Ask for 15 um of relief: the table only spans the part of the curve we use.
lut = build_lut(fit, max_depth=15.0)
print(f"depth step per gray level: at most {fit.max_step():.3f} um")
for depth in (0.0, 3.75, 7.5, 11.25, 15.0):
    print(f"  {depth:5.2f} um -> gray {int(lut.gray_for_depth(depth)):3d}")

(out / "lut.json").write_text(lut.to_json())
print(f"wrote {out / 'lut.json'} (id {lut.identifier})")
