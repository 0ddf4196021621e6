"""
Mesh designs: STL in, mask out
==============================

CAD tools usually export in millimetres with the structure's top face at
some arbitrary z.  This builds such a file (a shallow dome on a square
plinth), reads it back, scales it into micrometres, renders the top view
and encodes the result.
"""

import sys
from pathlib import Path

import numpy as np

from graylitho import (
    WorkingArea,
    build_lut,
    elevation_to_removal,
    encode_mask,
    linear_fit,
    rasterize_top_view,
    transform_mesh,
    validate_mesh,
    write_tiff,
)
from graylitho.mesh_io import Mesh, load_mesh, write_stl

out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).parent / "_output"
out.mkdir(exist_ok=True)


def dome_surface(n=48, half=0.1, radius=0.09, sag=0.008, z0=2.0):
    """Heightmap triangulation, in mm: a spherical cap rising from a flat plinth."""
    xs = np.linspace(-half, half, n + 1)
    X, Y = np.meshgrid(xs, xs)
    R = (radius**2 + sag**2) / (2 * sag)  # sphere through the rim and the apex
    r2 = X**2 + Y**2
    Z = z0 + np.where(r2 < radius**2, np.sqrt(np.maximum(R**2 - r2, 0)) - (R - sag), 0.0)
    P = np.stack([X, Y, Z], axis=-1)
    a, b, c, d = P[:-1, :-1], P[:-1, 1:], P[1:, 1:], P[1:, :-1]
    tris = np.concatenate([np.stack([a, b, c], -2), np.stack([a, c, d], -2)])
    return Mesh(tris.reshape(-1, 3, 3), name="dome")


stl = out / "dome.stl"
stl.write_bytes(write_stl(dome_surface()))

mesh = load_mesh(stl)
report = validate_mesh(mesh)
print(f"{report.triangle_count} triangles, {report.degenerate_count} degenerate")
print(f"bbox (mm) {np.round(report.bbox_min, 3)} .. {np.round(report.bbox_max, 3)}")

# mm -> um, and move the dome centre to the middle of a 300 x 300 um field.
area = WorkingArea(300, 300, 600, 600)
mesh = transform_mesh(mesh, scale=(1000, 1000, 1000), translate=(150, 150, 0))
elev = rasterize_top_view(mesh, area)
print(f"{elev.covered.sum()} of {elev.covered.size} pixels covered")

# Remove material downward from the apex; the plinth is cut 8 um deep and
# anything outside the mesh footprint is left untouched.
z_top = np.nanmax(elev.z)
design = elevation_to_removal(elev, z_top=z_top, max_depth=8.0, background_removal=0.0)
lut = build_lut(linear_fit(15.0), 8.0)
mask = encode_mask(design, lut)
print(f"removal 0-{design.removal.max():.2f} um, gray {mask.pixels.min()}-{mask.pixels.max()}")

(out / "dome.tif").write_bytes(write_tiff(mask))
print(f"wrote {out / 'dome.tif'}")
