"""Orthographic top-down rasterization and the grid types shared by the pipeline.

Pixel ``(i, j)`` (row, column) has its centre at
``((j + 0.5) * pitch_x, (i + 0.5) * pitch_y)`` in working-area micrometres;
row 0 is the top row of the written image.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ClampWarning, DepthOverflow

__all__ = [
    "WorkingArea",
    "ElevationField",
    "HeightField",
    "BACKGROUND",
    "snap_depth",
    "triangle_coverage",
    "rasterize_top_view",
    "elevation_to_removal",
]

BACKGROUND = np.nan

# Removal depths live on a 2**-32 um lattice.  Any two lattice values below
# 2**20 um subtract exactly, which makes relief inversion an exact involution.
DEPTH_QUANTUM_UM = 2.0**-32


def snap_depth(values):
    """Round depths (um) to the removal-depth lattice."""
    return np.round(np.asarray(values, dtype=float) / DEPTH_QUANTUM_UM) * DEPTH_QUANTUM_UM


@dataclass(frozen=True)
class WorkingArea:
    """Physical extent of the exposure field and its pixel grid.

    The default is the 960 x 540 um field rendered at 1920 x 1080 px,
    i.e. 0.5 um per pixel in both axes.
    """

    width_um: float = 960.0
    height_um: float = 540.0
    px_w: int = 1920
    px_h: int = 1080

    def __post_init__(self):
        if not (self.width_um > 0 and self.height_um > 0):
            raise ValueError(f"working area must be positive, got {self.width_um} x {self.height_um} um")
        if int(self.px_w) != self.px_w or int(self.px_h) != self.px_h or self.px_w <= 0 or self.px_h <= 0:
            raise ValueError(f"pixel dimensions must be positive integers, got {self.px_w} x {self.px_h}")
        object.__setattr__(self, "px_w", int(self.px_w))
        object.__setattr__(self, "px_h", int(self.px_h))

    @classmethod
    def from_pitch(cls, px_w, px_h, pitch_x, pitch_y=None):
        pitch_y = pitch_x if pitch_y is None else pitch_y
        return cls(px_w * pitch_x, px_h * pitch_y, px_w, px_h)

    @property
    def pitch_x(self):
        return self.width_um / self.px_w

    @property
    def pitch_y(self):
        return self.height_um / self.px_h

    @property
    def shape(self):
        return (self.px_h, self.px_w)

    def pixel_centers(self):
        """Return 1-D arrays ``(x, y)`` of pixel-centre coordinates in um."""
        x = (np.arange(self.px_w) + 0.5) * self.pitch_x
        y = (np.arange(self.px_h) + 0.5) * self.pitch_y
        return x, y


@dataclass(frozen=True, eq=False)
class ElevationField:
    """Top-surface elevation per pixel; uncovered pixels hold ``BACKGROUND`` (NaN)."""

    area: WorkingArea
    z: np.ndarray

    def __post_init__(self):
        z = np.array(self.z, dtype=float)
        if z.shape != self.area.shape:
            raise ValueError(f"elevation grid has shape {z.shape}, area expects {self.area.shape}")
        if np.any(np.isinf(z)):
            raise ValueError("elevations must be finite or BACKGROUND")
        z.setflags(write=False)
        object.__setattr__(self, "z", z)

    @property
    def covered(self):
        return ~np.isnan(self.z)


@dataclass(frozen=True, eq=False)
class HeightField:
    """Material-removal depth per pixel, ``0 <= removal <= max_depth`` (um).

    Values are snapped to the depth lattice on construction.
    """

    area: WorkingArea
    removal: np.ndarray
    max_depth: float

    def __post_init__(self):
        if not (np.isfinite(self.max_depth) and self.max_depth > 0):
            raise ValueError(f"max_depth must be positive and finite, got {self.max_depth}")
        removal = np.array(self.removal, dtype=float)
        if removal.shape != self.area.shape:
            raise ValueError(f"removal grid has shape {removal.shape}, area expects {self.area.shape}")
        if not np.all(np.isfinite(removal)):
            raise ValueError("removal depths must be finite")
        max_depth = float(snap_depth(self.max_depth))
        removal = snap_depth(removal)
        if removal.size and removal.min() < 0:
            raise ValueError(f"removal depths must be >= 0, found {removal.min()}")
        if removal.size and removal.max() > max_depth:
            raise DepthOverflow(f"removal {removal.max()} um exceeds max_depth {max_depth} um")
        removal.setflags(write=False)
        object.__setattr__(self, "removal", removal)
        object.__setattr__(self, "max_depth", max_depth)

    @property
    def pitch_x(self):
        return self.area.pitch_x

    @property
    def pitch_y(self):
        return self.area.pitch_y

    def __eq__(self, other):
        if not isinstance(other, HeightField):
            return NotImplemented
        return (
            self.area == other.area
            and self.max_depth == other.max_depth
            and np.array_equal(self.removal, other.removal)
        )

    __hash__ = None


def _owns(dx, dy):
    # Top-left rule in image coordinates (y grows downward) for triangles
    # whose interior has positive edge functions.
    return (dy < 0) | ((dy == 0) & (dx > 0))


def _edge(p, q, px, py):
    """Edge function of directed edge p->q at (px, py), plus ownership flag.

    Evaluated on a canonical endpoint order and negated when needed, so the
    two triangles sharing an edge see exactly opposite values.
    """
    if (p[0], p[1]) > (q[0], q[1]):
        w, own = _edge(q, p, px, py)
        return -w, not own
    dx = q[0] - p[0]
    dy = q[1] - p[1]
    return dx * (py - p[1]) - dy * (px - p[0]), bool(_owns(dx, dy))


def _prepare(tri):
    a, b, c = (tuple(float(v) for v in vert) for vert in tri)
    area2, _ = _edge(a[:2], b[:2], c[0], c[1])
    if area2 == 0:
        return None
    if area2 < 0:
        b, c = c, b
    return a, b, c


def _cover_block(a, b, c, px, py):
    w0, o0 = _edge(b[:2], c[:2], px, py)
    w1, o1 = _edge(c[:2], a[:2], px, py)
    w2, o2 = _edge(a[:2], b[:2], px, py)
    inside = (
        ((w0 > 0) | ((w0 == 0) & o0))
        & ((w1 > 0) | ((w1 == 0) & o1))
        & ((w2 > 0) | ((w2 == 0) & o2))
    )
    return inside, w0, w1, w2


def _bbox_slices(a, b, c, area):
    xs = (a[0], b[0], c[0])
    ys = (a[1], b[1], c[1])
    j0 = max(int(np.floor(min(xs) / area.pitch_x - 0.5)), 0)
    j1 = min(int(np.ceil(max(xs) / area.pitch_x - 0.5)) + 1, area.px_w)
    i0 = max(int(np.floor(min(ys) / area.pitch_y - 0.5)), 0)
    i1 = min(int(np.ceil(max(ys) / area.pitch_y - 0.5)) + 1, area.px_h)
    return slice(i0, i1), slice(j0, j1)


def triangle_coverage(tri, area):
    """Boolean ``(px_h, px_w)`` mask of pixel centres the triangle owns in top view."""
    out = np.zeros(area.shape, dtype=bool)
    prep = _prepare(np.asarray(tri, dtype=float))
    if prep is None:
        return out
    a, b, c = prep
    rows, cols = _bbox_slices(a, b, c, area)
    if rows.start >= rows.stop or cols.start >= cols.stop:
        return out
    xc, yc = area.pixel_centers()
    px, py = np.meshgrid(xc[cols], yc[rows])
    out[rows, cols] = _cover_block(a, b, c, px, py)[0]
    return out


def rasterize_top_view(mesh, area):
    """Depth-buffer the mesh as seen by an orthographic camera looking down -Z.

    Each pixel centre takes the highest plane-interpolated z among the
    triangles covering it; uncovered pixels are ``BACKGROUND``.
    """
    zbuf = np.full(area.shape, -np.inf)
    xc, yc = area.pixel_centers()
    for tri in mesh.triangles:
        prep = _prepare(tri)
        if prep is None:
            continue
        a, b, c = prep
        rows, cols = _bbox_slices(a, b, c, area)
        if rows.start >= rows.stop or cols.start >= cols.stop:
            continue
        px, py = np.meshgrid(xc[cols], yc[rows])
        inside, w0, w1, w2 = _cover_block(a, b, c, px, py)
        if not inside.any():
            continue
        w0, w1, w2 = w0[inside], w1[inside], w2[inside]
        z = (w0 * a[2] + w1 * b[2] + w2 * c[2]) / (w0 + w1 + w2)
        z = np.clip(z, min(a[2], b[2], c[2]), max(a[2], b[2], c[2]))
        block = zbuf[rows, cols]
        block[inside] = np.maximum(block[inside], z)
        zbuf[rows, cols] = block
    zbuf[np.isneginf(zbuf)] = BACKGROUND
    return ElevationField(area, zbuf)


def elevation_to_removal(elev, z_top, max_depth, background_removal=0.0):
    """Convert elevations to removal depth ``clamp(z_top - z, 0, max_depth)``.

    Uncovered pixels take ``background_removal``.  A :class:`ClampWarning`
    reports how many covered pixels were clamped.
    """
    if not max_depth > 0:
        raise ValueError(f"max_depth must be > 0, got {max_depth}")
    if not 0 <= background_removal <= max_depth:
        raise ValueError(f"background_removal must lie in [0, {max_depth}], got {background_removal}")
    covered = elev.covered
    raw = z_top - elev.z
    clamped = covered & ((raw < 0) | (raw > max_depth))
    n = int(np.count_nonzero(clamped))
    if n:
        warnings.warn(f"{n} pixel(s) clamped into [0, {max_depth}] um removal", ClampWarning, stacklevel=2)
    removal = np.where(covered, np.clip(np.nan_to_num(raw), 0.0, max_depth), background_removal)
    return HeightField(elev.area, removal, max_depth)
