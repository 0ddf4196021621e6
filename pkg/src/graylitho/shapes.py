"""Closed-form test structures generated directly as removal-depth maps.

Every generator works in local footprint coordinates ``(u, v)`` (um) with
the footprint's corner at ``origin``; pixels outside the footprint stay at
zero removal.  Raised structures (pyramids, lenses, ...) are carved as a
floor at ``max_depth`` with the structure rising out of it.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DepthOverflow, FootprintOverflow
from .raster import HeightField

__all__ = ["KINDS", "ShapeSpec", "generate", "invert_relief", "combine"]

KINDS = (
    "ramp",
    "stairs",
    "sinusoid",
    "lens_array",
    "pyramid",
    "cone",
    "cylinder",
    "cube",
    "hemisphere",
)


@dataclass(frozen=True)
class ShapeSpec:
    """Parameters of one procedural structure.

    Frequencies are in cycles per um along the local axes.  ``size`` is the
    side length (pyramid, cube) or base diameter (cone, cylinder,
    hemisphere) of a single primitive, ``height`` its height above the
    floor.  ``sag`` is the lens dome height; ``None`` means a hemisphere
    capped at ``max_depth``.
    """

    kind: str
    footprint: tuple = (250.0, 250.0)
    max_depth: float = 15.0
    n_steps: int = 5
    amplitude: float = 1.0
    freq_x: float = 0.02
    freq_y: float = 0.02
    phase: float = 0.0
    lens_diameter: float = 30.0
    lens_pitch: float = 32.0
    sag: float = None
    size: float = 10.0
    height: float = 10.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown shape kind {self.kind!r}; expected one of {', '.join(KINDS)}")
        w, h = (float(v) for v in self.footprint)
        object.__setattr__(self, "footprint", (w, h))
        if not (w > 0 and h > 0):
            raise ValueError(f"footprint must be positive, got {self.footprint}")
        if not self.max_depth > 0:
            raise ValueError(f"max_depth must be positive, got {self.max_depth}")
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise ValueError(f"n_steps must be an integer >= 1, got {self.n_steps}")
        if self.freq_x < 0 or self.freq_y < 0:
            raise ValueError("frequencies must be >= 0")
        if not 0 <= self.amplitude <= 1:
            raise ValueError(f"amplitude must lie in [0, 1], got {self.amplitude}")
        if self.kind == "lens_array":
            if not (self.lens_diameter > 0 and self.lens_pitch >= self.lens_diameter):
                raise ValueError("lens_pitch must be >= lens_diameter > 0")
            if self.sag is not None and not 0 < self.sag <= min(self.lens_diameter / 2, self.max_depth):
                raise ValueError("sag must lie in (0, min(lens radius, max_depth)]")
        if self.kind in ("pyramid", "cone", "cylinder", "cube", "hemisphere"):
            if not (self.size > 0 and 0 < self.height <= self.max_depth):
                raise ValueError("primitive needs size > 0 and 0 < height <= max_depth")
            if self.size > min(w, h):
                raise ValueError(f"primitive size {self.size} um exceeds footprint {self.footprint}")
            if self.kind == "hemisphere" and self.height > self.size / 2:
                raise ValueError("hemisphere height cannot exceed its base radius")

    @classmethod
    def from_mapping(cls, mapping):
        """Build a spec from string-valued config keys.

        Footprint keys are ``footprint_w_um``/``footprint_h_um``; other
        physical keys carry an ``_um`` suffix (``max_depth_um``,
        ``size_um``, ...).  Placement keys (``origin_*``) are ignored here.
        """
        aliases = {
            "max_depth_um": "max_depth",
            "lens_diameter_um": "lens_diameter",
            "lens_pitch_um": "lens_pitch",
            "sag_um": "sag",
            "size_um": "size",
            "height_um": "height",
            "freq_x_per_um": "freq_x",
            "freq_y_per_um": "freq_y",
            "n_steps": "n_steps",
            "amplitude": "amplitude",
            "phase": "phase",
            "kind": "kind",
        }
        kwargs = {}
        for key, raw in mapping.items():
            if key in ("footprint_w_um", "footprint_h_um", "origin_x_um", "origin_y_um"):
                continue
            if key not in aliases:
                raise ValueError(f"unknown shape key {key!r}")
            name = aliases[key]
            if name == "kind":
                kwargs[name] = raw.strip()
            elif name == "n_steps":
                kwargs[name] = int(raw)
            else:
                kwargs[name] = float(raw)
        if "footprint_w_um" in mapping:
            w = float(mapping["footprint_w_um"])
            kwargs["footprint"] = (w, float(mapping.get("footprint_h_um", w)))
        return cls(**kwargs)


def _ramp(spec, u, v):
    w, _ = spec.footprint
    return spec.max_depth * u / w


def _stairs(spec, u, v):
    w, _ = spec.footprint
    n = spec.n_steps
    level = np.minimum(np.floor(n * u / w) + 1, n)
    return spec.max_depth * level / n


def _sinusoid(spec, u, v):
    s = np.sin(2 * np.pi * spec.freq_x * u + spec.phase) * np.sin(2 * np.pi * spec.freq_y * v + spec.phase)
    return spec.max_depth / 2 * (1 + spec.amplitude * s)


def _cap_height(rho, base_radius, sag):
    # Spherical cap of base radius ``a`` and sag ``h``: sphere radius (a^2 + h^2) / 2h.
    radius = (base_radius**2 + sag**2) / (2 * sag)
    inside = rho <= base_radius
    hgt = np.sqrt(np.maximum(radius**2 - rho**2, 0.0)) - (radius - sag)
    return np.where(inside, np.clip(hgt, 0.0, sag), 0.0)


def _lens_array(spec, u, v):
    w, h = spec.footprint
    r = spec.lens_diameter / 2
    sag = spec.sag if spec.sag is not None else min(r, spec.max_depth)
    p = spec.lens_pitch
    nx = max(int(np.floor(w / p)), 1)
    ny = max(int(np.floor(h / p)), 1)
    ox = (w - nx * p) / 2 + p / 2
    oy = (h - ny * p) / 2 + p / 2
    # Nearest lens centre for each sample.
    kx = np.clip(np.floor((u - ox) / p + 0.5), 0, nx - 1)
    ky = np.clip(np.floor((v - oy) / p + 0.5), 0, ny - 1)
    rho = np.hypot(u - (ox + kx * p), v - (oy + ky * p))
    return spec.max_depth - _cap_height(rho, r, sag)


def _primitive(spec, u, v):
    w, h = spec.footprint
    du = u - w / 2
    dv = v - h / 2
    half = spec.size / 2
    H = spec.height
    if spec.kind == "pyramid":
        raised = H * np.clip(1 - np.maximum(np.abs(du), np.abs(dv)) / half, 0.0, 1.0)
    elif spec.kind == "cone":
        raised = H * np.clip(1 - np.hypot(du, dv) / half, 0.0, 1.0)
    elif spec.kind == "cylinder":
        raised = np.where(np.hypot(du, dv) <= half, H, 0.0)
    elif spec.kind == "cube":
        raised = np.where((np.abs(du) <= half) & (np.abs(dv) <= half), H, 0.0)
    else:
        raised = _cap_height(np.hypot(du, dv), half, H)
    return spec.max_depth - raised


_GENERATORS = {
    "ramp": _ramp,
    "stairs": _stairs,
    "sinusoid": _sinusoid,
    "lens_array": _lens_array,
    "pyramid": _primitive,
    "cone": _primitive,
    "cylinder": _primitive,
    "cube": _primitive,
    "hemisphere": _primitive,
}


def generate(spec, area, origin=(0.0, 0.0)):
    """Sample ``spec`` at pixel centres of ``area`` with its footprint corner at ``origin``.

    Returns a :class:`HeightField` whose ``max_depth`` is ``spec.max_depth``.
    """
    ox, oy = (float(o) for o in origin)
    w, h = spec.footprint
    eps = 1e-9 * max(area.width_um, area.height_um)
    if ox < -eps or oy < -eps or ox + w > area.width_um + eps or oy + h > area.height_um + eps:
        raise FootprintOverflow(
            f"{spec.kind} footprint {w} x {h} um at ({ox}, {oy}) leaves the "
            f"{area.width_um} x {area.height_um} um working area"
        )
    xc, yc = area.pixel_centers()
    u = xc - ox
    v = yc - oy
    cols = (u >= 0) & (u <= w)
    rows = (v >= 0) & (v <= h)
    removal = np.zeros(area.shape)
    if cols.any() and rows.any():
        uu, vv = np.meshgrid(u[cols], v[rows])
        values = _GENERATORS[spec.kind](spec, uu, vv)
        removal[np.ix_(rows, cols)] = np.clip(values, 0.0, spec.max_depth)
    return HeightField(area, removal, spec.max_depth)


def invert_relief(field, max_depth=None):
    """Complement a removal map: ``max_depth - removal`` pixelwise.

    Used to turn a direct-lithography mask into a mold mask whose cast
    replica carries the positive shape.  Applying it twice restores the
    input exactly.
    """
    max_depth = field.max_depth if max_depth is None else max_depth
    limit = HeightField(field.area, np.zeros(field.area.shape), max_depth).max_depth
    if field.removal.size and field.removal.max() > limit:
        raise DepthOverflow(f"removal {field.removal.max()} um exceeds max_depth {limit} um")
    return HeightField(field.area, limit - field.removal, limit)


def combine(fields_):
    """Merge fields on the same area by taking the deepest removal per pixel."""
    fields_ = list(fields_)
    if not fields_:
        raise ValueError("nothing to combine")
    area = fields_[0].area
    if any(f.area != area for f in fields_):
        raise ValueError("fields must share a working area")
    removal = np.maximum.reduce([f.removal for f in fields_])
    return HeightField(area, removal, max(f.max_depth for f in fields_))
