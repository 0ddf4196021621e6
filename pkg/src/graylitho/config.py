"""Project configuration: INI-style ``key = value`` files with ``[section]`` headers.

Example::

    [area]
    width_um = 960
    height_um = 540
    px_w = 1920
    px_h = 1080

    [calibration]
    file = calibration.csv
    method = monotone-pchip
    max_depth_um = 15

    [shape:ramp]
    kind = ramp
    footprint_w_um = 250
    footprint_h_um = 250
    origin_x_um = 355
    origin_y_um = 145

    [simulate]
    sigma_um = 0

    [analysis]
    x0_um = 355
    y0_um = 270
    x1_um = 605
    y1_um = 270
    n_samples = 501

    [segment:upper]
    start_um = 0
    end_um = 80

    [exclude:tip]
    start_um = 245
    end_um = 250
    reason = profilometer tip

    [output]
    dir = out

A ``[mesh]`` section (``path``, ``scale``, ``translate_um``, ``z_top_um``,
``max_depth_um``, ``background_removal_um``) may replace the shape sections.
Relative paths resolve against the config file's directory.
"""

import configparser
from dataclasses import dataclass, field
from pathlib import Path

from .analysis import Exclusion, Segment
from .calibration import METHODS
from .errors import ConfigError
from .raster import WorkingArea
from .shapes import ShapeSpec

__all__ = ["ProjectConfig", "ShapePlacement", "MeshPlacement", "Scanline", "load_config", "parse_config"]


@dataclass(frozen=True)
class ShapePlacement:
    name: str
    spec: ShapeSpec
    origin: tuple


@dataclass(frozen=True)
class MeshPlacement:
    path: Path
    scale: tuple = (1.0, 1.0, 1.0)
    translate: tuple = (0.0, 0.0, 0.0)
    z_top: float = None
    max_depth: float = None
    background_removal: float = 0.0


@dataclass(frozen=True)
class Scanline:
    p0: tuple
    p1: tuple
    n_samples: int

    def as_tuple(self):
        return (self.p0, self.p1, self.n_samples)


@dataclass(frozen=True)
class ProjectConfig:
    area: WorkingArea = WorkingArea()
    calibration_file: Path = None
    method: str = "monotone-pchip"
    max_depth: float = None
    shapes: tuple = ()
    mesh: MeshPlacement = None
    sigma_um: float = 0.0
    truncation: float = 4.0
    scanline: Scanline = None
    segments: tuple = ()
    exclusions: tuple = ()
    output_dir: Path = Path("out")
    base_dir: Path = field(default=Path("."), compare=False)


def _num(section, key, kind=float, default=None, positive=False, required=False):
    where = f"[{section.name}] {key}"
    if key not in section:
        if required:
            raise ConfigError(f"{where}: missing required value")
        return default
    raw = section[key]
    try:
        value = kind(raw)
    except ValueError:
        raise ConfigError(f"{where}: cannot parse {raw!r} as {kind.__name__}") from None
    if positive and not value > 0:
        raise ConfigError(f"{where}: must be positive, got {raw}")
    return value


def _triple(section, key, default):
    if key not in section:
        return default
    parts = [p.strip() for p in section[key].split(",")]
    try:
        values = tuple(float(p) for p in parts)
    except ValueError:
        raise ConfigError(f"[{section.name}] {key}: expected three comma-separated numbers") from None
    if len(values) != 3:
        raise ConfigError(f"[{section.name}] {key}: expected three comma-separated numbers")
    return values


def _check_keys(section, allowed):
    for key in section:
        if key not in allowed:
            raise ConfigError(f"[{section.name}] {key}: unknown key")


def parse_config(text, base_dir="."):
    """Parse config ``text``; relative paths resolve against ``base_dir``."""
    base_dir = Path(base_dir)
    cp = configparser.ConfigParser(interpolation=None, default_section="__none__")
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None

    kwargs = {"base_dir": base_dir}
    if cp.has_section("area"):
        sec = cp["area"]
        _check_keys(sec, {"width_um", "height_um", "px_w", "px_h"})
        default = WorkingArea()
        kwargs["area"] = WorkingArea(
            _num(sec, "width_um", float, default.width_um, positive=True),
            _num(sec, "height_um", float, default.height_um, positive=True),
            _num(sec, "px_w", int, default.px_w, positive=True),
            _num(sec, "px_h", int, default.px_h, positive=True),
        )
    if cp.has_section("calibration"):
        sec = cp["calibration"]
        _check_keys(sec, {"file", "method", "max_depth_um"})
        if "file" in sec:
            kwargs["calibration_file"] = base_dir / sec["file"]
        method = sec.get("method", "monotone-pchip").strip()
        if method not in METHODS:
            raise ConfigError(f"[calibration] method: {method!r} is not one of {', '.join(METHODS)}")
        kwargs["method"] = method
        kwargs["max_depth"] = _num(sec, "max_depth_um", float, None, positive=True)

    shapes = []
    segments = []
    exclusions = []
    for name in cp.sections():
        head, _, label = name.partition(":")
        sec = cp[name]
        if head == "shape":
            mapping = dict(sec)
            mapping.setdefault("max_depth_um", repr(kwargs.get("max_depth") or 15.0))
            try:
                spec = ShapeSpec.from_mapping(mapping)
            except (ValueError, TypeError) as exc:
                raise ConfigError(f"[{name}] {exc}") from None
            origin = (_num(sec, "origin_x_um", float, 0.0), _num(sec, "origin_y_um", float, 0.0))
            shapes.append(ShapePlacement(label or spec.kind, spec, origin))
        elif head == "segment":
            _check_keys(sec, {"start_um", "end_um"})
            segments.append(
                Segment(label or name, _num(sec, "start_um", required=True), _num(sec, "end_um", required=True))
            )
        elif head == "exclude":
            _check_keys(sec, {"start_um", "end_um", "reason"})
            exclusions.append(
                Exclusion(
                    _num(sec, "start_um", required=True),
                    _num(sec, "end_um", required=True),
                    sec.get("reason", label),
                )
            )
        elif head not in ("area", "calibration", "mesh", "simulate", "analysis", "output"):
            raise ConfigError(f"[{name}]: unknown section")
    kwargs["shapes"] = tuple(shapes)
    kwargs["segments"] = tuple(segments)
    kwargs["exclusions"] = tuple(exclusions)

    if cp.has_section("mesh"):
        sec = cp["mesh"]
        _check_keys(sec, {"path", "scale", "translate_um", "z_top_um", "max_depth_um", "background_removal_um"})
        kwargs["mesh"] = MeshPlacement(
            path=base_dir / sec["path"] if "path" in sec else None,
            scale=_triple(sec, "scale", (1.0, 1.0, 1.0)),
            translate=_triple(sec, "translate_um", (0.0, 0.0, 0.0)),
            z_top=_num(sec, "z_top_um"),
            max_depth=_num(sec, "max_depth_um", positive=True),
            background_removal=_num(sec, "background_removal_um", float, 0.0),
        )
    if cp.has_section("simulate"):
        sec = cp["simulate"]
        _check_keys(sec, {"sigma_um", "truncation"})
        kwargs["sigma_um"] = _num(sec, "sigma_um", float, 0.0)
        if kwargs["sigma_um"] < 0:
            raise ConfigError("[simulate] sigma_um: must be >= 0")
        kwargs["truncation"] = _num(sec, "truncation", float, 4.0, positive=True)
    if cp.has_section("analysis"):
        sec = cp["analysis"]
        _check_keys(sec, {"x0_um", "y0_um", "x1_um", "y1_um", "n_samples"})
        kwargs["scanline"] = Scanline(
            (_num(sec, "x0_um", required=True), _num(sec, "y0_um", required=True)),
            (_num(sec, "x1_um", required=True), _num(sec, "y1_um", required=True)),
            _num(sec, "n_samples", int, 501, positive=True),
        )
    if cp.has_section("output"):
        sec = cp["output"]
        _check_keys(sec, {"dir"})
        kwargs["output_dir"] = base_dir / sec.get("dir", "out")
    else:
        kwargs["output_dir"] = base_dir / "out"
    return ProjectConfig(**kwargs)


def load_config(path):
    path = Path(path)
    return parse_config(path.read_text(), base_dir=path.parent)
