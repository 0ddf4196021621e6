"""Design-versus-result comparison along scan lines: residuals and RMS.

Profiles are sampled along a straight scan line, the observed profile is
resampled onto the expected one's positions, and the residual
``expected - observed`` is summarized by its RMS over the whole scan and
over labelled segments.  Excluded ranges (e.g. where a stylus tip cannot
follow a steep wall) are dropped before any RMS is taken.
"""

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import EmptyRange, GridMismatch, OutOfBounds

__all__ = [
    "Profile",
    "ResidualSeries",
    "Segment",
    "Exclusion",
    "ComparisonReport",
    "extract_profile",
    "residuals",
    "rms",
    "compare",
    "compare_profiles",
    "load_profilometer_csv",
    "emit_report",
    "format_summary",
    "residuals_csv",
    "render_svg",
]

SOURCES = ("design", "simulated", "measured")


@dataclass(frozen=True, eq=False)
class Profile:
    s: np.ndarray
    depth: np.ndarray
    source: str = "design"

    def __post_init__(self):
        s = np.array(self.s, dtype=float)
        d = np.array(self.depth, dtype=float)
        if s.shape != d.shape or s.ndim != 1 or len(s) < 1:
            raise ValueError("profile needs matching 1-D position and depth arrays")
        if np.any(np.diff(s) <= 0):
            raise ValueError("profile positions must be strictly increasing")
        if self.source not in SOURCES:
            raise ValueError(f"profile source must be one of {SOURCES}")
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "depth", d)


@dataclass(frozen=True, eq=False)
class ResidualSeries:
    s: np.ndarray
    expected: np.ndarray
    observed: np.ndarray

    @property
    def residual(self):
        return self.expected - self.observed


@dataclass(frozen=True)
class Segment:
    label: str
    s_start: float
    s_end: float
    rms: float = None


@dataclass(frozen=True)
class Exclusion:
    s_start: float
    s_end: float
    reason: str = ""


@dataclass(frozen=True, eq=False)
class ComparisonReport:
    series: ResidualSeries
    overall_rms: float
    segments: list = field(default_factory=list)
    exclusions: list = field(default_factory=list)

    @property
    def included(self):
        return _included(self.series.s, self.exclusions)


def _bilinear(field_, x, y):
    a = field_.area
    fx = np.clip(x / a.pitch_x - 0.5, 0, a.px_w - 1)
    fy = np.clip(y / a.pitch_y - 0.5, 0, a.px_h - 1)
    j0 = np.minimum(np.floor(fx).astype(int), max(a.px_w - 2, 0))
    i0 = np.minimum(np.floor(fy).astype(int), max(a.px_h - 2, 0))
    j1 = np.minimum(j0 + 1, a.px_w - 1)
    i1 = np.minimum(i0 + 1, a.px_h - 1)
    tx = fx - j0
    ty = fy - i0
    r = field_.removal
    top = r[i0, j0] * (1 - tx) + r[i0, j1] * tx
    bottom = r[i1, j0] * (1 - tx) + r[i1, j1] * tx
    return top * (1 - ty) + bottom * ty


def extract_profile(field_, p0, p1, n_samples, source="design"):
    """Sample ``field_`` at ``n_samples`` evenly spaced points from ``p0`` to ``p1`` (um).

    Depth is bilinearly interpolated between pixel centres (and held
    constant in the outer half pixel).  ``s`` is the distance from ``p0``.
    """
    if n_samples < 2:
        raise ValueError("n_samples must be >= 2")
    a = field_.area
    for name, (x, y) in (("p0", p0), ("p1", p1)):
        if not (0 <= x <= a.width_um and 0 <= y <= a.height_um):
            raise OutOfBounds(f"{name}=({x}, {y}) lies outside the {a.width_um} x {a.height_um} um field")
    if tuple(p0) == tuple(p1):
        raise ValueError("scan line endpoints must differ")
    t = np.linspace(0.0, 1.0, n_samples)
    x = p0[0] + t * (p1[0] - p0[0])
    y = p0[1] + t * (p1[1] - p0[1])
    s = t * math.hypot(p1[0] - p0[0], p1[1] - p0[1])
    return Profile(s, _bilinear(field_, x, y), source)


def residuals(observed, expected):
    """``expected - observed`` on the expected profile's positions.

    The observed profile is linearly resampled; it must span the expected
    range since extrapolation is not allowed.
    """
    lo, hi = expected.s[0], expected.s[-1]
    if observed.s[0] > lo or observed.s[-1] < hi:
        raise GridMismatch(
            f"observed profile covers [{observed.s[0]:g}, {observed.s[-1]:g}] um, "
            f"expected needs [{lo:g}, {hi:g}] um"
        )
    if len(observed.s) == len(expected.s) and np.array_equal(observed.s, expected.s):
        obs = observed.depth
    else:
        obs = np.interp(expected.s, observed.s, observed.depth)
    return ResidualSeries(expected.s.copy(), expected.depth.copy(), obs)


def _included(s, exclusions):
    keep = np.ones(len(s), dtype=bool)
    for ex in exclusions:
        keep &= ~((s >= ex.s_start) & (s <= ex.s_end))
    return keep


def rms(values, s=None, s_range=None, exclusions=()):
    """Root mean square of ``values``.

    With ``s`` given, only samples whose position lies in the inclusive
    ``s_range`` and outside every exclusion count.  Raises
    :class:`EmptyRange` when nothing is left.
    """
    if isinstance(values, ResidualSeries):
        s = values.s
        values = values.residual
    r = np.asarray(values, dtype=float)
    keep = np.ones(r.shape, dtype=bool)
    if s_range is not None or exclusions:
        if s is None:
            raise ValueError("positions are required to select a range")
        s = np.asarray(s, dtype=float)
        if s_range is not None:
            keep &= (s >= s_range[0]) & (s <= s_range[1])
        keep &= _included(s, exclusions)
    r = r[keep]
    if r.size == 0:
        raise EmptyRange(f"no samples in range {s_range}")
    # Scaling by the largest magnitude avoids overflow and makes a constant
    # series return exactly its magnitude.
    scale = np.max(np.abs(r))
    if scale == 0:
        return 0.0
    return float(scale * np.sqrt(np.mean(np.square(r / scale))))


def _as_segment(seg):
    if isinstance(seg, Segment):
        return seg
    label, start, end = seg
    return Segment(str(label), float(start), float(end))


def _as_exclusion(ex):
    if isinstance(ex, Exclusion):
        return ex
    if len(ex) == 2:
        return Exclusion(float(ex[0]), float(ex[1]))
    return Exclusion(float(ex[0]), float(ex[1]), str(ex[2]))


def compare_profiles(expected, observed, segments=(), exclusions=()):
    series = residuals(observed, expected)
    exclusions = [_as_exclusion(e) for e in exclusions]
    overall = rms(series, exclusions=exclusions)
    out = []
    for seg in map(_as_segment, segments):
        if seg.s_start > seg.s_end or seg.s_start < series.s[0] or seg.s_end > series.s[-1]:
            raise ValueError(
                f"segment {seg.label!r} [{seg.s_start}, {seg.s_end}] lies outside the profile "
                f"[{series.s[0]:g}, {series.s[-1]:g}]"
            )
        value = rms(series, s_range=(seg.s_start, seg.s_end), exclusions=exclusions)
        out.append(Segment(seg.label, seg.s_start, seg.s_end, value))
    return ComparisonReport(series, overall, out, exclusions)


def compare(design, observed, scanline, segments=(), exclusions=()):
    """Compare two height fields along ``scanline = (p0, p1, n_samples)``.

    Fields may have different pitches; both are sampled at the same
    physical positions.
    """
    p0, p1, n = scanline
    expected = extract_profile(design, p0, p1, n, source="design")
    obs = extract_profile(observed, p0, p1, n, source="simulated")
    return compare_profiles(expected, obs, segments, exclusions)


def load_profilometer_csv(source, sign=1.0, offset_um=0.0, scale_x=1.0):
    """Read a two-column (position um, height um) profilometer export.

    Depth is ``sign * height + offset_um``; non-numeric lines (headers,
    instrument metadata) are skipped.  Positions are rebased to start at 0.
    """
    if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source):
        text = Path(source).read_text(errors="replace")
    else:
        text = source
    pos, hgt = [], []
    for row in csv.reader(io.StringIO(text)):
        if len(row) < 2:
            continue
        try:
            x, z = float(row[0]), float(row[1])
        except ValueError:
            continue
        pos.append(x * scale_x)
        hgt.append(z)
    if len(pos) < 2:
        raise ValueError("profilometer file holds fewer than 2 numeric rows")
    pos = np.array(pos)
    order = np.argsort(pos, kind="stable")
    pos = pos[order] - pos[order][0]
    depth = sign * np.array(hgt)[order] + offset_um
    return Profile(pos, depth, source="measured")


def _fmt(v):
    return format(float(v), ".10g")


def residuals_csv(report):
    s = report.series
    lines = ["s_um,expected_um,observed_um,residual_um"]
    for row in zip(s.s, s.expected, s.observed, s.residual):
        lines.append(",".join(_fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def format_summary(report):
    n = len(report.series.s)
    kept = int(np.count_nonzero(report.included))
    lines = [
        "graylitho comparison report",
        f"samples: {n} ({kept} used, {n - kept} excluded)",
        f"overall RMS: {report.overall_rms:.4f} um",
    ]
    for seg in report.segments:
        lines.append(f"segment {seg.label} [{seg.s_start:g}, {seg.s_end:g}] um: RMS {seg.rms:.4f} um")
    for ex in report.exclusions:
        why = f" ({ex.reason})" if ex.reason else ""
        lines.append(f"excluded [{ex.s_start:g}, {ex.s_end:g}] um{why}")
    return "\n".join(lines) + "\n"


def render_svg(report, width=800, height=400):
    """Line plot of expected, observed and residual depth versus position."""
    s = report.series
    margin = 60
    curves = [
        ("expected", s.expected, "#1f77b4"),
        ("observed", s.observed, "#ff7f0e"),
        ("residual", s.residual, "#2ca02c"),
    ]
    x0, x1 = float(s.s[0]), float(s.s[-1])
    ymin = min(float(np.min(c[1])) for c in curves)
    ymax = max(float(np.max(c[1])) for c in curves)
    if ymax == ymin:
        ymin, ymax = ymin - 1, ymax + 1
    if x1 == x0:
        x1 = x0 + 1

    def px(x):
        return margin + (x - x0) / (x1 - x0) * (width - 2 * margin)

    def py(y):
        # Depth grows downward, like the cross-section it represents.
        return margin + (y - ymin) / (ymax - ymin) * (height - 2 * margin)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{margin}" y1="{height - margin}" x2="{width - margin}" y2="{height - margin}" stroke="black"/>',
        f'<line x1="{margin}" y1="{margin}" x2="{margin}" y2="{height - margin}" stroke="black"/>',
        f'<text x="{width / 2:.1f}" y="{height - 15}" text-anchor="middle" font-size="14">position (µm)</text>',
        f'<text x="15" y="{height / 2:.1f}" text-anchor="middle" font-size="14" '
        f'transform="rotate(-90 15 {height / 2:.1f})">depth (µm)</text>',
        f'<text x="{margin - 5}" y="{margin + 4}" text-anchor="end" font-size="11">{ymin:.3g}</text>',
        f'<text x="{margin - 5}" y="{height - margin + 4}" text-anchor="end" font-size="11">{ymax:.3g}</text>',
        f'<text x="{margin}" y="{height - margin + 16}" text-anchor="middle" font-size="11">{x0:.4g}</text>',
        f'<text x="{width - margin}" y="{height - margin + 16}" text-anchor="middle" font-size="11">{x1:.4g}</text>',
    ]
    for k, (name, ys, color) in enumerate(curves):
        pts = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in zip(s.s, ys))
        parts.append(f'<polyline id="{name}" fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        parts.append(
            f'<text x="{width - margin - 90}" y="{margin + 16 * k}" font-size="12" fill="{color}">{name}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def emit_report(report, directory):
    """Write ``residuals.csv``, ``summary.txt`` and ``profile.svg`` into ``directory``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    files = {
        "residuals.csv": residuals_csv(report),
        "summary.txt": format_summary(report),
        "profile.svg": render_svg(report),
    }
    paths = []
    for name, text in files.items():
        path = directory / name
        path.write_text(text, encoding="utf-8")
        paths.append(path)
    return paths
