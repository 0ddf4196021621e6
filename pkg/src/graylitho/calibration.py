"""Contrast-curve calibration: measured (gray, depth) points to a depth->gray LUT.

The measured curve maps gray level to removed depth.  It is fitted with a
monotone non-decreasing function ``D(g)``, which is then inverted and
normalized to give the gray level that produces a requested depth.
"""

import csv
import hashlib
import io
import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    ClampWarning,
    DepthNotReachable,
    GrayOutOfRange,
    NegativeDepth,
    TooFewPoints,
)
from .fitting import hermite_eval, isotonic_regression, pchip_slopes, pooled_blocks

__all__ = [
    "METHODS",
    "ContrastCurve",
    "FittedCurve",
    "DepthToGrayLUT",
    "load_calibration",
    "fit_contrast",
    "build_lut",
    "invert_depth",
    "gray_to_depth",
    "linear_fit",
    "round_half_up",
]

METHODS = ("monotone-pchip", "isotonic+smoothing")
LUT_FORMAT = "graylitho-lut"


def round_half_up(x):
    return np.floor(np.asarray(x, dtype=float) + 0.5)


@dataclass(frozen=True, eq=False)
class ContrastCurve:
    """Sorted, de-duplicated calibration points."""

    gray: np.ndarray
    depth: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        gray = np.asarray(self.gray, dtype=int)
        depth = np.asarray(self.depth, dtype=float)
        if gray.shape != depth.shape or gray.ndim != 1:
            raise ValueError("gray and depth must be 1-D arrays of equal length")
        if len(gray) < 2:
            raise TooFewPoints(f"contrast curve needs at least 2 points, got {len(gray)}")
        if np.any(np.diff(gray) <= 0):
            raise ValueError("gray levels must be strictly increasing")
        if np.any((gray < 0) | (gray > 255)):
            raise GrayOutOfRange("gray levels must lie in 0-255")
        if np.any(~np.isfinite(depth)) or np.any(depth < 0):
            raise NegativeDepth("depths must be finite and >= 0")
        object.__setattr__(self, "gray", gray)
        object.__setattr__(self, "depth", depth)

    def __len__(self):
        return len(self.gray)


def _iter_rows(records):
    if isinstance(records, (str, Path)):
        text = str(records)
        if "\n" not in text and "," not in text:
            text = Path(records).read_text()
        return csv.reader(io.StringIO(text))
    return iter(records)


def load_calibration(records, metadata=None):
    """Read ``gray,depth_um`` rows into a :class:`ContrastCurve`.

    ``records`` may be a path, CSV text, or an iterable of row sequences.
    A header row is skipped; duplicate gray levels are averaged.
    """
    sums = {}
    for lineno, row in enumerate(_iter_rows(records), start=1):
        row = [c.strip() if isinstance(c, str) else c for c in row]
        if not row or all(c == "" for c in row):
            continue
        if isinstance(row[0], str) and (row[0].startswith("#") or row[0].lower() == "gray"):
            continue
        if len(row) < 2:
            raise ValueError(f"row {lineno}: expected 'gray,depth_um', got {row!r}")
        try:
            gray_f = float(row[0])
            depth = float(row[1])
        except ValueError:
            raise ValueError(f"row {lineno}: cannot parse {row!r} as numbers") from None
        if gray_f != int(gray_f) or not 0 <= gray_f <= 255:
            raise GrayOutOfRange(f"row {lineno}: gray level {row[0]} is not an integer in 0-255")
        if not np.isfinite(depth) or depth < 0:
            raise NegativeDepth(f"row {lineno}: depth {row[1]} must be finite and >= 0")
        total, count = sums.get(int(gray_f), (0.0, 0))
        sums[int(gray_f)] = (total + depth, count + 1)
    if len(sums) < 2:
        raise TooFewPoints(f"contrast curve needs at least 2 distinct gray levels, got {len(sums)}")
    grays = sorted(sums)
    depths = [sums[g][0] / sums[g][1] for g in grays]
    return ContrastCurve(np.array(grays), np.array(depths), dict(metadata or {}))


@dataclass(frozen=True, eq=False)
class FittedCurve:
    """Monotone non-decreasing gray -> depth function ``D(g)`` on ``[g_min, g_max]``.

    Stored as a cubic Hermite interpolant (knots, values, slopes).
    ``max_residual`` is the largest absolute deviation from the data it was
    fitted to.
    """

    method: str
    knots: np.ndarray
    values: np.ndarray
    slopes: np.ndarray
    max_residual: float = 0.0

    def __post_init__(self):
        for name in ("knots", "values", "slopes"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if len(self.knots) < 2 or np.any(np.diff(self.knots) <= 0):
            raise ValueError("fit knots must be strictly increasing with at least 2 entries")

    @property
    def g_min(self):
        return float(self.knots[0])

    @property
    def g_max(self):
        return float(self.knots[-1])

    def __call__(self, gray):
        """Evaluate ``D`` at real-valued gray levels (clamped to the domain, silently)."""
        out = hermite_eval(self.knots, self.values, self.slopes, gray)
        return float(out) if np.ndim(out) == 0 else out

    def max_step(self):
        """Largest depth increment between consecutive integer gray levels."""
        g = np.arange(np.ceil(self.g_min), np.floor(self.g_max) + 1)
        if len(g) < 2:
            return 0.0
        return float(np.max(np.diff(self(g))))

    def to_dict(self):
        return {
            "method": self.method,
            "knots_gray": [float(v) for v in self.knots],
            "knots_depth_um": [float(v) for v in self.values],
            "slopes_um_per_gray": [float(v) for v in self.slopes],
            "max_residual_um": float(self.max_residual),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            method=d["method"],
            knots=d["knots_gray"],
            values=d["knots_depth_um"],
            slopes=d["slopes_um_per_gray"],
            max_residual=d.get("max_residual_um", 0.0),
        )


def _hermite(method, x, y, data_x, data_y):
    m = pchip_slopes(x, y)
    resid = hermite_eval(x, y, m, data_x) - data_y
    return FittedCurve(method, x, y, m, float(np.max(np.abs(resid))))


def fit_contrast(curve, method="monotone-pchip"):
    """Fit a monotone non-decreasing ``D(g)`` through the contrast curve.

    ``monotone-pchip`` projects the data onto non-decreasing sequences
    (a no-op for monotone data) and interpolates every point with a
    shape-preserving cubic.  ``isotonic+smoothing`` collapses each pooled
    block to a single knot at its mean gray level before interpolating,
    trading exactness for fewer flat plateaus.
    """
    if method not in METHODS:
        raise ValueError(f"unknown fit method {method!r}; expected one of {METHODS}")
    x = curve.gray.astype(float)
    y = curve.depth
    if method == "monotone-pchip":
        return _hermite(method, x, isotonic_regression(y), x, y)

    starts, ends, values, _ = pooled_blocks(y)
    centers = np.array([x[s:e].mean() for s, e in zip(starts, ends)])
    # Keep the data domain: the outer blocks also anchor the end points.
    kx = np.concatenate([[x[0]], centers, [x[-1]]])
    ky = np.concatenate([[values[0]], values, [values[-1]]])
    kx, first = np.unique(kx, return_index=True)
    ky = ky[first]
    return _hermite(method, kx, ky, x, y)


def linear_fit(max_depth, g_min=0, g_max=255):
    """Straight-line calibration from ``(g_min, 0)`` to ``(g_max, max_depth)``."""
    curve = ContrastCurve(np.array([g_min, g_max]), np.array([0.0, float(max_depth)]))
    return fit_contrast(curve)


def gray_to_depth(fit, gray):
    """Forward contrast curve ``D(gray)``; grays outside the fit domain clamp with a warning."""
    g = np.asarray(gray, dtype=float)
    outside = (g < fit.g_min) | (g > fit.g_max)
    if np.any(outside):
        warnings.warn(
            f"{int(np.count_nonzero(outside))} gray value(s) outside the calibrated domain "
            f"[{fit.g_min:g}, {fit.g_max:g}] clamped",
            ClampWarning,
            stacklevel=2,
        )
    return fit(g)


def invert_depth(fit, depth, tol=1e-6):
    """Smallest gray ``g`` in the fit domain with ``D(g) >= depth``, by bisection.

    Bisection continues until the bracket is below ``tol`` gray levels *and*
    cannot shrink further in floating point, so exactly representable
    solutions (e.g. half-integers on a linear fit) are recovered exactly.
    """
    target = np.atleast_1d(np.asarray(depth, dtype=float))
    lo = np.full(target.shape, fit.g_min)
    hi = np.full(target.shape, fit.g_max)
    done = fit(lo) >= target
    hi[done] = lo[done]
    for _ in range(200):
        mid = lo + (hi - lo) / 2
        active = (mid > lo) & (mid < hi)
        if not active.any():
            break
        upper = fit(mid) >= target
        hi = np.where(active & upper, mid, hi)
        lo = np.where(active & ~upper, mid, lo)
    return hi if np.ndim(depth) else float(hi[0])


@dataclass(frozen=True, eq=False)
class DepthToGrayLUT:
    """Depth -> gray mapping: ``LUT(t)`` is the gray that removes ``t * max_depth``.

    ``table`` samples the mapping at ``n`` evenly spaced normalized depths.
    Arbitrary depths are mapped through ``thresholds``, the depths at the
    half-gray boundaries ``D(g + 0.5)``, which is the same round-half-up
    inversion without a second quantization of the depth axis.
    """

    fit: FittedCurve
    max_depth: float
    table: np.ndarray
    thresholds: np.ndarray
    g_min: int
    g_max: int

    @property
    def method(self):
        return self.fit.method

    @property
    def full_scale(self):
        return int(self.table[-1])

    def gray_for_depth(self, depth):
        """Gray level (integer array) for removal depths in um, clamped to ``[0, max_depth]``."""
        d = np.clip(np.asarray(depth, dtype=float), 0.0, self.max_depth)
        return (self.g_min + np.searchsorted(self.thresholds, d, side="right")).astype(np.uint8)

    def __call__(self, t):
        return self.gray_for_depth(np.asarray(t, dtype=float) * self.max_depth)

    def to_json(self):
        doc = {
            "format": LUT_FORMAT,
            "version": 1,
            "method": self.method,
            "max_depth_um": float(self.max_depth),
            "gray_min": self.g_min,
            "gray_max": self.g_max,
            "entries": [int(v) for v in self.table],
            "fit": self.fit.to_dict(),
        }
        return json.dumps(doc, indent=2) + "\n"

    @property
    def identifier(self):
        return hashlib.sha256(self.to_json().encode()).hexdigest()[:12]

    @classmethod
    def from_json(cls, text):
        doc = json.loads(text)
        if doc.get("format") != LUT_FORMAT:
            raise ValueError("not a graylitho LUT document")
        lut = build_lut(FittedCurve.from_dict(doc["fit"]), doc["max_depth_um"], n=len(doc["entries"]))
        if [int(v) for v in lut.table] != list(doc["entries"]):
            raise ValueError("LUT entries do not match the embedded fit")
        return lut


def build_lut(fit, max_depth, n=256):
    """Invert and normalize ``fit`` into an ``n``-entry depth -> gray table.

    Entry ``k`` is the round-half-up of the gray level solving
    ``D(g) = (k / (n - 1)) * max_depth``.
    """
    if not max_depth > 0:
        raise ValueError(f"max_depth must be > 0, got {max_depth}")
    if n < 2:
        raise ValueError("LUT needs at least 2 entries")
    top = fit(fit.g_max)
    if max_depth > top:
        raise DepthNotReachable(
            f"requested max depth {max_depth} um exceeds calibrated depth {top:.6g} um at gray {fit.g_max:g}"
        )
    t = np.linspace(0.0, 1.0, n)
    g = invert_depth(fit, t * max_depth)
    table = round_half_up(g).astype(np.uint8)
    g_min = int(np.ceil(fit.g_min))
    g_max = int(np.floor(fit.g_max))
    thresholds = fit(np.arange(g_min, g_max) + 0.5)
    table.setflags(write=False)
    thresholds.setflags(write=False)
    return DepthToGrayLUT(fit, float(max_depth), table, thresholds, g_min, g_max)
