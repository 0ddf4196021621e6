"""Forward development model: mask -> dose -> (optional lateral blur) -> removal depth.

Dose is linear in gray (mirror duty cycle).  Lateral spread of the exposure
is modelled as an isotropic Gaussian on the dose, applied before the
contrast curve, so all nonlinearity stays in the calibration.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .calibration import gray_to_depth
from .errors import ClampWarning
from .raster import HeightField, WorkingArea

__all__ = [
    "DoseField",
    "BlurSpec",
    "gaussian_kernel",
    "mask_to_dose",
    "blur_dose",
    "develop",
    "simulate",
]


@dataclass(frozen=True, eq=False)
class DoseField:
    area: WorkingArea
    dose: np.ndarray

    def __post_init__(self):
        d = np.array(self.dose, dtype=float)
        if d.shape != self.area.shape:
            raise ValueError(f"dose grid has shape {d.shape}, area expects {self.area.shape}")
        if not np.all(np.isfinite(d)) or (d.size and d.min() < 0):
            raise ValueError("dose must be finite and non-negative")
        d.setflags(write=False)
        object.__setattr__(self, "dose", d)


@dataclass(frozen=True)
class BlurSpec:
    """Gaussian lateral spread: standard deviation ``sigma_um``, kernel cut at ``truncation * sigma``."""

    sigma_um: float = 0.0
    truncation: float = 4.0
    boundary: str = "clamp-to-edge"

    def __post_init__(self):
        if not (np.isfinite(self.sigma_um) and self.sigma_um >= 0):
            raise ValueError(f"sigma_um must be >= 0, got {self.sigma_um}")
        if not self.truncation > 0:
            raise ValueError(f"truncation must be > 0, got {self.truncation}")
        if self.boundary != "clamp-to-edge":
            raise ValueError(f"unsupported boundary {self.boundary!r}")


def gaussian_kernel(sigma_um, pitch_um, truncation=4.0):
    """Normalized 1-D Gaussian sampled at multiples of the pixel pitch.

    Taps extend to ``floor(truncation * sigma / pitch)`` pixels each side.
    """
    if sigma_um == 0:
        return np.ones(1)
    radius = int(np.floor(truncation * sigma_um / pitch_um))
    x = np.arange(-radius, radius + 1) * pitch_um
    k = np.exp(-0.5 * (x / sigma_um) ** 2)
    return k / k.sum()


def mask_to_dose(mask):
    """Normalized dose ``gray / 255`` per pixel."""
    return DoseField(mask.area, mask.pixels.astype(float) / 255.0)


def _convolve_axis(a, kernel, axis):
    r = len(kernel) // 2
    if r == 0:
        return a.copy()
    pad = [(0, 0), (0, 0)]
    pad[axis] = (r, r)
    padded = np.pad(a, pad, mode="edge")
    n = a.shape[axis]
    out = np.zeros_like(a)
    # Fixed tap order keeps results bit-identical however rows are split.
    for k, w in enumerate(kernel):
        out += w * np.take(padded, np.arange(k, k + n), axis=axis)
    return out


def blur_dose(dose, blur):
    """Separable Gaussian blur with clamp-to-edge boundaries; sigma 0 is the identity."""
    if blur.sigma_um == 0:
        return dose
    a = dose.dose
    kx = gaussian_kernel(blur.sigma_um, dose.area.pitch_x, blur.truncation)
    ky = gaussian_kernel(blur.sigma_um, dose.area.pitch_y, blur.truncation)
    out = _convolve_axis(a, kx, axis=1)
    out = _convolve_axis(out, ky, axis=0)
    # Weights are a convex combination; clip away rounding overshoot (e.g. 1 + 1 ulp).
    if a.size:
        np.clip(out, a.min(), a.max(), out=out)
    return DoseField(dose.area, out)


def develop(dose, fit):
    """Removal depth ``D(dose * 255)`` using the continuous fitted curve."""
    d = dose.dose
    over = int(np.count_nonzero(d > 1.0))
    if over:
        warnings.warn(f"{over} pixel(s) with dose above 1 clamped", ClampWarning, stacklevel=2)
    gray = np.minimum(d, 1.0) * 255.0
    removal = gray_to_depth(fit, gray)
    max_depth = max(fit(fit.g_max), float(removal.max(initial=0.0)))
    if max_depth <= 0:
        max_depth = 1.0
    return HeightField(dose.area, removal, max_depth)


def simulate(mask, fit, blur=BlurSpec()):
    """Predict the developed relief of ``mask``: develop(blur(dose(mask)))."""
    return develop(blur_dose(mask_to_dose(mask), blur), fit)
