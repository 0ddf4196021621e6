"""Calibrated grayscale lithography masks from 3D microstructure designs.

Pipeline: a design (procedural shape or mesh) becomes a removal-depth
:class:`HeightField`; a contrast-curve calibration turns depth into gray
through a :class:`DepthToGrayLUT`; the resulting :class:`GrayMask` is written
as an 8-bit TIFF and can be checked with the development simulator and the
residual/RMS analysis.
"""

__version__ = "0.1.0"

from .analysis import compare, compare_profiles, emit_report, extract_profile, residuals, rms
from .calibration import (
    ContrastCurve,
    DepthToGrayLUT,
    FittedCurve,
    build_lut,
    fit_contrast,
    gray_to_depth,
    linear_fit,
    load_calibration,
)
from .devsim import BlurSpec, DoseField, blur_dose, develop, mask_to_dose, simulate
from .errors import ClampWarning
from .mask import GrayMask, encode_mask, read_tiff, write_pgm, write_tiff
from .mesh_io import Mesh, parse_obj, parse_stl, transform_mesh, validate_mesh
from .raster import ElevationField, HeightField, WorkingArea, elevation_to_removal, rasterize_top_view
from .shapes import ShapeSpec, combine, generate, invert_relief
