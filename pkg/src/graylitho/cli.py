"""Command-line front end: calibrate, generate/rasterize, encode, simulate, analyze.

Exit status is 0 on success, 1 on invalid input (the message names the
offending value) and 2 on I/O failure.  Warnings such as clamped depths go
to stderr and never change the exit status.
"""

import argparse
import json
import sys
import warnings
from pathlib import Path

from . import __version__
from .analysis import compare, emit_report
from .calibration import METHODS, DepthToGrayLUT, FittedCurve, build_lut, fit_contrast, load_calibration
from .config import load_config
from .devsim import BlurSpec, simulate
from .errors import ConfigError, GrayLithoError
from .mask import encode_mask, load_field, read_tiff, save_field, write_pgm, write_tiff
from .mesh_io import load_mesh, transform_mesh, validate_mesh
from .raster import elevation_to_removal, rasterize_top_view
from .shapes import combine, generate

__all__ = ["main", "build_parser"]


def _fit_and_lut(csv_path, method, max_depth):
    curve = load_calibration(Path(csv_path))
    fit = fit_contrast(curve, method)
    if max_depth is None:
        max_depth = fit(fit.g_max)
    return fit, build_lut(fit, max_depth)


def _load_fit(path):
    doc = json.loads(Path(path).read_text())
    if "fit" in doc:
        doc = doc["fit"]
    try:
        return FittedCurve.from_dict(doc)
    except KeyError as exc:
        raise GrayLithoError(f"{path}: not a LUT or fit document (missing {exc.args[0]!r})") from None


def _design_from_config(cfg, mesh_path=None):
    if mesh_path is not None or (cfg.mesh is not None and cfg.mesh.path is not None):
        placement = cfg.mesh
        path = mesh_path if mesh_path is not None else placement.path
        mesh = load_mesh(path)
        if placement is not None:
            mesh = transform_mesh(mesh, placement.scale, placement.translate)
        report = validate_mesh(mesh)
        if report.triangle_count == 0:
            raise GrayLithoError(f"{path}: mesh has no triangles")
        if report.degenerate_count:
            warnings.warn(f"{path}: {report.degenerate_count} degenerate triangle(s)", stacklevel=2)
        z_top = placement.z_top if placement and placement.z_top is not None else report.bbox_max[2]
        max_depth = (placement.max_depth if placement else None) or cfg.max_depth
        if max_depth is None:
            raise ConfigError("[mesh] max_depth_um: required (or set [calibration] max_depth_um)")
        background = placement.background_removal if placement else 0.0
        return elevation_to_removal(rasterize_top_view(mesh, cfg.area), z_top, max_depth, background)
    if not cfg.shapes:
        raise ConfigError("config defines neither [shape] sections nor a [mesh] path")
    return combine(generate(p.spec, cfg.area, p.origin) for p in cfg.shapes)


def cmd_calibrate(args):
    fit, lut = _fit_and_lut(args.csv, args.method, args.max_depth)
    Path(args.out).write_text(lut.to_json())
    print(f"wrote {args.out}: {len(lut.table)} entries, max depth {lut.max_depth:g} um, "
          f"fit residual {fit.max_residual:.3g} um")


def cmd_generate(args):
    cfg = load_config(args.config)
    field = _design_from_config(cfg)
    save_field(field, args.out)
    print(f"wrote {args.out}: {field.area.px_w}x{field.area.px_h} px, max removal {field.removal.max():g} um")


def cmd_rasterize(args):
    cfg = load_config(args.config)
    field = _design_from_config(cfg, mesh_path=args.mesh)
    save_field(field, args.out)
    print(f"wrote {args.out}: {field.area.px_w}x{field.area.px_h} px, max removal {field.removal.max():g} um")


def _write_mask(mask, out):
    out = Path(out)
    out.write_bytes(write_pgm(mask) if out.suffix.lower() == ".pgm" else write_tiff(mask))


def cmd_encode(args):
    field = load_field(args.field)
    lut = DepthToGrayLUT.from_json(Path(args.lut).read_text())
    mask = encode_mask(field, lut)
    _write_mask(mask, args.out)
    print(f"wrote {args.out}: gray {int(mask.pixels.min())}-{int(mask.pixels.max())}")


def cmd_simulate(args):
    mask = read_tiff(Path(args.mask).read_bytes())
    fit = _load_fit(args.lut)
    result = simulate(mask, fit, BlurSpec(args.sigma, args.truncation))
    save_field(result, args.out)
    print(f"wrote {args.out}: max removal {result.removal.max():g} um")


def _analyze(cfg, design, observed, out):
    if cfg.scanline is None:
        raise ConfigError("[analysis]: section with x0_um, y0_um, x1_um, y1_um is required")
    report = compare(design, observed, cfg.scanline.as_tuple(), cfg.segments, cfg.exclusions)
    emit_report(report, out)
    return report


def cmd_analyze(args):
    cfg = load_config(args.config)
    report = _analyze(cfg, load_field(args.design), load_field(args.observed), args.out)
    print(f"wrote report to {args.out}: overall RMS {report.overall_rms:.4f} um")


def cmd_pipeline(args):
    cfg = load_config(args.config)
    out = Path(args.out) if args.out else cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    if cfg.calibration_file is None:
        raise ConfigError("[calibration] file: required for the pipeline")
    fit, lut = _fit_and_lut(cfg.calibration_file, cfg.method, cfg.max_depth)
    (out / "lut.json").write_text(lut.to_json())

    design = _design_from_config(cfg)
    save_field(design, out / "design.tif")
    mask = encode_mask(design, lut)
    (out / "mask.tif").write_bytes(write_tiff(mask))

    simulated = simulate(read_tiff((out / "mask.tif").read_bytes()), fit, BlurSpec(cfg.sigma_um, cfg.truncation))
    save_field(simulated, out / "simulated.tif")
    print(f"wrote lut.json, design.tif, mask.tif, simulated.tif to {out}")
    if cfg.scanline is not None:
        report = _analyze(cfg, design, simulated, out / "report")
        print(f"wrote report to {out / 'report'}: overall RMS {report.overall_rms:.4f} um")


def build_parser():
    parser = argparse.ArgumentParser(prog="graylitho", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_, description=help_)
        p.add_argument("--version", action="version", version=f"graylitho {__version__}")
        p.set_defaults(func=func)
        return p

    p = add("calibrate", cmd_calibrate, "fit a contrast-curve CSV and write the depth->gray LUT")
    p.add_argument("csv")
    p.add_argument("--out", required=True)
    p.add_argument("--method", choices=METHODS, default="monotone-pchip")
    p.add_argument("--max-depth", type=float, help="calibrated depth range in um (default: full curve)")

    p = add("generate", cmd_generate, "build the design height field from a config")
    p.add_argument("config")
    p.add_argument("--out", required=True, help="field file (.csv or .tif)")

    p = add("rasterize", cmd_rasterize, "rasterize a mesh (STL/OBJ) into a height field")
    p.add_argument("mesh")
    p.add_argument("config")
    p.add_argument("--out", required=True, help="field file (.csv or .tif)")

    p = add("encode", cmd_encode, "encode a height field into an 8-bit mask")
    p.add_argument("field")
    p.add_argument("lut")
    p.add_argument("--out", required=True, help="mask file (.tif or .pgm)")

    p = add("simulate", cmd_simulate, "simulate development of a mask")
    p.add_argument("mask")
    p.add_argument("lut", help="LUT or fit JSON")
    p.add_argument("--sigma", type=float, default=0.0, help="lateral blur sigma in um")
    p.add_argument("--truncation", type=float, default=4.0, help="kernel radius in sigmas")
    p.add_argument("--out", required=True, help="field file (.csv or .tif)")

    p = add("analyze", cmd_analyze, "compare design and observed fields along the configured scan line")
    p.add_argument("design")
    p.add_argument("observed")
    p.add_argument("config")
    p.add_argument("--out", required=True, help="report directory")

    p = add("pipeline", cmd_pipeline, "run every stage from a project config")
    p.add_argument("config")
    p.add_argument("--out", help="output directory (default: [output] dir)")
    return parser


def _show_warning(message, category, filename, lineno, file=None, line=None):
    print(f"warning: {category.__name__}: {message}", file=sys.stderr)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    previous = warnings.showwarning
    warnings.showwarning = _show_warning
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("always")
            args.func(args)
    except (GrayLithoError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    finally:
        warnings.showwarning = previous
    return 0


if __name__ == "__main__":
    sys.exit(main())
