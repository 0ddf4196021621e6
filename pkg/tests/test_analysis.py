import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from graylitho.analysis import (
    ComparisonReport,
    Exclusion,
    Profile,
    Segment,
    compare,
    compare_profiles,
    emit_report,
    extract_profile,
    load_profilometer_csv,
    render_svg,
    residuals,
    residuals_csv,
    rms,
)
from graylitho.calibration import build_lut, linear_fit
from graylitho.devsim import BlurSpec, simulate
from graylitho.errors import EmptyRange, GridMismatch, OutOfBounds
from graylitho.mask import encode_mask
from graylitho.raster import HeightField, WorkingArea
from graylitho.shapes import ShapeSpec, generate

from oracles import two_pass_rms

AREA = WorkingArea(50, 20, 100, 40)


def plane(a=0.0, bx=0.0, by=0.0, area=AREA):
    x, y = area.pixel_centers()
    return HeightField(area, a + bx * x[None, :] + by * y[:, None], 50)


def test_constant_field_profile():
    p = extract_profile(plane(3.0), (1, 1), (40, 15), 17)
    assert np.all(p.depth == 3.0)
    assert p.s[0] == 0 and abs(p.s[-1] - math.hypot(39, 14)) <= 1e-12


def test_ramp_profile_is_linear():
    field = plane(0.0, 0.2)
    p = extract_profile(field, (0.25, 10.25), (40.25, 10.25), 81)
    np.testing.assert_allclose(p.depth, 0.2 * (0.25 + p.s), atol=1e-9)
    assert abs(p.depth[40] - (p.depth[0] + p.depth[-1]) / 2) <= 1e-9


def test_diagonal_scan_slope_is_projected():
    field = plane(1.0, 0.2)
    angle = math.radians(30)
    p0 = (5.0, 5.0)
    p1 = (5.0 + 20 * math.cos(angle), 5.0 + 20 * math.sin(angle))
    p = extract_profile(field, p0, p1, 41)
    slope = np.polyfit(p.s, p.depth, 1)[0]
    assert abs(slope - 0.2 * math.cos(angle)) <= 1e-9


def test_profile_out_of_bounds():
    with pytest.raises(OutOfBounds):
        extract_profile(plane(), (0, 0), (60, 0), 5)
    with pytest.raises(ValueError):
        extract_profile(plane(), (0, 0), (1, 0), 1)


def test_residual_examples():
    s = np.linspace(0, 10, 11)
    exp = Profile(s, s**2)
    assert np.all(residuals(exp, exp).residual == 0)
    shifted = Profile(s, s**2 + 0.3, "measured")
    np.testing.assert_allclose(residuals(shifted, exp).residual, -0.3, atol=1e-12)


def test_dense_observed_is_resampled():
    s = np.linspace(0, 10, 11)
    exp = Profile(s, np.sin(s))
    # Piecewise linear observed profile sampled at twice the density.
    knots = np.array([0.0, 2.5, 6.0, 10.0])
    vals = np.array([0.0, 1.0, -0.5, 0.7])
    dense = np.linspace(0, 10, 21)
    obs = Profile(dense, np.interp(dense, knots, vals), "measured")
    direct = np.sin(s) - np.interp(s, knots, vals)
    np.testing.assert_allclose(residuals(obs, exp).residual, direct, atol=1e-9)


def test_residual_grid_mismatch():
    exp = Profile(np.linspace(0, 10, 11), np.zeros(11))
    with pytest.raises(GridMismatch):
        residuals(Profile(np.linspace(1, 10, 10), np.zeros(10)), exp)


def test_rms_examples():
    assert rms([1, 2, 2]) == pytest.approx(math.sqrt(3), abs=1e-15)
    assert abs(rms([1, 2, 2]) - 1.7320508) <= 1e-7
    for c in (0.3, -2.7, 1e-200, 5e200, 0.1 + 0.2):
        assert rms(np.full(37, c)) == abs(c)
    with pytest.raises(EmptyRange):
        rms([1.0, 2.0], s=[0, 1], s_range=(5, 6))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(1e-6, 1e6))
def test_rms_matches_two_pass_oracle(seed, scale):
    r = np.random.default_rng(seed).normal(0, scale, 1000)
    assert abs(rms(r) - two_pass_rms(r)) <= 1e-12 * two_pass_rms(r)


@given(st.lists(st.floats(-100, 100), min_size=1, max_size=50), st.floats(0, 1e3))
def test_rms_is_scale_homogeneous(r, k):
    assert rms(np.asarray(r) * k) == pytest.approx(k * rms(r), rel=1e-12, abs=1e-300)


def lattice_profiles(rng, n=200):
    s = np.arange(n) * 0.5
    depth = rng.integers(0, 15 * 2**20, n) / 2**20
    return s, depth


def test_offset_identity_is_exact():
    rng = np.random.default_rng(11)
    s, depth = lattice_profiles(rng)
    exp = Profile(s, depth)
    for c in (0.25, -1.375, 0.3 - (0.3 % 2**-20)):
        obs = Profile(s, depth + c, "measured")
        report = compare_profiles(exp, obs, [("a", 0, 40), ("b", 50, 99.5)])
        assert report.overall_rms == abs(c)
        assert all(seg.rms == abs(c) for seg in report.segments)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_exclusions_are_inert(seed):
    rng = np.random.default_rng(seed)
    s = np.sort(rng.choice(np.arange(1, 399) * 0.25, 118, replace=False))
    s = np.concatenate([[0.0], s, [99.75]])
    exp_d = rng.uniform(0, 15, len(s))
    obs_d = exp_d + rng.normal(0, 0.5, len(s))
    ex = (40.0, 60.0)
    outside = (s < ex[0]) | (s > ex[1])
    segments = [("low", 0.0, 30.0), ("mid", 30.0, 70.0), ("high", 70.0, s[-1])]
    exclusions = [Exclusion(*ex, "tip artifact")]
    base = compare_profiles(Profile(s[outside], exp_d[outside]), Profile(s[outside], obs_d[outside], "measured"),
                            [(label, a, min(b, s[outside][-1])) for label, a, b in segments], exclusions)
    full = compare_profiles(Profile(s, exp_d), Profile(s, obs_d, "measured"),
                            [(label, a, min(b, s[outside][-1])) for label, a, b in segments], exclusions)
    assert full.overall_rms == base.overall_rms
    assert [x.rms for x in full.segments] == [x.rms for x in base.segments]


def test_union_of_equal_segments_is_bracketed():
    rng = np.random.default_rng(2)
    s = np.arange(300) * 0.5
    exp = Profile(s, rng.uniform(0, 5, 300))
    obs = Profile(s, exp.depth + rng.normal(0, 1, 300), "measured")
    segs = [("a", 0, 49.5), ("b", 50, 99.5), ("c", 100, 149.5)]
    report = compare_profiles(exp, obs, segs)
    values = [x.rms for x in report.segments]
    assert min(values) <= report.overall_rms <= max(values)


def test_segment_outside_profile_is_rejected():
    exp = Profile(np.arange(10.0), np.zeros(10))
    with pytest.raises(ValueError):
        compare_profiles(exp, exp, [("late", 5, 12)])


def test_identical_fields_give_zero_rms():
    field = generate(ShapeSpec("ramp"), WorkingArea(250, 250, 500, 500))
    report = compare(field, field, ((0, 125), (250, 125), 501), [("x", 10, 20)])
    assert report.overall_rms == 0 and report.segments[0].rms == 0


def test_round_trip_rms_within_gray_step():
    area = WorkingArea(250, 250, 500, 500)
    fit = linear_fit(15)
    design = generate(ShapeSpec("ramp"), area)
    observed = simulate(encode_mask(design, build_lut(fit, 15)), fit, BlurSpec(0.0))
    report = compare(design, observed, ((0, 125), (250, 125), 1001))
    assert report.overall_rms <= fit.max_step()


def test_blur_hurts_the_edge_more_than_the_interior():
    area = WorkingArea(300, 40, 600, 80)
    fit = linear_fit(15)
    design = generate(ShapeSpec("ramp", footprint=(250, 40)), area, origin=(25, 0))
    observed = simulate(encode_mask(design, build_lut(fit, 15)), fit, BlurSpec(2.0))
    # Scan from 25 um before the footprint to its far (deep) edge and past it.
    scan = ((0, 20.25), (300, 20.25), 1201)
    report = compare(design, observed, scan, [("plateau", 100, 200), ("base", 265, 285)])
    plateau, base = (x.rms for x in report.segments)
    assert base > plateau


def synthetic_report():
    s = np.array([0.0, 0.5, 1.0, 1.5])
    exp = Profile(s, [0.0, 1.0, 2.0, 3.0])
    obs = Profile(s, [0.0, 1.25, 1.5, 3.0], "measured")
    return compare_profiles(exp, obs, [("left", 0, 0.5), ("right", 1.0, 1.5)], [Exclusion(1.4, 1.6, "tip")])


def test_residuals_csv_is_golden():
    expected = (
        "s_um,expected_um,observed_um,residual_um\n"
        "0,0,0,0\n"
        "0.5,1,1.25,-0.25\n"
        "1,2,1.5,0.5\n"
        "1.5,3,3,0\n"
    )
    assert residuals_csv(synthetic_report()) == expected
    assert residuals_csv(synthetic_report()) == residuals_csv(synthetic_report())


def test_emit_report_files(tmp_path):
    report = synthetic_report()
    paths = emit_report(report, tmp_path / "out")
    assert sorted(p.name for p in paths) == ["profile.svg", "residuals.csv", "summary.txt"]
    summary = (tmp_path / "out" / "summary.txt").read_text()
    assert "overall RMS" in summary
    assert "segment left" in summary and "segment right" in summary
    assert "excluded [1.4, 1.6] um (tip)" in summary
    # Right segment keeps only s = 1.0 (1.5 is excluded): RMS 0.5.
    assert report.segments[1].rms == 0.5
    assert report.segments[0].rms == pytest.approx(math.sqrt(0.0625 / 2), abs=1e-15)


def test_zero_residual_svg_has_three_polylines():
    s = np.arange(5.0)
    exp = Profile(s, s)
    report = compare_profiles(exp, exp)
    svg = render_svg(report)
    assert svg.count("<polyline") == 3
    for name in ("expected", "observed", "residual"):
        assert f'id="{name}"' in svg
    assert "(µm)" in svg
    lines = residuals_csv(report).splitlines()[1:]
    assert all(line.split(",")[3] == "0" for line in lines)


def test_report_type():
    assert isinstance(synthetic_report(), ComparisonReport)
    assert isinstance(synthetic_report().segments[0], Segment)


def test_profilometer_csv_import():
    text = "Dektak export\nx_um,z_um\n100,0\n100.5,-1.5\n101,-3\n"
    p = load_profilometer_csv(text, sign=-1.0, offset_um=0.5)
    np.testing.assert_array_equal(p.s, [0, 0.5, 1.0])
    np.testing.assert_array_equal(p.depth, [0.5, 2.0, 3.5])
    assert p.source == "measured"
