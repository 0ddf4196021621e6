import json
import subprocess
import sys

import numpy as np
import pytest

from graylitho import __version__
from graylitho.cli import main
from graylitho.config import parse_config
from graylitho.errors import ConfigError
from graylitho.mask import load_field, read_tiff, save_field
from graylitho.mesh_io import Mesh, write_stl
from graylitho.raster import HeightField, WorkingArea

FULL_FIELD_RAMP = """\
[area]
width_um = 960
height_um = 540
px_w = 1920
px_h = 1080

[calibration]
file = cal.csv
max_depth_um = 15

[shape:ramp]
kind = ramp
footprint_w_um = 250
footprint_h_um = 250
origin_x_um = 355
origin_y_um = 145

[simulate]
sigma_um = 1.0

[analysis]
x0_um = 355
y0_um = 270.25
x1_um = 605
y1_um = 270.25
n_samples = 501

[segment:upper]
start_um = 0
end_um = 80

[segment:base]
start_um = 170
end_um = 240

[exclude:tip]
start_um = 245
end_um = 250
reason = profilometer tip

[output]
dir = out
"""


@pytest.fixture
def project(tmp_path):
    (tmp_path / "cal.csv").write_text("gray,depth_um\n0,0\n255,15\n")
    (tmp_path / "ramp.cfg").write_text(FULL_FIELD_RAMP)
    return tmp_path


def test_parse_full_field_config(project):
    cfg = parse_config(FULL_FIELD_RAMP, project)
    assert (cfg.area.px_w, cfg.area.px_h, cfg.area.pitch_x) == (1920, 1080, 0.5)
    assert cfg.calibration_file == project / "cal.csv"
    assert cfg.shapes[0].spec.kind == "ramp" and cfg.shapes[0].origin == (355.0, 145.0)
    assert [s.label for s in cfg.segments] == ["upper", "base"]
    assert cfg.exclusions[0].reason == "profilometer tip"
    assert cfg.scanline.n_samples == 501 and cfg.sigma_um == 1.0


@pytest.mark.parametrize(
    "text, where",
    [
        ("[area]\nwidth_mm = 3\n", "[area] width_mm"),
        ("[area]\npx_w = -4\n", "[area] px_w"),
        ("[calibration]\nmethod = cubic\n", "[calibration] method"),
        ("[simulate]\nsigma_um = abc\n", "[simulate] sigma_um"),
        ("[shape]\nkind = blob\n", "[shape]"),
        ("[bogus]\n", "[bogus]"),
        ("[analysis]\nx0_um = 1\n", "[analysis] y0_um"),
    ],
)
def test_config_errors_name_the_field(text, where):
    with pytest.raises(ConfigError, match=__import__("re").escape(where)):
        parse_config(text)


def test_default_area_is_full_field():
    cfg = parse_config("[shape]\nkind = ramp\n")
    assert (cfg.area.px_w, cfg.area.px_h, cfg.area.width_um, cfg.area.height_um) == (1920, 1080, 960, 540)


def test_calibrate_two_point(project):
    out = project / "lut.json"
    assert main(["calibrate", str(project / "cal.csv"), "--out", str(out), "--max-depth", "15"]) == 0
    doc = json.loads(out.read_text())
    entries = doc["entries"]
    assert len(entries) == 256 and entries[0] == 0 and entries[-1] == 255
    assert all(b >= a for a, b in zip(entries, entries[1:]))


def test_calibrate_errors(project, capsys):
    (project / "bad.csv").write_text("gray,depth_um\n10,1\n")
    assert main(["calibrate", str(project / "bad.csv"), "--out", str(project / "x.json")]) == 1
    assert "at least 2" in capsys.readouterr().err
    assert main(["calibrate", str(project / "missing.csv"), "--out", str(project / "x.json")]) == 2
    assert main(["calibrate", str(project / "cal.csv"), "--out", str(project / "x.json"), "--max-depth", "99"]) == 1


def test_encode_clamp_is_a_warning(project, capsys):
    main(["calibrate", str(project / "cal.csv"), "--out", str(project / "lut.json"), "--max-depth", "15"])
    field = HeightField(WorkingArea(4, 1, 4, 1), [[0.0, 5.0, 16.0, 18.0]], 18)
    save_field(field, project / "deep.csv")
    code = main(["encode", str(project / "deep.csv"), str(project / "lut.json"), "--out", str(project / "m.tif")])
    err = capsys.readouterr().err
    assert code == 0
    assert err.count("ClampWarning") == 1 and "2 pixel" in err
    assert list(read_tiff((project / "m.tif").read_bytes()).pixels[0]) == [0, 85, 255, 255]


def test_encode_pgm(project):
    main(["calibrate", str(project / "cal.csv"), "--out", str(project / "lut.json")])
    save_field(HeightField(WorkingArea(2, 1, 2, 1), [[0.0, 15.0]], 15), project / "f.tif")
    assert main(["encode", str(project / "f.tif"), str(project / "lut.json"), "--out", str(project / "m.pgm")]) == 0
    assert (project / "m.pgm").read_bytes() == b"P5\n2 1\n255\n\x00\xff"


def test_pipeline_on_full_field_ramp(project):
    assert main(["pipeline", str(project / "ramp.cfg")]) == 0
    out = project / "out"
    names = {p.name for p in out.iterdir()}
    assert {"lut.json", "design.tif", "mask.tif", "simulated.tif", "report"} <= names
    mask = read_tiff((out / "mask.tif").read_bytes())
    assert mask.pixels.shape == (1080, 1920) and mask.pitch_x == 0.5
    row = mask.pixels[540, 710:1210].astype(int)  # ramp columns
    assert np.all(np.diff(row) >= 0) and row[-1] > row[0] + 200
    assert mask.pixels[540, :700].max() == 0
    summary = (out / "report" / "summary.txt").read_text()
    assert "segment upper" in summary and "segment base" in summary


def test_pipeline_is_deterministic(project, tmp_path_factory):
    other = tmp_path_factory.mktemp("second")
    assert main(["pipeline", str(project / "ramp.cfg")]) == 0
    assert main(["pipeline", str(project / "ramp.cfg"), "--out", str(other)]) == 0
    first = project / "out"
    for rel in ["lut.json", "design.tif", "mask.tif", "simulated.tif",
                "report/residuals.csv", "report/summary.txt", "report/profile.svg"]:
        assert (first / rel).read_bytes() == (other / rel).read_bytes(), rel


def test_stagewise_commands_match_pipeline(project):
    d = project
    assert main(["calibrate", str(d / "cal.csv"), "--out", str(d / "lut.json"), "--max-depth", "15"]) == 0
    assert main(["generate", str(d / "ramp.cfg"), "--out", str(d / "design.tif")]) == 0
    assert main(["encode", str(d / "design.tif"), str(d / "lut.json"), "--out", str(d / "mask.tif")]) == 0
    assert main(["simulate", str(d / "mask.tif"), str(d / "lut.json"), "--sigma", "1.0",
                 "--out", str(d / "sim.tif")]) == 0
    assert main(["analyze", str(d / "design.tif"), str(d / "sim.tif"), str(d / "ramp.cfg"),
                 "--out", str(d / "rep")]) == 0
    assert main(["pipeline", str(d / "ramp.cfg")]) == 0
    assert (d / "mask.tif").read_bytes() == (d / "out" / "mask.tif").read_bytes()
    assert (d / "sim.tif").read_bytes() == (d / "out" / "simulated.tif").read_bytes()


def test_rasterize_mesh(project):
    # A 10 x 10 um ramp 5 um high, placed by the [mesh] transform.
    tris = [[[0, 0, 0], [10, 0, 5], [10, 10, 5]], [[0, 0, 0], [10, 10, 5], [0, 10, 0]]]
    (project / "ramp.stl").write_bytes(write_stl(Mesh(tris)))
    (project / "mesh.cfg").write_text(
        "[area]\nwidth_um = 20\nheight_um = 20\npx_w = 40\npx_h = 40\n"
        "[mesh]\ntranslate_um = 5, 5, 0\nmax_depth_um = 5\nz_top_um = 5\n"
    )
    assert main(["rasterize", str(project / "ramp.stl"), str(project / "mesh.cfg"),
                 "--out", str(project / "f.csv")]) == 0
    field = load_field(project / "f.csv")
    x, _ = field.area.pixel_centers()
    # Inside the footprint removal = 5 - z = 5 - 0.5 (x - 5).
    np.testing.assert_allclose(field.removal[20, 10:30], 5 - 0.5 * (x[10:30] - 5), atol=1e-9)
    assert np.all(field.removal[:, :10] == 0)


def test_bad_config_exit_code(project, capsys):
    (project / "bad.cfg").write_text("[area]\nwidth_mm = 3\n")
    assert main(["generate", str(project / "bad.cfg"), "--out", str(project / "f.csv")]) == 1
    assert "[area] width_mm" in capsys.readouterr().err


def test_version_and_help_everywhere(capsys):
    for argv in (["--version"], ["calibrate", "--version"], ["pipeline", "--version"]):
        with pytest.raises(SystemExit) as info:
            main(argv)
        assert info.value.code == 0
        assert __version__ in capsys.readouterr().out
    for cmd in ("calibrate", "generate", "rasterize", "encode", "simulate", "analyze", "pipeline"):
        with pytest.raises(SystemExit) as info:
            main([cmd, "--help"])
        assert info.value.code == 0
        assert "usage" in capsys.readouterr().out


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "graylitho.cli", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and __version__ in res.stdout
