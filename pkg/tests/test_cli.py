import json

import numpy as np
import pytest

from lapmap.cli import (
    ConfigError,
    main,
    parse_anchors_file,
    parse_config_file,
    parse_gamut,
    parse_groups,
)
from lapmap.images import load_image, load_lmch, save_image
from lapmap.synthetic import shrunken_chroma_triangle

from conftest import random_image

FAST = ["--max-iters", "8", "--restarts", "1", "--max-side", "16"]


def _write_png(tmp_path, name="in.png", size=8, channels=3, seed=0):
    p = tmp_path / name
    save_image(random_image(size, size, channels, seed=seed), p)
    return p


def _gamut_arg(scale=0.6):
    return ",".join(f"{v:.4f}" for v in shrunken_chroma_triangle(scale).ravel())


class TestParsers:
    def test_parse_gamut(self):
        poly = parse_gamut("0,0, 1,0, 0.5,1")
        np.testing.assert_allclose(poly, [[0, 0], [1, 0], [0.5, 1]])

    def test_parse_gamut_odd_count(self):
        with pytest.raises(ConfigError):
            parse_gamut("0,0,1,0,0.5")

    def test_parse_gamut_too_few(self):
        with pytest.raises(ConfigError):
            parse_gamut("0,0,1,1")

    def test_parse_gamut_not_numbers(self):
        with pytest.raises(ConfigError):
            parse_gamut("a,b,c,d,e,f")

    def test_parse_groups(self):
        assert parse_groups("0,1,2;3") == ((0, 1, 2), (3,))
        assert parse_groups("2") == ((2,),)

    def test_parse_groups_bad(self):
        with pytest.raises(ConfigError):
            parse_groups("0,x")
        with pytest.raises(ConfigError):
            parse_groups(";;")

    def test_parse_anchors(self, tmp_path):
        p = tmp_path / "anchors.txt"
        p.write_text(
            "# fixed points\n"
            "0 0 0 -> 0\n"
            "1 1 1 -> 1  # white\n"
        )
        xc, yc = parse_anchors_file(p)
        np.testing.assert_array_equal(xc, [[0, 0, 0], [1, 1, 1]])
        np.testing.assert_array_equal(yc, [[0], [1]])

    def test_parse_anchors_missing_arrow(self, tmp_path):
        p = tmp_path / "anchors.txt"
        p.write_text("0 0 0 0\n")
        with pytest.raises(ConfigError):
            parse_anchors_file(p)

    def test_parse_anchors_inconsistent(self, tmp_path):
        p = tmp_path / "anchors.txt"
        p.write_text("0 0 0 -> 0\n1 1 -> 1\n")
        with pytest.raises(ConfigError):
            parse_anchors_file(p)

    def test_parse_anchors_empty(self, tmp_path):
        p = tmp_path / "anchors.txt"
        p.write_text("# nothing\n")
        with pytest.raises(ConfigError):
            parse_anchors_file(p)

    def test_parse_config(self, tmp_path):
        p = tmp_path / "run.cfg"
        p.write_text("max-iters = 12\nseed=4  # comment\n\nfamily = linear\n")
        assert parse_config_file(p) == {
            "max_iters": "12", "seed": "4", "family": "linear",
        }

    def test_parse_config_bad_line(self, tmp_path):
        p = tmp_path / "run.cfg"
        p.write_text("max-iters 12\n")
        with pytest.raises(ConfigError):
            parse_config_file(p)


class TestDecolorizeCommand:
    def test_end_to_end(self, tmp_path, capsys):
        src = _write_png(tmp_path)
        out = tmp_path / "gray.png"
        code = main(["decolorize", str(src), "-o", str(out)] + FAST)
        assert code == 0
        loaded = load_image(out)
        assert loaded.channels == 1
        assert (loaded.height, loaded.width) == (8, 8)
        assert "decolorize" in capsys.readouterr().out

    def test_default_output_name(self, tmp_path):
        src = _write_png(tmp_path, "photo.png")
        assert main(["decolorize", str(src)] + FAST) == 0
        assert (tmp_path / "photo_gray.png").exists()

    def test_report_schema(self, tmp_path):
        src = _write_png(tmp_path)
        report = tmp_path / "run.json"
        code = main(
            ["decolorize", str(src), "-o", str(tmp_path / "o.png"),
             "--report", str(report)] + FAST
        )
        assert code == 0
        payload = json.loads(report.read_text())
        assert set(payload) == {
            "config", "metrics", "timings", "versions", "theta_star",
            "cost_trace",
        }
        assert payload["config"]["command"] == "decolorize"
        assert payload["config"]["max_iters"] == 8
        assert payload["theta_star"]["n"] == 7
        assert len(payload["theta_star"]["values"].split()) == 7
        assert payload["cost_trace"]["status"] in (
            "converged", "max_iters", "step_collapse",
        )
        assert "rwms_mean" in payload["metrics"]
        assert "numpy" in payload["versions"]

    def test_report_reproducible_modulo_timings(self, tmp_path):
        src = _write_png(tmp_path)
        r1, r2 = tmp_path / "a.json", tmp_path / "b.json"
        args = ["decolorize", str(src), "-o", str(tmp_path / "o.png"),
                "--seed", "5"] + FAST
        assert main(args + ["--report", str(r1)]) == 0
        assert main(args + ["--report", str(r2)]) == 0
        p1 = json.loads(r1.read_text())
        p2 = json.loads(r2.read_text())
        # only the timings and the report's own path may differ
        del p1["timings"], p2["timings"]
        del p1["config"]["report"], p2["config"]["report"]
        assert p1 == p2

    def test_config_file_and_flag_override(self, tmp_path):
        src = _write_png(tmp_path)
        cfg = tmp_path / "run.cfg"
        cfg.write_text("max-iters = 5\nrestarts = 1\nseed = 9\nmax-side = 16\n")
        report = tmp_path / "r.json"
        code = main(
            ["decolorize", str(src), "-o", str(tmp_path / "o.png"),
             "--config", str(cfg), "--report", str(report),
             "--max-iters", "3"]
        )
        assert code == 0
        payload = json.loads(report.read_text())
        assert payload["config"]["max_iters"] == 3  # flag wins
        assert payload["config"]["seed"] == 9  # config applies
        assert payload["config"]["restarts"] == 1

    def test_unknown_config_key(self, tmp_path):
        src = _write_png(tmp_path)
        cfg = tmp_path / "run.cfg"
        cfg.write_text("warp-factor = 9\n")
        assert main(["decolorize", str(src), "--config", str(cfg)]) == 1

    def test_anchors_flag(self, tmp_path):
        src = _write_png(tmp_path)
        anchors = tmp_path / "a.txt"
        anchors.write_text("0 0 0 -> 0\n1 1 1 -> 1\n")
        code = main(
            ["decolorize", str(src), "-o", str(tmp_path / "o.png"),
             "--anchors", str(anchors), "--mu3", "5.0"] + FAST
        )
        assert code == 0


class TestErrorExitCodes:
    def test_missing_input_is_io_error(self, tmp_path):
        assert main(["decolorize", str(tmp_path / "none.png")]) == 2

    def test_corrupt_image_is_io_error(self, tmp_path):
        bad = tmp_path / "bad.png"
        bad.write_bytes(b"\x89PNG\r\n\x1a\nnot really a png")
        assert main(["decolorize", str(bad)]) == 2

    def test_wrong_channel_count_is_config_error(self, tmp_path):
        gray = _write_png(tmp_path, "g.pgm", channels=1)
        assert main(["decolorize", str(gray)] + FAST) == 1

    def test_gamut_missing_flag(self, tmp_path):
        src = _write_png(tmp_path)
        assert main(["gamutmap", str(src)] + FAST) == 1

    def test_gamut_bad_polygon(self, tmp_path):
        src = _write_png(tmp_path)
        code = main(
            ["gamutmap", str(src), "--gamut", "0,0,1,1,2,2"] + FAST
        )
        assert code == 1  # collinear polygon

    def test_missing_anchors_file(self, tmp_path):
        src = _write_png(tmp_path)
        assert main(
            ["decolorize", str(src), "--anchors", str(tmp_path / "no.txt")]
        ) == 2

    def test_no_arguments(self, capsys):
        assert main([]) == 1
        capsys.readouterr()

    def test_help_returns_zero(self, capsys):
        assert main(["--help"]) == 0
        capsys.readouterr()


class TestOtherCommands:
    def test_daltonize(self, tmp_path):
        src = _write_png(tmp_path)
        out = tmp_path / "d.png"
        code = main(
            ["daltonize", str(src), "-o", str(out), "--cvd", "tritan"] + FAST
        )
        assert code == 0
        assert load_image(out).channels == 3

    def test_gamutmap_lmch_output(self, tmp_path):
        src = _write_png(tmp_path)
        out = tmp_path / "g.lmch"
        code = main(
            ["gamutmap", str(src), "-o", str(out), "--gamut", _gamut_arg()]
            + FAST
        )
        assert code == 0
        loaded = load_lmch(out)
        assert loaded.channels == 2

    def test_fuse_multiple_inputs(self, tmp_path):
        rgb = _write_png(tmp_path, "rgb.png", channels=3)
        extra = _write_png(tmp_path, "nir.pgm", channels=1, seed=5)
        out = tmp_path / "f.png"
        code = main(
            ["fuse", str(rgb), str(extra), "-o", str(out),
             "--groups", "0,1,2;3"] + FAST
        )
        assert code == 0
        assert load_image(out).channels == 3

    def test_fuse_size_mismatch(self, tmp_path):
        a = _write_png(tmp_path, "a.png", size=8)
        b = _write_png(tmp_path, "b.png", size=6)
        assert main(["fuse", str(a), str(b)] + FAST) == 1

    def test_fuse_bad_groups(self, tmp_path):
        a = _write_png(tmp_path, "a.png")
        b = _write_png(tmp_path, "b.pgm", channels=1)
        assert main(
            ["fuse", str(a), str(b), "--groups", "0,oops"] + FAST
        ) == 1

    def test_eval(self, tmp_path, capsys):
        src = _write_png(tmp_path, "src.png", seed=0)
        dst = _write_png(tmp_path, "dst.pgm", channels=1, seed=1)
        report = tmp_path / "eval.json"
        code = main(
            ["eval", "--src", str(src), "--dst", str(dst),
             "--report", str(report)]
        )
        assert code == 0
        assert "rwms_mean" in capsys.readouterr().out
        payload = json.loads(report.read_text())
        assert "metrics" in payload
        assert "theta_star" not in payload

    def test_eval_missing_file(self, tmp_path):
        src = _write_png(tmp_path)
        assert main(
            ["eval", "--src", str(src), "--dst", str(tmp_path / "no.png")]
        ) == 2

    def test_eval_size_mismatch_is_config_error(self, tmp_path):
        a = _write_png(tmp_path, "a.png", size=8)
        b = _write_png(tmp_path, "b.png", size=6)
        assert main(["eval", "--src", str(a), "--dst", str(b)]) == 1
