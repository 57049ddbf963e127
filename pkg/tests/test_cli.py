"""End-to-end command-line tests driven through ``main`` in-process."""

import json

import numpy as np
import pytest

from noisykmeans.cli import grid_json_text, main, parse_grid_json


def _lines(path):
    return path.read_text().splitlines()


@pytest.fixture
def points_file(tmp_path):
    rng = np.random.default_rng(21)
    pts = np.concatenate(
        [rng.normal(size=(40, 2)) * 0.4, rng.normal(size=(40, 2)) * 0.4 + [4.0, 0.0]]
    )
    path = tmp_path / "points.csv"
    np.savetxt(path, pts, delimiter=",")
    return path


class TestExperimentCommand:
    def _run(self, tmp_path, name, extra=()):
        out = tmp_path / name
        code = main(
            [
                "experiment", "--family", "mod1", "--u", "1", "--n", "40",
                "--R", "3", "--seed", "2", "--bandwidth", "0.7,0.7",
                "--grid", "32", "--out", str(out), *extra,
            ]
        )
        return code, out

    def test_csv_shape(self, tmp_path):
        code, out = self._run(tmp_path, "exp.csv")
        assert code == 0
        lines = _lines(out)
        # header + 2R risk rows + blank + summary header + 2 summary rows
        assert len(lines) == 1 + 6 + 1 + 1 + 2
        assert lines[0] == "replication,algorithm,u,risk,failed"
        assert lines[1].startswith("0,lloyd,1,")
        assert lines[4].startswith("0,noisy,1,")
        assert lines[8] == "u,algorithm,mean,sd,ci_lo,ci_hi,failures"
        for row in lines[1:7]:
            fields = row.split(",")
            assert len(fields) == 5
            assert fields[4] in ("0", "1")

    def test_rerun_byte_identical(self, tmp_path):
        _, first = self._run(tmp_path, "a.csv")
        _, second = self._run(tmp_path, "b.csv")
        assert first.read_bytes() == second.read_bytes()

    def test_threads_do_not_change_output(self, tmp_path):
        _, serial = self._run(tmp_path, "serial.csv")
        _, threaded = self._run(tmp_path, "threaded.csv", extra=("--threads", "2"))
        assert serial.read_bytes() == threaded.read_bytes()

    def test_json_format(self, tmp_path):
        code, out = self._run(tmp_path, "exp.json", extra=("--format", "json"))
        assert code == 0
        obj = json.loads(out.read_text())
        assert obj["family"] == "mod1"
        assert obj["R"] == 3
        assert len(obj["risks"]) == 6
        assert {s["algorithm"] for s in obj["summary"]} == {"lloyd", "noisy"}
        for entry in obj["risks"]:
            assert len(entry["bandwidth"]) == 2

    def test_u_out_of_range_is_usage_error(self, tmp_path, capsys):
        out = tmp_path / "never.csv"
        code = main(
            ["experiment", "--family", "mod1", "--u", "11", "--R", "1",
             "--out", str(out)]
        )
        assert code == 2
        assert "u must be in 1..10" in capsys.readouterr().err
        assert not out.exists()

    def test_bad_R(self, tmp_path, capsys):
        code, _ = (
            main(["experiment", "--family", "mod1", "--u", "1", "--R", "0",
                  "--out", str(tmp_path / "x.csv")]),
            None,
        )
        assert code == 2
        assert "--R" in capsys.readouterr().err


class TestDensityCommand:
    def test_csv_grid_rows(self, tmp_path, points_file):
        out = tmp_path / "den.csv"
        code = main(
            ["density", "--in", str(points_file), "--bandwidth", "0.8,0.9",
             "--grid", "16", "--out", str(out)]
        )
        assert code == 0
        lines = _lines(out)
        assert lines[0].startswith("# raw_min=")
        assert lines[1] == "x,y,value"
        assert len(lines) == 2 + 16 * 16
        vals = np.array([float(r.split(",")[2]) for r in lines[2:]])
        assert np.all(vals >= 0.0)
        assert vals.max() > 0.0

    def test_json_round_trip_is_byte_stable(self, tmp_path, points_file):
        out = tmp_path / "den.json"
        code = main(
            ["density", "--in", str(points_file), "--bandwidth", "0.8,0.9",
             "--grid", "16", "--format", "json", "--out", str(out)]
        )
        assert code == 0
        text = out.read_text()
        assert grid_json_text(parse_grid_json(text)) == text

    def test_deconvolution_sharpens_peak(self, tmp_path, points_file):
        """Dividing out a noise characteristic function amplifies high
        frequencies, so the deconvolved surface peaks above the plain
        smoother on the same data."""
        plain = tmp_path / "plain.json"
        deconv = tmp_path / "deconv.json"
        for path, noise in ((plain, "none"), (deconv, "gaussian:0.5,0.5")):
            code = main(
                ["density", "--in", str(points_file), "--bandwidth", "1.2,1.2",
                 "--grid", "32", "--noise", noise, "--format", "json",
                 "--out", str(path)]
            )
            assert code == 0
        peak = lambda p: max(max(row) for row in json.loads(p.read_text())["values"])
        assert peak(deconv) > peak(plain)

    def test_scenario_input(self, tmp_path):
        out = tmp_path / "den.csv"
        code = main(
            ["density", "--family", "mod1", "--u", "2", "--n", "30",
             "--bandwidth", "0.9,0.9", "--grid", "16", "--out", str(out)]
        )
        assert code == 0
        assert len(_lines(out)) == 2 + 256

    def test_malformed_input_file(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("1.0,2.0\nnot,numbers,at,all\n")
        code = main(
            ["density", "--in", str(bad), "--bandwidth", "1,1",
             "--out", str(tmp_path / "o.csv")]
        )
        assert code == 2
        assert "bad.csv" in capsys.readouterr().err

    def test_missing_input_file(self, tmp_path, capsys):
        code = main(
            ["density", "--in", str(tmp_path / "ghost.csv"), "--bandwidth", "1,1",
             "--out", str(tmp_path / "o.csv")]
        )
        assert code == 2
        assert "cannot read" in capsys.readouterr().err

    def test_in_and_family_conflict(self, tmp_path, points_file, capsys):
        code = main(
            ["density", "--in", str(points_file), "--family", "mod1", "--u", "1",
             "--bandwidth", "1,1", "--out", str(tmp_path / "o.csv")]
        )
        assert code == 2
        assert "not both" in capsys.readouterr().err

    def test_neither_in_nor_family(self, tmp_path, capsys):
        code = main(
            ["density", "--bandwidth", "1,1", "--out", str(tmp_path / "o.csv")]
        )
        assert code == 2
        assert "--family and --u are required" in capsys.readouterr().err

    def test_tuned_bandwidth_rejected(self, tmp_path, points_file, capsys):
        code = main(
            ["density", "--in", str(points_file), "--bandwidth", "tuned",
             "--out", str(tmp_path / "o.csv")]
        )
        assert code == 2
        assert "only valid for the experiment command" in capsys.readouterr().err

    def test_grid_must_be_power_of_two(self, tmp_path, points_file, capsys):
        code = main(
            ["density", "--in", str(points_file), "--bandwidth", "1,1",
             "--grid", "48", "--out", str(tmp_path / "o.csv")]
        )
        assert code == 2
        assert "--grid" in capsys.readouterr().err

    def test_bad_noise_spec(self, tmp_path, points_file, capsys):
        code = main(
            ["density", "--in", str(points_file), "--bandwidth", "1,1",
             "--noise", "cauchy:1,1", "--out", str(tmp_path / "o.csv")]
        )
        assert code == 2
        assert "noise kind" in capsys.readouterr().err


class TestFitCommand:
    def _run(self, tmp_path, points_file, name, extra=()):
        out = tmp_path / name
        code = main(
            ["fit", "--in", str(points_file), "--bandwidth", "1.0,1.0",
             "--grid", "32", "--k", "2", "--seed", "5", "--out", str(out), *extra]
        )
        return code, out

    def test_sections_and_content(self, tmp_path, points_file):
        code, out = self._run(tmp_path, points_file, "fit.csv")
        assert code == 0
        lines = _lines(out)
        assert lines[0].startswith("# iterations=")
        assert lines[1] == "index,center_x,center_y"
        assert lines[2].startswith("0,") and lines[3].startswith("1,")
        assert lines[4] == ""
        assert lines[5] == "index,cluster"
        assign_rows = lines[6:6 + 80]
        clusters = {int(r.split(",")[1]) for r in assign_rows}
        assert clusters == {0, 1}
        blank = 6 + 80
        assert lines[blank] == ""
        assert lines[blank + 1] == "iteration,distortion"
        trace = [float(r.split(",")[1]) for r in lines[blank + 2:]]
        assert len(trace) >= 1
        assert all(a >= b - 1e-12 for a, b in zip(trace, trace[1:]))

    def test_k_one_puts_everything_in_cluster_zero(self, tmp_path, points_file):
        out = tmp_path / "k1.csv"
        code = main(
            ["fit", "--in", str(points_file), "--bandwidth", "1.0,1.0",
             "--grid", "16", "--k", "1", "--out", str(out)]
        )
        assert code == 0
        lines = _lines(out)
        start = lines.index("index,cluster") + 1
        labels = {r.split(",")[1] for r in lines[start:start + 80]}
        assert labels == {"0"}

    def test_fixed_seed_byte_identical(self, tmp_path, points_file):
        _, a = self._run(tmp_path, points_file, "a.csv")
        _, b = self._run(tmp_path, points_file, "b.csv")
        assert a.read_bytes() == b.read_bytes()

    def test_json_fields(self, tmp_path, points_file):
        code, out = self._run(tmp_path, points_file, "fit.json", extra=("--format", "json"))
        assert code == 0
        obj = json.loads(out.read_text())
        assert obj["k"] == 2
        assert len(obj["centers"]) == 2
        assert len(obj["assignments"]) == 80
        assert obj["iterations"] == len(obj["distortion_trace"])

    def test_k_out_of_range(self, tmp_path, points_file, capsys):
        code = main(
            ["fit", "--in", str(points_file), "--bandwidth", "1,1", "--k", "0",
             "--out", str(tmp_path / "o.csv")]
        )
        assert code == 2
        assert "--k must be in" in capsys.readouterr().err

    def test_negative_seed(self, tmp_path, points_file, capsys):
        code = main(
            ["fit", "--in", str(points_file), "--bandwidth", "1,1",
             "--seed", "-3", "--out", str(tmp_path / "o.csv")]
        )
        assert code == 2
        assert "--seed" in capsys.readouterr().err


class TestArgumentErrors:
    def test_missing_out_flag(self, capsys):
        code = main(["density", "--bandwidth", "1,1"])
        assert code == 2
        capsys.readouterr()

    def test_unknown_command(self, capsys):
        code = main(["harmonize"])
        assert code == 2
        capsys.readouterr()

    def test_bad_bandwidth_shape(self, tmp_path, points_file, capsys):
        code = main(
            ["density", "--in", str(points_file), "--bandwidth", "1;2",
             "--out", str(tmp_path / "o.csv")]
        )
        assert code == 2
        assert "bandwidth must be" in capsys.readouterr().err
