import json

import pytest

from packdim import cli


def run(argv, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return cli.main(argv)


class TestGenerate:
    def test_z_manifest_checks_ok(self, tmp_path, monkeypatch, capsys):
        rc = run(["generate", "z", "--depth", "4", "--out", str(tmp_path)],
                 tmp_path, monkeypatch)
        assert rc == 0
        assert "checks OK" in capsys.readouterr().out
        data = json.loads((tmp_path / "z_s0.5_m1_d4.json").read_text())
        assert data["checks"] == "OK"
        assert data["manifest"]["g"] == ["2", "4", "8", "136"]

    def test_digit_cloud_row_count(self, tmp_path, monkeypatch):
        rc = run(["generate", "k0", "--depth", "12", "--out", str(tmp_path)],
                 tmp_path, monkeypatch)
        assert rc == 0
        lines = (tmp_path / "k0_depth12.csv").read_text().splitlines()
        assert len(lines) == 1 + 2 ** 10  # header + one row per point

    def test_random_cloud_deterministic(self, tmp_path, monkeypatch):
        a = tmp_path / "a"
        b = tmp_path / "b"
        for d in (a, b):
            rc = run(["generate", "random-cloud", "--n", "15", "--seed", "7",
                      "--out", str(d)], tmp_path, monkeypatch)
            assert rc == 0
        name = "cloud_n15_d2_s7.csv"
        assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_depth_beyond_cap_exits_three(self, tmp_path, monkeypatch):
        rc = run(["generate", "k0", "--depth", "100", "--out", str(tmp_path)],
                 tmp_path, monkeypatch)
        assert rc == 3


class TestEstimate:
    def test_grid_cloud_near_one(self, tmp_path, monkeypatch):
        cloud = tmp_path / "grid.csv"
        with open(cloud, "w") as f:
            f.write("id," + "x0\n")
            for i in range(1024):
                f.write(f"{i},{i / 1024}\n")
        rc = run(["estimate", "--input", str(cloud), "--scales", "dyadic:9",
                  "--out", str(tmp_path)], tmp_path, monkeypatch)
        assert rc == 0
        est = json.loads((tmp_path / "grid_estimate.json").read_text())
        assert est["kind"] == "lb"
        assert abs(est["value"] - 1.0) <= 0.05
        assert est["source_quality"] == "exact"

    def test_oracle_report_and_figure(self, tmp_path, monkeypatch):
        rc = run(["estimate", "--oracle", "k0", "--scales", "dyadic:16",
                  "--fig", "--out", str(tmp_path)], tmp_path, monkeypatch)
        assert rc == 0
        report = (tmp_path / "k0_report.csv").read_text().splitlines()
        assert report[0] == "delta,count,slope,source"
        assert len(report) == 17
        assert (tmp_path / "k0.png").stat().st_size > 0

    def test_requires_input_or_oracle(self, tmp_path, monkeypatch):
        assert run(["estimate"], tmp_path, monkeypatch) == 2

    def test_missing_input_file(self, tmp_path, monkeypatch):
        rc = run(["estimate", "--input", str(tmp_path / "nope.csv")],
                 tmp_path, monkeypatch)
        assert rc == 2


class TestVerify:
    def test_suite_writes_report(self, tmp_path, monkeypatch):
        rc = run(["verify", "sandwich", "--trials", "5", "--seed", "3",
                  "--out", str(tmp_path)], tmp_path, monkeypatch)
        assert rc == 0
        data = json.loads((tmp_path / "verify_sandwich.json").read_text())
        assert data[0]["suite"] == "sandwich"
        assert data[0]["trials"] == 5
        assert data[0]["violations"] == []

    def test_unknown_suite_rejected_by_parser(self, tmp_path, monkeypatch):
        with pytest.raises(SystemExit) as exc:
            run(["verify", "bogus"], tmp_path, monkeypatch)
        assert exc.value.code == 2

    def test_stdout_when_no_out(self, tmp_path, monkeypatch, capsys):
        rc = run(["verify", "lemma-mi", "--trials", "3"],
                 tmp_path, monkeypatch)
        assert rc == 0
        out = capsys.readouterr().out
        assert json.loads(out)[0]["suite"] == "lemma-mi"


class TestPlotdata:
    def test_empty_inputs_header_only(self, tmp_path, monkeypatch):
        rc = run(["plotdata", "--out", str(tmp_path)], tmp_path, monkeypatch)
        assert rc == 0
        text = (tmp_path / "plotdata.csv").read_text()
        assert text == "series,delta,log_inv_delta,log_count,slope\n"

    def test_merges_series_and_renders(self, tmp_path, monkeypatch):
        for oracle in ("k0", "k1"):
            assert run(["estimate", "--oracle", oracle, "--scales",
                        "dyadic:10", "--out", str(tmp_path)],
                       tmp_path, monkeypatch) == 0
        rc = run(["plotdata", str(tmp_path / "k0_report.csv"),
                  str(tmp_path / "k1_report.csv"), "--out", str(tmp_path)],
                 tmp_path, monkeypatch)
        assert rc == 0
        lines = (tmp_path / "plotdata.csv").read_text().splitlines()
        assert len(lines) == 1 + 20
        series = {ln.split(",")[0] for ln in lines[1:]}
        assert series == {"k0_report", "k1_report"}
        assert (tmp_path / "plotdata.png").stat().st_size > 0

    def test_unreadable_input(self, tmp_path, monkeypatch):
        rc = run(["plotdata", str(tmp_path / "missing.csv")],
                 tmp_path, monkeypatch)
        assert rc == 2


class TestConfig:
    def test_config_mirrors_flags(self, tmp_path, monkeypatch):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"seed": 7, "n": 15, "out": str(tmp_path)}))
        rc = run(["--config", str(cfg), "generate", "random-cloud"],
                 tmp_path, monkeypatch)
        assert rc == 0
        direct = tmp_path / "direct"
        assert run(["generate", "random-cloud", "--n", "15", "--seed", "7",
                    "--out", str(direct)], tmp_path, monkeypatch) == 0
        name = "cloud_n15_d2_s7.csv"
        assert (tmp_path / name).read_bytes() == (direct / name).read_bytes()
