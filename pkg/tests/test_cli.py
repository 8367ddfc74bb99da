import json

import numpy as np
import pytest
import yaml

from onebit_doa.cli import main
from onebit_doa.harness import CSV_COLUMNS


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


class TestGeometryCommand:
    def test_preset_json(self, capsys):
        code, out, _ = run_cli(capsys, "geometry", "nested")
        assert code == 0
        body = json.loads(out)
        assert body["D"] == 30 and body["v"] == 30
        assert body["diffs"] == list(range(30))

    def test_explicit_list(self, capsys):
        code, out, _ = run_cli(capsys, "geometry", "0,2,3,4,6,9")
        assert code == 0
        assert json.loads(out)["v"] == 8

    def test_bad_geometry_exit_code(self, capsys):
        code, _, err = run_cli(capsys, "geometry", "1,1,2")
        assert code == 2
        assert "config error" in err


class TestBoundsCommand:
    def test_csv_output(self, capsys):
        code, out, _ = run_cli(
            capsys, "bounds", "--geometry", "0,2,3,4,6,9",
            "--thetas-deg=-20,30", "--snr-db", "3", "--n", "400",
        )
        assert code == 0
        lines = out.strip().split("\n")
        assert lines[0] == "source,theta_deg,crb_w_deg2,crb_i_deg2,valid"
        assert len(lines) == 3
        vals = lines[1].split(",")
        assert float(vals[2]) > float(vals[3]) > 0

    def test_json_output(self, capsys):
        code, out, _ = run_cli(
            capsys, "bounds", "--geometry", "nested",
            "--thetas-deg=-10,15", "--format", "json",
        )
        body = json.loads(out)
        assert code == 0 and body["full_column_rank"]


class TestSimulateCommand:
    @pytest.fixture()
    def cfg_path(self, tmp_path):
        cfg = dict(
            geometry=[0, 2, 3, 4, 6, 9], k=2, doa_rule=[-22.0, 31.0], snr_db=3.0,
            sweep="N", sweep_grid=[150, 300], trials=4, seed=7,
            estimators=["ocab"], overlays=["crb_w"], music_step_deg=0.05,
        )
        path = tmp_path / "cfg.yaml"
        path.write_text(yaml.safe_dump(cfg))
        return str(path)

    def test_csv_to_file(self, capsys, tmp_path, cfg_path):
        out_path = str(tmp_path / "res.csv")
        code, _, _ = run_cli(capsys, "simulate", "--config", cfg_path, "--out", out_path)
        assert code == 0
        lines = open(out_path).read().strip().split("\n")
        assert lines[0] == ",".join(CSV_COLUMNS)
        assert len(lines) == 1 + 2 * 2  # two sweep points x two sources

    def test_seed_override_changes_output(self, capsys, tmp_path, cfg_path):
        a, b = str(tmp_path / "a.csv"), str(tmp_path / "b.csv")
        run_cli(capsys, "simulate", "--config", cfg_path, "--out", a)
        run_cli(capsys, "simulate", "--config", cfg_path, "--seed", "8", "--out", b)
        assert open(a).read() != open(b).read()

    def test_bad_config_exit_2(self, capsys, tmp_path):
        path = tmp_path / "bad.yaml"
        path.write_text("sweep: bogus\n")
        code, _, err = run_cli(capsys, "simulate", "--config", str(path))
        assert code == 2 and "config error" in err

    def test_json_stdout(self, capsys, cfg_path):
        code, out, _ = run_cli(capsys, "simulate", "--config", cfg_path, "--format", "json")
        assert code == 0
        assert json.loads(out)["sweep_name"] == "N"


class TestAnalyzeCommand:
    def test_analytic_curves(self, capsys, tmp_path):
        cfg = dict(
            geometry=[0, 2, 3, 4, 6, 9], k=2, doa_rule=[-22.0, 31.0], snr_db=3.0,
            sweep="N", sweep_grid=[300, 600], trials=1, estimators=["eocab", "ocab"],
        )
        path = tmp_path / "cfg.yaml"
        path.write_text(yaml.safe_dump(cfg))
        code, out, _ = run_cli(capsys, "analyze", "--config", str(path))
        assert code == 0
        lines = out.strip().split("\n")
        assert lines[0] == ",".join(CSV_COLUMNS)
        idx = CSV_COLUMNS.index("mse_thm6_deg")
        vals = [float(l.split(",")[idx]) for l in lines[1:]]
        assert all(v > 0 for v in vals)
        # 1/sqrt(N) between the two sweep points for matched rows
        assert vals[0] / vals[4] == pytest.approx(np.sqrt(2.0), rel=1e-6)


class TestResolveCommand:
    def test_resolution_csv(self, capsys, tmp_path):
        cfg = dict(
            geometry=[0, 2, 3, 4, 6, 9], k=2, sweep="delta_theta",
            sweep_grid=[4.0, 16.0], n_snapshots=200, snr_db=10.0, trials=6,
            seed=3, estimators=["ocab"], music_step_deg=0.05,
        )
        path = tmp_path / "cfg.yaml"
        path.write_text(yaml.safe_dump(cfg))
        out_path = str(tmp_path / "res.csv")
        code, _, _ = run_cli(capsys, "resolve", "--config", str(path), "--out", out_path)
        assert code == 0
        lines = open(out_path).read().strip().split("\n")
        freq_idx = CSV_COLUMNS.index("resolution_freq")
        bound_idx = CSV_COLUMNS.index("resolution_bound")
        for line in lines[1:]:
            parts = line.split(",")
            assert 0.0 <= float(parts[freq_idx]) <= 1.0
            assert parts[bound_idx] != ""
