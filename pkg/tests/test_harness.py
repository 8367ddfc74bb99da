import json

import numpy as np
import pytest

from onebit_doa.harness import (
    CSV_COLUMNS,
    ConfigError,
    ExperimentConfig,
    MonteCarloSummary,
    _aggregate,
    _point_overlays,
    _run_trials,
    _config_dict,
    emit_results,
    has_unreliable_points,
    resolution_experiment,
    run_experiment,
    summary_to_csv,
)

FAST_CFG = dict(
    geometry=[0, 2, 3, 4, 6, 9],
    k=2,
    doa_rule=[-22.0, 31.0],
    snr_db=3.0,
    sweep="N",
    sweep_grid=[200, 400],
    trials=8,
    seed=99,
    estimators=["ocab", "icab"],
    overlays=["crb_w", "crb_i"],
    music_step_deg=0.05,
)


class TestConfig:
    def test_validation_errors(self):
        with pytest.raises(ConfigError):
            ExperimentConfig(**{**FAST_CFG, "sweep": "M"})
        with pytest.raises(ConfigError):
            ExperimentConfig(**{**FAST_CFG, "sweep_grid": []})
        with pytest.raises(ConfigError):
            ExperimentConfig(**{**FAST_CFG, "sweep_grid": [400, 200]})
        with pytest.raises(ConfigError):
            ExperimentConfig(**{**FAST_CFG, "trials": 0})
        with pytest.raises(ConfigError):
            ExperimentConfig(**{**FAST_CFG, "estimators": ["music"]})
        with pytest.raises(ConfigError):
            ExperimentConfig(**{**FAST_CFG, "doa_rule": [1.0, 2.0, 3.0]})
        with pytest.raises(ConfigError):
            ExperimentConfig(**{**FAST_CFG, "sweep": "K", "doa_rule": [1.0, 2.0]})
        with pytest.raises(ConfigError):
            ExperimentConfig(**{**FAST_CFG, "geometry": [3, 3, 4]})

    def test_scene_resolution(self):
        cfg = ExperimentConfig(**FAST_CFG)
        scene = cfg.scene_for(200)
        assert np.allclose(np.rad2deg(scene.thetas), [-22.0, 31.0])
        assert cfg.snapshots_for(123) == 123
        cfg_k = ExperimentConfig(
            geometry="nested", k=5, sweep="K", sweep_grid=[2, 4], trials=1,
            estimators=["ocab"], n_snapshots=100,
        )
        assert cfg_k.scene_for(4).n_sources == 4

    def test_yaml_round_trip(self, tmp_path):
        import yaml

        path = tmp_path / "cfg.yaml"
        path.write_text(yaml.safe_dump(FAST_CFG))
        cfg = ExperimentConfig.from_yaml(str(path), trials=3)
        assert cfg.trials == 3
        assert cfg.geometry == (0, 2, 3, 4, 6, 9)

    def test_yaml_unknown_key(self, tmp_path):
        path = tmp_path / "cfg.yaml"
        path.write_text("bogus_key: 1\n")
        with pytest.raises(ConfigError):
            ExperimentConfig.from_yaml(str(path))


class TestRunExperiment:
    def test_byte_identical_reruns_and_worker_independence(self, tmp_path):
        cfg1 = ExperimentConfig(**{**FAST_CFG, "workers": 1})
        cfg2 = ExperimentConfig(**{**FAST_CFG, "workers": 2})
        s1 = run_experiment(cfg1)
        s2 = run_experiment(cfg1)
        s3 = run_experiment(cfg2)
        paths = [str(tmp_path / f"{i}.csv") for i in range(3)]
        for s, p in zip((s1, s2, s3), paths):
            emit_results(s, "csv", p)
        blobs = [open(p, "rb").read() for p in paths]
        assert blobs[0] == blobs[1]
        assert blobs[0] == blobs[2]

    def test_rmse_matches_per_trial_errors(self):
        cfg = ExperimentConfig(**FAST_CFG)
        per_trial = _run_trials(_config_dict(cfg), 0, 200, list(range(cfg.trials)))
        summary = run_experiment(cfg)
        row = next(r for r in summary.rows if r.sweep_value == 200.0 and r.estimator == "ocab")
        errs = np.array([per_trial["ocab"][t] for t in range(cfg.trials)])
        rmse = np.sqrt((errs**2).mean(axis=0))
        assert np.max(np.abs(rmse - np.array(row.rmse_deg))) < 1e-12 * max(1, rmse.max())

    def test_flagged_accounting(self):
        cfg = ExperimentConfig(**{**FAST_CFG, "trials": 10})
        per_trial = {"ocab": {t: [0.1, -0.2] for t in range(10)}, "icab": {t: [0.1, -0.2] for t in range(10)}}
        per_trial["ocab"][3] = None
        per_trial["ocab"][7] = None
        rows = _aggregate(cfg, 200, per_trial, {})
        row = next(r for r in rows if r.estimator == "ocab")
        assert row.trials_ok + row.trials_flagged == 10
        assert row.trials_flagged == 2
        assert row.unreliable  # 20% > 10%
        ok_row = next(r for r in rows if r.estimator == "icab")
        assert not ok_row.unreliable

    def test_summary_json_round_trip(self):
        cfg = ExperimentConfig(**{**FAST_CFG, "trials": 2, "sweep_grid": [100]})
        summary = run_experiment(cfg)
        text = summary.to_json()
        back = MonteCarloSummary.from_json(text)
        assert back == summary
        assert json.loads(text)["seed"] == 99


class TestEmitResults:
    def test_header_only_for_empty_estimators(self, tmp_path):
        cfg = ExperimentConfig(**{**FAST_CFG, "estimators": [], "trials": 1})
        summary = run_experiment(cfg)
        path = str(tmp_path / "empty.csv")
        emit_results(summary, "csv", path)
        text = open(path).read()
        assert text == ",".join(CSV_COLUMNS) + "\n"

    def test_fixed_column_count(self):
        for overlays in ([], ["crb_w"], ["crb_w", "crb_i", "thm6_mse"]):
            cfg = ExperimentConfig(
                **{**FAST_CFG, "overlays": overlays, "trials": 2, "sweep_grid": [100],
                   "estimators": ["ocab"]}
            )
            csv = summary_to_csv(run_experiment(cfg))
            for line in csv.strip().split("\n"):
                assert line.count(",") == len(CSV_COLUMNS) - 1

    def test_bad_format_and_path(self, tmp_path):
        cfg = ExperimentConfig(**{**FAST_CFG, "trials": 1, "sweep_grid": [100]})
        summary = run_experiment(cfg)
        with pytest.raises(ValueError):
            emit_results(summary, "parquet", str(tmp_path / "x"))
        with pytest.raises(OSError):
            emit_results(summary, "csv", str(tmp_path / "nodir" / "x.csv"))

    def test_full_precision_round_trip(self):
        cfg = ExperimentConfig(**{**FAST_CFG, "trials": 3, "sweep_grid": [100]})
        summary = run_experiment(cfg)
        csv = summary_to_csv(summary)
        line = csv.strip().split("\n")[1].split(",")
        rmse = float(line[CSV_COLUMNS.index("rmse_deg")])
        assert rmse == summary.rows[0].rmse_deg[0]


class TestResolutionExperiment:
    def test_frequencies_and_bound(self):
        cfg = ExperimentConfig(
            geometry=[0, 2, 3, 4, 6, 9],
            k=2,
            sweep="delta_theta",
            sweep_grid=[2.0, 16.0],
            n_snapshots=300,
            snr_db=10.0,
            trials=12,
            seed=5,
            estimators=["ocab"],
            music_step_deg=0.05,
        )
        summary = resolution_experiment(cfg)
        rows = sorted(summary.rows, key=lambda r: r.sweep_value)
        for row in rows:
            assert 0.0 <= row.resolution_freq <= 1.0
            assert row.resolution_bound is not None
        # resolution improves with separation; huge separation resolves always
        assert rows[-1].resolution_freq == 1.0
        assert not has_unreliable_points(summary)

    def test_requires_delta_sweep(self):
        cfg = ExperimentConfig(**FAST_CFG)
        with pytest.raises(ConfigError):
            resolution_experiment(cfg)

    def test_two_sources_enforced(self):
        with pytest.raises(ConfigError):
            ExperimentConfig(
                geometry="nested", k=3, sweep="delta_theta", sweep_grid=[1.0],
                trials=1, estimators=["ocab"],
            )


class TestOverlays:
    def test_thm6_only_for_onebit_estimators(self):
        cfg = ExperimentConfig(
            **{**FAST_CFG, "overlays": ["thm6_mse"], "estimators": ["eocab", "ocab", "icab"],
               "trials": 2, "sweep_grid": [150]}
        )
        overlays = _point_overlays(cfg, 150)
        assert "eocab" in overlays["thm6_mse"] and "ocab" in overlays["thm6_mse"]
        summary = run_experiment(cfg)
        icab_row = next(r for r in summary.rows if r.estimator == "icab")
        assert icab_row.mse_thm6_deg is None
