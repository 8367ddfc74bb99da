"""Config-driven Monte-Carlo experiment runner.

Each sweep point runs independent simulate -> quantize -> estimate trials
with deterministically derived per-trial substreams, so results are byte
identical for a fixed seed regardless of the worker count.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace

import numpy as np
import yaml

from .analysis import asymptotic_error_covariance, resolution_lower_bound
from .bounds import crb_infinite, crb_onebit_pessimistic
from .estimators import (
    EstimatorOptions,
    IdentifiabilityError,
    IllConditionedError,
    baseline_music,
    cached_selection,
    eocab_music,
)
from .geometry import ArrayGeometry, build_geometry, standard_array
from .signal import SourceScene, equally_spaced_thetas, one_bit_quantize, simulate_snapshots

ESTIMATOR_NAMES = ("eocab", "ocab", "icab")
OVERLAY_NAMES = ("crb_w", "crb_i", "thm6_mse", "resolution_bound")
SWEEP_NAMES = ("N", "SNR", "K", "delta_theta")

CSV_COLUMNS = [
    "sweep_name", "sweep_value", "estimator", "source", "rmse_deg", "bias_deg",
    "trials_ok", "trials_flagged", "crb_w_deg", "crb_i_deg", "mse_thm6_deg",
    "resolution_freq", "resolution_bound",
]


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass(frozen=True)
class ExperimentConfig:
    geometry: str | list[int] = "nested"
    k: int = 5
    doa_rule: str | list[float] = "equally_spaced"   # or explicit list in degrees
    snr_db: float | list[float] = 3.0                # common or per-source
    sweep: str = "N"
    sweep_grid: tuple = (500, 2000, 8000)
    n_snapshots: int = 500                           # fixed N for non-N sweeps
    trials: int = 500
    seed: int = 12345
    estimators: tuple = ("eocab", "ocab", "icab")
    overlays: tuple = ()
    music_step_deg: float = 0.005
    sigma_mode: str = "analytic"
    sigma_quad_order: int = 24
    sigma_mc_trials: int = 50_000
    workers: int = 1
    resolution_center_deg: float = 20.0

    def __post_init__(self):
        object.__setattr__(self, "sweep_grid", tuple(self.sweep_grid))
        object.__setattr__(self, "estimators", tuple(self.estimators))
        object.__setattr__(self, "overlays", tuple(self.overlays))
        if isinstance(self.geometry, list):
            object.__setattr__(self, "geometry", tuple(self.geometry))
        if isinstance(self.doa_rule, list):
            object.__setattr__(self, "doa_rule", tuple(self.doa_rule))
        if isinstance(self.snr_db, list):
            object.__setattr__(self, "snr_db", tuple(self.snr_db))
        self.validate()

    def validate(self):
        if self.sweep not in SWEEP_NAMES:
            raise ConfigError(f"sweep must be one of {SWEEP_NAMES}, got {self.sweep!r}")
        if len(self.sweep_grid) == 0:
            raise ConfigError("sweep grid must be non-empty")
        grid = list(self.sweep_grid)
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ConfigError("sweep grid must be strictly ascending")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        for est in self.estimators:
            if est not in ESTIMATOR_NAMES:
                raise ConfigError(f"unknown estimator {est!r}")
        for ov in self.overlays:
            if ov not in OVERLAY_NAMES:
                raise ConfigError(f"unknown overlay {ov!r}")
        if self.sweep == "K" and self.doa_rule != "equally_spaced":
            raise ConfigError("K sweeps require the equally_spaced placement rule")
        if self.sweep == "delta_theta" and self.k != 2:
            raise ConfigError("delta_theta sweeps use exactly two sources")
        if self.sigma_mode not in ("analytic", "monte_carlo"):
            raise ConfigError(f"unknown sigma mode {self.sigma_mode!r}")
        # Materialize the scene of the first sweep point to surface errors early.
        try:
            self.geometry_object()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        self.scene_for(self.sweep_grid[0])

    def geometry_object(self) -> ArrayGeometry:
        if isinstance(self.geometry, str):
            return build_geometry(standard_array(self.geometry))
        return build_geometry(list(self.geometry))

    def _thetas_deg(self, k: int, sweep_value=None) -> np.ndarray:
        if self.sweep == "delta_theta":
            half = float(sweep_value) / 2.0
            c = self.resolution_center_deg
            return np.array([c - half, c + half])
        if self.doa_rule == "equally_spaced":
            return np.rad2deg(equally_spaced_thetas(k))
        th = np.asarray(self.doa_rule, dtype=float)
        if th.size != k:
            raise ConfigError(f"explicit DoA list has {th.size} entries, expected K={k}")
        return th

    def scene_for(self, sweep_value) -> SourceScene:
        k = int(sweep_value) if self.sweep == "K" else self.k
        snr = float(sweep_value) if self.sweep == "SNR" else self.snr_db
        thetas_deg = self._thetas_deg(k, sweep_value)
        snr_arr = np.broadcast_to(np.atleast_1d(np.asarray(snr, dtype=float)), (k,))
        try:
            return SourceScene(
                thetas=np.deg2rad(thetas_deg),
                powers=10.0 ** (snr_arr / 10.0),
                noise_var=1.0,
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def snapshots_for(self, sweep_value) -> int:
        return int(sweep_value) if self.sweep == "N" else int(self.n_snapshots)

    @classmethod
    def from_yaml(cls, path: str, **overrides) -> "ExperimentConfig":
        with open(path) as fh:
            raw = yaml.safe_load(fh) or {}
        if not isinstance(raw, dict):
            raise ConfigError("config file must hold a mapping")
        raw.update({k: v for k, v in overrides.items() if v is not None})
        try:
            return cls(**raw)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc


@dataclass(frozen=True)
class PointRow:
    """Aggregated result for one (sweep value, estimator) pair."""

    sweep_value: float
    estimator: str
    rmse_deg: tuple          # per source
    bias_deg: tuple
    trials_ok: int
    trials_flagged: int
    crb_w_deg: tuple | None = None
    crb_i_deg: tuple | None = None
    mse_thm6_deg: tuple | None = None
    resolution_freq: float | None = None
    resolution_bound: float | None = None
    unreliable: bool = False


@dataclass(frozen=True)
class MonteCarloSummary:
    sweep_name: str
    rows: tuple
    config: dict
    seed: int
    wall_clock_s: tuple      # per sweep point

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "MonteCarloSummary":
        raw = json.loads(text)
        rows = tuple(
            PointRow(**{k: tuple(v) if isinstance(v, list) else v for k, v in r.items()})
            for r in raw["rows"]
        )
        return cls(
            sweep_name=raw["sweep_name"], rows=rows, config=raw["config"],
            seed=raw["seed"], wall_clock_s=tuple(raw["wall_clock_s"]),
        )


def _trial_rng(seed: int, point_idx: int, trial_idx: int, stream: int = 0) -> np.random.Generator:
    """Documented substream derivation: SeedSequence(seed, spawn_key=(point, trial, stream))."""
    return np.random.default_rng(
        np.random.SeedSequence(entropy=seed, spawn_key=(point_idx, trial_idx, stream))
    )


def _run_trials(cfg_dict: dict, point_idx: int, sweep_value, trial_indices) -> dict:
    """Worker entry: run a chunk of trials, return per-trial errors (degrees)."""
    cfg = ExperimentConfig(**cfg_dict)
    geom = cfg.geometry_object()
    sel = cached_selection(geom)
    scene = cfg.scene_for(sweep_value)
    n = cfg.snapshots_for(sweep_value)
    truth = np.sort(scene.thetas)
    opts = EstimatorOptions(
        grid_step_deg=cfg.music_step_deg,
        sigma_mode=cfg.sigma_mode,
        sigma_quad_order=cfg.sigma_quad_order,
        sigma_mc_trials=cfg.sigma_mc_trials,
    )
    out: dict = {est: {} for est in cfg.estimators}
    for t in trial_indices:
        rng = _trial_rng(cfg.seed, point_idx, t, stream=0)
        y = simulate_snapshots(scene, geom, n, rng)
        x = one_bit_quantize(y) if any(e != "icab" for e in cfg.estimators) else None
        for est in cfg.estimators:
            try:
                if est == "eocab":
                    sig_rng = (
                        _trial_rng(cfg.seed, point_idx, t, stream=1)
                        if cfg.sigma_mode == "monte_carlo" else None
                    )
                    res = eocab_music(x, scene.n_sources, geom, opts, sel, rng=sig_rng)
                elif est == "ocab":
                    res = baseline_music(x, scene.n_sources, geom, "ocab", opts, sel)
                else:
                    res = baseline_music(y, scene.n_sources, geom, "icab", opts, sel)
                out[est][t] = np.rad2deg(res.thetas_hat - truth).tolist()
            except (
                IllConditionedError, IdentifiabilityError,
                np.linalg.LinAlgError, AssertionError, ValueError,
            ):
                out[est][t] = None
    return out


def _point_overlays(cfg: ExperimentConfig, sweep_value) -> dict:
    scene = cfg.scene_for(sweep_value)
    geom = cfg.geometry_object()
    n = cfg.snapshots_for(sweep_value)
    k = scene.n_sources
    overlays: dict = {}
    if "crb_w" in cfg.overlays:
        rep = crb_onebit_pessimistic(scene, geom, n)
        overlays["crb_w"] = (
            tuple(np.rad2deg(np.sqrt(np.diag(rep.crb))).tolist()) if rep.valid else tuple([np.nan] * k)
        )
    if "crb_i" in cfg.overlays:
        rep = crb_infinite(scene, geom, n)
        overlays["crb_i"] = (
            tuple(np.rad2deg(np.sqrt(np.diag(rep.crb))).tolist()) if rep.valid else tuple([np.nan] * k)
        )
    models = {}
    if "thm6_mse" in cfg.overlays or "resolution_bound" in cfg.overlays:
        for mode in ("eocab", "ocab"):
            if mode in cfg.estimators or "thm6_mse" in cfg.overlays:
                try:
                    models[mode] = asymptotic_error_covariance(scene, geom, n, mode)
                except ValueError:
                    models[mode] = None
    if "thm6_mse" in cfg.overlays:
        overlays["thm6_mse"] = {
            mode: tuple(np.rad2deg(np.sqrt(m.mse)).tolist()) if m is not None else None
            for mode, m in models.items()
        }
    if "resolution_bound" in cfg.overlays and cfg.sweep == "delta_theta":
        dtheta = np.deg2rad(float(sweep_value))
        overlays["resolution_bound"] = {
            mode: (resolution_lower_bound(m, 0, 1, dtheta).lower_bound if m is not None else None)
            for mode, m in models.items()
        }
    return overlays


def _aggregate(cfg: ExperimentConfig, sweep_value, per_trial: dict, overlays: dict) -> list[PointRow]:
    rows = []
    scene = cfg.scene_for(sweep_value)
    k = scene.n_sources
    dtheta_deg = float(sweep_value) if cfg.sweep == "delta_theta" else None
    for est in cfg.estimators:
        errs = [per_trial[est][t] for t in sorted(per_trial[est])]
        ok = np.array([e for e in errs if e is not None])
        flagged = sum(1 for e in errs if e is None)
        if ok.size:
            rmse = np.sqrt((ok**2).mean(axis=0))
            bias = ok.mean(axis=0)
        else:
            rmse = np.full(k, np.nan)
            bias = np.full(k, np.nan)
        res_freq = None
        if dtheta_deg is not None and ok.size:
            res_freq = float((np.abs(ok).max(axis=1) < dtheta_deg / 2.0).mean())
        thm6 = overlays.get("thm6_mse", {}).get(est) if "thm6_mse" in overlays else None
        res_bound = (
            overlays.get("resolution_bound", {}).get(est)
            if "resolution_bound" in overlays else None
        )
        if res_bound is not None:
            res_bound = float(res_bound)
        rows.append(
            PointRow(
                sweep_value=float(sweep_value),
                estimator=est,
                rmse_deg=tuple(rmse.tolist()),
                bias_deg=tuple(bias.tolist()),
                trials_ok=int(len(errs) - flagged),
                trials_flagged=int(flagged),
                crb_w_deg=overlays.get("crb_w"),
                crb_i_deg=overlays.get("crb_i"),
                mse_thm6_deg=thm6,
                resolution_freq=res_freq,
                resolution_bound=res_bound,
                unreliable=flagged > 0.1 * cfg.trials,
            )
        )
    return rows


def run_experiment(cfg: ExperimentConfig) -> MonteCarloSummary:
    """Run the configured sweep; trials use per-(point, trial) substreams so
    the output is independent of the worker count."""
    cfg_dict = _config_dict(cfg)
    rows: list[PointRow] = []
    clocks = []
    for point_idx, sweep_value in enumerate(cfg.sweep_grid):
        t0 = time.perf_counter()
        trial_ids = list(range(cfg.trials))
        if cfg.workers > 1:
            chunks = np.array_split(np.array(trial_ids), cfg.workers * 2)
            chunks = [c.tolist() for c in chunks if c.size]
            per_trial: dict = {est: {} for est in cfg.estimators}
            with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
                futures = [
                    pool.submit(_run_trials, cfg_dict, point_idx, sweep_value, chunk)
                    for chunk in chunks
                ]
                for fut in futures:
                    part = fut.result()
                    for est in cfg.estimators:
                        per_trial[est].update(part[est])
        else:
            per_trial = _run_trials(cfg_dict, point_idx, sweep_value, trial_ids)
        overlays = _point_overlays(cfg, sweep_value)
        rows.extend(_aggregate(cfg, sweep_value, per_trial, overlays))
        clocks.append(time.perf_counter() - t0)
    return MonteCarloSummary(
        sweep_name=cfg.sweep,
        rows=tuple(rows),
        config=cfg_dict,
        seed=cfg.seed,
        wall_clock_s=tuple(clocks),
    )


def resolution_experiment(cfg: ExperimentConfig) -> MonteCarloSummary:
    """Two-source resolution study over a source-separation grid."""
    if cfg.sweep != "delta_theta":
        raise ConfigError("resolution experiments sweep delta_theta")
    if "resolution_bound" not in cfg.overlays:
        cfg = replace(cfg, overlays=tuple(cfg.overlays) + ("resolution_bound",))
    return run_experiment(cfg)


def _config_dict(cfg: ExperimentConfig) -> dict:
    d = asdict(cfg)
    for key in ("sweep_grid", "estimators", "overlays", "geometry", "doa_rule", "snr_db"):
        if isinstance(d[key], tuple):
            d[key] = list(d[key])
    return d


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        value = float(value)  # numpy scalars repr differently
        return "nan" if np.isnan(value) else repr(value)
    return str(value)


def summary_to_csv(summary: MonteCarloSummary) -> str:
    lines = [",".join(CSV_COLUMNS)]
    for row in summary.rows:
        k = len(row.rmse_deg)
        for s in range(k):
            record = {
                "sweep_name": summary.sweep_name,
                "sweep_value": _fmt(row.sweep_value),
                "estimator": row.estimator,
                "source": str(s),
                "rmse_deg": _fmt(float(row.rmse_deg[s])),
                "bias_deg": _fmt(float(row.bias_deg[s])),
                "trials_ok": str(row.trials_ok),
                "trials_flagged": str(row.trials_flagged),
                "crb_w_deg": _fmt(float(row.crb_w_deg[s])) if row.crb_w_deg else "",
                "crb_i_deg": _fmt(float(row.crb_i_deg[s])) if row.crb_i_deg else "",
                "mse_thm6_deg": _fmt(float(row.mse_thm6_deg[s])) if row.mse_thm6_deg else "",
                "resolution_freq": _fmt(row.resolution_freq),
                "resolution_bound": _fmt(row.resolution_bound),
            }
            lines.append(",".join(record[c] for c in CSV_COLUMNS))
    return "\n".join(lines) + "\n"


def emit_results(summary: MonteCarloSummary, fmt: str, path: str) -> str:
    """Write the summary as CSV or JSON; returns the path."""
    if fmt == "csv":
        payload = summary_to_csv(summary)
    elif fmt == "json":
        payload = summary.to_json()
    else:
        raise ValueError(f"unknown format {fmt!r}")
    try:
        with open(path, "w") as fh:
            fh.write(payload)
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc}") from exc
    return path


def has_unreliable_points(summary: MonteCarloSummary) -> bool:
    return any(row.unreliable for row in summary.rows)
