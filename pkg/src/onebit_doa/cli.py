"""Command-line interface.

Subcommands: geometry, bounds, analyze, simulate, resolve, serve.  Batch
experiments run in process; the request/response subcommands can instead be
forwarded to a running service instance with --server.

Exit codes: 0 success, 2 configuration error, 3 sweep finished with
unreliable points (>10% flagged trials somewhere).
"""

from __future__ import annotations

import argparse
import json
import sys
import urllib.request

import numpy as np

from .analysis import asymptotic_error_covariance
from .bounds import crb_infinite, crb_onebit_pessimistic, identifiability_test
from .geometry import InvalidGeometryError, build_geometry, standard_array
from .harness import (
    ConfigError,
    ExperimentConfig,
    MonteCarloSummary,
    PointRow,
    emit_results,
    has_unreliable_points,
    resolution_experiment,
    run_experiment,
)
from .signal import SourceScene

DEG2 = float(np.rad2deg(np.rad2deg(1.0)))  # radians^2 -> degrees^2


def _parse_geometry(text: str):
    if "," in text or text.strip().isdigit():
        try:
            return [int(s) for s in text.split(",") if s.strip() != ""]
        except ValueError as exc:
            raise ConfigError(f"bad geometry list {text!r}: {exc}") from exc
    return standard_array(text)


def _scene_from_args(args) -> SourceScene:
    thetas = np.deg2rad([float(s) for s in args.thetas_deg.split(",")])
    snrs = [float(s) for s in args.snr_db.split(",")]
    if len(snrs) == 1:
        snrs = snrs * thetas.size
    return SourceScene(
        thetas=thetas, powers=10.0 ** (np.asarray(snrs) / 10.0), noise_var=1.0
    )


def _post_to_server(server: str, endpoint: str, payload: dict) -> dict:
    req = urllib.request.Request(
        server.rstrip("/") + endpoint,
        data=json.dumps(payload).encode(),
        headers={"Content-Type": "application/json"},
        method="POST",
    )
    with urllib.request.urlopen(req) as resp:
        return json.loads(resp.read().decode())


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _cmd_geometry(args) -> int:
    if args.server:
        body = (
            {"sensors": _parse_geometry(args.geometry)}
            if "," in args.geometry
            else {"preset": args.geometry}
        )
        _emit(json.dumps(_post_to_server(args.server, "/geometry", body), indent=2), args.out)
        return 0
    geom = build_geometry(_parse_geometry(args.geometry))
    payload = {
        "sensors": list(geom.sensors),
        "diffs": list(geom.diffs),
        "D": geom.cardinality,
        "v": geom.ula_segment,
    }
    _emit(json.dumps(payload, indent=2), args.out)
    return 0


def _cmd_bounds(args) -> int:
    if args.server:
        thetas = [float(s) for s in args.thetas_deg.split(",")]
        snrs = [float(s) for s in args.snr_db.split(",")]
        if len(snrs) == 1:
            snrs = snrs * len(thetas)
        body = {
            "scene": {"thetas_deg": thetas, "snr_db": snrs},
            "geometry": {"sensors": _parse_geometry(args.geometry)},
            "n_snapshots": args.n,
        }
        _emit(json.dumps(_post_to_server(args.server, "/bounds", body), indent=2), args.out)
        return 0
    geom = build_geometry(_parse_geometry(args.geometry))
    scene = _scene_from_args(args)
    w = crb_onebit_pessimistic(scene, geom, args.n)
    i = crb_infinite(scene, geom, args.n)
    ident = identifiability_test(scene, geom)
    k = scene.n_sources
    if args.format == "json":
        payload = {
            "crb_w_deg2": (np.diag(w.crb) * DEG2).tolist() if w.valid else None,
            "crb_i_deg2": (np.diag(i.crb) * DEG2).tolist() if i.valid else None,
            "crb_w_valid": w.valid,
            "crb_i_valid": i.valid,
            "upsilon_rank": ident.upsilon_rank,
            "full_column_rank": ident.full_column_rank,
        }
        _emit(json.dumps(payload, indent=2), args.out)
    else:
        lines = ["source,theta_deg,crb_w_deg2,crb_i_deg2,valid"]
        for s in range(k):
            wv = repr(float(w.crb[s, s] * DEG2)) if w.valid else ""
            iv = repr(float(i.crb[s, s] * DEG2)) if i.valid else ""
            lines.append(
                f"{s},{float(np.rad2deg(scene.thetas[s]))!r},{wv},{iv},{w.valid and i.valid}"
            )
        _emit("\n".join(lines) + "\n", args.out)
    return 0


def _analyze_summary(cfg: ExperimentConfig) -> MonteCarloSummary:
    """Analytic MSE/CRB curves on the harness sweep grid, harness CSV schema
    (rmse columns are nan: no trials are run)."""
    rows = []
    for sweep_value in cfg.sweep_grid:
        scene = cfg.scene_for(sweep_value)
        geom = cfg.geometry_object()
        n = cfg.snapshots_for(sweep_value)
        k = scene.n_sources
        w = crb_onebit_pessimistic(scene, geom, n)
        i = crb_infinite(scene, geom, n)
        crb_w = tuple(np.rad2deg(np.sqrt(np.diag(w.crb))).tolist()) if w.valid else None
        crb_i = tuple(np.rad2deg(np.sqrt(np.diag(i.crb))).tolist()) if i.valid else None
        for mode in ("eocab", "ocab"):
            if mode not in cfg.estimators:
                continue
            try:
                model = asymptotic_error_covariance(scene, geom, n, mode)
                thm6 = tuple(np.rad2deg(np.sqrt(model.mse)).tolist())
            except ValueError:
                thm6 = None
            rows.append(
                PointRow(
                    sweep_value=float(sweep_value),
                    estimator=mode,
                    rmse_deg=tuple([float("nan")] * k),
                    bias_deg=tuple([float("nan")] * k),
                    trials_ok=0,
                    trials_flagged=0,
                    crb_w_deg=crb_w,
                    crb_i_deg=crb_i,
                    mse_thm6_deg=thm6,
                )
            )
    from .harness import _config_dict

    return MonteCarloSummary(
        sweep_name=cfg.sweep, rows=tuple(rows), config=_config_dict(cfg),
        seed=cfg.seed, wall_clock_s=tuple([0.0] * len(cfg.sweep_grid)),
    )


def _load_config(args) -> ExperimentConfig:
    overrides = {
        "seed": args.seed,
        "trials": args.trials,
        "workers": args.workers,
        "sigma_mode": args.sigma_mode,
    }
    if args.config:
        return ExperimentConfig.from_yaml(args.config, **overrides)
    return ExperimentConfig(**{k: v for k, v in overrides.items() if v is not None})


def _write_summary(summary: MonteCarloSummary, args) -> None:
    if args.out:
        emit_results(summary, args.format, args.out)
    else:
        from .harness import summary_to_csv

        _emit(summary.to_json() if args.format == "json" else summary_to_csv(summary), None)


def _cmd_simulate(args) -> int:
    cfg = _load_config(args)
    summary = run_experiment(cfg)
    _write_summary(summary, args)
    return 3 if has_unreliable_points(summary) else 0


def _cmd_resolve(args) -> int:
    cfg = _load_config(args)
    summary = resolution_experiment(cfg)
    _write_summary(summary, args)
    return 3 if has_unreliable_points(summary) else 0


def _cmd_analyze(args) -> int:
    cfg = _load_config(args)
    summary = _analyze_summary(cfg)
    _write_summary(summary, args)
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import app

    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="onebit-doa",
        description="One-bit sparse-array DoA estimation: benchmarks, bounds and analysis",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common_run = argparse.ArgumentParser(add_help=False)
    common_run.add_argument("--config", help="YAML experiment config")
    common_run.add_argument("--seed", type=int, default=None)
    common_run.add_argument("--trials", type=int, default=None)
    common_run.add_argument("--workers", type=int, default=None)
    common_run.add_argument("--sigma-mode", choices=["analytic", "monte_carlo"], default=None)
    common_run.add_argument("--out", help="output path (stdout when omitted)")
    common_run.add_argument("--format", choices=["csv", "json"], default="csv")

    p_geo = sub.add_parser("geometry", help="difference co-array of a sensor set")
    p_geo.add_argument("geometry", help="preset name or comma-separated positions")
    p_geo.add_argument("--out")
    p_geo.add_argument("--server", help="forward to a running service, e.g. http://localhost:8000")
    p_geo.set_defaults(func=_cmd_geometry)

    p_bounds = sub.add_parser("bounds", help="one-bit and infinite-bit CRBs for a scene")
    p_bounds.add_argument("--geometry", default="nested")
    p_bounds.add_argument("--thetas-deg", required=True, help="comma-separated DoAs in degrees")
    p_bounds.add_argument("--snr-db", default="0", help="common value or comma-separated per source")
    p_bounds.add_argument("--n", type=int, default=500, help="snapshot count")
    p_bounds.add_argument("--out")
    p_bounds.add_argument("--format", choices=["csv", "json"], default="csv")
    p_bounds.add_argument("--server")
    p_bounds.set_defaults(func=_cmd_bounds)

    p_sim = sub.add_parser("simulate", parents=[common_run], help="Monte-Carlo sweep")
    p_sim.set_defaults(func=_cmd_simulate)

    p_res = sub.add_parser("resolve", parents=[common_run], help="resolution-probability study")
    p_res.set_defaults(func=_cmd_resolve)

    p_ana = sub.add_parser("analyze", parents=[common_run], help="analytic MSE/CRB curves")
    p_ana.set_defaults(func=_cmd_analyze)

    p_srv = sub.add_parser("serve", help="run the HTTP service")
    p_srv.add_argument("--host", default="127.0.0.1")
    p_srv.add_argument("--port", type=int, default=8000)
    p_srv.set_defaults(func=_cmd_serve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, InvalidGeometryError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
