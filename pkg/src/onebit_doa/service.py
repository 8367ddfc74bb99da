"""FastAPI service wrapping the core package for request/response use.

Batch sweeps (thousands of trials, many sweep points) stay in the CLI; the
service covers geometry inspection, bounds, the closed-form error theory and
bounded simulation runs for interactive clients.
"""

from __future__ import annotations

import numpy as np
from fastapi import FastAPI, HTTPException

from . import __version__
from .analysis import asymptotic_error_covariance, resolution_lower_bound
from .api_models import (
    AnalyzeRequest,
    AnalyzeResponse,
    BoundsRequest,
    BoundsResponse,
    EstimatorResult,
    GeometryRequest,
    GeometryResponse,
    IdentifiabilityModel,
    ResolutionBoundRequest,
    ResolutionBoundResponse,
    SceneModel,
    SimulateRequest,
    SimulateResponse,
    SteeringRequest,
    SteeringResponse,
)
from .bounds import crb_infinite, crb_onebit_pessimistic, identifiability_test
from .geometry import ArrayGeometry, InvalidGeometryError, build_geometry, standard_array, steering_matrix
from .harness import ExperimentConfig, run_experiment
from .signal import SourceScene

app = FastAPI(title="onebit-doa", version=__version__)


def _geometry(req: GeometryRequest) -> ArrayGeometry:
    try:
        sensors = req.sensors if req.sensors is not None else standard_array(req.preset)
        return build_geometry(sensors)
    except (InvalidGeometryError, ValueError) as exc:
        raise HTTPException(status_code=422, detail=str(exc))


def _scene(model: SceneModel) -> SourceScene:
    try:
        snr = np.asarray(model.snr_list())
        return SourceScene(
            thetas=np.deg2rad(np.asarray(model.thetas_deg, dtype=float)),
            powers=model.noise_var * 10.0 ** (snr / 10.0),
            noise_var=model.noise_var,
        )
    except ValueError as exc:
        raise HTTPException(status_code=422, detail=str(exc))


@app.get("/health")
def health() -> dict:
    return {"status": "ok", "version": __version__}


@app.post("/geometry", response_model=GeometryResponse)
def geometry(req: GeometryRequest) -> GeometryResponse:
    g = _geometry(req)
    return GeometryResponse(sensors=list(g.sensors), diffs=list(g.diffs), D=g.D, v=g.v)


@app.post("/steering", response_model=SteeringResponse)
def steering(req: SteeringRequest) -> SteeringResponse:
    try:
        a = steering_matrix(req.positions, np.deg2rad(np.asarray(req.thetas_deg)))
    except ValueError as exc:
        raise HTTPException(status_code=422, detail=str(exc))
    return SteeringResponse(re=a.real.tolist(), im=a.imag.tolist())


@app.post("/bounds", response_model=BoundsResponse)
def bounds(req: BoundsRequest) -> BoundsResponse:
    g = _geometry(req.geometry)
    scene = _scene(req.scene)
    w = crb_onebit_pessimistic(scene, g, req.n_snapshots)
    i = crb_infinite(scene, g, req.n_snapshots)
    ident = identifiability_test(scene, g)
    deg2 = np.rad2deg(np.rad2deg(1.0))  # radians^2 -> degrees^2 factor
    return BoundsResponse(
        crb_w_deg2=(np.diag(w.crb) * deg2).tolist() if w.valid else None,
        crb_w_valid=w.valid,
        crb_i_deg2=(np.diag(i.crb) * deg2).tolist() if i.valid else None,
        crb_i_valid=i.valid,
        identifiability=IdentifiabilityModel(
            upsilon_rank=ident.upsilon_rank,
            full_column_rank=ident.full_column_rank,
            sufficient_identifiable=ident.sufficient_identifiable,
            sufficient_unidentifiable=ident.sufficient_unidentifiable,
        ),
    )


@app.post("/analyze", response_model=AnalyzeResponse)
def analyze(req: AnalyzeRequest) -> AnalyzeResponse:
    g = _geometry(req.geometry)
    scene = _scene(req.scene)
    try:
        model = asymptotic_error_covariance(scene, g, req.n_snapshots, req.mode)
    except ValueError as exc:
        raise HTTPException(status_code=422, detail=str(exc))
    deg2 = np.rad2deg(np.rad2deg(1.0))
    return AnalyzeResponse(
        mode=req.mode,
        mse_deg2=(model.mse * deg2).tolist(),
        rmse_deg=np.rad2deg(np.sqrt(model.mse)).tolist(),
        error_cov_deg2=(model.E * deg2).tolist(),
    )


@app.post("/resolution-bound", response_model=ResolutionBoundResponse)
def resolution_bound(req: ResolutionBoundRequest) -> ResolutionBoundResponse:
    g = _geometry(req.geometry)
    half = req.delta_theta_deg / 2.0
    scene = _scene(
        SceneModel(
            thetas_deg=[req.center_deg - half, req.center_deg + half],
            snr_db=[req.snr_db, req.snr_db],
        )
    )
    try:
        model = asymptotic_error_covariance(scene, g, req.n_snapshots, req.mode)
        bound = resolution_lower_bound(model, 0, 1, np.deg2rad(req.delta_theta_deg))
    except ValueError as exc:
        raise HTTPException(status_code=422, detail=str(exc))
    return ResolutionBoundResponse(
        delta_theta_deg=req.delta_theta_deg, lower_bound=bound.lower_bound, raw=bound.raw
    )


@app.post("/simulate", response_model=SimulateResponse)
def simulate(req: SimulateRequest) -> SimulateResponse:
    g = _geometry(req.geometry)
    scene = _scene(req.scene)
    snr = req.scene.snr_list()
    try:
        cfg = ExperimentConfig(
            geometry=list(g.sensors),
            k=scene.n_sources,
            doa_rule=list(req.scene.thetas_deg),
            snr_db=snr,
            sweep="N",
            sweep_grid=(req.n_snapshots,),
            trials=req.trials,
            seed=req.seed,
            estimators=tuple(req.estimators),
            music_step_deg=req.music_step_deg,
        )
    except ValueError as exc:
        raise HTTPException(status_code=422, detail=str(exc))
    summary = run_experiment(cfg)
    return SimulateResponse(
        truth_deg=sorted(req.scene.thetas_deg),
        results=[
            EstimatorResult(
                estimator=row.estimator,
                rmse_deg=list(row.rmse_deg),
                bias_deg=list(row.bias_deg),
                trials_ok=row.trials_ok,
                trials_flagged=row.trials_flagged,
            )
            for row in summary.rows
        ],
    )
