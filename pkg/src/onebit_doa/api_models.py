"""Pydantic request/response models for the HTTP service.

Angles cross the wire in degrees; the core package works in radians.
"""

from __future__ import annotations

from pydantic import BaseModel, Field, model_validator


class GeometryRequest(BaseModel):
    sensors: list[int] | None = None
    preset: str | None = None

    @model_validator(mode="after")
    def _one_of(self):
        if (self.sensors is None) == (self.preset is None):
            raise ValueError("provide exactly one of sensors, preset")
        return self


class GeometryResponse(BaseModel):
    sensors: list[int]
    diffs: list[int]
    D: int
    v: int


class SceneModel(BaseModel):
    thetas_deg: list[float]
    snr_db: list[float] | float = 0.0
    noise_var: float = 1.0

    def snr_list(self) -> list[float]:
        k = len(self.thetas_deg)
        if isinstance(self.snr_db, float) or isinstance(self.snr_db, int):
            return [float(self.snr_db)] * k
        if len(self.snr_db) != k:
            raise ValueError("snr_db list must match thetas_deg length")
        return [float(s) for s in self.snr_db]


class SteeringRequest(BaseModel):
    positions: list[float]
    thetas_deg: list[float]


class SteeringResponse(BaseModel):
    re: list[list[float]]
    im: list[list[float]]


class BoundsRequest(BaseModel):
    scene: SceneModel
    geometry: GeometryRequest
    n_snapshots: int = Field(gt=0)


class IdentifiabilityModel(BaseModel):
    upsilon_rank: int
    full_column_rank: bool
    sufficient_identifiable: bool
    sufficient_unidentifiable: bool


class BoundsResponse(BaseModel):
    crb_w_deg2: list[float] | None
    crb_w_valid: bool
    crb_i_deg2: list[float] | None
    crb_i_valid: bool
    identifiability: IdentifiabilityModel


class AnalyzeRequest(BaseModel):
    scene: SceneModel
    geometry: GeometryRequest
    n_snapshots: int = Field(gt=0)
    mode: str = "eocab"


class AnalyzeResponse(BaseModel):
    mode: str
    mse_deg2: list[float]
    rmse_deg: list[float]
    error_cov_deg2: list[list[float]]


class ResolutionBoundRequest(BaseModel):
    geometry: GeometryRequest
    n_snapshots: int = Field(gt=0)
    snr_db: float = 0.0
    center_deg: float = 20.0
    delta_theta_deg: float = Field(gt=0)
    mode: str = "eocab"


class ResolutionBoundResponse(BaseModel):
    delta_theta_deg: float
    lower_bound: float
    raw: float


class SimulateRequest(BaseModel):
    """Bounded Monte-Carlo run; batch sweeps belong to the CLI."""

    geometry: GeometryRequest
    scene: SceneModel
    n_snapshots: int = Field(gt=0)
    trials: int = Field(gt=0, le=1000)
    seed: int = 12345
    estimators: list[str] = ["eocab", "ocab", "icab"]
    music_step_deg: float = 0.01


class EstimatorResult(BaseModel):
    estimator: str
    rmse_deg: list[float]
    bias_deg: list[float]
    trials_ok: int
    trials_flagged: int


class SimulateResponse(BaseModel):
    truth_deg: list[float]
    results: list[EstimatorResult]
