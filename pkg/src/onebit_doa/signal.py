"""Stochastic array snapshots and the complex one-bit quantizer."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import ArrayGeometry, steering_matrix

_INV_SQRT2 = 1.0 / np.sqrt(2.0)


@dataclass(frozen=True)
class SourceScene:
    """K uncorrelated far-field sources plus white noise.

    thetas are in radians; powers are linear per-source powers; noise_var is
    the noise variance.  Only the SNRs matter after one-bit quantization, so
    the usual convention is powers = per-source linear SNR and noise_var = 1.
    """

    thetas: np.ndarray
    powers: np.ndarray
    noise_var: float

    def __post_init__(self):
        th = np.atleast_1d(np.asarray(self.thetas, dtype=float))
        p = np.atleast_1d(np.asarray(self.powers, dtype=float))
        if th.size < 1:
            raise ValueError("need at least one source")
        if th.size != p.size:
            raise ValueError("thetas and powers must have the same length")
        if np.any(np.abs(th) > np.pi / 2):
            raise ValueError("DoAs must lie in [-pi/2, pi/2]")
        if np.unique(th).size != th.size:
            raise ValueError("DoAs must be distinct")
        if np.any(p <= 0):
            raise ValueError("source powers must be positive")
        if self.noise_var < 0:
            raise ValueError("noise variance must be non-negative")
        object.__setattr__(self, "thetas", th)
        object.__setattr__(self, "powers", p)

    @property
    def n_sources(self) -> int:
        return self.thetas.size

    @property
    def total_power(self) -> float:
        return float(self.noise_var + self.powers.sum())

    @property
    def pbar(self) -> np.ndarray:
        """Normalized powers p_k / (sigma^2 + sum p)."""
        return self.powers / self.total_power


def scene_from_snr_db(thetas_deg, snr_db) -> SourceScene:
    """Scene with unit noise variance and per-source powers 10^(SNR/10)."""
    th = np.deg2rad(np.atleast_1d(np.asarray(thetas_deg, dtype=float)))
    snr = np.broadcast_to(np.atleast_1d(np.asarray(snr_db, dtype=float)), th.shape)
    return SourceScene(thetas=th, powers=10.0 ** (snr / 10.0), noise_var=1.0)


def equally_spaced_thetas(k: int, lo_deg: float = -60.0, hi_deg: float = 60.0) -> np.ndarray:
    """K DoAs equally spaced in [lo, hi] degrees; a single source sits at lo."""
    if k == 1:
        return np.array([np.deg2rad(lo_deg)])
    return np.deg2rad(np.linspace(lo_deg, hi_deg, k))


def _circular_gaussian(rng: np.random.Generator, shape, variance) -> np.ndarray:
    scale = np.sqrt(np.asarray(variance, dtype=float) / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def simulate_snapshots(
    scene: SourceScene, geom: ArrayGeometry, n_snapshots: int, rng: np.random.Generator
) -> np.ndarray:
    """Draw Y = A(theta) S + W, an M x N block of i.i.d. snapshots.

    Source amplitudes and noise are zero-mean circular complex Gaussian with
    per-source variances scene.powers and noise variance scene.noise_var.
    Deterministic for a given generator state.
    """
    if n_snapshots < 1:
        raise ValueError("need at least one snapshot")
    a = steering_matrix(geom.sensors, scene.thetas)
    s = _circular_gaussian(rng, (scene.n_sources, n_snapshots), scene.powers[:, None])
    y = a @ s
    if scene.noise_var > 0:
        y = y + _circular_gaussian(rng, (geom.n_sensors, n_snapshots), scene.noise_var)
    return y


def one_bit_quantize(y: np.ndarray) -> np.ndarray:
    """Entrywise (sgn Re + j sgn Im)/sqrt(2) with sgn(0) = +1."""
    re = np.where(y.real >= 0, 1.0, -1.0)
    im = np.where(y.imag >= 0, 1.0, -1.0)
    return _INV_SQRT2 * (re + 1j * im)
