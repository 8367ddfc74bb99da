"""Covariance models, the arcsine/sine transform pair, and the off-diagonal
parameterizations consumed by the weighted covariance fit."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import ArrayGeometry, SelectionSet, steering_matrix
from .signal import SourceScene

GAMMA_CLIP = 1.0 - 1e-6


@dataclass(frozen=True)
class ModelCovariance:
    """Exact covariances of a scene on a geometry."""

    R: np.ndarray        # M x M snapshot covariance
    Rbar: np.ndarray     # R / (sigma^2 + sum p), unit diagonal
    pbar: np.ndarray     # normalized source powers
    u: np.ndarray        # length D-1, co-array values at the positive lags


@dataclass(frozen=True)
class CovarianceBundle:
    """Sample covariance of sign data and its derived parameterizations."""

    Rx_hat: np.ndarray       # (1/N) X X^H, Hermitian, unit diagonal
    Rbar_tilde: np.ndarray   # entrywise sine reconstruction of Rbar
    r_ddot: np.ndarray       # off-diagonal stack of Rbar_tilde
    gamma: np.ndarray        # F r_ddot, real
    b: np.ndarray            # 1/sqrt(1 - gamma^2) after clipping


def _hermitianize(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.conj().T)


def sample_covariance(x: np.ndarray) -> np.ndarray:
    """(1/N) X X^H for a block of N snapshots; exact Hermitian, exact unit
    diagonal for sign data (each entry has unit modulus)."""
    n = x.shape[1]
    if n < 1:
        raise ValueError("need at least one snapshot")
    c = _hermitianize(x @ x.conj().T / n)
    np.fill_diagonal(c, 1.0)
    return c


def arcsine_law(rbar: np.ndarray) -> np.ndarray:
    """Entrywise (2/pi)(arcsin Re + j arcsin Im); sign-data covariance of a
    normalized Gaussian covariance."""
    re, im = rbar.real, rbar.imag
    if np.any(np.abs(re) > 1) or np.any(np.abs(im) > 1):
        raise ValueError("arcsine law requires |Re|, |Im| <= 1 entrywise")
    out = (2.0 / np.pi) * (np.arcsin(re) + 1j * np.arcsin(im))
    return out


def sine_map(rx: np.ndarray) -> np.ndarray:
    """Entrywise sin(pi/2 Re) + j sin(pi/2 Im); inverse of arcsine_law."""
    return np.sin(np.pi / 2 * rx.real) + 1j * np.sin(np.pi / 2 * rx.imag)


def reconstruct_normalized_covariance(rx_hat: np.ndarray) -> np.ndarray:
    """Consistent estimate of the normalized covariance from the sign-data
    sample covariance (entrywise sine map)."""
    return sine_map(rx_hat)


def model_covariance(scene: SourceScene, geom: ArrayGeometry) -> ModelCovariance:
    a = steering_matrix(geom.sensors, scene.thetas)
    r = _hermitianize(a * scene.powers @ a.conj().T) + scene.noise_var * np.eye(geom.n_sensors)
    pbar = scene.pbar
    rbar = _hermitianize(r / scene.total_power)
    np.fill_diagonal(rbar, 1.0)
    pos_lags = np.asarray(geom.diffs[1:], dtype=float)
    u = (np.exp(1j * np.pi * np.sin(scene.thetas)[None, :] * pos_lags[:, None]) * pbar).sum(axis=1)
    return ModelCovariance(R=r, Rbar=rbar, pbar=pbar, u=u)


def rbar_from_u(u: np.ndarray, sel: SelectionSet) -> np.ndarray:
    """Assemble I + sum u_n L_n + sum u_n^* L_n^T from the positive-lag values."""
    m = sel.geom.n_sensors
    out = np.eye(m, dtype=complex)
    for n in range(1, sel.geom.cardinality):
        out = out + u[n - 1] * sel.L[n] + np.conj(u[n - 1]) * sel.L[n].T
    return out


def offdiag_and_gamma(rbar_like: np.ndarray, sel: SelectionSet):
    """Off-diagonal stack, its real coordinates gamma = F r_ddot, and the
    weights b = 1/sqrt(1 - gamma^2) with |gamma| clipped below 1.

    The imaginary residue of F r_ddot is asserted below 1e-12 (exact for
    Hermitian input up to rounding) and discarded.
    """
    r_ddot = rbar_like.flatten(order="F")[sel.offdiag_vec_idx]
    gamma_c = sel.F @ r_ddot
    resid = np.max(np.abs(gamma_c.imag)) if gamma_c.size else 0.0
    if resid > 1e-12:
        raise ValueError(f"gamma has imaginary residue {resid:.3e}; input not Hermitian?")
    gamma = gamma_c.real
    clipped = np.clip(gamma, -GAMMA_CLIP, GAMMA_CLIP)
    b = 1.0 / np.sqrt(1.0 - clipped**2)
    return r_ddot, gamma, b


def bundle_from_signs(x: np.ndarray, sel: SelectionSet) -> CovarianceBundle:
    """Sample covariance -> sine reconstruction -> off-diagonal coordinates."""
    rx_hat = sample_covariance(x)
    rbar_tilde = reconstruct_normalized_covariance(rx_hat)
    r_ddot, gamma, b = offdiag_and_gamma(rbar_tilde, sel)
    return CovarianceBundle(
        Rx_hat=rx_hat, Rbar_tilde=rbar_tilde, r_ddot=r_ddot, gamma=gamma, b=b
    )
