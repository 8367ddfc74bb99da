"""Closed-form asymptotic error theory for the one-bit co-array estimators
and the Chebyshev-type resolution-probability lower bound."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .covariance import model_covariance, offdiag_and_gamma
from .estimators import cached_selection, _regularized_inverse_weight
from .geometry import ArrayGeometry, rank_with_tolerance, steering_matrix
from .moments import gamma_matrix, sigma_matrix
from .signal import SourceScene


class DegenerateSceneError(ValueError):
    """Virtual-array steering matrix is rank deficient (coincident DoAs)."""


@dataclass(frozen=True)
class AsymptoticErrorModel:
    """Asymptotic DoA error covariance (radians^2) and its ingredients."""

    E: np.ndarray            # K x K error covariance
    mse: np.ndarray          # diagonal, per-source asymptotic MSE
    mode: str                # "eocab" | "ocab"
    n_snapshots: int
    qs: np.ndarray           # per-source q_k factors
    W: np.ndarray            # weight used (identity for ocab)
    Gamma: np.ndarray        # asymptotic covariance factor of the entries


@dataclass(frozen=True)
class ResolutionBound:
    """Lower bound on the probability of resolving two sources at a given
    separation; `lower_bound` is clamped at zero for reporting, `raw` keeps
    the unclamped value."""

    delta_theta: float
    lower_bound: float
    raw: float


def _error_model(
    thetas: np.ndarray,
    pbar: np.ndarray,
    rbar: np.ndarray,
    geom: ArrayGeometry,
    n_snapshots: int,
    mode: str,
    quad_order: int,
    w_override: np.ndarray | None = None,
) -> AsymptoticErrorModel:
    if mode not in ("eocab", "ocab"):
        raise ValueError(f"no asymptotic error model for mode {mode!r}")
    sel = cached_selection(geom)
    k = thetas.size
    v = geom.ula_segment
    if k > v - 1:
        raise ValueError(f"K={k} needs K <= v-1 = {v - 1}")

    a_v = steering_matrix(np.arange(v), thetas)
    if rank_with_tolerance(a_v, 1e-10) < k:
        raise DegenerateSceneError("coincident DoAs make the virtual array rank deficient")

    r_ddot, gamma, b = offdiag_and_gamma(rbar, sel)
    sig = sigma_matrix(rbar, sel, quad_order=quad_order)
    gam = gamma_matrix(sig, r_ddot).Gamma
    p_off = sel.n_offdiag
    if w_override is not None:
        w = w_override
    elif mode == "eocab":
        w = _regularized_inverse_weight(sel, sig.Sigma, b, 1e12, 1e-8)
    else:
        w = np.eye(p_off, dtype=complex)

    jbar = sel.Jbar
    normal = jbar.T @ w @ jbar
    bmat = np.linalg.solve(normal, jbar.T @ w)        # (2D-2) x P
    inner = bmat @ gam @ bmat.conj().T
    core = sel.Tbar @ inner @ sel.Tbar.conj().T       # v^2 x v^2

    q_r, _ = np.linalg.qr(a_v)
    proj_perp = np.eye(v) - q_r @ q_r.conj().T
    dv = np.arange(v, dtype=float)
    pinv_t = np.linalg.pinv(a_v).T                    # v x K, columns alpha_k
    e_mat = np.zeros((k, k))
    qs = np.zeros(k)
    zs = []
    for i in range(k):
        beta = proj_perp @ (dv * a_v[:, i])
        qs[i] = ((dv * a_v[:, i]).conj() @ beta).real
        zs.append(np.kron(beta, pinv_t[:, i]))
    cos_t = np.cos(thetas)
    for i in range(k):
        zi_core = zs[i] @ core
        for j in range(i, k):
            val = (zi_core @ np.conj(zs[j])).real
            denom = n_snapshots * np.pi**2 * pbar[i] * pbar[j] * qs[i] * qs[j] * cos_t[i] * cos_t[j]
            e_mat[i, j] = e_mat[j, i] = val / denom
    return AsymptoticErrorModel(
        E=e_mat, mse=np.diag(e_mat).copy(), mode=mode, n_snapshots=n_snapshots,
        qs=qs, W=w, Gamma=gam,
    )


def asymptotic_error_covariance(
    scene: SourceScene,
    geom: ArrayGeometry,
    n_snapshots: int,
    mode: str = "eocab",
    quad_order: int = 48,
    w_override: np.ndarray | None = None,
) -> AsymptoticErrorModel:
    """Asymptotic DoA error covariance at the true scene parameters.

    mode="ocab" is the unweighted variant (weight forced to identity); the
    error depends on the scene only through the per-source SNRs.
    """
    mc = model_covariance(scene, geom)
    return _error_model(
        scene.thetas, scene.pbar, mc.Rbar, geom, n_snapshots, mode, quad_order, w_override
    )


def high_snr_mse_limit(
    thetas, k: int, geom: ArrayGeometry, n_snapshots: int, mode: str = "eocab",
    quad_order: int = 48,
) -> np.ndarray:
    """Equal-power infinite-SNR limit of the per-source asymptotic MSE.

    With equal powers the normalized powers converge to 1/K and the noise
    share 1 - sum(pbar) vanishes, so the limiting normalized covariance is
    (1/K) A A^H (unit diagonal).  The result is strictly positive.
    """
    th = np.atleast_1d(np.asarray(thetas, dtype=float))
    if th.size != k:
        raise ValueError("thetas must list exactly K angles")
    a = steering_matrix(geom.sensors, th)
    rbar = (a @ a.conj().T) / k
    rbar = 0.5 * (rbar + rbar.conj().T)
    np.fill_diagonal(rbar, 1.0)
    pbar = np.full(k, 1.0 / k)
    model = _error_model(th, pbar, rbar, geom, n_snapshots, mode, quad_order)
    return model.mse


def resolution_lower_bound(
    model: AsymptoticErrorModel, k1: int, k2: int, delta_theta: float
) -> ResolutionBound:
    """Two-dimensional Chebyshev lower bound on the resolution probability of
    sources k1, k2 at separation delta_theta (radians)."""
    if k1 == k2:
        raise ValueError("resolution bound needs two distinct sources")
    e1 = float(model.mse[k1])
    e2 = float(model.mse[k2])
    e12 = float(model.E[k1, k2])
    disc = e1**2 + e2**2 + 2 * e1 * e2 - 4 * e12**2
    if disc < 0:
        raise ValueError(
            f"negative discriminant {disc:.3e} (E1={e1:.3e}, E2={e2:.3e}, E12={e12:.3e})"
        )
    raw = float(1.0 - 2.0 * (e1 + e2) / delta_theta**2 + 2.0 * np.sqrt(disc) / delta_theta**2)
    return ResolutionBound(delta_theta=float(delta_theta), lower_bound=max(0.0, raw), raw=raw)
