"""Worst-case Fisher information, pessimistic one-bit CRB, infinite-bit CRB,
identifiability rank tests and high-SNR limits.

The one-bit bound treats the sign data as Gaussian with the arcsine-law
covariance, which upper-bounds the true CRB among distributions with that
covariance.  All angle arguments are radians; CRBs are returned in radians^2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import ArrayGeometry, rank_with_tolerance, steering_matrix
from .signal import SourceScene
from .estimators import cached_selection

RANK_RTOL = 1e-10


@dataclass(frozen=True)
class FimComponents:
    """Per-lag weight vectors and Jacobian factors of the worst-case FIM."""

    h: np.ndarray          # 2D-1, arcsine derivative weights of Re, 0 at lag 0
    hbar: np.ndarray       # same for Im
    G: np.ndarray          # (2D-1) x K, DoA block (includes j*pi and powers)
    V: np.ndarray          # (2D-1) x K, power block
    Omega: np.ndarray      # (2D-1) x K, G without the j*pi*diag(d)*Phi*diag(pbar) factors
    Phi_theta: np.ndarray  # cos(theta_k)


@dataclass(frozen=True)
class CrbReport:
    crb: np.ndarray            # K x K, radians^2 (meaningful when valid)
    fim_condition: float
    valid: bool
    kind: str                  # onebit_pessimistic | infinite_bit | onebit_highsnr_limit


@dataclass(frozen=True)
class IdentifiabilityVerdict:
    upsilon_rank: int
    full_column_rank: bool
    sufficient_identifiable: bool      # K <= v-1
    sufficient_unidentifiable: bool    # K >= D


def _asin_entrywise(rbar: np.ndarray) -> np.ndarray:
    return np.arcsin(np.clip(rbar.real, -1, 1)) + 1j * np.arcsin(np.clip(rbar.imag, -1, 1))


def _rbar_from_pbar(thetas: np.ndarray, pbar: np.ndarray, geom: ArrayGeometry) -> np.ndarray:
    a = steering_matrix(geom.sensors, thetas)
    r = (a * pbar) @ a.conj().T + (1.0 - pbar.sum()) * np.eye(geom.n_sensors)
    r = 0.5 * (r + r.conj().T)
    np.fill_diagonal(r, 1.0)
    return r


def fim_components(thetas: np.ndarray, pbar: np.ndarray, geom: ArrayGeometry) -> FimComponents:
    """Jacobian factors of the arcsine-law covariance.

    The lag-0 entries of h and hbar are set to zero: the unit diagonal of the
    normalized covariance is constant in every parameter, so its derivative
    vanishes there (the would-be arcsine weight multiplies an exactly zero
    sensitivity).
    """
    lags = np.asarray(geom.lags, dtype=float)
    d_card = geom.cardinality
    u_full = (np.exp(1j * np.pi * np.sin(thetas)[None, :] * lags[:, None]) * pbar).sum(axis=1)
    h = np.zeros(lags.size)
    hbar = np.zeros(lags.size)
    mask = np.arange(lags.size) != d_card - 1
    h[mask] = 1.0 / np.sqrt(1.0 - u_full.real[mask] ** 2)
    hbar[mask] = 1.0 / np.sqrt(1.0 - u_full.imag[mask] ** 2)
    a_d = steering_matrix(lags, thetas)
    omega = hbar[:, None] * a_d.real + 1j * h[:, None] * a_d.imag
    g = 1j * np.pi * lags[:, None] * omega * (np.cos(thetas) * pbar)[None, :]
    v = h[:, None] * a_d.real + 1j * hbar[:, None] * a_d.imag
    return FimComponents(h=h, hbar=hbar, G=g, V=v, Omega=omega, Phi_theta=np.cos(thetas))


def _metric_matrix(rbar: np.ndarray, geom: ArrayGeometry, arcsine: bool) -> np.ndarray:
    """J^H (S^T kron S)^{-1} J with S the (arcsine-law or plain) covariance."""
    sel = cached_selection(geom)
    s = _asin_entrywise(rbar) if arcsine else rbar
    s_inv = np.linalg.inv(s)
    kron = np.kron(s_inv.T, s_inv)
    m = sel.J.T @ kron @ sel.J
    return 0.5 * (m + m.conj().T)


def _worst_case_fim_from_pbar(
    thetas: np.ndarray, pbar: np.ndarray, geom: ArrayGeometry, n_snapshots: int
) -> np.ndarray:
    rbar = _rbar_from_pbar(thetas, pbar, geom)
    comp = fim_components(thetas, pbar, geom)
    m = _metric_matrix(rbar, geom, arcsine=True)
    b = np.concatenate([comp.G, comp.V], axis=1)
    fim = n_snapshots * (b.conj().T @ m @ b)
    resid = np.max(np.abs(fim.imag))
    scale = max(1.0, np.max(np.abs(fim.real)))
    if resid > 1e-9 * scale:
        raise AssertionError(f"FIM imaginary residue {resid:.3e}")
    return 0.5 * (fim.real + fim.real.T)


def worst_case_fim(scene: SourceScene, geom: ArrayGeometry, n_snapshots: int) -> np.ndarray:
    """Gaussian-surrogate Fisher information of (theta, pbar) from sign data.

    2K x 2K real symmetric, linear in the snapshot count.  The arcsine-chain
    scale factors cancel against the covariance normalization, so the G, V
    factors combine with the arcsine metric without extra 2/pi constants;
    the finite-difference oracle in the tests pins this.
    """
    if n_snapshots < 1:
        raise ValueError("need at least one snapshot")
    return _worst_case_fim_from_pbar(scene.thetas, scene.pbar, geom, n_snapshots)


def _matrix_sqrt_psd(a: np.ndarray, clamp: float = 1e-14) -> np.ndarray:
    w, v = np.linalg.eigh(0.5 * (a + a.conj().T))
    w = np.clip(w, clamp * np.max(np.abs(w)), None)
    return (v * np.sqrt(w)) @ v.conj().T


def _perp_projector(a: np.ndarray) -> np.ndarray:
    q, _ = np.linalg.qr(a)
    return np.eye(a.shape[0]) - q @ q.conj().T


def _crb_projector_route(
    thetas: np.ndarray, pbar: np.ndarray, geom: ArrayGeometry, n_snapshots: int, kind: str
) -> CrbReport:
    rbar = _rbar_from_pbar(thetas, pbar, geom)
    comp = fim_components(thetas, pbar, geom)
    k = thetas.size
    fim = _worst_case_fim_from_pbar(thetas, pbar, geom, n_snapshots)
    cond = float(np.linalg.cond(fim))
    # Validity follows the rank equivalence: the FIM is nonsingular exactly
    # when the stacked Jacobian factor has full column rank.
    lags = np.asarray(geom.lags, dtype=float)
    upsilon = np.concatenate([lags[:, None] * comp.Omega, comp.V], axis=1)
    if rank_with_tolerance(upsilon, RANK_RTOL) < 2 * k:
        return CrbReport(crb=np.full((k, k), np.nan), fim_condition=cond, valid=False, kind=kind)
    m = _metric_matrix(rbar, geom, arcsine=True)
    m_half = _matrix_sqrt_psd(m)
    q = m_half @ (lags[:, None] * comp.Omega * (comp.Phi_theta * pbar)[None, :])
    proj = _perp_projector(m_half @ comp.V)
    core = q.conj().T @ proj @ q
    crb = np.linalg.inv(0.5 * (core + core.conj().T)).real / (n_snapshots * np.pi**2)
    crb = 0.5 * (crb + crb.T)
    if not np.all(np.isfinite(crb)):
        return CrbReport(crb=crb, fim_condition=cond, valid=False, kind=kind)
    return CrbReport(crb=crb, fim_condition=cond, valid=True, kind=kind)


def crb_onebit_pessimistic(scene: SourceScene, geom: ArrayGeometry, n_snapshots: int) -> CrbReport:
    """Pessimistic one-bit CRB: the DoA block of the worst-case FIM inverse,
    in its projector closed form CRB = (Q^H P_perp Q)^{-1} / (N pi^2)."""
    return _crb_projector_route(scene.thetas, scene.pbar, geom, n_snapshots, "onebit_pessimistic")


def crb_from_fim_block(fim: np.ndarray, k: int) -> np.ndarray:
    """DoA block of the FIM inverse via the Schur complement; the second route
    for cross-checking the projector formula."""
    f_tt = fim[:k, :k]
    f_tp = fim[:k, k:]
    f_pp = fim[k:, k:]
    schur = f_tt - f_tp @ np.linalg.solve(f_pp, f_tp.T)
    return np.linalg.inv(schur)


def crb_infinite(scene: SourceScene, geom: ArrayGeometry, n_snapshots: int) -> CrbReport:
    """CRB of DoA estimation from unquantized snapshots, same projector shape
    with the plain covariance metric and the nuisance block [A_d e]."""
    thetas, pbar = scene.thetas, scene.pbar
    rbar = _rbar_from_pbar(thetas, pbar, geom)
    m = _metric_matrix(rbar, geom, arcsine=False)
    m_half = _matrix_sqrt_psd(m)
    lags = np.asarray(geom.lags, dtype=float)
    a_d = steering_matrix(lags, thetas)
    d_card = geom.cardinality
    e = np.zeros((2 * d_card - 1, 1))
    e[d_card - 1, 0] = 1.0
    k = thetas.size
    # Nonsingularity of the unquantized-model FIM: the stacked Jacobian
    # factor [diag(d) A_d, A_d, e] must have its full 2K+1 column rank.
    upsilon = np.concatenate([lags[:, None] * a_d, a_d, e], axis=1)
    q = m_half @ (lags[:, None] * a_d * (np.cos(thetas) * pbar)[None, :])
    proj = _perp_projector(m_half @ np.concatenate([a_d, e], axis=1))
    core = q.conj().T @ proj @ q
    cond = float(np.linalg.cond(core))
    if rank_with_tolerance(upsilon, RANK_RTOL) < 2 * k + 1:
        return CrbReport(
            crb=np.full((k, k), np.nan), fim_condition=cond, valid=False, kind="infinite_bit"
        )
    crb = np.linalg.inv(0.5 * (core + core.conj().T)).real / (n_snapshots * np.pi**2)
    if not np.all(np.isfinite(crb)):
        return CrbReport(crb=crb, fim_condition=cond, valid=False, kind="infinite_bit")
    return CrbReport(crb=0.5 * (crb + crb.T), fim_condition=cond, valid=True, kind="infinite_bit")


def identifiability_test(scene: SourceScene, geom: ArrayGeometry) -> IdentifiabilityVerdict:
    """Rank test of the stacked Jacobian factor [diag(d) Omega, V] plus the
    two counting conditions (K <= v-1 identifiable, K >= D unidentifiable)."""
    comp = fim_components(scene.thetas, scene.pbar, geom)
    lags = np.asarray(geom.lags, dtype=float)
    upsilon = np.concatenate([lags[:, None] * comp.Omega, comp.V], axis=1)
    rank = rank_with_tolerance(upsilon, RANK_RTOL)
    k = scene.n_sources
    return IdentifiabilityVerdict(
        upsilon_rank=rank,
        full_column_rank=rank == 2 * k,
        sufficient_identifiable=k <= geom.ula_segment - 1,
        sufficient_unidentifiable=k >= geom.cardinality,
    )


def high_snr_crb_limit(thetas, k: int, geom: ArrayGeometry, n_snapshots: int) -> CrbReport:
    """Equal-power infinite-SNR limit of the pessimistic one-bit CRB: the
    normalized powers converge to 1/K, so the bound is evaluated there and is
    independent of any noise variance."""
    th = np.atleast_1d(np.asarray(thetas, dtype=float))
    if th.size != k:
        raise ValueError("thetas must list exactly K angles")
    pbar = np.full(k, 1.0 / k)
    return _crb_projector_route(th, pbar, geom, n_snapshots, "onebit_highsnr_limit")
