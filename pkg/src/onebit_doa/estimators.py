"""Co-array MUSIC estimators for one-bit and unquantized snapshots.

The enhanced estimator fits the normalized covariance's free parameters by a
weighted least-squares projection of the reconstructed off-diagonal entries
before augmentation and MUSIC; the baselines skip the fit (one-bit) or use
the unquantized sample covariance (infinite-bit reference).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .covariance import CovarianceBundle, bundle_from_signs
from .geometry import ArrayGeometry, SelectionSet, selection_matrices, steering_matrix
from .moments import SigmaMatrix, sigma_matrix, sigma_monte_carlo


class IllConditionedError(RuntimeError):
    """Normal matrix of the weighted fit is numerically singular."""

    def __init__(self, cond: float):
        super().__init__(f"weighted least-squares normal matrix condition number {cond:.3e}")
        self.cond = cond


class IdentifiabilityError(ValueError):
    """More sources requested than the co-array can support."""


@dataclass(frozen=True)
class PhiEstimate:
    """Fitted real parameters of the normalized covariance and the weight used."""

    phi: np.ndarray   # length 2D-2, [Re u; Im u]
    W: np.ndarray     # weighting actually applied in the fit


@dataclass(frozen=True)
class DoaEstimate:
    thetas_hat: np.ndarray          # K ascending angles, radians
    method: str                     # "eocab" | "ocab" | "icab"
    spectrum: tuple[np.ndarray, np.ndarray] | None = None  # (grid, pseudo-spectrum)
    peak_fallback: bool = False     # fewer than K local maxima; largest values used


@dataclass
class EstimatorOptions:
    """Knobs shared by the estimator pipelines.

    The default grid covers [-90, 90] degrees at 0.005 deg with parabolic
    peak refinement, which resolves well below the grid step.
    """

    grid_step_deg: float = 0.005
    sigma_mode: str = "analytic"          # "analytic" | "monte_carlo"
    sigma_quad_order: int = 24
    sigma_mc_trials: int = 50_000
    ridge_cond: float = 1e12
    ridge_eps: float = 1e-8
    store_spectrum: bool = False
    _grid: np.ndarray | None = field(default=None, repr=False)
    _steering: dict = field(default_factory=dict, repr=False)

    def grid(self) -> np.ndarray:
        if self._grid is None:
            n = int(round(180.0 / self.grid_step_deg)) + 1
            self._grid = np.deg2rad(np.linspace(-90.0, 90.0, n))
        return self._grid

    def steering_on_grid(self, v: int) -> np.ndarray:
        if v not in self._steering:
            self._steering[v] = steering_matrix(np.arange(v), self.grid())
        return self._steering[v]


@lru_cache(maxsize=16)
def cached_selection(geom: ArrayGeometry) -> SelectionSet:
    return selection_matrices(geom)


def _regularized_inverse_weight(sel: SelectionSet, sigma: np.ndarray, b: np.ndarray,
                                ridge_cond: float, ridge_eps: float) -> np.ndarray:
    """W = F^H diag(b) F^{-H} Sigma^{-1} F^{-1} diag(b) F, using F^{-1} = 2 F^H.

    With S = F^H diag(b) F (Hermitian) this is W = 4 S Sigma^{-1} S.  A ridge
    proportional to the mean eigenvalue is added when Sigma is numerically
    singular.
    """
    s_b = (sel.F.conj().T * b) @ sel.F
    cond = np.linalg.cond(sigma)
    if not np.isfinite(cond) or cond > ridge_cond:
        p = sigma.shape[0]
        sigma = sigma + ridge_eps * (np.trace(sigma).real / p) * np.eye(p)
    x = np.linalg.solve(sigma, s_b)
    w = 4.0 * (s_b @ x)
    return 0.5 * (w + w.conj().T)


def enhanced_phi(
    bundle: CovarianceBundle,
    sigma: SigmaMatrix,
    sel: SelectionSet,
    w_override: np.ndarray | None = None,
    ridge_cond: float = 1e12,
    ridge_eps: float = 1e-8,
) -> PhiEstimate:
    """Closed-form weighted least-squares fit of the covariance parameters.

    Solves phi_hat = Psi^{-1} (Jbar^H W Jbar)^{-1} Jbar^H W r_ddot with the
    asymptotically optimal weight evaluated at the reconstructed covariance.
    `w_override` substitutes the weight (identity recovers the unweighted
    projection used by the baseline's analysis).
    """
    if w_override is not None:
        w = w_override
    else:
        w = _regularized_inverse_weight(sel, sigma.Sigma, bundle.b, ridge_cond, ridge_eps)
    jbar = sel.Jbar
    a = jbar.T @ w @ jbar  # Jbar is real binary: .T == .conj().T
    cond = np.linalg.cond(a)
    if not np.isfinite(cond) or cond > 1e14:
        raise IllConditionedError(cond)
    c = np.linalg.solve(a, jbar.T @ (w @ bundle.r_ddot))
    phi = np.linalg.solve(sel.Psi, c)
    scale = max(np.max(np.abs(phi.real)), 1e-30)
    if np.max(np.abs(phi.imag)) > 1e-8 * scale:
        raise AssertionError(
            f"parameter fit has imaginary residue {np.max(np.abs(phi.imag)):.3e}"
        )
    return PhiEstimate(phi=phi.real, W=w)


def rebuild_rbar(phi: PhiEstimate | np.ndarray, sel: SelectionSet) -> np.ndarray:
    """vec of the structured normalized covariance implied by the fitted
    parameters: unit diagonal, u_n at positive lags, conjugates mirrored."""
    vals = phi.phi if isinstance(phi, PhiEstimate) else np.asarray(phi, dtype=float)
    d_card = sel.geom.cardinality
    u = vals[: d_card - 1] + 1j * vals[d_card - 1 :]
    coef = np.zeros(2 * d_card - 1, dtype=complex)
    coef[d_card - 1] = 1.0
    coef[d_card:] = u
    coef[: d_card - 1] = np.conj(u)[::-1]
    return sel.J @ coef


def augmented_covariance(rbar_vec: np.ndarray, sel: SelectionSet) -> np.ndarray:
    """v x v augmented covariance from per-lag averages of a vec'd covariance."""
    z = sel.J_pinv @ rbar_vec
    v = sel.geom.ula_segment
    d_card = sel.geom.cardinality
    cols = [z[d_card - 1 - c : d_card - 1 - c + v] for c in range(v)]
    return np.stack(cols, axis=1)


def _refine_peak(grid: np.ndarray, logp: np.ndarray, idx: int) -> float:
    if idx <= 0 or idx >= grid.size - 1:
        return float(grid[idx])
    y1, y2, y3 = logp[idx - 1], logp[idx], logp[idx + 1]
    denom = y1 - 2 * y2 + y3
    if denom >= 0:
        return float(grid[idx])
    delta = 0.5 * (y1 - y3) / denom
    delta = float(np.clip(delta, -0.5, 0.5))
    return float(grid[idx] + delta * (grid[idx + 1] - grid[idx]))


def music(
    rv: np.ndarray,
    k: int,
    grid: np.ndarray,
    a_grid: np.ndarray | None = None,
    method: str = "music",
    store_spectrum: bool = False,
) -> DoaEstimate:
    """MUSIC on a v x v augmented covariance: Hermitian eigen-decomposition,
    noise subspace from the v-k smallest eigenvalues, pseudo-spectrum peaks
    refined by local parabolic interpolation."""
    v = rv.shape[0]
    if k >= v:
        raise IdentifiabilityError(f"K={k} sources need K <= v-1 = {v - 1}")
    rv = 0.5 * (rv + rv.conj().T)
    _, vecs = np.linalg.eigh(rv)
    u_n = vecs[:, : v - k]
    if a_grid is None:
        a_grid = steering_matrix(np.arange(v), grid)
    proj = u_n.conj().T @ a_grid
    denom = np.einsum("ij,ij->j", proj.conj(), proj).real
    denom = np.maximum(denom, 1e-300)
    pseudo = 1.0 / denom
    interior = (pseudo[1:-1] > pseudo[:-2]) & (pseudo[1:-1] > pseudo[2:])
    peaks = np.flatnonzero(interior) + 1
    fallback = peaks.size < k
    if fallback:
        order = np.argsort(pseudo)[::-1]
        chosen = order[:k]
    else:
        chosen = peaks[np.argsort(pseudo[peaks])[::-1][:k]]
    logp = np.log(pseudo)
    thetas = np.sort([_refine_peak(grid, logp, int(i)) for i in chosen])
    spectrum = (grid, pseudo) if store_spectrum else None
    return DoaEstimate(
        thetas_hat=np.asarray(thetas),
        method=method,
        spectrum=spectrum,
        peak_fallback=fallback,
    )


def eocab_music(
    x: np.ndarray,
    k: int,
    geom: ArrayGeometry,
    opts: EstimatorOptions | None = None,
    sel: SelectionSet | None = None,
    rng: np.random.Generator | None = None,
) -> DoaEstimate:
    """Enhanced one-bit co-array MUSIC: sample covariance of the sign data,
    sine reconstruction, plug-in asymptotic weighting, weighted fit of the
    covariance parameters, augmentation, then MUSIC."""
    opts = opts or EstimatorOptions()
    sel = sel or cached_selection(geom)
    if k >= geom.ula_segment:
        raise IdentifiabilityError(f"K={k} needs K <= v-1 = {geom.ula_segment - 1}")
    bundle = bundle_from_signs(x, sel)
    if opts.sigma_mode == "analytic":
        sig = sigma_matrix(bundle.Rbar_tilde, sel, quad_order=opts.sigma_quad_order)
    elif opts.sigma_mode == "monte_carlo":
        if rng is None:
            raise ValueError("monte_carlo sigma mode needs an rng")
        sig = sigma_monte_carlo(bundle.Rbar_tilde, opts.sigma_mc_trials, rng)
    else:
        raise ValueError(f"unknown sigma mode {opts.sigma_mode!r}")
    phi = enhanced_phi(bundle, sig, sel, ridge_cond=opts.ridge_cond, ridge_eps=opts.ridge_eps)
    rbar_vec = rebuild_rbar(phi, sel)
    rv = augmented_covariance(rbar_vec, sel)
    return music(
        rv, k, opts.grid(), opts.steering_on_grid(geom.ula_segment),
        method="eocab", store_spectrum=opts.store_spectrum,
    )


def baseline_music(
    inp: np.ndarray,
    k: int,
    geom: ArrayGeometry,
    mode: str,
    opts: EstimatorOptions | None = None,
    sel: SelectionSet | None = None,
) -> DoaEstimate:
    """Baselines: "ocab" works on the sine-reconstructed covariance of sign
    data directly; "icab" on the unquantized sample covariance normalized by
    its mean diagonal power."""
    opts = opts or EstimatorOptions()
    sel = sel or cached_selection(geom)
    if k >= geom.ula_segment:
        raise IdentifiabilityError(f"K={k} needs K <= v-1 = {geom.ula_segment - 1}")
    if mode == "ocab":
        bundle = bundle_from_signs(inp, sel)
        target = bundle.Rbar_tilde
    elif mode == "icab":
        n = inp.shape[1]
        ry = inp @ inp.conj().T / n
        ry = 0.5 * (ry + ry.conj().T)
        target = ry / (np.trace(ry).real / geom.n_sensors)
    else:
        raise ValueError(f"unknown baseline mode {mode!r}")
    rv = augmented_covariance(target.flatten(order="F"), sel)
    return music(
        rv, k, opts.grid(), opts.steering_on_grid(geom.ula_segment),
        method=mode, store_spectrum=opts.store_spectrum,
    )
