"""Second- and fourth-order moments of complex sign data.

The asymptotic covariance of the off-diagonal one-bit sample covariance,

    Sigma = (pi^2 N / 4) E{(r - E r)(r - E r)^H},   r = offdiag((1/N) X X^H),

reduces to fourth-order moments of the eight real sign variables
sgn(Re y_m), sgn(Im y_m).  For a zero-mean quadrivariate Gaussian z with
correlation matrix C, the quartic sign moment

    E{sgn z1 sgn z2 sgn z3 sgn z4} = sum_{s in {-1,1}^4} (prod s) P(s o z > 0)

is evaluated deterministically.  Plackett's identity reduces each orthant
probability to closed-form terms plus six smooth one-dimensional integrals;
in the signed sum the closed-form terms cancel exactly, leaving

    E = (4/pi^2) sum_{i<j} int_0^{asin(rho_ij)} asin(rho_{kl.ij}(psi)) dpsi,

where rho_{kl.ij}(psi) is the conditional correlation of the complementary
pair given z_i = z_j = 0 along the path C(t) = (1-t) I + t C, t = sin(psi)/rho_ij.
Both routes are implemented; the collapsed form is the fast path, the orthant
sum is kept as the defining identity for cross-validation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.integrate import quad

from .geometry import SelectionSet

# (i, j) conditioning pair and (k, l) complementary pair, slot indices 0..3.
_PAIRS = [
    (0, 1, 2, 3),
    (0, 2, 1, 3),
    (0, 3, 1, 2),
    (1, 2, 0, 3),
    (1, 3, 0, 2),
    (2, 3, 0, 1),
]

_LEGGAUSS_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


@dataclass(frozen=True)
class SigmaMatrix:
    """Asymptotic covariance of the off-diagonal one-bit sample covariance."""

    Sigma: np.ndarray
    provenance: str                  # "analytic" | "monte_carlo"
    mc_trials: int | None = None


@dataclass(frozen=True)
class GammaMatrix:
    """Covariance of the asymptotic distribution of the sine-reconstructed
    off-diagonal entries (the N-free factor)."""

    Gamma: np.ndarray


def sign_moment2(rho):
    """E{sgn(z1) sgn(z2)} = (2/pi) arcsin(rho) for unit-variance jointly
    Gaussian reals (scalar arcsine law)."""
    r = np.asarray(rho, dtype=float)
    if np.any(np.abs(r) > 1 + 1e-12):
        raise ValueError("correlation outside [-1, 1]")
    out = (2.0 / np.pi) * np.arcsin(np.clip(r, -1.0, 1.0))
    return float(out) if np.isscalar(rho) else out


def _validate_corr4(corr: np.ndarray) -> np.ndarray:
    c = np.asarray(corr, dtype=float)
    if c.shape != (4, 4):
        raise ValueError("expected a 4x4 correlation matrix")
    c = 0.5 * (c + c.T)
    if np.max(np.abs(np.diag(c) - 1.0)) > 1e-9:
        raise ValueError("correlation matrix must have unit diagonal")
    if np.linalg.eigvalsh(c)[0] < -1e-9:
        raise ValueError("correlation matrix must be positive semidefinite")
    return c


def _cond_corr_path(c: np.ndarray, pair, psi):
    """Conditional correlation of (z_k, z_l) given z_i = z_j = 0 under
    C(t) = (1-t)I + tC at t = sin(psi)/rho_ij."""
    i, j, k, l = pair
    rho_ij = c[i, j]
    s = np.sin(psi)
    cs = np.cos(psi)
    ratio = s / rho_ij  # = t, bounded by 1 for |psi| <= |asin(rho_ij)|
    f = (ratio / cs) ** 2
    var_k = 1.0 - f * (c[k, i] ** 2 - 2 * s * c[k, i] * c[k, j] + c[k, j] ** 2)
    var_l = 1.0 - f * (c[l, i] ** 2 - 2 * s * c[l, i] * c[l, j] + c[l, j] ** 2)
    cov = ratio * c[k, l] - f * (
        c[k, i] * c[l, i] - s * (c[k, i] * c[l, j] + c[k, j] * c[l, i]) + c[k, j] * c[l, j]
    )
    denom = np.sqrt(np.maximum(var_k, 1e-14) * np.maximum(var_l, 1e-14))
    return np.clip(cov / denom, -1.0, 1.0)


def orthant_probability(corr: np.ndarray, abs_tol: float = 1e-8) -> float:
    """P(z > 0 componentwise) for a zero-mean quadrivariate Gaussian.

    Plackett reduction: 1/16 plus pairwise arcsine terms plus one smooth
    1-D integral per variable pair, integrated adaptively.
    """
    c = _validate_corr4(corr)
    p = 1.0 / 16.0
    for pair in _PAIRS:
        i, j, _, _ = pair
        rho = float(np.clip(c[i, j], -1.0, 1.0))
        if rho == 0.0:
            continue
        alpha = np.arcsin(rho)
        p += alpha / (8.0 * np.pi)
        val, _ = quad(
            lambda psi: np.arcsin(_cond_corr_path(c, pair, psi)),
            0.0,
            alpha,
            epsabs=abs_tol / 6.0,
            limit=200,
        )
        p += val / (4.0 * np.pi**2)
    return float(p)


def sign_moment4(corr: np.ndarray, method: str = "plackett") -> float:
    """E{sgn z1 sgn z2 sgn z3 sgn z4} for a zero-mean quadrivariate Gaussian.

    Equals the signed sum of the 16 orthant probabilities
    sum_s (prod s) P(s o z > 0).  method="plackett" evaluates the collapsed
    form of that sum (the closed-form orthant terms cancel); method="orthant"
    evaluates the sum literally.  Both are deterministic quadratures accurate
    to ~1e-6 absolute.
    """
    c = _validate_corr4(corr)
    if method == "plackett":
        return float(_quartic_batch(_corr_to_six(c[None, :, :]), order=96)[0])
    if method == "orthant":
        total = 0.0
        for bits in range(16):
            s = np.array([1 if bits & (1 << b) else -1 for b in range(4)], dtype=float)
            total += np.prod(s) * orthant_probability(np.outer(s, s) * c)
        return float(total)
    raise ValueError(f"unknown method {method!r}")


def _corr_to_six(c: np.ndarray) -> np.ndarray:
    """(n,4,4) correlation stack -> (n,6) upper-triangle columns."""
    iu = np.triu_indices(4, k=1)
    return c[:, iu[0], iu[1]]


_SIX_COL = {(0, 1): 0, (0, 2): 1, (0, 3): 2, (1, 2): 3, (1, 3): 4, (2, 3): 5}

# Per conditioning pair: six-vector columns (ij, ki, kj, li, lj, kl).
_PAIR_COLS = np.array(
    [
        [0, 1, 3, 2, 4, 5],
        [1, 0, 3, 2, 5, 4],
        [2, 0, 4, 1, 5, 3],
        [3, 0, 1, 4, 5, 2],
        [4, 0, 2, 3, 5, 1],
        [5, 1, 2, 3, 4, 0],
    ],
    dtype=np.int64,
)


def _col(c6: np.ndarray, a: int, b: int) -> np.ndarray:
    return c6[:, _SIX_COL[(min(a, b), max(a, b))]]


def _quartic_batch(c6: np.ndarray, order: int = 48) -> np.ndarray:
    """Vectorized quartic sign moments for a batch of correlation 6-vectors
    (columns rho_01, rho_02, rho_03, rho_12, rho_13, rho_23).

    Gauss-Legendre quadrature of the collapsed Plackett form; `order` nodes
    per pair term.
    """
    if order not in _LEGGAUSS_CACHE:
        _LEGGAUSS_CACHE[order] = leggauss(order)
    nodes, weights = _LEGGAUSS_CACHE[order]
    n = c6.shape[0]
    total = np.zeros(n)
    for i, j, k, l in _PAIRS:
        rho = np.clip(_col(c6, i, j), -1.0, 1.0)
        active = rho != 0.0
        if not np.any(active):
            continue
        r = rho[active]
        rki = _col(c6, k, i)[active]
        rkj = _col(c6, k, j)[active]
        rli = _col(c6, l, i)[active]
        rlj = _col(c6, l, j)[active]
        rkl = _col(c6, k, l)[active]
        alpha = np.arcsin(r)[:, None]
        psi = 0.5 * alpha * (nodes + 1.0)[None, :]
        s = np.sin(psi)
        ratio = s / r[:, None]
        f = (ratio / np.cos(psi)) ** 2
        var_k = 1.0 - f * (rki[:, None] ** 2 - 2 * s * (rki * rkj)[:, None] + rkj[:, None] ** 2)
        var_l = 1.0 - f * (rli[:, None] ** 2 - 2 * s * (rli * rlj)[:, None] + rlj[:, None] ** 2)
        cov = ratio * rkl[:, None] - f * (
            (rki * rli)[:, None] - s * (rki * rlj + rkj * rli)[:, None] + (rkj * rlj)[:, None]
        )
        rho_c = np.clip(cov / np.sqrt(np.maximum(var_k, 1e-14) * np.maximum(var_l, 1e-14)), -1.0, 1.0)
        term = 0.5 * alpha[:, 0] * (np.arcsin(rho_c) @ weights)
        total[active] += term
    return (4.0 / np.pi**2) * total


try:
    from numba import njit as _njit

    @_njit(cache=True)
    def _quartic_kernel(c6, nodes, weights, pair_cols):  # pragma: no cover
        n = c6.shape[0]
        m = nodes.shape[0]
        out = np.zeros(n)
        for t in range(n):
            tot = 0.0
            for pr in range(6):
                rho = c6[t, pair_cols[pr, 0]]
                if rho > 1.0:
                    rho = 1.0
                elif rho < -1.0:
                    rho = -1.0
                if rho == 0.0:
                    continue
                rki = c6[t, pair_cols[pr, 1]]
                rkj = c6[t, pair_cols[pr, 2]]
                rli = c6[t, pair_cols[pr, 3]]
                rlj = c6[t, pair_cols[pr, 4]]
                rkl = c6[t, pair_cols[pr, 5]]
                alpha = np.arcsin(rho)
                acc = 0.0
                for g in range(m):
                    psi = 0.5 * alpha * (nodes[g] + 1.0)
                    s = np.sin(psi)
                    cs = np.cos(psi)
                    ratio = s / rho
                    f = (ratio / cs) ** 2
                    vk = 1.0 - f * (rki * rki - 2.0 * s * rki * rkj + rkj * rkj)
                    vl = 1.0 - f * (rli * rli - 2.0 * s * rli * rlj + rlj * rlj)
                    if vk < 1e-14:
                        vk = 1e-14
                    if vl < 1e-14:
                        vl = 1e-14
                    cv = ratio * rkl - f * (
                        rki * rli - s * (rki * rlj + rkj * rli) + rkj * rlj
                    )
                    rc = cv / np.sqrt(vk * vl)
                    if rc > 1.0:
                        rc = 1.0
                    elif rc < -1.0:
                        rc = -1.0
                    acc += weights[g] * np.arcsin(rc)
                tot += 0.5 * alpha * acc
            out[t] = (4.0 / np.pi**2) * tot
        return out

    def _quartic_batch_fast(c6: np.ndarray, order: int = 48) -> np.ndarray:
        if order not in _LEGGAUSS_CACHE:
            _LEGGAUSS_CACHE[order] = leggauss(order)
        nodes, weights = _LEGGAUSS_CACHE[order]
        return _quartic_kernel(np.ascontiguousarray(c6), nodes, weights, _PAIR_COLS)

except ImportError:  # pragma: no cover
    _quartic_batch_fast = _quartic_batch


# Expansion of E{x_i conj(x_j) conj(x_k) x_l} over the real sign components
# a_m = sgn(Re y_m), b_m = sgn(Im y_m): 16 signed quartic terms, split into
# the real and imaginary parts of the fourth moment.  Slot order (i, j, k, l);
# component 0 = a, 1 = b.
_RE_TERMS = [
    ((0, 0, 0, 0), +1.0),
    ((0, 0, 1, 1), +1.0),
    ((1, 1, 0, 0), +1.0),
    ((1, 1, 1, 1), +1.0),
    ((1, 0, 1, 0), +1.0),
    ((1, 0, 0, 1), -1.0),
    ((0, 1, 1, 0), -1.0),
    ((0, 1, 0, 1), +1.0),
]
_IM_TERMS = [
    ((1, 0, 0, 0), +1.0),
    ((1, 0, 1, 1), +1.0),
    ((0, 1, 0, 0), -1.0),
    ((0, 1, 1, 1), -1.0),
    ((0, 0, 1, 0), -1.0),
    ((0, 0, 0, 1), +1.0),
    ((1, 1, 1, 0), -1.0),
    ((1, 1, 0, 1), +1.0),
]


def _quartic_terms_for_pairs(re_rbar, im_rbar, ii, jj, kk, ll, comps):
    """Correlation 6-vectors and duplicate-slot flags for one component
    pattern over a batch of sensor quadruples."""
    sensors = [ii, jj, kk, ll]
    n = ii.size
    c6 = np.empty((n, 6))
    for (a, b), col in _SIX_COL.items():
        ca, cb = comps[a], comps[b]
        if ca == cb:
            vals = re_rbar[sensors[a], sensors[b]]
        elif ca == 0:
            vals = -im_rbar[sensors[a], sensors[b]]
        else:
            vals = im_rbar[sensors[a], sensors[b]]
        c6[:, col] = vals
    # Identical sign variables (same sensor, same component).  Slots (0,1)
    # and (2,3) always differ (off-diagonal entries), so only cross pairs.
    dup = {}
    for a, b in ((0, 2), (0, 3), (1, 2), (1, 3)):
        if comps[a] == comps[b]:
            dup[(a, b)] = sensors[a] == sensors[b]
        else:
            dup[(a, b)] = np.zeros(n, dtype=bool)
    return c6, dup


def _reduce_quartics(c6, dup):
    """Exact sgn^2 = 1 reductions.

    Returns (values, full_idx, c6_full): `values` holds the reduced moments
    (second-order arcsines or the constant 1) with zeros at the positions
    listed in `full_idx`, which still require quadrature on `c6_full`.
    """
    n = c6.shape[0]
    out = np.zeros(n)
    ndup = np.zeros(n, dtype=int)
    for flags in dup.values():
        ndup += flags
    out[ndup == 2] = 1.0
    one = np.flatnonzero(ndup == 1)
    if one.size:
        rest_rho = np.empty(one.size)
        filled = np.zeros(one.size, dtype=bool)
        for (a, b), flags in dup.items():
            sel = flags[one] & ~filled
            if not np.any(sel):
                continue
            rest = tuple(sorted(set(range(4)) - {a, b}))
            rest_rho[sel] = c6[one[sel], _SIX_COL[rest]]
            filled[sel] = True
        out[one] = (2.0 / np.pi) * np.arcsin(np.clip(rest_rho, -1.0, 1.0))
    full = np.flatnonzero(ndup == 0)
    return out, full, c6[full]


def _dedup_quartic(c6: np.ndarray, order: int) -> np.ndarray:
    """Deduplicate correlation signatures (rounded to 1e-9) before quadrature."""
    if c6.shape[0] == 0:
        return np.zeros(0)
    key = np.round(c6, 9)
    uniq, inverse = np.unique(key, axis=0, return_inverse=True)
    vals = np.empty(uniq.shape[0])
    chunk = 8192
    for start in range(0, uniq.shape[0], chunk):
        stop = min(start + chunk, uniq.shape[0])
        vals[start:stop] = _quartic_batch_fast(uniq[start:stop], order=order)
    return vals[inverse]


def _validate_rbar(rbar: np.ndarray) -> np.ndarray:
    r = np.asarray(rbar, dtype=complex)
    if r.ndim != 2 or r.shape[0] != r.shape[1]:
        raise ValueError("expected a square matrix")
    if np.max(np.abs(np.diag(r) - 1.0)) > 1e-9:
        raise ValueError("normalized covariance must have unit diagonal")
    if np.max(np.abs(r - r.conj().T)) > 1e-9:
        raise ValueError("normalized covariance must be Hermitian")
    return 0.5 * (r + r.conj().T)


def sigma_matrix(rbar: np.ndarray, sel: SelectionSet, quad_order: int = 48) -> SigmaMatrix:
    """Analytic Sigma for a unit-diagonal Hermitian normalized covariance.

    Entry (p, q) is (pi^2/4) [E{x_i x_j^* (x_k x_l^*)^*} - Rx_ij Rx_kl^*] for
    the sensor pairs behind the off-diagonal stack positions, with the fourth
    moments expanded over real/imaginary sign components and evaluated by
    deterministic quadrature (deduplicated by rounded correlation signature).
    """
    r = _validate_rbar(rbar)
    re_r, im_r = r.real, r.imag
    rows, cols = sel.offdiag_rows, sel.offdiag_cols
    p_off = rows.size

    rx = (2.0 / np.pi) * (np.arcsin(np.clip(re_r, -1, 1)) + 1j * np.arcsin(np.clip(im_r, -1, 1)))
    rx_off = rx[rows, cols]

    pu, qu = np.triu_indices(p_off)
    ii, jj = rows[pu], cols[pu]
    kk, ll = rows[qu], cols[qu]

    # Gather the sgn^2-reduced values per term and pool every remaining full
    # quartic across all 16 terms into one deduplicated quadrature batch.
    partials, pending = [], []
    for comps, sign in _RE_TERMS + _IM_TERMS:
        c6, dup = _quartic_terms_for_pairs(re_r, im_r, ii, jj, kk, ll, comps)
        reduced, full_idx, c6_full = _reduce_quartics(c6, dup)
        partials.append(reduced)
        pending.append((full_idx, c6_full))
    all_full = np.concatenate([c for _, c in pending], axis=0)
    all_vals = _dedup_quartic(all_full, quad_order)
    offset = 0
    for reduced, (full_idx, c6_full) in zip(partials, pending):
        reduced[full_idx] = all_vals[offset:offset + c6_full.shape[0]]
        offset += c6_full.shape[0]

    fm_re = np.zeros(pu.size)
    fm_im = np.zeros(pu.size)
    for t, ((comps, sign), reduced) in enumerate(zip(_RE_TERMS + _IM_TERMS, partials)):
        if t < len(_RE_TERMS):
            fm_re += sign * reduced
        else:
            fm_im += sign * reduced
    fourth = 0.25 * (fm_re + 1j * fm_im)

    sigma = np.zeros((p_off, p_off), dtype=complex)
    sigma[pu, qu] = (np.pi**2 / 4.0) * (fourth - rx_off[pu] * np.conj(rx_off[qu]))
    sigma = sigma + np.triu(sigma, k=1).conj().T
    _assert_hermitian(sigma)
    return SigmaMatrix(Sigma=sigma, provenance="analytic")


def _assert_hermitian(a: np.ndarray, tol: float = 1e-10) -> None:
    resid = np.max(np.abs(a - a.conj().T))
    scale = max(1.0, np.max(np.abs(a)))
    if resid > tol * scale:
        raise AssertionError(f"matrix not Hermitian: residue {resid:.3e}")


def sigma_monte_carlo(
    rbar: np.ndarray, trials: int, rng: np.random.Generator, batch: int = 20000
) -> SigmaMatrix:
    """Monte-Carlo Sigma: resample sign snapshots from CN(0, Rbar), stack the
    off-diagonal products of each snapshot and return the scaled empirical
    covariance.  Oracle for the analytic path and fallback weighting."""
    if trials < 10**4:
        raise ValueError("need at least 1e4 resamples")
    r = _validate_rbar(rbar)
    m = r.shape[0]
    # Cholesky with a tiny jitter fallback for semidefinite inputs.
    try:
        chol = np.linalg.cholesky(r)
    except np.linalg.LinAlgError:
        chol = np.linalg.cholesky(r + 1e-12 * np.eye(m))
    # Infer the off-diagonal table for this M (column-major, diagonal removed).
    diag_idx = np.arange(m) * m + np.arange(m)
    off_idx = np.setdiff1d(np.arange(m * m), diag_idx)
    rows_, cols_ = off_idx % m, off_idx // m
    p_off = off_idx.size

    s1 = np.zeros(p_off, dtype=complex)
    s2 = np.zeros((p_off, p_off), dtype=complex)
    done = 0
    while done < trials:
        b = min(batch, trials - done)
        g = (rng.standard_normal((m, b)) + 1j * rng.standard_normal((m, b))) / np.sqrt(2.0)
        y = chol @ g
        x = (np.where(y.real >= 0, 1.0, -1.0) + 1j * np.where(y.imag >= 0, 1.0, -1.0)) / np.sqrt(2.0)
        w = x[rows_, :] * np.conj(x[cols_, :])
        s1 += w.sum(axis=1)
        s2 += w @ w.conj().T
        done += b
    mean = s1 / trials
    cov = s2 / trials - np.outer(mean, np.conj(mean))
    sigma = (np.pi**2 / 4.0) * 0.5 * (cov + cov.conj().T)
    return SigmaMatrix(Sigma=sigma, provenance="monte_carlo", mc_trials=trials)


def gamma_matrix(sigma: SigmaMatrix, r_ddot: np.ndarray) -> GammaMatrix:
    """Combine Sigma with the off-diagonal entries into the asymptotic
    covariance factor of the sine-reconstructed entries."""
    re, im = r_ddot.real, r_ddot.imag
    if np.any(np.abs(re) > 1 + 1e-12) or np.any(np.abs(im) > 1 + 1e-12):
        raise ValueError("off-diagonal entries must have |Re|, |Im| <= 1")
    cr = np.sqrt(np.clip(1.0 - re**2, 0.0, None))
    ci = np.sqrt(np.clip(1.0 - im**2, 0.0, None))
    s = sigma.Sigma
    g = 0.5 * (np.outer(cr, cr) + np.outer(ci, ci)) * s.real + 0.5j * (
        np.outer(ci, cr) + np.outer(cr, ci)
    ) * s.imag
    _assert_hermitian(g)
    return GammaMatrix(Gamma=g)
