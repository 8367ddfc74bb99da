"""Sparse linear array geometries, difference co-arrays and selection matrices.

Everything downstream (covariance parameterizations, the weighted fit, the
bounds and the error theory) consumes the structural matrices built here, so
this module fixes the bookkeeping conventions once:

* vectorization is column-major (``order='F'``); the vec position of entry
  ``(i, j)`` of an M x M matrix is ``j * M + i`` (0-based),
* co-array lags are listed in ascending order ``[-l_{D-1}, ..., 0, ..., l_{D-1}]``,
* the off-diagonal stack keeps the column-major order of vec with the M
  diagonal positions ``i * M + i`` removed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

_PRESETS = {
    "nested": [1, 2, 3, 4, 5, 6, 12, 18, 24, 30],
    "coprime": [0, 3, 5, 6, 9, 10, 12, 15, 20, 25],
    "mra": [0, 1, 3, 6, 13, 20, 27, 31, 35, 36],
    "ula": list(range(10)),
}


class InvalidGeometryError(ValueError):
    """Raised for sensor sets that do not form a valid sparse linear array."""


@dataclass(frozen=True)
class ArrayGeometry:
    """A sparse linear array with its difference co-array.

    Attributes:
        sensors: sorted sensor positions in half-wavelength units.
        diffs: sorted non-negative difference set of the sensor positions.
        cardinality: D, the number of distinct non-negative differences.
        ula_segment: v, the largest integer with {0, ..., v-1} contained in
            the difference set.
        lags: the 2D-1 signed co-array lags in ascending order.
    """

    sensors: tuple[int, ...]
    diffs: tuple[int, ...]
    cardinality: int
    ula_segment: int
    lags: tuple[int, ...]

    @property
    def n_sensors(self) -> int:
        return len(self.sensors)

    # Short aliases matching the usual symbols.
    @property
    def D(self) -> int:  # noqa: N802
        return self.cardinality

    @property
    def v(self) -> int:
        return self.ula_segment


def build_geometry(sensors) -> ArrayGeometry:
    """Build an ArrayGeometry from integer sensor positions.

    Raises InvalidGeometryError for duplicate or negative positions or fewer
    than two sensors.
    """
    pos = [int(s) for s in sensors]
    if len(pos) < 2:
        raise InvalidGeometryError("need at least two sensors")
    if len(set(pos)) != len(pos):
        raise InvalidGeometryError(f"duplicate sensor positions in {pos}")
    if any(s < 0 for s in pos):
        raise InvalidGeometryError(f"negative sensor positions in {pos}")
    pos = sorted(pos)
    diffs = sorted({abs(a - b) for a in pos for b in pos})
    d_card = len(diffs)
    v = 0
    while v < d_card and diffs[v] == v:
        v += 1
    lags = [-l for l in reversed(diffs[1:])] + diffs
    return ArrayGeometry(
        sensors=tuple(pos),
        diffs=tuple(diffs),
        cardinality=d_card,
        ula_segment=v,
        lags=tuple(lags),
    )


def standard_array(kind: str) -> list[int]:
    """Return one of the four named 10-element sensor sets.

    Note: the co-array of the ``coprime`` set has holes at lags 18, 21, 23
    and 24, giving D=22 and v=18 (brute-force recomputation; see README for
    the discrepancy with the commonly quoted D=26, v=23).
    """
    try:
        return list(_PRESETS[kind])
    except KeyError:
        raise ValueError(f"unknown array kind {kind!r}; expected one of {sorted(_PRESETS)}")


def steering_matrix(positions, thetas) -> np.ndarray:
    """Steering matrix exp(j*pi*sin(theta_k)*position_i), shape (len(positions), K).

    Serves the physical array (sensor positions), the difference co-array
    (signed lags) and the contiguous virtual ULA (positions 0..v-1).
    """
    th = np.atleast_1d(np.asarray(thetas, dtype=float))
    if np.any(np.abs(th) > np.pi / 2 + 1e-12):
        raise ValueError("DoAs must lie in [-pi/2, pi/2]")
    p = np.asarray(positions, dtype=float).reshape(-1, 1)
    return np.exp(1j * np.pi * np.sin(th)[None, :] * p)


@dataclass(frozen=True)
class SelectionSet:
    """Structural matrices of a geometry.

    ``offdiag_rows``/``offdiag_cols`` are the canonical table mapping the
    off-diagonal stack position p to its matrix entry (i_p, j_p); every module
    that touches the off-diagonal parameterization indexes through it.
    """

    geom: ArrayGeometry
    L: tuple[np.ndarray, ...]          # M x M indicators, one per non-negative lag
    J: np.ndarray                      # M^2 x (2D-1) binary
    Jbar: np.ndarray                   # (M^2-M) x (2D-2) binary
    F: np.ndarray                      # (M^2-M) x (M^2-M) complex
    Psi: np.ndarray                    # (2D-2) x (2D-2) complex
    T_list: tuple[np.ndarray, ...]     # v x (2D-1) binary, T_1 ... T_v
    T: np.ndarray                      # v^2 x (2D-1) binary
    Tbar: np.ndarray                   # v^2 x (2D-2) complex-compatible binary
    offdiag_vec_idx: np.ndarray        # vec positions of the off-diagonal stack
    offdiag_rows: np.ndarray           # i_p for each stack position p
    offdiag_cols: np.ndarray           # j_p for each stack position p
    jbar_lags: np.ndarray              # signed lag per Jbar column (center removed)
    multiplicities: np.ndarray         # nu(lag) = column sums of J
    J_pinv: np.ndarray = field(repr=False)  # (2D-1) x M^2, diag(1/nu) J^T

    @property
    def n_offdiag(self) -> int:
        return self.offdiag_rows.size


def selection_matrices(geom: ArrayGeometry) -> SelectionSet:
    """Construct every selection and transformation matrix for a geometry."""
    m = geom.n_sensors
    d_card = geom.cardinality
    v = geom.ula_segment
    sensors = np.asarray(geom.sensors)
    lags = np.asarray(geom.lags)

    diff_table = sensors[:, None] - sensors[None, :]  # (i, j) -> m_i - m_j

    l_mats = tuple(
        (diff_table == geom.diffs[n]).astype(float) for n in range(d_card)
    )

    # J column for lag lam: indicator of entries with m_i - m_j = lam,
    # flattened column-major.  This reproduces [vec(L_n^T) ... vec(L_0) ... vec(L_n)].
    j_mat = np.zeros((m * m, 2 * d_card - 1))
    for c, lam in enumerate(lags):
        j_mat[:, c] = (diff_table == lam).flatten(order="F")

    diag_idx = np.arange(m) * m + np.arange(m)
    all_idx = np.arange(m * m)
    offdiag_vec_idx = np.setdiff1d(all_idx, diag_idx)
    offdiag_rows = offdiag_vec_idx % m
    offdiag_cols = offdiag_vec_idx // m

    center = d_card - 1
    keep_cols = np.array([c for c in range(2 * d_card - 1) if c != center])
    jbar = j_mat[np.ix_(offdiag_vec_idx, keep_cols)]
    jbar_lags = lags[keep_cols]

    p_off = m * m - m
    vec_to_off = -np.ones(m * m, dtype=int)
    vec_to_off[offdiag_vec_idx] = np.arange(p_off)

    # F = (1/2) [F_re; j F_im]: row (p,q), p<q, of F_re picks
    # Rbar[q,p] + Rbar[p,q] = 2 Re Rbar[p,q]; F_im picks j(Rbar[q,p] - Rbar[p,q]).
    f_mat = np.zeros((p_off, p_off), dtype=complex)
    half = p_off // 2
    for p in range(m):
        for q in range(p + 1, m):
            # 1-based row formula (p-1)M + q - p(p+1)/2, converted to 0-based.
            row = p * m + (q + 1) - (p + 1) * (p + 2) // 2 - 1
            pos_qp = p * m + q   # vec position of entry (q, p)
            pos_pq = q * m + p   # vec position of entry (p, q)
            f_mat[row, vec_to_off[pos_qp]] += 0.5
            f_mat[row, vec_to_off[pos_pq]] += 0.5
            f_mat[half + row, vec_to_off[pos_qp]] += 0.5j
            f_mat[half + row, vec_to_off[pos_pq]] -= 0.5j

    # Psi maps phi = [Re u; Im u] onto the per-lag coefficients of Jbar's
    # columns: coefficient u_n^* at lag -l_n and u_n at lag +l_n.  The top
    # block composes the +/-j identity blocks with the exchange permutation
    # so that rows follow Jbar's ascending-lag column order.
    psi = np.zeros((2 * d_card - 2, 2 * d_card - 2), dtype=complex)
    for r, lam in enumerate(jbar_lags):
        n = int(np.searchsorted(geom.diffs, abs(lam)))  # lag index, 1..D-1
        if lam < 0:
            psi[r, n - 1] = 1.0
            psi[r, d_card - 1 + n - 1] = -1j
        else:
            psi[r, n - 1] = 1.0
            psi[r, d_card - 1 + n - 1] = 1j

    t_list = []
    for i in range(1, v + 1):
        t_i = np.zeros((v, 2 * d_card - 1))
        start = i + d_card - v - 1
        t_i[:, start:start + v] = np.eye(v)
        t_list.append(t_i)
    t_stack = np.vstack([t_list[i] for i in range(v - 1, -1, -1)])

    # Tbar columns follow jbar_lags: vec of the v x v first-order lag
    # indicator for |lag| <= v-1, zero otherwise.
    row_minus_col = np.arange(v)[:, None] - np.arange(v)[None, :]
    tbar = np.zeros((v * v, 2 * d_card - 2))
    for c, lam in enumerate(jbar_lags):
        if abs(lam) <= v - 1:
            tbar[:, c] = (row_minus_col == lam).flatten(order="F")

    nu = j_mat.sum(axis=0)
    j_pinv = (j_mat / nu).T

    return SelectionSet(
        geom=geom,
        L=l_mats,
        J=j_mat,
        Jbar=jbar,
        F=f_mat,
        Psi=psi,
        T_list=tuple(t_list),
        T=t_stack,
        Tbar=tbar,
        offdiag_vec_idx=offdiag_vec_idx,
        offdiag_rows=offdiag_rows,
        offdiag_cols=offdiag_cols,
        jbar_lags=jbar_lags,
        multiplicities=nu,
        J_pinv=j_pinv,
    )


def rank_with_tolerance(a: np.ndarray, rtol: float = 1e-10) -> int:
    """Numerical rank: singular values below rtol * max singular value count as zero."""
    s = np.linalg.svd(a, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > rtol * s[0]))
