import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from onebit_doa.covariance import (
    GAMMA_CLIP,
    arcsine_law,
    bundle_from_signs,
    model_covariance,
    offdiag_and_gamma,
    rbar_from_u,
    reconstruct_normalized_covariance,
    sample_covariance,
    sine_map,
)
from onebit_doa.geometry import steering_matrix
from onebit_doa.signal import (
    SourceScene,
    one_bit_quantize,
    scene_from_snr_db,
    simulate_snapshots,
)


def random_unit_diag_pd(rng, m=5, strength=0.25):
    """Random Hermitian PD matrix rescaled to unit diagonal."""
    a = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
    c = np.eye(m) + strength * (a @ a.conj().T) / m
    d = np.sqrt(np.diag(c).real)
    c = c / np.outer(d, d)
    np.fill_diagonal(c, 1.0)
    return 0.5 * (c + c.conj().T)


class TestSampleCovariance:
    def test_single_snapshot(self, rng):
        x = one_bit_quantize(rng.standard_normal((4, 1)) + 1j * rng.standard_normal((4, 1)))
        c = sample_covariance(x)
        assert np.allclose(c, x @ x.conj().T, atol=1e-15)
        assert np.array_equal(np.diag(c), np.ones(4))

    def test_unit_diagonal_exact(self, rng):
        for n in (1, 3, 17, 256):
            x = one_bit_quantize(rng.standard_normal((5, n)) + 1j * rng.standard_normal((5, n)))
            assert np.array_equal(np.diag(sample_covariance(x)), np.ones(5))

    def test_identity_input_decorrelates(self, rng):
        y = rng.standard_normal((4, 200_000)) + 1j * rng.standard_normal((4, 200_000))
        c = sample_covariance(one_bit_quantize(y))
        off = c - np.eye(4)
        assert np.max(np.abs(off)) < 0.01

    def test_converges_to_arcsine_law(self, coprime6):
        sc = scene_from_snr_db([-20.0, 10.0], 4.0)
        mc = model_covariance(sc, coprime6)
        rx_expected = arcsine_law(mc.Rbar)
        y = simulate_snapshots(sc, coprime6, 10**6, np.random.default_rng(5))
        rx_hat = sample_covariance(one_bit_quantize(y))
        assert np.max(np.abs(rx_hat - rx_expected)) < 5e-3


class TestArcsineSinePair:
    def test_half_maps_to_third(self):
        r = np.array([[1.0, 0.5], [0.5, 1.0]], dtype=complex)
        assert arcsine_law(r)[0, 1] == pytest.approx(1 / 3, abs=1e-15)

    def test_identity_fixed_point(self):
        assert np.allclose(arcsine_law(np.eye(4, dtype=complex)), np.eye(4), atol=1e-15)

    def test_sine_inverts_third(self):
        rx = np.array([[1.0, 1 / 3], [1 / 3, 1.0]], dtype=complex)
        assert reconstruct_normalized_covariance(rx)[0, 1] == pytest.approx(0.5, abs=1e-15)

    def test_domain_error(self):
        with pytest.raises(ValueError):
            arcsine_law(np.array([[1.0, 1.2], [1.2, 1.0]], dtype=complex))

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=25, deadline=None)
    def test_bijection(self, seed):
        rng = np.random.default_rng(seed)
        rbar = random_unit_diag_pd(rng)
        assert np.max(np.abs(sine_map(arcsine_law(rbar)) - rbar)) < 1e-14
        rx = arcsine_law(rbar)
        assert np.max(np.abs(arcsine_law(sine_map(rx)) - rx)) < 1e-14

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=25, deadline=None)
    def test_arcsine_preserves_positive_definiteness(self, seed):
        rng = np.random.default_rng(seed)
        rbar = random_unit_diag_pd(rng, m=6, strength=0.8)
        rx = arcsine_law(rbar)
        assert np.linalg.eigvalsh(rx)[0] > 0

    def test_reconstruction_error_rate(self, coprime6, coprime6_sel):
        # Entrywise error of the sine reconstruction scales like N^{-1/2}.
        sc = scene_from_snr_db([-15.0, 30.0], 3.0)
        mc = model_covariance(sc, coprime6)
        ns = [1000, 4000, 16000]
        errs = []
        for i, n in enumerate(ns):
            acc = 0.0
            trials = 24
            for t in range(trials):
                rng = np.random.default_rng(np.random.SeedSequence(entropy=42, spawn_key=(i, t)))
                y = simulate_snapshots(sc, coprime6, n, rng)
                bundle = bundle_from_signs(one_bit_quantize(y), coprime6_sel)
                acc += np.max(np.abs(bundle.Rbar_tilde - mc.Rbar))
            errs.append(acc / trials)
        slope = np.polyfit(np.log(ns), np.log(errs), 1)[0]
        assert -0.65 < slope < -0.35


class TestModelCovariance:
    def test_broadside_single_source(self, coprime6):
        sc = SourceScene(thetas=np.array([0.0]), powers=np.array([3.0]), noise_var=1.0)
        mc = model_covariance(sc, coprime6)
        off = mc.Rbar[~np.eye(6, dtype=bool)]
        assert np.allclose(off, sc.pbar[0])

    def test_vec_identity(self, coprime6, coprime6_sel):
        sc = scene_from_snr_db([-37.0, 11.0, 52.0], [0.0, 6.0, -3.0])
        mc = model_covariance(sc, coprime6)
        a_d = steering_matrix(coprime6.lags, sc.thetas)
        e = np.zeros(2 * coprime6.cardinality - 1)
        e[coprime6.cardinality - 1] = 1.0
        vec = coprime6_sel.J @ (a_d @ sc.pbar + (1 - sc.pbar.sum()) * e)
        assert np.max(np.abs(vec - mc.Rbar.flatten(order="F"))) < 1e-12

    def test_high_snr_limit(self, coprime6):
        # With equal powers the noise share vanishes, so the limit is the
        # unit-diagonal rank-K matrix (1/K) A A^H.
        k = 3
        thetas = np.deg2rad([-40.0, 5.0, 50.0])
        sc = SourceScene(thetas=thetas, powers=np.full(k, 1e9), noise_var=1.0)
        mc = model_covariance(sc, coprime6)
        a = steering_matrix(coprime6.sensors, thetas)
        limit = (a @ a.conj().T) / k
        np.fill_diagonal(limit, 1.0)
        assert np.max(np.abs(mc.Rbar - limit)) < 1e-8

    def test_u_matches_rbar_entries(self, coprime6, coprime6_sel):
        sc = scene_from_snr_db([-10.0, 25.0], 2.0)
        mc = model_covariance(sc, coprime6)
        rebuilt = rbar_from_u(mc.u, coprime6_sel)
        assert np.max(np.abs(rebuilt - mc.Rbar)) < 1e-12


class TestOffdiagAndGamma:
    def test_identity_gives_zero_gamma(self, coprime6_sel):
        r_ddot, gamma, b = offdiag_and_gamma(np.eye(6, dtype=complex), coprime6_sel)
        assert np.allclose(r_ddot, 0) and np.allclose(gamma, 0)
        assert np.allclose(b, 1.0)

    def test_m2_example(self):
        from onebit_doa.geometry import build_geometry, selection_matrices

        s = selection_matrices(build_geometry([0, 1]))
        rbar = rbar_from_u(np.array([0.3 + 0.4j]), s)
        _, gamma, _ = offdiag_and_gamma(rbar, s)
        assert np.allclose(gamma, [0.3, -0.4])

    def test_clipping_keeps_b_finite(self, coprime6_sel):
        rbar = np.eye(6, dtype=complex)
        rbar[0, 1] = 1.0  # extreme entry, |gamma| = 1
        rbar[1, 0] = 1.0
        _, gamma, b = offdiag_and_gamma(rbar, coprime6_sel)
        assert np.max(np.abs(gamma)) == 1.0
        assert np.all(np.isfinite(b))
        assert np.max(b) == pytest.approx(1.0 / np.sqrt(1 - GAMMA_CLIP**2))

    def test_non_hermitian_rejected(self, coprime6_sel):
        bad = np.eye(6, dtype=complex)
        bad[0, 1] = 0.5
        with pytest.raises(ValueError):
            offdiag_and_gamma(bad, coprime6_sel)

    def test_gamma_real_for_hermitian(self, coprime6_sel, rng):
        rbar = random_unit_diag_pd(rng, m=6)
        _, gamma, _ = offdiag_and_gamma(rbar, coprime6_sel)
        assert gamma.dtype == np.float64
