import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import kstest

from onebit_doa.covariance import model_covariance
from onebit_doa.geometry import build_geometry
from onebit_doa.signal import (
    SourceScene,
    equally_spaced_thetas,
    one_bit_quantize,
    scene_from_snr_db,
    simulate_snapshots,
)

SQRT2 = np.sqrt(2.0)


class TestSourceScene:
    def test_validation(self):
        with pytest.raises(ValueError):
            SourceScene(thetas=np.array([]), powers=np.array([]), noise_var=1.0)
        with pytest.raises(ValueError):
            SourceScene(thetas=np.array([0.1, 0.1]), powers=np.array([1.0, 1.0]), noise_var=1.0)
        with pytest.raises(ValueError):
            SourceScene(thetas=np.array([0.1]), powers=np.array([-1.0]), noise_var=1.0)
        with pytest.raises(ValueError):
            SourceScene(thetas=np.array([2.0]), powers=np.array([1.0]), noise_var=1.0)

    def test_pbar_normalization(self):
        sc = SourceScene(thetas=np.array([0.0, 0.5]), powers=np.array([2.0, 1.0]), noise_var=1.0)
        assert np.allclose(sc.pbar, [0.5, 0.25])

    def test_per_source_snr_configuration(self):
        # Unequal-power three-source setup: SNRs 20, 8 and 22 dB.
        sc = scene_from_snr_db([2.0, 3.0, 75.0], [20.0, 8.0, 22.0])
        assert sc.n_sources == 3
        assert np.allclose(sc.powers, 10 ** (np.array([2.0, 0.8, 2.2])))
        assert sc.noise_var == 1.0

    def test_equally_spaced_rule(self):
        assert np.allclose(np.rad2deg(equally_spaced_thetas(1)), [-60.0])
        th5 = np.rad2deg(equally_spaced_thetas(5))
        assert np.allclose(th5, [-60, -30, 0, 30, 60])


class TestOneBitQuantize:
    def test_examples(self):
        assert one_bit_quantize(np.array([3 - 0.2j])) == pytest.approx((1 - 1j) / SQRT2)
        assert one_bit_quantize(np.array([0 + 0j])) == pytest.approx((1 + 1j) / SQRT2)

    def test_unit_modulus(self, rng):
        y = rng.standard_normal((4, 64)) + 1j * rng.standard_normal((4, 64))
        x = one_bit_quantize(y)
        assert np.allclose(np.abs(x), 1.0)

    @given(st.integers(0, 2**32 - 1), st.floats(min_value=1e-6, max_value=1e6))
    @settings(max_examples=40, deadline=None)
    def test_scale_invariance_exact(self, seed, c):
        rng = np.random.default_rng(seed)
        y = rng.standard_normal((3, 16)) + 1j * rng.standard_normal((3, 16))
        assert np.array_equal(one_bit_quantize(c * y), one_bit_quantize(y))


class TestSimulateSnapshots:
    def test_seed_determinism(self, coprime6):
        sc = scene_from_snr_db([-10.0, 20.0], 5.0)
        y1 = simulate_snapshots(sc, coprime6, 256, np.random.default_rng(9))
        y2 = simulate_snapshots(sc, coprime6, 256, np.random.default_rng(9))
        y3 = simulate_snapshots(sc, coprime6, 256, np.random.default_rng(10))
        assert np.array_equal(y1, y2)
        assert not np.array_equal(y1, y3)

    def test_noiseless_single_source_rank_one(self, coprime6):
        sc = SourceScene(thetas=np.array([0.3]), powers=np.array([2.0]), noise_var=0.0)
        y = simulate_snapshots(sc, coprime6, 1, np.random.default_rng(1))
        assert y.shape == (6, 1)
        # y = a(theta) s: all entries share the same modulus |s|.
        assert np.allclose(np.abs(y), np.abs(y[0, 0]))

    def test_rejects_zero_snapshots(self, coprime6):
        sc = scene_from_snr_db([0.0], 0.0)
        with pytest.raises(ValueError):
            simulate_snapshots(sc, coprime6, 0, np.random.default_rng(0))

    def test_sample_covariance_converges_to_model(self, coprime6):
        # Law-of-large-numbers oracle at 1e6 snapshots.
        sc = scene_from_snr_db([-25.0, 40.0], [3.0, 1.0])
        mc = model_covariance(sc, coprime6)
        y = simulate_snapshots(sc, coprime6, 10**6, np.random.default_rng(123))
        r_hat = y @ y.conj().T / y.shape[1]
        scale = sc.total_power
        assert np.max(np.abs(r_hat - mc.R)) / scale < 5e-3

    def test_gaussianity_ks(self, coprime6):
        sc = scene_from_snr_db([10.0], 0.0)
        mc = model_covariance(sc, coprime6)
        y = simulate_snapshots(sc, coprime6, 10**5, np.random.default_rng(77))
        z = y[2].real / np.sqrt(mc.R[2, 2].real / 2)
        assert kstest(z, "norm").pvalue > 0.01
