import numpy as np
import pytest
from scipy import stats

from tensorcfo.channel import crandn
from tensorcfo.frontend import (
    Codebook,
    SystemConfig,
    draw_phase_noise,
    make_trace,
    phase_quantize,
    practical_tau,
    random_codebook,
    simulate_measurements,
)
from tensorcfo.tensor_core import inner_product, outer3


class TestTau:
    def test_28ghz_value(self):
        assert practical_tau(28e9, 4.7e-18, 0.5e-6) == pytest.approx(0.27, abs=0.005)

    def test_zero_constant(self):
        assert practical_tau(28e9, 0.0, 0.5e-6) == 0

    def test_sqrt_scaling(self):
        assert practical_tau(28e9, 4.7e-18, 2e-6) == pytest.approx(2 * practical_tau(28e9, 4.7e-18, 0.5e-6))


class TestPhaseNoise:
    def test_zero_tau(self, rng):
        assert not np.any(draw_phase_noise(32, 0.0, rng))

    def test_deterministic(self):
        a = draw_phase_noise(16, 0.3, np.random.default_rng(3))
        b = draw_phase_noise(16, 0.3, np.random.default_rng(3))
        assert np.array_equal(a, b)

    def test_variance_grows_linearly(self):
        rng = np.random.default_rng(2024)
        tau, paths = 0.27, 10_000
        phi = np.array([draw_phase_noise(64, tau, rng) for _ in range(paths)])
        for n in (1, 16, 64):
            target = n * tau**2
            se = target * np.sqrt(2 / (paths - 1))
            assert abs(phi[:, n - 1].var(ddof=1) - target) < 3 * se

    def test_negative_tau(self, rng):
        with pytest.raises(ValueError):
            draw_phase_noise(4, -0.1, rng)


class TestCodebook:
    def test_unit_norm_and_alphabet(self, rng):
        cfg = SystemConfig(N_t=8, N_r=4, M=20, q=8)
        cb = random_codebook(cfg, rng)
        np.testing.assert_allclose(np.linalg.norm(cb.W, axis=1), 1, rtol=1e-14)
        np.testing.assert_allclose(np.linalg.norm(cb.F, axis=1), 1, rtol=1e-14)
        k = np.angle(cb.F * np.sqrt(8)) / (2 * np.pi / 8)
        np.testing.assert_allclose(k, np.rint(k), atol=1e-9)

    def test_binary(self, rng):
        cb = random_codebook(SystemConfig(N_t=4, N_r=4, M=10, q=2), rng)
        np.testing.assert_allclose(np.abs(cb.W.real), 0.5, atol=1e-15)
        np.testing.assert_allclose(cb.W.imag, 0, atol=1e-15)

    def test_phase_histogram_uniform(self):
        cfg = SystemConfig(N_t=32, N_r=16, M=200, q=8)
        cb = random_codebook(cfg, np.random.default_rng(5))
        k = np.mod(np.rint(np.angle(cb.F) / (2 * np.pi / 8)), 8).astype(int)
        counts = np.bincount(k.ravel(), minlength=8)
        assert stats.chisquare(counts).pvalue > 0.01


class TestPhaseQuantize:
    def test_fixed_point(self, rng):
        v = np.exp(2j * np.pi * rng.integers(0, 8, 16) / 8) / 4
        np.testing.assert_allclose(phase_quantize(v, 8), v, atol=1e-15)

    def test_fine_alphabet_keeps_phase(self, rng):
        v = crandn(rng, 10)
        out = phase_quantize(v, 2**20)
        np.testing.assert_allclose(np.angle(out * np.conj(v)), 0, atol=1e-5)
        assert np.linalg.norm(out) == pytest.approx(1)

    def test_nearest_point(self):
        out = phase_quantize([np.exp(0.26j * np.pi)], 4)
        assert out[0] == pytest.approx(1j)

    def test_tie_goes_to_smaller_phase(self):
        out = phase_quantize([np.exp(0.25j * np.pi), np.exp(0.75j * np.pi)], 4)
        np.testing.assert_allclose(out * np.sqrt(2), [1, 1j], atol=1e-12)

    def test_zero_entry(self):
        out = phase_quantize([0, 1j], 4)
        np.testing.assert_allclose(out, np.array([1, 1j]) / np.sqrt(2), atol=1e-15)


def _setup(rng, sigma2=0.0, M=12):
    cfg = SystemConfig(N_t=6, N_r=4, M=M, sigma2=sigma2)
    return cfg, crandn(rng, 4, 6), random_codebook(cfg, rng)


class TestMeasurements:
    def test_ideal(self, rng):
        cfg, H, cb = _setup(rng)
        y = simulate_measurements(H, cb, make_trace(cfg, 0.0, 0.0), cfg).y
        expected = [sum(np.conj(cb.W[n, i]) * H[i, j] * cb.F[n, j] for i in range(4) for j in range(6))
                    for n in range(cfg.M)]
        np.testing.assert_allclose(y, expected, rtol=1e-12)

    def test_rotation_keeps_modulus(self, rng):
        cfg, H, cb = _setup(rng)
        ref = simulate_measurements(H, cb, make_trace(cfg, 0.0, 0.0), cfg).y
        y = simulate_measurements(H, cb, make_trace(cfg, 200e3, 0.5, rng), cfg).y
        np.testing.assert_allclose(np.abs(y), np.abs(ref), rtol=1e-12)

    def test_cfo_rotation_per_symbol(self, rng):
        cfg = SystemConfig(N_t=6, N_r=4, M=10, sigma2=0.0)
        H = crandn(rng, 4, 6)
        w, f = crandn(rng, 4), crandn(rng, 6)
        cb = Codebook(np.tile(w, (10, 1)), np.tile(f, (10, 1)), q=8)
        trace = make_trace(cfg, 123e3, 0.0)
        y = simulate_measurements(H, cb, trace, cfg).y
        np.testing.assert_allclose(np.angle(y[1:] * y[:-1].conj()), trace.omega_e, atol=1e-12)
        # the first measurement already carries one symbol of rotation
        assert np.angle(y[0] / (w.conj() @ H @ f)) == pytest.approx(trace.omega_e)

    def test_matches_tensor_inner_product(self, rng):
        cfg, H, cb = _setup(rng)
        trace = make_trace(cfg, -150e3, 0.3, rng)
        y = simulate_measurements(H, cb, trace, cfg).y
        chi = H[:, :, None] * trace.e_Omega[None, None, :]
        for n in range(cfg.M):
            e_n = np.eye(cfg.M)[n]
            expected = inner_product(chi, outer3(cb.W[n], cb.F[n].conj(), e_n))
            assert y[n] == pytest.approx(expected, rel=1e-9)

    def test_noise_variance(self):
        rng = np.random.default_rng(11)
        cfg = SystemConfig(N_t=1, N_r=1, M=100_000, rho=2.0, sigma2=0.5)
        cb = Codebook(np.ones((cfg.M, 1)), np.ones((cfg.M, 1)), q=8)
        meas = simulate_measurements(np.zeros((1, 1)), cb, make_trace(cfg, 0.0, 0.0), cfg, rng)
        assert np.mean(np.abs(meas.y) ** 2) == pytest.approx(0.25, rel=0.02)
        # raw received symbol uses pilot power rho and noise sigma2
        assert np.mean(np.abs(meas.r) ** 2) == pytest.approx(0.5, rel=0.02)
        np.testing.assert_allclose(meas.y, meas.s.conjugate() * meas.r / abs(meas.s) ** 2)

    def test_noisy_requires_rng(self, rng):
        cfg, H, cb = _setup(rng, sigma2=1.0)
        with pytest.raises(ValueError):
            simulate_measurements(H, cb, make_trace(cfg, 0.0, 0.0), cfg)


class TestSystemConfig:
    def test_defaults(self):
        cfg = SystemConfig()
        assert (cfg.f_c, cfg.T, cfg.f_max, cfg.gamma_leak, cfg.q) == (28e9, 0.5e-6, 280e3, 2.0, 8)

    def test_snr(self):
        cfg = SystemConfig().with_snr_db(5.0)
        assert cfg.rho == 1 and cfg.snr_db == pytest.approx(5.0)

    @pytest.mark.parametrize("kw", [dict(M=0), dict(q=1), dict(T=0), dict(sigma2=-1),
                                    dict(f_max=2e6), dict(gamma_leak=0.5), dict(gamma_leak=5)])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            SystemConfig(**kw)

    def test_cfo_limit(self):
        with pytest.raises(ValueError, match="f_max"):
            make_trace(SystemConfig(), 300e3, 0.0)
