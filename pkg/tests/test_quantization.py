import math

import numpy as np
import pytest

from doafoundry.analysis import crlb_numeric_fim
from doafoundry.core import (
    ArrayGeometry,
    EmitterScenario,
    SnapshotMatrix,
    sample_covariance,
    steering_vector,
    synthesize_snapshots,
)
from doafoundry.errors import ConfigurationError
from doafoundry.estimators import estimate_music
from doafoundry.had import HadConfig
from doafoundry.quantization import (
    AqnmModel,
    MixedAdcConfig,
    PowerModel,
    QuantizerConfig,
    aqnm_model,
    crlb_quantized,
    energy_efficiency,
    lloyd_max_distortion,
    mixed_covariance_model,
    performance_loss_db,
    power_total,
    quantize,
    quantized_covariance_model,
)


def white_snapshots(n, L, seed=0):
    g = ArrayGeometry.ula(n)
    sc = EmitterScenario((), 0.0, snapshots=L, seed=seed)
    return synthesize_snapshots(sc, g)


def test_quantize_idempotent_on_reconstruction_levels():
    x = white_snapshots(4, 200, seed=1)
    cfg = QuantizerConfig(bits=3)
    q1 = quantize(x, cfg)
    q2 = quantize(q1, cfg)
    np.testing.assert_array_equal(q1.data, q2.data)


def test_one_bit_output_is_binary_per_rail():
    x = white_snapshots(4, 500, seed=2)
    cfg = QuantizerConfig(bits=1)
    q = quantize(x, cfg)
    assert set(np.unique(q.data.real)) == {-cfg.step / 2, cfg.step / 2}
    assert set(np.unique(q.data.imag)) == {-cfg.step / 2, cfg.step / 2}


def test_high_resolution_quantizer_is_transparent():
    x = white_snapshots(8, 20_000, seed=3)
    cfg = QuantizerConfig.for_snapshots(x, bits=12, clip_sigma=4.0)
    q = quantize(x, cfg)
    mse = np.mean(np.abs(q.data - x.data) ** 2)
    assert mse / np.mean(np.abs(x.data) ** 2) < 1e-5


def test_lloyd_max_one_bit_matches_analytic_optimum():
    # 1-bit MMSE quantizer for a unit Gaussian has levels +-sqrt(2/pi),
    # hence distortion 1 - 2/pi
    assert abs(lloyd_max_distortion(1) - (1.0 - 2.0 / math.pi)) < 1e-10


def test_lloyd_max_known_values():
    # classic MMSE distortions for 2 and 4 levels
    assert abs(lloyd_max_distortion(1) - 0.3634) < 5e-4
    assert abs(lloyd_max_distortion(2) - 0.1175) < 5e-4


def test_rho_strictly_decreasing_alpha_increasing():
    rhos = [lloyd_max_distortion(b) for b in range(1, 13)]
    assert all(a > b for a, b in zip(rhos, rhos[1:]))
    alphas = [aqnm_model(b).alpha for b in range(1, 13)]
    assert all(a < b for a, b in zip(alphas, alphas[1:]))
    assert aqnm_model(20).alpha > 0.999999


def test_quantized_covariance_identity_case():
    model = aqnm_model(2)
    rq = quantized_covariance_model(np.eye(5), model)
    np.testing.assert_allclose(rq, model.alpha * np.eye(5), atol=1e-12)


def test_quantized_covariance_alpha_one_noop():
    rng = np.random.default_rng(4)
    x = rng.standard_normal((4, 50)) + 1j * rng.standard_normal((4, 50))
    r = x @ x.conj().T / 50
    rq = quantized_covariance_model(r, AqnmModel(bits=99, rho=0.0, alpha=1.0))
    np.testing.assert_allclose(rq, r, atol=1e-12)


def test_quantized_covariance_preserves_hermitian_psd_and_eigvec():
    g = ArrayGeometry.ula(8)
    a = steering_vector(g, 17.0)
    r = 10.0 * np.outer(a, a.conj()) + np.eye(8)
    for bits in (1, 2, 4):
        rq = quantized_covariance_model(r, aqnm_model(bits))
        np.testing.assert_allclose(rq, rq.conj().T, atol=1e-12)
        w, v = np.linalg.eigh(rq)
        assert w.min() > 0
        # dominant eigenvector still points along the manifold
        overlap = abs(np.vdot(v[:, -1], a / math.sqrt(8)))
        assert abs(overlap - 1.0) < 1e-10


def test_crlb_quantized_limits_and_monotonicity():
    exact = crlb_numeric_fim(ArrayGeometry.ula(16), 5.0, 100, 10.0).variance_deg2
    assert crlb_quantized(16, 5.0, 100, 10.0, 12).variance_deg2 / exact < 1.001
    bounds = [crlb_quantized(16, 5.0, 100, 10.0, b).variance_deg2 for b in range(1, 9)]
    assert all(a > b for a, b in zip(bounds, bounds[1:]))


def test_performance_loss_properties():
    losses = [performance_loss_db(32, 0.0, 100, 10.0, b) for b in range(1, 9)]
    assert all(l > 0 for l in losses)
    assert all(a > b for a, b in zip(losses, losses[1:]))
    assert losses[3] - losses[4] < 0.2  # 4 -> 5 bits buys almost nothing


def test_mixed_covariance_limits():
    g = ArrayGeometry.ula(6)
    a = steering_vector(g, -12.0)
    r = 4.0 * np.outer(a, a.conj()) + np.eye(6)
    all_high = mixed_covariance_model(r, MixedAdcConfig(6, 6, low_bits=1))
    np.testing.assert_allclose(all_high, r, atol=1e-12)
    all_low = mixed_covariance_model(r, MixedAdcConfig(6, 0, low_bits=2))
    np.testing.assert_allclose(
        all_low, quantized_covariance_model(r, aqnm_model(2)), atol=1e-12
    )


def test_mixed_covariance_music_still_locks_on():
    g = ArrayGeometry.ula(16)
    a = steering_vector(g, 9.0)
    r = 10.0 * np.outer(a, a.conj()) + np.eye(16)
    from doafoundry.core import CovarianceEstimate

    for m0 in (0, 4, 8, 16):
        rm = mixed_covariance_model(r, MixedAdcConfig(16, m0, low_bits=1))
        est = estimate_music(
            CovarianceEstimate.from_matrix(rm, geometry=g), 1
        ).angles_deg[0]
        assert abs(est - 9.0) < 0.2


def test_mixed_config_validation():
    with pytest.raises(ConfigurationError):
        MixedAdcConfig(8, 9, low_bits=2)
    with pytest.raises(ConfigurationError):
        MixedAdcConfig(8, 0, low_bits=2, had=HadConfig(2, 3))


def test_power_model_structure():
    pm = PowerModel()
    cfg_lo = MixedAdcConfig(16, 0, low_bits=2)
    cfg_hi = MixedAdcConfig(16, 0, low_bits=3)
    base = power_total(cfg_lo, pm)
    # one extra bit doubles only the ADC term
    adc_lo = 16 * 2 * pm.p_adc_ref * 4
    assert abs(power_total(cfg_hi, pm) - base - adc_lo) < 1e-12
    pm2 = PowerModel(p_adc_ref=2 * pm.p_adc_ref)
    assert abs(power_total(cfg_lo, pm2) - base - adc_lo) < 1e-12


def test_energy_efficiency_scaling():
    from doafoundry.analysis import CrlbReport

    assert energy_efficiency(CrlbReport(1.0, "NumericFim"), 1.0) == 1.0
    eta1 = energy_efficiency(CrlbReport(1.0, "NumericFim"), 2.0)
    eta2 = energy_efficiency(CrlbReport(4.0, "NumericFim"), 2.0)
    assert abs(eta1 / eta2 - 2.0) < 1e-12


@pytest.mark.slow
def test_one_bit_snapshots_still_support_music():
    g = ArrayGeometry.ula(32)
    hits = 0
    trials = 120
    for t in range(trials):
        sc = EmitterScenario((7.0,), 10.0, snapshots=2000, seed=[30, t])
        x = synthesize_snapshots(sc, g)
        q = quantize(x, QuantizerConfig.for_snapshots(x, bits=1))
        est = estimate_music(sample_covariance(q), 1).angles_deg[0]
        hits += abs(est - 7.0) < 1.0
    assert hits / trials >= 0.95
