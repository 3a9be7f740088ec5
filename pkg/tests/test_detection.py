import numpy as np
import pytest

from doafoundry.core import ArrayGeometry, CovarianceEstimate
from doafoundry.detection import (
    ALL_STATISTICS,
    EIG_MEAN,
    EIG_OVER_NOISE,
    EIG_RATIO,
    GLRT_ENERGY,
    calibrate_threshold,
    compute_statistic,
    detect,
    empirical_pfa,
    monte_carlo_statistics,
    pd_curve,
    stat_eig_mean,
    stat_eig_over_noise,
    stat_eig_ratio,
    stat_glrt_energy,
)
from doafoundry.errors import (
    CalibrationUnreliableError,
    DegenerateCovarianceError,
    InsufficientDimensionsError,
)


def cov_from_diag(diag):
    return CovarianceEstimate.from_matrix(np.diag(np.asarray(diag, dtype=float)))


def test_statistics_on_identity():
    r = CovarianceEstimate.from_matrix(np.eye(6))
    for stat in ALL_STATISTICS:
        assert abs(compute_statistic(stat, r) - 1.0) < 1e-12


def test_eig_ratio_monotone_in_source_power():
    g = ArrayGeometry.ula(4)
    a = np.exp(1j * np.pi * g.positions * np.sin(np.radians(12.0)))
    prev = 1.0
    for p in (0.5, 2.0, 8.0):
        r = CovarianceEstimate.from_matrix(p * np.outer(a, a.conj()) + np.eye(4))
        val = stat_eig_ratio(r)
        assert val > prev
        prev = val


def test_eig_ratio_rejects_singular():
    with pytest.raises(DegenerateCovarianceError):
        stat_eig_ratio(cov_from_diag([1.0, 0.0]))


def test_eig_over_noise_example():
    assert abs(stat_eig_over_noise(cov_from_diag([9, 1, 1, 1])) - 9.0) < 1e-12
    with pytest.raises(InsufficientDimensionsError):
        stat_eig_over_noise(cov_from_diag([2.0]))


def test_eig_mean_example():
    assert abs(stat_eig_mean(cov_from_diag([4, 1, 1, 0.5])) - 2.25) < 1e-12


def test_glrt_energy_is_normalized_trace():
    r = cov_from_diag([3.0, 2.0, 1.0])
    assert abs(stat_glrt_energy(r) - 2.0) < 1e-12


def test_scaling_laws():
    rng = np.random.default_rng(0)
    x = rng.standard_normal((5, 40)) + 1j * rng.standard_normal((5, 40))
    r = CovarianceEstimate.from_matrix(x @ x.conj().T / 40)
    c = 3.7
    rc = CovarianceEstimate.from_matrix(c * r.matrix)
    for stat in (EIG_RATIO, EIG_OVER_NOISE):
        assert abs(compute_statistic(stat, rc) - compute_statistic(stat, r)) < 1e-9
    for stat in (EIG_MEAN, GLRT_ENERGY):
        assert abs(compute_statistic(stat, rc) - c * compute_statistic(stat, r)) < 1e-9


def test_detect_result_consistency():
    r = cov_from_diag([4, 1, 1, 1])
    res = detect(r, EIG_RATIO, threshold=2.0, pfa_target=0.01)
    assert res.decision and res.value == pytest.approx(4.0)


def test_calibration_requires_enough_trials():
    with pytest.raises(CalibrationUnreliableError):
        calibrate_threshold(EIG_RATIO, 4, 50, 0.01, trials=500, seed=0)


def test_calibration_degenerate_pfa_one_gives_minimum():
    stats = monte_carlo_statistics(EIG_RATIO, 4, 50, 200, seed=1)
    thr = calibrate_threshold(EIG_RATIO, 4, 50, 1.0, trials=200, seed=1)
    assert thr == pytest.approx(stats.min())


def test_calibration_deterministic():
    a = calibrate_threshold(EIG_RATIO, 4, 50, 0.1, trials=2000, seed=42)
    b = calibrate_threshold(EIG_RATIO, 4, 50, 0.1, trials=2000, seed=42)
    assert a == b


def test_chunking_does_not_change_values():
    a = monte_carlo_statistics(EIG_MEAN, 4, 30, 300, seed=3, chunk=7)
    b = monte_carlo_statistics(EIG_MEAN, 4, 30, 300, seed=3, chunk=300)
    np.testing.assert_array_equal(a, b)


def test_monte_carlo_matches_per_covariance_path():
    # the batched eigenvalue path must agree with the public per-R statistics
    stats = monte_carlo_statistics(EIG_OVER_NOISE, 6, 40, 5, seed=9)
    for t in range(5):
        rng = np.random.default_rng([9, t])
        x = np.sqrt(0.5) * (
            rng.standard_normal((6, 40)) + 1j * rng.standard_normal((6, 40))
        )
        r = CovarianceEstimate.from_matrix(x @ x.conj().T / 40)
        assert abs(stats[t] - stat_eig_over_noise(r)) < 1e-10


@pytest.mark.slow
def test_empirical_pfa_matches_target():
    for stat in ALL_STATISTICS:
        thr = calibrate_threshold(stat, 8, 100, 0.1, trials=20_000, seed=11)
        pfa = empirical_pfa(stat, 8, 100, thr, trials=20_000, seed=12)
        assert abs(pfa - 0.1) / 0.1 < 0.2


@pytest.mark.slow
def test_pd_curve_limits_and_monotonicity():
    grid = [-25.0, -15.0, -10.0, -5.0, 0.0, 10.0]
    for stat in ALL_STATISTICS:
        rows = pd_curve(stat, 8, 100, 0.1, grid, trials=4000, seed=13)
        pds = [row["pd"] for row in rows]
        # limits: hopeless at very low SNR (towards pfa), certain at high SNR
        assert pds[0] < 0.2
        assert pds[-1] > 0.99
        for lo, hi in zip(rows, rows[1:]):
            slack = 2.0 * np.hypot(lo["pd_stderr"], hi["pd_stderr"])
            assert hi["pd"] >= lo["pd"] - slack
