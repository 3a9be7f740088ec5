import math

import numpy as np
import pytest

from doafoundry.analysis import (
    beamwidth_deg,
    crlb_numeric_fim,
    crlb_ula_single,
    empirical_resolution,
    resolution_predict,
)
from doafoundry.core import ArrayGeometry, EmitterScenario, sample_covariance, synthesize_snapshots
from doafoundry.estimators import beamform_spectrum


def test_crlb_halves_when_snapshots_double():
    a = crlb_ula_single(16, 10.0, 250, 0.0)
    b = crlb_ula_single(16, 10.0, 500, 0.0)
    assert abs(a.variance_deg2 / b.variance_deg2 - 2.0) < 1e-12


def test_crlb_cosine_factor():
    a = crlb_ula_single(16, 10.0, 100, 0.0)
    b = crlb_ula_single(16, 10.0, 100, 60.0)
    assert abs(b.variance_deg2 / a.variance_deg2 - 4.0) < 1e-9


def test_crlb_divergent_near_endfire():
    rep = crlb_ula_single(16, 10.0, 100, 89.95)
    assert math.isinf(rep.variance_deg2) and rep.parameters["divergent"]


def test_crlb_monotone_in_all_knobs():
    base = crlb_ula_single(16, 10.0, 100, 20.0).variance_deg2
    for n in (24, 32, 64):
        assert crlb_ula_single(n, 10.0, 100, 20.0).variance_deg2 < base
    for snr in (12.0, 15.0, 20.0):
        assert crlb_ula_single(16, snr, 100, 20.0).variance_deg2 < base
    for L in (200, 400, 1000):
        assert crlb_ula_single(16, 10.0, L, 20.0).variance_deg2 < base


def test_numeric_fim_matches_closed_form():
    # effective SNR*N kept >= 160 so the single-parameter Gaussian FIM and
    # the closed form stay within the 1% consistency contract
    for n in (16, 32, 64):
        for snr in (10.0, 15.0, 20.0):
            for theta in (0.0, 30.0, 60.0):
                closed = crlb_ula_single(n, snr, 200, theta)
                fim = crlb_numeric_fim(ArrayGeometry.ula(n), snr, 200, theta)
                assert abs(fim.variance_deg2 / closed.variance_deg2 - 1.0) < 0.01


def test_numeric_fim_trivial_combiner_equals_exact():
    g = ArrayGeometry.had(8, 1)
    exact = crlb_numeric_fim(g, 10.0, 100, 15.0)
    hybrid = crlb_numeric_fim(
        g, 10.0, 100, 15.0, combiner_phases=np.zeros((8, 1)), bound_kind="Hybrid"
    )
    assert abs(hybrid.variance_deg2 / exact.variance_deg2 - 1.0) < 1e-9


def test_numeric_fim_identity_transform_is_noop():
    g = ArrayGeometry.ula(16)
    a = crlb_numeric_fim(g, 10.0, 100, 10.0)
    b = crlb_numeric_fim(g, 10.0, 100, 10.0, cov_transform=lambda r: r)
    assert abs(a.variance_deg2 - b.variance_deg2) < 1e-15


def test_beamwidth_scaling_and_value():
    assert abs(beamwidth_deg(16) - math.degrees(0.886 * 2 / 16)) < 1e-12
    assert abs(beamwidth_deg(16) - 6.346) < 0.01
    assert abs(beamwidth_deg(32) - beamwidth_deg(16) / 2) < 1e-12


def test_beamwidth_matches_half_power_points():
    n = 16
    g = ArrayGeometry.ula(n)
    sc = EmitterScenario((0.0,), math.inf, snapshots=32, seed=0)
    r = sample_covariance(synthesize_snapshots(sc, g))
    grid = np.arange(-20.0, 20.0001, 0.001)
    curve = beamform_spectrum(r, grid)
    peak = curve.values.max()
    above = grid[curve.values >= peak / 2.0]
    width = above.max() - above.min()
    assert abs(width - beamwidth_deg(n)) / beamwidth_deg(n) < 0.05


def test_resolution_predict_properties():
    bw = beamwidth_deg(16)
    assert resolution_predict(bw, 0.0) == bw
    assert abs(resolution_predict(bw, 40.0) - bw / 10.0) < 1e-12
    vals = [resolution_predict(bw, s) for s in (-10.0, 0.0, 10.0, 20.0)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert abs(resolution_predict(beamwidth_deg(16), 10.0) - 3.568) < 0.01


@pytest.mark.slow
def test_empirical_resolution_music_within_factor_two():
    # snapshot-limited regime (L=50) where the approximate law is honest
    predicted = resolution_predict(beamwidth_deg(16), 10.0)
    measured = empirical_resolution("music", 16, 50, 10.0, trials=60, seed=21)
    assert predicted / 2.0 <= measured <= predicted * 2.0


@pytest.mark.slow
def test_empirical_resolution_beamforming_near_beamwidth():
    measured = empirical_resolution("beamform", 16, 500, 10.0, trials=60, seed=22)
    bw = beamwidth_deg(16)
    assert abs(measured - bw) / bw < 0.25
