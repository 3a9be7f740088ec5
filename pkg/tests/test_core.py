import math

import numpy as np
import pytest

from doafoundry.core import (
    CONSTANT_MODULUS,
    ArrayGeometry,
    CovarianceEstimate,
    EmitterScenario,
    EmitterStream,
    SnapshotMatrix,
    sample_covariance,
    steering_vector,
    synthesize_snapshots,
)
from doafoundry.errors import InvalidGeometryError, UnsupportedGeometryError


def test_steering_broadside_is_all_ones():
    a = steering_vector(ArrayGeometry.ula(4), 0.0)
    np.testing.assert_allclose(a, np.ones(4), atol=1e-15)


def test_steering_two_element_30deg():
    a = steering_vector(ArrayGeometry.ula(2), 30.0)
    np.testing.assert_allclose(a, np.array([1.0, 1j]), atol=1e-12)


def test_steering_phase_increments_constant():
    # direct evaluation oracle: element m carries phase pi*m*sin(20 deg)
    theta = 20.0
    a = steering_vector(ArrayGeometry.ula(8), theta)
    phases = np.unwrap(np.angle(a))
    increment = math.pi * math.sin(math.radians(theta))
    np.testing.assert_allclose(np.diff(phases), increment, atol=1e-12)
    np.testing.assert_allclose(np.abs(a), 1.0, atol=1e-14)


def test_steering_negation_conjugates():
    g = ArrayGeometry.ula(6)
    for theta in (11.0, 37.5, 62.0):
        np.testing.assert_allclose(
            steering_vector(g, -theta), steering_vector(g, theta).conj(), atol=1e-14
        )


def test_steering_rejects_nonlinear_geometry():
    g = ArrayGeometry(np.arange(3.0), kind="subarray-cluster")
    with pytest.raises(UnsupportedGeometryError):
        steering_vector(g, 0.0)


def test_geometry_rejects_duplicates_and_disorder():
    with pytest.raises(InvalidGeometryError):
        ArrayGeometry(np.array([0.0, 1.0, 1.0]))
    with pytest.raises(InvalidGeometryError):
        ArrayGeometry(np.array([0.0, 2.0, 1.0]))


def test_noiseless_single_source_columns_proportional_to_manifold():
    g = ArrayGeometry.ula(8)
    sc = EmitterScenario((17.0,), math.inf, snapshots=12, seed=5)
    x = synthesize_snapshots(sc, g)
    a = steering_vector(g, 17.0)
    # every column is a scalar multiple of a(theta)
    coeff = x.data[0, :] / a[0]
    np.testing.assert_allclose(x.data, a[:, None] * coeff[None, :], atol=1e-12)


def test_noise_only_power_near_unity():
    g = ArrayGeometry.ula(4)
    sc = EmitterScenario((), 0.0, snapshots=200_000, seed=1)
    x = synthesize_snapshots(sc, g)
    mean_power = np.mean(np.abs(x.data) ** 2)
    assert abs(mean_power - 1.0) < 0.02


def test_sample_covariance_converges_to_model():
    # law-of-large-numbers oracle: R -> p a a^H + I within 5% Frobenius
    g = ArrayGeometry.ula(8)
    sc = EmitterScenario((10.0,), 10.0, snapshots=10_000, seed=42)
    r = sample_covariance(synthesize_snapshots(sc, g))
    a = steering_vector(g, 10.0)
    model = 10.0 * np.outer(a, a.conj()) + np.eye(8)
    rel = np.linalg.norm(r.matrix - model) / np.linalg.norm(model)
    assert rel < 0.05


def test_sample_covariance_rank_one_outer_product():
    g = ArrayGeometry.ula(2)
    x = SnapshotMatrix(np.ones((2, 1)), g)
    r = sample_covariance(x)
    np.testing.assert_allclose(r.matrix, np.ones((2, 2)), atol=1e-14)
    np.testing.assert_allclose(r.eigenvalues, [2.0, 0.0], atol=1e-12)


def test_noiseless_covariance_is_rank_one_with_manifold_eigvec():
    g = ArrayGeometry.ula(8)
    sc = EmitterScenario((23.0,), math.inf, snapshots=64, seed=3)
    r = sample_covariance(synthesize_snapshots(sc, g))
    assert r.eigenvalues[0] > 1e-6
    assert np.all(np.abs(r.eigenvalues[1:]) < 1e-10 * r.eigenvalues[0])
    a = steering_vector(g, 23.0) / math.sqrt(8)
    overlap = abs(np.vdot(a, r.eigenvectors[:, 0]))
    assert abs(overlap - 1.0) < 1e-10


def test_noise_only_eigenvalues_near_unity():
    g = ArrayGeometry.ula(8)
    sc = EmitterScenario((), 0.0, snapshots=100_000, seed=11)
    r = sample_covariance(synthesize_snapshots(sc, g))
    assert np.all(np.abs(r.eigenvalues - 1.0) < 0.1)


def test_covariance_invariants():
    g = ArrayGeometry.ula(6)
    sc = EmitterScenario((5.0, -30.0), (10.0, 3.0), snapshots=300, seed=9)
    x = synthesize_snapshots(sc, g)
    r = sample_covariance(x)
    # Hermitian PSD
    np.testing.assert_allclose(r.matrix, r.matrix.conj().T, atol=1e-14)
    assert np.all(r.eigenvalues >= -1e-10 * r.eigenvalues[0])
    # trace equals mean sample energy exactly
    energy = np.sum(np.abs(x.data) ** 2) / x.n_snapshots
    assert abs(np.trace(r.matrix).real - energy) < 1e-9 * energy
    # orthonormal eigenvectors and faithful reconstruction
    vhv = r.eigenvectors.conj().T @ r.eigenvectors
    np.testing.assert_allclose(vhv, np.eye(6), atol=1e-10)
    recon = (r.eigenvectors * r.eigenvalues) @ r.eigenvectors.conj().T
    rel = np.linalg.norm(recon - r.matrix) / np.linalg.norm(r.matrix)
    assert rel < 1e-10


def test_synthesis_is_bit_reproducible():
    g = ArrayGeometry.ula(5)
    sc = EmitterScenario((12.0,), 6.0, snapshots=50, seed=77)
    x1 = synthesize_snapshots(sc, g)
    x2 = synthesize_snapshots(sc, g)
    assert np.array_equal(x1.data, x2.data)


def test_constant_modulus_sources_have_unit_envelope():
    g = ArrayGeometry.ula(3)
    sc = EmitterScenario(
        (0.0,), math.inf, snapshots=100, signal_model=CONSTANT_MODULUS, seed=2
    )
    x = synthesize_snapshots(sc, g)
    np.testing.assert_allclose(np.abs(x.data[0]), 1.0, atol=1e-12)


def test_emitter_stream_blocks_differ_and_reproduce():
    g = ArrayGeometry.ula(4)
    sc = EmitterScenario((8.0,), 10.0, snapshots=20, seed=4)
    s1 = EmitterStream(sc, g)
    b1, b2 = s1.next_block(), s1.next_block()
    assert not np.array_equal(b1.data, b2.data)
    s2 = EmitterStream(sc, g)
    assert np.array_equal(s2.next_block().data, b1.data)
    assert s1.blocks_drawn == 2


def test_covariance_rejects_non_hermitian():
    with pytest.raises(ValueError):
        CovarianceEstimate.from_matrix(np.array([[1.0, 1.0], [0.0, 1.0]]))
