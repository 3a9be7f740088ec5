"""Array geometries, steering vectors, snapshot synthesis, and sample covariance.

Conventions used throughout the toolkit:

* element positions are in units of half a wavelength;
* angles are degrees at public interfaces, radians internally;
* a plane wave from direction ``theta`` puts phase ``+pi * d * sin(theta)``
  on the element at position ``d`` (phase grows with element index for
  positive angles);
* receiver noise is circular complex Gaussian with unit variance per
  element, so per-source SNR is carried entirely by the source power
  ``10**(snr_db / 10)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Union

import numpy as np

from .errors import InvalidGeometryError, UnsupportedGeometryError

Seed = Union[int, Sequence[int]]

GAUSSIAN_IID = "GaussianIID"
CONSTANT_MODULUS = "ConstantModulusRandomPhase"


@dataclass(frozen=True)
class ArrayGeometry:
    """Element positions (half-wavelength units) plus structural metadata.

    ``kind`` is one of ``"ula"``, ``"had"``, ``"coprime"``,
    ``"subarray-cluster"``.  The ``meta`` dict carries the structure that
    created the layout (``K``/``M`` for hybrid arrays, ``p``/``q`` for
    co-prime pairs, subarray origins for clusters).
    """

    positions: np.ndarray
    kind: str = "ula"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float)
        if pos.ndim != 1:
            raise InvalidGeometryError("linear geometries need 1-D positions")
        if pos.size == 0:
            raise InvalidGeometryError("geometry has no elements")
        if np.any(np.diff(pos) <= 0):
            raise InvalidGeometryError(
                "positions must be strictly increasing (no duplicates)"
            )
        object.__setattr__(self, "positions", pos)

    @property
    def n_elements(self) -> int:
        return self.positions.size

    @classmethod
    def ula(cls, n: int) -> "ArrayGeometry":
        """Uniform linear array of ``n`` elements at half-wavelength spacing."""
        if n < 1:
            raise InvalidGeometryError("ULA needs at least one element")
        return cls(np.arange(n, dtype=float), kind="ula", meta={"N": int(n)})

    @classmethod
    def had(cls, k: int, m: int) -> "ArrayGeometry":
        """Sub-connected hybrid array: ``k`` contiguous subarrays of ``m`` elements."""
        if k < 1 or m < 1:
            raise InvalidGeometryError("hybrid array needs K >= 1 and M >= 1")
        n = k * m
        return cls(
            np.arange(n, dtype=float),
            kind="had",
            meta={"K": int(k), "M": int(m), "N": int(n)},
        )


@dataclass(frozen=True)
class EmitterScenario:
    """Far-field narrowband emitters impinging on an array.

    ``snr_db`` is scalar or per-source; ``math.inf`` selects the noiseless
    switch (unit-power sources, zero receiver noise).
    """

    angles_deg: tuple
    snr_db: Union[float, tuple]
    snapshots: int
    signal_model: str = GAUSSIAN_IID
    seed: Seed = 0

    def __post_init__(self):
        angles = tuple(float(a) for a in np.atleast_1d(self.angles_deg))
        if len(set(angles)) != len(angles):
            raise ValueError("emitter angles must be pairwise distinct")
        if any(abs(a) >= 90.0 for a in angles):
            raise ValueError("emitter angles must lie in (-90, 90) degrees")
        if self.snapshots < 1:
            raise ValueError("snapshot count must be >= 1")
        if self.signal_model not in (GAUSSIAN_IID, CONSTANT_MODULUS):
            raise ValueError(f"unknown signal model {self.signal_model!r}")
        object.__setattr__(self, "angles_deg", angles)

    @property
    def n_sources(self) -> int:
        return len(self.angles_deg)

    def source_powers(self) -> np.ndarray:
        """Linear source powers; infinite SNR maps to unit power, no noise."""
        snr = np.broadcast_to(
            np.atleast_1d(np.asarray(self.snr_db, dtype=float)), (self.n_sources,)
        )
        powers = np.where(np.isinf(snr), 1.0, 10.0 ** (snr / 10.0))
        return powers.astype(float)

    @property
    def noiseless(self) -> bool:
        snr = np.atleast_1d(np.asarray(self.snr_db, dtype=float))
        return bool(np.all(np.isinf(snr)))


@dataclass
class SnapshotMatrix:
    """N x L complex baseband samples tied to the geometry that produced them."""

    data: np.ndarray
    geometry: ArrayGeometry

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=complex)
        if self.data.ndim != 2:
            raise ValueError("snapshot matrix must be 2-D (elements x snapshots)")
        if self.data.shape[0] != self.geometry.n_elements:
            raise ValueError(
                f"snapshot rows ({self.data.shape[0]}) do not match geometry "
                f"element count ({self.geometry.n_elements})"
            )

    @property
    def n_elements(self) -> int:
        return self.data.shape[0]

    @property
    def n_snapshots(self) -> int:
        return self.data.shape[1]


@dataclass
class CovarianceEstimate:
    """Hermitian PSD sample covariance with cached eigen-decomposition.

    Eigenvalues are sorted descending; eigenvector columns follow the same
    order.  ``geometry`` is carried along so estimators can rebuild the
    manifold without extra arguments.
    """

    matrix: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    snapshots_used: int
    geometry: Optional[ArrayGeometry] = None

    @classmethod
    def from_matrix(
        cls,
        matrix: np.ndarray,
        snapshots_used: int = 1,
        geometry: Optional[ArrayGeometry] = None,
    ) -> "CovarianceEstimate":
        matrix = np.asarray(matrix, dtype=complex)
        n = matrix.shape[0]
        if matrix.shape != (n, n):
            raise ValueError("covariance must be square")
        scale = max(np.abs(matrix).max(), 1.0)
        if np.abs(matrix - matrix.conj().T).max() > 1e-12 * scale:
            raise ValueError("covariance is not Hermitian to within 1e-12 relative")
        matrix = 0.5 * (matrix + matrix.conj().T)
        w, v = np.linalg.eigh(matrix)
        order = np.argsort(w)[::-1]
        return cls(matrix, w[order], v[:, order], int(snapshots_used), geometry)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def noise_subspace(self, n_sources: int) -> np.ndarray:
        """Eigenvectors of the ``n - n_sources`` smallest eigenvalues."""
        return self.eigenvectors[:, n_sources:]

    def signal_subspace(self, n_sources: int) -> np.ndarray:
        return self.eigenvectors[:, :n_sources]


def steering_vector(geometry: ArrayGeometry, theta_deg: float) -> np.ndarray:
    """Array manifold for a linear geometry.

    Element at position ``d`` (half-wavelength units) receives phase
    ``pi * d * sin(theta)``; the element at position 0 is the reference.
    """
    if geometry.kind not in ("ula", "had", "coprime"):
        raise UnsupportedGeometryError(
            f"no 1-D manifold for geometry kind {geometry.kind!r}"
        )
    if not -90.0 <= theta_deg <= 90.0:
        raise ValueError("theta must lie in [-90, 90] degrees")
    s = math.sin(math.radians(theta_deg))
    return np.exp(1j * np.pi * geometry.positions * s)


def steering_matrix(geometry: ArrayGeometry, thetas_deg) -> np.ndarray:
    """Stacked steering vectors, one column per angle."""
    s = np.sin(np.radians(np.asarray(thetas_deg, dtype=float)))
    return np.exp(1j * np.pi * geometry.positions[:, None] * s[None, :])


def synthesize_snapshots(
    scenario: EmitterScenario, geometry: ArrayGeometry
) -> SnapshotMatrix:
    """Draw one seeded realization of the receive model.

    ``x(t) = sum_k sqrt(p_k) a(theta_k) s_k(t) + n(t)`` with unit-variance
    circular complex Gaussian noise and unit-variance source waveforms, so
    the expected sample covariance is ``sum_k p_k a_k a_k^H + I``.
    """
    rng = np.random.default_rng(scenario.seed)
    n, L = geometry.n_elements, scenario.snapshots
    x = np.zeros((n, L), dtype=complex)
    if scenario.n_sources:
        A = steering_matrix(geometry, scenario.angles_deg)
        amps = np.sqrt(scenario.source_powers())
        if scenario.signal_model == GAUSSIAN_IID:
            S = math.sqrt(0.5) * (
                rng.standard_normal((scenario.n_sources, L))
                + 1j * rng.standard_normal((scenario.n_sources, L))
            )
        else:
            S = np.exp(2j * np.pi * rng.random((scenario.n_sources, L)))
        x = A @ (amps[:, None] * S)
    if not scenario.noiseless:
        x = x + math.sqrt(0.5) * (
            rng.standard_normal((n, L)) + 1j * rng.standard_normal((n, L))
        )
    return SnapshotMatrix(x, geometry)


def sample_covariance(x: SnapshotMatrix) -> CovarianceEstimate:
    """``R = X X^H / L`` with cached descending eigen-decomposition."""
    L = x.n_snapshots
    r = x.data @ x.data.conj().T / L
    return CovarianceEstimate.from_matrix(r, snapshots_used=L, geometry=x.geometry)


class EmitterStream:
    """Fresh seeded snapshot blocks from one scenario, one block per call.

    Block ``b`` is synthesized with seed ``[*seed, b]`` so the sequence is
    reproducible and blocks are independent.  Used by the hybrid-array
    estimators, which spend one time block per analog steering hypothesis.
    """

    def __init__(self, scenario: EmitterScenario, geometry: ArrayGeometry):
        self.scenario = scenario
        self.geometry = geometry
        self._block = 0

    @property
    def blocks_drawn(self) -> int:
        return self._block

    def next_block(self) -> SnapshotMatrix:
        base = self.scenario.seed
        key = list(base) if isinstance(base, (tuple, list)) else [base]
        block_scenario = replace(self.scenario, seed=key + [self._block])
        self._block += 1
        return synthesize_snapshots(block_scenario, self.geometry)
