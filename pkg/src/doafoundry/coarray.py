"""Co-prime arrays and difference-coarray processing.

The difference coarray of a sparse integer-position array contains far
more distinct lags than the array has sensors; averaging the sample
covariance over equal lags and spatially smoothing the central contiguous
segment yields a virtual-ULA covariance whose MUSIC spectrum resolves
more sources than physical sensors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import ArrayGeometry, CovarianceEstimate, SnapshotMatrix, sample_covariance
from .errors import (
    InsufficientCoarrayError,
    InvalidGeometryError,
    OverCapacityError,
)
from .estimators import EstimateReport, SpectrumCurve, pick_peaks


@dataclass
class CoarrayStructure:
    """Virtual lags with multiplicities and the contiguous central segment."""

    virtual_positions: np.ndarray  # sorted integer lags, symmetric about 0
    weights: np.ndarray  # multiplicity per lag
    contiguous_half_length: int  # segment spans -V .. V

    @property
    def contiguous_segment(self) -> np.ndarray:
        v = self.contiguous_half_length
        return np.arange(-v, v + 1)


def coprime_positions(p: int, q: int) -> ArrayGeometry:
    """Extended co-prime layout: ``p`` periods of ``q`` and ``2q`` periods of ``p``.

    Element count is ``p + 2q - 1`` (the origin is shared).
    """
    if math.gcd(p, q) != 1:
        raise InvalidGeometryError(f"({p}, {q}) is not a co-prime pair")
    if not 0 < p < q:
        raise InvalidGeometryError("need 0 < p < q")
    positions = sorted({q * i for i in range(p)} | {p * i for i in range(2 * q)})
    return ArrayGeometry(
        np.asarray(positions, dtype=float),
        kind="coprime",
        meta={"p": int(p), "q": int(q)},
    )


def difference_coarray(geometry: ArrayGeometry) -> CoarrayStructure:
    """All pairwise position differences with multiplicities."""
    pos = geometry.positions
    ints = np.rint(pos).astype(int)
    if np.max(np.abs(pos - ints)) > 1e-9:
        raise InvalidGeometryError("difference coarray needs integer positions")
    diffs = (ints[:, None] - ints[None, :]).ravel()
    lags, counts = np.unique(diffs, return_counts=True)
    lag_set = set(lags.tolist())
    v = 0
    while (v + 1) in lag_set:
        v += 1
    return CoarrayStructure(lags, counts, v)


def coarray_covariance(
    r: CovarianceEstimate, structure: CoarrayStructure
) -> np.ndarray:
    """Spatially smoothed virtual-ULA covariance from lag-averaged entries.

    The weight-normalized autocorrelation over lags ``-V..V`` fills a
    Hermitian Toeplitz matrix ``T``; the smoothed covariance is ``T T^H``
    (the sum of its column outer products), which is PSD and shares the
    signal subspace of the virtual ULA of ``V + 1`` elements.
    """
    v = structure.contiguous_half_length
    if 2 * v + 1 < 3:
        raise InsufficientCoarrayError("contiguous coarray segment shorter than 3 lags")
    geometry = r.geometry
    if geometry is None:
        raise ValueError("covariance carries no geometry")
    ints = np.rint(geometry.positions).astype(int)
    n = ints.size
    lag_sum: dict[int, complex] = {}
    lag_cnt: dict[int, int] = {}
    for i in range(n):
        for j in range(n):
            lag = int(ints[i] - ints[j])
            if -v <= lag <= v:
                lag_sum[lag] = lag_sum.get(lag, 0.0) + r.matrix[i, j]
                lag_cnt[lag] = lag_cnt.get(lag, 0) + 1
    z = np.array([lag_sum[l] / lag_cnt[l] for l in range(-v, v + 1)])
    m = v + 1
    # column i of T holds z[k - i] for k = 0..V
    t = np.empty((m, m), dtype=complex)
    for i in range(m):
        t[:, i] = z[v - i : 2 * v + 1 - i]
    return t @ t.conj().T


def coarray_music(
    x: SnapshotMatrix,
    n_sources: int,
    grid=None,
    grid_step: float = 0.05,
) -> EstimateReport:
    """MUSIC on the smoothed virtual covariance of a sparse array.

    Supports up to ``V`` sources, where ``V`` is the one-sided contiguous
    coarray length; that usually exceeds the physical sensor count.
    """
    structure = difference_coarray(x.geometry)
    v = structure.contiguous_half_length
    if n_sources > v:
        raise OverCapacityError(
            f"{n_sources} sources exceed the virtual aperture capacity V={v}"
        )
    r = sample_covariance(x)
    smoothed = coarray_covariance(r, structure)
    virtual = ArrayGeometry(np.arange(v + 1, dtype=float), kind="ula")
    rv = CovarianceEstimate.from_matrix(
        smoothed, snapshots_used=x.n_snapshots, geometry=virtual
    )
    if grid is None:
        grid = np.arange(-90.0, 90.0 + 1e-9, grid_step)
    en = rv.noise_subspace(n_sources)
    a = np.exp(
        1j
        * np.pi
        * virtual.positions[:, None]
        * np.sin(np.radians(np.asarray(grid)))[None, :]
    )
    denom = np.sum(np.abs(en.conj().T @ a) ** 2, axis=0)
    curve = SpectrumCurve(np.asarray(grid), 1.0 / np.maximum(denom, 1e-300), "coarray-music")
    picked = pick_peaks(curve, n_sources)
    return EstimateReport(
        "coarray-music",
        picked.angles_deg,
        spectrum=curve,
        diagnostics={
            "virtual_half_length": v,
            "physical_sensors": x.n_elements,
            "shortfall": picked.shortfall,
        },
    )
