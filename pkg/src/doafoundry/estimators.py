"""Classic full-digital DOA estimators on a uniform linear array.

Spectrum-search methods (conventional beamforming, Capon, monopulse
difference, MUSIC) return a :class:`SpectrumCurve`; search-free methods
(root-MUSIC, ESPRIT) return an :class:`EstimateReport` directly.
"""

from __future__ import annotations

import math

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import minimize_scalar

from .core import ArrayGeometry, CovarianceEstimate, steering_matrix, steering_vector
from .errors import (
    DegenerateSubspaceError,
    EstimationFailedError,
    InvalidModelOrderError,
    InvalidRootError,
    UnsupportedGeometryError,
)

DEFAULT_GRID_STEP = 0.1


def default_grid(step: float = DEFAULT_GRID_STEP) -> np.ndarray:
    return np.arange(-90.0, 90.0 + 1e-9, step)


@dataclass
class SpectrumCurve:
    """Sampled angular spectrum: strictly increasing grid plus values."""

    grid: np.ndarray
    values: np.ndarray
    method: str

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.grid.ndim != 1 or self.grid.shape != self.values.shape:
            raise ValueError("grid and values must be 1-D and equal length")
        if np.any(np.diff(self.grid) <= 0):
            raise ValueError("grid must be strictly increasing")


@dataclass
class EstimateReport:
    """Method name, estimated angles (degrees, ascending), diagnostics."""

    method: str
    angles_deg: list
    spectrum: Optional[SpectrumCurve] = None
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        self.angles_deg = sorted(float(a) for a in self.angles_deg)


@dataclass
class PeakSelection:
    """Result of spectrum peak picking with sub-grid refinement."""

    angles_deg: list
    shortfall: bool = False
    boundary: bool = False


def _geometry_of(r: CovarianceEstimate, geometry: Optional[ArrayGeometry]) -> ArrayGeometry:
    g = geometry or r.geometry
    if g is None:
        raise ValueError("covariance carries no geometry; pass one explicitly")
    return g


def _require_ula(geometry: ArrayGeometry):
    spacing = np.diff(geometry.positions)
    if spacing.size and not np.allclose(spacing, spacing[0]):
        raise UnsupportedGeometryError("operation requires uniform element spacing")
    return spacing[0] if spacing.size else 1.0


def beamform_spectrum(
    r: CovarianceEstimate, grid=None, geometry: Optional[ArrayGeometry] = None
) -> SpectrumCurve:
    """Conventional beamformer power ``a^H R a / N^2`` over the grid."""
    g = _geometry_of(r, geometry)
    grid = default_grid() if grid is None else np.asarray(grid, dtype=float)
    A = steering_matrix(g, grid)
    vals = np.real(np.einsum("ng,nm,mg->g", A.conj(), r.matrix, A)) / g.n_elements**2
    return SpectrumCurve(grid, vals, "beamform")


def capon_spectrum(
    r: CovarianceEstimate,
    grid=None,
    diagonal_loading: float = 0.0,
    geometry: Optional[ArrayGeometry] = None,
) -> SpectrumCurve:
    """Minimum-variance spectrum ``1 / (a^H (R + loading I)^{-1} a)``."""
    g = _geometry_of(r, geometry)
    grid = default_grid() if grid is None else np.asarray(grid, dtype=float)
    loaded = r.matrix + diagonal_loading * np.eye(r.n)
    inv = np.linalg.inv(loaded)
    A = steering_matrix(g, grid)
    denom = np.real(np.einsum("ng,nm,mg->g", A.conj(), inv, A))
    return SpectrumCurve(grid, 1.0 / denom, "capon")


def monopulse_difference(
    r: CovarianceEstimate,
    grid=None,
    delta_deg: float = 0.5,
    geometry: Optional[ArrayGeometry] = None,
) -> SpectrumCurve:
    """Signed beam-power difference ``P(theta + d/2) - P(theta - d/2)``.

    The curve crosses zero with negative slope at the emitter direction.
    """
    if delta_deg <= 0:
        raise ValueError("delta_deg must be positive")
    g = _geometry_of(r, geometry)
    if grid is None:
        grid = np.arange(-90.0 + delta_deg / 2, 90.0 - delta_deg / 2 + 1e-9, DEFAULT_GRID_STEP)
    else:
        grid = np.asarray(grid, dtype=float)
        if grid[0] - delta_deg / 2 < -90.0 or grid[-1] + delta_deg / 2 > 90.0:
            raise ValueError("grid plus half-offset must stay inside [-90, 90]")
    hi = beamform_spectrum(r, grid + delta_deg / 2, g).values
    lo = beamform_spectrum(r, grid - delta_deg / 2, g).values
    return SpectrumCurve(grid, hi - lo, "monopulse")


def monopulse_estimate(
    r: CovarianceEstimate,
    grid=None,
    delta_deg: float = 0.5,
    geometry: Optional[ArrayGeometry] = None,
) -> EstimateReport:
    """Zero crossing (falling) of the monopulse curve nearest the beam peak."""
    curve = monopulse_difference(r, grid, delta_deg, geometry)
    bf = beamform_spectrum(r, curve.grid, geometry)
    peak = curve.grid[np.argmax(bf.values)]
    d = curve.values
    falling = np.where((d[:-1] > 0) & (d[1:] <= 0))[0]
    if falling.size == 0:
        raise EstimationFailedError("monopulse curve has no falling zero crossing")
    # linear interpolation of each crossing, then pick nearest to the peak
    t = d[falling] / (d[falling] - d[falling + 1])
    crossings = curve.grid[falling] + t * (curve.grid[falling + 1] - curve.grid[falling])
    est = crossings[np.argmin(np.abs(crossings - peak))]
    return EstimateReport("monopulse", [est], spectrum=curve)


def music_spectrum(
    r: CovarianceEstimate,
    n_sources: int,
    grid=None,
    geometry: Optional[ArrayGeometry] = None,
) -> SpectrumCurve:
    """MUSIC pseudospectrum ``1 / ||E_n^H a(theta)||^2``."""
    _check_order(r.n, n_sources)
    g = _geometry_of(r, geometry)
    grid = default_grid() if grid is None else np.asarray(grid, dtype=float)
    en = r.noise_subspace(n_sources)
    A = steering_matrix(g, grid)
    denom = np.sum(np.abs(en.conj().T @ A) ** 2, axis=0)
    return SpectrumCurve(grid, 1.0 / np.maximum(denom, 1e-300), "music")


def estimate_music(
    r: CovarianceEstimate,
    n_sources: int,
    grid=None,
    geometry: Optional[ArrayGeometry] = None,
    polish: bool = True,
) -> EstimateReport:
    """Grid MUSIC peaks, optionally polished off-grid.

    Polishing maximizes the continuous pseudospectrum in a one-grid-step
    bracket around each picked peak, which removes grid quantization from
    the estimate (needed to approach the CRLB at high SNR).
    """
    g = _geometry_of(r, geometry)
    grid = default_grid() if grid is None else np.asarray(grid, dtype=float)
    curve = music_spectrum(r, n_sources, grid, g)
    picked = pick_peaks(curve, n_sources)
    angles = picked.angles_deg
    if polish and angles:
        en = r.noise_subspace(n_sources)
        step = grid[1] - grid[0]

        def null_power(theta):
            a = steering_vector(g, theta)
            return np.sum(np.abs(en.conj().T @ a) ** 2)

        refined = []
        for ang in angles:
            lo = max(ang - step, -90.0)
            hi = min(ang + step, 90.0)
            res = minimize_scalar(
                null_power, bounds=(lo, hi), method="bounded",
                options={"xatol": 1e-10},
            )
            refined.append(float(res.x))
        angles = refined
    return EstimateReport(
        "music",
        angles,
        spectrum=curve,
        diagnostics={"shortfall": picked.shortfall, "boundary": picked.boundary},
    )


def _check_order(n: int, n_sources: int):
    if not 1 <= n_sources < n:
        raise InvalidModelOrderError(
            f"n_sources must satisfy 1 <= n_sources < N (got {n_sources}, N={n})"
        )


def _parabolic_vertex(f, x: float, h: float = 1e-5) -> float:
    """One exact-parabola step; sharpens a bracketed minimum past the
    optimizer's function-noise floor."""
    y0, y1, y2 = f(x - h), f(x), f(x + h)
    curv = y0 - 2.0 * y1 + y2
    if curv <= 0.0:
        return x
    step = 0.5 * h * (y0 - y2) / curv
    return x + step if abs(step) <= h else x


def _root_music_polynomial(en: np.ndarray) -> np.ndarray:
    """Coefficients (highest degree first) of ``z^{N-1} a^H(1/z) C a(z)``."""
    c = en @ en.conj().T
    n = c.shape[0]
    return np.array([np.trace(c, offset=k) for k in range(n - 1, -n, -1)])


def root_music(
    r: CovarianceEstimate,
    n_sources: int,
    geometry: Optional[ArrayGeometry] = None,
) -> EstimateReport:
    """Search-free MUSIC via rooting of the noise-subspace polynomial.

    The degree ``2(N-1)`` polynomial has conjugate-reciprocal root pairs;
    the ``n_sources`` roots inside and closest to the unit circle map to
    angles through ``theta = arcsin(arg z / (pi d))`` for element spacing
    ``d`` half-wavelengths.
    """
    _check_order(r.n, n_sources)
    g = _geometry_of(r, geometry)
    spacing = _require_ula(g)
    en = r.noise_subspace(n_sources)
    coeffs = _root_music_polynomial(en)
    roots = np.roots(coeffs)
    inside = roots[np.abs(roots) < 1.0]
    if inside.size < n_sources:
        raise DegenerateSubspaceError("too few roots inside the unit circle")
    order = sorted(
        range(inside.size),
        key=lambda i: (abs(1.0 - abs(inside[i])), np.angle(inside[i])),
    )
    chosen = inside[order[:n_sources]]
    pos = g.positions

    def null_power(theta_deg):
        a = np.exp(1j * np.pi * pos * np.sin(np.radians(theta_deg)))
        return float(np.sum(np.abs(en.conj().T @ a) ** 2))

    angles = []
    half = 1.0 / (2.0 * r.n * spacing)
    for z in chosen:
        s = np.angle(z) / (np.pi * spacing)
        if abs(s) > 1.0:
            raise InvalidRootError(f"root phase maps outside [-1, 1]: sin = {s:.6f}")
        # roots on the unit circle are double, capping plain rooting near
        # sqrt(eps); the null minimum localizes far more precisely
        lo = math.degrees(math.asin(max(s - half, -1.0)))
        hi = math.degrees(math.asin(min(s + half, 1.0)))
        res = minimize_scalar(
            null_power, bounds=(lo, hi), method="bounded", options={"xatol": 1e-10}
        )
        angles.append(_parabolic_vertex(null_power, float(res.x)))
    return EstimateReport(
        "root-music", angles, diagnostics={"roots": chosen, "all_roots": roots}
    )


def esprit(
    r: CovarianceEstimate,
    n_sources: int,
    geometry: Optional[ArrayGeometry] = None,
) -> EstimateReport:
    """Least-squares ESPRIT using the two maximally overlapping subarrays."""
    _check_order(r.n, n_sources)
    g = _geometry_of(r, geometry)
    spacing = _require_ula(g)
    es = r.signal_subspace(n_sources)
    e1, e2 = es[:-1, :], es[1:, :]
    if np.linalg.matrix_rank(e1) < n_sources:
        raise DegenerateSubspaceError("subarray signal subspace is rank deficient")
    psi, *_ = np.linalg.lstsq(e1, e2, rcond=None)
    phases = np.angle(np.linalg.eigvals(psi))
    sines = phases / (np.pi * spacing)
    if np.any(np.abs(sines) > 1.0):
        raise InvalidRootError("rotation phase maps outside [-1, 1]")
    angles = np.degrees(np.arcsin(sines))
    return EstimateReport("esprit", list(angles), diagnostics={"rotation": psi})


def pick_peaks(spectrum: SpectrumCurve, k: int) -> PeakSelection:
    """``k`` largest local maxima with 3-point parabolic refinement.

    If fewer than ``k`` interior maxima exist the result is flagged with
    ``shortfall``; a monotone curve falls back to its larger endpoint and
    sets ``boundary``.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    v, g = spectrum.values, spectrum.grid
    interior = np.where((v[1:-1] > v[:-2]) & (v[1:-1] > v[2:]))[0] + 1
    boundary = False
    if interior.size == 0:
        idx = int(np.argmax(v))
        return PeakSelection([float(g[idx])], shortfall=k > 1, boundary=True)
    top = interior[np.argsort(v[interior])[::-1][:k]]
    step = g[1] - g[0]
    angles = []
    for i in sorted(top):
        y0, y1, y2 = v[i - 1], v[i], v[i + 1]
        curv = y0 - 2 * y1 + y2
        offset = 0.5 * (y0 - y2) / curv if curv != 0 else 0.0
        angles.append(float(g[i] + offset * step))
    return PeakSelection(sorted(angles), shortfall=len(angles) < k, boundary=boundary)
