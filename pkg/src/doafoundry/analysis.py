"""Estimation-accuracy oracles: CRLB closed form, numeric Fisher information,
beamwidth, and the subspace resolution law.

The numeric Fisher information is the single arbiter for every covariance
model the toolkit simulates (full digital, analog-combined, quantized,
mixed-ADC): it differentiates the model covariance ``R(theta)`` and applies
the Gaussian-observation information formula
``F = L * tr(R^{-1} R' R^{-1} R')``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .core import ArrayGeometry, EmitterScenario, sample_covariance, synthesize_snapshots
from .errors import UnidentifiableError
from .estimators import estimate_music, music_spectrum, pick_peaks

DIVERGENCE_CUTOFF_DEG = 89.9


@dataclass
class CrlbReport:
    """Variance lower bound in squared degrees plus provenance of the model."""

    variance_deg2: float
    bound_kind: str
    parameters: dict = field(default_factory=dict)

    @property
    def rmse_deg(self) -> float:
        return math.sqrt(self.variance_deg2)


def crlb_ula_single(N: int, snr_db: float, L: int, theta_deg: float) -> CrlbReport:
    """Closed-form single-source ULA bound.

    ``var = 6 / (L * gamma * N (N^2 - 1) * pi^2 * cos^2 theta)`` in rad^2,
    converted to deg^2.  Diverges toward endfire; past 89.9 deg the report
    carries a ``divergent`` flag and an infinite bound.
    """
    if N < 2:
        raise ValueError("closed form needs N >= 2")
    if L < 1:
        raise ValueError("snapshot count must be >= 1")
    params = {"N": N, "snr_db": snr_db, "L": L, "theta_deg": theta_deg}
    if abs(theta_deg) > DIVERGENCE_CUTOFF_DEG:
        return CrlbReport(math.inf, "FullDigitalUla", {**params, "divergent": True})
    gamma = 10.0 ** (snr_db / 10.0)
    cos2 = math.cos(math.radians(theta_deg)) ** 2
    var_rad2 = 6.0 / (L * gamma * N * (N**2 - 1) * math.pi**2 * cos2)
    var_deg2 = var_rad2 * (180.0 / math.pi) ** 2
    return CrlbReport(var_deg2, "FullDigitalUla", params)


def exact_covariance_fn(
    geometry: ArrayGeometry, snr_db: float
) -> Callable[[float], np.ndarray]:
    """Model covariance ``R(theta) = gamma a a^H + I`` as a function of radians."""
    gamma = 10.0 ** (snr_db / 10.0)
    pos = geometry.positions

    def model(theta_rad: float) -> np.ndarray:
        a = np.exp(1j * np.pi * pos * math.sin(theta_rad))
        return gamma * np.outer(a, a.conj()) + np.eye(pos.size)

    return model


def hybrid_covariance_fn(
    geometry: ArrayGeometry,
    snr_db: float,
    combiner_phases: np.ndarray,
) -> Callable[[float], np.ndarray]:
    """Covariance of the K analog-combined channels.

    ``combiner_phases`` is (K, M): subarray k applies weights
    ``exp(-j phi_km) / M`` to its M elements, so channel noise shrinks to
    ``1/M`` and the signal passes through the combined manifold.
    """
    phases = np.asarray(combiner_phases, dtype=float)
    k, m = phases.shape
    if k * m != geometry.n_elements:
        raise ValueError("combiner shape does not match geometry")
    gamma = 10.0 ** (snr_db / 10.0)
    pos = geometry.positions.reshape(k, m)
    weights = np.exp(-1j * phases) / m

    def model(theta_rad: float) -> np.ndarray:
        a = np.exp(1j * np.pi * pos * math.sin(theta_rad))
        g = np.sum(weights * a, axis=1)
        return gamma * np.outer(g, g.conj()) + np.eye(k) / m

    return model


def crlb_numeric_fim(
    geometry: ArrayGeometry,
    snr_db: float,
    L: int,
    theta_deg: float,
    cov_transform: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    combiner_phases: Optional[np.ndarray] = None,
    step_rad: float = 1e-4,
    bound_kind: str = "NumericFim",
) -> CrlbReport:
    """Single-source bound from central finite differences of ``R(theta)``.

    ``cov_transform`` post-processes the model covariance (quantization,
    mixed ADCs); ``combiner_phases`` switches to the analog-combined
    channel model.  A Richardson half-step pass both checks convergence of
    the derivative and supplies the extrapolated value that is actually
    used.
    """
    if combiner_phases is not None:
        base = hybrid_covariance_fn(geometry, snr_db, combiner_phases)
    else:
        base = exact_covariance_fn(geometry, snr_db)
    transform = cov_transform if cov_transform is not None else (lambda r: r)

    def model(theta_rad: float) -> np.ndarray:
        return transform(base(theta_rad))

    theta = math.radians(theta_deg)

    def derivative(h: float) -> np.ndarray:
        return (model(theta + h) - model(theta - h)) / (2.0 * h)

    d1 = derivative(step_rad)
    d2 = derivative(step_rad / 2.0)
    scale = max(np.linalg.norm(d2), 1e-300)
    if np.linalg.norm(d2 - d1) / scale > 1e-4:
        raise UnidentifiableError(
            "finite-difference derivative of R(theta) failed the half-step check"
        )
    dr = (4.0 * d2 - d1) / 3.0

    r0 = model(theta)
    rinv = np.linalg.inv(r0)
    fim = L * np.real(np.trace(rinv @ dr @ rinv @ dr))
    if not np.isfinite(fim) or fim <= 0.0:
        raise UnidentifiableError("Fisher information is not positive")
    var_deg2 = (1.0 / fim) * (180.0 / math.pi) ** 2
    return CrlbReport(
        var_deg2,
        bound_kind,
        {
            "N": geometry.n_elements,
            "snr_db": snr_db,
            "L": L,
            "theta_deg": theta_deg,
            "fim": fim,
        },
    )


def beamwidth_deg(N: int) -> float:
    """3-dB beamwidth of an N-element half-wavelength ULA at broadside."""
    if N < 2:
        raise ValueError("beamwidth needs N >= 2")
    return math.degrees(0.886 * 2.0 / N)


def resolution_predict(bw_deg: float, snr_db: float) -> float:
    """Subspace-method resolution: beamwidth shrunk by the fourth root of SNR."""
    if not math.isfinite(snr_db):
        raise ValueError("snr_db must be finite")
    gamma = 10.0 ** (snr_db / 10.0)
    return bw_deg / gamma**0.25


def _two_peak_success(
    estimator: str,
    n: int,
    L: int,
    snr_db: float,
    delta_deg: float,
    trials: int,
    seed: int,
) -> float:
    geometry = ArrayGeometry.ula(n)
    sources = np.array([-delta_deg / 2.0, delta_deg / 2.0])
    half = delta_deg / 2.0
    hits = 0
    for t in range(trials):
        sc = EmitterScenario(
            tuple(sources), snr_db, snapshots=L, seed=[seed, int(round(delta_deg * 1e4)), t]
        )
        r = sample_covariance(synthesize_snapshots(sc, geometry))
        if estimator == "music":
            curve = music_spectrum(r, 2)
        elif estimator == "beamform":
            from .estimators import beamform_spectrum

            curve = beamform_spectrum(r)
        else:
            raise ValueError(f"unknown estimator {estimator!r}")
        sel = pick_peaks(curve, 2)
        if len(sel.angles_deg) == 2 and not sel.shortfall:
            est = np.sort(sel.angles_deg)
            if np.all(np.abs(est - sources) < half):
                hits += 1
    return hits / trials


def empirical_resolution(
    estimator: str,
    N: int,
    L: int,
    snr_db: float,
    trials: int = 80,
    seed: int = 0,
    tol_deg: float = 0.1,
    bracket=(0.05, 25.0),
) -> float:
    """Smallest separation resolved in at least half the trials.

    Resolution criterion: both spectrum peaks present, each within half the
    separation of its own source.  Bisection runs to ``tol_deg``.
    """
    lo, hi = bracket
    if _two_peak_success(estimator, N, L, snr_db, hi, trials, seed) < 0.5:
        raise ValueError("upper bracket does not resolve; widen the bracket")
    while hi - lo > tol_deg:
        mid = 0.5 * (lo + hi)
        if _two_peak_success(estimator, N, L, snr_db, mid, trials, seed) >= 0.5:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)
