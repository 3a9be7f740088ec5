"""Low-resolution ADC simulation and its linearized analysis models.

Two distinct layers on purpose: :func:`quantize` applies an actual uniform
mid-rise converter to snapshots, while :func:`aqnm_model` provides the
linear-gain-plus-noise abstraction used by the covariance models and the
quantized bounds.  The distortion factor of the abstraction comes from a
Lloyd-Max optimization for a unit-variance Gaussian input, computed here
rather than copied from tables.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy.stats import norm

from .analysis import CrlbReport, crlb_numeric_fim
from .core import ArrayGeometry, SnapshotMatrix
from .errors import ConfigurationError
from .had import HadConfig

ASYMPTOTIC_BITS = 6  # Lloyd-Max below, high-rate approximation from here up


@dataclass(frozen=True)
class QuantizerConfig:
    """Uniform mid-rise quantizer, independent per I and Q rail.

    The step is frozen at construction (from ``clip_sigma`` times the
    reference per-rail standard deviation), so quantization is a fixed map
    and re-quantizing reconstruction levels is the identity.
    """

    bits: int
    clip_sigma: float = 3.5
    input_std: float = math.sqrt(0.5)
    step: float = field(init=False)

    def __post_init__(self):
        if self.bits < 1:
            raise ValueError("bits must be >= 1")
        if self.clip_sigma <= 0 or self.input_std <= 0:
            raise ValueError("clip range and input std must be positive")
        object.__setattr__(
            self, "step", 2.0 * self.clip_sigma * self.input_std / 2**self.bits
        )

    @classmethod
    def for_snapshots(
        cls, x: SnapshotMatrix, bits: int, clip_sigma: float = 3.5
    ) -> "QuantizerConfig":
        """Config whose clip range matches the measured per-rail std."""
        rails = np.concatenate([x.data.real.ravel(), x.data.imag.ravel()])
        return cls(bits, clip_sigma, float(np.std(rails)))


def _quantize_rail(v: np.ndarray, cfg: QuantizerConfig) -> np.ndarray:
    half_levels = 2 ** (cfg.bits - 1)
    idx = np.floor(v / cfg.step)
    idx = np.clip(idx, -half_levels, half_levels - 1)
    return (idx + 0.5) * cfg.step


def quantize(x: SnapshotMatrix, cfg: QuantizerConfig) -> SnapshotMatrix:
    """Quantize I and Q rails independently; one bit reduces to a sign map."""
    q = _quantize_rail(x.data.real, cfg) + 1j * _quantize_rail(x.data.imag, cfg)
    return SnapshotMatrix(q, x.geometry)


@dataclass(frozen=True)
class AqnmModel:
    """Linear-gain abstraction of a b-bit converter: gain alpha = 1 - rho."""

    bits: int
    rho: float
    alpha: float

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError("alpha must lie in (0, 1]")


@lru_cache(maxsize=None)
def lloyd_max_distortion(bits: int) -> float:
    """MMSE distortion of the optimal ``2**bits``-level scalar quantizer
    for a unit-variance Gaussian, by Lloyd iteration.

    Above ``ASYMPTOTIC_BITS`` the high-rate approximation
    ``(pi sqrt(3) / 2) * 2**(-2 bits)`` is used instead; the two agree to
    a few percent at the crossover and the iteration becomes needlessly
    slow with thousands of levels.
    """
    if bits < 1:
        raise ValueError("bits must be >= 1")
    if bits >= ASYMPTOTIC_BITS:
        return (math.pi * math.sqrt(3.0) / 2.0) * 4.0 ** (-bits)
    n_levels = 2**bits
    # start from Gaussian quantiles, then alternate centroid/midpoint steps
    probs = (np.arange(n_levels) + 0.5) / n_levels
    levels = norm.ppf(probs)
    for _ in range(10_000):
        edges = np.concatenate(([-np.inf], 0.5 * (levels[:-1] + levels[1:]), [np.inf]))
        cdf = norm.cdf(edges)
        pdf = norm.pdf(edges)
        mass = np.diff(cdf)
        new_levels = (pdf[:-1] - pdf[1:]) / mass
        if np.max(np.abs(new_levels - levels)) < 1e-13:
            levels = new_levels
            break
        levels = new_levels
    edges = np.concatenate(([-np.inf], 0.5 * (levels[:-1] + levels[1:]), [np.inf]))
    cdf = norm.cdf(edges)
    pdf = norm.pdf(edges)
    mass = np.diff(cdf)
    centroid = (pdf[:-1] - pdf[1:]) / mass
    # E[(x - Q)^2] = 1 - 2 E[xQ] + E[Q^2], valid for any level placement
    distortion = 1.0 - 2.0 * np.sum(mass * levels * centroid) + np.sum(mass * levels**2)
    return float(distortion)


def aqnm_model(bits: int) -> AqnmModel:
    rho = lloyd_max_distortion(bits)
    return AqnmModel(bits, rho, 1.0 - rho)


def quantized_covariance_model(r_exact: np.ndarray, model: AqnmModel) -> np.ndarray:
    """Covariance seen through b-bit converters on every channel.

    ``R_q = alpha^2 R + alpha (1 - alpha) diag(R)``: the linear gain scales
    the matrix, and the uncorrelated quantization noise adds per-channel
    power proportional to the channel's own power.
    """
    a = model.alpha
    diag = np.diag(np.real(np.diag(r_exact)))
    return a * a * r_exact + a * (1.0 - a) * diag


@dataclass
class MixedAdcConfig:
    """``m0`` high-resolution converters, the rest at ``low_bits``.

    For a full-digital array there is one converter pair per antenna; with
    a hybrid front end (``had`` set) there is one per RF chain.  The first
    ``m0`` channels are the high-resolution ones.
    """

    n_antennas: int
    m0: int
    low_bits: int
    high_bits: int = 12
    had: Optional[HadConfig] = None

    def __post_init__(self):
        if self.had is not None and self.had.n != self.n_antennas:
            raise ConfigurationError("hybrid layout does not match antenna count")
        if not 0 <= self.m0 <= self.n_chains:
            raise ConfigurationError("m0 must lie between 0 and the chain count")
        if self.low_bits < 1:
            raise ConfigurationError("low_bits must be >= 1")

    @property
    def n_chains(self) -> int:
        return self.had.K if self.had is not None else self.n_antennas

    def channel_bits(self) -> np.ndarray:
        bits = np.full(self.n_chains, self.low_bits)
        bits[: self.m0] = self.high_bits
        return bits


def mixed_covariance_model(r_exact: np.ndarray, cfg: MixedAdcConfig) -> np.ndarray:
    """Per-channel AQNM: gain 1 on high-resolution channels, alpha elsewhere."""
    n = r_exact.shape[0]
    if n != cfg.n_chains:
        raise ConfigurationError("covariance size does not match chain count")
    alpha = aqnm_model(cfg.low_bits).alpha
    g = np.ones(n)
    g[cfg.m0 :] = alpha
    r = np.outer(g, g) * r_exact
    noise = g * (1.0 - g) * np.real(np.diag(r_exact))
    return r + np.diag(noise)


def crlb_quantized(
    N: int, snr_db: float, L: int, theta_deg: float, bits: int
) -> CrlbReport:
    """Single-source ULA bound with every channel behind b-bit converters."""
    model = aqnm_model(bits)
    report = crlb_numeric_fim(
        ArrayGeometry.ula(N),
        snr_db,
        L,
        theta_deg,
        cov_transform=lambda r: quantized_covariance_model(r, model),
        bound_kind="Quantized",
    )
    report.parameters["bits"] = bits
    report.parameters["alpha"] = model.alpha
    return report


def performance_loss_db(
    N: int, snr_db: float, L: int, theta_deg: float, bits: int
) -> float:
    """Bound inflation caused by quantization, in dB (nonnegative)."""
    quantized = crlb_quantized(N, snr_db, L, theta_deg, bits).variance_deg2
    exact = crlb_numeric_fim(ArrayGeometry.ula(N), snr_db, L, theta_deg).variance_deg2
    return 10.0 * math.log10(quantized / exact)


@dataclass(frozen=True)
class PowerModel:
    """Per-component consumption in watts; ADC cost doubles per extra bit.

    Values are artifact defaults for trade-off studies, not measurements;
    chain-side electronics (RF chain, converters) dominate the per-antenna
    parts, which is what makes chain-thin front ends pay off.
    """

    p_rf_chain: float = 0.25
    p_adc_ref: float = 1e-4
    p_phase_shifter: float = 0.005
    p_lna: float = 0.01
    p_baseband: float = 0.2

    def __post_init__(self):
        for name in ("p_rf_chain", "p_adc_ref", "p_phase_shifter", "p_lna", "p_baseband"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")


def power_total(cfg: MixedAdcConfig, pm: PowerModel) -> float:
    """LNAs per antenna, shifters per antenna (hybrid only), RF chains and
    two ADC rails per chain, plus baseband."""
    total = cfg.n_antennas * pm.p_lna + pm.p_baseband
    total += cfg.n_chains * pm.p_rf_chain
    if cfg.had is not None:
        total += cfg.n_antennas * pm.p_phase_shifter
    total += float(np.sum(2.0 * pm.p_adc_ref * 2.0 ** cfg.channel_bits()))
    return total


def energy_efficiency(crlb: CrlbReport, p_total: float) -> float:
    """Inverse-RMSE per watt: ``CRLB^(-1/2) / P_total`` in 1/degree/W."""
    if crlb.variance_deg2 <= 0 or p_total <= 0:
        raise ValueError("bound and power must be positive")
    return crlb.variance_deg2**-0.5 / p_total
