"""Sub-connected hybrid analog-digital array estimation.

A K x M hybrid array feeds each M-element subarray through analog phase
shifters into one RF chain, so only K digital channels exist and the
effective digital element spacing is M half-wavelengths.  That spacing
creates a phase ambiguity: sines separated by multiples of ``2/M`` are
indistinguishable digitally.  The estimators here resolve it by spending
time blocks on analog steering hypotheses; crucially, steering a subarray
at a wrong candidate lands the true direction exactly on a null of the
length-M Dirichlet kernel, so the wrong hypotheses receive no signal
power at all.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import minimize_scalar

from .core import ArrayGeometry, EmitterStream, SnapshotMatrix
from .errors import (
    AmbiguityResolutionError,
    ConfigurationError,
    DegenerateSubspaceError,
)
from .estimators import EstimateReport

TIE_RELATIVE_TOLERANCE = 1e-9


@dataclass
class HadConfig:
    """K subarrays of M elements; unit-modulus phase shifters per block."""

    K: int
    M: int
    phase_set: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.K < 1 or self.M < 1:
            raise ConfigurationError("need K >= 1 and M >= 1")

    @property
    def n(self) -> int:
        return self.K * self.M

    def geometry(self) -> ArrayGeometry:
        return ArrayGeometry.had(self.K, self.M)

    def aligned_phases(self, theta_deg: float) -> np.ndarray:
        """Within-subarray phases that cohere a plane wave from ``theta``."""
        s = math.sin(math.radians(theta_deg))
        row = np.pi * np.arange(self.M) * s
        return np.tile(row, (self.K, 1))


@dataclass
class AmbiguityCandidateSet:
    """Angles whose sines differ from the base estimate by multiples of 2/M."""

    base_estimate_deg: float
    candidates_deg: list

    def __post_init__(self):
        self.candidates_deg = [float(c) for c in self.candidates_deg]
        if any(abs(c) >= 90.0 for c in self.candidates_deg):
            raise ValueError("candidates must lie in (-90, 90)")


def candidate_set(base_sine: float, m: int) -> AmbiguityCandidateSet:
    """All sines ``base + 2q/M`` inside (-1, 1), mapped to angles."""
    qlo = math.ceil((-1.0 - base_sine) * m / 2.0)
    qhi = math.floor((1.0 - base_sine) * m / 2.0)
    sines = [base_sine + 2.0 * q / m for q in range(qlo, qhi + 1)]
    sines = [s for s in sines if abs(s) < 1.0]
    if not sines:
        raise AmbiguityResolutionError("candidate set is empty")
    angles = [math.degrees(math.asin(s)) for s in sines]
    return AmbiguityCandidateSet(math.degrees(math.asin(base_sine)), angles)


def _combine(data: np.ndarray, k: int, m: int, phases: np.ndarray) -> np.ndarray:
    weights = np.exp(-1j * np.asarray(phases)) / m
    return np.einsum("km,kml->kl", weights, data.reshape(k, m, -1))


def analog_combine(x: SnapshotMatrix, cfg: HadConfig, block: int) -> np.ndarray:
    """Apply the block's analog phase shifters: K x L combined output.

    Output row k is ``(1/M) sum_m exp(-j phi_km) x_km`` -- a pure linear
    map, no noise added.
    """
    if x.n_elements != cfg.n:
        raise ConfigurationError("snapshots do not match the K*M hybrid layout")
    if block not in cfg.phase_set:
        raise ConfigurationError(f"no phase set defined for block {block}")
    return _combine(x.data, cfg.K, cfg.M, cfg.phase_set[block])


def _digital_covariance(y: np.ndarray) -> np.ndarray:
    return y @ y.conj().T / y.shape[1]


def _digital_manifold(k: int, m: int, sine):
    return np.exp(1j * np.pi * np.arange(k)[:, None] * m * np.atleast_1d(sine)[None, :])


def _sine_grid(sine_lo: float, sine_hi: float, step_deg: float) -> np.ndarray:
    """Sines of a uniform angle grid covering [asin(lo), asin(hi)]."""
    ang_lo = math.degrees(math.asin(max(sine_lo, -1.0)))
    ang_hi = math.degrees(math.asin(min(sine_hi, 1.0)))
    return np.sin(np.radians(np.arange(ang_lo, ang_hi + 1e-9, step_deg)))


def _refine_sine(rk: np.ndarray, k: int, m: int, s0: float) -> float:
    """Polish a sine estimate inside the digital main lobe around ``s0``.

    The window is half the null-to-null width ``2/(K M)`` so the bounded
    search cannot jump to a sidelobe or a grating lobe.
    """
    half = 1.0 / (k * m)

    def neg_power(s):
        b = _digital_manifold(k, m, s)[:, 0]
        return -float(np.real(b.conj() @ rk @ b))

    res = minimize_scalar(
        neg_power,
        bounds=(max(s0 - half, -1.0), min(s0 + half, 1.0)),
        method="bounded",
        options={"xatol": 1e-12},
    )
    return float(res.x)


def _digital_root_music_sine(rk: np.ndarray, k: int, m: int) -> float:
    """Root-MUSIC base sine on the K digital channels (spacing M).

    The rooted sine is polished against the noise-subspace null spectrum:
    on the unit circle the polynomial roots are double, which caps plain
    rooting at about sqrt(machine eps), while the null minimum localizes
    to machine precision.
    """
    w, v = np.linalg.eigh(rk)
    en = v[:, : k - 1]
    c = en @ en.conj().T
    coeffs = np.array([np.trace(c, offset=d) for d in range(k - 1, -k, -1)])
    roots = np.roots(coeffs)
    inside = roots[np.abs(roots) < 1.0]
    if inside.size == 0:
        raise DegenerateSubspaceError("no digital roots inside the unit circle")
    z = inside[np.argmin(np.abs(1.0 - np.abs(inside)))]
    s0 = float(np.angle(z) / (np.pi * m))
    half = 1.0 / (k * m)

    def null_power(s):
        b = _digital_manifold(k, m, s)[:, 0]
        return float(np.sum(np.abs(en.conj().T @ b) ** 2))

    res = minimize_scalar(
        null_power,
        bounds=(max(s0 - half, -1.0), min(s0 + half, 1.0)),
        method="bounded",
        options={"xatol": 1e-13},
    )
    return float(res.x)


def _elect(cands: AmbiguityCandidateSet, powers: np.ndarray) -> tuple[int, bool]:
    """Index of the winning candidate; ties resolved toward smaller |angle|."""
    order = np.argsort(powers)[::-1]
    best = int(order[0])
    tie = False
    if len(order) > 1:
        top, second = powers[order[0]], powers[order[1]]
        if top - second <= TIE_RELATIVE_TOLERANCE * max(abs(top), 1e-300):
            tie = True
            pair = [int(order[0]), int(order[1])]
            best = min(pair, key=lambda i: abs(cands.candidates_deg[i]))
    return best, tie


def hdapa_estimate(
    stream: EmitterStream,
    cfg: HadConfig,
    coarse_step_deg: Optional[float] = None,
    fine_step_deg: float = 0.05,
) -> EstimateReport:
    """Analog sweep first, digital refinement second.

    Stage 1 (analog): one time block per coarse angle with all subarrays
    steered there; the angle with maximum combined output power wins.
    Stage 2 (digital): one further block steered at the winner, searched on
    a fine grid within one ambiguity period, then polished.  Time blocks
    consumed: number of coarse angles + 1.
    """
    k, m = cfg.K, cfg.M
    if coarse_step_deg is None:
        coarse_step_deg = math.degrees(0.886 * 2.0 / m) / 2.0
    coarse = np.arange(-85.0, 85.0 + 1e-9, coarse_step_deg)
    powers = np.empty(coarse.size)
    for i, ang in enumerate(coarse):
        y = _combine(stream.next_block().data, k, m, cfg.aligned_phases(ang))
        powers[i] = np.mean(np.abs(y) ** 2)
    best = coarse[int(np.argmax(powers))]

    y = _combine(stream.next_block().data, k, m, cfg.aligned_phases(best))
    rk = _digital_covariance(y)
    s_best = math.sin(math.radians(best))
    lo, hi = max(s_best - 1.0 / m, -1.0), min(s_best + 1.0 / m, 1.0)
    fine = _sine_grid(lo, hi, fine_step_deg)
    bf = _digital_manifold(k, m, fine)
    fine_powers = np.real(np.einsum("kg,kj,jg->g", bf.conj(), rk, bf))
    s_hat = _refine_sine(rk, k, m, float(fine[np.argmax(fine_powers)]))
    return EstimateReport(
        "hdapa",
        [math.degrees(math.asin(s_hat))],
        diagnostics={
            "time_blocks": coarse.size + 1,
            "coarse_step_deg": coarse_step_deg,
            "fine_step_deg": fine_step_deg,
        },
    )


def dapa_estimate(
    stream: EmitterStream, cfg: HadConfig, fine_step_deg: float = 0.05
) -> EstimateReport:
    """Digital search first, analog candidate election second.

    Stage 1: one broadside-combined block; the fine digital search over a
    single ambiguity period fixes the sine modulo 2/M.  Stage 2: one block
    per ambiguity candidate, all subarrays steered there; maximum combined
    power elects the candidate.
    """
    k, m = cfg.K, cfg.M
    y = _combine(stream.next_block().data, k, m, np.zeros((k, m)))
    rk = _digital_covariance(y)
    fine = _sine_grid(-1.0 / m, 1.0 / m, fine_step_deg)
    bf = _digital_manifold(k, m, fine)
    fine_powers = np.real(np.einsum("kg,kj,jg->g", bf.conj(), rk, bf))
    s_ref = _refine_sine(rk, k, m, float(fine[np.argmax(fine_powers)]))
    return _apa_election(stream, cfg, s_ref, rk, method="dapa")


def root_music_hdapa(stream: EmitterStream, cfg: HadConfig) -> EstimateReport:
    """Search-free three-step estimator.

    Step 1: root-MUSIC on the K-channel digital covariance (element spacing
    M half-wavelengths) from one broadside-combined block fixes the sine
    modulo 2/M.  Step 2 builds the candidate phases from that root.  Step 3
    elects among the M candidates by analog-aligned power, one block each.
    """
    if cfg.K < 2:
        raise ConfigurationError("root-MUSIC needs at least two digital channels")
    k, m = cfg.K, cfg.M
    y = _combine(stream.next_block().data, k, m, np.zeros((k, m)))
    rk = _digital_covariance(y)
    s_ref = _digital_root_music_sine(rk, k, m)
    return _apa_election(stream, cfg, s_ref, rk, method="root-music-hdapa")


def _apa_election(
    stream: EmitterStream,
    cfg: HadConfig,
    s_ref: float,
    rk: np.ndarray,
    method: str,
) -> EstimateReport:
    k, m = cfg.K, cfg.M
    cands = candidate_set(s_ref, m)
    powers = np.empty(len(cands.candidates_deg))
    for i, ang in enumerate(cands.candidates_deg):
        y = _combine(stream.next_block().data, k, m, cfg.aligned_phases(ang))
        powers[i] = np.mean(np.abs(y) ** 2)
    best, tie = _elect(cands, powers)
    return EstimateReport(
        method,
        [cands.candidates_deg[best]],
        diagnostics={
            "time_blocks": 1 + len(cands.candidates_deg),
            "candidates_deg": cands.candidates_deg,
            "candidate_powers": powers.tolist(),
            "tie_break": tie,
        },
    )


def fast_ambiguity_elimination(stream: EmitterStream, cfg: HadConfig) -> EstimateReport:
    """Two-block ambiguity elimination.

    Block 1 reproduces the root-MUSIC base estimate and its candidates.
    Block 2 splits the K subarrays round-robin into M groups, steers group
    q at candidate q, and elects the group with maximum mean output power.
    Requires ``K >= M`` so every candidate gets at least one subarray.
    """
    k, m = cfg.K, cfg.M
    if k < m:
        raise ConfigurationError(
            f"fast elimination requires K >= M (got K={k}, M={m})"
        )
    y = _combine(stream.next_block().data, k, m, np.zeros((k, m)))
    rk = _digital_covariance(y)
    s_ref = _digital_root_music_sine(rk, k, m)
    cands = candidate_set(s_ref, m)
    n_groups = len(cands.candidates_deg)

    groups = [np.arange(k)[g::n_groups] for g in range(n_groups)]
    phases = np.zeros((k, m))
    for g, subarrays in enumerate(groups):
        row = np.pi * np.arange(m) * math.sin(
            math.radians(cands.candidates_deg[g])
        )
        phases[subarrays] = row
    y2 = _combine(stream.next_block().data, k, m, phases)
    powers = np.array(
        [np.mean(np.abs(y2[subarrays]) ** 2) for subarrays in groups]
    )
    best, tie = _elect(cands, powers)
    return EstimateReport(
        "fast-elimination",
        [cands.candidates_deg[best]],
        diagnostics={
            "time_blocks": 2,
            "candidates_deg": cands.candidates_deg,
            "group_sizes": [int(s.size) for s in groups],
            "group_powers": powers.tolist(),
            "tie_break": tie,
        },
    )


def complexity_flops(method: str, K: int, M: int, L: int, N: int) -> float:
    """Operation counts of the two ambiguity-elimination pipelines."""
    if N != K * M:
        raise ValueError("N must equal K * M")
    common = K**2 * L + 8 * (K - 1) + L * (2 * K - 2) * K
    if method == "original":
        return float(common + L * M * N)
    if method == "fast":
        return float(common + L * N)
    raise ValueError(f"unknown method {method!r}")
