"""Scenario configuration, seeded experiment orchestration, CSV emission.

A scenario is a JSON document ``{"kind", "seed", "trials", "params"}``.
Every CSV row carries the scenario's content hash, so output files are
traceable to the exact configuration that produced them; per-trial seeds
derive from the master seed and the trial index, making results
independent of execution order.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import analysis, coarray, detection, estimators, had, localization, quantization
from .core import ArrayGeometry, EmitterScenario, EmitterStream, sample_covariance, synthesize_snapshots
from .errors import ConfigurationError

EXPERIMENT_KINDS = (
    "detect",
    "estimate",
    "had",
    "quantize-sweep",
    "coarray",
    "localize",
    "crlb",
    "resolution",
)


@dataclass
class ScenarioConfig:
    kind: str
    seed: int
    params: dict = field(default_factory=dict)
    trials: int = 100
    out: str = "out"

    def __post_init__(self):
        if self.kind not in EXPERIMENT_KINDS:
            raise ConfigurationError(
                f"field 'kind': unknown experiment kind {self.kind!r}; "
                f"choose from {', '.join(EXPERIMENT_KINDS)}"
            )
        if self.seed is None:
            raise ConfigurationError("field 'seed': a master seed is mandatory")
        if self.trials < 1:
            raise ConfigurationError("field 'trials': must be >= 1")

    @classmethod
    def from_json(cls, path) -> "ScenarioConfig":
        with open(path) as fh:
            raw = json.load(fh)
        return cls.from_dict(raw)

    @classmethod
    def from_dict(cls, raw: dict) -> "ScenarioConfig":
        unknown = set(raw) - {"kind", "seed", "params", "trials", "out"}
        if unknown:
            raise ConfigurationError(f"unknown config fields: {sorted(unknown)}")
        for required in ("kind", "seed"):
            if required not in raw:
                raise ConfigurationError(f"field {required!r}: missing")
        return cls(
            kind=raw["kind"],
            seed=raw["seed"],
            params=raw.get("params", {}),
            trials=raw.get("trials", 100),
            out=raw.get("out", "out"),
        )

    def config_hash(self) -> str:
        payload = json.dumps(
            {"kind": self.kind, "seed": self.seed, "trials": self.trials, "params": self.params},
            sort_keys=True,
        )
        return hashlib.sha256(payload.encode()).hexdigest()[:12]


def _write_csv(path: Path, columns, rows, config_hash: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(columns) + ["config_hash"])
        for row in rows:
            formatted = [
                f"{v:.12g}" if isinstance(v, float) else v for v in row
            ]
            writer.writerow(formatted + [config_hash])
    return path


_MISSING = object()


def _param(cfg: ScenarioConfig, name: str, default=_MISSING):
    if name in cfg.params:
        return cfg.params[name]
    if default is not _MISSING:
        return default
    raise ConfigurationError(f"field 'params.{name}': missing for kind {cfg.kind!r}")


# ---------------------------------------------------------------------------
# experiment runners; each returns (files, summary_lines)


def _run_detect(cfg: ScenarioConfig, outdir: Path):
    n = int(_param(cfg, "N", 8))
    L = int(_param(cfg, "L", 100))
    pfa = float(_param(cfg, "pfa", 0.01))
    snr_grid = [float(s) for s in _param(cfg, "snr_grid_db", [-20, -15, -10, -5, 0])]
    stats = _param(cfg, "statistics", list(detection.ALL_STATISTICS))
    rows = []
    summary = []
    ref = snr_grid[len(snr_grid) // 2]
    for stat in stats:
        curve = detection.pd_curve(
            stat, n, L, pfa, snr_grid, cfg.trials, [cfg.seed, hash(stat) % (1 << 16)]
        )
        for r in curve:
            rows.append(
                [r["snr_db"], r["statistic"], r["pd"], r["pd_stderr"], r["pfa_target"], r["threshold"]]
            )
        at_ref = next(r for r in curve if r["snr_db"] == ref)
        summary.append(
            f"{stat}: threshold={curve[0]['threshold']:.4f}, Pd@{ref:g}dB={at_ref['pd']:.3f}"
        )
    path = _write_csv(
        outdir / "detection.csv",
        ["snr_db", "statistic", "pd", "pd_stderr", "pfa_target", "threshold"],
        rows,
        cfg.config_hash(),
    )
    return [path], summary


def _run_estimate(cfg: ScenarioConfig, outdir: Path):
    n = int(_param(cfg, "N", 16))
    L = int(_param(cfg, "L", 500))
    angles = [float(a) for a in _param(cfg, "angles_deg", [0.0, 5.0])]
    snr_list = [float(s) for s in _param(cfg, "snr_db", [10.0, 0.0])]
    methods = _param(cfg, "methods", ["beamform", "music"])
    grid_step = float(_param(cfg, "grid_step_deg", 0.1))
    geometry = ArrayGeometry.ula(n)
    grid = np.arange(-90.0, 90.0 + 1e-9, grid_step)
    spec_rows, est_rows = [], []
    summary = []
    for snr in snr_list:
        sc = EmitterScenario(tuple(angles), snr, snapshots=L, seed=[cfg.seed, int(snr * 1000) & 0xFFFF])
        r = sample_covariance(synthesize_snapshots(sc, geometry))
        for method in methods:
            if method == "beamform":
                curve = estimators.beamform_spectrum(r, grid)
            elif method == "capon":
                curve = estimators.capon_spectrum(r, grid, diagonal_loading=1e-6)
            elif method == "music":
                curve = estimators.music_spectrum(r, len(angles), grid)
            elif method == "monopulse":
                curve = estimators.monopulse_difference(r, grid[5:-5])
            else:
                raise ConfigurationError(f"field 'params.methods': unknown method {method!r}")
            for g, v in zip(curve.grid, curve.values):
                spec_rows.append([float(g), float(v), method, snr])
            picked = estimators.pick_peaks(curve, len(angles))
            est_rows.append([method, snr, ";".join(f"{a:.4f}" for a in picked.angles_deg)])
            summary.append(f"{method}@{snr:g}dB: peaks {picked.angles_deg}")
    f1 = _write_csv(
        outdir / "spectrum.csv", ["angle_deg", "value", "method", "snr_db"], spec_rows, cfg.config_hash()
    )
    f2 = _write_csv(
        outdir / "estimates.csv", ["method", "snr_db", "peaks_deg"], est_rows, cfg.config_hash()
    )
    return [f1, f2], summary


def _run_had(cfg: ScenarioConfig, outdir: Path):
    k = int(_param(cfg, "K", 16))
    m = int(_param(cfg, "M", 4))
    L = int(_param(cfg, "L", 100))
    snr = float(_param(cfg, "snr_db", 10.0))
    theta = float(_param(cfg, "theta_deg", 20.0))
    methods = _param(cfg, "methods", ["root-music-hdapa", "fast"])
    runners = {
        "root-music-hdapa": had.root_music_hdapa,
        "fast": had.fast_ambiguity_elimination,
        "hdapa": had.hdapa_estimate,
        "dapa": had.dapa_estimate,
    }
    for method in methods:
        if method not in runners:
            raise ConfigurationError(f"field 'params.methods': unknown method {method!r}")
        if method == "fast" and k < m:
            raise ConfigurationError(
                "field 'params.K': the fast elimination method requires K >= M"
            )
    hcfg = had.HadConfig(k, m)
    n = hcfg.n
    flops = {
        "root-music-hdapa": had.complexity_flops("original", k, m, L, n),
        "fast": had.complexity_flops("fast", k, m, L, n),
    }
    rows = []
    errors = {method: [] for method in methods}
    blocks = {}
    for t in range(cfg.trials):
        for method in methods:
            stream = EmitterStream(
                EmitterScenario((theta,), snr, snapshots=L, seed=[cfg.seed, t]),
                hcfg.geometry(),
            )
            report = runners[method](stream, hcfg)
            est = report.angles_deg[0]
            errors[method].append((est - theta) ** 2)
            blocks[method] = report.diagnostics["time_blocks"]
            rows.append(
                [t, method, est, est - theta, report.diagnostics["time_blocks"],
                 flops.get(method, float("nan"))]
            )
    bound = analysis.crlb_numeric_fim(
        hcfg.geometry(), snr, L, theta,
        combiner_phases=np.zeros((k, m)), bound_kind="Hybrid",
    )
    summary = [f"hybrid CRLB rmse: {bound.rmse_deg:.6f} deg"]
    for method in methods:
        rmse_val = math.sqrt(np.mean(errors[method]))
        gap = 20.0 * math.log10(rmse_val / bound.rmse_deg)
        summary.append(
            f"{method}: rmse={rmse_val:.6f} deg, gap-to-bound={gap:+.2f} dB, "
            f"time_blocks={blocks[method]}, flops={flops.get(method, float('nan')):.0f}"
        )
    path = _write_csv(
        outdir / "had.csv",
        ["trial", "method", "estimate_deg", "error_deg", "time_blocks", "flops"],
        rows,
        cfg.config_hash(),
    )
    return [path], summary


def _run_quantize_sweep(cfg: ScenarioConfig, outdir: Path):
    mode = _param(cfg, "sweep", "bits-snr")
    if mode == "bits-snr":
        return _run_bits_sweep(cfg, outdir)
    if mode == "efficiency":
        return _run_efficiency_sweep(cfg, outdir)
    raise ConfigurationError(f"field 'params.sweep': unknown sweep {mode!r}")


def _run_bits_sweep(cfg: ScenarioConfig, outdir: Path):
    n = int(_param(cfg, "N", 32))
    L = int(_param(cfg, "L", 100))
    theta = float(_param(cfg, "theta_deg", 10.0))
    bits_grid = [int(b) for b in _param(cfg, "bits_grid", [1, 2, 3, 4, 5, 6, 8])]
    snr_grid = [float(s) for s in _param(cfg, "snr_grid_db", [-10, -5, 0, 5, 10])]
    rows = []
    for bits in bits_grid:
        for snr in snr_grid:
            bound = quantization.crlb_quantized(n, snr, L, theta, bits)
            rows.append([bits, snr, bound.variance_deg2])
    loss4 = quantization.performance_loss_db(n, 0.0, L, theta, 4)
    loss5 = quantization.performance_loss_db(n, 0.0, L, theta, 5)
    summary = [
        f"performance loss at 0 dB: {loss4:.4f} dB (4 bits) vs {loss5:.4f} dB (5 bits)",
        f"loss(4)-loss(5) = {loss4 - loss5:.4f} dB",
    ]
    path = _write_csv(
        outdir / "bits_tradeoff.csv", ["bits", "snr_db", "bound_deg2"], rows, cfg.config_hash()
    )
    return [path], summary


def _run_efficiency_sweep(cfg: ScenarioConfig, outdir: Path):
    n = int(_param(cfg, "N", 128))
    L = int(_param(cfg, "L", 100))
    theta = float(_param(cfg, "theta_deg", 10.0))
    snr = float(_param(cfg, "snr_db", 10.0))
    bits_grid = [int(b) for b in _param(cfg, "bits_grid", [1, 2, 4])]
    ma_grid = [int(m) for m in _param(cfg, "subarray_sizes", [1, 8])]
    pm = quantization.PowerModel(**_param(cfg, "power_model", {}))
    rows = []
    summary = []
    for ma in ma_grid:
        k = n // ma
        hcfg = had.HadConfig(k, ma) if ma > 1 else None
        geometry = ArrayGeometry.had(k, ma) if ma > 1 else ArrayGeometry.ula(n)
        m0_grid = sorted({0, k // 4, k // 2, k})
        for bits in bits_grid:
            for m0 in m0_grid:
                mixed = quantization.MixedAdcConfig(n, m0, bits, had=hcfg)
                transform = lambda r, _mix=mixed: quantization.mixed_covariance_model(r, _mix)
                combiner = np.zeros((k, ma)) if ma > 1 else None
                if combiner is not None:
                    # analog stages aligned on the emitter during estimation
                    combiner = had.HadConfig(k, ma).aligned_phases(theta)
                bound = analysis.crlb_numeric_fim(
                    geometry, snr, L, theta,
                    cov_transform=transform,
                    combiner_phases=combiner,
                    bound_kind="Hybrid" if ma > 1 else "Quantized",
                )
                p = quantization.power_total(mixed, pm)
                eta = quantization.energy_efficiency(bound, p)
                rows.append([bound.variance_deg2, eta, m0, ma, bits])
        summary.append(f"M_a={ma}: chains={k}")
    path = _write_csv(
        outdir / "efficiency.csv", ["crlb_deg2", "eta", "m0", "M_a", "bits"], rows, cfg.config_hash()
    )
    best = max(rows, key=lambda r: r[1])
    summary.append(f"best eta={best[1]:.3f} 1/deg/W at m0={best[2]}, M_a={best[3]}, bits={best[4]}")
    return [path], summary


def _run_coarray(cfg: ScenarioConfig, outdir: Path):
    p = int(_param(cfg, "p", 3))
    q = int(_param(cfg, "q", 5))
    L = int(_param(cfg, "L", 2000))
    snr = float(_param(cfg, "snr_db", 10.0))
    n_sources = int(_param(cfg, "n_sources", 16))
    angles = _param(cfg, "angles_deg", None)  # None -> uniform fan
    if angles is None:
        angles = np.linspace(-60.0, 60.0, n_sources).tolist()
    geometry = coarray.coprime_positions(p, q)
    structure = coarray.difference_coarray(geometry)
    hits = 0
    spec_rows = []
    for t in range(cfg.trials):
        sc = EmitterScenario(tuple(angles), snr, snapshots=L, seed=[cfg.seed, t])
        x = synthesize_snapshots(sc, geometry)
        rep = coarray.coarray_music(x, n_sources)
        est = np.sort(rep.angles_deg)
        ok = est.size == n_sources and np.all(np.abs(est - np.sort(angles)) < 1.0)
        hits += ok
        if t == 0:
            for g, v in zip(rep.spectrum.grid, rep.spectrum.values):
                spec_rows.append([float(g), float(v), rep.method, snr])
    f1 = _write_csv(
        outdir / "coarray_spectrum.csv",
        ["angle_deg", "value", "method", "snr_db"],
        spec_rows,
        cfg.config_hash(),
    )
    summary = [
        f"sensors={geometry.n_elements}, contiguous half-length V={structure.contiguous_half_length}",
        f"all-{n_sources}-sources-within-1deg rate: {hits}/{cfg.trials}",
    ]
    return [f1], summary


def _run_localize(cfg: ScenarioConfig, outdir: Path):
    spacing = float(_param(cfg, "subarray_spacing_m", 1.0))
    n_sub = int(_param(cfg, "n_subarrays", 3))
    distances = [float(d) for d in _param(cfg, "distances_m", [10.0, 20.0, 30.0])]
    variances = [float(v) for v in _param(cfg, "angle_variance_deg2", [1e-4, 1e-3, 1e-2, 1e-1, 1.0])]
    solver = _param(cfg, "solver", "irls")
    height = float(_param(cfg, "target_height_m", 0.5))
    n_t = int(_param(cfg, "N_t", cfg.trials))
    origins = [np.array([i * spacing, 0.0, 0.0]) for i in range(n_sub)]
    center_x = spacing * (n_sub - 1) / 2.0
    rows = []
    summary = []
    for dist in distances:
        target = np.array([center_x, dist, height])
        for var in variances:
            sigma = math.sqrt(var)
            bound = localization.crlb_position(origins, target, var)
            errs = np.empty(n_t)
            for t in range(n_t):
                est = localization.localization_pipeline(
                    target, origins, sigma, seed=[cfg.seed, int(dist), t], solver=solver
                )
                errs[t] = np.sum((est.u - target) ** 2)
            rmse_m = math.sqrt(errs.mean())
            rows.append([var, dist, rmse_m, bound.rmse_m, solver])
        summary.append(f"distance {dist:g} m: rmse at smallest variance {rows[-len(variances)][2]:.4f} m")
    path = _write_csv(
        outdir / "localization.csv",
        ["angle_variance_deg2", "distance_m", "rmse_m", "crlb_rmse_m", "solver"],
        rows,
        cfg.config_hash(),
    )
    return [path], summary


def _run_crlb(cfg: ScenarioConfig, outdir: Path):
    L = int(_param(cfg, "L", 500))
    theta = float(_param(cfg, "theta_deg", 10.0))
    snr = float(_param(cfg, "snr_db", 10.0))
    n_grid = [int(n) for n in _param(cfg, "n_grid", [8, 16, 32, 64, 128])]
    snr_grid = [float(s) for s in _param(cfg, "snr_grid_db", [0, 5, 10, 15, 20])]
    rows = []
    for n in n_grid:
        rep = analysis.crlb_ula_single(n, snr, L, theta)
        rows.append(["N", float(n), rep.variance_deg2, rep.bound_kind])
    for s in snr_grid:
        rep = analysis.crlb_ula_single(int(n_grid[len(n_grid) // 2]), s, L, theta)
        rows.append(["snr_db", s, rep.variance_deg2, rep.bound_kind])
    path = _write_csv(
        outdir / "crlb.csv", ["x_name", "x_value", "bound_deg2", "kind"], rows, cfg.config_hash()
    )
    mid = analysis.crlb_ula_single(16, snr, L, theta)
    fim = analysis.crlb_numeric_fim(ArrayGeometry.ula(16), snr, L, theta)
    summary = [
        f"closed form vs numeric FIM at N=16: {mid.variance_deg2:.3e} vs {fim.variance_deg2:.3e} deg^2"
    ]
    return [path], summary


def _run_resolution(cfg: ScenarioConfig, outdir: Path):
    n = int(_param(cfg, "N", 16))
    L = int(_param(cfg, "L", 50))
    estimator = _param(cfg, "estimator", "music")
    snr_grid = [float(s) for s in _param(cfg, "snr_grid_db", [0.0, 10.0, 20.0])]
    bw = analysis.beamwidth_deg(n)
    rows = []
    for snr in snr_grid:
        predicted = analysis.resolution_predict(bw, snr)
        measured = analysis.empirical_resolution(
            estimator, n, L, snr, trials=min(cfg.trials, 120), seed=cfg.seed
        )
        rows.append([snr, predicted, measured, bw])
    path = _write_csv(
        outdir / "resolution.csv",
        ["snr_db", "predicted_deg", "empirical_deg", "beamwidth_deg"],
        rows,
        cfg.config_hash(),
    )
    summary = [f"beamwidth {bw:.3f} deg; " + ", ".join(f"{r[0]:g}dB->{r[2]:.2f}deg" for r in rows)]
    return [path], summary


_RUNNERS = {
    "detect": _run_detect,
    "estimate": _run_estimate,
    "had": _run_had,
    "quantize-sweep": _run_quantize_sweep,
    "coarray": _run_coarray,
    "localize": _run_localize,
    "crlb": _run_crlb,
    "resolution": _run_resolution,
}


def run_experiment(cfg: ScenarioConfig):
    """Run one configured experiment; returns (output files, summary lines)."""
    outdir = Path(cfg.out)
    files, summary = _RUNNERS[cfg.kind](cfg, outdir)
    return files, summary


# ---------------------------------------------------------------------------
# presets reproducing the toolkit's stock figure families at desk scale

PRESETS = {
    "fig3-detection": {
        "kind": "detect",
        "seed": 20240,
        "trials": 2000,
        "params": {"N": 8, "L": 100, "pfa": 0.01,
                   "snr_grid_db": [-20, -15, -10, -7.5, -5, -2.5, 0]},
        "description": "eigenvalue detection probability curves at fixed false-alarm rate",
    },
    "fig5-6-resolution": {
        "kind": "estimate",
        "seed": 20241,
        "trials": 1,
        "params": {"N": 16, "L": 500, "angles_deg": [0.0, 5.0],
                   "snr_db": [10.0, 0.0], "methods": ["beamform", "music"]},
        "description": "beamforming vs subspace spectra for two closely spaced emitters",
    },
    "fig7-8-had": {
        "kind": "had",
        "seed": 20242,
        "trials": 200,
        "params": {"K": 16, "M": 4, "L": 100, "snr_db": 10.0, "theta_deg": 20.0,
                   "methods": ["root-music-hdapa", "fast"]},
        "description": "hybrid-array ambiguity elimination: accuracy, blocks, complexity",
    },
    "fig10-coarray": {
        "kind": "coarray",
        "seed": 20243,
        "trials": 25,
        "params": {"p": 3, "q": 5, "L": 2000, "snr_db": 10.0, "n_sources": 16},
        "description": "co-prime coarray spectrum resolving more sources than sensors",
    },
    "fig11-bits": {
        "kind": "quantize-sweep",
        "seed": 20244,
        "trials": 1,
        "params": {"sweep": "bits-snr", "N": 32, "L": 100, "theta_deg": 10.0,
                   "bits_grid": [1, 2, 3, 4, 5, 6, 8], "snr_grid_db": [-10, -5, 0, 5, 10]},
        "description": "quantization bit vs SNR trade-off for the estimation bound",
    },
    "fig13-localization": {
        "kind": "localize",
        "seed": 20245,
        "trials": 12000,
        "params": {"n_subarrays": 3, "subarray_spacing_m": 1.0,
                   "distances_m": [10.0, 20.0, 30.0],
                   "angle_variance_deg2": [1e-4, 1e-3, 1e-2, 1e-1, 1.0],
                   "N_t": 12000},
        "description": "3D bearing-intersection localization accuracy vs angle variance",
    },
    "fig14-efficiency": {
        "kind": "quantize-sweep",
        "seed": 20246,
        "trials": 1,
        "params": {"sweep": "efficiency", "N": 128, "L": 100, "snr_db": 10.0,
                   "theta_deg": 10.0, "bits_grid": [1, 2, 4], "subarray_sizes": [1, 8]},
        "description": "energy efficiency vs bound across mixed-ADC and hybrid layouts",
    },
}


def preset_config(name: str, **overrides) -> ScenarioConfig:
    if name not in PRESETS:
        raise ConfigurationError(
            f"unknown preset {name!r}; available: {', '.join(sorted(PRESETS))}"
        )
    raw = {k: v for k, v in PRESETS[name].items() if k != "description"}
    raw.update({k: v for k, v in overrides.items() if v is not None})
    return ScenarioConfig.from_dict(raw)


def list_builtin_scenarios() -> list[dict]:
    return [
        {"name": name, "kind": spec["kind"], "trials": spec["trials"],
         "description": spec["description"]}
        for name, spec in sorted(PRESETS.items())
    ]
