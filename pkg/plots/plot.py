#!/usr/bin/env python3
"""Render experiment CSVs into publication-style figures.

Reads only the delimited files the harness emits; never touches the
library.  One figure kind per CSV schema:

    detection     pd vs snr, one curve per statistic
    spectrum      angular spectra in relative dB, one curve per series
    bits          bound vs quantization bits, one curve per snr
    efficiency    energy efficiency vs bound across mixed-ADC sweeps
    localization  rmse vs angle variance with the bound overlaid,
                  one panel per target distance

Usage: plot.py --kind <figure-kind> --csv <path> --out <image path>

Re-rendering the same CSV overwrites the image deterministically: fixed
styling, no timestamps.
"""

from __future__ import annotations

import argparse
import csv
import sys
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

FIGURE_KINDS = ("detection", "spectrum", "bits", "efficiency", "localization")

STYLE = {
    "figure.figsize": (7.0, 4.5),
    "figure.dpi": 110,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.4,
    "legend.fontsize": 8,
    "svg.hashsalt": "doafoundry",
}


class PlotError(Exception):
    """Base error for figure rendering."""


class EmptyCsvError(PlotError):
    pass


class MissingColumnError(PlotError):
    def __init__(self, column: str):
        super().__init__(f"required column missing from CSV: {column!r}")
        self.column = column


def read_rows(path: str, required: tuple[str, ...]) -> list[dict]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise EmptyCsvError(f"{path}: file is empty")
        for col in required:
            if col not in reader.fieldnames:
                raise MissingColumnError(col)
        rows = list(reader)
    if not rows:
        raise EmptyCsvError(f"{path}: no data rows")
    return rows


def _group(rows, key_fields):
    grouped = defaultdict(list)
    for row in rows:
        grouped[tuple(row[k] for k in key_fields)].append(row)
    return dict(sorted(grouped.items()))


def render_detection(rows, ax):
    for (stat,), series in _group(rows, ("statistic",)).items():
        series.sort(key=lambda r: float(r["snr_db"]))
        snr = [float(r["snr_db"]) for r in series]
        pd = [float(r["pd"]) for r in series]
        if "pd_stderr" in series[0]:
            err = [2 * float(r["pd_stderr"]) for r in series]
            ax.errorbar(snr, pd, yerr=err, marker="o", markersize=3, capsize=2, label=stat)
        else:
            ax.plot(snr, pd, marker="o", markersize=3, label=stat)
    ax.set_xlabel("SNR (dB)")
    ax.set_ylabel("detection probability")
    ax.set_ylim(-0.02, 1.02)
    ax.legend()


def render_spectrum(rows, ax):
    for (method, snr), series in _group(rows, ("method", "snr_db")).items():
        series.sort(key=lambda r: float(r["angle_deg"]))
        ang = [float(r["angle_deg"]) for r in series]
        val = [float(r["value"]) for r in series]
        top = max(abs(v) for v in val) or 1.0
        import math

        db = [10.0 * math.log10(max(abs(v), 1e-300) / top) for v in val]
        ax.plot(ang, db, label=f"{method} @ {float(snr):g} dB")
    ax.set_xlabel("angle (deg)")
    ax.set_ylabel("spectrum (dB rel. max)")
    ax.set_ylim(bottom=-60)
    ax.legend()


def render_bits(rows, ax):
    for (snr,), series in _group(rows, ("snr_db",)).items():
        series.sort(key=lambda r: int(float(r["bits"])))
        bits = [int(float(r["bits"])) for r in series]
        bound = [float(r["bound_deg2"]) for r in series]
        ax.semilogy(bits, bound, marker="s", markersize=3, label=f"SNR {float(snr):g} dB")
    ax.set_xlabel("quantization bits")
    ax.set_ylabel("bound (deg$^2$)")
    ax.legend()


def render_efficiency(rows, ax):
    for (ma, bits), series in _group(rows, ("M_a", "bits")).items():
        series.sort(key=lambda r: float(r["crlb_deg2"]))
        crlb = [float(r["crlb_deg2"]) for r in series]
        eta = [float(r["eta"]) for r in series]
        ax.semilogx(crlb, eta, marker="o", markersize=3,
                    label=f"$M_a$={int(float(ma))}, {int(float(bits))}-bit")
    ax.set_xlabel("bound (deg$^2$)")
    ax.set_ylabel("energy efficiency (1/deg/W)")
    ax.legend()


def render_localization(rows, fig):
    groups = _group(rows, ("distance_m",))
    axes = fig.subplots(1, len(groups), sharey=True)
    if len(groups) == 1:
        axes = [axes]
    for ax, ((dist,), series) in zip(axes, groups.items()):
        series.sort(key=lambda r: float(r["angle_variance_deg2"]))
        var = [float(r["angle_variance_deg2"]) for r in series]
        rmse = [float(r["rmse_m"]) for r in series]
        bound = [float(r["crlb_rmse_m"]) for r in series]
        ax.loglog(var, rmse, marker="o", markersize=3, label="measured")
        ax.loglog(var, bound, linestyle="--", label="bound")
        ax.set_title(f"{float(dist):g} m")
        ax.set_xlabel("angle variance (deg$^2$)")
    axes[0].set_ylabel("position RMSE (m)")
    axes[0].legend()


REQUIRED_COLUMNS = {
    "detection": ("snr_db", "statistic", "pd"),
    "spectrum": ("angle_deg", "value", "method", "snr_db"),
    "bits": ("bits", "snr_db", "bound_deg2"),
    "efficiency": ("crlb_deg2", "eta", "m0", "M_a", "bits"),
    "localization": ("angle_variance_deg2", "distance_m", "rmse_m", "crlb_rmse_m"),
}


def render(kind: str, csv_path: str, out_path: str) -> Path:
    """Validate the CSV, draw the figure, and only then write the image."""
    if kind not in FIGURE_KINDS:
        raise PlotError(f"unknown figure kind {kind!r}; choose from {FIGURE_KINDS}")
    rows = read_rows(csv_path, REQUIRED_COLUMNS[kind])
    with plt.rc_context(STYLE):
        fig = plt.figure()
        try:
            if kind == "localization":
                render_localization(rows, fig)
            else:
                ax = fig.add_subplot()
                {
                    "detection": render_detection,
                    "spectrum": render_spectrum,
                    "bits": render_bits,
                    "efficiency": render_efficiency,
                }[kind](rows, ax)
            fig.tight_layout()
            out = Path(out_path)
            out.parent.mkdir(parents=True, exist_ok=True)
            fig.savefig(out, metadata={"Software": "doafoundry-plots"})
        finally:
            plt.close(fig)
    return Path(out_path)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--kind", required=True, choices=FIGURE_KINDS)
    parser.add_argument("--csv", required=True, help="input CSV path")
    parser.add_argument("--out", required=True, help="output image path")
    args = parser.parse_args(argv)
    try:
        out = render(args.kind, args.csv, args.out)
    except (PlotError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
