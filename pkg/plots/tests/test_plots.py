"""Plot-script tests: drive the experiment CLI for real CSVs, then render.

The plotting layer may consume only the delimited files the primary CLI
writes, so fixtures here shell out to ``doafoundry`` rather than import
the library.
"""

import json
import subprocess
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parents[1]))

from plot import EmptyCsvError, MissingColumnError, PlotError, main, render

REPO = Path(__file__).resolve().parents[2]


def run_cli(kind, config, outdir):
    cfg_path = outdir / f"{kind}.json"
    config = dict(config, out=str(outdir))
    cfg_path.write_text(json.dumps(config))
    proc = subprocess.run(
        [sys.executable, "-m", "doafoundry.cli", kind, "--config", str(cfg_path)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    return outdir


@pytest.fixture(scope="module")
def harness_outputs(tmp_path_factory):
    """One small seeded run per CSV schema the plot kinds consume."""
    root = tmp_path_factory.mktemp("csv")
    run_cli(
        "detect",
        {"kind": "detect", "seed": 9, "trials": 400,
         "params": {"N": 4, "L": 50, "pfa": 0.05, "snr_grid_db": [-15, -10, -5, 0]}},
        root,
    )
    run_cli(
        "estimate",
        {"kind": "estimate", "seed": 9, "trials": 1,
         "params": {"N": 16, "L": 200, "angles_deg": [0.0, 5.0],
                    "snr_db": [10.0, 0.0], "methods": ["beamform", "music"]}},
        root,
    )
    run_cli(
        "quantize-sweep",
        {"kind": "quantize-sweep", "seed": 9, "trials": 1,
         "params": {"sweep": "bits-snr", "N": 8, "L": 50, "theta_deg": 10.0,
                    "bits_grid": [1, 2, 4], "snr_grid_db": [0.0, 10.0]}},
        root,
    )
    run_cli(
        "quantize-sweep",
        {"kind": "quantize-sweep", "seed": 9, "trials": 1,
         "params": {"sweep": "efficiency", "N": 32, "L": 50, "snr_db": 10.0,
                    "theta_deg": 10.0, "bits_grid": [1, 2], "subarray_sizes": [1, 4]}},
        root,
    )
    run_cli(
        "localize",
        {"kind": "localize", "seed": 9, "trials": 30,
         "params": {"angle_variance_deg2": [1e-3, 1e-2, 1e-1], "N_t": 30}},
        root,
    )
    return root


CASES = [
    ("detection", "detection.csv"),
    ("spectrum", "spectrum.csv"),
    ("bits", "bits_tradeoff.csv"),
    ("efficiency", "efficiency.csv"),
    ("localization", "localization.csv"),
]


@pytest.mark.parametrize("kind,csv_name", CASES)
def test_each_kind_renders(kind, csv_name, harness_outputs, tmp_path):
    out = tmp_path / f"{kind}.png"
    result = render(kind, str(harness_outputs / csv_name), str(out))
    assert result.exists() and result.stat().st_size > 1000


def test_rendering_is_deterministic(harness_outputs, tmp_path):
    a = tmp_path / "a.png"
    b = tmp_path / "b.png"
    render("bits", str(harness_outputs / "bits_tradeoff.csv"), str(a))
    render("bits", str(harness_outputs / "bits_tradeoff.csv"), str(b))
    assert a.read_bytes() == b.read_bytes()


def test_cli_end_to_end(harness_outputs, tmp_path, capsys):
    out = tmp_path / "fig.png"
    code = main(
        ["--kind", "detection", "--csv", str(harness_outputs / "detection.csv"),
         "--out", str(out)]
    )
    assert code == 0 and out.exists()
    assert str(out) in capsys.readouterr().out


def test_empty_csv_is_rejected_without_output(tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    out = tmp_path / "fig.png"
    with pytest.raises(EmptyCsvError):
        render("detection", str(empty), str(out))
    assert not out.exists()
    header_only = tmp_path / "header.csv"
    header_only.write_text("snr_db,statistic,pd\n")
    with pytest.raises(EmptyCsvError):
        render("detection", str(header_only), str(out))
    assert not out.exists()


def test_missing_column_is_named(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("snr_db,statistic\n0,EigRatio\n")
    out = tmp_path / "fig.png"
    with pytest.raises(MissingColumnError) as err:
        render("detection", str(bad), str(out))
    assert err.value.column == "pd"
    assert "pd" in str(err.value)
    assert not out.exists()


def test_unknown_kind_rejected(tmp_path):
    with pytest.raises(PlotError, match="unknown figure kind"):
        render("sparklines", str(tmp_path / "x.csv"), str(tmp_path / "y.png"))


def test_cli_reports_errors_and_writes_nothing(tmp_path, capsys):
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    out = tmp_path / "fig.png"
    code = main(["--kind", "spectrum", "--csv", str(empty), "--out", str(out)])
    assert code == 2
    assert "empty" in capsys.readouterr().err
    assert not out.exists()
