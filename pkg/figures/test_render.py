"""Tests for the figure renderer: run with `pytest figures/`.

The end-to-end case drives the primary CLI to produce real study CSVs and
renders all three figure kinds from them; the unit cases use tiny synthetic
CSVs to pin schema validation and the fit integrity check.
"""

import json
import subprocess
import sys
from pathlib import Path

import pytest

HERE = Path(__file__).parent
sys.path.insert(0, str(HERE))

from render import RenderError, main, ols_loglog_slope, render  # noqa: E402


def write_spec(tmp_path, payload):
    p = tmp_path / "spec.json"
    p.write_text(json.dumps(payload))
    return str(p)


def make_rate_csv(tmp_path, slope_record=None):
    csv_path = tmp_path / "study.csv"
    csv_path.write_text(
        "eps,metric\n"
        "0.0001,0.0001\n"
        "0.001,0.001\n"
        "0.01,0.01\n"
    )
    if slope_record is not None:
        (tmp_path / "study.csv.meta.json").write_text(
            json.dumps({"fits": {"metric_vs_eps": {"slope": slope_record, "intercept": 0.0, "r_squared": 1.0}}})
        )
    return str(csv_path)


def test_ols_slope_exact():
    assert ols_loglog_slope([1, 10, 100], [1, 10, 100]) == pytest.approx(1.0, abs=1e-14)
    assert ols_loglog_slope([1, 10, 100], [1, 100, 10000]) == pytest.approx(2.0, abs=1e-13)


def test_rate_plot_renders_png_and_svg(tmp_path):
    csv_path = make_rate_csv(tmp_path, slope_record=1.0)
    spec = write_spec(tmp_path, {"kind": "rate-plot", "input": csv_path, "out": str(tmp_path / "fig")})
    assert main(["--spec", spec]) == 0
    assert (tmp_path / "fig.png").exists()
    assert (tmp_path / "fig.svg").exists()


def test_rate_plot_slope_mismatch_is_corruption(tmp_path):
    csv_path = make_rate_csv(tmp_path, slope_record=1.5)  # recorded fit disagrees
    spec = {"kind": "rate-plot", "input": csv_path, "out": str(tmp_path / "fig")}
    with pytest.raises(RenderError, match="recorded fit"):
        render(spec)
    assert not (tmp_path / "fig.png").exists()


def test_empty_csv_rejected_without_output(tmp_path):
    csv_path = tmp_path / "empty.csv"
    csv_path.write_text("eps,metric\n")
    spec = {"kind": "rate-plot", "input": str(csv_path), "out": str(tmp_path / "fig")}
    with pytest.raises(RenderError, match="empty"):
        render(spec)
    assert not (tmp_path / "fig.png").exists()


def test_schema_mismatch_names_missing_columns(tmp_path):
    csv_path = tmp_path / "bad.csv"
    csv_path.write_text("eps,value\n0.01,1\n")
    spec = {"kind": "rate-plot", "input": str(csv_path), "out": str(tmp_path / "fig")}
    with pytest.raises(RenderError, match="metric"):
        render(spec)


def test_unknown_kind_rejected(tmp_path):
    with pytest.raises(RenderError, match="kind"):
        render({"kind": "pie-chart", "input": "x", "out": "y"})


def test_cli_exit_codes(tmp_path, capsys):
    spec = write_spec(tmp_path, {"kind": "rate-plot", "input": str(tmp_path / "none.csv"), "out": str(tmp_path / "f")})
    assert main(["--spec", spec]) == 1


@pytest.mark.slow
def test_end_to_end_from_primary_cli(tmp_path):
    """Drive the primary CLI for real CSVs, then render every figure kind."""
    base_model = {"name": "ideal-gas", "R": 1.0, "c_v": 1.0,
                  "mu": {"law": "constant", "value": 8.0},
                  "kappa": {"law": "constant", "value": 8.0}}
    reference = {"kind": "multiscale", "n_modes": 16, "amplitude": 0.06,
                 "spectral_slope": 1.3, "seed": 7, "speed": 0.843, "u0": 1.5, "theta0": 0.8}

    def run_cli(sub, cfg, out):
        cfg_path = tmp_path / f"{sub}.json"
        cfg_path.write_text(json.dumps(cfg))
        proc = subprocess.run(
            [sys.executable, "-m", "relentropy_lab.cli", sub, "--config", str(cfg_path), "--out", str(out)],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0, proc.stderr
        return out

    conv_csv = run_cli("converge-eps", {
        "model": base_model, "grid": {"N": 128, "length": 1.0},
        "solver": {"T": 0.05, "snapshot_dt": 0.005},
        "reference": reference,
        "study": {"eps_list": [1e-2, 1e-3, 1e-4], "slope_band": [0.0, 3.0]},
    }, tmp_path / "conv.csv")

    stab_csv = run_cli("stability", {
        "model": {"name": "ideal-gas", "R": 1.0, "c_v": 1.0},
        "grid": {"N": 96, "length": 1.0},
        "solver": {"T": 0.05, "snapshot_dt": 0.01},
        "reference": {"kind": "traveling", "modes": [1], "u_amps": [0.06], "u_phases": [0.0],
                      "theta_amps": [0.04], "theta_phases": [0.4], "speed": 0.5,
                      "u0": 1.2, "theta0": 1.0},
        "study": {"deltas": [1e-2, 1e-3, 1e-4], "eps_list": [1e-2]},
    }, tmp_path / "stab.csv")

    relent_csv = run_cli("relent", {
        "model": {"name": "ideal-gas", "R": 1.0, "c_v": 1.0},
        "grid": {"N": 64, "length": 1.0},
        "solver": {"T": 0.06, "snapshot_dt": 0.01, "eps": 1e-2},
        "reference": {"kind": "traveling", "modes": [1], "u_amps": [0.05], "u_phases": [0.0],
                      "theta_amps": [0.03], "theta_phases": [0.4], "speed": 1.0},
        "perturbation_delta": 1e-3,
    }, tmp_path / "breakdown.csv")

    for kind, src in [("rate-plot", conv_csv), ("amplification", stab_csv),
                      ("term-breakdown", relent_csv)]:
        spec = write_spec(tmp_path, {"kind": kind, "input": str(src),
                                     "out": str(tmp_path / f"fig_{kind}")})
        assert main(["--spec", spec]) == 0
        assert (tmp_path / f"fig_{kind}.png").exists()
        assert (tmp_path / f"fig_{kind}.svg").exists()
