"""Tests for the command-line front end."""

from __future__ import annotations

import json

import numpy as np
import pytest

from chiral_circulator import (
    LorentzianComponent,
    LorentzianSet,
    SpectrumTrace,
    __version__,
)
from chiral_circulator._internal.serialization import read_traces_csv, write_traces_csv
from chiral_circulator.cli import EXIT_CONFIG, EXIT_NUMERICAL, EXIT_PARSE, main

SMALL_HYBRID = [
    "--config", "paper_fig6",
    "--set", "b_start_mt=-2",
    "--set", "b_stop_mt=2",
    "--set", "b_step_mt=2",
    "--set", "freq_count=64",
]


def _data_rows(path) -> list[str]:
    lines = path.read_text().splitlines()
    return [line for line in lines if not line.startswith("#")][1:]


def _write_two_mode_traces(path) -> None:
    grid = np.linspace(10.79, 10.83, 201)
    traces = []
    for field_mt in (-10.0, -5.0, 5.0, 10.0):
        lorentzians = LorentzianSet(
            components=(
                LorentzianComponent(amplitude=2.0, phase=0.3, frequency=10.82, kappa=3.0),
                LorentzianComponent(amplitude=1.0, phase=-1.0, frequency=10.80, kappa=4.0),
            )
        )
        traces.append(SpectrumTrace(frequencies=grid, values=lorentzians.evaluate(grid), field_mt=field_mt))
    write_traces_csv(path, traces)


def test_sweep_internal(tmp_path):
    code = main(["sweep-internal", "--config", "internal_modes", "--set", "b_step_mt=10", "--out", str(tmp_path)])
    assert code == 0
    csv_path = tmp_path / "internal_modes.csv"
    assert csv_path.read_text().splitlines()[0] == f"# chiral-circulator {__version__}"
    rows = _data_rows(csv_path)
    assert len(rows) == 11
    report = json.loads((tmp_path / "internal_modes.json").read_text())
    assert report["version"] == __version__
    assert len(report["config_hash"]) == 64
    lower, upper = report["omega_ghz"][5]
    assert report["fields_mt"][5] == 0.0
    assert (upper - lower) * 1000.0 == pytest.approx(278.0)


def test_sweep_hybrid_outputs(tmp_path):
    assert main(["sweep-hybrid", *SMALL_HYBRID, "--out", str(tmp_path)]) == 0
    assert len(_data_rows(tmp_path / "s31_map.csv")) == 3 * 64
    eigen_rows = _data_rows(tmp_path / "eigen.csv")
    assert len(eigen_rows) == 3 * 4
    assert {row.split(",")[1] for row in eigen_rows} == {"a", "b", "c", "d"}
    assert len(_data_rows(tmp_path / "reduced.csv")) == 3
    points = json.loads((tmp_path / "hamiltonians.json").read_text())["points"]
    assert [p["field_mt"] for p in points] == [-2.0, 0.0, 2.0]
    assert np.array(points[2]["hamiltonian"]).shape == (4, 4, 2)


def test_sweep_hybrid_is_thread_count_independent(tmp_path):
    serial, threaded = tmp_path / "serial", tmp_path / "threaded"
    assert main(["sweep-hybrid", *SMALL_HYBRID, "--out", str(serial)]) == 0
    assert main(["sweep-hybrid", *SMALL_HYBRID, "--threads", "3", "--out", str(threaded)]) == 0
    for name in ("s31_map.csv", "eigen.csv", "reduced.csv", "hamiltonians.json"):
        assert (serial / name).read_bytes() == (threaded / name).read_bytes(), name


def test_circulator_json_only(tmp_path):
    code = main(
        [
            "circulator", "--config", "circulator",
            "--set", "delta_count=3", "--set", "freq_count=101",
            "--format", "json", "--out", str(tmp_path),
        ]
    )
    assert code == 0
    assert not (tmp_path / "isolation_map.csv").exists()
    report = json.loads((tmp_path / "working_point.json").read_text())
    assert report["delta_mhz"] == pytest.approx(report["analytic_delta_mhz"], rel=1e-6)
    assert report["insertion_loss_bound"] <= report["insertion_loss"]


def test_ferrite_tensor(tmp_path):
    assert main(["ferrite-tensor", "--config", "ferrite", "--out", str(tmp_path)]) == 0
    rows = _data_rows(tmp_path / "ferrite_tensors.csv")
    assert len(rows) == 4 * 21
    report = json.loads((tmp_path / "ferrite_tensors.json").read_text())
    assert report["omega_m_ghz"] == pytest.approx(28.0 * 0.244, rel=1e-6)
    assert set(report["tensors"]) == {"polder", "sandy_green", "demagnetized", "weighted"}


def test_anisotropy_profile(tmp_path):
    code = main(
        [
            "anisotropy-profile", "--config", "toy_anisotropy",
            "--set", "quadrature_method=bessel",
            "--set", "b_start_mt=-40", "--set", "b_stop_mt=40", "--set", "b_step_mt=4",
            "--out", str(tmp_path),
        ]
    )
    assert code == 0
    assert len(_data_rows(tmp_path / "anisotropy_profile.csv")) == 21
    report = json.loads((tmp_path / "anisotropy_fit.json").read_text())
    assert report["b_0_mt"] > 0.0
    assert report["method"] == "bessel"


def test_synthesize_is_seeded(tmp_path):
    args = ["synthesize", *SMALL_HYBRID, "--seed", "5"]
    assert main([*args, "--out", str(tmp_path / "one")]) == 0
    assert main([*args, "--threads", "2", "--out", str(tmp_path / "two")]) == 0
    first = (tmp_path / "one" / "traces.csv").read_bytes()
    assert first == (tmp_path / "two" / "traces.csv").read_bytes()
    traces = read_traces_csv(tmp_path / "one" / "traces.csv")
    assert [t.field_mt for t in traces] == [-2.0, 0.0, 2.0]


def test_fit_with_fixed_parameters(tmp_path):
    data = tmp_path / "traces.csv"
    _write_two_mode_traces(data)
    code = main(
        [
            "fit", "--data", str(data),
            "--set", "fit_starts=2", "--set", "global_starts=1",
            "--out", str(tmp_path / "out"),
        ]
    )
    assert code == 0
    report = json.loads((tmp_path / "out" / "fit_report.json").read_text())
    assert report["target"] == "traces"
    assert report["free"] == []
    assert report["nfev"] == 0
    assert report["failed_fields_mt"] == []
    assert len(_data_rows(tmp_path / "out" / "extracted.csv")) == 8


def test_fit_against_extracted_tables(tmp_path):
    data = tmp_path / "traces.csv"
    _write_two_mode_traces(data)
    code = main(
        [
            "fit", "--data", str(data),
            "--set", "fit_target=tables", "--set", "fit_starts=2",
            "--out", str(tmp_path / "out"),
        ]
    )
    assert code == 0
    report = json.loads((tmp_path / "out" / "fit_report.json").read_text())
    assert report["target"] == "tables"
    assert report["nfev"] == 0


def test_fit_unknown_free_parameter(tmp_path):
    data = tmp_path / "traces.csv"
    _write_two_mode_traces(data)
    code = main(
        [
            "fit", "--data", str(data), "--free", "bogus",
            "--set", "fit_starts=1", "--out", str(tmp_path / "out"),
        ]
    )
    assert code == EXIT_CONFIG


@pytest.mark.parametrize(
    "args",
    [
        ["sweep-internal", "--config", "does_not_exist.cfg"],
        ["sweep-internal", "--set", "unknown_key=1"],
        ["sweep-internal", "--set", "freq_count=many"],
        ["sweep-internal", "--threads", "0"],
        ["sweep-internal", "--set", "b_step_mt=0"],
    ],
)
def test_config_errors_exit_2(tmp_path, args):
    assert main([*args, "--out", str(tmp_path)]) == EXIT_CONFIG


def test_missing_and_malformed_data_exit_3(tmp_path):
    assert main(["fit", "--data", str(tmp_path / "missing.csv"), "--out", str(tmp_path)]) == EXIT_PARSE
    bad = tmp_path / "bad.csv"
    bad.write_text("field_mt,freq_ghz,re,im\n1.0,10.8,oops,0\n")
    assert main(["fit", "--data", str(bad), "--out", str(tmp_path)]) == EXIT_PARSE


def test_numerical_failure_exits_4(tmp_path):
    code = main(
        ["ferrite-tensor", "--config", "ferrite", "--set", "freq_start_ghz=1.0", "--out", str(tmp_path)]
    )
    assert code == EXIT_NUMERICAL


def test_usage_error_exits_via_argparse():
    with pytest.raises(SystemExit) as exc_info:
        main(["no-such-command"])
    assert exc_info.value.code == 2
