"""End-to-end runs of the extract-then-fit pipeline and the CLI."""

import json
import time
from dataclasses import replace

import numpy as np
import pytest

from chiral_circulator import (
    LorentzianComponent,
    LorentzianSet,
    SpectrumTrace,
    amplitude_ratio,
    fit_global_params,
    fit_global_traces,
    predict_tables,
    sweep_extract,
    synthesize_sweep,
)
from chiral_circulator.cli import main

FIELDS = [-20.0, -10.0, -5.0, 5.0, 10.0, 20.0]
OMEGA = np.linspace(10.79, 10.83, 801)
SWEEP = np.arange(-40.0, 41.0, 5.0)
RECOVERED = ("g_x0", "g_y0", "kappa_3")


def _model_traces(params) -> list[SpectrumTrace]:
    tables = predict_tables(params, FIELDS)
    traces = []
    for i, field_mt in enumerate(tables.fields):
        components = tuple(
            LorentzianComponent(
                amplitude=float(tables.amplitude[i, column]),
                phase=float(tables.phase[i, column]),
                frequency=float(tables.frequency[i, column]),
                kappa=float(tables.kappa[i, column]),
            )
            for column in (0, 1)
        )
        values = LorentzianSet(components=components).evaluate(OMEGA)
        traces.append(SpectrumTrace(frequencies=OMEGA, values=values, field_mt=float(field_mt)))
    return traces


@pytest.fixture(scope="module")
def noisy_sweep(params) -> list[SpectrumTrace]:
    """Model S31 over -40..40 mT in 5 mT steps with 1% noise."""
    return synthesize_sweep(params, SWEEP, OMEGA, 0.01, seed=1, threads=4)


@pytest.mark.e2e
def test_extraction_recovers_model_poles(params):
    """Two-Lorentzian fits of model spectra return the model's pole frequencies."""
    expected = predict_tables(params, FIELDS)
    extracted = sweep_extract(_model_traces(params), threads=2)
    assert not extracted.failed.any()
    for i in range(len(FIELDS)):
        assert np.allclose(
            np.sort(extracted.frequency[i]), np.sort(expected.frequency[i]), atol=1e-6
        ), f"frequency drift at {FIELDS[i]} mT"
        assert np.allclose(
            np.sort(extracted.kappa[i]), np.sort(expected.kappa[i]), rtol=1e-3
        ), f"linewidth drift at {FIELDS[i]} mT"


@pytest.mark.e2e
def test_global_fit_recovers_two_parameters(params):
    """Starting 5% off, the table fit returns k and beta_0 of the generating model."""
    tables = predict_tables(params, FIELDS)
    start = replace(params, k=params.k * 0.95, beta_0=params.beta_0 * 1.05)
    result = fit_global_params(tables, ["k", "beta_0"], base=start, starts=1)
    assert result.values["k"] == pytest.approx(params.k, rel=1e-3)
    assert result.values["beta_0"] == pytest.approx(params.beta_0, rel=1e-3)
    assert result.cost < 1e-6


@pytest.mark.e2e
def test_round_trip_recovers_couplings_and_circulator_linewidth(params, noisy_sweep):
    """From 10% off, g_x0, g_y0 and kappa_3 come back within 2% of the synthesis values."""
    begin = time.perf_counter()
    start = replace(params, g_x0=params.g_x0 * 1.1, g_y0=params.g_y0 * 0.9, kappa_3=params.kappa_3 * 1.1)
    result = fit_global_traces(noisy_sweep, RECOVERED, base=start, seed=1)
    elapsed = time.perf_counter() - begin
    for name in RECOVERED:
        assert result.values[name] == pytest.approx(getattr(params, name), rel=0.02), name
    assert result.unidentifiable == []
    assert elapsed < 300.0


@pytest.mark.e2e
def test_wrong_circulator_linewidth_fits_worse(params, noisy_sweep):
    """With the couplings refit, kappa_3 = 600 MHz leaves a larger residual than 730 MHz."""
    costs = {
        kappa_3: fit_global_traces(
            noisy_sweep, ["g_x0", "g_y0"], {"kappa_3": kappa_3}, base=params, starts=1
        ).cost
        for kappa_3 in (600.0, 730.0)
    }
    assert costs[600.0] > costs[730.0]


@pytest.mark.e2e
def test_extracted_amplitude_ratios_match_model(params):
    """Fitted A(B) / A(-B) of both cavity modes agree with the model within 2% above 25 mT."""
    positive = [25.0, 30.0, 35.0, 40.0]
    fields = [-b for b in reversed(positive)] + positive
    traces = synthesize_sweep(params, fields, OMEGA, 0.0, seed=0, threads=4)
    extracted = sweep_extract(traces, background="linear", threads=4)
    expected = predict_tables(params, fields)
    assert not extracted.failed.any()

    amplitudes = np.empty((len(fields), 2))
    for i in range(len(fields)):
        for column in (0, 1):
            distance = np.abs(extracted.frequency[i] - expected.frequency[i, column])
            j = int(np.argmin(distance))
            assert distance[j] < 5e-4, f"no extracted mode near column {column} at {fields[i]} mT"
            amplitudes[i, column] = extracted.amplitude[i, j]

    for field_mt in positive:
        forward, backward = fields.index(field_mt), fields.index(-field_mt)
        for column, label in enumerate(("a", "b")):
            ratio = amplitudes[forward, column] / amplitudes[backward, column]
            assert ratio == pytest.approx(
                amplitude_ratio(params, field_mt, label), rel=0.02
            ), f"mode {label} at {field_mt} mT"


@pytest.mark.e2e
def test_cli_synthesize_then_fit(params, tmp_path):
    """Synthesized traces written by the CLI fit back to the bundled parameters."""
    begin = time.perf_counter()
    synth, fit = tmp_path / "synth", tmp_path / "fit"
    common = ["--config", "paper_fig6", "--set", "b_step_mt=5", "--seed", "1", "--threads", "4"]
    assert main(["synthesize", *common, "--out", str(synth)]) == 0
    code = main(
        [
            "fit", *common,
            "--data", str(synth / "traces.csv"),
            "--free", ",".join(RECOVERED),
            "--set", "g_x0_mhz=9.9", "--set", "g_y0_mhz=4.5", "--set", "kappa_3_mhz=803",
            "--out", str(fit),
        ]
    )
    elapsed = time.perf_counter() - begin
    assert code == 0
    report = json.loads((fit / "fit_report.json").read_text())
    assert report["target"] == "traces"
    for name in RECOVERED:
        assert report["values"][name] == pytest.approx(getattr(params, name), rel=0.02), name
    assert elapsed < 300.0


@pytest.mark.e2e
def test_full_hybrid_sweep_is_thread_count_independent(tmp_path):
    """The full bundled sweep writes identical bytes for one and four threads."""
    serial, threaded = tmp_path / "serial", tmp_path / "threaded"
    assert main(["sweep-hybrid", "--config", "paper_fig6", "--out", str(serial)]) == 0
    assert main(["sweep-hybrid", "--config", "paper_fig6", "--threads", "4", "--out", str(threaded)]) == 0
    for name in ("s31_map.csv", "eigen.csv", "reduced.csv", "hamiltonians.json"):
        assert (serial / name).read_bytes() == (threaded / name).read_bytes(), name
