"""End-to-end checks of the cavity-circulator model over the full field sweep."""

import time

import numpy as np
import pytest

from chiral_circulator import (
    adiabatic_eliminate,
    amplitude_ratio,
    build_four_mode,
    eig_biorthogonal,
    eigen_sweep,
    hybrid_ports,
    label_modes,
    lorentzian_decomposition,
    r_limit_check,
    s_matrix,
)

OMEGA = np.linspace(10.79, 10.83, 801)


@pytest.mark.e2e
def test_field_reversal_symmetry_over_grid(params, field_grid):
    """H(-B) is the transpose of H(B) at every grid point."""
    for field_mt in field_grid:
        forward = build_four_mode(params, float(field_mt))
        backward = build_four_mode(params, float(-field_mt))
        assert np.array_equal(backward, forward.T), f"not transposed at {field_mt} mT"


@pytest.mark.e2e
def test_field_reversal_transposes_s_matrix_over_grid(params, field_grid):
    """S(-B) equals S(B) transposed on the 81 x 501 grid, single-threaded in under 10 s."""
    omega = np.linspace(10.79, 10.83, 501)
    ports = hybrid_ports(params)
    begin = time.perf_counter()
    worst = 0.0
    for field_mt in field_grid:
        forward = s_matrix(build_four_mode(params, float(field_mt)), ports, omega)
        backward = s_matrix(build_four_mode(params, float(-field_mt)), ports, omega)
        worst = max(worst, float(np.max(np.abs(backward - np.swapaxes(forward, -1, -2)))))
    elapsed = time.perf_counter() - begin
    assert worst < 1e-10
    assert elapsed < 10.0


@pytest.mark.e2e
def test_biorthogonality_over_grid(params, field_grid):
    """Every eigensystem in the sweep is biorthonormal and complete."""
    sweep = eigen_sweep(params, field_grid, threads=4)
    for field_mt, es in zip(sweep.fields, sweep.systems):
        assert not es.near_defective, f"near-defective at {field_mt} mT"
        assert es.biorthogonality_error() < 1e-10, f"biorthogonality lost at {field_mt} mT"
        assert es.completeness_error() < 1e-10, f"completeness lost at {field_mt} mT"


@pytest.mark.e2e
def test_lorentzian_decomposition_matches_transmission(params, field_grid):
    """The four-pole sum reproduces S31 across the sweep."""
    ports = hybrid_ports(params)
    for field_mt in field_grid[::5]:
        h = build_four_mode(params, float(field_mt))
        s31 = s_matrix(h, ports, OMEGA)[:, 2, 0]
        total = lorentzian_decomposition(h, ports, 2, 0).evaluate(OMEGA)
        assert np.max(np.abs(total - s31)) < 1e-9, f"mismatch at {field_mt} mT"


@pytest.mark.e2e
def test_amplitude_ratio_parity(params, field_grid):
    """A(B) / A(-B) multiplied by its mirror is one for both cavity modes."""
    for field_mt in field_grid[field_grid > 0][::3]:
        for mode in ("a", "b"):
            product = amplitude_ratio(params, float(field_mt), mode) * amplitude_ratio(
                params, float(-field_mt), mode
            )
            assert product == pytest.approx(1.0, rel=1e-8), f"mode {mode} at {field_mt} mT"


def _mode_b_asymmetry(params) -> tuple[np.ndarray, np.ndarray]:
    fields = np.arange(5.0, 40.5, 0.5)
    asymmetry = []
    for field_mt in fields:
        ratio = amplitude_ratio(params, float(field_mt), "b")
        asymmetry.append(max(ratio, 1.0 / ratio))
    return fields, np.array(asymmetry)


@pytest.mark.e2e
@pytest.mark.xfail(
    strict=True,
    reason=(
        "the bundled parameters put the mode-b asymmetry maximum near 32.5 mT, "
        "outside the 28 +- 3 mT window read off the measured sweep (DESIGN.md, decision 7)"
    ),
)
def test_mode_b_asymmetry_peaks_near_28_mt(params):
    """The strongest nonreciprocity of mode b sits at 28 +- 3 mT."""
    fields, asymmetry = _mode_b_asymmetry(params)
    peak = float(fields[int(np.argmax(asymmetry))])
    assert 25.0 <= peak <= 31.0, f"asymmetry peaks at {peak} mT"


@pytest.mark.e2e
def test_mode_b_asymmetry_is_strong(params):
    """Mode b is more than ten times stronger on one field sign somewhere above 5 mT."""
    _, asymmetry = _mode_b_asymmetry(params)
    assert asymmetry.max() > 10.0


@pytest.mark.e2e
def test_reduced_model_tracks_cavity_modes(params):
    """Eliminating the circulator modes keeps the cavity eigenvalues within 0.1 MHz."""
    for field_mt in (-15.0, 15.0):
        h4 = build_four_mode(params, float(field_mt))
        es = eig_biorthogonal(h4)
        labels = label_modes(es)
        full = np.sort(es.eigenvalues[[labels["a"], labels["b"]]].real)
        reduced = np.sort(np.linalg.eigvals(adiabatic_eliminate(h4).matrix).real)
        assert np.max(np.abs(full - reduced)) * 1000.0 < 0.1, f"drift at {field_mt} mT"


@pytest.mark.e2e
def test_reduced_ratios_sit_in_their_limits(params):
    """At 25 mT mode a sits near R = 1 and mode b near R = r^2."""
    rm = adiabatic_eliminate(build_four_mode(params, 25.0))
    checks = {check.mode: check for check in r_limit_check(rm)}
    assert checks["a"].transform_ratio == pytest.approx(1.0145, rel=0.02)
    assert checks["b"].transform_ratio / rm.r**2 == pytest.approx(0.992, rel=0.02)
