"""Tests for input-output scattering and the three-port circulator."""

from __future__ import annotations

import math

import numpy as np
import pytest

from chiral_circulator import (
    DivisionByNegligibleError,
    DomainError,
    ModelParams,
    NearDefectiveError,
    Port,
    PortMap,
    SingularAtResonanceError,
    build_four_mode,
    circulator_working_point,
    greens_function,
    hybrid_ports,
    insertion_loss,
    isolation_bandwidth,
    isolation_db,
    isolation_ratio,
    kappa_3_from_kappa_c,
    kappa_c_from_kappa_3,
    lorentzian_decomposition,
    optimize_working_point,
    s_matrix,
    three_port_circulator,
    working_point_splitting,
)
from chiral_circulator.scattering import ISOLATION_CAP_DB

OMEGA = np.linspace(10.79, 10.83, 201)


def test_greens_function_inverts_resolvent():
    h = build_four_mode(ModelParams(), 20.0)
    green = greens_function(h, OMEGA)
    assert green.shape == (201, 4, 4)
    for k in (0, 100, 200):
        assert np.allclose((OMEGA[k] * np.eye(4) - h) @ green[k], np.eye(4))


def test_greens_function_scalar_frequency():
    h = build_four_mode(ModelParams(), 20.0)
    assert greens_function(h, 10.81).shape == (4, 4)


def test_greens_function_on_real_pole_raises():
    with pytest.raises(SingularAtResonanceError):
        greens_function(np.diag([1.0, 2.0]).astype(complex), 1.0)


def test_hybrid_ports():
    ports = hybrid_ports(ModelParams())
    assert ports.modes == [0, 1, 2]
    assert np.allclose(ports.kappas_ghz, [1e-4, 1e-4, 0.73])


def test_decomposition_reproduces_s_matrix():
    params = ModelParams()
    h = build_four_mode(params, 25.0)
    ports = hybrid_ports(params)
    s = s_matrix(h, ports, OMEGA)
    for output, input in ((2, 0), (0, 0), (1, 2)):
        lorentzians = lorentzian_decomposition(h, ports, output, input)
        assert len(lorentzians.components) == 4
        assert np.allclose(lorentzians.evaluate(OMEGA), s[:, output, input], atol=1e-10)
    assert lorentzian_decomposition(h, ports, 0, 0).background == 1.0
    assert lorentzian_decomposition(h, ports, 2, 0).background == 0.0


def test_isolated_mode_lorentzian_amplitude_equals_linewidth():
    h = np.array([[10.0 - 0.5j * 0.002]])
    lorentzians = lorentzian_decomposition(h, PortMap(ports=(Port(0, 2.0),)), 0, 0)
    (component,) = lorentzians.components
    assert component.kappa == pytest.approx(2.0)
    assert component.amplitude == pytest.approx(2.0)
    # Critically coupled: no reflection at resonance
    assert abs(lorentzians.evaluate(10.0)) == pytest.approx(0.0, abs=1e-12)


def test_decomposition_near_exceptional_point_raises():
    h = np.array([[0.0, 1.0], [1e-24, 0.0]], dtype=complex)
    ports = PortMap(ports=(Port(0, 1.0), Port(1, 1.0)))
    with pytest.raises(NearDefectiveError):
        lorentzian_decomposition(h, ports, 1, 0)


def test_field_reversal_transposes_s_matrix():
    params = ModelParams()
    ports = hybrid_ports(params)
    forward = s_matrix(build_four_mode(params, 30.0), ports, OMEGA)
    backward = s_matrix(build_four_mode(params, -30.0), ports, OMEGA)
    assert np.allclose(backward, np.swapaxes(forward, -1, -2))


def test_isolation_db():
    assert isolation_db(1.0, 0.1) == pytest.approx(20.0)
    assert isolation_db(0.01, 1.0) == pytest.approx(-40.0)
    assert isolation_db(1.0, 0.0) == ISOLATION_CAP_DB
    with pytest.raises(DivisionByNegligibleError):
        isolation_db(np.array([1.0, 0.0]), np.array([1.0, 0.0]))


def test_isolation_ratio_is_odd_in_field():
    params = ModelParams()
    ports = hybrid_ports(params)

    def hamiltonian(field_mt: float) -> np.ndarray:
        return build_four_mode(params, field_mt)

    forward = isolation_ratio(hamiltonian, 25.0, ports, 2, 0, OMEGA)
    backward = isolation_ratio(hamiltonian, -25.0, ports, 2, 0, OMEGA)
    assert np.allclose(forward, -backward)
    assert np.allclose(isolation_ratio(hamiltonian, 0.0, ports, 2, 0, OMEGA), 0.0)


def test_kappa_conversions():
    assert kappa_c_from_kappa_3(730.0) == pytest.approx(547.5)
    assert kappa_3_from_kappa_c(kappa_c_from_kappa_3(730.0)) == pytest.approx(730.0)


def test_working_point_splitting():
    assert working_point_splitting(550.0) == pytest.approx(1100.0 / math.sqrt(3.0))
    assert working_point_splitting(550.0, 4.4) == pytest.approx(1104.4 / math.sqrt(3.0))


def test_ideal_circulator_at_working_point():
    delta = working_point_splitting(550.0)
    s = three_port_circulator(11.2, delta, 550.0, 0.0, 11.2)
    assert abs(s[0, 0]) < 1e-12
    assert abs(s[2, 0]) < 1e-12
    assert abs(s[1, 0]) == pytest.approx(1.0)
    assert abs(s[0, 1]) < 1e-12


def test_lossless_circulator_is_unitary():
    omega = np.linspace(10.7, 11.7, 11)
    s = three_port_circulator(11.2, 400.0, 550.0, 0.0, omega)
    for k in range(omega.size):
        assert np.allclose(s[k] @ s[k].conj().T, np.eye(3))


def test_reversed_splitting_transposes():
    omega = np.linspace(11.0, 11.4, 5)
    forward = three_port_circulator(11.2, 600.0, 550.0, 4.4, omega)
    backward = three_port_circulator(11.2, -600.0, 550.0, 4.4, omega)
    assert np.allclose(backward, np.swapaxes(forward, -1, -2))


@pytest.mark.parametrize(("kappa_c", "kappa_i"), [(0.0, 0.0), (550.0, -1.0)])
def test_circulator_rejects_bad_linewidths(kappa_c, kappa_i):
    with pytest.raises(DomainError):
        three_port_circulator(11.2, 600.0, kappa_c, kappa_i, 11.2)


@pytest.mark.parametrize("kappa_i", [0.0, 4.4])
def test_optimized_splitting_matches_analytic(kappa_i):
    delta = optimize_working_point(11.2, 550.0, kappa_i)
    assert delta == pytest.approx(working_point_splitting(550.0, kappa_i), rel=1e-6)


def test_insertion_loss_with_internal_loss():
    delta = working_point_splitting(550.0, 4.4)
    s = three_port_circulator(11.2, delta, 550.0, 4.4, 11.2)
    result = insertion_loss(s)
    assert 0.0 < result.loss < 0.05
    assert result.bound <= result.loss
    assert result.bound > 0.0


@pytest.mark.parametrize("through", [(1, 1), (0, 0), (3, 0), (1, -1)])
def test_insertion_loss_rejects_bad_through_path(through):
    s = three_port_circulator(11.2, working_point_splitting(550.0), 550.0, 0.0, 11.2)
    with pytest.raises(DomainError):
        insertion_loss(s, through)


def test_insertion_loss_needs_three_ports():
    with pytest.raises(DomainError):
        insertion_loss(np.eye(2))


def test_isolation_bandwidth():
    grid = 10.0 + 0.001 * np.arange(11)
    values = np.array([0, 0, 25, 30, 40, 30, 25, 0, 0, 30, 30], dtype=float)
    assert isolation_bandwidth(grid, values, 10.004) == pytest.approx(4.0)
    assert isolation_bandwidth(grid, values, 10.0) == 0.0


def test_circulator_working_point():
    omega = np.linspace(10.7, 11.7, 1001)
    point = circulator_working_point(11.2, 550.0, 0.0, omega)
    assert point.delta == pytest.approx(point.analytic_delta, rel=1e-6)
    assert point.center_isolation_db > 60.0
    assert point.bandwidth > 0.0
    assert point.insertion_loss.loss == pytest.approx(0.0, abs=1e-9)
