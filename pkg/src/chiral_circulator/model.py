"""Field-dependent Hamiltonians of the circulator modes and the cavity-circulator system.

All matrices are in GHz (linear frequency). Parameters carry MHz linewidths and
couplings and mT fields; conversions happen here and nowhere else.
"""

import logging
import math

import numpy as np
from scipy import constants

from ._errors import DomainError
from .types import ComplexMatrix, ModelParams

logger = logging.getLogger(__name__)

MU_0 = constants.mu_0


def beta_of_field(params: ModelParams, field_mt: float) -> float:
    """Anisotropy splitting beta(B) = beta_0 sech(B / B_0), MHz."""
    x = abs(field_mt) / params.b_0
    decay = math.exp(-x)
    return params.beta_0 * 2.0 * decay / (1.0 + decay * decay)


def coupling_strengths(params: ModelParams, field_mt: float) -> tuple[float, float]:
    """Cavity-circulator couplings (g_x, g_y) in MHz.

    Each coupling is ``g0 + g1 * beta`` with beta in MHz, multiplied by
    ``params.coupling_beta_scale`` (set it to 2 pi to read beta in rad/us).
    """
    beta = beta_of_field(params, field_mt) * params.coupling_beta_scale
    return params.g_x0 + params.g_x1 * beta, params.g_y0 + params.g_y1 * beta


def build_two_mode(params: ModelParams, field_mt: float) -> ComplexMatrix:
    """Hermitian two-mode circulator Hamiltonian in the (x, y) basis."""
    beta = beta_of_field(params, field_mt) / 1000.0
    b = field_mt / 1000.0
    theta = math.radians(params.theta)
    shift = params.m * b * b
    off = beta * math.sin(theta)
    return np.array(
        [
            [params.omega_x + beta * math.cos(theta) + shift, off + 1j * params.k * b],
            [off - 1j * params.k * b, params.omega_y - beta * math.cos(theta) + shift],
        ],
        dtype=np.complex128,
    )


def build_four_mode(params: ModelParams, field_mt: float) -> ComplexMatrix:
    """Non-Hermitian cavity-circulator Hamiltonian.

    Basis order is (cavity 1, cavity 2, y-mode, x-mode). The y-mode carries the
    waveguide loss kappa_3; the x-mode is lossless unless ``kappa_x`` is set.
    """
    beta = beta_of_field(params, field_mt) / 1000.0
    g_x, g_y = (g / 1000.0 for g in coupling_strengths(params, field_mt))
    b = field_mt / 1000.0
    theta = math.radians(params.theta)
    shift = params.m * b * b
    off = beta * math.sin(theta)
    return np.array(
        [
            [params.omega_1 - 0.5j * params.kappa_1 / 1000.0, 0.0, g_y, g_x],
            [0.0, params.omega_2 - 0.5j * params.kappa_2 / 1000.0, g_y, -g_x],
            [
                g_y,
                g_y,
                params.omega_y
                - beta * math.cos(theta)
                + shift
                - 0.5j * params.kappa_3 / 1000.0,
                off - 1j * params.k * b,
            ],
            [
                g_x,
                -g_x,
                off + 1j * params.k * b,
                params.omega_x
                + beta * math.cos(theta)
                + shift
                - 0.5j * params.kappa_x / 1000.0,
            ],
        ],
        dtype=np.complex128,
    )


def magnetization_of_field(field_mt: float, ms: float, n_z: float) -> float:
    """Magnetization (A/m) of a linear ramp M = B / (mu_0 N_z) capped at +-ms.

    Args:
        field_mt: Applied field in mT, any sign.
        ms: Saturation magnetization in A/m.
        n_z: Demagnetizing factor along the field.

    Returns:
        Magnetization in A/m with the sign of the field.

    Raises:
        DomainError: If ``ms`` is not positive or ``n_z`` is outside (0, 1).
    """
    if ms <= 0:
        raise DomainError("Saturation magnetization must be positive", ms=ms)
    if not 0.0 < n_z < 1.0:
        raise DomainError("Demagnetizing factor must lie in (0, 1)", n_z=n_z)
    ramp = abs(field_mt) / 1000.0 / (MU_0 * n_z)
    return math.copysign(min(ramp, ms), field_mt)


def internal_mode_params() -> ModelParams:
    """Parameters of the unloaded circulator-mode fit.

    The x and y modes are degenerate at 11.054 GHz. No anisotropy angle was
    reported for this fit, so the loaded-device value of 37.7 degrees is used.
    """
    return ModelParams(omega_x=11.054, omega_y=11.054, k=9.82, m=50.0, beta_0=139.0)
