"""Ferrite permeability tensors and the Kittel precession frequency.

Frequencies are GHz, fields mT, magnetizations A/m and the gyromagnetic
ratio GHz/T, so omega_m = gamma * mu_0 * Ms comes out in GHz.
"""

import logging
import math

import numpy as np

from ._errors import DomainError, OnResonancePoleError
from .model import MU_0, magnetization_of_field
from .types import ComplexMatrix, FerriteParams, PermeabilityTensor, SandyGreenScalars

logger = logging.getLogger(__name__)

POLE_TOLERANCE = 1e-9

# Axis permutations taking the z-aligned demagnetized tensor to x and y alignment
ROTATE_TO_X = np.array([[0, 0, 1], [1, 0, 0], [0, 1, 0]], dtype=np.float64)
ROTATE_TO_Y = np.array([[0, 1, 0], [0, 0, 1], [1, 0, 0]], dtype=np.float64)


def oersted_to_ampere_per_meter(oersted: float) -> float:
    """1 Oe = 1000 / (4 pi) A/m."""
    return oersted * 1e3 / (4.0 * math.pi)


def ampere_per_meter_to_oersted(ampere_per_meter: float) -> float:
    return ampere_per_meter * 4.0 * math.pi / 1e3


def omega_m(ms: float, gamma: float) -> float:
    """Magnetization frequency gamma * mu_0 * Ms in GHz."""
    return gamma * MU_0 * ms


def kittel_frequency(p: FerriteParams, field_mt: float, n_xy: float | None = None) -> float:
    """Uniform-precession frequency gamma [B + mu_0 (N_xy - N_z) Ms] in GHz.

    ``n_xy`` defaults to the mean of the transverse factors.
    """
    transverse = 0.5 * (p.n_x + p.n_y) if n_xy is None else n_xy
    return p.gamma * (field_mt / 1000.0 + MU_0 * (transverse - p.n_z) * p.ms)


def kittel_frequency_general(p: FerriteParams, field_mt: float) -> float:
    """Kittel frequency for unequal transverse demagnetizing factors.

    Raises:
        DomainError: If the field is too low for a real precession frequency.
    """
    b = field_mt / 1000.0
    product = (b + MU_0 * (p.n_x - p.n_z) * p.ms) * (b + MU_0 * (p.n_y - p.n_z) * p.ms)
    if product < 0:
        raise DomainError(
            "Field below the stability limit of uniform precession", field_mt=field_mt
        )
    return p.gamma * math.sqrt(product)


def _gyrotropic(diagonal: complex, kappa: complex, axial: complex) -> ComplexMatrix:
    return np.array(
        [[diagonal, 1j * kappa, 0.0], [-1j * kappa, diagonal, 0.0], [0.0, 0.0, axial]],
        dtype=np.complex128,
    )


def polder_tensor(omega: float, omega_0: float, omega_m: float) -> PermeabilityTensor:
    """Saturated-ferrite relative permeability for a bias along z.

    Args:
        omega: Drive frequency in GHz.
        omega_0: Internal-field precession frequency gamma mu_0 H_0 in GHz.
        omega_m: Magnetization frequency gamma mu_0 Ms in GHz.

    Raises:
        OnResonancePoleError: If ``omega`` is within 1e-9 GHz of ``omega_0``.
    """
    if abs(omega - omega_0) < POLE_TOLERANCE:
        raise OnResonancePoleError(omega, omega_0)
    denominator = omega_0 * omega_0 - omega * omega
    mu_r = 1.0 + omega_0 * omega_m / denominator
    kappa = omega * omega_m / denominator
    return PermeabilityTensor(_gyrotropic(mu_r, kappa, 1.0))


def polder_tensor_for_field(
    omega: float, internal_field_mt: float, p: FerriteParams
) -> PermeabilityTensor:
    """Polder tensor with omega_0 and omega_m taken from a field and material."""
    return polder_tensor(
        omega, p.gamma * internal_field_mt / 1000.0, omega_m(p.ms, p.gamma)
    )


def _demagnetized_mu(omega: float, omega_m: float) -> float:
    if omega <= 0:
        raise DomainError("Frequency must be positive", omega=omega)
    if omega <= omega_m:
        raise DomainError(
            "Demagnetized permeability is complex for omega <= omega_m",
            omega=omega,
            omega_m=omega_m,
        )
    return math.sqrt(1.0 - (omega_m / omega) ** 2)


def sandy_green_scalars(omega: float, mp: float, ms: float, gamma: float) -> SandyGreenScalars:
    """Scalar entries of the partially magnetized tensor.

    The gyrotropic strength of the demagnetized material is taken as
    omega_m / omega, so kappa_p scales linearly with Mp / Ms.

    Raises:
        DomainError: If ``|mp| > ms`` or ``omega <= omega_m``.
    """
    if ms <= 0:
        raise DomainError("Saturation magnetization must be positive", ms=ms)
    if abs(mp) > ms:
        raise DomainError("Net magnetization exceeds saturation", mp=mp, ms=ms)
    w_m = omega_m(ms, gamma)
    root = _demagnetized_mu(omega, w_m)
    mu_d = 1.0 / 3.0 + 2.0 / 3.0 * root
    fraction = abs(mp) / ms
    kappa = w_m / omega
    return SandyGreenScalars(
        mu_d=mu_d,
        mu_p=mu_d + (1.0 - mu_d) * fraction**1.5,
        kappa_p=kappa * mp / ms,
        mu_z=mu_d ** ((1.0 - fraction) ** 2.5),
        kappa=kappa,
    )


def sandy_green_tensor(omega: float, mp: float, ms: float, gamma: float) -> PermeabilityTensor:
    scalars = sandy_green_scalars(omega, mp, ms, gamma)
    return PermeabilityTensor(_gyrotropic(scalars.mu_p, scalars.kappa_p, scalars.mu_z))


def partial_magnetization(field_mt: float, p: FerriteParams) -> float:
    """Net magnetization at an applied field, for use as the Sandy-Green input."""
    return magnetization_of_field(field_mt, p.ms, p.n_z)


def demagnetized_tensor(omega: float, omega_m: float) -> PermeabilityTensor:
    """Zero-net-moment tensor with every domain along +-z."""
    mu_eff = _demagnetized_mu(omega, omega_m) if omega_m > 0 else 1.0
    return PermeabilityTensor(np.diag([mu_eff, mu_eff, 1.0]).astype(np.complex128))


def anisotropic_weighted_tensor(
    omega: float, omega_m: float, delta: float
) -> PermeabilityTensor:
    """Domain-averaged tensor with a preference ``delta`` for the x axis.

    Weights are 1/3 + delta, 1/3 - delta and 1/3 for domains along x, y and z.

    Raises:
        DomainError: If ``|delta| > 1/3`` or ``omega <= omega_m``.
    """
    if abs(delta) > 1.0 / 3.0 + 1e-12:
        raise DomainError("Preference weight must satisfy |delta| <= 1/3", delta=delta)
    mu_z = demagnetized_tensor(omega, omega_m).matrix
    mu_x = ROTATE_TO_X @ mu_z @ ROTATE_TO_X.T
    mu_y = ROTATE_TO_Y @ mu_z @ ROTATE_TO_Y.T
    weighted = (1.0 / 3.0 + delta) * mu_x + (1.0 / 3.0 - delta) * mu_y + mu_z / 3.0
    logger.debug(f"Weighted tensor at omega={omega!r}, delta={delta!r}: {np.diag(weighted)}")
    return PermeabilityTensor(np.asarray(weighted, dtype=np.complex128))
