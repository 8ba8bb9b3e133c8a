"""Boltzmann statistics of a single magnetic domain with an in-plane easy axis.

The domain energy is -B M cos(theta) - K sin^2(theta) cos^2(phi). Only the
reduced ratios a = B M / T and b = K / T enter, so ``field`` is a reduced
quantity here; the CLI maps mT onto it with a single calibration scale.
"""

import logging
import math
from collections.abc import Callable, Sequence
from typing import Literal

import numpy as np
import numpy.typing as npt
from scipy import integrate, optimize, special

from ._errors import (
    DegenerateAnisotropyError,
    DomainError,
    FitNonConvergenceError,
    QuadratureNonConvergenceError,
)
from ._internal.sweep import parallel_map
from .types import FloatArray, MomentExpectations, SechFit, ToyModelParams

logger = logging.getLogger(__name__)

QuadratureMethod = Literal["adaptive", "bessel"]

EPS_ABS = 1e-13
EPS_REL = 1e-10
SERIES_THRESHOLD = 1e-3
MIN_FIT_POINTS = 8


def sech(x: npt.ArrayLike) -> FloatArray:
    """Overflow-free hyperbolic secant."""
    decay = np.exp(-np.abs(np.asarray(x, dtype=np.float64)))
    return np.asarray(2.0 * decay / (1.0 + decay * decay))


def _reduced(p: ToyModelParams, field: float) -> tuple[float, float]:
    if not (math.isfinite(field) and math.isfinite(p.moment) and math.isfinite(p.anisotropy)):
        raise DomainError("Toy-model inputs must be finite", field=field)
    return field * p.moment / p.temperature, p.anisotropy / p.temperature


def _adaptive(integrand: Callable[[float, float], float]) -> float:
    """Integrate ``integrand(phi, theta)`` over the sphere coordinates."""
    value, error = integrate.dblquad(
        integrand, 0.0, math.pi, 0.0, 2.0 * math.pi, epsabs=EPS_ABS, epsrel=EPS_REL
    )
    if not math.isfinite(value) or error > max(EPS_ABS, 1e-8 * abs(value)):
        raise QuadratureNonConvergenceError(value, error)
    return float(value)


def _shifted_integrals_adaptive(a: float, b: float) -> tuple[float, float, float, float, float]:
    shift = abs(a) + b

    def weight(phi: float, theta: float) -> float:
        s = math.sin(theta)
        c = math.cos(phi)
        return s * math.exp(a * math.cos(theta) + b * s * s * c * c - shift)

    z = _adaptive(weight)
    mx2 = _adaptive(lambda phi, theta: weight(phi, theta) * (math.sin(theta) * math.cos(phi)) ** 2)
    my2 = _adaptive(lambda phi, theta: weight(phi, theta) * (math.sin(theta) * math.sin(phi)) ** 2)
    mz2 = _adaptive(lambda phi, theta: weight(phi, theta) * math.cos(theta) ** 2)
    mz = _adaptive(lambda phi, theta: weight(phi, theta) * math.cos(theta)) if a else 0.0
    return z, mx2, my2, mz2, mz


def _quad(integrand: Callable[[float], float]) -> float:
    value, error = integrate.quad(integrand, 0.0, math.pi, epsabs=EPS_ABS, epsrel=EPS_REL, limit=200)
    if not math.isfinite(value) or error > max(EPS_ABS, 1e-8 * abs(value)):
        raise QuadratureNonConvergenceError(value, error)
    return float(value)


def _shifted_integrals_bessel(a: float, b: float) -> tuple[float, float, float, float, float]:
    """Same integrals with the azimuth done analytically through I0 and I1."""
    shift = abs(a)

    def azimuthal(theta: float) -> tuple[float, float, float]:
        s = math.sin(theta)
        beta = b * s * s
        scale = s * math.exp(a * math.cos(theta) - shift + beta - b)
        i0 = float(special.i0e(0.5 * beta))
        i1 = float(special.i1e(0.5 * beta))
        return 2.0 * math.pi * scale * i0, math.pi * scale * (i0 + i1), math.pi * scale * (i0 - i1)

    z = _quad(lambda t: azimuthal(t)[0])
    mx2 = _quad(lambda t: azimuthal(t)[1] * math.sin(t) ** 2)
    my2 = _quad(lambda t: azimuthal(t)[2] * math.sin(t) ** 2)
    mz2 = _quad(lambda t: azimuthal(t)[0] * math.cos(t) ** 2)
    mz = _quad(lambda t: azimuthal(t)[0] * math.cos(t)) if a else 0.0
    return z, mx2, my2, mz2, mz


def _integrals(
    a: float, b: float, method: QuadratureMethod
) -> tuple[float, float, float, float, float]:
    match method:
        case "adaptive":
            return _shifted_integrals_adaptive(a, b)
        case "bessel":
            return _shifted_integrals_bessel(a, b)
        case _:
            raise DomainError("Unknown quadrature method", method=method)


def partition_function(
    p: ToyModelParams, field: float, method: QuadratureMethod = "adaptive"
) -> float:
    """Z = integral of exp(-H / T) sin(theta) over the sphere.

    Raises:
        QuadratureNonConvergenceError: If the quadrature misses its tolerance.
    """
    a, b = _reduced(p, field)
    z, *_ = _integrals(a, b, method)
    return z * math.exp(abs(a) + b)


def moment_expectations(
    p: ToyModelParams, field: float, method: QuadratureMethod = "adaptive"
) -> MomentExpectations:
    """Boltzmann averages <Mx^2>, <My^2>, <Mz^2> and <Mz>.

    The second moments are even in the field and <Mz> is odd; both
    symmetries are imposed exactly.
    """
    a, b = _reduced(p, field)
    z, mx2, my2, mz2, mz = _integrals(abs(a), b, method)
    m2 = p.moment * p.moment
    return MomentExpectations(
        mx2=m2 * mx2 / z,
        my2=m2 * my2 / z,
        mz2=m2 * mz2 / z,
        mz=math.copysign(p.moment * mz / z, a) if a != 0 else 0.0,
    )


def langevin(a: float) -> float:
    """L(a) = coth(a) - 1/a, with a series near zero."""
    if abs(a) < SERIES_THRESHOLD:
        return a / 3.0 - a**3 / 45.0 + 2.0 * a**5 / 945.0
    return 1.0 / math.tanh(a) - 1.0 / a


def langevin_moments(p: ToyModelParams, field: float) -> MomentExpectations:
    """Closed-form moments of the isotropic (K = 0) domain."""
    a, _ = _reduced(p, field)
    if abs(a) < SERIES_THRESHOLD:
        transverse = 1.0 / 3.0 - a * a / 45.0 + 2.0 * a**4 / 945.0
    else:
        transverse = langevin(a) / a
    m2 = p.moment * p.moment
    return MomentExpectations(
        mx2=m2 * transverse,
        my2=m2 * transverse,
        mz2=m2 * (1.0 - 2.0 * transverse),
        mz=p.moment * langevin(a),
    )


def anisotropy_profile(
    p: ToyModelParams,
    fields: Sequence[float] | FloatArray,
    method: QuadratureMethod = "adaptive",
    threads: int = 1,
) -> FloatArray:
    """Normalized in-plane asymmetry (<Mx^2> - <My^2>)(B) / (<Mx^2> - <My^2>)(0).

    Raises:
        DegenerateAnisotropyError: If K = 0, where the curve is 0/0.
    """
    if p.anisotropy == 0:
        raise DegenerateAnisotropyError("Anisotropy profile is undefined for K = 0")
    zero = moment_expectations(p, 0.0, method)
    reference = zero.mx2 - zero.my2
    moments = parallel_map(
        lambda field: moment_expectations(p, field, method), [float(f) for f in fields], threads
    )
    profile = [(m.mx2 - m.my2) / reference for m in moments]
    logger.debug(f"Anisotropy profile over {len(profile)} fields, method={method}")
    return np.asarray(profile, dtype=np.float64)


def fit_sech(fields: npt.ArrayLike, curve: npt.ArrayLike) -> SechFit:
    """Least-squares fit of sech(B / B0) to a normalized profile.

    Raises:
        DomainError: With fewer than 8 points, non-finite data, or D(0) far from 1.
        FitNonConvergenceError: If the optimizer fails.
    """
    b = np.asarray(fields, dtype=np.float64)
    d = np.asarray(curve, dtype=np.float64)
    if b.shape != d.shape or b.size < MIN_FIT_POINTS:
        raise DomainError("Sech fit needs at least 8 matching points", points=int(b.size))
    if not (np.all(np.isfinite(b)) and np.all(np.isfinite(d))):
        raise DomainError("Sech fit data must be finite")
    at_zero = np.flatnonzero(b == 0.0)
    if at_zero.size and abs(d[at_zero[0]] - 1.0) > 1e-3:
        raise DomainError("Profile is not normalized at B = 0", value=float(d[at_zero[0]]))

    span = float(np.max(np.abs(b)))
    if span == 0:
        raise DomainError("Sech fit needs a nonzero field span")
    order = np.argsort(np.abs(b))
    below = np.flatnonzero(d[order] < float(sech(1.0)))
    guess = float(np.abs(b[order][below[0]])) if below.size else 0.5 * span
    guess = max(guess, 1e-3 * span)

    def residuals(x: FloatArray) -> FloatArray:
        return sech(b / x[0]) - d

    result = optimize.least_squares(
        residuals,
        x0=[guess],
        bounds=([1e-6 * span], [np.inf]),
        method="trf",
        xtol=1e-15,
        ftol=1e-15,
        gtol=1e-15,
    )
    if not result.success:
        raise FitNonConvergenceError(f"Sech fit failed: {result.message}", starts=1)
    rms = float(np.sqrt(np.mean(result.fun**2)))
    logger.debug(f"Sech fit: B0 = {result.x[0]!r}, rms = {rms!r}, nfev = {result.nfev}")
    return SechFit(b_0=float(result.x[0]), rms=rms)
