"""Error types for the circulator model library."""

from pathlib import Path
from typing import Any


class CirculatorError(Exception):
    """Base exception for all chiral-circulator errors."""


class ConfigError(CirculatorError):
    """Raised when a configuration file or parameter set is invalid."""

    def __init__(
        self,
        message: str,
        key: str | None = None,
        path: str | Path | None = None,
        line_number: int | None = None,
    ):
        self.key = key
        self.path = str(path) if path is not None else None
        self.line_number = line_number

        if key:
            message = f"{message} (key: {key})"
        if self.path:
            location = self.path
            if line_number is not None:
                location = f"{location}:{line_number}"
            message = f"{message} [{location}]"

        super().__init__(message)


class DataParseError(CirculatorError):
    """Raised when a measured or synthesized trace file cannot be parsed."""

    def __init__(self, message: str, path: str | Path, line_number: int | None = None):
        self.path = str(path)
        self.line_number = line_number
        location = self.path if line_number is None else f"{self.path}:{line_number}"
        super().__init__(f"{message} [{location}]")


class NumericalError(CirculatorError):
    """Base class for failures of a numerical operation."""


class NearDefectiveError(NumericalError):
    """Raised when an eigensystem sits too close to an exceptional point."""

    def __init__(self, min_gap: float):
        self.min_gap = min_gap
        super().__init__(
            f"Matrix is near-defective (minimum eigenvalue gap {min_gap:.3e} GHz)"
        )


class DivisionByNegligibleError(NumericalError):
    """Raised when a ratio would divide by a vanishing overlap or amplitude."""

    def __init__(self, message: str, value: float):
        self.value = value
        super().__init__(f"{message} (|denominator| = {value:.3e})")


class SingularBlockError(NumericalError):
    """Raised when the eliminated block cannot be inverted."""


class DegenerateCouplingError(NumericalError):
    """Raised when a reduced model has a vanishing off-diagonal coupling."""

    def __init__(self, h12: complex, h21: complex):
        self.h12 = h12
        self.h21 = h21
        super().__init__(
            f"Reduced coupling is degenerate: |H12| = {abs(h12):.3e}, "
            f"|H21| = {abs(h21):.3e} GHz"
        )


class SingularAtResonanceError(NumericalError):
    """Raised when the Green's function is evaluated on a lossless pole."""

    def __init__(self, omega: float):
        self.omega = omega
        super().__init__(f"omega - H is singular at omega = {omega!r} GHz")


class OnResonancePoleError(NumericalError):
    """Raised when a permeability tensor is evaluated on its resonance pole."""

    def __init__(self, omega: float, omega_0: float):
        self.omega = omega
        self.omega_0 = omega_0
        super().__init__(
            f"Frequency {omega!r} GHz is on the resonance pole at {omega_0!r} GHz"
        )


class DomainError(NumericalError):
    """Raised when inputs fall outside the validity range of a formula."""

    def __init__(self, message: str, **context: Any):
        self.context = context
        if context:
            details = ", ".join(f"{k}={v!r}" for k, v in sorted(context.items()))
            message = f"{message} ({details})"
        super().__init__(message)


class QuadratureNonConvergenceError(NumericalError):
    """Raised when adaptive quadrature fails to reach its tolerance."""

    def __init__(self, estimate: float, error: float):
        self.estimate = estimate
        self.error = error
        super().__init__(
            f"Quadrature did not converge: estimate {estimate:.6e}, "
            f"error {error:.3e}"
        )


class DegenerateAnisotropyError(NumericalError):
    """Raised when the anisotropy profile is requested with K = 0."""


class FitNonConvergenceError(NumericalError):
    """Raised when every start of a least-squares fit fails."""

    def __init__(self, message: str, starts: int | None = None):
        self.starts = starts
        if starts is not None:
            message = f"{message} (after {starts} starts)"
        super().__init__(message)


class ModeCollapseError(NumericalError):
    """Raised when two fitted Lorentzians converge onto the same frequency."""

    def __init__(self, freq_a: float, freq_b: float):
        self.freq_a = freq_a
        self.freq_b = freq_b
        super().__init__(
            f"Fitted modes collapsed: {freq_a!r} GHz and {freq_b!r} GHz"
        )


class UnidentifiableParameterError(NumericalError):
    """Raised when a free parameter lies along a flat direction of the fit."""

    def __init__(self, parameter: str, eigenvalue: float):
        self.parameter = parameter
        self.eigenvalue = eigenvalue
        super().__init__(
            f"Parameter {parameter!r} is not identifiable "
            f"(normal-matrix eigenvalue {eigenvalue:.3e})"
        )
