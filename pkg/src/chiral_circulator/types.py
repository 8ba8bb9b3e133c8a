"""Type definitions for the circulator model library."""

import math
import sys
from dataclasses import dataclass, field, fields
from typing import Literal, TypedDict

import numpy as np
import numpy.typing as npt

from ._errors import ConfigError, DomainError

if sys.version_info >= (3, 11):
    from typing import NotRequired
else:
    from typing_extensions import NotRequired

ComplexMatrix = npt.NDArray[np.complex128]
ComplexArray = npt.NDArray[np.complex128]
FloatArray = npt.NDArray[np.float64]

# Mode labels of the cavity-circulator system
ModeLabel = Literal["a", "b", "c", "d"]
MODE_LABELS: tuple[ModeLabel, ...] = ("a", "b", "c", "d")

# Fitting
FitMode = Literal["complex", "magnitude"]
BackgroundModel = Literal["none", "constant", "linear"]

# Output
OutputFormat = Literal["csv", "json", "both"]

# Reduced-model limit classes
LimitClass = Literal["unity", "r_squared"]


@dataclass(frozen=True)
class ModelParams:
    """Fitted Hamiltonian parameters.

    Frequencies are linear (omega / 2 pi) in GHz, linewidths are full widths
    in MHz, fields in mT and angles in degrees. Defaults are the fitted
    cavity-circulator values; ``kappa_1`` and ``kappa_2`` are the weak probe
    couplings, which only scale Lorentzian amplitudes.
    """

    omega_1: float = 10.8104
    omega_2: float = 10.8040
    omega_x: float = 10.707
    omega_y: float = 10.813
    kappa_1: float = 0.1
    kappa_2: float = 0.1
    kappa_3: float = 730.0
    kappa_x: float = 0.0
    k: float = 9.82
    m: float = 50.0
    beta_0: float = 139.0
    b_0: float = 18.5
    theta: float = 37.7
    g_x0: float = 9.0
    g_x1: float = 0.011
    g_y0: float = 5.0
    g_y1: float = 0.006
    coupling_beta_scale: float = 1.0

    def __post_init__(self) -> None:
        for f in fields(self):
            value = getattr(self, f.name)
            if not math.isfinite(value):
                raise ConfigError(f"Parameter must be finite, got {value!r}", f.name)
        for name in ("kappa_1", "kappa_2", "kappa_3", "kappa_x"):
            if getattr(self, name) < 0:
                raise ConfigError("Linewidth must be non-negative", name)
        if self.beta_0 < 0:
            raise ConfigError("Anisotropy splitting must be non-negative", "beta_0")
        if self.b_0 <= 0:
            raise ConfigError("Anisotropy decay field must be positive", "b_0")


@dataclass(frozen=True, eq=False)
class EigenSystem:
    """Biorthogonal eigensystem of a square complex matrix.

    Column ``n`` of ``right_vectors`` and ``left_vectors`` holds |n_R> and
    |n_L>, normalized so that <n_L|n_R> = 1 with the largest component of
    |n_R> real and positive. Eigenvalues are sorted by real part.
    """

    eigenvalues: ComplexArray
    right_vectors: ComplexMatrix
    left_vectors: ComplexMatrix
    near_defective: bool = False
    min_gap: float = math.inf

    @property
    def dimension(self) -> int:
        return int(self.eigenvalues.shape[0])

    @property
    def frequencies(self) -> FloatArray:
        """Real parts of the eigenvalues, GHz."""
        return np.asarray(self.eigenvalues.real, dtype=np.float64)

    @property
    def linewidths(self) -> FloatArray:
        """Full linewidths -2 Im(omega_n), MHz."""
        return np.asarray(-2000.0 * self.eigenvalues.imag, dtype=np.float64)

    def biorthogonality_error(self) -> float:
        overlaps = self.left_vectors.conj().T @ self.right_vectors
        return float(np.max(np.abs(overlaps - np.eye(self.dimension))))

    def completeness_error(self) -> float:
        resolution = self.right_vectors @ self.left_vectors.conj().T
        return float(np.max(np.abs(resolution - np.eye(self.dimension))))


@dataclass(frozen=True, eq=False)
class ReducedModel:
    """Two-mode cavity Hamiltonian left after eliminating the circulator modes."""

    matrix: ComplexMatrix
    omega_bar: float
    degenerate: bool = False

    @property
    def h12(self) -> complex:
        return complex(self.matrix[0, 1])

    @property
    def h21(self) -> complex:
        return complex(self.matrix[1, 0])

    @property
    def h12_abs_mhz(self) -> float:
        return 1000.0 * abs(self.h12)

    @property
    def h21_abs_mhz(self) -> float:
        return 1000.0 * abs(self.h21)

    @property
    def r(self) -> float:
        """sqrt(|H21| / |H12|); 1 when both couplings vanish."""
        if self.degenerate:
            return 1.0
        if abs(self.h12) == 0.0:
            return math.inf
        return math.sqrt(abs(self.h21) / abs(self.h12))


@dataclass(frozen=True, eq=False)
class SimilarityResult:
    """Reciprocal Hamiltonian S H' S^-1 with S = diag(sqrt(r), 1/sqrt(r))."""

    h_rec: ComplexMatrix
    transform: ComplexMatrix
    r: float


@dataclass(frozen=True)
class LimitCheck:
    """Classification of one reduced eigenmode against the R = 1 / R = r^2 limits."""

    mode: Literal["a", "b"]
    transform_ratio: float
    direct_ratio: float
    component_ratio: float
    r_squared: float
    limit: LimitClass
    in_limit: bool


@dataclass(frozen=True)
class TrackingResult:
    """Label assignment along a sweep.

    ``assignments[i][k]`` is the eigenvalue index at sweep point ``i`` that
    carries label ``k`` (labels are the eigen-order of the first point).
    """

    assignments: list[tuple[int, ...]]
    ambiguous: list[bool]


@dataclass(frozen=True, eq=False)
class EigenSweep:
    """Eigensystems of the four-mode Hamiltonian over a field grid."""

    fields: FloatArray
    systems: list[EigenSystem]
    labels: list[dict[ModeLabel, int]]


@dataclass(frozen=True)
class Port:
    """External port coupled to one bare mode with full linewidth ``kappa`` (MHz)."""

    mode: int
    kappa: float
    phase: float = 0.0

    def __post_init__(self) -> None:
        if self.kappa < 0:
            raise DomainError("Port coupling must be non-negative", kappa=self.kappa)
        if self.mode < 0:
            raise DomainError("Port mode index must be non-negative", mode=self.mode)


@dataclass(frozen=True)
class PortMap:
    """Ordered set of external ports."""

    ports: tuple[Port, ...]

    @property
    def modes(self) -> list[int]:
        return [port.mode for port in self.ports]

    @property
    def kappas_ghz(self) -> FloatArray:
        return np.array([port.kappa / 1000.0 for port in self.ports])

    @property
    def phases(self) -> FloatArray:
        return np.array([port.phase for port in self.ports])


@dataclass(frozen=True)
class LorentzianComponent:
    """One resonance ``A exp(i phi) / (kappa/2 - i (omega - omega_0))``.

    ``amplitude`` and ``kappa`` are in MHz and the detuning is taken in MHz,
    so an isolated mode probed on its own port has ``amplitude == kappa``.
    """

    amplitude: float
    phase: float
    frequency: float
    kappa: float

    @property
    def complex_amplitude(self) -> complex:
        return complex(self.amplitude * np.exp(1j * self.phase))

    def evaluate(self, omega: npt.ArrayLike) -> ComplexArray:
        detuning = 1000.0 * (np.asarray(omega, dtype=np.float64) - self.frequency)
        return np.asarray(
            self.complex_amplitude / (0.5 * self.kappa - 1j * detuning),
            dtype=np.complex128,
        )


@dataclass(frozen=True)
class LorentzianSet:
    """Sum of Lorentzian components plus a constant background."""

    components: tuple[LorentzianComponent, ...]
    background: complex = 0j

    def evaluate(self, omega: npt.ArrayLike) -> ComplexArray:
        grid = np.asarray(omega, dtype=np.float64)
        total = np.full(grid.shape, self.background, dtype=np.complex128)
        for component in self.components:
            total = total + component.evaluate(grid)
        return total


@dataclass(frozen=True)
class InsertionLoss:
    """Forward insertion loss and the internal-loss bound of a circulator."""

    loss: float
    bound: float


@dataclass(frozen=True)
class WorkingPoint:
    """Operating point of the ideal three-port circulator."""

    delta: float
    analytic_delta: float
    center_isolation_db: float
    bandwidth: float
    insertion_loss: InsertionLoss


@dataclass(frozen=True)
class FerriteParams:
    """Ferrite material constants.

    ``ms`` is in A/m (see ``oersted_to_ampere_per_meter``), ``gamma`` in GHz/T.
    """

    ms: float
    gamma: float = 28.0
    n_x: float = 1.0 / 3.0
    n_y: float = 1.0 / 3.0
    n_z: float = 1.0 / 3.0

    def __post_init__(self) -> None:
        if self.ms <= 0:
            raise DomainError("Saturation magnetization must be positive", ms=self.ms)
        total = self.n_x + self.n_y + self.n_z
        if abs(total - 1.0) > 1e-6:
            raise DomainError("Demagnetizing factors must sum to 1", total=total)


@dataclass(frozen=True, eq=False)
class PermeabilityTensor:
    """3x3 complex relative permeability."""

    matrix: ComplexMatrix

    def __post_init__(self) -> None:
        if self.matrix.shape != (3, 3):
            raise DomainError("Permeability tensor must be 3x3", shape=self.matrix.shape)


@dataclass(frozen=True)
class SandyGreenScalars:
    """Scalar entries of the partially magnetized permeability tensor."""

    mu_d: float
    mu_p: float
    kappa_p: float
    mu_z: float
    kappa: float


@dataclass(frozen=True)
class ToyModelParams:
    """Single-domain anisotropy toy model.

    Only the ratios ``field * moment / temperature`` and
    ``anisotropy / temperature`` enter the statistics.
    """

    moment: float = 1.0
    anisotropy: float = 0.0
    temperature: float = 1.0

    def __post_init__(self) -> None:
        if self.temperature <= 0:
            raise DomainError("Temperature must be positive", temperature=self.temperature)
        if self.anisotropy < 0:
            raise DomainError("Anisotropy must be non-negative", anisotropy=self.anisotropy)


@dataclass(frozen=True)
class MomentExpectations:
    """Boltzmann averages of the moment components."""

    mx2: float
    my2: float
    mz2: float
    mz: float


@dataclass(frozen=True)
class SechFit:
    """Result of fitting sech(B / B0) to a normalized profile."""

    b_0: float
    rms: float


@dataclass(frozen=True, eq=False)
class SpectrumTrace:
    """Frequency trace at one field point.

    ``values`` are complex S-parameters, or magnitudes when
    ``magnitude_only`` is set.
    """

    frequencies: FloatArray
    values: ComplexArray
    field_mt: float
    magnitude_only: bool = False

    def __post_init__(self) -> None:
        if self.frequencies.ndim != 1 or self.frequencies.shape != self.values.shape:
            raise DomainError(
                "Trace frequencies and values must be 1-D of equal length",
                field_mt=self.field_mt,
            )
        if self.frequencies.size < 32:
            raise DomainError(
                "Trace needs at least 32 points",
                points=int(self.frequencies.size),
                field_mt=self.field_mt,
            )
        if not np.all(np.diff(self.frequencies) > 0):
            raise DomainError(
                "Trace frequency grid must be strictly increasing",
                field_mt=self.field_mt,
            )


@dataclass(frozen=True, eq=False)
class TwoLorentzianFit:
    """Two-Lorentzian fit of a single trace.

    Standard errors are in GHz (frequency) and MHz (linewidth, amplitude),
    ordered like ``lorentzians.components`` (descending frequency).
    """

    lorentzians: LorentzianSet
    rms: float
    cost: float
    covariance: FloatArray
    frequency_stderr: FloatArray
    kappa_stderr: FloatArray
    amplitude_stderr: FloatArray
    background: tuple[complex, complex]
    nfev: int
    start: int


@dataclass(frozen=True, eq=False)
class ExtractedTables:
    """Per-field Lorentzian parameters of modes ``a`` (column 0) and ``b`` (column 1)."""

    fields: FloatArray
    frequency: FloatArray
    kappa: FloatArray
    amplitude: FloatArray
    phase: FloatArray
    frequency_stderr: FloatArray
    kappa_stderr: FloatArray
    amplitude_stderr: FloatArray
    failed: npt.NDArray[np.bool_]

    def amplitude_ratio(self, column: int) -> tuple[FloatArray, FloatArray]:
        """A(B) / A(-B) for every positive field whose mirror point is present."""
        positive: list[float] = []
        ratios: list[float] = []
        for i, field_mt in enumerate(self.fields):
            if field_mt <= 0 or self.failed[i]:
                continue
            mirror = np.flatnonzero(np.isclose(self.fields, -field_mt, atol=1e-9))
            if mirror.size == 0 or self.failed[mirror[0]]:
                continue
            positive.append(float(field_mt))
            ratios.append(
                float(self.amplitude[i, column] / self.amplitude[mirror[0], column])
            )
        return np.array(positive), np.array(ratios)


@dataclass(frozen=True)
class GlobalFitResult:
    """Outcome of fitting ModelParams to extracted tables."""

    params: ModelParams
    free: tuple[str, ...]
    values: dict[str, float]
    cost: float
    residual_rms: float
    nfev: int
    starts: int
    unidentifiable: list[str] = field(default_factory=list)


# JSON report shapes
class ReducedModelReport(TypedDict):
    """JSON shape of a reduced model."""

    matrix: list[list[list[float]]]
    omega_bar_ghz: float
    h12_abs_mhz: float
    h21_abs_mhz: float
    r: float
    degenerate: NotRequired[bool]


class EigenSystemReport(TypedDict):
    """JSON shape of an eigensystem."""

    eigenvalues: list[list[float]]
    right_vectors: list[list[list[float]]]
    left_vectors: list[list[list[float]]]
    near_defective: bool
    min_gap: NotRequired[float]


class FitReport(TypedDict):
    """JSON shape written by the ``fit`` command."""

    target: str
    free: list[str]
    fixed: dict[str, float]
    values: dict[str, float]
    cost: float
    residual_rms: float
    nfev: int
    starts: int
    unidentifiable: list[str]
    failed_fields_mt: list[float]
    params: NotRequired[dict[str, float]]
