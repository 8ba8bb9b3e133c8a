"""Input-output scattering, Lorentzian decomposition and circulator figures of merit."""

import logging
import math
from collections.abc import Callable

import numpy as np
import numpy.typing as npt
from scipy.optimize import minimize_scalar

from ._errors import (
    DivisionByNegligibleError,
    DomainError,
    NearDefectiveError,
    SingularAtResonanceError,
)
from .nonhermitian import eig_biorthogonal
from .types import (
    ComplexArray,
    ComplexMatrix,
    FloatArray,
    InsertionLoss,
    LorentzianComponent,
    LorentzianSet,
    ModelParams,
    Port,
    PortMap,
    WorkingPoint,
)

logger = logging.getLogger(__name__)

ISOLATION_CAP_DB = 120.0
NEGLIGIBLE_TRANSMISSION = 1e-15
CONDITION_LIMIT = 1e14


def greens_function(h: npt.ArrayLike, omega: npt.ArrayLike) -> ComplexArray:
    """Retarded Green's function G(omega) = (omega - H)^-1.

    ``omega`` may be a scalar (returns n x n) or an array (returns
    ``omega.shape + (n, n)``).

    Raises:
        SingularAtResonanceError: If omega - H is singular to working precision.
    """
    matrix = np.asarray(h, dtype=np.complex128)
    n = matrix.shape[0]
    grid = np.asarray(omega, dtype=np.float64)
    system = grid[..., None, None] * np.eye(n) - matrix
    try:
        result = np.linalg.solve(system, np.broadcast_to(np.eye(n), system.shape))
    except np.linalg.LinAlgError as e:
        worst = float(grid.flat[0]) if grid.size == 1 else float("nan")
        raise SingularAtResonanceError(worst) from e
    condition = np.linalg.cond(system)
    if np.any(condition > CONDITION_LIMIT):
        worst = float(grid.reshape(-1)[int(np.argmax(condition))])
        raise SingularAtResonanceError(worst)
    return np.asarray(result, dtype=np.complex128)


def hybrid_ports(params: ModelParams) -> PortMap:
    """Ports 1 and 2 probe the cavities weakly; port 3 is the waveguide on the y-mode."""
    return PortMap(
        ports=(
            Port(mode=0, kappa=params.kappa_1),
            Port(mode=1, kappa=params.kappa_2),
            Port(mode=2, kappa=params.kappa_3),
        )
    )


def _port_weights(ports: PortMap) -> ComplexMatrix:
    kappas = ports.kappas_ghz
    phases = ports.phases
    return np.asarray(
        np.sqrt(np.outer(kappas, kappas)) * np.exp(1j * (phases[:, None] + phases[None, :])),
        dtype=np.complex128,
    )


def s_matrix(h: npt.ArrayLike, ports: PortMap, omega: npt.ArrayLike) -> ComplexArray:
    """S_ij = delta_ij - i sqrt(kappa_i kappa_j) G_ij(omega) over the mapped ports.

    Port phases enter symmetrically as exp(i (phi_i + phi_j)).
    """
    green = greens_function(h, omega)
    modes = ports.modes
    block = green[..., modes, :][..., :, modes]
    size = len(modes)
    return np.asarray(
        np.eye(size) - 1j * _port_weights(ports) * block, dtype=np.complex128
    )


def lorentzian_decomposition(
    h: npt.ArrayLike, ports: PortMap, output: int, input: int
) -> LorentzianSet:
    """Split S_{output,input} into one Lorentzian per eigenmode.

    Each complex amplitude is -sqrt(kappa_i kappa_j) <i|n_R><n_L|j> (MHz), so
    the set reproduces ``s_matrix`` exactly. The lineshape is written with
    +i(omega - omega_n) in the denominator, i.e. the complex conjugate of the
    exp(+i omega t) form; magnitudes and every ratio are unaffected.

    Raises:
        NearDefectiveError: If the eigensystem is flagged near an exceptional point.
    """
    es = eig_biorthogonal(h)
    if es.near_defective:
        raise NearDefectiveError(es.min_gap)
    out_port = ports.ports[output]
    in_port = ports.ports[input]
    weight = math.sqrt(out_port.kappa * in_port.kappa) * np.exp(
        1j * (out_port.phase + in_port.phase)
    )
    components = []
    for n in range(es.dimension):
        amplitude = (
            -weight
            * es.right_vectors[out_port.mode, n]
            * np.conj(es.left_vectors[in_port.mode, n])
        )
        components.append(
            LorentzianComponent(
                amplitude=float(abs(amplitude)),
                phase=float(np.angle(amplitude)),
                frequency=float(es.eigenvalues[n].real),
                kappa=float(-2000.0 * es.eigenvalues[n].imag),
            )
        )
    return LorentzianSet(
        components=tuple(components), background=1.0 + 0j if output == input else 0j
    )


def isolation_db(forward: npt.ArrayLike, backward: npt.ArrayLike) -> FloatArray:
    """20 log10 |forward / backward|, clamped to +-120 dB.

    Raises:
        DivisionByNegligibleError: Where both transmissions vanish.
    """
    f = np.abs(np.asarray(forward, dtype=np.complex128))
    b = np.abs(np.asarray(backward, dtype=np.complex128))
    both = (f < NEGLIGIBLE_TRANSMISSION) & (b < NEGLIGIBLE_TRANSMISSION)
    if np.any(both):
        raise DivisionByNegligibleError(
            "Isolation undefined: both transmissions vanish", float(np.max(b[both]))
        )
    tiny = np.finfo(np.float64).tiny
    ratio = 20.0 * (np.log10(np.maximum(f, tiny)) - np.log10(np.maximum(b, tiny)))
    return np.asarray(np.clip(ratio, -ISOLATION_CAP_DB, ISOLATION_CAP_DB))


def isolation_ratio(
    hamiltonian_of_field: Callable[[float], ComplexMatrix],
    field_mt: float,
    ports: PortMap,
    i: int,
    j: int,
    omega: npt.ArrayLike,
) -> FloatArray:
    """Self-calibrated isolation 20 log10 |S_ij(B) / S_ij(-B)| in dB."""
    forward = s_matrix(hamiltonian_of_field(field_mt), ports, omega)[..., i, j]
    backward = s_matrix(hamiltonian_of_field(-field_mt), ports, omega)[..., i, j]
    return isolation_db(forward, backward)


def kappa_c_from_kappa_3(kappa_3: float) -> float:
    """Loaded-circulator half linewidth from the waveguide decay rate (kappa_3 = 4 kappa_c / 3)."""
    return 0.75 * kappa_3


def kappa_3_from_kappa_c(kappa_c: float) -> float:
    return kappa_c * 4.0 / 3.0


def working_point_splitting(kappa_c: float, kappa_i: float = 0.0) -> float:
    """Mode splitting (MHz) that nulls the isolated port at the centre frequency.

    With no internal loss this is 2 kappa_c / sqrt(3).
    """
    return (2.0 * kappa_c + kappa_i) / math.sqrt(3.0)


def three_port_circulator(
    center_ghz: float,
    delta_mhz: float,
    kappa_c_mhz: float,
    kappa_i_mhz: float,
    omega: npt.ArrayLike,
) -> ComplexArray:
    """S-matrix of two counter-rotating modes coupled to three symmetric ports.

    The modes sit at center +- delta/2. Each has external full linewidth
    2 kappa_c (kappa_c is a half linewidth) shared equally by the ports with
    phases exp(+-2 pi i p / 3), plus an internal full linewidth kappa_i. For
    delta > 0 the circulation is 1 -> 2 -> 3 -> 1; negative delta reverses it
    and returns the transpose.
    """
    if kappa_c_mhz <= 0:
        raise DomainError("kappa_c must be positive", kappa_c=kappa_c_mhz)
    if kappa_i_mhz < 0:
        raise DomainError("kappa_i must be non-negative", kappa_i=kappa_i_mhz)
    external = 2.0 * kappa_c_mhz / 1000.0
    total = external + kappa_i_mhz / 1000.0
    h = np.diag(
        [
            center_ghz + 0.5 * delta_mhz / 1000.0 - 0.5j * total,
            center_ghz - 0.5 * delta_mhz / 1000.0 - 0.5j * total,
        ]
    ).astype(np.complex128)
    p = np.arange(3)
    coupling = math.sqrt(external / 3.0) * np.vstack(
        [np.exp(2j * np.pi * p / 3.0), np.exp(-2j * np.pi * p / 3.0)]
    )
    green = greens_function(h, omega)
    return np.asarray(
        np.eye(3) - 1j * (coupling.conj().T @ green @ coupling), dtype=np.complex128
    )


def insertion_loss(s: npt.ArrayLike, through: tuple[int, int] = (1, 0)) -> InsertionLoss:
    """Insertion loss 1 - |S21|^2 and the bound 1 - |S21|^2 - |S11|^2 - |S31|^2.

    ``through`` is (output, input); the bound subtracts the reflection at the
    input and the leak into the remaining port.
    """
    matrix = np.asarray(s, dtype=np.complex128)
    if matrix.shape != (3, 3):
        raise DomainError("Insertion loss needs a 3x3 S matrix", shape=matrix.shape)
    out, inp = through
    if out == inp or not {out, inp} <= {0, 1, 2}:
        raise DomainError("Through path must join two distinct ports", output=out, input=inp)
    other = ({0, 1, 2} - {out, inp}).pop()
    forward = abs(matrix[out, inp]) ** 2
    return InsertionLoss(
        loss=float(1.0 - forward),
        bound=float(
            1.0 - forward - abs(matrix[inp, inp]) ** 2 - abs(matrix[other, inp]) ** 2
        ),
    )


def optimize_working_point(
    center_ghz: float, kappa_c_mhz: float, kappa_i_mhz: float = 0.0
) -> float:
    """Splitting (MHz) minimizing |S31| at the centre frequency, found numerically."""
    guess = working_point_splitting(kappa_c_mhz, kappa_i_mhz)

    def _leak(delta: float) -> float:
        s = three_port_circulator(center_ghz, delta, kappa_c_mhz, kappa_i_mhz, center_ghz)
        return float(abs(s[2, 0]) ** 2)

    result = minimize_scalar(
        _leak,
        bounds=(0.5 * guess, 1.5 * guess),
        method="bounded",
        options={"xatol": 1e-9 * guess},
    )
    logger.debug(f"Working-point search: delta = {result.x!r} MHz, |S31|^2 = {result.fun!r}")
    return float(result.x)


def isolation_bandwidth(
    omega: npt.ArrayLike, isolation: npt.ArrayLike, center_ghz: float, threshold_db: float = 20.0
) -> float:
    """Width (MHz) of the contiguous band around ``center_ghz`` above ``threshold_db``.

    Edges are resolved to the grid spacing.
    """
    grid = np.asarray(omega, dtype=np.float64)
    values = np.asarray(isolation, dtype=np.float64)
    start = int(np.argmin(np.abs(grid - center_ghz)))
    if values[start] < threshold_db:
        return 0.0
    lo = start
    while lo > 0 and values[lo - 1] >= threshold_db:
        lo -= 1
    hi = start
    while hi < grid.size - 1 and values[hi + 1] >= threshold_db:
        hi += 1
    return float(1000.0 * (grid[hi] - grid[lo]))


def circulator_working_point(
    center_ghz: float,
    kappa_c_mhz: float,
    kappa_i_mhz: float,
    omega: npt.ArrayLike,
    threshold_db: float = 20.0,
) -> WorkingPoint:
    """Optimized splitting, centre isolation, 20 dB bandwidth and insertion loss."""
    delta = optimize_working_point(center_ghz, kappa_c_mhz, kappa_i_mhz)
    grid = np.asarray(omega, dtype=np.float64)
    s = three_port_circulator(center_ghz, delta, kappa_c_mhz, kappa_i_mhz, grid)
    isolation = isolation_db(s[..., 1, 0], s[..., 0, 1])
    center = three_port_circulator(center_ghz, delta, kappa_c_mhz, kappa_i_mhz, center_ghz)
    return WorkingPoint(
        delta=delta,
        analytic_delta=working_point_splitting(kappa_c_mhz, kappa_i_mhz),
        center_isolation_db=float(isolation_db(center[1, 0], center[0, 1])),
        bandwidth=isolation_bandwidth(grid, isolation, center_ghz, threshold_db),
        insertion_loss=insertion_loss(center),
    )
