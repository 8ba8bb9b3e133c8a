"""Biorthogonal eigen-analysis, mode tracking and two-mode reduction."""

import logging
import math
from collections.abc import Sequence
from typing import Literal

import numpy as np
import numpy.typing as npt
import scipy.linalg
from scipy.optimize import linear_sum_assignment

from ._errors import (
    DegenerateCouplingError,
    DivisionByNegligibleError,
    DomainError,
    SingularBlockError,
)
from ._internal.sweep import parallel_map
from .model import build_four_mode
from .types import (
    ComplexMatrix,
    EigenSweep,
    EigenSystem,
    LimitCheck,
    LimitClass,
    ModeLabel,
    ModelParams,
    ReducedModel,
    SimilarityResult,
    TrackingResult,
)

logger = logging.getLogger(__name__)

MAX_DIMENSION = 16
PAIRING_TOLERANCE = 1e-8
GAP_TOLERANCE = 1e-9
NEGLIGIBLE_OVERLAP = 1e-12
NEGLIGIBLE_COUPLING = 1e-15
AMBIGUITY_MARGIN = 0.1
LIMIT_TOLERANCE = 0.15

# Bare-mode indices of the four-mode basis
CAVITY_1, CAVITY_2, Y_MODE, X_MODE = 0, 1, 2, 3


def _as_square(h: npt.ArrayLike) -> ComplexMatrix:
    matrix = np.asarray(h, dtype=np.complex128)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise DomainError("Expected a square matrix", shape=matrix.shape)
    if not np.all(np.isfinite(matrix)):
        raise DomainError("Matrix has non-finite entries")
    return matrix


def _min_gap(eigenvalues: npt.NDArray[np.complex128]) -> float:
    if eigenvalues.size < 2:
        return math.inf
    distances = np.abs(eigenvalues[:, None] - eigenvalues[None, :])
    distances[np.diag_indices_from(distances)] = np.inf
    return float(distances.min())


def eig_biorthogonal(h: npt.ArrayLike) -> EigenSystem:
    """Diagonalize a non-Hermitian matrix into paired right and left eigenvectors.

    Left vectors come from the eigensystem of H^dagger, paired with the right
    vectors by conjugate eigenvalue. Close to an exceptional point (minimum
    eigenvalue gap below 1e-9 GHz) the pairing is meaningless, so the left
    vectors are taken from the inverse of the right-vector matrix and the
    result is flagged ``near_defective``.

    Args:
        h: Square complex matrix, at most 16x16.

    Returns:
        EigenSystem sorted by real eigenvalue, with <n_L|m_R> = delta_nm.

    Raises:
        DomainError: If ``h`` is not square, not finite or too large.
    """
    matrix = _as_square(h)
    n = matrix.shape[0]
    if n > MAX_DIMENSION:
        raise DomainError("Matrix exceeds the supported dimension", dimension=n)

    eigenvalues, right = scipy.linalg.eig(matrix)
    min_gap = _min_gap(eigenvalues)
    near_defective = min_gap < GAP_TOLERANCE
    left: ComplexMatrix

    if near_defective:
        logger.warning(f"Eigenvalue gap {min_gap:.3e} GHz: near an exceptional point")
        left = np.linalg.pinv(right).conj().T
    else:
        adjoint_values, adjoint_vectors = scipy.linalg.eig(matrix.conj().T)
        cost = np.abs(eigenvalues[:, None] - adjoint_values.conj()[None, :])
        rows, cols = linear_sum_assignment(cost)
        mismatch = float(cost[rows, cols].max())
        scale = max(1.0, float(np.abs(eigenvalues).max()))
        if mismatch > PAIRING_TOLERANCE * scale:
            logger.warning(
                f"Left/right pairing mismatch {mismatch:.3e} GHz; "
                "falling back to the inverse of the right vectors"
            )
            left = np.linalg.inv(right).conj().T
        else:
            left = adjoint_vectors[:, cols[np.argsort(rows)]]

    order = np.lexsort((eigenvalues.imag, eigenvalues.real))
    eigenvalues = eigenvalues[order]
    right = right[:, order].astype(np.complex128)
    left = left[:, order].astype(np.complex128)

    for k in range(n):
        r = right[:, k] / np.linalg.norm(right[:, k])
        pivot = r[np.argmax(np.abs(r))]
        r = r * (abs(pivot) / pivot)
        overlap = np.vdot(left[:, k], r)
        right[:, k] = r
        left[:, k] = left[:, k] / np.conj(overlap)

    return EigenSystem(
        eigenvalues=eigenvalues.astype(np.complex128),
        right_vectors=right,
        left_vectors=left,
        near_defective=near_defective,
        min_gap=min_gap,
    )


def track_modes(sweep: Sequence[EigenSystem]) -> TrackingResult:
    """Follow eigenmodes through a sweep by greedy best right-vector overlap.

    Labels are the eigen-order at the first point. A step is flagged
    ambiguous when, for some label, the best and second-best overlaps differ
    by less than 0.1; the assignment is still made.
    """
    if not sweep:
        return TrackingResult(assignments=[], ambiguous=[])

    n = sweep[0].dimension
    assignments: list[tuple[int, ...]] = [tuple(range(n))]
    ambiguous: list[bool] = [False]

    for previous, current in zip(sweep, sweep[1:], strict=False):
        if current.dimension != n:
            raise DomainError("Sweep mixes matrix dimensions")
        prior = assignments[-1]
        prev_vectors = previous.right_vectors[:, list(prior)]
        prev_vectors = prev_vectors / np.linalg.norm(prev_vectors, axis=0)
        next_vectors = current.right_vectors / np.linalg.norm(
            current.right_vectors, axis=0
        )
        overlaps = np.abs(prev_vectors.conj().T @ next_vectors)

        flagged = False
        if n > 1:
            ranked = np.sort(overlaps, axis=1)
            flagged = bool(np.any(ranked[:, -1] - ranked[:, -2] < AMBIGUITY_MARGIN))

        step = [-1] * n
        work = overlaps.copy()
        for _ in range(n):
            label, index = np.unravel_index(int(np.argmax(work)), work.shape)
            step[int(label)] = int(index)
            work[int(label), :] = -1.0
            work[:, int(index)] = -1.0

        if flagged:
            logger.warning(f"Ambiguous mode tracking at sweep step {len(assignments)}")
        assignments.append(tuple(step))
        ambiguous.append(flagged)

    return TrackingResult(assignments=assignments, ambiguous=ambiguous)


def participation(es: EigenSystem) -> npt.NDArray[np.float64]:
    """Biorthogonal participation |<i|n_R><n_L|i>|, indexed [bare mode, eigenmode]."""
    return np.asarray(
        np.abs(es.right_vectors * es.left_vectors.conj()), dtype=np.float64
    )


def label_modes(es: EigenSystem) -> dict[ModeLabel, int]:
    """Assign labels a-d to the eigenmodes of the four-mode Hamiltonian.

    ``a`` and ``b`` are the two modes with the largest cavity participation,
    ``a`` being the one with more weight on cavity 1. ``c`` is the remaining
    mode with the larger y-mode participation.
    """
    if es.dimension != 4:
        raise DomainError("Mode labels need the four-mode basis", dimension=es.dimension)
    p = participation(es)
    cavity = p[CAVITY_1] + p[CAVITY_2]
    by_cavity = sorted(range(4), key=lambda n: (-cavity[n], n))
    a, b = sorted(by_cavity[:2], key=lambda n: (-p[CAVITY_1, n], n))
    c, d = sorted(by_cavity[2:], key=lambda n: (-p[Y_MODE, n], n))
    return {"a": a, "b": b, "c": c, "d": d}


def eigen_sweep(
    params: ModelParams, fields_mt: Sequence[float], threads: int = 1
) -> EigenSweep:
    """Diagonalize the four-mode Hamiltonian at every field point."""

    def _solve(field_mt: float) -> EigenSystem:
        return eig_biorthogonal(build_four_mode(params, field_mt))

    grid = np.asarray(fields_mt, dtype=np.float64)
    systems = parallel_map(_solve, [float(b) for b in grid], threads)
    flagged = sum(es.near_defective for es in systems)
    if flagged:
        logger.warning(f"{flagged} of {len(systems)} field points are near-defective")
    logger.info(f"Diagonalized {len(systems)} field points")
    return EigenSweep(
        fields=grid, systems=systems, labels=[label_modes(es) for es in systems]
    )


def r_ratio(es: EigenSystem, i: int, n: int) -> float:
    """Non-reciprocity ratio |<n_L|i>| / |<i|n_R>| of unit-normalized vectors.

    Raises:
        DivisionByNegligibleError: If mode ``n`` has no weight on bare mode ``i``.
    """
    right = es.right_vectors[:, n] / np.linalg.norm(es.right_vectors[:, n])
    left = es.left_vectors[:, n] / np.linalg.norm(es.left_vectors[:, n])
    denominator = abs(right[i])
    if denominator < NEGLIGIBLE_OVERLAP:
        raise DivisionByNegligibleError(
            f"Eigenmode {n} has no weight on bare mode {i}", denominator
        )
    return float(abs(left[i]) / denominator)


def amplitude_ratio_of_system(
    es: EigenSystem, n: int, input_mode: int = CAVITY_1, output_mode: int = Y_MODE
) -> float:
    """|<n_L|in><out|n_R>| / |<in|n_R><n_L|out>| for eigenmode ``n``."""
    right = es.right_vectors[:, n]
    left = es.left_vectors[:, n]
    denominator = abs(right[input_mode]) * abs(left[output_mode])
    scale = float(np.linalg.norm(right) * np.linalg.norm(left))
    if denominator < NEGLIGIBLE_OVERLAP * scale:
        raise DivisionByNegligibleError(
            f"Eigenmode {n} does not couple the probed modes", denominator
        )
    return float(abs(left[input_mode]) * abs(right[output_mode]) / denominator)


def amplitude_ratio(
    params: ModelParams, field_mt: float, mode: ModeLabel | int
) -> float:
    """Lorentzian amplitude asymmetry A_n(B) / A_n(-B) = R_{1,n} / R_{y,n}.

    Only the eigensystem at ``field_mt`` is needed: reversing the field swaps
    left and right eigenvectors.
    """
    es = eig_biorthogonal(build_four_mode(params, field_mt))
    index = label_modes(es)[mode] if isinstance(mode, str) else mode
    return amplitude_ratio_of_system(es, index)


def adiabatic_eliminate(
    h4: npt.ArrayLike,
    omega_bar: float | None = None,
    *,
    self_consistent: bool = False,
    max_iterations: int = 50,
    tolerance: float = 1e-12,
) -> ReducedModel:
    """Eliminate the circulator block: H' = A + B (omega_bar - D)^-1 C.

    Args:
        h4: Four-mode Hamiltonian, cavities first.
        omega_bar: Evaluation frequency in GHz. Defaults to the mean bare
            cavity frequency.
        self_consistent: Re-evaluate at the mean real eigenvalue of H' until
            it stops moving.
        max_iterations: Iteration cap for the self-consistent loop.
        tolerance: Convergence threshold on omega_bar, GHz.

    Returns:
        ReducedModel carrying H', omega_bar and a degenerate flag when both
        off-diagonal couplings vanish.

    Raises:
        SingularBlockError: If omega_bar - D cannot be inverted.
    """
    matrix = _as_square(h4)
    if matrix.shape != (4, 4):
        raise DomainError("Elimination expects the four-mode Hamiltonian")
    a, b = matrix[:2, :2], matrix[:2, 2:]
    c, d = matrix[2:, :2], matrix[2:, 2:]

    def _reduce(frequency: float) -> ComplexMatrix:
        block = frequency * np.eye(2) - d
        if np.linalg.cond(block) > 1e12:
            raise SingularBlockError(
                f"omega_bar - D is singular at omega_bar = {frequency!r} GHz"
            )
        return np.asarray(a + b @ np.linalg.solve(block, c), dtype=np.complex128)

    frequency = (
        float(np.mean(a.diagonal().real)) if omega_bar is None else float(omega_bar)
    )
    reduced = _reduce(frequency)
    if self_consistent:
        for _ in range(max_iterations):
            updated = float(np.mean(np.linalg.eigvals(reduced).real))
            if abs(updated - frequency) < tolerance:
                break
            frequency = updated
            reduced = _reduce(frequency)
        else:
            logger.warning(
                f"Self-consistent elimination stopped after {max_iterations} "
                f"iterations at omega_bar = {frequency!r} GHz"
            )
        logger.debug(f"Self-consistent omega_bar = {frequency!r} GHz")

    degenerate = (
        abs(reduced[0, 1]) < NEGLIGIBLE_COUPLING
        and abs(reduced[1, 0]) < NEGLIGIBLE_COUPLING
    )
    return ReducedModel(matrix=reduced, omega_bar=frequency, degenerate=degenerate)


def similarity_analysis(rm: ReducedModel) -> SimilarityResult:
    """Map H' to the reciprocal H_rec = S H' S^-1 with S = diag(sqrt(r), 1/sqrt(r)).

    Raises:
        DegenerateCouplingError: If either off-diagonal coupling vanishes.
    """
    if abs(rm.h12) < NEGLIGIBLE_COUPLING or abs(rm.h21) < NEGLIGIBLE_COUPLING:
        raise DegenerateCouplingError(rm.h12, rm.h21)
    r = rm.r
    transform = np.diag([math.sqrt(r), 1.0 / math.sqrt(r)]).astype(np.complex128)
    h_rec = rm.matrix.copy()
    h_rec[0, 1] *= r
    h_rec[1, 0] /= r
    return SimilarityResult(h_rec=h_rec, transform=transform, r=r)


def transform_ratio(x: complex, y: complex, r: float) -> float:
    """R_{1,n} of a mode whose reciprocal-frame components are (x, y).

    Equals 1 when y = 0 and r^2 when x = 0.
    """
    ax, ay = abs(x) ** 2, abs(y) ** 2
    return float(r * math.sqrt((ax / r + r * ay) / (r * ax + ay / r)))


def r_limit_check(rm: ReducedModel, es2: EigenSystem | None = None) -> list[LimitCheck]:
    """Classify each reduced eigenmode as sitting near R_1 = 1 or R_1 = r^2.

    Mode ``a`` is the reduced eigenmode with more weight on cavity 1.
    """
    if es2 is None:
        es2 = eig_biorthogonal(rm.matrix)
    r = rm.r
    p = participation(es2)
    order = sorted(range(2), key=lambda n: (-p[0, n], n))
    checks: list[LimitCheck] = []
    labels: tuple[Literal["a", "b"], ...] = ("a", "b")
    for label, n in zip(labels, order, strict=True):
        right = es2.right_vectors[:, n]
        x = math.sqrt(r) * right[0]
        y = right[1] / math.sqrt(r)
        ratio = transform_ratio(x, y, r)
        target: dict[LimitClass, float] = {"unity": 1.0, "r_squared": r * r}
        limit = min(
            target, key=lambda name: (abs(math.log(ratio / target[name])), name)
        )
        checks.append(
            LimitCheck(
                mode=label,
                transform_ratio=ratio,
                direct_ratio=r_ratio(es2, 0, n),
                component_ratio=abs(x) / abs(y) if abs(y) > 0 else math.inf,
                r_squared=r * r,
                limit=limit,
                in_limit=abs(math.log(ratio / target[limit]))
                <= math.log1p(LIMIT_TOLERANCE),
            )
        )
    return checks
