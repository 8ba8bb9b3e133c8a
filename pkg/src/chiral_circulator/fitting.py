"""Lorentzian extraction from spectra and global fits of the model parameters."""

import logging
import math
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass, fields, replace

import numpy as np
import numpy.typing as npt
from scipy import optimize, signal

from ._errors import (
    ConfigError,
    DomainError,
    FitNonConvergenceError,
    ModeCollapseError,
    NumericalError,
    UnidentifiableParameterError,
)
from ._internal.sweep import parallel_map
from .model import build_four_mode
from .nonhermitian import eig_biorthogonal, label_modes
from .scattering import hybrid_ports, lorentzian_decomposition, s_matrix
from .types import (
    BackgroundModel,
    ComplexArray,
    ExtractedTables,
    FitMode,
    FloatArray,
    GlobalFitResult,
    LorentzianComponent,
    LorentzianSet,
    ModelParams,
    PortMap,
    SpectrumTrace,
    TwoLorentzianFit,
)

logger = logging.getLogger(__name__)

DEFAULT_STARTS = 16
COLLAPSE_GHZ = 1e-4
WEIGHT_FLOOR = 0.01
MIN_SUCCESS_FRACTION = 0.9
HALF_POWER = 1.0 - 1.0 / math.sqrt(2.0)
GLOBAL_SPREAD = 0.2
IDENTIFIABILITY_THRESHOLD = 1e-10

# Output port 3 (waveguide), input port 1 (cavity 1)
TRANSMISSION = (2, 0)

_BACKGROUND_TERMS: dict[BackgroundModel, int] = {"none": 0, "constant": 2, "linear": 4}
_PARAMS_PER_MODE = 4


def _evaluate(
    full: FloatArray, detuning: FloatArray, background: BackgroundModel, modes: int = 2
) -> ComplexArray:
    total = np.zeros(detuning.shape, dtype=np.complex128)
    for n in range(modes):
        re, im, offset, kappa = full[_PARAMS_PER_MODE * n : _PARAMS_PER_MODE * (n + 1)]
        total += (re + 1j * im) / (0.5 * kappa - 1j * (detuning - offset))
    terms = full[modes * _PARAMS_PER_MODE :]
    if background != "none":
        total += terms[0] + 1j * terms[1]
    if background == "linear":
        total += (terms[2] + 1j * terms[3]) * detuning
    return total


def _residual_function(
    detuning: FloatArray,
    data: ComplexArray,
    weights: FloatArray,
    background: BackgroundModel,
    magnitude: bool,
    modes: int = 2,
) -> Callable[[FloatArray], FloatArray]:
    def residuals(full: FloatArray) -> FloatArray:
        model = _evaluate(full, detuning, background, modes)
        if magnitude:
            return np.asarray(
                (np.abs(model) ** 2 - np.abs(data) ** 2) * weights**2, dtype=np.float64
            )
        diff = (model - data) * weights
        return np.concatenate([diff.real, diff.imag])

    return residuals


def _initial_guess(
    detuning: FloatArray, data: ComplexArray, background: BackgroundModel, magnitude: bool
) -> FloatArray:
    """Peak-finder guess: two strongest peaks of |S| with half-power widths."""
    y = np.abs(data)
    spacing = float(np.mean(np.diff(detuning)))
    peaks, props = signal.find_peaks(y, prominence=0.02 * float(np.ptp(y) or 1.0))
    if peaks.size == 0:
        peaks = np.array([int(np.argmax(y))])
        props = {"prominences": np.array([float(np.ptp(y))])}
    strongest = peaks[np.argsort(props["prominences"])[::-1][:2]]
    widths = signal.peak_widths(y, strongest, rel_height=HALF_POWER)[0] * spacing
    widths = np.maximum(widths, 2.0 * spacing)

    if strongest.size == 1:
        centre = float(detuning[strongest[0]])
        offsets = [centre + 0.25 * widths[0], centre - 0.25 * widths[0]]
        kappas = [0.5 * widths[0], 0.5 * widths[0]]
        values = [data[strongest[0]] * 0.5, data[strongest[0]] * 0.5]
    else:
        offsets = [float(detuning[i]) for i in strongest]
        kappas = [float(w) for w in widths]
        values = [data[i] for i in strongest]

    full: list[float] = []
    for offset, kappa, value in zip(offsets, kappas, values, strict=True):
        c = (abs(value) if magnitude else complex(value)) * 0.5 * kappa
        full.extend([float(np.real(c)), float(np.imag(c)), offset, kappa])
    full.extend([0.0] * _BACKGROUND_TERMS[background])
    return np.asarray(full, dtype=np.float64)


def _peeled_guess(
    detuning: FloatArray,
    data: ComplexArray,
    weights: FloatArray,
    background: BackgroundModel,
    magnitude: bool,
) -> FloatArray | None:
    """Guess from one Lorentzian on the strongest peak plus the peak of what it leaves."""
    y = np.abs(data)
    spacing = float(np.mean(np.diff(detuning)))
    i = int(np.argmax(y))
    width = max(float(signal.peak_widths(y, [i], rel_height=HALF_POWER)[0][0]) * spacing, 2.0 * spacing)
    c = (y[i] if magnitude else complex(data[i])) * 0.5 * width
    single = np.asarray(
        [np.real(c), np.imag(c), detuning[i], width] + [0.0] * _BACKGROUND_TERMS[background],
        dtype=np.float64,
    )
    try:
        result = optimize.least_squares(
            _residual_function(detuning, data, weights, background, magnitude, modes=1),
            single, method="lm", jac="2-point", max_nfev=2000,
        )
    except (ValueError, np.linalg.LinAlgError):
        return None
    single = result.x
    if not (np.all(np.isfinite(single)) and single[3] > 0):
        return None

    model = _evaluate(single, detuning, background, modes=1)
    rest = np.abs(data) - np.abs(model) if magnitude else data - model
    weight = np.clip(rest.real, 0.0, None) if magnitude else np.abs(rest)
    weight = np.where(np.abs(detuning - single[2]) > 0.5 * single[3], weight, 0.0)
    if not np.any(weight > 0):
        return None
    j = int(np.argmax(weight))
    width_2 = max(float(signal.peak_widths(weight, [j], rel_height=HALF_POWER)[0][0]) * spacing, 2.0 * spacing)
    c_2 = (weight[j] if magnitude else complex(rest[j])) * 0.5 * width_2
    return np.concatenate(
        [
            single[:_PARAMS_PER_MODE],
            [np.real(c_2), np.imag(c_2), detuning[j], width_2],
            single[_PARAMS_PER_MODE:],
        ]
    ).astype(np.float64)


def _perturb(guess: FloatArray, rng: np.random.Generator, magnitude: bool) -> FloatArray:
    start = guess.copy()
    for n in range(2):
        base = _PARAMS_PER_MODE * n
        kappa = start[base + 3]
        c = complex(start[base], start[base + 1])
        c *= math.exp(0.2 * rng.normal())
        if not magnitude:
            c *= np.exp(0.3j * rng.normal())
        start[base] = c.real
        start[base + 1] = c.imag
        start[base + 2] += 0.5 * kappa * rng.normal()
        start[base + 3] = kappa * math.exp(0.3 * rng.normal())
    return start


@dataclass
class _Candidate:
    full: FloatArray
    cost: float
    jac: FloatArray
    residual_count: int
    nfev: int
    start: int


def fit_two_lorentzians(
    trace: SpectrumTrace,
    *,
    mode: FitMode = "complex",
    background: BackgroundModel = "none",
    starts: int = DEFAULT_STARTS,
    rng: np.random.Generator | None = None,
) -> TwoLorentzianFit:
    """Fit two Lorentzians (and an optional background) to one trace.

    Complex data is fit on real and imaginary parts with per-point weights
    1 / max(|S|, 1% of max |S|). Magnitude data fits |model|^2 against |S|^2
    with the phase of the first mode pinned to zero. The first start uses
    peak-finder guesses and the second peels one Lorentzian off the strongest
    peak and seeds the other mode at the largest remainder, which finds weak
    modes sitting on a broad tail. Later starts perturb these two.

    Raises:
        FitNonConvergenceError: If no start converges to positive linewidths.
        ModeCollapseError: If every converged start puts both modes on one frequency.
    """
    magnitude = mode == "magnitude" or trace.magnitude_only
    generator = rng if rng is not None else np.random.default_rng(0)
    centre = float(0.5 * (trace.frequencies[0] + trace.frequencies[-1]))
    detuning = 1000.0 * (trace.frequencies - centre)
    data = np.abs(trace.values).astype(np.complex128) if magnitude else trace.values
    scale = np.maximum(np.abs(data), WEIGHT_FLOOR * float(np.max(np.abs(data))))
    weights = 1.0 / scale

    guesses = [_initial_guess(detuning, data, background, magnitude)]
    peeled = _peeled_guess(detuning, data, weights, background, magnitude)
    if peeled is not None:
        guesses.append(peeled)
    mask = np.ones(guesses[0].size, dtype=bool)
    if magnitude:
        for guess in guesses:
            guess[0] = math.hypot(guess[0], guess[1])
            guess[1] = 0.0
        mask[1] = False
    template = guesses[0]
    residual_full = _residual_function(detuning, data, weights, background, magnitude)

    def residuals(x: FloatArray) -> FloatArray:
        full = template.copy()
        full[mask] = x
        return residual_full(full)

    converged: list[_Candidate] = []
    collapsed: list[tuple[float, float]] = []
    total_nfev = 0
    for start in range(starts):
        guess = guesses[start % len(guesses)]
        x0 = guess if start < len(guesses) else _perturb(guess, generator, magnitude)
        try:
            result = optimize.least_squares(
                residuals, x0[mask], method="lm", jac="2-point",
                xtol=1e-12, ftol=1e-12, gtol=1e-12, max_nfev=4000,
            )
        except (ValueError, np.linalg.LinAlgError) as e:
            logger.debug(f"Start {start} raised: {e}")
            continue
        total_nfev += int(result.nfev)
        full = template.copy()
        full[mask] = result.x
        kappas = full[3 : 2 * _PARAMS_PER_MODE : _PARAMS_PER_MODE]
        if not (result.success and np.all(np.isfinite(full)) and np.all(kappas > 0)):
            continue
        offsets = full[2 : 2 * _PARAMS_PER_MODE : _PARAMS_PER_MODE]
        if abs(offsets[0] - offsets[1]) / 1000.0 < COLLAPSE_GHZ:
            collapsed.append((centre + offsets[0] / 1000.0, centre + offsets[1] / 1000.0))
            continue
        converged.append(
            _Candidate(full, float(result.cost), result.jac, result.fun.size, int(result.nfev), start)
        )

    if not converged:
        if collapsed:
            raise ModeCollapseError(*collapsed[0])
        raise FitNonConvergenceError(
            f"Two-Lorentzian fit failed at B = {trace.field_mt!r} mT", starts=starts
        )
    best = min(converged, key=lambda c: c.cost)
    logger.debug(
        f"B = {trace.field_mt!r} mT: best start {best.start}, cost {best.cost:.3e}, "
        f"{len(converged)}/{starts} converged"
    )
    return _build_fit(best, mask, centre, detuning, data, background, magnitude, total_nfev)


def _build_fit(
    best: _Candidate,
    mask: npt.NDArray[np.bool_],
    centre: float,
    detuning: FloatArray,
    data: ComplexArray,
    background: BackgroundModel,
    magnitude: bool,
    nfev: int,
) -> TwoLorentzianFit:
    full = best.full
    jac = np.asarray(best.jac, dtype=np.float64)
    dof = max(best.residual_count - jac.shape[1], 1)
    reduced = np.linalg.pinv(jac.T @ jac) * (2.0 * best.cost / dof)
    covariance = np.zeros((full.size, full.size))
    covariance[np.ix_(mask, mask)] = reduced

    model = _evaluate(full, detuning, background)
    residual = np.abs(model) - np.abs(data) if magnitude else np.abs(model - data)

    order = sorted(range(2), key=lambda n: -full[_PARAMS_PER_MODE * n + 2])
    components = []
    freq_err, kappa_err, amp_err = [], [], []
    for n in order:
        base = _PARAMS_PER_MODE * n
        c = complex(full[base], full[base + 1])
        components.append(
            LorentzianComponent(
                amplitude=abs(c),
                phase=float(np.angle(c)),
                frequency=centre + full[base + 2] / 1000.0,
                kappa=float(full[base + 3]),
            )
        )
        freq_err.append(math.sqrt(max(covariance[base + 2, base + 2], 0.0)) / 1000.0)
        kappa_err.append(math.sqrt(max(covariance[base + 3, base + 3], 0.0)))
        grad = np.array([c.real, c.imag]) / abs(c) if abs(c) > 0 else np.zeros(2)
        block = covariance[base : base + 2, base : base + 2]
        amp_err.append(math.sqrt(max(float(grad @ block @ grad), 0.0)))

    terms = full[2 * _PARAMS_PER_MODE :]
    offset_term = complex(terms[0], terms[1]) if background != "none" else 0j
    slope_term = complex(terms[2], terms[3]) if background == "linear" else 0j
    return TwoLorentzianFit(
        lorentzians=LorentzianSet(components=tuple(components), background=offset_term),
        rms=float(np.sqrt(np.mean(residual**2))),
        cost=best.cost,
        covariance=covariance,
        frequency_stderr=np.array(freq_err),
        kappa_stderr=np.array(kappa_err),
        amplitude_stderr=np.array(amp_err),
        background=(offset_term, slope_term),
        nfev=nfev,
        start=best.start,
    )


def _empty_tables(field_values: FloatArray) -> ExtractedTables:
    shape = (field_values.size, 2)
    return ExtractedTables(
        fields=field_values,
        frequency=np.full(shape, np.nan),
        kappa=np.full(shape, np.nan),
        amplitude=np.full(shape, np.nan),
        phase=np.full(shape, np.nan),
        frequency_stderr=np.full(shape, np.nan),
        kappa_stderr=np.full(shape, np.nan),
        amplitude_stderr=np.full(shape, np.nan),
        failed=np.zeros(field_values.size, dtype=bool),
    )


def sweep_extract(
    traces: Sequence[SpectrumTrace],
    *,
    mode: FitMode = "complex",
    background: BackgroundModel = "none",
    starts: int = DEFAULT_STARTS,
    seed: int = 0,
    threads: int = 1,
) -> ExtractedTables:
    """Fit every trace and assemble mode-tracked tables.

    Traces are ordered by field. Column 0 (mode ``a``) is the higher-frequency
    component at the first field; later points keep the assignment that moves
    each frequency least. Failed points are flagged and left as NaN.

    Raises:
        FitNonConvergenceError: If fewer than 90% of the traces fit.
    """
    ordered = sorted(traces, key=lambda t: t.field_mt)
    children = np.random.SeedSequence(seed).spawn(len(ordered))

    def _fit(job: tuple[SpectrumTrace, np.random.SeedSequence]) -> TwoLorentzianFit | None:
        trace, child = job
        try:
            return fit_two_lorentzians(
                trace, mode=mode, background=background, starts=starts,
                rng=np.random.default_rng(child),
            )
        except NumericalError as e:
            logger.warning(f"Fit failed at B = {trace.field_mt!r} mT: {e}")
            return None

    fits = parallel_map(_fit, list(zip(ordered, children, strict=True)), threads)
    tables = _empty_tables(np.array([t.field_mt for t in ordered], dtype=np.float64))
    succeeded = sum(fit is not None for fit in fits)
    logger.info(f"Extracted {succeeded}/{len(fits)} traces")
    if not fits or succeeded < MIN_SUCCESS_FRACTION * len(fits):
        raise FitNonConvergenceError(
            f"Only {succeeded} of {len(fits)} traces could be fit", starts=starts
        )

    previous: FloatArray | None = None
    for i, fit in enumerate(fits):
        if fit is None:
            tables.failed[i] = True
            continue
        comps = fit.lorentzians.components
        order = [0, 1]
        if previous is not None:
            straight = abs(comps[0].frequency - previous[0]) + abs(comps[1].frequency - previous[1])
            swapped = abs(comps[1].frequency - previous[0]) + abs(comps[0].frequency - previous[1])
            if swapped < straight:
                order = [1, 0]
        for column, n in enumerate(order):
            tables.frequency[i, column] = comps[n].frequency
            tables.kappa[i, column] = comps[n].kappa
            tables.amplitude[i, column] = comps[n].amplitude
            tables.phase[i, column] = comps[n].phase
            tables.frequency_stderr[i, column] = fit.frequency_stderr[n]
            tables.kappa_stderr[i, column] = fit.kappa_stderr[n]
            tables.amplitude_stderr[i, column] = fit.amplitude_stderr[n]
        previous = tables.frequency[i].copy()
    return tables


def _mode_components(
    params: ModelParams, field_mt: float, ports: PortMap
) -> tuple[LorentzianComponent, LorentzianComponent]:
    h = build_four_mode(params, field_mt)
    labels = label_modes(eig_biorthogonal(h))
    decomposition = lorentzian_decomposition(h, ports, *TRANSMISSION)
    return decomposition.components[labels["a"]], decomposition.components[labels["b"]]


def predict_tables(params: ModelParams, fields_mt: Sequence[float] | FloatArray) -> ExtractedTables:
    """Exact Lorentzian parameters of modes a and b in S31 from the 4x4 model."""
    field_values = np.asarray(fields_mt, dtype=np.float64)
    tables = _empty_tables(field_values)
    ports = hybrid_ports(params)
    for i, field_mt in enumerate(field_values):
        for column, comp in enumerate(_mode_components(params, float(field_mt), ports)):
            tables.frequency[i, column] = comp.frequency
            tables.kappa[i, column] = comp.kappa
            tables.amplitude[i, column] = comp.amplitude
            tables.phase[i, column] = comp.phase
    for name in ("frequency_stderr", "kappa_stderr", "amplitude_stderr"):
        getattr(tables, name)[:] = 0.0
    return tables


@dataclass(frozen=True)
class ResidualFloors:
    """Lower limits on the per-point sigmas of the global fit (MHz)."""

    frequency: float = 0.01
    kappa: float = 0.01
    amplitude: float = 1e-3


_PARAM_NAMES = frozenset(f.name for f in fields(ModelParams))
_NON_NEGATIVE = frozenset({"kappa_1", "kappa_2", "kappa_3", "kappa_x", "beta_0"})


def _bounds(name: str) -> tuple[float, float]:
    if name in _NON_NEGATIVE:
        return 0.0, np.inf
    if name == "b_0":
        return 1e-6, np.inf
    return -np.inf, np.inf


def fit_global_params(
    tables: ExtractedTables,
    free: Sequence[str],
    fixed: Mapping[str, float] | None = None,
    *,
    base: ModelParams | None = None,
    starts: int = 4,
    seed: int = 0,
    floors: ResidualFloors | None = None,
    strict: bool = False,
) -> GlobalFitResult:
    """Weighted least squares of the 4x4 model against extracted tables.

    Residuals are frequency (MHz), linewidth and amplitude differences, each
    divided by max(standard error, floor). At every field the model's a and b
    modes are matched to the table columns by nearest frequency. Starts beyond
    the first draw each free value uniformly within +-20%.

    Raises:
        ConfigError: If a free or fixed name is not a model parameter.
        DomainError: If the tables do not span both field signs.
        FitNonConvergenceError: If no start converges.
        UnidentifiableParameterError: With ``strict`` and a flat direction.
    """
    floors = floors or ResidualFloors()
    fixed = _check_names(free, fixed)

    valid = ~tables.failed
    field_values = tables.fields[valid]
    if not (np.any(field_values > 0) and np.any(field_values < 0)):
        raise DomainError("Global fit needs fields of both signs", points=int(field_values.size))

    start_params = replace(base or ModelParams(), **fixed)
    data = {
        "frequency": tables.frequency[valid] * 1000.0,
        "kappa": tables.kappa[valid],
        "amplitude": tables.amplitude[valid],
    }
    sigma = {
        "frequency": np.maximum(np.nan_to_num(tables.frequency_stderr[valid] * 1000.0), floors.frequency),
        "kappa": np.maximum(np.nan_to_num(tables.kappa_stderr[valid]), floors.kappa),
        "amplitude": np.maximum(np.nan_to_num(tables.amplitude_stderr[valid]), floors.amplitude),
    }

    def residuals_for(params: ModelParams) -> FloatArray:
        ports = hybrid_ports(params)
        out = np.empty((field_values.size, 6))
        for i, field_mt in enumerate(field_values):
            try:
                comps = _mode_components(params, float(field_mt), ports)
            except NumericalError:
                out[i] = 1e6
                continue
            freqs = data["frequency"][i]
            straight = abs(comps[0].frequency * 1000.0 - freqs[0]) + abs(comps[1].frequency * 1000.0 - freqs[1])
            swapped = abs(comps[1].frequency * 1000.0 - freqs[0]) + abs(comps[0].frequency * 1000.0 - freqs[1])
            pair = (comps[1], comps[0]) if swapped < straight else comps
            for column, comp in enumerate(pair):
                out[i, 3 * column] = (comp.frequency * 1000.0 - freqs[column]) / sigma["frequency"][i, column]
                out[i, 3 * column + 1] = (comp.kappa - data["kappa"][i, column]) / sigma["kappa"][i, column]
                out[i, 3 * column + 2] = (comp.amplitude - data["amplitude"][i, column]) / sigma["amplitude"][i, column]
        return out.ravel()

    return _solve_global(residuals_for, start_params, tuple(free), starts=starts, seed=seed, strict=strict)


def _check_names(free: Sequence[str], fixed: Mapping[str, float] | None) -> dict[str, float]:
    fixed = dict(fixed or {})
    for name in (*free, *fixed):
        if name not in _PARAM_NAMES:
            raise ConfigError("Unknown model parameter", key=name)
    overlap = set(free) & set(fixed)
    if overlap:
        raise ConfigError("Parameter is both free and fixed", key=sorted(overlap)[0])
    return fixed


def _solve_global(
    residuals_for: Callable[[ModelParams], FloatArray],
    start_params: ModelParams,
    names: tuple[str, ...],
    *,
    starts: int,
    seed: int,
    strict: bool,
) -> GlobalFitResult:
    """Multi-start bounded trust-region fit of ``names`` around ``start_params``."""
    if not names:
        r = residuals_for(start_params)
        return GlobalFitResult(
            params=start_params,
            free=(),
            values={},
            cost=float(0.5 * r @ r),
            residual_rms=float(np.sqrt(np.mean(r**2))),
            nfev=0,
            starts=0,
        )

    def residuals(x: FloatArray) -> FloatArray:
        return residuals_for(replace(start_params, **dict(zip(names, map(float, x), strict=True))))

    lower, upper = zip(*(_bounds(name) for name in names), strict=True)
    x_base = np.array([getattr(start_params, name) for name in names], dtype=np.float64)
    x_base = np.clip(x_base, lower, upper)
    rng = np.random.default_rng(seed)
    best: optimize.OptimizeResult | None = None
    nfev = 0
    for start in range(starts):
        x0 = x_base if start == 0 else x_base * (1.0 + rng.uniform(-GLOBAL_SPREAD, GLOBAL_SPREAD, x_base.size))
        x0 = np.clip(x0, np.array(lower) + 1e-12, upper)
        try:
            result = optimize.least_squares(residuals, x0, bounds=(lower, upper), method="trf", x_scale="jac")
        except (ValueError, ConfigError, DomainError) as e:
            logger.debug(f"Global start {start} raised: {e}")
            continue
        nfev += int(result.nfev)
        logger.info(f"Global start {start}: cost {result.cost:.6e}, status {result.status}")
        if result.success and (best is None or result.cost < best.cost):
            best = result
    if best is None:
        raise FitNonConvergenceError("Global parameter fit failed", starts=starts)

    values = dict(zip(names, map(float, best.x), strict=True))
    unidentifiable = _flat_directions(np.asarray(best.jac, dtype=np.float64), names)
    for name in unidentifiable:
        logger.warning(f"Parameter {name!r} is poorly constrained by the data")
    if strict and unidentifiable:
        raise UnidentifiableParameterError(unidentifiable[0], IDENTIFIABILITY_THRESHOLD)
    return GlobalFitResult(
        params=replace(start_params, **values),
        free=names,
        values=values,
        cost=float(best.cost),
        residual_rms=float(np.sqrt(np.mean(best.fun**2))),
        nfev=nfev,
        starts=starts,
        unidentifiable=unidentifiable,
    )


def fit_global_traces(
    traces: Sequence[SpectrumTrace],
    free: Sequence[str],
    fixed: Mapping[str, float] | None = None,
    *,
    base: ModelParams | None = None,
    starts: int = 4,
    seed: int = 0,
    strict: bool = False,
) -> GlobalFitResult:
    """Least squares of the model S31 against the measured traces directly.

    Every trace contributes (model - data) / max |data| on its real and
    imaginary parts, or the magnitude difference for magnitude-only traces.
    Model and data pass through the same window, so no Lorentzian estimator
    sits between them. Starts are drawn as in :func:`fit_global_params`.

    Raises:
        ConfigError: If a free or fixed name is not a model parameter.
        DomainError: If the traces do not span both field signs.
        FitNonConvergenceError: If no start converges.
        UnidentifiableParameterError: With ``strict`` and a flat direction.
    """
    fixed = _check_names(free, fixed)
    field_values = np.array([trace.field_mt for trace in traces], dtype=np.float64)
    if not (np.any(field_values > 0) and np.any(field_values < 0)):
        raise DomainError("Global fit needs fields of both signs", points=int(field_values.size))

    start_params = replace(base or ModelParams(), **fixed)
    scales = [float(np.max(np.abs(trace.values))) or 1.0 for trace in traces]
    port_out, port_in = TRANSMISSION

    def residuals_for(params: ModelParams) -> FloatArray:
        ports = hybrid_ports(params)
        parts = []
        for trace, scale in zip(traces, scales, strict=True):
            size = trace.values.size if trace.magnitude_only else 2 * trace.values.size
            try:
                model = s_matrix(build_four_mode(params, trace.field_mt), ports, trace.frequencies)
            except NumericalError:
                parts.append(np.full(size, 1e6))
                continue
            s31 = model[:, port_out, port_in]
            if trace.magnitude_only:
                parts.append((np.abs(s31) - np.abs(trace.values)) / scale)
            else:
                diff = (s31 - trace.values) / scale
                parts.append(np.concatenate([diff.real, diff.imag]))
        return np.concatenate(parts)

    logger.info(f"Fitting {len(free)} parameter(s) to {len(traces)} traces")
    return _solve_global(residuals_for, start_params, tuple(free), starts=starts, seed=seed, strict=strict)



def _flat_directions(jac: FloatArray, names: tuple[str, ...]) -> list[str]:
    """Parameters dominating near-null eigenvectors of the column-scaled normal matrix."""
    norms = np.linalg.norm(jac, axis=0)
    if np.any(norms == 0):
        return [name for name, norm in zip(names, norms, strict=True) if norm == 0]
    scaled = jac / norms
    eigenvalues, eigenvectors = np.linalg.eigh(scaled.T @ scaled)
    flat = []
    for value, vector in zip(eigenvalues, eigenvectors.T, strict=True):
        if value < IDENTIFIABILITY_THRESHOLD:
            flat.append(names[int(np.argmax(np.abs(vector)))])
    return sorted(set(flat))


def synthesize_sweep(
    params: ModelParams,
    fields_mt: Sequence[float] | FloatArray,
    omega: FloatArray,
    noise_level: float,
    seed: int,
    *,
    magnitude: bool = False,
    threads: int = 1,
) -> list[SpectrumTrace]:
    """Model S31 traces with complex Gaussian noise.

    The noise RMS is ``noise_level * max |S31|`` per trace, split equally
    between real and imaginary parts. Each field draws from its own child of
    ``SeedSequence(seed)``, so the output does not depend on ``threads``.
    """
    if noise_level < 0:
        raise DomainError("Noise level must be non-negative", noise_level=noise_level)
    grid = np.asarray(omega, dtype=np.float64)
    field_values = [float(b) for b in fields_mt]
    children = np.random.SeedSequence(seed).spawn(len(field_values))
    ports = hybrid_ports(params)

    def _trace(job: tuple[float, np.random.SeedSequence]) -> SpectrumTrace:
        field_mt, child = job
        clean = s_matrix(build_four_mode(params, field_mt), ports, grid)[..., TRANSMISSION[0], TRANSMISSION[1]]
        values = np.asarray(clean, dtype=np.complex128)
        if noise_level > 0:
            rng = np.random.default_rng(child)
            rms = noise_level * float(np.max(np.abs(clean)))
            noise = rng.normal(size=grid.size) + 1j * rng.normal(size=grid.size)
            values = values + rms * noise / math.sqrt(2.0)
        if magnitude:
            values = np.abs(values).astype(np.complex128)
        return SpectrumTrace(frequencies=grid, values=values, field_mt=field_mt, magnitude_only=magnitude)

    traces = parallel_map(_trace, list(zip(field_values, children, strict=True)), threads)
    logger.info(f"Synthesized {len(traces)} traces at noise level {noise_level!r}")
    return traces
