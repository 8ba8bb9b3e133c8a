"""Command-line front end: config in, CSV and JSON artifacts out."""

import argparse
import logging
import math
import sys
from collections.abc import Callable, Sequence
from dataclasses import asdict
from pathlib import Path
from typing import Any, cast

import numpy as np

from . import anisotropy, ferrite, fitting, model, nonhermitian, scattering
from ._errors import (
    CirculatorError,
    ConfigError,
    DataParseError,
    DivisionByNegligibleError,
    NearDefectiveError,
    NumericalError,
)
from ._internal import serialization
from ._internal.config import (
    RunConfig,
    apply_overrides,
    load_config,
    parameter_name,
)
from ._internal.sweep import parallel_map
from ._version import __version__
from .anisotropy import QuadratureMethod
from .types import (
    MODE_LABELS,
    BackgroundModel,
    EigenSystem,
    EigenSystemReport,
    FerriteParams,
    FitMode,
    FitReport,
    FloatArray,
    ModelParams,
    OutputFormat,
    PermeabilityTensor,
    ReducedModel,
    ReducedModelReport,
    ToyModelParams,
)

logger = logging.getLogger(__name__)

EXIT_CONFIG = 2
EXIT_PARSE = 3
EXIT_NUMERICAL = 4


# Output helpers


def _wants_csv(run: RunConfig) -> bool:
    return run.output_format in ("csv", "both")


def _wants_json(run: RunConfig) -> bool:
    return run.output_format in ("json", "both")


def _write_table(run: RunConfig, name: str, columns: Sequence[str], rows: Sequence[Sequence[Any]]) -> None:
    serialization.write_csv(
        run.out_dir / name, columns, rows, serialization.header_lines(run.hash, run.values)
    )


def _write_report(run: RunConfig, name: str, payload: dict[str, Any]) -> None:
    serialization.write_json(
        run.out_dir / name,
        {"config_hash": run.hash, "version": __version__, **payload},
    )


def _eigen_report(es: EigenSystem) -> EigenSystemReport:
    report: EigenSystemReport = {
        "eigenvalues": serialization.complex_to_json(es.eigenvalues),
        "right_vectors": serialization.complex_to_json(es.right_vectors),
        "left_vectors": serialization.complex_to_json(es.left_vectors),
        "near_defective": es.near_defective,
    }
    if math.isfinite(es.min_gap):
        report["min_gap"] = es.min_gap
    return report


def _reduced_report(rm: ReducedModel) -> ReducedModelReport:
    report: ReducedModelReport = {
        "matrix": serialization.complex_to_json(rm.matrix),
        "omega_bar_ghz": rm.omega_bar,
        "h12_abs_mhz": rm.h12_abs_mhz,
        "h21_abs_mhz": rm.h21_abs_mhz,
        "r": rm.r,
    }
    if rm.degenerate:
        report["degenerate"] = True
    return report


# Subcommands


def cmd_sweep_internal(run: RunConfig) -> None:
    """Eigenfrequencies of the two-mode circulator Hamiltonian over the field grid."""
    params = run.model_params
    rows = []
    for field_mt in run.field_grid():
        lower, upper = np.linalg.eigvalsh(model.build_two_mode(params, float(field_mt)))
        rows.append([field_mt, lower, upper, 1000.0 * (upper - lower)])
    if _wants_csv(run):
        _write_table(
            run,
            "internal_modes.csv",
            ["field_mt", "omega_lower_ghz", "omega_upper_ghz", "splitting_mhz"],
            rows,
        )
    if _wants_json(run):
        _write_report(
            run,
            "internal_modes.json",
            {"fields_mt": [r[0] for r in rows], "omega_ghz": [[r[1], r[2]] for r in rows]},
        )


def _hybrid_point(
    params: ModelParams,
    field_mt: float,
    omega: FloatArray,
    omega_bar: float | None,
    self_consistent: bool,
) -> dict[str, Any]:
    h4 = model.build_four_mode(params, field_mt)
    ports = scattering.hybrid_ports(params)
    s31 = scattering.s_matrix(h4, ports, omega)[..., 2, 0]
    es = nonhermitian.eig_biorthogonal(h4)
    labels = nonhermitian.label_modes(es)
    try:
        components = scattering.lorentzian_decomposition(h4, ports, 2, 0).components
    except NearDefectiveError as e:
        logger.warning(f"B = {field_mt!r} mT: {e}")
        components = None

    modes = []
    for label in MODE_LABELS:
        n = labels[label]
        try:
            ratio = nonhermitian.amplitude_ratio_of_system(es, n)
        except DivisionByNegligibleError:
            ratio = math.nan
        try:
            r1 = nonhermitian.r_ratio(es, nonhermitian.CAVITY_1, n)
        except DivisionByNegligibleError:
            r1 = math.nan
        amplitude = components[n].amplitude if components else math.nan
        phase = components[n].phase if components else math.nan
        modes.append(
            [
                field_mt,
                label,
                es.frequencies[n],
                es.linewidths[n],
                amplitude,
                phase,
                ratio,
                r1,
                es.near_defective,
            ]
        )

    reduced = nonhermitian.adiabatic_eliminate(h4, omega_bar, self_consistent=self_consistent)
    checks = nonhermitian.r_limit_check(reduced)
    reduced_row = [
        field_mt,
        reduced.omega_bar,
        reduced.h12_abs_mhz,
        reduced.h21_abs_mhz,
        reduced.r,
        *(c.transform_ratio for c in checks),
        *(c.limit for c in checks),
        *(c.in_limit for c in checks),
    ]
    return {
        "s31": s31,
        "modes": modes,
        "reduced": reduced_row,
        "json": {
            "field_mt": field_mt,
            "hamiltonian": serialization.complex_to_json(h4),
            "eigensystem": _eigen_report(es),
            "labels": dict(labels),
            "reduced": _reduced_report(reduced),
        },
    }


def cmd_sweep_hybrid(run: RunConfig) -> None:
    """|S31| map, labelled eigenmodes and the reduced two-cavity model over B."""
    params = run.model_params
    omega = run.frequency_grid()
    omega_bar_value = run.values["omega_bar_ghz"]
    omega_bar = None if omega_bar_value is None else run.get_float("omega_bar_ghz")
    self_consistent = bool(run.values["self_consistent"])

    points = parallel_map(
        lambda b: _hybrid_point(params, b, omega, omega_bar, self_consistent),
        [float(b) for b in run.field_grid()],
        run.threads,
    )
    logger.info(f"Hybrid sweep finished: {len(points)} fields x {omega.size} frequencies")
    if _wants_csv(run):
        s31_rows = [
            [point["json"]["field_mt"], freq, value.real, value.imag, abs(value)]
            for point in points
            for freq, value in zip(omega, point["s31"], strict=True)
        ]
        _write_table(run, "s31_map.csv", ["field_mt", "freq_ghz", "s31_re", "s31_im", "s31_abs"], s31_rows)
        _write_table(
            run,
            "eigen.csv",
            [
                "field_mt",
                "mode",
                "freq_ghz",
                "kappa_mhz",
                "amplitude_mhz",
                "phase_rad",
                "amplitude_ratio",
                "r_ratio_cavity1",
                "near_defective",
            ],
            [row for point in points for row in point["modes"]],
        )
        _write_table(
            run,
            "reduced.csv",
            [
                "field_mt",
                "omega_bar_ghz",
                "h12_abs_mhz",
                "h21_abs_mhz",
                "r",
                "transform_ratio_a",
                "transform_ratio_b",
                "limit_a",
                "limit_b",
                "in_limit_a",
                "in_limit_b",
            ],
            [point["reduced"] for point in points],
        )
    if _wants_json(run):
        _write_report(run, "hamiltonians.json", {"points": [point["json"] for point in points]})


def cmd_circulator(run: RunConfig) -> None:
    """Three-port isolation map over the mode splitting and the optimized working point."""
    center = run.get_float("center_ghz")
    kappa_c = run.get_float("kappa_c_mhz")
    kappa_i = run.get_float("kappa_i_mhz")
    omega = run.frequency_grid()
    deltas = np.linspace(
        run.get_float("delta_start_mhz"), run.get_float("delta_stop_mhz"), run.get_int("delta_count")
    )
    if deltas.size == 0:
        raise ConfigError("Splitting grid is empty", key="delta_count")

    def _row_block(delta: float) -> list[list[float]]:
        s = scattering.three_port_circulator(center, delta, kappa_c, kappa_i, omega)
        isolation = scattering.isolation_db(s[..., 1, 0], s[..., 0, 1])
        return [
            [delta, freq, iso, abs(s21), abs(s12), abs(s31)]
            for freq, iso, s21, s12, s31 in zip(
                omega, isolation, s[..., 1, 0], s[..., 0, 1], s[..., 2, 0], strict=True
            )
        ]

    blocks = parallel_map(_row_block, [float(d) for d in deltas], run.threads)
    point = scattering.circulator_working_point(
        center, kappa_c, kappa_i, omega, run.get_float("isolation_threshold_db")
    )
    logger.info(f"Working point: delta = {point.delta:.3f} MHz, bandwidth = {point.bandwidth:.1f} MHz")
    if _wants_csv(run):
        _write_table(
            run,
            "isolation_map.csv",
            ["delta_mhz", "freq_ghz", "isolation_db", "s21_abs", "s12_abs", "s31_abs"],
            [row for block in blocks for row in block],
        )
    if _wants_json(run):
        _write_report(
            run,
            "working_point.json",
            {
                "center_ghz": center,
                "kappa_c_mhz": kappa_c,
                "kappa_i_mhz": kappa_i,
                "delta_mhz": point.delta,
                "analytic_delta_mhz": point.analytic_delta,
                "center_isolation_db": point.center_isolation_db,
                "bandwidth_mhz": point.bandwidth,
                "threshold_db": run.get_float("isolation_threshold_db"),
                "insertion_loss": point.insertion_loss.loss,
                "insertion_loss_bound": point.insertion_loss.bound,
            },
        )


def cmd_fit(run: RunConfig) -> None:
    """Extract Lorentzians from measured traces and fit the model parameters."""
    data_path: Path = run.extras["data"]
    traces = serialization.read_traces_csv(data_path)
    tables = fitting.sweep_extract(
        traces,
        mode=cast("FitMode", run.get_str("fit_mode")),
        background=cast("BackgroundModel", run.get_str("fit_background")),
        starts=run.get_int("fit_starts"),
        seed=run.seed,
        threads=run.threads,
    )
    free = [parameter_name(name) for name in run.extras["free"]]
    fixed = {parameter_name(name): value for name, value in run.extras["fixed"].items()}
    target = run.get_str("fit_target")
    starts = run.get_int("global_starts")
    if target == "tables":
        result = fitting.fit_global_params(
            tables, free, fixed, base=run.model_params, starts=starts, seed=run.seed
        )
    else:
        result = fitting.fit_global_traces(
            traces, free, fixed, base=run.model_params, starts=starts, seed=run.seed
        )
    if _wants_csv(run):
        rows = []
        for i, field_mt in enumerate(tables.fields):
            for column, label in enumerate(("a", "b")):
                rows.append(
                    [
                        field_mt,
                        label,
                        tables.frequency[i, column],
                        tables.kappa[i, column],
                        tables.amplitude[i, column],
                        tables.phase[i, column],
                        tables.frequency_stderr[i, column],
                        tables.kappa_stderr[i, column],
                        tables.amplitude_stderr[i, column],
                        tables.failed[i],
                    ]
                )
        _write_table(
            run,
            "extracted.csv",
            [
                "field_mt",
                "mode",
                "freq_ghz",
                "kappa_mhz",
                "amplitude_mhz",
                "phase_rad",
                "freq_stderr_ghz",
                "kappa_stderr_mhz",
                "amplitude_stderr_mhz",
                "failed",
            ],
            rows,
        )
    if _wants_json(run):
        report: FitReport = {
            "target": target,
            "free": list(result.free),
            "fixed": fixed,
            "values": result.values,
            "cost": result.cost,
            "residual_rms": result.residual_rms,
            "nfev": result.nfev,
            "starts": result.starts,
            "unidentifiable": result.unidentifiable,
            "failed_fields_mt": [float(b) for b in tables.fields[tables.failed]],
            "params": asdict(result.params),
        }
        _write_report(run, "fit_report.json", dict(report))


def _ferrite_params(run: RunConfig) -> FerriteParams:
    return FerriteParams(
        ms=ferrite.oersted_to_ampere_per_meter(run.get_float("ms_oe")),
        gamma=run.get_float("gamma_ghz_per_t"),
        n_x=run.get_float("n_x"),
        n_y=run.get_float("n_y"),
        n_z=run.get_float("n_z"),
    )


def _flatten(tensor: PermeabilityTensor) -> list[float]:
    return [part for value in tensor.matrix.ravel() for part in (value.real, value.imag)]


def cmd_ferrite_tensor(run: RunConfig) -> None:
    """Polder, Sandy-Green, demagnetized and anisotropy-weighted tensors over frequency."""
    p = _ferrite_params(run)
    omega_m = ferrite.omega_m(p.ms, p.gamma)
    mp = run.get_float("mp_fraction") * p.ms
    delta = run.get_float("preference_delta")
    internal = run.get_float("internal_field_mt")
    builders: dict[str, Callable[[float], PermeabilityTensor]] = {
        "polder": lambda w: ferrite.polder_tensor_for_field(w, internal, p),
        "sandy_green": lambda w: ferrite.sandy_green_tensor(w, mp, p.ms, p.gamma),
        "demagnetized": lambda w: ferrite.demagnetized_tensor(w, omega_m),
        "weighted": lambda w: ferrite.anisotropic_weighted_tensor(w, omega_m, delta),
    }
    omega = run.frequency_grid()
    tensors = {name: [build(float(w)) for w in omega] for name, build in builders.items()}

    if _wants_csv(run):
        entries = [f"mu_{r}{c}_{part}" for r in "xyz" for c in "xyz" for part in ("re", "im")]
        rows = [
            [w, name, *_flatten(tensor)]
            for name, series in tensors.items()
            for w, tensor in zip(omega, series, strict=True)
        ]
        _write_table(run, "ferrite_tensors.csv", ["freq_ghz", "tensor", *entries], rows)
    if _wants_json(run):
        _write_report(
            run,
            "ferrite_tensors.json",
            {
                "ms_a_per_m": p.ms,
                "omega_m_ghz": omega_m,
                "mp_a_per_m": mp,
                "kittel_ghz": ferrite.kittel_frequency(p, internal),
                "frequencies_ghz": omega.tolist(),
                "tensors": {
                    name: [serialization.complex_to_json(t.matrix) for t in series]
                    for name, series in tensors.items()
                },
            },
        )


def cmd_anisotropy_profile(run: RunConfig) -> None:
    """Toy-model anisotropy decay over the field grid and its sech fit."""
    fields_mt = run.field_grid()
    scale = run.get_float("moment_field_scale_per_mt")
    method = cast("QuadratureMethod", run.get_str("quadrature_method"))
    toy = ToyModelParams(anisotropy=run.get_float("anisotropy_k_kt"))
    profile = anisotropy.anisotropy_profile(
        toy, fields_mt * scale, method, threads=run.threads
    )
    fit = anisotropy.fit_sech(fields_mt, profile)
    logger.info(f"Sech fit: B0 = {fit.b_0:.4f} mT, rms = {fit.rms:.2e}")
    if _wants_csv(run):
        overlay = anisotropy.sech(fields_mt / fit.b_0)
        _write_table(
            run,
            "anisotropy_profile.csv",
            ["field_mt", "profile", "sech_fit"],
            [list(row) for row in zip(fields_mt, profile, overlay, strict=True)],
        )
    if _wants_json(run):
        _write_report(
            run,
            "anisotropy_fit.json",
            {"b_0_mt": fit.b_0, "rms": fit.rms, "method": method, "points": int(fields_mt.size)},
        )


def cmd_synthesize(run: RunConfig) -> None:
    """Noisy model S31 traces in the format read by ``fit``."""
    traces = fitting.synthesize_sweep(
        run.model_params,
        run.field_grid(),
        run.frequency_grid(),
        run.get_float("noise_level"),
        run.seed,
        magnitude=run.get_str("fit_mode") == "magnitude",
        threads=run.threads,
    )
    serialization.write_traces_csv(
        run.out_dir / "traces.csv", traces, serialization.header_lines(run.hash, run.values)
    )


COMMANDS: dict[str, Callable[[RunConfig], None]] = {
    "sweep-internal": cmd_sweep_internal,
    "sweep-hybrid": cmd_sweep_hybrid,
    "circulator": cmd_circulator,
    "fit": cmd_fit,
    "ferrite-tensor": cmd_ferrite_tensor,
    "anisotropy-profile": cmd_anisotropy_profile,
    "synthesize": cmd_synthesize,
}


def _key_value(text: str) -> tuple[str, float]:
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    key, raw = text.split("=", 1)
    try:
        return key.strip(), float(raw)
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"invalid number in {text!r}") from e


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="config file path or bundled config name")
    common.add_argument("--out", type=Path, default=Path("."), help="output directory")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--format", choices=("csv", "json", "both"), default="both")
    common.add_argument(
        "--set", action="append", default=[], metavar="KEY=VALUE", help="override a config key"
    )
    common.add_argument("-v", "--verbose", action="count", default=0)

    parser = argparse.ArgumentParser(
        prog="chiral-circulator", description="Non-reciprocal cavity-circulator model toolkit"
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, func in COMMANDS.items():
        command = sub.add_parser(name, parents=[common], help=(func.__doc__ or "").split("\n")[0])
        if name == "fit":
            command.add_argument("--data", type=Path, required=True, help="trace CSV")
            command.add_argument(
                "--free", default="", help="comma-separated parameters to fit (config keys or names)"
            )
            command.add_argument(
                "--fixed", action="append", type=_key_value, default=[], metavar="KEY=VALUE"
            )
    return parser


def _run_config(args: argparse.Namespace) -> RunConfig:
    values = apply_overrides(load_config(args.config), args.set)
    out_dir: Path = args.out
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise ConfigError(f"Cannot create output directory: {e}", path=out_dir) from e
    extras: dict[str, Any] = {}
    if args.command == "fit":
        extras = {
            "data": args.data,
            "free": [name.strip() for name in args.free.split(",") if name.strip()],
            "fixed": dict(args.fixed),
        }
    output_format: OutputFormat = args.format
    return RunConfig(
        subcommand=args.command,
        values=values,
        out_dir=out_dir,
        seed=args.seed,
        threads=args.threads,
        output_format=output_format,
        source=args.config,
        extras=extras,
    )


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    level = {0: logging.WARNING, 1: logging.INFO}.get(args.verbose, logging.DEBUG)
    logging.basicConfig(
        level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s"
    )
    try:
        run = _run_config(args)
        COMMANDS[args.command](run)
    except ConfigError as e:
        logger.error(f"Configuration error: {e}")
        return EXIT_CONFIG
    except DataParseError as e:
        logger.error(f"Data error: {e}")
        return EXIT_PARSE
    except NumericalError as e:
        logger.error(f"Numerical failure: {e}")
        return EXIT_NUMERICAL
    except CirculatorError as e:
        logger.error(str(e))
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
