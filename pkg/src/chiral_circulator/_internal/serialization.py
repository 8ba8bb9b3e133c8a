"""CSV and JSON writers, and the trace CSV reader."""

import csv
import json
import logging
import math
from collections.abc import Iterable, Mapping, Sequence
from pathlib import Path
from typing import Any, Literal, cast

import numpy as np
import numpy.typing as npt

from .._errors import DataParseError, DomainError
from .._version import __version__
from ..types import SpectrumTrace

logger = logging.getLogger(__name__)

TraceFormat = Literal["complex", "mag_db"]

_TRACE_COLUMNS: dict[TraceFormat, list[str]] = {
    "complex": ["field_mt", "freq_ghz", "re", "im"],
    "mag_db": ["field_mt", "freq_ghz", "mag_db"],
}


def format_number(value: Any) -> str:
    """Shortest round-tripping text for a number; strings pass through."""
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def header_lines(config_hash: str, values: Mapping[str, Any] | None = None) -> list[str]:
    """Comment lines opening every CSV: tool version, config hash and values."""
    lines = [f"chiral-circulator {__version__}", f"config_hash = {config_hash}"]
    items = dict(values or {})
    for key in sorted(items):
        lines.append(f"{key} = {items[key]!r}")
    return lines


def write_csv(
    path: Path,
    columns: Sequence[str],
    rows: Iterable[Sequence[Any]],
    comments: Sequence[str] = (),
) -> None:
    with path.open("w", newline="", encoding="utf-8") as f:
        for comment in comments:
            f.write(f"# {comment}\n")
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_number(v) for v in row])
    logger.debug(f"Wrote {path}")


def complex_to_json(values: npt.ArrayLike) -> Any:
    """Nested lists with every complex entry as ``[re, im]``."""
    array = np.asarray(values, dtype=np.complex128)
    stacked = np.stack([array.real, array.imag], axis=-1)
    return stacked.tolist()


def complex_from_json(data: Any) -> npt.NDArray[np.complex128]:
    array = np.asarray(data, dtype=np.float64)
    if array.shape[-1] != 2:
        raise DomainError("Complex JSON entries must be [re, im] pairs", shape=array.shape)
    return np.asarray(array[..., 0] + 1j * array[..., 1], dtype=np.complex128)


def write_json(path: Path, payload: Any) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    logger.debug(f"Wrote {path}")


def write_traces_csv(
    path: Path,
    traces: Sequence[SpectrumTrace],
    comments: Sequence[str] = (),
) -> None:
    """Write traces as one long table; magnitude-only traces are stored in dB."""
    trace_format: TraceFormat = "mag_db" if traces and traces[0].magnitude_only else "complex"
    rows: list[list[float]] = []
    for trace in traces:
        for freq, value in zip(trace.frequencies, trace.values, strict=True):
            if trace_format == "mag_db":
                rows.append([trace.field_mt, freq, 20.0 * math.log10(max(abs(value), 1e-300))])
            else:
                rows.append([trace.field_mt, freq, value.real, value.imag])
    write_csv(
        path, _TRACE_COLUMNS[trace_format], rows, [*comments, f"format = {trace_format}"]
    )


def read_traces_csv(path: Path) -> list[SpectrumTrace]:
    """Read traces written by ``write_traces_csv`` or prepared by hand.

    The table format is declared by a ``# format = complex`` or
    ``# format = mag_db`` comment; without one, the column header decides.

    Raises:
        DataParseError: With the offending line number.
    """
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise DataParseError(f"Cannot read trace file: {e}", path) from e

    declared: TraceFormat | None = None
    columns: list[str] | None = None
    groups: dict[float, list[tuple[float, complex]]] = {}
    for line_number, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            key, _, setting = stripped[1:].partition("=")
            if key.strip() == "format":
                fmt = setting.strip()
                if fmt not in _TRACE_COLUMNS:
                    raise DataParseError(f"Unknown trace format {fmt!r}", path, line_number)
                declared = cast("TraceFormat", fmt)
            continue
        cells = next(csv.reader([stripped]))
        if columns is None:
            columns = [c.strip() for c in cells]
            if declared is None:
                matches = [f for f, cols in _TRACE_COLUMNS.items() if cols == columns]
                if not matches:
                    raise DataParseError(f"Unrecognized columns {columns}", path, line_number)
                declared = matches[0]
            elif columns != _TRACE_COLUMNS[declared]:
                raise DataParseError(
                    f"Columns {columns} do not match format {declared!r}", path, line_number
                )
            continue
        if len(cells) != len(columns):
            raise DataParseError(
                f"Expected {len(columns)} fields, found {len(cells)}", path, line_number
            )
        try:
            numbers = [float(c) for c in cells]
        except ValueError as e:
            raise DataParseError(f"Non-numeric field: {e}", path, line_number) from e
        if not all(math.isfinite(n) for n in numbers):
            raise DataParseError("Non-finite value", path, line_number)
        if declared == "mag_db":
            point = complex(10.0 ** (numbers[2] / 20.0))
        else:
            point = complex(numbers[2], numbers[3])
        groups.setdefault(numbers[0], []).append((numbers[1], point))

    if not groups:
        raise DataParseError("No trace data", path)
    traces = []
    for field_mt in sorted(groups):
        points = groups[field_mt]
        try:
            traces.append(
                SpectrumTrace(
                    frequencies=np.array([p[0] for p in points], dtype=np.float64),
                    values=np.array([p[1] for p in points], dtype=np.complex128),
                    field_mt=field_mt,
                    magnitude_only=declared == "mag_db",
                )
            )
        except DomainError as e:
            raise DataParseError(f"Invalid trace at B = {field_mt!r} mT: {e}", path) from e
    logger.info(f"Read {len(traces)} traces from {path}")
    return traces
