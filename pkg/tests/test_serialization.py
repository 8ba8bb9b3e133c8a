"""Tests for CSV/JSON output and the trace reader."""

from __future__ import annotations

import json

import numpy as np
import pytest

from chiral_circulator import DataParseError, DomainError, SpectrumTrace, __version__
from chiral_circulator._internal.serialization import (
    complex_from_json,
    complex_to_json,
    format_number,
    header_lines,
    read_traces_csv,
    write_csv,
    write_json,
    write_traces_csv,
)

GRID = np.linspace(10.79, 10.83, 40)


def _trace(field_mt: float, magnitude: bool = False) -> SpectrumTrace:
    values = (1.0 + field_mt) / (0.5 - 1j * 1000.0 * (GRID - 10.81))
    if magnitude:
        values = np.abs(values).astype(complex)
    return SpectrumTrace(frequencies=GRID, values=values, field_mt=field_mt, magnitude_only=magnitude)


def test_format_number():
    assert format_number(0.1) == "0.1"
    assert format_number(np.float64(1e-300)) == "1e-300"
    assert format_number(3) == "3"
    assert format_number(np.int64(7)) == "7"
    assert format_number(True) == "1"
    assert format_number(np.bool_(False)) == "0"
    assert format_number("r_squared") == "r_squared"
    assert format_number(float("nan")) == "nan"


def test_header_lines():
    lines = header_lines("abc123", {"b": 2.0, "a": "x"})
    assert lines == [f"chiral-circulator {__version__}", "config_hash = abc123", "a = 'x'", "b = 2.0"]


def test_write_csv(tmp_path):
    path = tmp_path / "table.csv"
    write_csv(path, ["x", "label", "flag"], [[0.5, "a", True], [1, "b", False]], ["first", "second"])
    assert path.read_text().splitlines() == [
        "# first",
        "# second",
        "x,label,flag",
        "0.5,a,1",
        "1,b,0",
    ]


def test_complex_json():
    matrix = np.array([[1 + 2j, 0], [-0.5j, 3]])
    encoded = complex_to_json(matrix)
    assert encoded[0][0] == [1.0, 2.0]
    assert encoded[1][0] == [0.0, -0.5]
    assert np.array_equal(complex_from_json(encoded), matrix)
    with pytest.raises(DomainError):
        complex_from_json([[1.0, 2.0, 3.0]])


def test_write_json_is_sorted(tmp_path):
    path = tmp_path / "report.json"
    write_json(path, {"b": 1, "a": [1.5, 2]})
    text = path.read_text()
    assert text.index('"a"') < text.index('"b"')
    assert json.loads(text) == {"a": [1.5, 2], "b": 1}


def test_complex_traces_round_trip_exactly(tmp_path):
    path = tmp_path / "traces.csv"
    traces = [_trace(5.0), _trace(-5.0)]
    write_traces_csv(path, traces, ["chiral-circulator test"])
    loaded = read_traces_csv(path)
    assert [t.field_mt for t in loaded] == [-5.0, 5.0]
    assert np.array_equal(loaded[1].frequencies, GRID)
    assert np.array_equal(loaded[1].values, traces[0].values)
    assert not loaded[0].magnitude_only


def test_magnitude_traces_are_stored_in_db(tmp_path):
    path = tmp_path / "traces.csv"
    write_traces_csv(path, [_trace(2.0, magnitude=True)])
    assert "# format = mag_db" in path.read_text()
    (loaded,) = read_traces_csv(path)
    assert loaded.magnitude_only
    assert np.allclose(loaded.values.real, np.abs(_trace(2.0).values), rtol=1e-12)


def test_columns_decide_format_without_comment(tmp_path):
    path = tmp_path / "plain.csv"
    rows = "\n".join(f"1.0,{float(f)!r},0.5,-0.5" for f in GRID)
    path.write_text(f"field_mt,freq_ghz,re,im\n{rows}\n")
    (loaded,) = read_traces_csv(path)
    assert np.allclose(loaded.values, 0.5 - 0.5j)


@pytest.mark.parametrize(
    ("content", "line_number"),
    [
        ("# format = complex\nfield_mt,freq_ghz,re,im\n1.0,10.8,0.1\n", 3),
        ("field_mt,freq_ghz,re,im\n1.0,10.8,abc,0.1\n", 2),
        ("field_mt,freq_ghz,re,im\n1.0,10.8,inf,0.1\n", 2),
        ("# format = polar\n", 1),
        ("field,frequency,value\n", 1),
        ("# format = mag_db\nfield_mt,freq_ghz,re,im\n", 2),
    ],
)
def test_parse_errors_report_line(tmp_path, content, line_number):
    path = tmp_path / "bad.csv"
    path.write_text(content)
    with pytest.raises(DataParseError) as exc_info:
        read_traces_csv(path)
    assert exc_info.value.line_number == line_number
    assert f"bad.csv:{line_number}" in str(exc_info.value)


def test_unreadable_or_short_trace_files(tmp_path):
    with pytest.raises(DataParseError):
        read_traces_csv(tmp_path / "missing.csv")
    empty = tmp_path / "empty.csv"
    empty.write_text("field_mt,freq_ghz,re,im\n")
    with pytest.raises(DataParseError):
        read_traces_csv(empty)
    short = tmp_path / "short.csv"
    short.write_text("field_mt,freq_ghz,re,im\n" + "".join(f"0,{10 + k * 0.01!r},1,0\n" for k in range(5)))
    with pytest.raises(DataParseError):
        read_traces_csv(short)
