"""Parsing of delimited-text data files into the toolkit's trace types.

The canonical trace format is UTF-8 with LF line endings: a block of
"# key: value" metadata lines, one header row, then comma- or
tab-delimited full-precision decimal floats. Column roles are always
declared explicitly (in the metadata block or by the caller's mapping),
never guessed from headers.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Optional, Union

import numpy as np

from .dynamics import TimeTrace
from .errors import IngestError
from .observables import SpectrumTrace

TWO_PI = 2.0 * math.pi

SPECTRUM_AXIS_UNITS = {"rad/s": 1.0, "Hz": TWO_PI, "MHz": TWO_PI * 1e6, "s": None}
TIME_AXIS_UNITS = {"s": 1.0, "ms": 1e-3, "us": 1e-6, "ns": 1e-9}


@dataclass(frozen=True)
class RawTrace:
    columns: tuple
    rows: np.ndarray  # (n_rows, n_columns) float
    metadata: dict

    def column(self, name: str) -> np.ndarray:
        if name not in self.columns:
            raise IngestError(f"no column {name!r}; file has {list(self.columns)}")
        return self.rows[:, self.columns.index(name)]


class ColumnRoles(NamedTuple):
    """Explicit column-role mapping for trace files."""

    axis: str
    value: str
    kind: str  # "spectrum" | "time"
    axis_units: str
    value_units: str = ""


def _read_text(source: Union[str, Path]) -> str:
    if isinstance(source, Path):
        return source.read_text(encoding="utf-8")
    if "\n" not in source:
        try:
            is_file = Path(source).exists()
        except OSError:
            is_file = False
        if is_file:
            return Path(source).read_text(encoding="utf-8")
    return source


def read_raw(source: Union[str, Path]) -> RawTrace:
    """Parse a delimited text file: metadata block, header row, numeric rows."""
    text = _read_text(source)
    metadata: dict = {}
    header: Optional[list] = None
    rows: list = []
    delimiter = ","
    for lineno, line in enumerate(text.split("\n"), start=1):
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            body = stripped.lstrip("#").strip()
            if ":" in body:
                key, _, val = body.partition(":")
                metadata[key.strip()] = val.strip()
            continue
        if header is None:
            delimiter = "\t" if "\t" in stripped else ","
            header = [h.strip() for h in stripped.split(delimiter)]
            continue
        tokens = [tok.strip() for tok in stripped.split(delimiter)]
        if len(tokens) != len(header):
            raise IngestError(
                f"row {lineno}: expected {len(header)} fields, got {len(tokens)}: {stripped!r}"
            )
        parsed = []
        for tok in tokens:
            try:
                val = float(tok)
            except ValueError:
                raise IngestError(f"row {lineno}: {tok!r} is not a number: {stripped!r}")
            if not math.isfinite(val):
                raise IngestError(f"row {lineno}: non-finite value {tok!r}: {stripped!r}")
            parsed.append(val)
        rows.append((lineno, parsed))
    if header is None:
        raise IngestError("file has no header row")
    if not rows:
        raise IngestError("file has no data rows")
    data = np.array([r for _, r in rows], dtype=float)
    meta = dict(metadata)
    meta["_row_numbers"] = tuple(lineno for lineno, _ in rows)
    return RawTrace(columns=tuple(header), rows=data, metadata=meta)


def _check_monotone(axis: np.ndarray, row_numbers, increasing_only: bool) -> None:
    if axis.size < 2:
        return
    steps = np.diff(axis)
    if increasing_only:
        bad = np.where(steps <= 0)[0]
    else:
        direction = 1.0 if steps[0] > 0 else -1.0
        bad = np.where(steps * direction <= 0)[0]
    if bad.size:
        i = int(bad[0]) + 1
        raise IngestError(
            f"axis is not strictly monotone at row {row_numbers[i]} (value {axis[i]!r})"
        )


def parse_trace(
    source: Union[str, Path],
    mapping: Optional[ColumnRoles] = None,
) -> Union[SpectrumTrace, TimeTrace]:
    """Parse a delimited file into a SpectrumTrace or TimeTrace.

    Without an explicit ``mapping`` the file itself must declare its roles
    in the metadata block (canonical files written by write_trace do).
    """
    raw = read_raw(source)
    if mapping is None:
        needed = ("axis_name", "axis_units", "kind", "units")
        missing = [k for k in needed if k not in raw.metadata]
        if missing:
            raise IngestError(
                f"no column mapping given and file does not declare {missing}; "
                "pass an explicit ColumnRoles"
            )
        mapping = ColumnRoles(
            axis="axis",
            value="value",
            kind=raw.metadata["kind"],
            axis_units=raw.metadata["axis_units"],
            value_units=raw.metadata["units"],
        )
        axis_name = raw.metadata["axis_name"]
    else:
        axis_name = mapping.axis
    axis = raw.column(mapping.axis)
    values = raw.column(mapping.value)
    rows = raw.metadata["_row_numbers"]

    if mapping.kind == "time":
        if mapping.axis_units not in TIME_AXIS_UNITS:
            raise IngestError(
                f"time axis units must be one of {sorted(TIME_AXIS_UNITS)}, "
                f"got {mapping.axis_units!r}"
            )
        _check_monotone(axis, rows, increasing_only=True)
        return TimeTrace(times=axis * TIME_AXIS_UNITS[mapping.axis_units], values=values)
    if mapping.kind == "spectrum":
        if mapping.axis_units not in SPECTRUM_AXIS_UNITS:
            raise IngestError(
                f"spectrum axis units must be one of {sorted(SPECTRUM_AXIS_UNITS)}, "
                f"got {mapping.axis_units!r}"
            )
        _check_monotone(axis, rows, increasing_only=False)
        scale = SPECTRUM_AXIS_UNITS[mapping.axis_units]
        if scale is None:  # time-recorded scan, pre-calibration
            axis_units = "s"
        else:
            axis = axis * scale
            axis_units = "rad/s"
        meta = {k: v for k, v in raw.metadata.items() if not k.startswith("_")}
        for k in ("axis_name", "axis_units", "kind", "units"):
            meta.pop(k, None)
        return SpectrumTrace(
            axis_name=axis_name,
            axis=axis,
            values=values,
            units=mapping.value_units,
            axis_units=axis_units,
            metadata=meta,
        )
    raise IngestError(f"unknown trace kind {mapping.kind!r}; expected 'spectrum' or 'time'")


def trace_to_canonical(trace: Union[SpectrumTrace, TimeTrace]) -> str:
    """Canonical text form: sorted metadata, header, repr-precision floats."""
    lines = []
    if isinstance(trace, TimeTrace):
        core = {"axis_name": "time", "axis_units": "s", "kind": "time", "units": ""}
        axis, values = trace.times, trace.values
        extra: dict = {}
    else:
        core = {
            "axis_name": trace.axis_name,
            "axis_units": trace.axis_units,
            "kind": "spectrum",
            "units": trace.units,
        }
        axis, values = trace.axis, trace.values
        extra = {k: v for k, v in trace.metadata.items() if not k.startswith("_")}
    merged = {**{k: str(v) for k, v in extra.items()}, **core}
    for key in sorted(merged):
        lines.append(f"# {key}: {merged[key]}")
    lines.append("axis,value")
    for a, v in zip(axis, values):
        lines.append(f"{a!r},{v!r}")
    return "\n".join(lines) + "\n"


def write_trace(trace: Union[SpectrumTrace, TimeTrace], path: Union[str, Path]) -> None:
    Path(path).write_text(trace_to_canonical(trace), encoding="utf-8", newline="\n")


class SnrRecord(NamedTuple):
    probe_power_w: float
    lo_field_v_m: float
    snr_db: float


class SnrColumns(NamedTuple):
    power: str = "probe_power_w"
    field: str = "lo_field_v_m"
    snr: str = "snr_db"


def parse_snr_table(
    source: Union[str, Path],
    mapping: SnrColumns = SnrColumns(),
) -> list[SnrRecord]:
    """Parse a (probe power, LO field, SNR) table; duplicate cells last-wins."""
    raw = read_raw(source)
    powers = raw.column(mapping.power)
    fields = raw.column(mapping.field)
    snrs = raw.column(mapping.snr)
    seen: dict = {}
    for p, f, s in zip(powers, fields, snrs):
        key = (p, f)
        if key in seen:
            warnings.warn(
                f"duplicate SNR table cell at probe power {p!r} W, LO field {f!r} V/m; "
                "keeping the last entry",
                stacklevel=2,
            )
        seen[key] = SnrRecord(probe_power_w=p, lo_field_v_m=f, snr_db=s)
    return list(seen.values())
