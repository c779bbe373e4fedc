"""Strict unit parsing for CLI flags and config values.

Every quantity entered on the command line carries an explicit unit suffix
("30MHz", "20mV/m", "50uW", "-60dBm", "12us"). Parsing is strict: a missing
or wrong-dimension suffix is an error, never a silent default.
"""

from __future__ import annotations

import math
import re

_QTY_RE = re.compile(r"^\s*([+-]?[0-9]*\.?[0-9]+(?:[eE][+-]?[0-9]+)?)\s*([a-zA-Zµ/]+)\s*$")

# multipliers to the canonical unit of each dimension
FREQUENCY_HZ = {"Hz": 1.0, "kHz": 1e3, "MHz": 1e6, "GHz": 1e9}
FIELD_V_M = {"V/m": 1.0, "mV/m": 1e-3, "uV/m": 1e-6, "µV/m": 1e-6, "nV/m": 1e-9}
TIME_S = {"s": 1.0, "ms": 1e-3, "us": 1e-6, "µs": 1e-6, "ns": 1e-9}
POWER_W = {"W": 1.0, "mW": 1e-3, "uW": 1e-6, "µW": 1e-6, "nW": 1e-9}


def _parse(text: str, table: dict, dimension: str) -> float:
    m = _QTY_RE.match(text)
    if not m:
        raise ValueError(f"cannot parse {dimension} quantity {text!r}: expected '<number><unit>'")
    value, unit = m.groups()
    if unit not in table:
        raise ValueError(
            f"bad {dimension} unit {unit!r} in {text!r}: expected one of {sorted(table)}"
        )
    return float(value) * table[unit]


def parse_frequency_hz(text: str) -> float:
    return _parse(text, FREQUENCY_HZ, "frequency")


def parse_field_v_m(text: str) -> float:
    return _parse(text, FIELD_V_M, "field")


def parse_time_s(text: str) -> float:
    return _parse(text, TIME_S, "time")


def parse_power_w(text: str) -> float:
    """Optical power. Accepts watt suffixes or dBm ("-60dBm")."""
    stripped = text.strip()
    if stripped.endswith("dBm"):
        return dbm_to_watt(float(stripped[:-3]))
    return _parse(text, POWER_W, "power")


def parse_power_dbm(text: str) -> float:
    stripped = text.strip()
    if not stripped.endswith("dBm"):
        raise ValueError(f"expected a dBm quantity, got {text!r}")
    return float(stripped[:-3])


def dbm_to_mw(p_dbm: float) -> float:
    return 10.0 ** (p_dbm / 10.0)


def mw_to_dbm(p_mw: float) -> float:
    if p_mw <= 0:
        raise ValueError("power must be positive to express in dBm")
    return 10.0 * math.log10(p_mw)


def dbm_to_watt(p_dbm: float) -> float:
    return dbm_to_mw(p_dbm) * 1e-3
