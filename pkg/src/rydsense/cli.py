"""Command-line front end: compose the toolkit into reproducible runs.

Every run writes its data products plus a RunManifest JSON capturing the
resolved parameters, the scheme hash, and the toolkit version. Outputs are
deterministic: rerunning with the same manifest (any --threads value)
produces byte-identical files.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
from dataclasses import asdict, dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .calibrate import (
    CalibrationFit,
    HeterodyneSetup,
    apply_scan_calibration,
    calibrate_scan_axis,
    extract_at_splitting,
    fit_field_calibration,
    sensitivity_from_snr,
    sensitivity_map,
    simulate_heterodyne,
    simulate_heterodyne_two_tone,
)
from .doppler import make_grid
from .dynamics import EdgeMarker, bandwidth_from_tau, decay_decomposition, extract_rise_fall, simulate_square_wave
from .errors import RydsenseError
from .ingest import ColumnRoles, SnrColumns, parse_snr_table, parse_trace, write_trace
from .lindblad import IncoherentTransfer
from .observables import SpectrumTrace, apply_parameter, response_map, sweep
from .scheme import EA0, LadderScheme, load_scheme, scheme_to_yaml
from .units import (
    parse_field_v_m,
    parse_frequency_hz,
    parse_power_dbm,
    parse_power_w,
    parse_time_s,
)

TWO_PI = 2.0 * math.pi
SCHEME_ENV_VAR = "RYDSENSE_SCHEME"

DEFAULT_NOISE_FLOOR = {
    # flat spectral densities in (channel units)^2 / Hz: photodetector-limited
    # transmission readout, dark-count-limited PMT fluorescence readout
    "transmission": 1e-13,
    "fluorescence": 4e4,
}


@dataclass
class RunManifest:
    subcommand: str
    parameters: dict
    scheme_sha256: str
    toolkit_version: str
    outputs: list

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=2, allow_nan=False) + "\n"


def _json_text(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n"


def _nan_to_none(values):
    return [None if (isinstance(v, float) and not math.isfinite(v)) else v for v in values]


def default_scheme_path() -> str:
    env = os.environ.get(SCHEME_ENV_VAR)
    if env:
        return env
    return str(resources.files("rydsense").joinpath("data/cs_three_photon.yaml"))


def _load_scheme_arg(path: str) -> tuple[LadderScheme, str]:
    text = Path(path).read_text(encoding="utf-8")
    scheme = load_scheme(text)
    digest = hashlib.sha256(scheme_to_yaml(scheme).encode("utf-8")).hexdigest()
    return scheme, digest


def _parse_value_for(parameter: str, text: str) -> float:
    if parameter == "rf-field":
        return parse_field_v_m(text)
    if parameter == "probe-power":
        return parse_power_w(text)
    return TWO_PI * parse_frequency_hz(text)


def _parse_sweep_spec(spec: str):
    parts = spec.split(":")
    if len(parts) != 4:
        raise RydsenseError(
            f"bad sweep spec {spec!r}: expected NAME:START:STOP:NPOINTS "
            "(e.g. coupling-detuning:-30MHz:30MHz:601)"
        )
    name, start_s, stop_s, n_s = parts
    start = _parse_value_for(name, start_s)
    stop = _parse_value_for(name, stop_s)
    n = int(n_s)
    if n < 1:
        raise RydsenseError(f"bad sweep spec {spec!r}: need at least 1 point")
    return name, np.linspace(start, stop, n)


def _parse_grid_spec(spec: str, parse_one, what: str) -> np.ndarray:
    parts = spec.split(":")
    if len(parts) not in (3, 4):
        raise RydsenseError(f"bad {what} grid {spec!r}: expected START:STOP:N[:log]")
    start = parse_one(parts[0])
    stop = parse_one(parts[1])
    n = int(parts[2])
    if len(parts) == 4:
        if parts[3] != "log":
            raise RydsenseError(f"bad {what} grid {spec!r}: fourth field must be 'log'")
        if start <= 0 or stop <= 0:
            raise RydsenseError(f"log-spaced {what} grid needs positive endpoints")
        return np.geomspace(start, stop, n)
    return np.linspace(start, stop, n)


def _parse_transfers(entries, scheme: LadderScheme):
    transfers = []
    for entry in entries or ():
        parts = entry.split(":")
        if len(parts) != 3:
            raise RydsenseError(
                f"bad incoherent transfer {entry!r}: expected FROM:TO:RATE (rate with "
                "frequency suffix, e.g. 35P3/2:34D5/2:10kHz)"
            )
        src = scheme.level(parts[0]).index
        tgt = scheme.level(parts[1]).index
        rate = TWO_PI * parse_frequency_hz(parts[2])
        transfers.append(IncoherentTransfer(source=src, target=tgt, rate=rate))
    return tuple(transfers)


def _apply_operating_point(scheme: LadderScheme, args) -> tuple[LadderScheme, dict]:
    applied = {}
    if getattr(args, "rf_field", None) is not None:
        value = parse_field_v_m(args.rf_field)
        scheme = apply_parameter(scheme, "rf-field", value)
        applied["rf_field_v_m"] = value
    if getattr(args, "probe_power", None) is not None:
        value = parse_power_w(args.probe_power)
        scheme = apply_parameter(scheme, "probe-power", value)
        applied["probe_power_w"] = value
    return scheme, applied


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8", newline="\n")


def _emit(args, subcommand: str, parameters: dict, scheme_hash: str, files: dict) -> list:
    """Write data products and their manifest; returns the output paths."""
    outdir = Path(args.output)
    prefix = args.prefix or subcommand
    written = []
    for suffix, text in files.items():
        path = outdir / f"{prefix}{suffix}"
        _write(path, text)
        written.append(str(path))
    manifest = RunManifest(
        subcommand=subcommand,
        parameters=parameters,
        scheme_sha256=scheme_hash,
        toolkit_version=__version__,
        outputs=sorted(written),
    )
    manifest_path = outdir / f"{prefix}.manifest.json"
    _write(manifest_path, manifest.to_json())
    written.append(str(manifest_path))
    return written


def _map_csv(row_name: str, col_name: str, rows, cols, values, header_meta: dict) -> str:
    lines = [f"# {k}: {v}" for k, v in sorted(header_meta.items())]
    lines.append(row_name + "," + ",".join(repr(c) for c in cols))
    for r, row in zip(rows, values):
        lines.append(repr(float(r)) + "," + ",".join("" if not math.isfinite(v) else repr(float(v)) for v in row))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# subcommand implementations

def _cmd_spectrum(args) -> int:
    scheme, digest = _load_scheme_arg(args.scheme)
    scheme, applied = _apply_operating_point(scheme, args)
    transfers = _parse_transfers(args.incoherent_transfer, scheme)
    name, grid = _parse_sweep_spec(args.sweep)
    doppler = make_grid(scheme.temperature, scheme.atom_mass, args.doppler_points, args.doppler_span)
    trace = sweep(scheme, name, grid, args.channel, doppler, extra=transfers, threads=args.threads)
    from .ingest import trace_to_canonical

    params = {
        "sweep": args.sweep,
        "channel": args.channel,
        "doppler_points": args.doppler_points,
        "doppler_span": args.doppler_span,
        "incoherent_transfers": sorted(args.incoherent_transfer or []),
        **applied,
    }
    summary = {
        "axis_name": trace.axis_name,
        "axis_units": trace.axis_units,
        "units": trace.units,
        "n_points": int(trace.axis.size),
        "value_min": float(trace.values.min()),
        "value_max": float(trace.values.max()),
        "parameters": params,
    }
    _emit(args, "spectrum", params, digest, {
        ".csv": trace_to_canonical(trace),
        ".json": _json_text(summary),
    })
    return 0


def _cmd_map(args) -> int:
    scheme, digest = _load_scheme_arg(args.scheme)
    transfers = _parse_transfers(args.incoherent_transfer, scheme)
    powers = _parse_grid_spec(args.probe_powers, parse_power_w, "probe-power")
    fields = _parse_grid_spec(args.rf_fields, parse_field_v_m, "rf-field")
    doppler = make_grid(scheme.temperature, scheme.atom_mass, args.doppler_points, args.doppler_span)
    result = response_map(
        scheme, powers, fields, args.channel, doppler, extra=transfers, threads=args.threads
    )
    params = {
        "probe_powers": args.probe_powers,
        "rf_fields": args.rf_fields,
        "channel": args.channel,
        "doppler_points": args.doppler_points,
        "doppler_span": args.doppler_span,
        "incoherent_transfers": sorted(args.incoherent_transfer or []),
    }
    csv_text = _map_csv(
        "probe_power_w", "rf_field_v_m", powers, fields, result.values,
        {"kind": "response-map", "channel": args.channel, "units": result.units},
    )
    _emit(args, "map", params, digest, {
        ".csv": csv_text,
        ".json": _json_text({"channel": args.channel, "units": result.units, "parameters": params}),
    })
    return 0


def _cmd_calibrate(args) -> int:
    scheme, digest = _load_scheme_arg(args.scheme)
    if len(args.powers) != len(args.traces):
        raise RydsenseError(
            f"got {len(args.traces)} traces but {len(args.powers)} powers; give one per trace"
        )
    dipole = args.dipole_ea0 * EA0 if args.dipole_ea0 else scheme.drive("rf").dipole_moment
    if dipole is None:
        raise RydsenseError("no RF dipole moment: give --dipole-ea0 or configure the rf drive")
    points = []
    splittings = []
    for trace_path, power_s in zip(args.traces, args.powers):
        trace = parse_trace(Path(trace_path))
        if not isinstance(trace, SpectrumTrace):
            raise RydsenseError(f"{trace_path}: expected a spectrum trace, got a time trace")
        if trace.axis_units == "s":
            if args.sideband is None:
                raise RydsenseError(
                    f"{trace_path} has a time axis; give --sideband to calibrate the scan"
                )
            scale = calibrate_scan_axis(trace, parse_frequency_hz(args.sideband))
            trace = apply_scan_calibration(trace, scale)
        result = extract_at_splitting(trace)
        if result.unsplit:
            raise RydsenseError(f"{trace_path}: trace is unsplit; not usable for AT calibration")
        points.append((parse_power_dbm(power_s), result.splitting_hz))
        splittings.append({"trace": trace_path, "power_dbm": points[-1][0],
                           "splitting_hz": result.splitting_hz})
    fit = fit_field_calibration(points, dipole)
    params = {
        "traces": list(args.traces),
        "powers": list(args.powers),
        "dipole_ea0": dipole / EA0,
        "sideband": args.sideband,
    }
    payload = {
        "c_cal_v_m_per_sqrt_mw": fit.c_cal,
        "slope_hz_per_sqrt_mw": fit.slope,
        "residual_rms_hz": fit.residual_rms,
        "points": [{"power_dbm": p, "splitting_hz": s} for p, s in fit.points],
        "splittings": splittings,
    }
    _emit(args, "calibrate", params, digest, {".json": _json_text(payload)})
    return 0


def _load_fit(path: str) -> CalibrationFit:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    return CalibrationFit(
        c_cal=doc["c_cal_v_m_per_sqrt_mw"],
        slope=doc["slope_hz_per_sqrt_mw"],
        residual_rms=doc["residual_rms_hz"],
        points=tuple((p["power_dbm"], p["splitting_hz"]) for p in doc["points"]),
    )


def _heterodyne_setup(args) -> HeterodyneSetup:
    noise = args.noise_floor if args.noise_floor is not None else DEFAULT_NOISE_FLOOR[args.channel]
    return HeterodyneSetup(
        lo_field=parse_field_v_m(args.lo_field),
        sig_field=parse_field_v_m(args.sig_field),
        beat_frequency=parse_frequency_hz(args.beat),
        rbw=parse_frequency_hz(args.rbw),
        noise_floor=noise,
    )


def _cmd_heterodyne(args) -> int:
    scheme, digest = _load_scheme_arg(args.scheme)
    scheme, applied = _apply_operating_point(scheme, args)
    setup = _heterodyne_setup(args)
    doppler = make_grid(scheme.temperature, scheme.atom_mass, args.doppler_points, args.doppler_span)
    result = simulate_heterodyne(scheme, setup, args.channel, doppler)
    payload = {
        "beat_amplitude": result.beat_amplitude,
        "snr_db": None if result.snr_db == -math.inf else result.snr_db,
        "slope_per_v_m": result.slope,
        "lo_value": result.lo_value,
        "zero_slope": result.zero_slope,
    }
    if args.two_tone:
        payload["two_tone_amplitude"] = simulate_heterodyne_two_tone(
            scheme, setup, args.channel, doppler
        )
    if args.calibration:
        fit = _load_fit(args.calibration)
        p_sig_dbm = fit.dbm_for_field(setup.sig_field)
        payload["sensitivity_v_m_sqrt_hz"] = sensitivity_from_snr(
            p_sig_dbm, result.snr_db, setup.rbw, fit
        )
    params = {
        "channel": args.channel,
        "lo_field": args.lo_field,
        "sig_field": args.sig_field,
        "beat": args.beat,
        "rbw": args.rbw,
        "noise_floor": setup.noise_floor,
        "two_tone": bool(args.two_tone),
        "calibration": args.calibration,
        "doppler_points": args.doppler_points,
        "doppler_span": args.doppler_span,
        **applied,
    }
    _emit(args, "heterodyne", params, digest, {".json": _json_text(payload)})
    return 0


def _cmd_sensitivity_map(args) -> int:
    scheme, digest = _load_scheme_arg(args.scheme)
    setup = _heterodyne_setup(args)
    fit = _load_fit(args.calibration)
    powers = _parse_grid_spec(args.probe_powers, parse_power_w, "probe-power")
    fields = _parse_grid_spec(args.lo_fields, parse_field_v_m, "lo-field")
    doppler = make_grid(scheme.temperature, scheme.atom_mass, args.doppler_points, args.doppler_span)
    result = sensitivity_map(scheme, powers, fields, args.channel, setup, fit, doppler)
    params = {
        "probe_powers": args.probe_powers,
        "lo_fields": args.lo_fields,
        "channel": args.channel,
        "sig_field": args.sig_field,
        "beat": args.beat,
        "rbw": args.rbw,
        "noise_floor": setup.noise_floor,
        "calibration": args.calibration,
        "doppler_points": args.doppler_points,
        "doppler_span": args.doppler_span,
    }
    csv_text = _map_csv(
        "probe_power_w", "lo_field_v_m", powers, fields, result.sensitivity,
        {"kind": "sensitivity-map", "channel": args.channel, "units": "V/m/sqrt(Hz)"},
    )
    payload = {
        "channel": args.channel,
        "minimum_v_m_sqrt_hz": result.minimum(),
        "failures": [{"i": i, "j": j, "message": m} for i, j, m in result.failures],
        "parameters": params,
    }
    _emit(args, "sensitivity-map", params, digest, {
        ".csv": csv_text,
        ".json": _json_text(payload),
    })
    return 0


def _parse_edges(text: str):
    edges = []
    for part in text.split(","):
        t_s, _, kind = part.partition(":")
        if kind not in ("on", "off"):
            raise RydsenseError(f"bad edge {part!r}: expected TIME:on or TIME:off")
        edges.append(EdgeMarker(time=parse_time_s(t_s), kind=kind))
    return edges


def _cmd_bandwidth(args) -> int:
    scheme, digest = _load_scheme_arg(args.scheme)
    params: dict = {"channel": args.channel}
    if args.ingest:
        trace = parse_trace(Path(args.ingest))
        if isinstance(trace, SpectrumTrace):
            raise RydsenseError(f"{args.ingest}: bandwidth analysis needs a time trace")
        if not args.edges:
            raise RydsenseError("--ingest needs --edges TIME:on,TIME:off,...")
        edges = _parse_edges(args.edges)
        params.update({"ingest": args.ingest, "edges": args.edges})
    else:
        scheme_op, applied = _apply_operating_point(scheme, args)
        rf_field = parse_field_v_m(args.rf_field) if args.rf_field else 0.02
        period = parse_time_s(args.period)
        doppler = make_grid(
            scheme.temperature, scheme.atom_mass, args.doppler_points, args.doppler_span
        )
        result = simulate_square_wave(
            scheme_op, args.channel, rf_field, period, args.samples, doppler,
            n_cycles_out=args.cycles,
        )
        trace, edges = result.trace, result.edges
        params.update({
            "simulate": True,
            "rf_field_v_m": rf_field,
            "period_s": period,
            "samples": args.samples,
            "cycles": args.cycles,
            "doppler_points": args.doppler_points,
            "doppler_span": args.doppler_span,
            **applied,
        })
    rf_result = extract_rise_fall(trace, edges)
    payload = {
        "tau_rise_s": rf_result.tau_rise,
        "tau_fall_s": rf_result.tau_fall,
        "rise_std_s": rf_result.rise_std,
        "fall_std_s": rf_result.fall_std,
        "bandwidth_rise_hz": bandwidth_from_tau(rf_result.tau_rise),
        "bandwidth_fall_hz": bandwidth_from_tau(rf_result.tau_fall),
        "per_edge": [{"time_s": e.time, "kind": e.kind, "tau_s": e.tau} for e in rf_result.per_edge],
    }
    if args.t_bbr and args.t_rydryd:
        budget = decay_decomposition(
            rf_result.tau_fall, parse_time_s(args.t_bbr), parse_time_s(args.t_rydryd)
        )
        payload["decay_budget"] = {
            "tau_meas_s": budget.tau_meas,
            "t_bbr_s": budget.t_bbr,
            "t_rydryd_s": budget.t_rydryd,
            "gamma_col_hz": budget.gamma_col,
            "model_inconsistent": budget.model_inconsistent,
        }
        params.update({"t_bbr": args.t_bbr, "t_rydryd": args.t_rydryd})
    from .ingest import trace_to_canonical

    _emit(args, "bandwidth", params, digest, {
        ".json": _json_text(payload),
        ".csv": trace_to_canonical(trace),
    })
    return 0


def _cmd_ingest(args) -> int:
    params = {
        "input": args.input,
        "snr": bool(args.snr),
    }
    if args.snr:
        mapping = SnrColumns(power=args.power_column, field=args.field_column, snr=args.snr_column)
        records = parse_snr_table(Path(args.input), mapping)
        payload = {
            "records": [
                {"probe_power_w": r.probe_power_w, "lo_field_v_m": r.lo_field_v_m, "snr_db": r.snr_db}
                for r in records
            ]
        }
        params.update({
            "power_column": args.power_column,
            "field_column": args.field_column,
            "snr_column": args.snr_column,
        })
        files = {".json": _json_text(payload)}
    else:
        for required in ("axis_column", "value_column", "kind", "axis_units"):
            if getattr(args, required) is None:
                raise RydsenseError(f"--{required.replace('_', '-')} is required for trace ingest")
        mapping = ColumnRoles(
            axis=args.axis_column,
            value=args.value_column,
            kind=args.kind,
            axis_units=args.axis_units,
            value_units=args.value_units or "",
        )
        trace = parse_trace(Path(args.input), mapping)
        from .ingest import trace_to_canonical

        params.update({
            "axis_column": args.axis_column,
            "value_column": args.value_column,
            "kind": args.kind,
            "axis_units": args.axis_units,
            "value_units": args.value_units,
        })
        files = {".csv": trace_to_canonical(trace)}
    _emit(args, "ingest", params, "-", files)
    return 0


# ---------------------------------------------------------------------------
# argument parsing

def _add_common(p: argparse.ArgumentParser, doppler: bool = True) -> None:
    p.add_argument("--scheme", default=default_scheme_path(),
                   help=f"scheme YAML path (default: ${SCHEME_ENV_VAR} or the packaged Cs scheme)")
    p.add_argument("--output", "-o", default=".", help="output directory")
    p.add_argument("--prefix", default=None, help="output filename prefix (default: subcommand)")
    p.add_argument("--threads", type=int, default=1, help="worker cap; results are identical for any value")
    if doppler:
        p.add_argument("--doppler-points", type=int, default=201, help="velocity grid points")
        p.add_argument("--doppler-span", type=float, default=4.0, help="velocity grid span in sigmas")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rydsense",
        description="Three-photon Rydberg electrometry: simulate spectra, calibrate fields, "
        "estimate sensitivity and bandwidth for transmission and fluorescence readout.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("spectrum", help="sweep one parameter and record a spectrum")
    _add_common(p)
    p.add_argument("--sweep", required=True, help="NAME:START:STOP:N, e.g. coupling-detuning:-30MHz:30MHz:601")
    p.add_argument("--channel", choices=("transmission", "fluorescence"), required=True)
    p.add_argument("--rf-field", default=None, help="operating RF field, e.g. 20mV/m")
    p.add_argument("--probe-power", default=None, help="operating probe power, e.g. 50uW")
    p.add_argument("--incoherent-transfer", action="append", default=[],
                   help="FROM:TO:RATE incoherent pump, repeatable (e.g. 35P3/2:34D5/2:10kHz)")
    p.set_defaults(func=_cmd_spectrum)

    p = sub.add_parser("map", help="resonant response over probe power x RF field")
    _add_common(p)
    p.add_argument("--probe-powers", required=True, help="START:STOP:N[:log], e.g. 1uW:100uW:7:log")
    p.add_argument("--rf-fields", required=True, help="START:STOP:N[:log], e.g. 0.1mV/m:1V/m:13:log")
    p.add_argument("--channel", choices=("transmission", "fluorescence"), required=True)
    p.add_argument("--incoherent-transfer", action="append", default=[])
    p.set_defaults(func=_cmd_map)

    p = sub.add_parser("calibrate", help="AT-splitting field calibration from trace files")
    _add_common(p, doppler=False)
    p.add_argument("--traces", nargs="+", required=True, help="spectrum trace files (canonical CSV)")
    p.add_argument("--powers", nargs="+", required=True, help="applied RF powers, one dBm value per trace")
    p.add_argument("--dipole-ea0", type=float, default=None,
                   help="RF transition dipole in e*a0 (default: the scheme's rf drive)")
    p.add_argument("--sideband", default=None,
                   help="modulation sideband frequency for time-axis traces, e.g. 5MHz")
    p.set_defaults(func=_cmd_calibrate)

    p = sub.add_parser("heterodyne", help="simulated beat-note amplitude and SNR")
    _add_common(p)
    p.add_argument("--channel", choices=("transmission", "fluorescence"), required=True)
    p.add_argument("--lo-field", required=True, help="LO RF field, e.g. 40mV/m")
    p.add_argument("--sig-field", required=True, help="signal RF field, e.g. 70uV/m")
    p.add_argument("--beat", default="1kHz", help="beat frequency")
    p.add_argument("--rbw", default="10Hz", help="resolution bandwidth")
    p.add_argument("--noise-floor", type=float, default=None,
                   help="flat noise density in (channel units)^2/Hz (default per channel)")
    p.add_argument("--two-tone", action="store_true", help="also run the two-tone time-domain solve")
    p.add_argument("--calibration", default=None, help="CalibrationFit JSON for sensitivity output")
    p.add_argument("--rf-field", default=None, help=argparse.SUPPRESS)
    p.add_argument("--probe-power", default=None, help="operating probe power")
    p.set_defaults(func=_cmd_heterodyne)

    p = sub.add_parser("sensitivity-map", help="noise-equivalent field over probe power x LO field")
    _add_common(p)
    p.add_argument("--probe-powers", required=True, help="START:STOP:N[:log]")
    p.add_argument("--lo-fields", required=True, help="START:STOP:N[:log]")
    p.add_argument("--channel", choices=("transmission", "fluorescence"), required=True)
    p.add_argument("--sig-field", default="70uV/m", help="signal RF field")
    p.add_argument("--beat", default="1kHz")
    p.add_argument("--rbw", default="10Hz")
    p.add_argument("--noise-floor", type=float, default=None)
    p.add_argument("--calibration", required=True, help="CalibrationFit JSON path")
    p.add_argument("--lo-field", default=None, help=argparse.SUPPRESS)
    p.set_defaults(func=_cmd_sensitivity_map)

    p = sub.add_parser("bandwidth", help="square-wave response times and bandwidth")
    _add_common(p)
    p.add_argument("--channel", choices=("transmission", "fluorescence"), required=True)
    p.add_argument("--simulate", action="store_true", help="simulate the square-wave response")
    p.add_argument("--ingest", default=None, help="analyze an ingested time trace instead")
    p.add_argument("--edges", default=None, help="edge markers for --ingest: TIME:on,TIME:off,...")
    p.add_argument("--rf-field", default=None, help="RF field during the on half-period")
    p.add_argument("--probe-power", default=None)
    p.add_argument("--period", default="40us", help="modulation period")
    p.add_argument("--samples", type=int, default=400, help="samples per half-period")
    p.add_argument("--cycles", type=int, default=2, help="converged cycles to emit")
    p.set_defaults(func=_cmd_bandwidth)

    p = sub.add_parser("ingest", help="normalize a data file into canonical form")
    _add_common(p, doppler=False)
    p.add_argument("--input", required=True)
    p.add_argument("--axis-column", default=None)
    p.add_argument("--value-column", default=None)
    p.add_argument("--kind", choices=("spectrum", "time"), default=None)
    p.add_argument("--axis-units", default=None, help="s, rad/s, Hz, MHz (spectrum) or s/ms/us/ns (time)")
    p.add_argument("--value-units", default=None)
    p.add_argument("--snr", action="store_true", help="parse an SNR table instead of a trace")
    p.add_argument("--power-column", default="probe_power_w")
    p.add_argument("--field-column", default="lo_field_v_m")
    p.add_argument("--snr-column", default="snr_db")
    p.set_defaults(func=_cmd_ingest)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except RydsenseError as exc:
        diagnostic = {"error": type(exc).__name__, "message": str(exc)}
        print(json.dumps(diagnostic, sort_keys=True), file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
