"""Measured signals: probe transmission and gated fluorescence, plus sweeps.

Doppler handling: per-velocity-class susceptibilities (and populations) add
in the vapor, so averaging happens on Im(chi) and on source populations,
before the Beer-Lambert exponential / photon-rate conversion.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np
import scipy.constants as sc

from .doppler import VelocityGrid, average_values
from .errors import RydsenseError, SchemeError, SolverError
from .lindblad import (
    DensityMatrix,
    IncoherentTransfer,
    LiouvillianFamily,
    dissipation_super,
    steady_state_batch,
    velocity_family,
)
from .scheme import BeamParams, LadderScheme, rabi_from_power

TWO_PI = 2.0 * math.pi

CHANNELS = ("transmission", "fluorescence")


@dataclass(frozen=True)
class SpectrumTrace:
    """Observable sampled against a swept axis (rad/s for detunings, s for time)."""

    axis_name: str
    axis: np.ndarray
    values: np.ndarray
    units: str
    axis_units: str = "rad/s"
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        axis = np.asarray(self.axis, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if axis.ndim != 1 or axis.shape != values.shape:
            raise RydsenseError("trace axis and values must be 1-D and the same length")
        steps = np.diff(axis)
        if axis.size > 1 and not ((steps > 0).all() or (steps < 0).all()):
            raise RydsenseError("trace axis must be strictly monotone")
        object.__setattr__(self, "axis", axis)
        object.__setattr__(self, "values", values)


@dataclass(frozen=True)
class FluorescenceConfig:
    """Which decay photons the detector counts, and with what efficiency."""

    collection_efficiency: float = 1.0
    filter_passband: tuple = ()  # source level labels (or indices) whose photons pass
    detector_gain: float = 1.0  # counts per photon

    def __post_init__(self):
        if not 0.0 <= self.collection_efficiency <= 1.0:
            raise RydsenseError(
                f"collection efficiency must be in [0, 1], got {self.collection_efficiency}"
            )


def default_fluorescence_config(scheme: LadderScheme) -> FluorescenceConfig:
    """Pass all levels that own a photon-tagged decay branch."""
    sources = tuple(
        lv.label for lv in scheme.levels if any(b.photon for b in lv.decay_targets)
    )
    return FluorescenceConfig(filter_passband=sources)


def _probe_dipole_sq(scheme: LadderScheme) -> float:
    """Squared transition dipole of the probe line from its radiative rate.

    Using the spontaneous-emission relation keeps the susceptibility
    consistent with the dissipation model (same matrix element drives
    absorption and decay).
    """
    probe = scheme.probe
    gamma = math.fsum(
        b.rate for b in scheme.levels[probe.upper].decay_targets if b.target == probe.lower
    )
    omega = TWO_PI * sc.c / probe.wavelength
    return 3.0 * math.pi * sc.epsilon_0 * sc.hbar * sc.c**3 * gamma / omega**3


def probe_imag_susceptibility(rho: np.ndarray, scheme: LadderScheme) -> float:
    """Im(chi) of the probe transition for one velocity class."""
    probe = scheme.probe
    if probe.rabi <= 0:
        raise SchemeError("probe Rabi rate must be > 0 to read out transmission")
    coh = rho[probe.lower, probe.upper]
    d_sq = _probe_dipole_sq(scheme)
    chi = 2.0 * scheme.number_density * d_sq * coh / (sc.epsilon_0 * sc.hbar * probe.rabi)
    return chi.imag


def transmission_from_imchi(im_chi: float, scheme: LadderScheme) -> float:
    """Beer-Lambert transmission for an averaged Im(chi)."""
    k_probe = TWO_PI / scheme.probe.wavelength
    t = math.exp(-k_probe * im_chi * scheme.cell_length)
    return min(t, 1.0)


def probe_transmission(rho: Union[DensityMatrix, np.ndarray], scheme: LadderScheme) -> float:
    """Probe transmission through the cell for a single solved state.

    T = exp(-alpha L) with alpha = k * Im(chi); T = 1 for an empty cell.
    """
    entries = rho.entries if isinstance(rho, DensityMatrix) else np.asarray(rho)
    return transmission_from_imchi(probe_imag_susceptibility(entries, scheme), scheme)


def _passband_rates(scheme: LadderScheme, cfg: FluorescenceConfig) -> list[tuple[int, float]]:
    """(source index, counted branch rate) for each pass-band source level."""
    out = []
    for want in cfg.filter_passband:
        lv = scheme.level(want) if isinstance(want, str) else scheme.levels[want]
        rate = math.fsum(b.rate for b in lv.decay_targets if b.photon)
        out.append((lv.index, rate))
    return out


def fluorescence_rate(
    rho: Union[DensityMatrix, np.ndarray],
    scheme: LadderScheme,
    cfg: FluorescenceConfig,
) -> float:
    """Detected photon rate (counts/s) from the configured source levels.

    Counts only direct photon-tagged decays of pass-band sources; no
    cascade simulation. Scales with the interrogated atom number and the
    collection efficiency.
    """
    entries = rho.entries if isinstance(rho, DensityMatrix) else np.asarray(rho)
    per_atom = math.fsum(rate * entries[i, i].real for i, rate in _passband_rates(scheme, cfg))
    return per_atom * scheme.interrogated_atoms * cfg.collection_efficiency * cfg.detector_gain


# ---------------------------------------------------------------------------
# parameter resolution and sweeping

SWEEP_PARAMETER_FORMS = (
    "<drive>-detuning (rad/s)",
    "<drive>-rabi (rad/s)",
    "rf-field (V/m)",
    "probe-power (W)",
)


def apply_parameter(scheme: LadderScheme, name: str, value: float) -> LadderScheme:
    """Return a scheme copy with one named parameter set.

    Recognized names: "<drive>-detuning", "<drive>-rabi", "rf-field",
    "probe-power" (see SWEEP_PARAMETER_FORMS for units).
    """
    if name == "rf-field":
        rf = scheme.drive("rf")
        return scheme.with_drive("rf", rabi=rf.rabi_for_field(value))
    if name == "probe-power":
        probe = scheme.probe
        if probe.beam is None:
            raise SchemeError("probe-power sweeps need beam parameters on the probe drive")
        if value <= 0:
            raise SchemeError(f"probe power must be > 0, got {value}")
        beam = BeamParams(value, probe.beam.waist_radius, probe.beam.dipole_moment)
        return scheme.with_drive(probe.label, rabi=rabi_from_power(beam), beam=beam)
    for suffix, fieldname in (("-detuning", "detuning"), ("-rabi", "rabi")):
        if name.endswith(suffix):
            label = name[: -len(suffix)]
            scheme.drive(label)  # raises if missing
            return scheme.with_drive(label, **{fieldname: value})
    raise RydsenseError(
        f"unknown sweep parameter {name!r}; expected one of {SWEEP_PARAMETER_FORMS}"
    )


def _axis_units_for(name: str) -> str:
    if name == "rf-field":
        return "V/m"
    if name == "probe-power":
        return "W"
    return "rad/s"


def channel_value(
    scheme: LadderScheme,
    channel: str,
    doppler: VelocityGrid,
    extra: Sequence[IncoherentTransfer] = (),
    fluorescence: Optional[FluorescenceConfig] = None,
    _dissipation: Optional[np.ndarray] = None,
) -> float:
    """Doppler-averaged observable at the scheme's configured operating point."""
    if channel not in CHANNELS:
        raise RydsenseError(f"unknown channel {channel!r}; expected one of {CHANNELS}")
    family = velocity_family(scheme, extra, dissipation=_dissipation)
    rhos = steady_state_batch(family, doppler.velocities)
    if channel == "transmission":
        probe = scheme.probe
        per_node = np.array([probe_imag_susceptibility(r, scheme) for r in rhos])
        return transmission_from_imchi(average_values(per_node, doppler), scheme)
    cfg = fluorescence if fluorescence is not None else default_fluorescence_config(scheme)
    rates = _passband_rates(scheme, cfg)
    pops = np.zeros(doppler.n_points)
    for i, rate in rates:
        pops += rate * rhos[:, i, i].real
    per_atom = average_values(pops, doppler)
    return per_atom * scheme.interrogated_atoms * cfg.collection_efficiency * cfg.detector_gain


def sweep(
    scheme: LadderScheme,
    parameter: str,
    grid: np.ndarray,
    observable: str,
    doppler: VelocityGrid,
    extra: Sequence[IncoherentTransfer] = (),
    fluorescence: Optional[FluorescenceConfig] = None,
    threads: int = 1,
) -> SpectrumTrace:
    """Steady-state spectrum of one observable against one swept parameter.

    One steady-state solve per (grid point, velocity node); deterministic
    and independent of the thread count.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise RydsenseError("sweep grid must be a non-empty 1-D array")
    if observable not in CHANNELS:
        raise RydsenseError(f"unknown observable {observable!r}; expected one of {CHANNELS}")
    # the dissipator is unaffected by any sweep parameter: build it once
    diss = dissipation_super(scheme, extra)

    def evaluate(i: int) -> float:
        value = grid[i]
        try:
            point = apply_parameter(scheme, parameter, value)
            return channel_value(
                point, observable, doppler, extra, fluorescence, _dissipation=diss
            )
        except RydsenseError as exc:
            raise SolverError(f"sweep failed at {parameter} = {float(value)!r}: {exc}") from exc

    values = np.empty(grid.size)
    if threads <= 1:
        for i in range(grid.size):
            values[i] = evaluate(i)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for i, val in enumerate(pool.map(evaluate, range(grid.size))):
                values[i] = val
    units = "transmission" if observable == "transmission" else "counts/s"
    return SpectrumTrace(
        axis_name=parameter,
        axis=grid,
        values=values,
        units=units,
        axis_units=_axis_units_for(parameter),
        metadata={"observable": observable, "doppler_points": doppler.n_points},
    )


@dataclass(frozen=True)
class ResponseMap:
    """Resonant channel value over a probe-power x RF-field grid."""

    probe_powers: np.ndarray  # W
    rf_fields: np.ndarray  # V/m
    values: np.ndarray  # (len(probe_powers), len(rf_fields))
    channel: str
    units: str


def response_map(
    scheme: LadderScheme,
    probe_powers: np.ndarray,
    rf_fields: np.ndarray,
    channel: str,
    doppler: VelocityGrid,
    extra: Sequence[IncoherentTransfer] = (),
    fluorescence: Optional[FluorescenceConfig] = None,
    threads: int = 1,
) -> ResponseMap:
    """On-resonance channel value per (probe power, RF field) cell."""
    probe_powers = np.asarray(probe_powers, dtype=float)
    rf_fields = np.asarray(rf_fields, dtype=float)
    diss = dissipation_super(scheme, extra)
    cells = [(i, j) for i in range(probe_powers.size) for j in range(rf_fields.size)]

    def evaluate(cell) -> float:
        i, j = cell
        try:
            point = apply_parameter(scheme, "probe-power", probe_powers[i])
            point = apply_parameter(point, "rf-field", rf_fields[j])
            return channel_value(point, channel, doppler, extra, fluorescence, _dissipation=diss)
        except RydsenseError as exc:
            raise SolverError(
                f"map failed at probe-power = {float(probe_powers[i])!r}, "
                f"rf-field = {float(rf_fields[j])!r}: {exc}"
            ) from exc

    values = np.empty((probe_powers.size, rf_fields.size))
    if threads <= 1:
        results = map(evaluate, cells)
    else:
        pool = ThreadPoolExecutor(max_workers=threads)
        results = pool.map(evaluate, cells)
    for (i, j), val in zip(cells, results):
        values[i, j] = val
    if threads > 1:
        pool.shutdown()
    units = "transmission" if channel == "transmission" else "counts/s"
    return ResponseMap(probe_powers, rf_fields, values, channel, units)
