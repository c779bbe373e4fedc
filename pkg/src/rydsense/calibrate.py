"""Field calibration and heterodyne sensitivity analysis.

The measurement chain: a modulation-sideband calibration turns scope time
axes into frequency axes; Autler-Townes doublet splittings against applied
RF power give the field calibration factor; the calibration factor plus a
measured (or simulated) beat-note SNR gives the noise-equivalent field.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence, Union

import numpy as np
import scipy.constants as sc
from scipy.signal import peak_prominences, savgol_filter

from .doppler import VelocityGrid, average_values
from .errors import AnalysisError, RydsenseError, SolverError
from .lindblad import IncoherentTransfer, propagator, steady_state_batch, velocity_family
from .observables import (
    FluorescenceConfig,
    SpectrumTrace,
    apply_parameter,
    channel_value,
    default_fluorescence_config,
    probe_imag_susceptibility,
    transmission_from_imchi,
)
from .scheme import LadderScheme
from .units import dbm_to_mw

TWO_PI = 2.0 * math.pi

PEAK_PROMINENCE_FRACTION = 0.05


class Peak(NamedTuple):
    center: float  # axis units
    height: float
    prominence: float


def find_peaks(
    axis: np.ndarray,
    values: np.ndarray,
    prominence_frac: float = PEAK_PROMINENCE_FRACTION,
) -> list[Peak]:
    """Locate peaks via smoothed local maxima with a minimum prominence.

    Prominence threshold is ``prominence_frac`` of the smoothed trace's
    full range. Centers are refined with a least-squares parabola, which
    makes the result invariant under amplitude scaling and axis offsets.
    """
    axis = np.asarray(axis, dtype=float)
    values = np.asarray(values, dtype=float)
    n = values.size
    if n < 3:
        raise AnalysisError(f"need at least 3 samples to find peaks, got {n}")
    window = max(5, (n // 25) | 1)
    if window < n:
        smooth = savgol_filter(values, window, polyorder=2)
    else:
        smooth = values
    interior = np.where((smooth[1:-1] > smooth[:-2]) & (smooth[1:-1] >= smooth[2:]))[0] + 1
    if interior.size == 0:
        return []
    proms = peak_prominences(smooth, interior)[0]
    span = float(smooth.max() - smooth.min())
    if span <= 0:
        return []
    keep = proms >= prominence_frac * span
    peaks = []
    half = max(2, window // 2)
    for idx, prom in zip(interior[keep], proms[keep]):
        lo = max(0, idx - half)
        hi = min(n, idx + half + 1)
        x = axis[lo:hi] - axis[idx]
        y = smooth[lo:hi]
        a, b, c = np.polyfit(x, y, 2)
        if a < 0:
            center = axis[idx] - b / (2.0 * a)
            # keep the vertex inside the fit window
            center = min(max(center, axis[lo]), axis[hi - 1])
        else:
            center = axis[idx]
        peaks.append(Peak(center=float(center), height=float(values[idx]), prominence=float(prom)))
    peaks.sort(key=lambda p: p.center)
    return peaks


@dataclass(frozen=True)
class SplittingResult:
    splitting_hz: float
    unsplit: bool
    centers_hz: tuple


def _axis_to_hz(trace: SpectrumTrace) -> np.ndarray:
    if trace.axis_units == "rad/s":
        return trace.axis / TWO_PI
    if trace.axis_units == "Hz":
        return trace.axis
    raise AnalysisError(
        f"cannot read a splitting off a {trace.axis_units!r} axis; "
        "calibrate the scan axis to frequency first"
    )


def extract_at_splitting(trace: SpectrumTrace) -> SplittingResult:
    """Separation of the two dominant peaks of a spectrum, in Hz.

    Returns 0 with the ``unsplit`` flag when only one peak is present.
    """
    axis_hz = _axis_to_hz(trace)
    peaks = find_peaks(axis_hz, trace.values)
    if not peaks:
        raise AnalysisError("no peaks found in trace")
    if len(peaks) == 1:
        return SplittingResult(0.0, unsplit=True, centers_hz=(peaks[0].center,))
    dominant = sorted(peaks, key=lambda p: -p.prominence)[:2]
    c = sorted(p.center for p in dominant)
    return SplittingResult(splitting_hz=c[1] - c[0], unsplit=False, centers_hz=tuple(c))


def calibrate_scan_axis(trace: SpectrumTrace, sideband_frequency: float) -> float:
    """Hz-per-second scale of a time-recorded scan from modulation sidebands.

    The trace must show a carrier flanked by two sidebands at the known
    modulation frequency; the scale averages the two carrier-sideband
    separations.
    """
    if trace.axis_units != "s":
        raise AnalysisError(f"scan-axis calibration needs a time axis, got {trace.axis_units!r}")
    if sideband_frequency <= 0:
        raise AnalysisError("sideband frequency must be > 0")
    peaks = find_peaks(trace.axis, trace.values)
    if len(peaks) != 3:
        raise AnalysisError(
            f"scan-axis calibration failure: expected carrier plus two sidebands "
            f"(3 peaks), found {len(peaks)}"
        )
    left, carrier, right = (p.center for p in peaks)
    mean_sep = 0.5 * ((carrier - left) + (right - carrier))
    return sideband_frequency / mean_sep


def apply_scan_calibration(
    trace: SpectrumTrace, scale_hz_per_s: float, origin_s: Optional[float] = None
) -> SpectrumTrace:
    """Convert a time-axis scan into a frequency-axis (rad/s) spectrum."""
    if trace.axis_units != "s":
        raise AnalysisError(f"expected a time axis, got {trace.axis_units!r}")
    if origin_s is None:
        origin_s = 0.5 * (trace.axis[0] + trace.axis[-1])
    axis = (trace.axis - origin_s) * scale_hz_per_s * TWO_PI
    return SpectrumTrace(
        axis_name=trace.axis_name,
        axis=axis,
        values=trace.values,
        units=trace.units,
        axis_units="rad/s",
        metadata={**trace.metadata, "scan_scale_hz_per_s": scale_hz_per_s},
    )


@dataclass(frozen=True)
class CalibrationFit:
    """AT-splitting field calibration: splitting vs sqrt(RF power)."""

    c_cal: float  # (V/m) per sqrt(mW)
    slope: float  # Hz per sqrt(mW)
    residual_rms: float  # Hz
    points: tuple  # ((power dBm, splitting Hz), ...)

    def field_for_dbm(self, p_dbm: float) -> float:
        return self.c_cal * math.sqrt(dbm_to_mw(p_dbm))

    def dbm_for_field(self, field_v_m: float) -> float:
        if field_v_m <= 0:
            raise AnalysisError("field must be > 0 to express as a power")
        return 20.0 * math.log10(field_v_m / self.c_cal)


def fit_field_calibration(
    points: Sequence[tuple],
    dipole: float,
) -> CalibrationFit:
    """Least-squares line through the origin of splitting vs sqrt(mW).

    The calibration factor follows from the dipole moment of the RF
    transition: E = 2*pi*hbar*splitting/d, so c_cal = 2*pi*hbar*slope/d.
    """
    pts = [(float(p), float(s)) for p, s in points]
    if len(pts) < 2:
        raise AnalysisError(f"field calibration needs at least 2 points, got {len(pts)}")
    if dipole <= 0:
        raise AnalysisError("dipole moment must be > 0")
    x = np.array([math.sqrt(dbm_to_mw(p)) for p, _ in pts])
    y = np.array([s for _, s in pts])
    denom = float(np.dot(x, x))
    slope = float(np.dot(x, y)) / denom
    if slope <= 0:
        raise AnalysisError(f"field calibration slope is not positive ({slope:.3e} Hz/sqrt(mW))")
    residual_rms = float(np.sqrt(np.mean((y - slope * x) ** 2)))
    c_cal = TWO_PI * sc.hbar * slope / dipole
    return CalibrationFit(c_cal=c_cal, slope=slope, residual_rms=residual_rms, points=tuple(pts))


def sensitivity_from_snr(
    p_sig_dbm: float,
    snr_db: float,
    rbw_hz: float,
    fit: Union[CalibrationFit, float],
) -> float:
    """Noise-equivalent field from a measured beat-note SNR.

    S = sqrt(10^((P_sig - SNR)/10) * f_RBW) * C_cal, with P_sig
    mW-referenced (dBm) and the SNR in dB.
    """
    if rbw_hz <= 0:
        raise AnalysisError("resolution bandwidth must be > 0")
    c_cal = fit.c_cal if isinstance(fit, CalibrationFit) else float(fit)
    return math.sqrt(10.0 ** ((p_sig_dbm - snr_db) / 10.0) * rbw_hz) * c_cal


# ---------------------------------------------------------------------------
# heterodyne simulation

@dataclass(frozen=True)
class HeterodyneSetup:
    lo_field: float  # V/m
    sig_field: float  # V/m
    beat_frequency: float  # Hz
    rbw: float  # Hz
    noise_floor: float  # (signal units)^2 / Hz

    def __post_init__(self):
        for name in ("lo_field", "beat_frequency", "rbw", "noise_floor"):
            if getattr(self, name) <= 0:
                raise RydsenseError(f"heterodyne setup: {name} must be > 0")
        if self.sig_field < 0:
            raise RydsenseError("heterodyne setup: sig_field must be >= 0")
        if self.sig_field > self.lo_field:
            warnings.warn(
                "signal field exceeds the LO field; the small-signal beat model "
                "is outside its validity range",
                stacklevel=3,
            )


@dataclass(frozen=True)
class HeterodyneResult:
    beat_amplitude: float  # signal units
    snr_db: float
    slope: float  # signal units per (V/m)
    lo_value: float  # channel value at the LO bias point
    zero_slope: bool


def simulate_heterodyne(
    scheme: LadderScheme,
    setup: HeterodyneSetup,
    channel: str,
    doppler: VelocityGrid,
    extra: Sequence[IncoherentTransfer] = (),
    fluorescence: Optional[FluorescenceConfig] = None,
) -> HeterodyneResult:
    """Small-signal beat amplitude and SNR at the LO bias point.

    The beat amplitude is |dS/dE| at E_LO (centered finite difference of
    the steady-state signal) times the signal field; the SNR follows from
    the flat noise floor in the resolution bandwidth.
    """
    h = 1e-3 * setup.lo_field

    def value(e_field: float) -> float:
        return channel_value(
            apply_parameter(scheme, "rf-field", e_field), channel, doppler, extra, fluorescence
        )

    s_plus = value(setup.lo_field + h)
    s_minus = value(setup.lo_field - h)
    s_lo = value(setup.lo_field)
    slope = (s_plus - s_minus) / (2.0 * h)
    scale = max(abs(s_plus), abs(s_minus), abs(s_lo))
    zero_slope = abs(s_plus - s_minus) < 1e-12 * scale
    amplitude = abs(slope) * setup.sig_field
    if amplitude > 0:
        snr_db = 10.0 * math.log10(amplitude**2 / (setup.noise_floor * setup.rbw))
    else:
        snr_db = -math.inf
    return HeterodyneResult(
        beat_amplitude=amplitude,
        snr_db=snr_db,
        slope=slope,
        lo_value=s_lo,
        zero_slope=zero_slope,
    )


def simulate_heterodyne_two_tone(
    scheme: LadderScheme,
    setup: HeterodyneSetup,
    channel: str,
    doppler: VelocityGrid,
    extra: Sequence[IncoherentTransfer] = (),
    fluorescence: Optional[FluorescenceConfig] = None,
    samples_per_period: int = 64,
    settle_periods: int = 3,
) -> float:
    """Beat amplitude from a full two-tone time-domain solve.

    The LO + signal pair produces a field envelope |E_LO + E_sig e^{i theta}|
    at the beat frequency; the state is stepped through it with exact
    piecewise propagators until periodic, and the fundamental Fourier
    component of the channel signal is returned. Validates the small-signal
    slope model.
    """
    m = samples_per_period
    dt = 1.0 / (setup.beat_frequency * m)
    thetas = TWO_PI * (np.arange(m) + 0.5) / m
    envelope = np.sqrt(
        setup.lo_field**2
        + setup.sig_field**2
        + 2.0 * setup.lo_field * setup.sig_field * np.cos(thetas)
    )
    rf = scheme.drive("rf")
    cfg = fluorescence if fluorescence is not None else default_fluorescence_config(scheme)

    n_v = doppler.n_points
    families = [
        velocity_family(scheme.with_drive("rf", rabi=rf.rabi_for_field(e)), extra)
        for e in envelope
    ]
    signals = np.zeros((n_v, m))
    for k, v in enumerate(doppler.velocities):
        props = [propagator(fam.at(v), dt) for fam in families]
        rho = steady_state_batch(families[0], np.array([v]), check_unique=False)[0].reshape(-1)
        for _ in range(settle_periods):
            for p in props:
                rho = p @ rho
        for step, p in enumerate(props):
            rho = p @ rho
            mat = rho.reshape(scheme.dim, scheme.dim)
            if channel == "transmission":
                signals[k, step] = probe_imag_susceptibility(mat, scheme)
            else:
                signals[k, step] = math.fsum(
                    br.rate * mat[lv.index, lv.index].real
                    for lv in scheme.levels
                    if lv.label in cfg.filter_passband or lv.index in cfg.filter_passband
                    for br in lv.decay_targets
                    if br.photon
                )
    averaged = np.array([average_values(signals[:, step], doppler) for step in range(m)])
    if channel == "transmission":
        averaged = np.array([transmission_from_imchi(x, scheme) for x in averaged])
    else:
        averaged = (
            averaged
            * scheme.interrogated_atoms
            * cfg.collection_efficiency
            * cfg.detector_gain
        )
    spectrum = np.fft.rfft(averaged)
    return 2.0 * abs(spectrum[1]) / m


# ---------------------------------------------------------------------------
# sensitivity maps

@dataclass(frozen=True)
class SensitivityMap:
    probe_powers: np.ndarray  # W
    lo_fields: np.ndarray  # V/m
    sensitivity: np.ndarray  # V/m/sqrt(Hz); NaN marks failed cells
    channel: str = ""
    failures: tuple = ()  # ((i, j, message), ...)

    def __post_init__(self):
        sens = np.asarray(self.sensitivity, dtype=float)
        shape = (np.asarray(self.probe_powers).size, np.asarray(self.lo_fields).size)
        if sens.shape != shape:
            raise RydsenseError(f"sensitivity shape {sens.shape} does not match grids {shape}")
        finite = sens[np.isfinite(sens)]
        if (finite <= 0).any():
            raise RydsenseError("sensitivity entries must be positive")

    def minimum(self) -> float:
        finite = self.sensitivity[np.isfinite(self.sensitivity)]
        if finite.size == 0:
            raise AnalysisError("sensitivity map has no successful cells")
        return float(finite.min())


def sensitivity_map(
    scheme: LadderScheme,
    probe_powers: np.ndarray,
    lo_fields: np.ndarray,
    channel: str,
    setup: HeterodyneSetup,
    fit: CalibrationFit,
    doppler: VelocityGrid,
    extra: Sequence[IncoherentTransfer] = (),
    fluorescence: Optional[FluorescenceConfig] = None,
) -> SensitivityMap:
    """Noise-equivalent field per (probe power, LO field) cell.

    Applies the small-signal heterodyne model and the SNR-to-sensitivity
    arithmetic cell by cell; failed cells are recorded and left NaN.
    """
    probe_powers = np.asarray(probe_powers, dtype=float)
    lo_fields = np.asarray(lo_fields, dtype=float)
    if probe_powers.size == 0 or lo_fields.size == 0:
        raise AnalysisError("sensitivity map needs non-empty grids")
    p_sig_dbm = fit.dbm_for_field(setup.sig_field)
    values = np.full((probe_powers.size, lo_fields.size), np.nan)
    failures = []
    for i, power in enumerate(probe_powers):
        try:
            point = apply_parameter(scheme, "probe-power", power)
        except RydsenseError as exc:
            failures.extend((i, j, str(exc)) for j in range(lo_fields.size))
            continue
        for j, lo in enumerate(lo_fields):
            cell = HeterodyneSetup(
                lo_field=lo,
                sig_field=setup.sig_field,
                beat_frequency=setup.beat_frequency,
                rbw=setup.rbw,
                noise_floor=setup.noise_floor,
            )
            try:
                het = simulate_heterodyne(point, cell, channel, doppler, extra, fluorescence)
                if het.zero_slope:
                    raise SolverError("zero slope at this bias point")
                values[i, j] = sensitivity_from_snr(p_sig_dbm, het.snr_db, setup.rbw, fit)
            except RydsenseError as exc:
                failures.append((i, j, str(exc)))
    return SensitivityMap(
        probe_powers=probe_powers,
        lo_fields=lo_fields,
        sensitivity=values,
        channel=channel,
        failures=tuple(failures),
    )
