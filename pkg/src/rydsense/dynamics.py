"""Pulse-response simulation and time-domain analysis.

Square-wave RF modulation is propagated with exact matrix exponentials per
velocity class until the cycle is periodic; 90/10 edge times, the 0.35/tau
bandwidth rule, and the residual-fluorescence decay decomposition live here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .doppler import VelocityGrid, average_values
from .errors import AnalysisError, RydsenseError, SolverError
from .lindblad import IncoherentTransfer, propagator, steady_state_batch, velocity_family
from .observables import (
    FluorescenceConfig,
    default_fluorescence_config,
    probe_imag_susceptibility,
    transmission_from_imchi,
)
from .scheme import LadderScheme


@dataclass(frozen=True)
class TimeTrace:
    times: np.ndarray  # s
    values: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.ndim != 1 or t.shape != v.shape:
            raise RydsenseError("time trace needs matching 1-D arrays")
        if t.size > 1 and not (np.diff(t) > 0).all():
            raise RydsenseError("time trace times must be strictly increasing")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)


class EdgeMarker(NamedTuple):
    time: float
    kind: str  # "on" (RF switches on) or "off"


@dataclass(frozen=True)
class SquareWaveResult:
    trace: TimeTrace
    edges: tuple
    cycles_to_converge: int


def simulate_square_wave(
    scheme: LadderScheme,
    channel: str,
    rf_on_field: float,
    period: float,
    samples: int,
    doppler: VelocityGrid,
    extra: Sequence[IncoherentTransfer] = (),
    fluorescence: Optional[FluorescenceConfig] = None,
    n_cycles_out: int = 2,
    max_cycles: int = 60,
    tol: float = 1e-6,
) -> SquareWaveResult:
    """Channel response to square-wave RF modulation, one period on/off.

    Alternates evolution under the RF-on and RF-off Liouvillians from the
    preceding segment's final state until two consecutive cycles agree
    within ``tol`` (relative), then emits ``n_cycles_out`` converged cycles
    with ``samples`` points per half-period. The RF switches on at t = 0.
    """
    if period <= 0 or samples < 2:
        raise RydsenseError("square wave needs period > 0 and samples >= 2")
    rf = scheme.drive("rf")
    dt = 0.5 * period / samples
    on = scheme.with_drive("rf", rabi=rf.rabi_for_field(rf_on_field)) if rf_on_field > 0 else scheme
    off = scheme.with_drive("rf", rabi=0.0)
    cfg = fluorescence if fluorescence is not None else default_fluorescence_config(scheme)

    vels = doppler.velocities
    fam_on = velocity_family(on, extra)
    fam_off = velocity_family(off, extra)
    props_on = np.stack([propagator(fam_on.at(v), dt) for v in vels])
    props_off = np.stack([propagator(fam_off.at(v), dt) for v in vels])
    rho = steady_state_batch(fam_off, vels, check_unique=False).reshape(vels.size, -1)

    sources = [
        (lv.index, math.fsum(br.rate for br in lv.decay_targets if br.photon))
        for lv in scheme.levels
        if lv.label in cfg.filter_passband or lv.index in cfg.filter_passband
    ]

    def kernel(states: np.ndarray) -> float:
        mats = states.reshape(vels.size, scheme.dim, scheme.dim)
        if channel == "transmission":
            per_node = np.array([probe_imag_susceptibility(m, scheme) for m in mats])
            return transmission_from_imchi(average_values(per_node, doppler), scheme)
        per_node = np.zeros(vels.size)
        for idx, rate in sources:
            per_node += rate * mats[:, idx, idx].real
        return (
            average_values(per_node, doppler)
            * scheme.interrogated_atoms
            * cfg.collection_efficiency
            * cfg.detector_gain
        )

    def run_cycle(state: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        signal = np.empty(2 * samples)
        k = 0
        for props in (props_on, props_off):
            for _ in range(samples):
                state = np.einsum("kij,kj->ki", props, state)
                signal[k] = kernel(state)
                k += 1
        return state, signal

    prev_signal = None
    converged_at = None
    for cycle in range(1, max_cycles + 1):
        rho, signal = run_cycle(rho)
        if prev_signal is not None:
            scale = max(np.abs(signal).max(), np.finfo(float).tiny)
            if np.abs(signal - prev_signal).max() <= tol * scale:
                converged_at = cycle
                break
        prev_signal = signal
    if converged_at is None:
        raise SolverError(
            f"square-wave response did not reach a periodic cycle in {max_cycles} cycles"
        )

    values = [kernel(rho)]  # t = 0: end of the last off segment, pre-switch plateau
    times = [0.0]
    edges = []
    for c in range(n_cycles_out):
        edges.append(EdgeMarker(time=c * period, kind="on"))
        edges.append(EdgeMarker(time=c * period + 0.5 * period, kind="off"))
        rho, signal = run_cycle(rho)
        times.extend(c * period + dt * (np.arange(2 * samples) + 1))
        values.extend(signal)
    trace = TimeTrace(times=np.array(times), values=np.array(values))
    return SquareWaveResult(trace=trace, edges=tuple(edges), cycles_to_converge=converged_at)


class EdgeTiming(NamedTuple):
    time: float
    kind: str
    tau: float


@dataclass(frozen=True)
class RiseFallResult:
    tau_rise: float
    tau_fall: float
    rise_std: float
    fall_std: float
    per_edge: tuple


def _crossing_time(times: np.ndarray, norm: np.ndarray, level: float, edge_t: float) -> float:
    above = norm >= level
    idx = np.argmax(above)
    if not above.any():
        raise AnalysisError(f"edge at t = {edge_t:.3e} s: signal never crosses {level:.0%}")
    if idx == 0:
        return times[0]
    t0, t1 = times[idx - 1], times[idx]
    y0, y1 = norm[idx - 1], norm[idx]
    if y1 == y0:
        return t1
    return t0 + (level - y0) / (y1 - y0) * (t1 - t0)


def extract_rise_fall(trace: TimeTrace, edges: Sequence[EdgeMarker]) -> RiseFallResult:
    """90/10 rise and fall times, averaged over cycles with their spread.

    Thresholds are per-edge: the 10% and 90% levels interpolate between the
    local pre-edge and post-edge plateaus (last quarter of the neighboring
    segments), so the result is invariant under amplitude scaling and
    vertical offsets, and tolerant of drifting traces.
    """
    edges = sorted(edges, key=lambda e: e.time)
    if not edges:
        raise AnalysisError("no edges given")
    t = trace.times
    v = trace.values
    boundaries = [t[0]] + [e.time for e in edges] + [t[-1]]
    per_edge = []
    for n, edge in enumerate(edges):
        seg_lo = boundaries[n]  # start of preceding segment
        seg_hi = boundaries[n + 2]  # end of following segment
        pre_win = (t >= seg_lo + 0.75 * (edge.time - seg_lo)) & (t <= edge.time)
        post_win = (t >= edge.time + 0.75 * (seg_hi - edge.time)) & (t <= seg_hi)
        if not pre_win.any() or not post_win.any():
            raise AnalysisError(
                f"{edge.kind} edge at t = {edge.time:.3e} s lacks plateau samples"
            )
        pre = float(v[pre_win].mean())
        post = float(v[post_win].mean())
        span = post - pre
        scale = max(abs(pre), abs(post), np.finfo(float).tiny)
        if abs(span) <= 1e-12 * scale:
            raise AnalysisError(
                f"{edge.kind} edge at t = {edge.time:.3e} s has no amplitude to time"
            )
        seg = (t >= edge.time) & (t <= seg_hi)
        norm = (v[seg] - pre) / span
        t10 = _crossing_time(t[seg], norm, 0.1, edge.time)
        t90 = _crossing_time(t[seg], norm, 0.9, edge.time)
        per_edge.append(EdgeTiming(time=edge.time, kind=edge.kind, tau=abs(t90 - t10)))

    def stats(kind: str) -> tuple[float, float]:
        taus = [e.tau for e in per_edge if e.kind == kind]
        if not taus:
            raise AnalysisError(f"no {kind!r} edges in trace")
        return float(np.mean(taus)), float(np.std(taus))

    tau_rise, rise_std = stats("on")
    tau_fall, fall_std = stats("off")
    return RiseFallResult(
        tau_rise=tau_rise,
        tau_fall=tau_fall,
        rise_std=rise_std,
        fall_std=fall_std,
        per_edge=tuple(per_edge),
    )


def bandwidth_from_tau(tau: float) -> float:
    """BW = 0.35 / tau, the standard rise-time to bandwidth conversion."""
    if tau <= 0:
        raise AnalysisError(f"tau must be > 0, got {tau}")
    return 0.35 / tau


@dataclass(frozen=True)
class DecayBudget:
    """Decomposition of a measured decay into BBR, Rydberg-Rydberg, and the rest."""

    tau_meas: float  # s
    t_bbr: float  # s
    t_rydryd: float  # s
    gamma_col: float  # 1/s; the ground-Rydberg collision remainder

    @property
    def model_inconsistent(self) -> bool:
        """True when the stated rates already exceed the measured decay."""
        return self.gamma_col < 0


def decay_decomposition(tau_meas: float, t_bbr: float, t_rydryd: float) -> DecayBudget:
    """gamma_col = 1/tau_meas - 1/T_BBR - 1/T_ryd-ryd.

    A negative remainder is flagged via ``model_inconsistent`` rather than
    raised: it diagnoses inconsistent rate inputs.
    """
    for name, val in (("tau_meas", tau_meas), ("t_bbr", t_bbr), ("t_rydryd", t_rydryd)):
        if val <= 0:
            raise AnalysisError(f"{name} must be > 0, got {val}")
    gamma = 1.0 / tau_meas - 1.0 / t_bbr - 1.0 / t_rydryd
    return DecayBudget(tau_meas=tau_meas, t_bbr=t_bbr, t_rydryd=t_rydryd, gamma_col=gamma)
