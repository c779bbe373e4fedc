"""Atomic level structure, drives, and beam geometry.

A :class:`LadderScheme` holds the excitation chain (levels connected by
coherent drives), the decay/branching structure, and the vapor-cell
parameters. Schemes are immutable after loading and safe to share across
parallel workers.

All rates, Rabi rates, and detunings are stored internally in rad/s.
Config files quote them as ordinary frequencies in Hz (``rate_hz`` etc.)
and are multiplied by 2*pi on load.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Optional, Sequence

import numpy as np
import scipy.constants as sc
import yaml

from .errors import SchemeError

TWO_PI = 2.0 * math.pi
EA0 = sc.e * sc.physical_constants["Bohr radius"][0]  # atomic unit of dipole moment, C*m


class DecayBranch(NamedTuple):
    """One spontaneous decay channel out of a level.

    ``photon`` optionally tags the emitted-photon band (e.g. "510nm") so the
    fluorescence observable can count this branch.
    """

    target: int
    rate: float  # rad/s
    photon: Optional[str] = None


@dataclass(frozen=True)
class Level:
    label: str
    index: int
    decay_targets: tuple[DecayBranch, ...] = ()
    extra_dephasing: float = 0.0  # rad/s, pure dephasing of this level

    @property
    def total_decay(self) -> float:
        """Total population decay rate out of this level, rad/s."""
        return math.fsum(b.rate for b in self.decay_targets)


@dataclass(frozen=True)
class BeamParams:
    """Laser beam parameters used to convert power to a Rabi rate."""

    power: float  # W
    waist_radius: float  # m, 1/e^2 intensity radius
    dipole_moment: float  # C*m

    def validate(self) -> None:
        if not (self.power > 0 and self.waist_radius > 0 and self.dipole_moment > 0):
            raise SchemeError(
                "beam parameters must be strictly positive "
                f"(power={self.power}, waist={self.waist_radius}, dipole={self.dipole_moment})"
            )


@dataclass(frozen=True)
class Drive:
    """Coherent field coupling two levels of the chain."""

    label: str
    lower: int
    upper: int
    rabi: float  # rad/s
    detuning: float = 0.0  # rad/s
    wavelength: float = 0.0  # m; 0 for a Doppler-free drive (RF)
    propagation_sign: int = 0  # -1, 0, +1
    is_probe: bool = False
    dipole_moment: Optional[float] = None  # C*m, for field <-> Rabi conversion
    beam: Optional[BeamParams] = None  # for power <-> Rabi conversion

    @property
    def wavevector(self) -> float:
        """Signed wavevector along the propagation axis, rad/m."""
        if self.propagation_sign == 0:
            return 0.0
        return self.propagation_sign * TWO_PI / self.wavelength

    def rabi_for_field(self, field_v_m: float) -> float:
        """Rabi rate (rad/s) for an applied field amplitude, via the drive dipole."""
        if self.dipole_moment is None:
            raise SchemeError(f"drive {self.label!r} has no dipole moment configured")
        return self.dipole_moment * field_v_m / sc.hbar

    def field_for_rabi(self, rabi: float) -> float:
        if self.dipole_moment is None:
            raise SchemeError(f"drive {self.label!r} has no dipole moment configured")
        return rabi * sc.hbar / self.dipole_moment


@dataclass(frozen=True)
class LadderScheme:
    levels: tuple[Level, ...]
    drives: tuple[Drive, ...]
    atom_mass: float  # kg
    temperature: float  # K
    number_density: float  # m^-3
    cell_length: float  # m
    transit_rate: float = 0.0  # rad/s, uniform extra decay to the chain root
    interrogation_radius: float = 0.0  # m, beam-overlap radius for atom counting

    @property
    def dim(self) -> int:
        return len(self.levels)

    @property
    def probe(self) -> Drive:
        return next(d for d in self.drives if d.is_probe)

    def drive(self, label: str) -> Drive:
        for d in self.drives:
            if d.label == label:
                return d
        raise SchemeError(f"no drive labeled {label!r}")

    def level(self, label: str) -> Level:
        for lv in self.levels:
            if lv.label == label:
                return lv
        raise SchemeError(f"no level labeled {label!r}")

    @property
    def chain_root(self) -> int:
        """Index of the level at the bottom of the drive chain."""
        return self.drives[0].lower

    @property
    def interrogated_atoms(self) -> float:
        """Atom number in the beam-overlap cylinder."""
        return self.number_density * math.pi * self.interrogation_radius**2 * self.cell_length

    def with_drive(self, label: str, **changes) -> "LadderScheme":
        """Return a copy with one drive's fields replaced."""
        drives = tuple(replace(d, **changes) if d.label == label else d for d in self.drives)
        return replace(self, drives=drives)

    def validate(self) -> "LadderScheme":
        n = len(self.levels)
        if n < 2:
            raise SchemeError("a scheme needs at least two levels")
        for i, lv in enumerate(self.levels):
            if lv.index != i:
                raise SchemeError(f"level {lv.label!r} has index {lv.index}, expected {i}")
            for br in lv.decay_targets:
                if br.rate < 0:
                    raise SchemeError(f"level {lv.label!r}: negative decay rate {br.rate}")
                if not (0 <= br.target < n):
                    raise SchemeError(
                        f"level {lv.label!r}: decay target index {br.target} does not exist"
                    )
                if br.target == lv.index:
                    raise SchemeError(f"level {lv.label!r} decays onto itself")
            if lv.extra_dephasing < 0:
                raise SchemeError(f"level {lv.label!r}: negative dephasing")
        if not self.drives:
            raise SchemeError("a scheme needs at least one drive")
        for d in self.drives:
            if d.rabi < 0:
                raise SchemeError(f"drive {d.label!r}: rabi must be >= 0")
            if d.propagation_sign not in (-1, 0, 1):
                raise SchemeError(f"drive {d.label!r}: propagation_sign must be -1, 0, or +1")
            if d.propagation_sign != 0 and not d.wavelength > 0:
                raise SchemeError(
                    f"drive {d.label!r}: propagating drive needs a positive wavelength"
                )
            for idx in (d.lower, d.upper):
                if not (0 <= idx < n):
                    raise SchemeError(f"drive {d.label!r} references missing level index {idx}")
        # connected chain: each drive starts where the previous one ended
        for prev, nxt in zip(self.drives, self.drives[1:]):
            if nxt.lower != prev.upper:
                raise SchemeError(
                    f"drive chain broken: {nxt.label!r} starts at level {nxt.lower}, "
                    f"but {prev.label!r} ends at level {prev.upper}"
                )
        probes = [d for d in self.drives if d.is_probe]
        if len(probes) != 1:
            raise SchemeError(f"exactly one drive must be tagged as the probe, found {len(probes)}")
        if not self.temperature > 0:
            raise SchemeError("temperature must be > 0")
        if self.number_density < 0:
            raise SchemeError("number density must be >= 0")
        if not self.atom_mass > 0:
            raise SchemeError("atom mass must be > 0")
        if self.transit_rate < 0:
            raise SchemeError("transit rate must be >= 0")
        return self


def rabi_from_power(beam: BeamParams) -> float:
    """Peak Rabi rate (rad/s) of a Gaussian beam.

    Omega = d * E_peak / hbar with E_peak = sqrt(4 P / (pi w^2 c eps0)).
    Scales as sqrt(P) and 1/w.
    """
    beam.validate()
    e_peak = math.sqrt(4.0 * beam.power / (math.pi * beam.waist_radius**2 * sc.c * sc.epsilon_0))
    return beam.dipole_moment * e_peak / sc.hbar


def power_for_rabi(rabi: float, beam: BeamParams) -> float:
    """Invert :func:`rabi_from_power` for the given waist and dipole."""
    e_peak = rabi * sc.hbar / beam.dipole_moment
    return e_peak**2 * math.pi * beam.waist_radius**2 * sc.c * sc.epsilon_0 / 4.0


def residual_wavevector(scheme: LadderScheme) -> np.ndarray:
    """Cumulative signed wavevector sum for each prefix of the drive chain.

    Element i is k_1 s_1 + ... + k_i s_i in rad/m; Doppler-free drives
    contribute zero. The last element is the residual wavevector governing
    first-order Doppler broadening of the full multi-photon resonance.
    """
    return np.cumsum([d.wavevector for d in scheme.drives])


# ---------------------------------------------------------------------------
# config file handling

_CELL_KEYS = {"temperature_k", "number_density_m3", "length_m", "transit_rate_hz"}


def _branch_from_config(entry: dict, labels: dict, where: str) -> DecayBranch:
    if not isinstance(entry, dict) or "to" not in entry or "rate_hz" not in entry:
        raise SchemeError(f"{where}: decay entries need 'to' and 'rate_hz' keys, got {entry!r}")
    target = entry["to"]
    if target not in labels:
        raise SchemeError(f"{where}: decay target {target!r} is not a defined level")
    return DecayBranch(
        target=labels[target],
        rate=TWO_PI * float(entry["rate_hz"]),
        photon=entry.get("photon"),
    )


def _beam_from_config(entry: dict, where: str) -> BeamParams:
    try:
        beam = BeamParams(
            power=float(entry["power_w"]),
            waist_radius=float(entry["waist_radius_m"]),
            dipole_moment=float(entry["dipole_ea0"]) * EA0,
        )
    except KeyError as exc:
        raise SchemeError(f"{where}: beam needs power_w, waist_radius_m, dipole_ea0 ({exc})")
    beam.validate()
    return beam


def load_scheme(text: str) -> LadderScheme:
    """Parse a YAML scheme description and return a validated scheme.

    See data/cs_three_photon.yaml for the reference file layout.
    """
    try:
        doc = yaml.safe_load(io.StringIO(text))
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        loc = f" (line {mark.line + 1}, column {mark.column + 1})" if mark else ""
        raise SchemeError(f"scheme file is not valid YAML{loc}: {exc}") from exc
    if not isinstance(doc, dict):
        raise SchemeError("scheme file must contain a YAML mapping at the top level")

    for section in ("levels", "drives", "cell"):
        if section not in doc:
            raise SchemeError(f"scheme file is missing the {section!r} section")

    labels: dict[str, int] = {}
    for i, entry in enumerate(doc["levels"]):
        label = entry.get("label")
        if not label:
            raise SchemeError(f"levels[{i}] has no label")
        if label in labels:
            raise SchemeError(f"duplicate level label {label!r}")
        labels[label] = i

    levels = []
    for i, entry in enumerate(doc["levels"]):
        where = f"levels[{i}] ({entry['label']!r})"
        branches = tuple(_branch_from_config(b, labels, where) for b in entry.get("decay", []))
        level = Level(
            label=entry["label"],
            index=i,
            decay_targets=branches,
            extra_dephasing=TWO_PI * float(entry.get("dephasing_hz", 0.0)),
        )
        if "total_decay_rate_hz" in entry:
            declared = TWO_PI * float(entry["total_decay_rate_hz"])
            if abs(level.total_decay - declared) > 1e-12 * max(declared, 1.0):
                raise SchemeError(
                    f"{where}: branch rates sum to {level.total_decay / TWO_PI} Hz but "
                    f"total_decay_rate_hz declares {declared / TWO_PI}"
                )
        levels.append(level)

    drives = []
    for i, entry in enumerate(doc["drives"]):
        where = f"drives[{i}] ({entry.get('label', '?')!r})"
        for key in ("label", "from", "to"):
            if key not in entry:
                raise SchemeError(f"{where}: missing {key!r}")
        for key in ("from", "to"):
            if entry[key] not in labels:
                raise SchemeError(f"{where}: references missing level {entry[key]!r}")
        beam = _beam_from_config(entry["beam"], where) if "beam" in entry else None
        dipole = float(entry["dipole_ea0"]) * EA0 if "dipole_ea0" in entry else None
        if dipole is None and beam is not None:
            dipole = beam.dipole_moment

        has_rabi = "rabi_hz" in entry
        has_field = "field_v_m" in entry
        if has_rabi and has_field:
            raise SchemeError(f"{where}: give rabi_hz or field_v_m, not both")
        if has_rabi:
            rabi = TWO_PI * float(entry["rabi_hz"])
        elif has_field:
            if dipole is None:
                raise SchemeError(f"{where}: field_v_m needs dipole_ea0")
            rabi = dipole * float(entry["field_v_m"]) / sc.hbar
        elif beam is not None:
            rabi = rabi_from_power(beam)
        else:
            raise SchemeError(f"{where}: needs one of rabi_hz, field_v_m, or beam")

        drives.append(
            Drive(
                label=entry["label"],
                lower=labels[entry["from"]],
                upper=labels[entry["to"]],
                rabi=rabi,
                detuning=TWO_PI * float(entry.get("detuning_hz", 0.0)),
                wavelength=float(entry.get("wavelength_nm", 0.0)) * 1e-9,
                propagation_sign=int(entry.get("propagation_sign", 0)),
                is_probe=bool(entry.get("probe", False)),
                dipole_moment=dipole,
                beam=beam,
            )
        )

    cell = doc["cell"]
    unknown = set(cell) - _CELL_KEYS
    if unknown:
        raise SchemeError(f"unknown cell keys: {sorted(unknown)}")
    atom = doc.get("atom", {})
    if "mass_u" not in atom:
        raise SchemeError("scheme file needs atom.mass_u")
    geometry = doc.get("geometry", {})

    scheme = LadderScheme(
        levels=tuple(levels),
        drives=tuple(drives),
        atom_mass=float(atom["mass_u"]) * sc.atomic_mass,
        temperature=float(cell.get("temperature_k", 295.0)),
        number_density=float(cell.get("number_density_m3", 0.0)),
        cell_length=float(cell.get("length_m", 0.0)),
        transit_rate=TWO_PI * float(cell.get("transit_rate_hz", 0.0)),
        interrogation_radius=float(geometry.get("interrogation_radius_m", 0.0)),
    )
    return scheme.validate()


def load_scheme_file(path) -> LadderScheme:
    with open(path, "r", encoding="utf-8") as fh:
        return load_scheme(fh.read())


def scheme_to_dict(scheme: LadderScheme) -> dict:
    """Config-file representation of a scheme (inverse of load_scheme)."""
    levels = []
    for lv in scheme.levels:
        entry: dict = {"label": lv.label}
        if lv.decay_targets:
            entry["decay"] = [
                {
                    "to": scheme.levels[b.target].label,
                    "rate_hz": b.rate / TWO_PI,
                    **({"photon": b.photon} if b.photon else {}),
                }
                for b in lv.decay_targets
            ]
        if lv.extra_dephasing:
            entry["dephasing_hz"] = lv.extra_dephasing / TWO_PI
        levels.append(entry)
    drives = []
    for d in scheme.drives:
        entry = {
            "label": d.label,
            "from": scheme.levels[d.lower].label,
            "to": scheme.levels[d.upper].label,
            "rabi_hz": d.rabi / TWO_PI,
        }
        if d.detuning:
            entry["detuning_hz"] = d.detuning / TWO_PI
        if d.wavelength:
            entry["wavelength_nm"] = d.wavelength * 1e9
        if d.propagation_sign:
            entry["propagation_sign"] = d.propagation_sign
        if d.is_probe:
            entry["probe"] = True
        if d.dipole_moment is not None:
            entry["dipole_ea0"] = d.dipole_moment / EA0
        if d.beam is not None:
            entry["beam"] = {
                "power_w": d.beam.power,
                "waist_radius_m": d.beam.waist_radius,
                "dipole_ea0": d.beam.dipole_moment / EA0,
            }
        drives.append(entry)
    return {
        "atom": {"mass_u": scheme.atom_mass / sc.atomic_mass},
        "cell": {
            "temperature_k": scheme.temperature,
            "number_density_m3": scheme.number_density,
            "length_m": scheme.cell_length,
            "transit_rate_hz": scheme.transit_rate / TWO_PI,
        },
        "geometry": {"interrogation_radius_m": scheme.interrogation_radius},
        "levels": levels,
        "drives": drives,
    }


def scheme_to_yaml(scheme: LadderScheme) -> str:
    return yaml.safe_dump(scheme_to_dict(scheme), sort_keys=False)
