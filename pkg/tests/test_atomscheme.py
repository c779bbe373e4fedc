import math

import numpy as np
import pytest
import scipy.constants as sc

from rydsense import load_scheme, rabi_from_power, residual_wavevector
from rydsense.errors import SchemeError
from rydsense.scheme import BeamParams, power_for_rabi, scheme_to_yaml

from conftest import TWO_PI, two_level_scheme

MINIMAL = """
atom: {mass_u: 132.90545196}
cell: {temperature_k: 295.0, number_density_m3: 0.0, length_m: 0.02}
levels:
  - label: g
  - label: e
    decay: [{to: g, rate_hz: 5.0e6}]
drives:
  - {label: probe, from: g, to: e, probe: true, rabi_hz: 1.0e6,
     wavelength_nm: 895.0, propagation_sign: 1}
"""


class TestLoadScheme:
    def test_five_level_cs_config(self, cs_scheme):
        """Reference config: 5 levels, 3 optical drives plus 1 RF drive."""
        assert cs_scheme.dim == 5
        assert len(cs_scheme.drives) == 4
        optical = [d for d in cs_scheme.drives if d.propagation_sign != 0]
        assert len(optical) == 3
        rf = cs_scheme.drive("rf")
        assert rf.propagation_sign == 0 and rf.wavelength == 0.0
        assert cs_scheme.probe.label == "probe"

    def test_minimal_two_level(self):
        scheme = load_scheme(MINIMAL)
        assert scheme.dim == 2
        assert scheme.probe.rabi == pytest.approx(TWO_PI * 1e6)

    def test_rf_drive_missing_level(self):
        bad = MINIMAL + """  - {label: rf, from: e, to: rydberg, rabi_hz: 0.0}\n"""
        with pytest.raises(SchemeError, match="missing level 'rydberg'"):
            load_scheme(bad)

    def test_disconnected_chain_rejected(self):
        bad = MINIMAL.replace("label: e\n", "label: e\n  - label: x\n")
        bad += "  - {label: extra, from: g, to: x, rabi_hz: 1.0}\n"
        with pytest.raises(SchemeError, match="chain broken"):
            load_scheme(bad)

    def test_exactly_one_probe(self):
        with pytest.raises(SchemeError, match="exactly one drive"):
            load_scheme(MINIMAL.replace("probe: true, ", ""))

    def test_negative_rate_rejected(self):
        with pytest.raises(SchemeError, match="negative decay rate"):
            load_scheme(MINIMAL.replace("rate_hz: 5.0e6", "rate_hz: -1.0"))

    def test_parse_error_carries_location(self):
        with pytest.raises(SchemeError, match="line"):
            load_scheme("levels:\n  - label: g\n   bad_indent: 1\n")

    def test_declared_total_must_match_branches(self):
        good = MINIMAL.replace(
            "decay: [{to: g, rate_hz: 5.0e6}]",
            "decay: [{to: g, rate_hz: 5.0e6}]\n    total_decay_rate_hz: 5.0e6",
        )
        load_scheme(good)
        bad = good.replace("total_decay_rate_hz: 5.0e6", "total_decay_rate_hz: 6.0e6")
        with pytest.raises(SchemeError, match="total_decay_rate_hz"):
            load_scheme(bad)

    def test_branch_sum_equals_total(self, cs_scheme):
        for lv in cs_scheme.levels:
            total = math.fsum(b.rate for b in lv.decay_targets)
            assert lv.total_decay == pytest.approx(total, rel=1e-12)

    def test_round_trip(self, cs_scheme):
        again = load_scheme(scheme_to_yaml(cs_scheme))
        assert [lv.label for lv in again.levels] == [lv.label for lv in cs_scheme.levels]
        for a, b in zip(again.drives, cs_scheme.drives):
            assert a.label == b.label and a.lower == b.lower and a.upper == b.upper
            assert a.rabi == pytest.approx(b.rabi, rel=1e-14)
            assert a.detuning == pytest.approx(b.detuning, rel=1e-14, abs=1e-20)
            assert a.wavelength == pytest.approx(b.wavelength, rel=1e-14)
            assert a.propagation_sign == b.propagation_sign
        for a, b in zip(again.levels, cs_scheme.levels):
            for ba, bb in zip(a.decay_targets, b.decay_targets):
                assert ba.target == bb.target and ba.photon == bb.photon
                assert ba.rate == pytest.approx(bb.rate, rel=1e-14)
        assert again.number_density == cs_scheme.number_density
        assert again.cell_length == cs_scheme.cell_length


class TestRabiFromPower:
    def test_quadrupling_power_doubles_rabi(self):
        base = BeamParams(power=10e-3, waist_radius=880e-6, dipole_moment=1e-29)
        quad = BeamParams(power=40e-3, waist_radius=880e-6, dipole_moment=1e-29)
        assert rabi_from_power(quad) == pytest.approx(2.0 * rabi_from_power(base), rel=1e-12)

    def test_inverse_scaling_with_waist(self):
        base = BeamParams(power=10e-3, waist_radius=880e-6, dipole_moment=1e-29)
        wide = BeamParams(power=10e-3, waist_radius=2 * 880e-6, dipole_moment=1e-29)
        assert rabi_from_power(wide) == pytest.approx(0.5 * rabi_from_power(base), rel=1e-12)

    def test_monotone_in_power(self):
        powers = np.linspace(1e-6, 1e-1, 20)
        rabis = [rabi_from_power(BeamParams(p, 880e-6, 1e-29)) for p in powers]
        assert all(a < b for a, b in zip(rabis, rabis[1:]))

    def test_dressing_laser_anchor(self):
        """10 mW at 880 um waist reproduces the 2*pi*7 MHz dressing Rabi rate
        with the back-solved dipole, and the back-solve round-trips."""
        target = TWO_PI * 7e6
        # independent back-solve: d = hbar*Omega/E_peak
        e_peak = math.sqrt(4 * 10e-3 / (math.pi * (880e-6) ** 2 * sc.c * sc.epsilon_0))
        d = sc.hbar * target / e_peak
        beam = BeamParams(power=10e-3, waist_radius=880e-6, dipole_moment=d)
        assert rabi_from_power(beam) == pytest.approx(target, rel=1e-12)

    def test_coupling_laser_anchor(self):
        """1000 mW at 850 um (the corrected radius) gives 2*pi*10 MHz."""
        target = TWO_PI * 10e6
        e_peak = math.sqrt(4 * 1.0 / (math.pi * (850e-6) ** 2 * sc.c * sc.epsilon_0))
        d = sc.hbar * target / e_peak
        beam = BeamParams(power=1.0, waist_radius=850e-6, dipole_moment=d)
        assert rabi_from_power(beam) == pytest.approx(target, rel=1e-12)

    def test_default_scheme_anchors(self, cs_scheme):
        assert cs_scheme.drive("dressing").rabi == pytest.approx(TWO_PI * 7e6, rel=1e-9)
        assert cs_scheme.drive("coupling").rabi == pytest.approx(TWO_PI * 10e6, rel=1e-9)

    def test_power_round_trip(self):
        beam = BeamParams(power=10e-3, waist_radius=880e-6, dipole_moment=1e-29)
        rabi = rabi_from_power(beam)
        assert power_for_rabi(rabi, beam) == pytest.approx(10e-3, rel=1e-12)

    def test_rejects_nonpositive(self):
        with pytest.raises(SchemeError):
            rabi_from_power(BeamParams(power=0.0, waist_radius=1e-4, dipole_moment=1e-29))


class TestResidualWavevector:
    def test_single_beam(self):
        scheme = two_level_scheme(wavelength=895e-9)
        ks = residual_wavevector(scheme)
        assert ks.shape == (1,)
        assert ks[0] == pytest.approx(TWO_PI / 895e-9, rel=1e-12)

    def test_counter_propagating_pair_cancels(self):
        from rydsense.scheme import DecayBranch, Drive, LadderScheme, Level
        from conftest import CS_MASS

        levels = (
            Level("a", 0),
            Level("b", 1, (DecayBranch(0, TWO_PI * 1e6),)),
            Level("c", 2, (DecayBranch(1, TWO_PI * 1e6),)),
        )
        drives = (
            Drive("probe", 0, 1, TWO_PI * 1e6, wavelength=895e-9, propagation_sign=1,
                  is_probe=True),
            Drive("back", 1, 2, TWO_PI * 1e6, wavelength=895e-9, propagation_sign=-1),
        )
        scheme = LadderScheme(levels, drives, CS_MASS, 295.0, 0.0, 0.02).validate()
        ks = residual_wavevector(scheme)
        assert ks[-1] == pytest.approx(0.0, abs=1e-6)

    def test_full_geometry_small_residual(self, cs_scheme):
        ks = residual_wavevector(cs_scheme)
        k_probe = TWO_PI / 895e-9
        # arithmetic oracle: 2*pi*(1/895 - 1/636 + 1/2280) in nm^-1
        expected = TWO_PI * (1 / 895e-9 - 1 / 636e-9 + 1 / 2280e-9)
        assert ks[2] == pytest.approx(expected, rel=1e-12)
        assert abs(ks[-1]) < 0.02 * k_probe
