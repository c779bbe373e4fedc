import math
from pathlib import Path

import pytest
import scipy.constants as sc

from rydsense import load_scheme
from rydsense.scheme import BeamParams, DecayBranch, Drive, LadderScheme, Level

TWO_PI = 2.0 * math.pi
CS_MASS = 132.90545196 * sc.atomic_mass
DATA = Path(__file__).resolve().parents[1] / "src" / "rydsense" / "data"


@pytest.fixture(scope="session")
def cs_scheme():
    return load_scheme((DATA / "cs_three_photon.yaml").read_text(encoding="utf-8"))


def two_level_scheme(
    rabi=TWO_PI * 1e6,
    gamma=TWO_PI * 5e6,
    detuning=0.0,
    density=0.0,
    cell_length=0.02,
    wavelength=895e-9,
    dephasing=0.0,
):
    """Minimal probe-only scheme for analytic cross-checks."""
    levels = (
        Level(label="g", index=0),
        Level(label="e", index=1, decay_targets=(DecayBranch(0, gamma),),
              extra_dephasing=dephasing),
    )
    drives = (
        Drive(label="probe", lower=0, upper=1, rabi=rabi, detuning=detuning,
              wavelength=wavelength, propagation_sign=1, is_probe=True),
    )
    return LadderScheme(
        levels=levels,
        drives=drives,
        atom_mass=CS_MASS,
        temperature=295.0,
        number_density=density,
        cell_length=cell_length,
        interrogation_radius=450e-6,
    ).validate()


def narrow_ladder_scheme(
    rabis=(0.05e6, 0.1e6, 0.1e6, 0.0),
    gammas=(0.2e6, 0.05e6, 0.002e6, 0.002e6),
    rf_dipole_ea0=1400.0,
    density=1e15,
):
    """Five-level chain with narrow linewidths for clean AT calibration tests."""
    from rydsense.scheme import EA0

    g = [TWO_PI * x for x in gammas]
    levels = (
        Level(label="L0", index=0),
        Level(label="L1", index=1, decay_targets=(DecayBranch(0, g[0]),)),
        Level(label="L2", index=2, decay_targets=(DecayBranch(1, g[1]),)),
        Level(label="L3", index=3, decay_targets=(DecayBranch(0, g[2]),)),
        Level(label="L4", index=4, decay_targets=(DecayBranch(0, g[3], photon="510nm"),)),
    )
    om = [TWO_PI * x for x in rabis]
    drives = (
        Drive(label="probe", lower=0, upper=1, rabi=om[0], wavelength=895e-9,
              propagation_sign=1, is_probe=True),
        Drive(label="dressing", lower=1, upper=2, rabi=om[1], wavelength=636e-9,
              propagation_sign=-1),
        Drive(label="coupling", lower=2, upper=3, rabi=om[2], wavelength=2280e-9,
              propagation_sign=1),
        Drive(label="rf", lower=3, upper=4, rabi=om[3], dipole_moment=rf_dipole_ea0 * EA0),
    )
    return LadderScheme(
        levels=levels,
        drives=drives,
        atom_mass=CS_MASS,
        temperature=295.0,
        number_density=density,
        cell_length=0.03,
        interrogation_radius=450e-6,
    ).validate()
