import math

import numpy as np
import pytest

from rydsense.errors import DegenerateSteadyStateError, SolverError
from rydsense.lindblad import (
    DensityMatrix,
    IncoherentTransfer,
    build_hamiltonian,
    build_liouvillian,
    steady_state,
    steady_state_batch,
    time_evolve,
    velocity_family,
)
from rydsense.scheme import DecayBranch, Drive, LadderScheme, Level

from conftest import CS_MASS, TWO_PI, narrow_ladder_scheme, two_level_scheme


def liouvillian_for(scheme, velocity=0.0, extra=()):
    return build_liouvillian(build_hamiltonian(scheme, velocity), scheme, extra)


class TestHamiltonian:
    def test_no_coupling_gives_cumulative_detunings(self, cs_scheme):
        scheme = cs_scheme
        for d in scheme.drives:
            scheme = scheme.with_drive(d.label, rabi=0.0, detuning=TWO_PI * 1e6)
        h = build_hamiltonian(scheme)
        # chain runs 0..4 in order, so level n accumulates n detunings
        diag = np.diag(h).real
        for n in range(1, 5):
            assert diag[n] == pytest.approx(-n * TWO_PI * 1e6, rel=1e-12)
        assert np.abs(h - np.diag(diag)).max() == 0.0

    def test_resonant_zero_velocity_zero_diagonal(self, cs_scheme):
        h = build_hamiltonian(cs_scheme, velocity=0.0)
        assert np.abs(np.diag(h)).max() == pytest.approx(0.0, abs=1e-30)

    def test_two_level_off_diagonal_is_half_rabi(self):
        scheme = two_level_scheme(rabi=TWO_PI * 1e6, detuning=0.0)
        h = build_hamiltonian(scheme)
        assert h[0, 1] == pytest.approx(TWO_PI * 1e6 / 2)
        assert h[1, 0] == pytest.approx(TWO_PI * 1e6 / 2)

    def test_doppler_shifts_by_prefix_wavevector(self, cs_scheme):
        v = 120.0
        h0 = build_hamiltonian(cs_scheme, 0.0)
        hv = build_hamiltonian(cs_scheme, v)
        from rydsense import residual_wavevector

        prefixes = residual_wavevector(cs_scheme)
        shift = np.diag(hv - h0).real
        # diag_j = -sum(delta_i - k_i v) so the shift is +prefix_k * v
        for lvl, pref in zip((1, 2, 3, 4), prefixes):
            assert shift[lvl] == pytest.approx(pref * v, rel=1e-12)


class TestLiouvillian:
    def test_pure_decay_exponential(self):
        """H = 0, single decay Gamma: rho_ee(t) = exp(-Gamma t) rho_ee(0)."""
        gamma = TWO_PI * 2e6
        scheme = two_level_scheme(rabi=0.0, gamma=gamma)
        liou = liouvillian_for(scheme)
        rho0 = DensityMatrix(np.array([[0.4, 0.0], [0.0, 0.6]], dtype=complex))
        times = np.linspace(1e-9, 5e-7, 7)
        states = time_evolve(liou, rho0, times)
        for t, state in zip(times, states):
            assert state.population(1) == pytest.approx(0.6 * math.exp(-gamma * t), abs=1e-8)

    def test_trace_preservation_five_level(self, cs_scheme):
        liou = liouvillian_for(cs_scheme)
        assert liou.trace_violation() < 1e-10 * np.abs(liou.matrix).max()

    def test_incoherent_transfer_monotone(self, cs_scheme):
        """BBR-style pumping raises the terminal-level population monotonically."""
        pops = []
        for rate_hz in (1e2, 1e3, 1e4, 1e5):
            extra = (IncoherentTransfer(source=3, target=4, rate=TWO_PI * rate_hz),)
            rho = steady_state(liouvillian_for(cs_scheme, extra=extra))
            pops.append(rho.population(4))
        assert all(a < b for a, b in zip(pops, pops[1:]))

    def test_rejects_non_hermitian(self, cs_scheme):
        h = build_hamiltonian(cs_scheme)
        h[0, 1] += 1e3j
        with pytest.raises(SolverError, match="Hermitian"):
            build_liouvillian(h, cs_scheme)


class TestSteadyState:
    def test_dark_equilibrium(self):
        scheme = two_level_scheme(rabi=0.0)
        rho = steady_state(liouvillian_for(scheme))
        assert rho.population(0) == pytest.approx(1.0, abs=1e-12)

    def test_saturation_third(self):
        """Resonant two-level, Omega = Gamma: rho_ee = (s/2)/(1+s) with
        s = 2 Omega^2 / Gamma^2 = 2, i.e. exactly 1/3."""
        gamma = TWO_PI * 5e6
        scheme = two_level_scheme(rabi=gamma, gamma=gamma, detuning=0.0)
        rho = steady_state(liouvillian_for(scheme))
        assert rho.population(1) == pytest.approx(1.0 / 3.0, abs=1e-8)

    def test_saturation_formula_off_resonance(self):
        """General optical Bloch saturation: rho_ee = (Omega^2/4)/(Delta^2 + Gamma^2/4 + Omega^2/2)."""
        gamma = TWO_PI * 5e6
        omega = TWO_PI * 2.2e6
        delta = TWO_PI * 1.7e6
        scheme = two_level_scheme(rabi=omega, gamma=gamma, detuning=delta)
        rho = steady_state(liouvillian_for(scheme))
        expected = (omega**2 / 4) / (delta**2 + gamma**2 / 4 + omega**2 / 2)
        assert rho.population(1) == pytest.approx(expected, rel=1e-10)

    def test_unreachable_state_unpopulated(self, cs_scheme):
        """RF off, no incoherent transfer: the terminal D state stays empty."""
        scheme = cs_scheme.with_drive("rf", rabi=0.0)
        rho = steady_state(liouvillian_for(scheme))
        assert rho.population(4) < 1e-12

    def test_degenerate_null_space_rejected(self):
        scheme = two_level_scheme(rabi=0.0, gamma=0.0)
        with pytest.raises(DegenerateSteadyStateError):
            steady_state(liouvillian_for(scheme))

    def test_weak_probe_lorentzian(self):
        """Weak-probe Im(coherence) matches (Gamma/2)/(Delta^2 + (Gamma/2)^2) to 1e-6."""
        gamma = TWO_PI * 5e6
        omega = gamma * 1e-4
        detunings = np.linspace(-5 * gamma, 5 * gamma, 41)
        ratio = []
        for delta in detunings:
            scheme = two_level_scheme(rabi=omega, gamma=gamma, detuning=delta)
            rho = steady_state(liouvillian_for(scheme))
            lorentz = (gamma / 2) / (delta**2 + (gamma / 2) ** 2)
            ratio.append(rho.coherence(0, 1).imag / lorentz)
        ratio = np.array(ratio)
        assert np.abs(ratio / ratio.mean() - 1.0).max() < 1e-6


class TestTimeEvolve:
    def test_time_zero_returns_initial(self):
        scheme = two_level_scheme()
        liou = liouvillian_for(scheme)
        rho0 = DensityMatrix.ground(2)
        out = time_evolve(liou, rho0, [0.0])
        assert np.allclose(out[0].entries, rho0.entries, atol=1e-15)

    def test_long_time_matches_steady_state(self, cs_scheme):
        liou = liouvillian_for(cs_scheme)
        target = steady_state(liou)
        slowest = TWO_PI * 10e3  # slowest configured rate
        final = time_evolve(liou, DensityMatrix.ground(5), [30.0 / slowest])[-1]
        assert final.trace_distance(target) < 1e-6

    def test_rf_rise_follows_rabi_envelope(self):
        """Early-time D-state growth follows the two-level Rabi law sin^2(Omega t/2)
        scaled by the P-state population, for Omega_RF >> all decay rates."""
        scheme = narrow_ladder_scheme(rabis=(0.02e6, 0.05e6, 0.05e6, 0.0))
        rho_off = steady_state(liouvillian_for(scheme))
        p3 = rho_off.population(3)
        omega_rf = TWO_PI * 2e6
        on = scheme.with_drive("rf", rabi=omega_rf)
        liou_on = liouvillian_for(on)
        times = np.linspace(2e-9, 0.2 / (omega_rf / TWO_PI), 6)
        states = time_evolve(liou_on, rho_off, times)
        for t, state in zip(times, states):
            expected = p3 * math.sin(omega_rf * t / 2) ** 2
            assert state.population(4) == pytest.approx(expected, rel=0.05, abs=1e-12)

    def test_increasing_times_required(self):
        scheme = two_level_scheme()
        with pytest.raises(SolverError, match="increasing"):
            time_evolve(liouvillian_for(scheme), DensityMatrix.ground(2), [1e-6, 0.5e-6])


class TestInvariants:
    def test_permuting_level_indices_preserves_observables(self, cs_scheme):
        """Relabeling level indices (with drives and decays re-pointed) leaves
        steady-state populations of the same physical levels unchanged."""
        perm = [2, 0, 3, 1, 4]  # old index -> new index
        inv = {new: old for old, new in enumerate(perm)}
        base = cs_scheme.with_drive("rf", rabi=TWO_PI * 2e6)
        levels = []
        for new in range(5):
            old_level = base.levels[inv[new]]
            levels.append(
                Level(
                    label=old_level.label,
                    index=new,
                    decay_targets=tuple(
                        DecayBranch(perm[b.target], b.rate, b.photon)
                        for b in old_level.decay_targets
                    ),
                    extra_dephasing=old_level.extra_dephasing,
                )
            )
        drives = tuple(
            Drive(
                label=d.label,
                lower=perm[d.lower],
                upper=perm[d.upper],
                rabi=d.rabi,
                detuning=d.detuning,
                wavelength=d.wavelength,
                propagation_sign=d.propagation_sign,
                is_probe=d.is_probe,
                dipole_moment=d.dipole_moment,
                beam=d.beam,
            )
            for d in base.drives
        )
        permuted = LadderScheme(
            levels=tuple(levels),
            drives=drives,
            atom_mass=base.atom_mass,
            temperature=base.temperature,
            number_density=base.number_density,
            cell_length=base.cell_length,
            transit_rate=base.transit_rate,
            interrogation_radius=base.interrogation_radius,
        ).validate()
        v = 37.0
        rho_a = steady_state(liouvillian_for(base, velocity=v))
        rho_b = steady_state(liouvillian_for(permuted, velocity=v))
        for old in range(5):
            assert rho_b.population(perm[old]) == pytest.approx(
                rho_a.population(old), rel=1e-9, abs=1e-14
            )

    def test_randomized_states_stay_physical(self):
        """Random small schemes: steady and evolved states keep Hermiticity,
        unit trace, and positivity."""
        rng = np.random.default_rng(7)
        for _ in range(100):
            dim = int(rng.integers(2, 6))
            levels = [Level(label="L0", index=0)]
            for i in range(1, dim):
                target = int(rng.integers(0, i))
                rate = TWO_PI * 10 ** rng.uniform(3, 7)
                deph = TWO_PI * 10 ** rng.uniform(2, 6) if rng.random() < 0.5 else 0.0
                levels.append(
                    Level(f"L{i}", i, (DecayBranch(target, rate),), extra_dephasing=deph)
                )
            drives = []
            for i in range(dim - 1):
                drives.append(
                    Drive(
                        label=f"d{i}",
                        lower=i,
                        upper=i + 1,
                        rabi=TWO_PI * 10 ** rng.uniform(4, 7),
                        detuning=TWO_PI * rng.uniform(-5e6, 5e6),
                        wavelength=rng.uniform(0.4e-6, 3e-6),
                        propagation_sign=int(rng.choice([-1, 1])),
                        is_probe=(i == 0),
                    )
                )
            scheme = LadderScheme(
                levels=tuple(levels),
                drives=tuple(drives),
                atom_mass=CS_MASS,
                temperature=295.0,
                number_density=1e15,
                cell_length=0.02,
                transit_rate=TWO_PI * 10 ** rng.uniform(3, 5),
            ).validate()
            liou = liouvillian_for(scheme, velocity=float(rng.normal(0, 137)))
            rho = steady_state(liou)  # validates internally
            t_scale = 1.0 / (TWO_PI * 1e5)
            for state in time_evolve(liou, DensityMatrix.ground(dim), [0.3 * t_scale, t_scale]):
                state.validate()

    def test_batch_matches_single_solves(self, cs_scheme):
        """The stacked velocity-family solve agrees with per-velocity solves."""
        scheme = cs_scheme.with_drive("rf", rabi=TWO_PI * 1e6)
        family = velocity_family(scheme)
        velocities = np.array([-210.0, -4.2, 0.0, 88.5])
        batch = steady_state_batch(family, velocities)
        for v, rho_b in zip(velocities, batch):
            rho_s = steady_state(liouvillian_for(scheme, velocity=v))
            assert np.allclose(rho_b, rho_s.entries, atol=1e-11)
