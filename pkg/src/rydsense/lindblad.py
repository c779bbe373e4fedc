"""Rotating-frame Hamiltonians, Lindblad superoperators, and solvers.

The density matrix is vectorized row-major: vec(rho)[j*dim + k] = rho[j, k],
so vec(A rho B) = (A kron B^T) vec(rho). All operations are pure functions;
callers may run many solves in parallel.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy.linalg import expm

from .errors import DegenerateSteadyStateError, SolverError
from .scheme import LadderScheme

HERMITICITY_TOL = 1e-10
TRACE_TOL = 1e-9
EIGENVALUE_FLOOR = -1e-9
UNIQUENESS_GAP = 1e-6


class IncoherentTransfer(NamedTuple):
    """One-way incoherent population pump (e.g. BBR-induced Rydberg transfer)."""

    source: int
    target: int
    rate: float  # rad/s


@dataclass(frozen=True)
class DensityMatrix:
    entries: np.ndarray

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @classmethod
    def ground(cls, dim: int, index: int = 0) -> "DensityMatrix":
        rho = np.zeros((dim, dim), dtype=complex)
        rho[index, index] = 1.0
        return cls(rho)

    def population(self, i: int) -> float:
        return self.entries[i, i].real

    def coherence(self, i: int, j: int) -> complex:
        return self.entries[i, j]

    def trace_distance(self, other: "DensityMatrix") -> float:
        diff = self.entries - other.entries
        return 0.5 * float(np.abs(np.linalg.eigvalsh(0.5 * (diff + diff.conj().T))).sum())

    def validate(self) -> "DensityMatrix":
        rho = self.entries
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise SolverError(f"density matrix must be square, got shape {rho.shape}")
        herm = float(np.abs(rho - rho.conj().T).max())
        if herm > HERMITICITY_TOL:
            raise SolverError(f"density matrix is not Hermitian: max asymmetry {herm:.3e}")
        tr = complex(np.trace(rho))
        if abs(tr - 1.0) > TRACE_TOL:
            raise SolverError(f"density matrix trace is {tr}, expected 1")
        lo = float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min())
        if lo < EIGENVALUE_FLOOR:
            raise SolverError(f"density matrix has negative eigenvalue {lo:.3e}")
        return self


@dataclass(frozen=True)
class Liouvillian:
    matrix: np.ndarray  # (dim^2, dim^2) complex, acts on vec(rho)
    dim: int

    def trace_violation(self) -> float:
        """Largest column sum of the rows that build Tr(rho_dot); 0 if trace-preserving."""
        diag_rows = self.matrix.reshape(self.dim, self.dim, -1)[
            np.arange(self.dim), np.arange(self.dim), :
        ]
        return float(np.abs(diag_rows.sum(axis=0)).max())


def _chain_cumulative(scheme: LadderScheme, per_drive: Sequence[float]) -> np.ndarray:
    """Accumulate per-drive quantities along the excitation chain, per level."""
    out = np.zeros(scheme.dim)
    cum = 0.0
    for d, val in zip(scheme.drives, per_drive):
        cum += val
        out[d.upper] = cum
    return out


def build_hamiltonian(scheme: LadderScheme, velocity: float = 0.0) -> np.ndarray:
    """Rotating-frame Hamiltonian (rad/s, hbar = 1) for one velocity class.

    The diagonal carries minus the cumulative effective detuning of each
    level reached along the drive chain, where each drive's detuning is
    Doppler-shifted by its signed wavevector: delta_eff = delta - k*v.
    Off-diagonals carry Omega/2 on driven pairs only.
    """
    eff = [d.detuning - d.wavevector * velocity for d in scheme.drives]
    cum = _chain_cumulative(scheme, eff)
    h = np.diag(-cum).astype(complex)
    for d in scheme.drives:
        h[d.lower, d.upper] += d.rabi / 2.0
        h[d.upper, d.lower] += d.rabi / 2.0
    return h


def _dissipator(c: np.ndarray) -> np.ndarray:
    dim = c.shape[0]
    eye = np.eye(dim)
    cdc = c.conj().T @ c
    return np.kron(c, c.conj()) - 0.5 * (np.kron(cdc, eye) + np.kron(eye, cdc.T))


def dissipation_super(
    scheme: LadderScheme, extra: Sequence[IncoherentTransfer] = ()
) -> np.ndarray:
    """Dissipative part of the Liouvillian (decays, dephasing, transit, pumps)."""
    dim = scheme.dim
    total = np.zeros((dim * dim, dim * dim), dtype=complex)
    root = scheme.chain_root

    def jump(source: int, target: int, rate: float) -> None:
        if rate <= 0.0:
            return
        c = np.zeros((dim, dim))
        c[target, source] = 1.0
        total[:] += rate * _dissipator(c)

    for lv in scheme.levels:
        for br in lv.decay_targets:
            jump(lv.index, br.target, br.rate)
        if lv.extra_dephasing > 0.0:
            proj = np.zeros((dim, dim))
            proj[lv.index, lv.index] = 1.0
            total[:] += 2.0 * lv.extra_dephasing * _dissipator(proj)
        if scheme.transit_rate > 0.0 and lv.index != root:
            jump(lv.index, root, scheme.transit_rate)
    for tr in extra:
        if tr.rate < 0:
            raise SolverError(f"incoherent transfer rate must be >= 0, got {tr.rate}")
        jump(tr.source, tr.target, tr.rate)
    return total


def build_liouvillian(
    h: np.ndarray,
    scheme: LadderScheme,
    extra: Sequence[IncoherentTransfer] = (),
    dissipation: np.ndarray | None = None,
) -> Liouvillian:
    """Superoperator L with rho_dot = L vec(rho) for the given Hamiltonian.

    ``dissipation`` may carry a precomputed :func:`dissipation_super` result
    (it depends only on levels/transit, not on drive parameters).
    """
    if np.abs(h - h.conj().T).max() > HERMITICITY_TOL * max(1.0, np.abs(h).max()):
        raise SolverError("Hamiltonian is not Hermitian")
    dim = h.shape[0]
    eye = np.eye(dim)
    mat = -1j * (np.kron(h, eye) - np.kron(eye, h.T.copy()))
    mat += dissipation_super(scheme, extra) if dissipation is None else dissipation
    return Liouvillian(matrix=mat, dim=dim)


@dataclass(frozen=True)
class LiouvillianFamily:
    """Liouvillians of all velocity classes: L(v) = base - i*v*diag(doppler_diag).

    The velocity enters only through the Doppler shift of the chain's
    cumulative wavevector, which is diagonal in Liouville space; this makes
    sweeps over a velocity grid a single stacked linear solve.
    """

    base: np.ndarray
    doppler_diag: np.ndarray  # real, length dim^2
    dim: int

    def at(self, velocity: float) -> Liouvillian:
        mat = self.base + (-1j * velocity) * np.diag(self.doppler_diag)
        return Liouvillian(matrix=mat, dim=self.dim)

    def stacked(self, velocities: np.ndarray) -> np.ndarray:
        v = np.asarray(velocities, dtype=float)
        mats = np.broadcast_to(self.base, (v.size, *self.base.shape)).copy()
        idx = np.arange(self.dim**2)
        mats[:, idx, idx] += (-1j) * v[:, None] * self.doppler_diag[None, :]
        return mats


def velocity_family(
    scheme: LadderScheme,
    extra: Sequence[IncoherentTransfer] = (),
    dissipation: np.ndarray | None = None,
) -> LiouvillianFamily:
    h0 = build_hamiltonian(scheme, velocity=0.0)
    base = build_liouvillian(h0, scheme, extra, dissipation=dissipation).matrix
    pref = _chain_cumulative(scheme, [d.wavevector for d in scheme.drives])
    diff = pref[:, None] - pref[None, :]
    return LiouvillianFamily(base=base, doppler_diag=diff.reshape(-1), dim=scheme.dim)


def _solve_vectorized(mats: np.ndarray, dim: int) -> np.ndarray:
    """Steady states of a stack of Liouvillian matrices, shape (m, dim, dim)."""
    a = mats.copy()
    a[:, 0, :] = 0.0
    a[:, 0, :: dim + 1] = 1.0
    b = np.zeros((a.shape[0], dim * dim, 1), dtype=complex)
    b[:, 0, 0] = 1.0
    try:
        rho = np.linalg.solve(a, b)[..., 0]
    except np.linalg.LinAlgError as exc:
        raise SolverError(f"steady-state solve failed: {exc}") from exc
    return rho.reshape(-1, dim, dim)


def check_uniqueness(liouvillian: Liouvillian) -> None:
    """Reject Liouvillians whose null space has dimension > 1.

    The steady state is unique when exactly one singular value vanishes;
    a relative gap above UNIQUENESS_GAP for the second-smallest singular
    value is required.
    """
    svals = np.linalg.svd(liouvillian.matrix, compute_uv=False)
    if svals[0] == 0.0:
        raise DegenerateSteadyStateError("Liouvillian is identically zero")
    if svals[-2] / svals[0] <= UNIQUENESS_GAP:
        raise DegenerateSteadyStateError(
            "steady state is not unique: second singular value "
            f"{svals[-2]:.3e} vs largest {svals[0]:.3e}"
        )


def steady_state(liouvillian: Liouvillian, check_unique: bool = True) -> DensityMatrix:
    """Unique steady state of L, normalized to unit trace.

    Solves L rho = 0 with the trace constraint replacing one row, then
    verifies the residual and the density-matrix invariants.
    """
    if check_unique:
        check_uniqueness(liouvillian)
    dim = liouvillian.dim
    rho = _solve_vectorized(liouvillian.matrix[None, :, :], dim)[0]
    residual = float(np.linalg.norm(liouvillian.matrix @ rho.reshape(-1)))
    scale = float(np.linalg.norm(liouvillian.matrix))
    if residual > 1e-9 * scale:
        raise SolverError(f"steady-state residual {residual:.3e} exceeds 1e-9*|L| = {1e-9*scale:.3e}")
    rho = 0.5 * (rho + rho.conj().T)  # scrub solver round-off
    return DensityMatrix(rho).validate()


def steady_state_batch(
    family: LiouvillianFamily,
    velocities: np.ndarray,
    check_unique: bool = True,
    validate: bool = True,
) -> np.ndarray:
    """Steady states for every velocity class, shape (m, dim, dim).

    Invariant checks run vectorized over the whole batch; a failure names
    the offending velocity node.
    """
    mats = family.stacked(velocities)
    if check_unique:
        svals = np.linalg.svd(mats, compute_uv=False)
        bad = np.where(svals[:, -2] <= UNIQUENESS_GAP * svals[:, 0])[0]
        if bad.size:
            raise DegenerateSteadyStateError(
                f"steady state not unique at velocity node {bad[0]} "
                f"(v = {np.asarray(velocities)[bad[0]]:.3f} m/s)"
            )
    rho = _solve_vectorized(mats, family.dim)
    rho = 0.5 * (rho + np.conj(np.swapaxes(rho, -1, -2)))
    if validate:
        _validate_batch(rho, np.asarray(velocities))
    return rho


def _validate_batch(rho: np.ndarray, velocities: np.ndarray) -> None:
    herm = np.abs(rho - np.conj(np.swapaxes(rho, -1, -2))).max()
    if herm > HERMITICITY_TOL:
        raise SolverError(f"batch produced non-Hermitian state (asymmetry {herm:.3e})")
    traces = np.einsum("mii->m", rho)
    bad = np.where(np.abs(traces - 1.0) > TRACE_TOL)[0]
    if bad.size:
        raise SolverError(
            f"batch trace violation at velocity node {bad[0]} "
            f"(v = {velocities[bad[0]]:.3f} m/s): trace {traces[bad[0]]}"
        )
    eigs = np.linalg.eigvalsh(rho)
    bad = np.where(eigs.min(axis=-1) < EIGENVALUE_FLOOR)[0]
    if bad.size:
        raise SolverError(
            f"batch positivity violation at velocity node {bad[0]} "
            f"(v = {velocities[bad[0]]:.3f} m/s): eigenvalue {eigs[bad[0]].min():.3e}"
        )


def time_evolve(
    liouvillian: Liouvillian,
    rho0: DensityMatrix,
    times: Sequence[float],
) -> list[DensityMatrix]:
    """Evolve rho0 from t = 0 through the given increasing times.

    Propagation is by exact matrix exponentials on each interval (cached
    for repeated interval lengths), so stiffness is not a concern.
    """
    rho0.validate()
    times = list(times)
    for a, b in zip(times, times[1:]):
        if b <= a:
            raise SolverError(f"times must be strictly increasing, got {a} then {b}")
    if times and times[0] < 0:
        raise SolverError(f"times must be >= 0, got {times[0]}")

    vec = rho0.entries.reshape(-1).astype(complex)
    propagators: dict[float, np.ndarray] = {}
    out: list[DensityMatrix] = []
    t_prev = 0.0
    for t in times:
        dt = t - t_prev
        if dt > 0.0:
            prop = propagators.get(dt)
            if prop is None:
                prop = expm(liouvillian.matrix * dt)
                propagators[dt] = prop
            vec = prop @ vec
        if not np.isfinite(vec).all():
            raise SolverError(f"time evolution diverged on interval [{t_prev}, {t}]")
        rho = vec.reshape(rho0.dim, rho0.dim)
        rho = 0.5 * (rho + rho.conj().T)
        out.append(DensityMatrix(rho).validate())
        t_prev = t
    return out


def propagator(liouvillian: Liouvillian, dt: float) -> np.ndarray:
    """exp(L dt) for repeated stepping (square-wave simulation)."""
    if dt <= 0:
        raise SolverError(f"propagator interval must be positive, got {dt}")
    return expm(liouvillian.matrix * dt)
