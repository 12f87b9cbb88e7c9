"""Time evolution for each control segment type, and whole schedules.

Units: hbar = 1, energies and frequencies in rad/s, times in seconds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from . import kernels
from .errors import (
    NotUnitary,
    RwaUnsupportedDimension,
    StateInvariantViolated,
    StepTooCoarse,
    ValidationError,
    ZeroDipole,
)
from .liouville import (
    Liouvillian,
    SpectralDensity,
    build_dissipator,
    commutator_superop,
    unvec,
    vec,
)
from .schedule import CoherentPulse, ControlSchedule, IdealUnitary, IncoherentSoak, PulseParams
from .states import (
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    DensityMatrix,
    SystemSpec,
    bloch_vector,
    frobenius_distance,
    trace_distance,
    validate_density,
)

HBAR = 1.0545718e-34  # J s
TRAJECTORY_TOL = 1e-8
DEFAULT_SAMPLES = 500
DEFAULT_STEPS_PER_PERIOD = 40
MAX_STEP_FRACTION = 1 / 20


def rabi_frequency(dipole: float, field_amplitude: float) -> float:
    """``mu E / hbar`` in rad/s."""
    return dipole * field_amplitude / HBAR


@dataclass(eq=False)
class Trajectory:
    times: np.ndarray
    states: List[DensityMatrix]
    seg_index: np.ndarray
    target: Optional[DensityMatrix] = None
    intermediate: Optional[DensityMatrix] = None
    parts: List["Trajectory"] = field(default_factory=list)

    def __len__(self):
        return len(self.states)

    @property
    def dim(self) -> int:
        return self.states[0].dim

    @property
    def final(self) -> DensityMatrix:
        return self.states[-1]

    def with_references(self, target=None, intermediate=None) -> "Trajectory":
        parts = [p.with_references(target, intermediate) for p in self.parts]
        return Trajectory(self.times, self.states, self.seg_index, target, intermediate, parts)

    def populations(self) -> np.ndarray:
        return np.array([s.populations for s in self.states])

    def metrics(self) -> Dict[str, np.ndarray]:
        """Per-sample purity, distances to the references and (n = 2) Bloch vectors."""
        out = {"purity": np.array([s.purity() for s in self.states])}
        for name, ref in (("target", self.target), ("intermediate", self.intermediate)):
            if ref is not None:
                out[f"dist_{name}"] = np.array([trace_distance(s, ref) for s in self.states])
                out[f"frob_{name}"] = np.array([frobenius_distance(s, ref) for s in self.states])
        if self.dim == 2:
            out["bloch"] = np.array([bloch_vector(s).as_array() for s in self.states])
        return out


def _checked(m: np.ndarray, t: float) -> DensityMatrix:
    try:
        return validate_density(m, tol=TRAJECTORY_TOL)
    except ValidationError as exc:
        raise StateInvariantViolated(f"state at t = {t:.6g} s failed validation: {exc}") from exc


def _single(rho0: DensityMatrix) -> Trajectory:
    return Trajectory(np.zeros(1), [rho0], np.zeros(1, dtype=int))


def evolve_incoherent(
    L: Liouvillian,
    rho0: DensityMatrix,
    duration: float,
    sample_count: int = DEFAULT_SAMPLES,
    method: str = "expm",
    rk4_step: Optional[float] = None,
) -> Trajectory:
    """Evolve under a time-independent Liouvillian, sampling uniformly.

    ``method="expm"`` steps with ``exp(L dt)`` between samples. ``method="rk4"``
    integrates with fixed-step RK4 (step ``rk4_step``, default
    ``0.02 / max|L|``); it exists to cross-check the exponential.
    """
    if duration < 0:
        raise ValidationError(f"duration must be >= 0, got {duration}")
    if rho0.dim != L.dim:
        raise ValidationError(f"state dim {rho0.dim} does not match Liouvillian dim {L.dim}")
    if duration == 0 or sample_count < 2:
        return _single(rho0)
    times = np.linspace(0.0, duration, sample_count)
    n = L.dim
    if method == "expm":
        prop = L.propagator(duration / (sample_count - 1))
        x = vec(rho0.mat)
        raw = [x]
        for _ in range(sample_count - 1):
            x = prop @ x
            raw.append(x)
    elif method == "rk4":
        if rk4_step is None:
            rk4_step = 0.02 / max(np.max(np.abs(L.superop)), 1e-300)
        per_sample = max(int(math.ceil(duration / rk4_step / (sample_count - 1))), 1)
        nsteps = per_sample * (sample_count - 1)
        record = np.arange(sample_count, dtype=np.int64) * per_sample
        raw = kernels.rk4_modulated(L.superop, np.zeros_like(L.superop), 0.0, 1.0, 0.0,
                                    vec(rho0.mat), duration / nsteps, nsteps, record)
    else:
        raise ValidationError(f"unknown method {method!r}")
    states = [rho0] + [_checked(unvec(x, n), t) for x, t in zip(raw[1:], times[1:])]
    return Trajectory(times, states, np.zeros(len(states), dtype=int))


def drive_operator(system: SystemSpec, transition=(0, 1)) -> np.ndarray:
    """Dipole operator normalized so the addressed transition has unit coupling."""
    i, j = transition
    mu = system.dipole_operator()
    ref = system.dipole[i, j]
    if ref == 0:
        raise ZeroDipole(f"transition {transition} has zero dipole and cannot be driven")
    return mu / ref


def rotating_frame_generator(system: SystemSpec, carrier: float) -> np.ndarray:
    """Frame Hamiltonian: ``diag(0, carrier)`` for two levels, ``H0 - e_0`` otherwise."""
    if system.dim == 2:
        return np.diag([0.0, carrier])
    return np.diag(system.energies - system.energies[0])


def rwa_unitary(pulse: PulseParams, detuning: float, t: float) -> np.ndarray:
    """Rotating-frame propagator ``exp(-i t [(detuning/2) Z + (rabi/2)(cos X + sin Y)])``."""
    a = 0.5 * np.array([pulse.rabi * math.cos(pulse.phase),
                        pulse.rabi * math.sin(pulse.phase), detuning])
    norm = float(np.linalg.norm(a))
    if norm == 0.0:
        return np.eye(2, dtype=complex)
    gen = (a[0] * PAULI_X + a[1] * PAULI_Y + a[2] * PAULI_Z) / norm
    return math.cos(norm * t) * np.eye(2) - 1j * math.sin(norm * t) * gen


def _conj(u: np.ndarray, m: np.ndarray) -> np.ndarray:
    return u @ m @ u.conj().T


def evolve_pulse(
    system: SystemSpec,
    pulse: PulseParams,
    rho0: DensityMatrix,
    step: Optional[float] = None,
    sample_count: int = DEFAULT_SAMPLES,
    frame: str = "rotating",
    spontaneous_emission: bool = False,
) -> Trajectory:
    """Evolve under a coherent pulse.

    With ``pulse.rwa`` false the lab-frame equation
    ``rho' = -i[H0 + rabi cos(carrier t - phase) K, rho]`` is integrated by
    fixed-step RK4; ``step`` defaults to 1/40 of the carrier period and may
    not exceed 1/20 of it. With ``pulse.rwa`` true (two levels only) the
    closed-form rotating-frame rotation is used.

    States are reported in the rotating frame by default (populations are
    frame independent). ``spontaneous_emission=True`` adds the vacuum
    (``n = 0``) dissipator during the pulse, as a diagnostic of the error the
    coherent stage neglects; it requires ``rwa=False``.
    """
    if rho0.dim != system.dim:
        raise ValidationError(f"state dim {rho0.dim} does not match system dim {system.dim}")
    if frame not in ("rotating", "lab"):
        raise ValidationError(f"frame must be 'rotating' or 'lab', got {frame!r}")
    n = system.dim
    i, j = pulse.transition
    if j >= n:
        raise ValidationError(f"transition {pulse.transition} out of range for dim {n}")
    frame_h = rotating_frame_generator(system, pulse.carrier)

    def to_frame(m, t):
        if frame == "lab":
            return m
        return _conj(np.diag(np.exp(1j * np.diag(frame_h) * t)), m)

    if pulse.rwa:
        if n != 2:
            raise RwaUnsupportedDimension(f"RWA propagation supports 2 levels, got {n}")
        if spontaneous_emission:
            raise ValidationError("spontaneous_emission diagnostic requires rwa=False")
        if pulse.duration == 0:
            return _single(rho0)
        times = np.linspace(0.0, pulse.duration, max(sample_count, 2))
        detuning = pulse.carrier - system.transition_frequency(0, 1)
        states = [rho0]
        for t in times[1:]:
            m = _conj(rwa_unitary(pulse, detuning, t), np.asarray(rho0.mat))
            if frame == "lab":
                m = _conj(np.diag(np.exp(-1j * np.diag(frame_h) * t)), m)
            states.append(_checked(m, t))
        return Trajectory(times, states, np.zeros(len(states), dtype=int))

    period = 2 * math.pi / pulse.carrier
    if step is None:
        step = period / DEFAULT_STEPS_PER_PERIOD
    if step <= 0:
        raise ValidationError(f"step must be > 0, got {step}")
    if step > period * MAX_STEP_FRACTION * (1 + 1e-12):
        raise StepTooCoarse(
            f"step {step:.3e} s exceeds 1/20 of the carrier period ({period * MAX_STEP_FRACTION:.3e} s)"
        )
    if pulse.duration == 0:
        return _single(rho0)
    coupling = drive_operator(system, pulse.transition) if pulse.rabi > 0 else np.zeros((n, n))
    if spontaneous_emission:
        g0 = build_dissipator(system, SpectralDensity.uniform(n, 0.0)).superop
    else:
        g0 = commutator_superop(system.hamiltonian())
    g1 = commutator_superop(coupling.astype(complex))
    nsteps = int(math.ceil(pulse.duration / step - 1e-9))
    nsteps = max(nsteps, 1)
    dt = pulse.duration / nsteps
    record = np.unique(np.rint(np.linspace(0, nsteps, max(sample_count, 2))).astype(np.int64))
    raw = kernels.rk4_modulated(g0, g1, pulse.rabi, pulse.carrier, pulse.phase,
                                vec(rho0.mat), dt, nsteps, record)
    times = record * dt
    times[-1] = pulse.duration
    states = [rho0] + [_checked(to_frame(unvec(x, n), t), t) for x, t in zip(raw[1:], times[1:])]
    return Trajectory(times, states, np.zeros(len(states), dtype=int))


def check_unitary(u, tol: float = 1e-10) -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise NotUnitary(f"expected a square matrix, got shape {u.shape}")
    err = float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))))
    if err > tol:
        raise NotUnitary(f"max |U^+U - I| = {err:.3e} exceeds {tol:.1e}")
    return u


def apply_unitary(u, rho: DensityMatrix) -> DensityMatrix:
    u = check_unitary(u)
    if u.shape[0] != rho.dim:
        raise ValidationError(f"unitary dim {u.shape[0]} does not match state dim {rho.dim}")
    return validate_density(_conj(u, np.asarray(rho.mat)))


def _segment_trajectory(system, seg, rho, sample_count, step) -> Trajectory:
    if isinstance(seg, IncoherentSoak):
        L = build_dissipator(system, seg.density)
        return evolve_incoherent(L, rho, seg.duration, sample_count)
    if isinstance(seg, CoherentPulse):
        return evolve_pulse(system, seg.pulse, rho, step=seg.step or step, sample_count=sample_count)
    if isinstance(seg, IdealUnitary):
        out = apply_unitary(seg.unitary, rho)
        t1 = seg.duration if seg.duration > 0 else np.nextafter(0.0, 1.0)
        return Trajectory(np.array([0.0, t1]), [rho, out], np.zeros(2, dtype=int))
    raise ValidationError(f"unknown segment {seg!r}")


def run_schedule(
    system: SystemSpec,
    schedule: ControlSchedule,
    rho0: DensityMatrix,
    sample_count: int = DEFAULT_SAMPLES,
    step: Optional[float] = None,
) -> Trajectory:
    """Run the segments in order, handing the final state of each to the next.

    The concatenated trajectory drops each later segment's first sample (it
    duplicates the previous segment's last one); ``parts`` keeps every
    segment's own samples with absolute times.
    """
    t0 = 0.0
    times, states, seg_idx, parts = [np.zeros(1)], [rho0], [np.zeros(1, dtype=int)], []
    rho = rho0
    for k, seg in enumerate(schedule.segments):
        tr = _segment_trajectory(system, seg, rho, sample_count, step)
        if len(tr) == 1:
            # zero-length segment
            tr = Trajectory(np.array([0.0]), tr.states, tr.seg_index)
        abs_t = t0 + tr.times
        if isinstance(seg, IdealUnitary) and seg.duration == 0:
            abs_t = np.array([t0, np.nextafter(t0, np.inf)])
        idx = np.full(len(tr), k, dtype=int)
        parts.append(Trajectory(abs_t, tr.states, idx))
        if len(tr) > 1:
            times.append(abs_t[1:])
            states.extend(tr.states[1:])
            seg_idx.append(idx[1:])
        rho = tr.final
        t0 = float(abs_t[-1])
    out = Trajectory(np.concatenate(times), states, np.concatenate(seg_idx), parts=parts)
    return out.with_references(schedule.target, schedule.intermediate)
