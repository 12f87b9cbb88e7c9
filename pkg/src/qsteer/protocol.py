"""Two-stage control synthesis.

Stage one soaks the system in incoherent light whose occupation on each
transition is ``n_ij = p_j / (p_i - p_j)``. That choice puts every pair in
detailed balance at populations ``p``, so ``diag(p)`` is the unique steady
state. Stage two applies a fast unitary mapping ``|i>`` to the ``i``-th
eigenvector of the target.
"""

from __future__ import annotations

import math
import warnings
from typing import Optional

import numpy as np

from .errors import (
    DegeneratePopulations,
    NotDescending,
    PhysicalPulseUnsupported,
    ValidationError,
    ZeroDipole,
)
from .liouville import Liouvillian, SpectralDensity, build_dissipator, spectral_gap
from .propagator import check_unitary, rabi_frequency, rwa_unitary
from .schedule import (
    CoherentPulse,
    ControlSchedule,
    IdealUnitary,
    IncoherentSoak,
    PulseParams,
)
from .states import (
    DEFAULT_DEGENERACY_TOL,
    DensityMatrix,
    SpectrumDecomposition,
    SystemSpec,
    decompose_target,
    trace_distance,
    validate_density,
)

DEFAULT_EPSILON = 1e-8


class GeneralPositionWarning(UserWarning):
    pass


def optimal_density(
    p, system: Optional[SystemSpec] = None, degeneracy_tol: float = DEFAULT_DEGENERACY_TOL
) -> SpectralDensity:
    """Occupation numbers whose steady state is ``diag(p)``.

    ``p`` must be a probability vector, strictly descending over its nonzero
    entries. Pairs of empty levels get ``n = 0``.
    """
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or p.size < 2:
        raise ValidationError("p must be a vector of at least 2 probabilities")
    if np.any(p < -1e-12) or abs(p.sum() - 1.0) > 1e-10:
        raise ValidationError(f"p must be a probability vector, got {p.tolist()}")
    if system is not None:
        if system.dim != p.size:
            raise ValidationError(f"p has {p.size} entries but the system has {system.dim} levels")
        issues = system.general_position_issues()
        if issues:
            warnings.warn("system not in general position: " + "; ".join(issues),
                          GeneralPositionWarning, stacklevel=2)
    p = np.clip(p, 0.0, None)
    occ = {}
    for i in range(p.size):
        for j in range(i + 1, p.size):
            gap = p[i] - p[j]
            if p[i] <= degeneracy_tol and p[j] <= degeneracy_tol:
                occ[(i, j)] = 0.0
            elif gap < -degeneracy_tol:
                raise NotDescending(f"p[{i}] = {p[i]:.12g} < p[{j}] = {p[j]:.12g}")
            elif gap <= degeneracy_tol:
                raise DegeneratePopulations(f"p[{i}] = p[{j}] = {p[i]:.12g} > 0")
            else:
                occ[(i, j)] = p[j] / gap
    return SpectralDensity(occ)


def soak_duration(L: Liouvillian, epsilon: float = DEFAULT_EPSILON) -> float:
    """``ln(2 / epsilon) / gap``: long enough to bring any state within ``epsilon``."""
    if not 0 < epsilon < 1:
        raise ValidationError(f"epsilon must lie in (0, 1), got {epsilon}")
    return math.log(2.0 / epsilon) / spectral_gap(L)


def match_basis_unitary(decomp: SpectrumDecomposition) -> np.ndarray:
    """``U = sum_i |phi_i><i|``: the eigenvectors as columns."""
    u = np.array(decomp.eigenvectors, dtype=complex)
    check_unitary(u, tol=1e-12)
    return u


def rotation_parameters(u) -> tuple:
    """Angle ``theta`` in [0, pi] and phase ``phi`` with ``U = R(theta, phi) D``, D diagonal.

    ``R(theta, phi) = exp(-i theta/2 (cos(phi) X + sin(phi) Y))``.
    """
    u = check_unitary(u)
    if u.shape != (2, 2):
        raise ValidationError(f"expected a 2x2 unitary, got shape {u.shape}")
    c = min(abs(u[0, 0]), 1.0)
    theta = 2.0 * math.acos(c)
    prod = 1j * u[1, 0] * np.conj(u[0, 0])
    phi = float(np.angle(prod)) if abs(prod) > 1e-14 else 0.0
    return theta, phi % (2 * math.pi)


def synthesize_pulse_2level(
    u_star, system: SystemSpec, field_amplitude: float, rwa: bool = False
) -> PulseParams:
    """Resonant constant-amplitude pulse realizing ``u_star`` on diagonal states.

    The leftover diagonal phase ``D`` commutes with the diagonal intermediate
    state, so only ``theta`` and ``phi`` matter.
    """
    if system.dim != 2:
        raise PhysicalPulseUnsupported(f"pulse synthesis supports 2 levels, got {system.dim}")
    if not field_amplitude > 0:
        raise ValidationError(f"field_amplitude must be > 0, got {field_amplitude}")
    mu = system.dipole[0, 1]
    if mu == 0:
        raise ZeroDipole("dipole[0,1] = 0: the transition cannot be driven")
    theta, phi = rotation_parameters(u_star)
    rabi = rabi_frequency(mu, field_amplitude)
    return PulseParams(
        carrier=system.transition_frequency(0, 1),
        rabi=rabi,
        phase=phi,
        duration=theta / rabi,
        rwa=rwa,
    )


def synthesize_schedule(
    system: SystemSpec,
    rho_i: DensityMatrix,
    rho_f: DensityMatrix,
    mode: str = "ideal",
    epsilon: float = DEFAULT_EPSILON,
    field_amplitude: Optional[float] = None,
    rwa: bool = False,
    step: Optional[float] = None,
    soak_override: Optional[float] = None,
    pulse_override: Optional[float] = None,
    degeneracy_tol: float = DEFAULT_DEGENERACY_TOL,
) -> ControlSchedule:
    """Build the incoherent soak plus coherent segment steering ``rho_i`` to ``rho_f``.

    ``mode="ideal"`` ends with an instantaneous unitary; ``mode="physical"``
    (two levels) ends with a resonant pulse of amplitude ``field_amplitude``.
    ``predicted_error`` bounds the final trace distance: the soak residual
    ``exp(-gap T)`` plus, in physical mode, the rotation-angle mismatch of
    any pulse-duration override and, without RWA, ``rabi / carrier`` for the
    counter-rotating terms.
    """
    if mode not in ("ideal", "physical"):
        raise ValidationError(f"mode must be 'ideal' or 'physical', got {mode!r}")
    if rho_i.dim != system.dim or rho_f.dim != system.dim:
        raise ValidationError("state dimensions must match the system")
    if mode == "physical" and system.dim != 2:
        raise PhysicalPulseUnsupported(
            f"physical-pulse mode supports 2 levels, got {system.dim}; use mode='ideal'")
    decomp = decompose_target(rho_f, degeneracy_tol)
    p = decomp.eigenvalues
    density = optimal_density(p, system, degeneracy_tol)
    L = build_dissipator(system, density)
    gap = spectral_gap(L)
    t_soak = soak_override if soak_override is not None else soak_duration(L, epsilon)
    intermediate = validate_density(np.diag(p))
    u_star = match_basis_unitary(decomp)
    error = math.exp(-gap * t_soak)

    if mode == "ideal":
        coherent = IdealUnitary(u_star)
    else:
        if field_amplitude is None:
            raise ValidationError("physical mode needs field_amplitude")
        pulse = synthesize_pulse_2level(u_star, system, field_amplitude, rwa)
        if pulse_override is not None:
            pulse = PulseParams(pulse.carrier, pulse.rabi, pulse.phase, pulse_override, rwa)
        realized = rwa_unitary(pulse, 0.0, pulse.duration)
        im = np.asarray(intermediate.mat)
        error += trace_distance(validate_density(realized @ im @ realized.conj().T), rho_f)
        if not rwa:
            error += pulse.rabi / pulse.carrier
        coherent = CoherentPulse(pulse, step)

    extras = {
        "eigenvalues": p.copy(),
        "unitary": u_star,
        "gap": gap,
        "tau_rel": 1.0 / gap,
        "mode": mode,
        "epsilon": epsilon,
    }
    return ControlSchedule(
        (IncoherentSoak(density, t_soak), coherent),
        target=rho_f,
        intermediate=intermediate,
        predicted_error=error,
        extras=extras,
    )
