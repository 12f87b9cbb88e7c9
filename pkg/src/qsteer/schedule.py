"""Control schedule value types shared by the propagator and the protocol."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Tuple, Union

import numpy as np

from .errors import ValidationError
from .liouville import SpectralDensity
from .states import DensityMatrix


@dataclass(frozen=True)
class PulseParams:
    """A constant-envelope resonant pulse.

    The lab-frame drive is ``rabi * cos(carrier * t - phase) * K`` where ``K``
    is the dipole operator normalized to the addressed ``transition``; for a
    two-level system ``K`` is sigma_x. Within the rotating-wave approximation
    this produces the rotation ``exp(-i rabi t / 2 (cos(phase) X + sin(phase) Y))``.
    """

    carrier: float
    rabi: float
    phase: float = 0.0
    duration: float = 0.0
    rwa: bool = False
    transition: Tuple[int, int] = (0, 1)

    def __post_init__(self):
        if not self.carrier > 0:
            raise ValidationError(f"carrier must be > 0, got {self.carrier}")
        if self.rabi < 0:
            raise ValidationError(f"rabi must be >= 0, got {self.rabi}")
        if self.duration < 0:
            raise ValidationError(f"duration must be >= 0, got {self.duration}")
        i, j = self.transition
        if not 0 <= i < j:
            raise ValidationError(f"transition must be (i, j) with i < j, got {self.transition}")
        object.__setattr__(self, "transition", (int(i), int(j)))

    @property
    def rotation_angle(self) -> float:
        return self.rabi * self.duration


@dataclass(frozen=True)
class IncoherentSoak:
    density: SpectralDensity
    duration: float

    def __post_init__(self):
        if self.duration < 0:
            raise ValidationError(f"soak duration must be >= 0, got {self.duration}")


@dataclass(frozen=True)
class CoherentPulse:
    pulse: PulseParams
    step: Optional[float] = None

    @property
    def duration(self) -> float:
        return self.pulse.duration


@dataclass(frozen=True, eq=False)
class IdealUnitary:
    """Instantaneous unitary; the post-jump sample sits one ulp after the jump time."""

    unitary: np.ndarray
    duration: float = 0.0

    def __post_init__(self):
        u = np.array(self.unitary, dtype=complex)
        u.setflags(write=False)
        object.__setattr__(self, "unitary", u)


Segment = Union[IncoherentSoak, CoherentPulse, IdealUnitary]


@dataclass(frozen=True, eq=False)
class ControlSchedule:
    """At most one incoherent soak followed by at most one coherent segment."""

    segments: Tuple[Segment, ...]
    target: Optional[DensityMatrix] = None
    intermediate: Optional[DensityMatrix] = None
    predicted_error: Optional[float] = None
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        segs = tuple(self.segments)
        object.__setattr__(self, "segments", segs)
        kinds = ["soak" if isinstance(s, IncoherentSoak) else "coherent" for s in segs]
        for s in segs:
            if not isinstance(s, (IncoherentSoak, CoherentPulse, IdealUnitary)):
                raise ValidationError(f"unknown segment type {type(s).__name__}")
        if kinds not in ([], ["soak"], ["coherent"], ["soak", "coherent"]):
            raise ValidationError(
                "schedule must be an optional incoherent soak followed by an optional "
                f"coherent segment, got {kinds}"
            )

    @property
    def total_duration(self) -> float:
        return float(sum(s.duration for s in self.segments))
