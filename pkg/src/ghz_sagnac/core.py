"""
Physical constants, drive protocols and branch labels.

Every formula in the package is expressed through :class:`PhysicalParams`
(oscillator mass, action unit, radial trap frequency, ring radius) and a
:class:`DriveProfile` holding the rotation rate to be estimated together with
the induced counter-rotation ``omega_p(t)``.  The protocol duration ``T`` is
never set by hand; it is the time at which the induced rotation has swept
half a turn::

    integral_0^T omega_p(t) dt = pi
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import IntEnum
from typing import Sequence, Union

import numpy as np

from .errors import DomainError, InsufficientProfileError

__all__ = [
    "PhysicalParams",
    "Constant",
    "Sampled",
    "DriveProfile",
    "SpinBranch",
    "total_time",
    "coupling_amplitude",
]


@dataclass(frozen=True)
class PhysicalParams:
    """Oscillator constants.  Defaults give the dimensionless unit system."""

    mass: float = 1.0
    hbar: float = 1.0
    trap_frequency: float = 1.0
    radius: float = 1.0

    def __post_init__(self):
        for name in ("mass", "hbar", "trap_frequency", "radius"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise DomainError(f"{name} must be positive and finite, got {value!r}")

    @property
    def drive_scale(self) -> float:
        """sqrt(m*omega / (2*hbar)) * r, the factor multiplying the angular velocity."""
        return math.sqrt(self.mass * self.trap_frequency / (2.0 * self.hbar)) * self.radius

    @property
    def is_unit(self) -> bool:
        return (self.mass, self.hbar, self.trap_frequency, self.radius) == (1.0, 1.0, 1.0, 1.0)


@dataclass(frozen=True)
class Constant:
    """Time-independent induced rotation rate."""

    value: float

    def __post_init__(self):
        if not (self.value > 0 and math.isfinite(self.value)):
            raise DomainError(f"omega_p must be positive, got {self.value!r}")

    def __call__(self, t):
        if np.ndim(t) == 0:
            return float(self.value)
        return np.full(np.shape(t), float(self.value))

    def knot_times(self) -> tuple:
        return ()


@dataclass(frozen=True)
class Sampled:
    """Piecewise-linear induced rotation rate through ``(time, value)`` knots.

    The first knot must sit at ``t = 0``; every knot value must be positive.
    """

    times: tuple
    values: tuple

    def __post_init__(self):
        times = tuple(float(t) for t in self.times)
        values = tuple(float(v) for v in self.values)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)
        if len(times) != len(values) or len(times) < 2:
            raise DomainError("a sampled profile needs at least two (time, value) knots")
        if times[0] != 0.0:
            raise DomainError(f"first knot must be at t=0, got t={times[0]}")
        if any(b <= a for a, b in zip(times, times[1:])):
            raise DomainError("knot times must be strictly increasing")
        if any(not (v > 0 and math.isfinite(v)) for v in values):
            raise DomainError("omega_p must be positive at every knot")

    @classmethod
    def from_knots(cls, knots: Sequence[tuple]) -> "Sampled":
        times, values = zip(*knots)
        return cls(times, values)

    def __call__(self, t):
        out = np.interp(t, self.times, self.values)
        return float(out) if np.ndim(t) == 0 else out

    def knot_times(self) -> tuple:
        return self.times


Waveform = Union[Constant, Sampled]


def _sweep_time(drive: Waveform) -> float:
    if isinstance(drive, Constant):
        return math.pi / drive.value
    remaining = math.pi
    for (t0, v0), (t1, v1) in zip(
        zip(drive.times, drive.values), zip(drive.times[1:], drive.values[1:])
    ):
        width = t1 - t0
        area = 0.5 * (v0 + v1) * width
        if area < remaining:
            remaining -= area
            continue
        # v0*tau + slope*tau^2/2 = remaining, written to avoid cancellation
        slope = (v1 - v0) / width
        tau = 2.0 * remaining / (v0 + math.sqrt(v0 * v0 + 2.0 * slope * remaining))
        return t0 + min(tau, width)
    swept = math.pi - remaining
    raise InsufficientProfileError(
        f"sampled profile sweeps only {swept:.6g} rad by t={drive.times[-1]:.6g}; need pi"
    )


def total_time(profile) -> float:
    """Duration ``T`` with ``integral_0^T omega_p dt = pi``.

    Accepts a :class:`DriveProfile` or a bare :class:`Constant` / :class:`Sampled`
    waveform.  Constant drives return exactly ``pi / omega_p``; sampled drives
    solve the per-segment quadratic of the running integral.
    """
    drive = profile.omega_p if isinstance(profile, DriveProfile) else profile
    if isinstance(drive, (int, float)):
        drive = Constant(float(drive))
    return _sweep_time(drive)


@dataclass(frozen=True)
class DriveProfile:
    """Rotation protocol: estimated rate ``omega_s`` plus induced drive ``omega_p(t)``.

    A plain number for ``omega_p`` is promoted to :class:`Constant`.
    """

    omega_s: float
    omega_p: Waveform
    total_time: float = field(init=False)

    def __post_init__(self):
        if isinstance(self.omega_p, (int, float)):
            object.__setattr__(self, "omega_p", Constant(float(self.omega_p)))
        if not isinstance(self.omega_p, (Constant, Sampled)):
            raise TypeError(f"omega_p must be Constant or Sampled, got {type(self.omega_p).__name__}")
        if not math.isfinite(self.omega_s):
            raise DomainError(f"omega_s must be finite, got {self.omega_s!r}")
        object.__setattr__(self, "omega_s", float(self.omega_s))
        object.__setattr__(self, "total_time", _sweep_time(self.omega_p))

    @classmethod
    def constant(cls, omega_s: float, omega_p: float) -> "DriveProfile":
        return cls(omega_s, Constant(omega_p))

    @property
    def is_constant(self) -> bool:
        return isinstance(self.omega_p, Constant)

    def with_omega_s(self, omega_s: float) -> "DriveProfile":
        return replace(self, omega_s=omega_s)

    def breakpoints(self) -> list:
        """Sorted panel edges on ``[0, T]``: the ends plus every interior knot."""
        T = self.total_time
        return [0.0] + [t for t in self.omega_p.knot_times() if 0.0 < t < T] + [T]


class SpinBranch(IntEnum):
    """Internal state label; the integer value is the rotation sign eta."""

    UP = 1
    DOWN = -1

    @property
    def eta(self) -> int:
        return int(self)

    @property
    def label(self) -> str:
        return self.name.lower()

    @classmethod
    def parse(cls, text: str) -> "SpinBranch":
        try:
            return cls[text.strip().upper()]
        except KeyError:
            raise DomainError(f"unknown spin branch {text!r}; expected 'up' or 'down'") from None


def _amplitude(params: PhysicalParams, profile: DriveProfile, branch: SpinBranch, t):
    # unchecked, vectorised over t
    return params.drive_scale * (profile.omega_s + branch.eta * profile.omega_p(t))


def coupling_amplitude(params: PhysicalParams, profile: DriveProfile, branch: SpinBranch, t: float) -> float:
    """Interaction-picture drive amplitude ``sqrt(m w/2 hbar) r (omega_s + eta omega_p(t))``.

    Raises
    ------
    DomainError
        If ``t`` lies outside ``[0, T]``.
    """
    T = profile.total_time
    if not (0.0 <= t <= T * (1.0 + 1e-12)):
        raise DomainError(f"t={t!r} outside [0, T={T!r}]")
    return float(_amplitude(params, profile, branch, t))
