"""
Truncated Fock-basis Schrodinger integrator for a single branch.

This is deliberately independent of :mod:`ghz_sagnac.evolution`: it builds the
lab-frame Hamiltonian matrix and steps the state from ``|0>`` to ``T`` with no
knowledge of the Magnus result, so agreement between the two is a genuine
check of the closed form.

Two steppers are provided.  ``midpoint-exponential`` applies
``exp(-i H(t + dt/2) dt / hbar)`` each step (unitary, second order; the
propagator is reused whenever the drive value repeats, as for constant
drives).  ``rk4`` is the classical Runge-Kutta scheme, kept for
cross-validation of the first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import expm

from .core import DriveProfile, PhysicalParams, SpinBranch
from .errors import DomainError, ShapeError, TruncationError
from .evolution import coherent_amplitudes

__all__ = [
    "FockVector",
    "IntegratorConfig",
    "hamiltonian_matrix",
    "integrate",
    "overlap",
]

METHODS = ("midpoint-exponential", "rk4")


@dataclass(frozen=True, eq=False)
class FockVector:
    """Complex amplitudes in the number basis ``|0>..|n_max>``.

    The norm is not enforced on construction; :func:`integrate` is what
    refuses states whose leakage exceeds ``leak_tol``.

    ``norm_loss`` and ``edge_population`` are integrator diagnostics (zero for
    vectors built directly): the relative loss of norm, and the largest
    population seen in the top basis state, which bounds truncation leakage.
    """

    amplitudes: np.ndarray
    leak_tol: float = 1e-8
    norm_loss: float = 0.0
    edge_population: float = 0.0

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.ndim != 1 or amps.size < 2:
            raise ShapeError("a FockVector needs a 1-D amplitude array with n_max >= 1")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def n_max(self) -> int:
        return self.amplitudes.size - 1

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def populations(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    @classmethod
    def basis(cls, n: int, n_max: int) -> "FockVector":
        amps = np.zeros(n_max + 1, dtype=complex)
        amps[n] = 1.0
        return cls(amps)

    @classmethod
    def coherent(cls, beta: complex, n_max: int, phase: float = 0.0, leak_tol: float = 1e-8) -> "FockVector":
        return cls(np.exp(1j * phase) * coherent_amplitudes(beta, n_max), leak_tol=leak_tol)


@dataclass(frozen=True)
class IntegratorConfig:
    """Basis cutoff, step size and stepper.  ``dt=None`` means ``T / 20000``."""

    n_max: int = 40
    dt: Optional[float] = None
    method: str = "midpoint-exponential"
    leak_tol: float = 1e-8

    def __post_init__(self):
        if self.n_max < 4:
            raise DomainError(f"n_max must be >= 4, got {self.n_max}")
        if self.method not in METHODS:
            raise DomainError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.dt is not None and not self.dt > 0:
            raise DomainError(f"dt must be positive, got {self.dt}")

    def steps_for(self, T: float) -> int:
        if self.dt is None:
            return 20000
        if self.dt > T / 100 * (1 + 1e-12):
            raise DomainError(f"dt={self.dt:g} exceeds T/100={T / 100:g}")
        return max(100, math.ceil(T / self.dt - 1e-9))


def _ladder_diagonal(n_max: int) -> np.ndarray:
    return np.sqrt(np.arange(1, n_max + 1, dtype=float))


def hamiltonian_matrix(
    params: PhysicalParams, profile: DriveProfile, branch: SpinBranch, t: float, n_max: int
) -> np.ndarray:
    """Dense matrix of ``hbar w a^+a + i sqrt(m hbar w / 2) r (a^+ - a)(omega_s + eta omega_p(t))``.

    Tridiagonal and Hermitian: ``H[n, n-1] = +i k sqrt(n)``, ``H[n-1, n] = -i k sqrt(n)``.
    """
    T = profile.total_time
    if not (0.0 <= t <= T * (1.0 + 1e-12)):
        raise DomainError(f"t={t!r} outside [0, T={T!r}]")
    rate = profile.omega_s + branch.eta * profile.omega_p(t)
    return _hamiltonian(params, rate, n_max)


def _hamiltonian(params: PhysicalParams, rate: float, n_max: int) -> np.ndarray:
    k = math.sqrt(params.mass * params.hbar * params.trap_frequency / 2.0) * params.radius * rate
    H = np.diag(params.hbar * params.trap_frequency * np.arange(n_max + 1, dtype=float)).astype(complex)
    off = 1j * k * _ladder_diagonal(n_max)
    H[np.arange(1, n_max + 1), np.arange(n_max)] = off
    H[np.arange(n_max), np.arange(1, n_max + 1)] = -off
    return H


def integrate(
    params: PhysicalParams,
    profile: DriveProfile,
    branch: SpinBranch,
    config: IntegratorConfig = IntegratorConfig(),
) -> FockVector:
    """Evolve ``|0>`` from ``t = 0`` to ``T`` in the truncated basis.

    Raises
    ------
    TruncationError
        If the norm drifts, or the top basis state ever holds more than
        ``config.leak_tol`` of the population.
    """
    T = profile.total_time
    steps = config.steps_for(T)
    dt = T / steps
    n_max = config.n_max
    psi = np.zeros(n_max + 1, dtype=complex)
    psi[0] = 1.0
    edge = 0.0

    def rate_at(t):
        return profile.omega_s + branch.eta * profile.omega_p(t)

    if config.method == "midpoint-exponential":
        last_rate = None
        for step in range(steps):
            rate = rate_at((step + 0.5) * dt)
            if rate != last_rate:
                U = expm(-1j * dt / params.hbar * _hamiltonian(params, rate, n_max))
                last_rate = rate
            psi = U @ psi
            edge = max(edge, abs(psi[-1]) ** 2)
    else:
        cache = {}

        def deriv(t, vec):
            rate = rate_at(t)
            if rate not in cache:
                cache.clear()
                cache[rate] = (-1j / params.hbar) * _hamiltonian(params, rate, n_max)
            return cache[rate] @ vec

        for step in range(steps):
            t = step * dt
            k1 = deriv(t, psi)
            k2 = deriv(t + 0.5 * dt, psi + 0.5 * dt * k1)
            k3 = deriv(t + 0.5 * dt, psi + 0.5 * dt * k2)
            k4 = deriv(t + dt, psi + dt * k3)
            psi = psi + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            edge = max(edge, abs(psi[-1]) ** 2)

    norm_loss = abs(1.0 - float(np.vdot(psi, psi).real))
    # rk4 is not unitary, so only the exponential stepper's norm signals leakage
    unitary = config.method == "midpoint-exponential"
    if edge > config.leak_tol or (unitary and norm_loss > config.leak_tol):
        raise TruncationError(
            f"truncation leakage (norm loss {norm_loss:.3g}, edge population {edge:.3g}) "
            f"exceeds {config.leak_tol:g}; increase n_max above {n_max}",
            achieved=max(norm_loss, edge),
        )
    return FockVector(psi, leak_tol=config.leak_tol, norm_loss=norm_loss, edge_population=edge)


def overlap(a: FockVector, b: FockVector) -> complex:
    """Conjugate-linear inner product ``sum_n conj(a_n) b_n``."""
    if a.n_max != b.n_max:
        raise ShapeError(f"basis mismatch: n_max {a.n_max} vs {b.n_max}")
    return complex(np.vdot(a.amplitudes, b.amplitudes))
