"""
Quantum Fisher information and Cramer-Rao bounds.

Three independent routes to ``F_Q(omega_s)``:

``qfi_exact``
    Product-branch reduction.  The GHZ output is
    ``(|up..up>|chi_u>^N + |down..down>|chi_d>^N) / sqrt(2)``; with the
    single-particle derivative overlaps ``s = <chi|chi'>``, ``g = <chi'|chi'>``
    the norm terms of the QFI become polynomials in N::

        <Psi'|Psi'> = 1/2 sum_sigma [N g + N (N - 1) |s|^2]
        <Psi'|Psi>  = 1/2 sum_sigma N conj(s)

    (the two branches never mix because their spin parts are orthogonal).
``qfi_truncated_analytic``
    The closed form obtained by keeping only the external ground-state
    component of each branch.  Exact only where the branches return to ``|0>``.
``qfi_brute_force``
    Materialises the full tensor-product state for a few particles and
    differentiates it numerically.  Exponential cost; used as an oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from .core import DriveProfile, PhysicalParams, SpinBranch
from .errors import (
    CapacityError,
    DomainError,
    StepSizeError,
    UnidentifiableParameterError,
    UnsupportedConfigurationError,
)
from .evolution import BranchState, branch_state, coherent_amplitudes

__all__ = [
    "GhzModel",
    "QfiResult",
    "BranchJet",
    "branch_jet",
    "qfi_exact",
    "qfi_truncated_analytic",
    "qfi_brute_force",
    "qfi_coherent_spin",
    "pure_state_qfi",
    "output_state",
    "qcrb",
    "scaling_exponent",
]

ENGINES = ("exact-branch", "truncated-analytic", "brute-force")
BRUTE_FORCE_MAX_PARTICLES = 4
BRUTE_FORCE_MAX_NMAX = 8
STEP_RTOL = 1e-6


@dataclass(frozen=True)
class GhzModel:
    """N particles entering in the internal GHZ state, all in the trap ground state."""

    params: PhysicalParams
    profile: DriveProfile
    n_particles: int

    def __post_init__(self):
        if int(self.n_particles) != self.n_particles or self.n_particles < 1:
            raise DomainError(f"n_particles must be a positive integer, got {self.n_particles!r}")
        object.__setattr__(self, "n_particles", int(self.n_particles))

    @classmethod
    def constant(cls, omega_s: float, omega_p: float, n_particles: int, params: PhysicalParams = None):
        return cls(params or PhysicalParams(), DriveProfile.constant(omega_s, omega_p), n_particles)

    @property
    def omega_s(self) -> float:
        return self.profile.omega_s

    def at(self, omega_s: float) -> "GhzModel":
        return replace(self, profile=self.profile.with_omega_s(omega_s))

    def with_particles(self, n_particles: int) -> "GhzModel":
        return replace(self, n_particles=n_particles)

    def branches(self, omega_s: float = None) -> tuple:
        profile = self.profile if omega_s is None else self.profile.with_omega_s(omega_s)
        return tuple(branch_state(self.params, profile, b) for b in (SpinBranch.UP, SpinBranch.DOWN))


@dataclass(frozen=True)
class QfiResult:
    value: float
    engine: str
    n_particles: int = 0

    def __post_init__(self):
        if self.engine not in ENGINES:
            raise ValueError(f"unknown engine tag {self.engine!r}")
        if not self.value >= 0:
            raise DomainError(f"QFI must be non-negative, got {self.value!r}")

    def __float__(self):
        return float(self.value)


@dataclass(frozen=True)
class BranchJet:
    """A branch state with its omega_s-derivative overlaps ``s`` and ``g``."""

    state: BranchState
    d_amplitude: complex
    d_phase: float

    @property
    def s(self) -> complex:
        # <chi|chi'> for chi = e^{i phi}|beta>; purely imaginary
        b = self.state.amplitude
        return 1j * (self.d_phase + (np.conj(b) * self.d_amplitude).imag)

    @property
    def g(self) -> float:
        # <chi'|chi'> = |s|^2 + |beta'|^2, from the coherent generating function
        return abs(self.s) ** 2 + abs(self.d_amplitude) ** 2


def _central(params, profile, branch, h):
    lo = branch_state(params, profile.with_omega_s(profile.omega_s - h), branch)
    hi = branch_state(params, profile.with_omega_s(profile.omega_s + h), branch)
    return (hi.amplitude - lo.amplitude) / (2 * h), (hi.phase - lo.phase) / (2 * h)


def branch_jet(params: PhysicalParams, profile: DriveProfile, branch: SpinBranch, h: float) -> tuple:
    """Jets at steps ``h`` and ``h/2`` and their Richardson combination, as a 3-tuple."""
    state = branch_state(params, profile, branch)
    db1, dp1 = _central(params, profile, branch, h)
    db2, dp2 = _central(params, profile, branch, h / 2)
    return (
        BranchJet(state, db1, dp1),
        BranchJet(state, db2, dp2),
        BranchJet(state, (4 * db2 - db1) / 3, (4 * dp2 - dp1) / 3),
    )


def _ghz_qfi_from_jets(up: BranchJet, down: BranchJet, n: int) -> float:
    norm_term = 0.5 * sum(n * j.g + n * (n - 1) * abs(j.s) ** 2 for j in (up, down))
    cross = 0.5 * n * (np.conj(up.s) + np.conj(down.s))
    return 4.0 * (norm_term - abs(cross) ** 2)


def _single_qfi_from_jets(up: BranchJet, down: BranchJet) -> float:
    return _ghz_qfi_from_jets(up, down, 1)


def _checked(fn, model: GhzModel, d_omega: float) -> float:
    if not d_omega > 0:
        raise DomainError(f"d_omega must be positive, got {d_omega}")
    up = branch_jet(model.params, model.profile, SpinBranch.UP, d_omega)
    down = branch_jet(model.params, model.profile, SpinBranch.DOWN, d_omega)
    coarse, fine, best = (fn(u, d) for u, d in zip(up, down))
    if abs(coarse - fine) > STEP_RTOL * abs(fine) + 1e-12:
        raise StepSizeError(
            f"finite-difference QFI disagrees between steps {d_omega:g} and {d_omega / 2:g}: "
            f"{coarse:.12g} vs {fine:.12g}",
            achieved=abs(coarse - fine) / max(abs(fine), 1e-300),
        )
    return max(best, 0.0)


def qfi_exact(model: GhzModel, d_omega: float = 1e-5) -> QfiResult:
    """GHZ-input QFI by the product-branch reduction (any N, any drive).

    Branch derivatives are central differences of the closed-form ``(beta, phi)``
    at ``d_omega`` and ``d_omega/2``; disagreement beyond 1e-6 relative raises
    :class:`StepSizeError`.
    """
    n = model.n_particles
    value = _checked(lambda u, d: _ghz_qfi_from_jets(u, d, n), model, d_omega)
    return QfiResult(value, "exact-branch", n)


def qfi_coherent_spin(model: GhzModel, d_omega: float = 1e-5) -> QfiResult:
    """QFI for the unentangled product input ``((|up> + |down>)/sqrt 2 |0>)^N``.

    Independent particles add, so this is N times the single-particle value.
    """
    value = _checked(_single_qfi_from_jets, model, d_omega)
    return QfiResult(model.n_particles * value, "exact-branch", model.n_particles)


def qfi_truncated_analytic(model: GhzModel) -> QfiResult:
    """Closed-form QFI with each branch truncated to its ground-state component.

    ::

        F = m^2 N^2 r^4 / (hbar^2 w^2 wp^2)
            * [pi^2 w^2 + 2 wp^2 - 2 wp (wp cos(pi w/wp) + pi w sin(pi w/wp))]
            * {2 D-^N (wp - ws)^2 + 2 D+^N (wp + ws)^2 - [D-^N (ws - wp) + D+^N (ws + wp)]^2}

    with ``D+- = exp[m r^2 (ws +- wp)^2 (cos(pi w/wp) - 1) / (hbar w)]``.  The
    truncated state is not normalised, so the brace decays like ``D^N`` away
    from the ``omega_p = w / (2j)`` lines.
    """
    profile = model.profile
    if not profile.is_constant:
        raise UnsupportedConfigurationError("the truncated closed form needs a constant drive")
    p = model.params
    m, hbar, w, r = p.mass, p.hbar, p.trap_frequency, p.radius
    ws, wp, n = profile.omega_s, profile.omega_p.value, model.n_particles
    x = math.pi * w / wp
    bracket = (math.pi * w) ** 2 + 2 * wp**2 - 2 * wp * (wp * math.cos(x) + math.pi * w * math.sin(x))
    expo = m * r * r * (math.cos(x) - 1) / (hbar * w)
    d_plus_n = math.exp(n * expo * (ws + wp) ** 2)
    d_minus_n = math.exp(n * expo * (ws - wp) ** 2)
    brace = (
        2 * d_minus_n * (wp - ws) ** 2
        + 2 * d_plus_n * (wp + ws) ** 2
        - (d_minus_n * (ws - wp) + d_plus_n * (ws + wp)) ** 2
    )
    pref = m * m * n * n * r**4 / (hbar * hbar * w * w * wp * wp)
    return QfiResult(max(pref * bracket * brace, 0.0), "truncated-analytic", n)


def _spin_fock_vectors(model: GhzModel, omega_s: float, n_max: int) -> tuple:
    """Per-particle (spin x Fock) vectors for the two branches, renormalised after truncation."""
    vecs = []
    for state, spin in zip(model.branches(omega_s), (0, 1)):
        ext = np.exp(1j * state.phase) * coherent_amplitudes(state.amplitude, n_max)
        ext = ext / np.linalg.norm(ext)
        full = np.zeros((2, n_max + 1), dtype=complex)
        full[spin] = ext
        vecs.append(full.ravel())
    return tuple(vecs)


def _kron_power(vec: np.ndarray, n: int) -> np.ndarray:
    out = vec
    for _ in range(n - 1):
        out = np.kron(out, vec)
    return out


def _guard(model: GhzModel, n_max: int):
    if model.n_particles > BRUTE_FORCE_MAX_PARTICLES or n_max > BRUTE_FORCE_MAX_NMAX:
        raise CapacityError(
            f"brute force limited to N <= {BRUTE_FORCE_MAX_PARTICLES} and n_max <= "
            f"{BRUTE_FORCE_MAX_NMAX}; got N={model.n_particles}, n_max={n_max}"
        )
    if n_max < 1:
        raise DomainError(f"n_max must be >= 1, got {n_max}")


def output_state(model: GhzModel, n_max: int, omega_s: float = None, input_state: str = "ghz") -> np.ndarray:
    """Full N-particle output state in the ``(spin x Fock)^N`` product basis.

    Each particle's factor is ordered spin-major (index ``spin * (n_max+1) + n``,
    spin 0 = up).  ``input_state`` is ``"ghz"`` or ``"coherent-spin"``.
    """
    _guard(model, n_max)
    ws = model.omega_s if omega_s is None else omega_s
    up, down = _spin_fock_vectors(model, ws, n_max)
    n = model.n_particles
    if input_state == "ghz":
        return (_kron_power(up, n) + _kron_power(down, n)) / math.sqrt(2)
    if input_state == "coherent-spin":
        return _kron_power((up + down) / math.sqrt(2), n)
    raise DomainError(f"unknown input state {input_state!r}")


def pure_state_qfi(state_fn: Callable[[float], np.ndarray], x: float, h: float = 1e-5) -> float:
    """``4 (<psi'|psi'> - |<psi'|psi>|^2)`` with a Richardson-extrapolated central difference."""
    psi = state_fn(x)
    d1 = (state_fn(x + h) - state_fn(x - h)) / (2 * h)
    d2 = (state_fn(x + h / 2) - state_fn(x - h / 2)) / h
    dpsi = (4 * d2 - d1) / 3
    return float(4.0 * (np.vdot(dpsi, dpsi).real - abs(np.vdot(dpsi, psi)) ** 2))


def qfi_brute_force(model: GhzModel, n_max: int = 6, input_state: str = "ghz", d_omega: float = 1e-5) -> QfiResult:
    """Tensor-product oracle for small N (``N <= 4``, ``n_max <= 8``).

    Raises
    ------
    CapacityError
        If the size guard is violated.
    """
    _guard(model, n_max)
    value = pure_state_qfi(lambda ws: output_state(model, n_max, ws, input_state), model.omega_s, d_omega)
    return QfiResult(max(value, 0.0), "brute-force", model.n_particles)


def qcrb(f, nu: int = 1) -> float:
    """Quantum Cramer-Rao bound ``1 / sqrt(nu F_Q)``; ``f`` is a QfiResult or a number."""
    value = float(f)
    if nu < 1:
        raise DomainError(f"nu must be >= 1, got {nu}")
    if value <= 0:
        raise UnidentifiableParameterError("zero Fisher information: omega_s is not identifiable")
    return 1.0 / math.sqrt(nu * value)


def scaling_exponent(points: Sequence[tuple]) -> float:
    """Least-squares slope of ``log(value)`` against ``log(N)``."""
    pts = [(float(n), float(v)) for n, v in points]
    if len(pts) < 3:
        raise ValueError(f"need at least 3 points for a slope, got {len(pts)}")
    if any(n <= 0 or v <= 0 for n, v in pts):
        raise DomainError("scaling exponent needs strictly positive N and values")
    logn, logv = np.log(np.array(pts)).T
    slope, _ = np.polyfit(logn, logv, 1)
    return float(slope)
