"""
Parity readout after the pi/2 recombination pulse.

Pulse convention (balanced, unitary)::

    |up>   -> (|up> + |down>) / sqrt 2
    |down> -> (|down> - |up>) / sqrt 2

i.e. ``exp(-i pi/4 sigma_y)`` on every particle.  The parity operator is
``prod_k (|up><up| - |down><down|)_k``.  After the pulse the GHZ output is
``(|A>^N + |B>^N) / sqrt 2`` with ``<A|p|A> = <B|p|B> = 0`` and
``<A|p|B> = -e^{i(phi_d - phi_u)} <beta_u|beta_d>``, hence::

    <P> = (-1)^N Re[(e^{i(phi_d - phi_u)} <beta_u|beta_d>)^N]

and ``P^2 = 1`` identically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DomainError,
    InsensitiveOperatingPointError,
    StepSizeError,
    UnsupportedConfigurationError,
)
from .evolution import branch_overlap
from .metrology import GhzModel, _guard, _spin_fock_vectors

__all__ = [
    "ParityMoments",
    "parity_expectation_exact",
    "parity_moments_exact",
    "parity_moments_truncated",
    "parity_brute_force",
    "rotation_precision",
    "rotation_precision_coherent_spin",
    "rotation_precision_truncated",
    "rotation_precision_ideal",
]

STEP_RTOL = 1e-6
MAX_HALVINGS = 4
_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class ParityMoments:
    mean: float
    second_moment: float
    variance: float
    engine: str


def _cross_amplitude(model: GhzModel, omega_s: float = None) -> complex:
    up, down = model.branches(omega_s)
    return branch_overlap(up, down)


def _signal(cross: complex, n: int) -> float:
    # (-1)^n Re[z^n], in polar form so large n stays accurate
    r, theta = abs(cross), np.angle(cross)
    return float((-1) ** n * r**n * math.cos(n * theta))


def parity_expectation_exact(model: GhzModel) -> float:
    """Exact ``<P>`` for the GHZ input, from the single-particle cross overlap."""
    return _signal(_cross_amplitude(model), model.n_particles)


def parity_moments_exact(model: GhzModel) -> ParityMoments:
    mean = parity_expectation_exact(model)
    return ParityMoments(mean, 1.0, 1.0 - mean * mean, "exact-branch")


def _require_unit_constant(model: GhzModel):
    if not model.profile.is_constant:
        raise UnsupportedConfigurationError("truncated parity formulas need a constant drive")
    if not model.params.is_unit:
        raise UnsupportedConfigurationError("truncated parity formulas assume m = hbar = w = r = 1")


def _truncated_parts(model: GhzModel):
    ws, wp, n = model.omega_s, model.profile.omega_p.value, model.n_particles
    c = math.cos(math.pi / wp) - 1.0  # <= 0
    fringe = 2 * n * ws * (math.pi - wp * math.sin(math.pi / wp))
    damping = math.exp(n * (wp * wp + ws * ws) * c)
    e_minus = math.exp(n * (wp - ws) ** 2 * c)
    e_plus = math.exp(n * (wp + ws) ** 2 * c)
    return ws, wp, n, c, fringe, damping, e_minus, e_plus


def parity_moments_truncated(model: GhzModel) -> ParityMoments:
    """Ground-state-truncated closed forms for ``<P>``, ``<P^2>`` and ``(Delta P)^2``.

    ``<P^2>`` comes out below one away from ``omega_p = 1/(2j)``: the truncated
    state is not normalised.  Only :func:`parity_moments_exact` is physical there.
    """
    _require_unit_constant(model)
    _, _, n, _, fringe, damping, e_minus, e_plus = _truncated_parts(model)
    mean = (-1) ** n * math.cos(fringe) * damping
    second = 0.5 * (e_minus + e_plus)
    return ParityMoments(mean, second, second - mean * mean, "truncated-analytic")


def _derivative(fn, x: float, h: float):
    """Richardson central difference plus the two raw estimates and a noise floor."""
    f_lo, f_hi = fn(x - h), fn(x + h)
    d1 = (f_hi - f_lo) / (2 * h)
    d2 = (fn(x + h / 2) - fn(x - h / 2)) / h
    floor = 64 * _EPS * max(abs(f_lo), abs(f_hi), 1e-300) / h
    return (4 * d2 - d1) / 3, d1, d2, floor


def _error_propagation(signal, omega_s: float, h: float) -> float:
    """``sqrt(1 - <P>^2) / |d<P>/d omega_s|``.

    The step is halved (at most ``MAX_HALVINGS`` times) until the estimates at
    ``h`` and ``h/2`` agree to ``STEP_RTOL``; fast fringes at large N need it.
    """
    if not h > 0:
        raise DomainError(f"d_omega must be positive, got {h}")
    for _ in range(MAX_HALVINGS + 1):
        slope, d1, d2, floor = _derivative(signal, omega_s, h)
        if abs(slope) < max(1e-12, floor):
            raise InsensitiveOperatingPointError(
                f"parity signal is flat at omega_s={omega_s:g} (slope {slope:.3g}); error propagation diverges"
            )
        if abs(d1 - d2) <= STEP_RTOL * abs(d2):
            break
        h /= 2
    else:
        raise StepSizeError(
            f"parity slope disagrees between steps {2 * h:g} and {h:g}: {d1:.12g} vs {d2:.12g}",
            achieved=abs(d1 - d2) / abs(d2),
        )
    mean = signal(omega_s)
    return math.sqrt(max(1.0 - mean * mean, 0.0)) / abs(slope)


def rotation_precision(model: GhzModel, d_omega: float = 1e-5) -> float:
    """Error-propagation uncertainty ``Delta P / |d<P>/d omega_s|`` from the exact engine.

    Raises
    ------
    InsensitiveOperatingPointError
        At fringe extrema, where the slope is zero to within rounding.
    """
    n = model.n_particles
    return _error_propagation(lambda ws: _signal(_cross_amplitude(model, ws), n), model.omega_s, d_omega)


def rotation_precision_coherent_spin(model: GhzModel, d_omega: float = 1e-5) -> float:
    """Uncertainty for the unentangled product input read out particle by particle.

    Each particle gives an independent single-particle fringe, so the
    N-particle estimate is the one-particle error propagation divided by sqrt(N).
    """
    single = _error_propagation(lambda ws: _signal(_cross_amplitude(model, ws), 1), model.omega_s, d_omega)
    return single / math.sqrt(model.n_particles)


def rotation_precision_truncated(model: GhzModel) -> float:
    """Closed-form error propagation of the truncated parity moments.

    ::

        E sqrt(e- + e+ - 2 cos^2(x) / E^2)
        / (2 sqrt 2 N |ws (cos(pi/wp) - 1) cos x + (wp sin(pi/wp) - pi) sin x|)

    with ``x = 2 N ws (pi - wp sin(pi/wp))``, ``E = exp[N (wp^2 + ws^2)(1 - cos(pi/wp))]``
    and ``e+- = exp[N (wp +- ws)^2 (cos(pi/wp) - 1)]``.  N multiplies the whole
    slope, which is what differentiating the truncated ``<P>`` gives; at
    ``omega_p = 1/2`` this reduces to ``1 / (2 pi N)``.
    """
    _require_unit_constant(model)
    ws, wp, n, c, fringe, damping, e_minus, e_plus = _truncated_parts(model)
    slope = ws * c * math.cos(fringe) + (wp * math.sin(math.pi / wp) - math.pi) * math.sin(fringe)
    denom = 2 * math.sqrt(2) * n * abs(slope)
    if denom <= 1e-12:
        raise InsensitiveOperatingPointError(f"truncated parity slope vanishes at omega_s={ws:g}")
    radicand = e_minus + e_plus - 2 * damping * damping * math.cos(fringe) ** 2
    return math.sqrt(max(radicand, 0.0)) / damping / denom


def rotation_precision_ideal(n_particles: int) -> float:
    """Heisenberg-limited parity precision ``1 / (2 pi N)``."""
    if n_particles < 1:
        raise DomainError(f"N must be >= 1, got {n_particles}")
    return 1.0 / (2.0 * math.pi * n_particles)


_PULSE = np.array([[1.0, -1.0], [1.0, 1.0]]) / math.sqrt(2)  # columns: images of |up>, |down>


def parity_brute_force(model: GhzModel, n_max: int = 6) -> ParityMoments:
    """Tensor-product oracle: explicit pulse on every spin, then the parity product operator."""
    _guard(model, n_max)
    n = model.n_particles
    dim = n_max + 1
    up, down = _spin_fock_vectors(model, model.omega_s, n_max)
    branches = []
    for vec in (up, down):
        single = _PULSE @ vec.reshape(2, dim)
        out = single.ravel()
        for _ in range(n - 1):
            out = np.kron(out, single.ravel())
        branches.append(out)
    psi = (branches[0] + branches[1]) / math.sqrt(2)
    spins = np.array([1.0, -1.0]).repeat(dim)
    parity = spins
    for _ in range(n - 1):
        parity = np.kron(parity, spins)
    weights = np.abs(psi) ** 2
    mean = float(np.dot(weights, parity))
    second = float(np.dot(weights, parity * parity))
    return ParityMoments(mean, second, second - mean * mean, "brute-force")
