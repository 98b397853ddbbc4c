"""
Invariant and oracle-equivalence battery behind ``ghz-sagnac selftest``.

Each check compares an engine against an independent computation (scipy
quadrature, the Fock-basis integrator, the tensor-product brute force) or
against a closed-form identity, and reports the worst deviation seen.
"""

from __future__ import annotations

import math
import sys
import time
from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import quad

from .core import DriveProfile, PhysicalParams, SpinBranch
from .errors import InsensitiveOperatingPointError
from .evolution import branch_state, coherent_amplitudes, coherent_overlap, ground_fidelity
from .fock_oracle import FockVector, IntegratorConfig, integrate, overlap
from .metrology import GhzModel, qcrb, qfi_brute_force, qfi_coherent_spin, qfi_exact, qfi_truncated_analytic
from .parity import parity_brute_force, parity_expectation_exact, parity_moments_exact, rotation_precision
from .sweep import Axis, SweepSpec, run

__all__ = ["CheckResult", "run_selftest", "print_report"]

UNIT = PhysicalParams()


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    worst: float
    tolerance: float
    seconds: float = 0.0


def _rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


def _heisenberg_qfi():
    worst = 0.0
    for n in range(1, 21):
        model = GhzModel.constant(0.1, 0.5, n)
        target = 4 * math.pi**2 * n * n
        worst = max(worst, _rel(qfi_exact(model).value, target), _rel(qfi_truncated_analytic(model).value, target))
    return worst, 1e-6


def _coherent_spin_qfi():
    worst = max(_rel(qfi_coherent_spin(GhzModel.constant(0.1, 0.5, n)).value, 4 * math.pi**2 * n) for n in range(1, 21))
    return worst, 1e-6


def _parity_fringe():
    n = 5
    worst = 0.0
    for ws in np.linspace(0.0, 1.0, 201):
        p = parity_expectation_exact(GhzModel.constant(ws, 0.5, n))
        worst = max(worst, abs(p - (-1) ** n * math.cos(2 * n * math.pi * ws)))
    return worst, 1e-12


def _heisenberg_precision():
    worst = 0.0
    for n in range(1, 11):
        for ws in (0.03, 0.07, 0.13):
            model = GhzModel.constant(ws, 0.5, n)
            try:
                d = rotation_precision(model)
            except InsensitiveOperatingPointError:
                continue
            worst = max(worst, _rel(d, 1 / (2 * math.pi * n)), _rel(d, qcrb(qfi_exact(model))))
    return worst, 1e-9


def _alpha_by_quad(ws, wp, eta):
    T = math.pi / wp
    amp = math.sqrt(0.5) * (ws + eta * wp)
    re = quad(lambda t: amp * math.cos(t), 0, T, epsabs=1e-13, epsrel=1e-13)[0]
    im = quad(lambda t: amp * math.sin(t), 0, T, epsabs=1e-13, epsrel=1e-13)[0]
    return complex(re, im)


def _phase_diagram_spots():
    worst = abs(ground_fidelity(branch_state(UNIT, DriveProfile.constant(0.1, 0.5), SpinBranch.UP)) - 1.0)
    for ws, wp in ((0.1, 0.6), (0.1, 0.55), (0.3, 0.27), (0.0, 0.9)):
        for branch in SpinBranch:
            f0 = ground_fidelity(branch_state(UNIT, DriveProfile.constant(ws, wp), branch))
            worst = max(worst, abs(f0 - math.exp(-abs(_alpha_by_quad(ws, wp, branch.eta)) ** 2)))
    return worst, 1e-9


def _fock_oracle(n_max, dt):
    worst = 0.0
    for ws in np.linspace(0.0, 0.4, 3):
        for wp in (0.5, 0.6, 0.75):
            profile = DriveProfile.constant(ws, wp)
            for branch in SpinBranch:
                state = branch_state(UNIT, profile, branch)
                vec = integrate(UNIT, profile, branch, IntegratorConfig(n_max=n_max, dt=dt))
                ref = FockVector(np.exp(1j * state.phase) * coherent_amplitudes(state.amplitude, n_max))
                worst = max(worst, 1.0 - abs(overlap(ref, vec)) ** 2)
    return worst, 1e-7


def _brute_force():
    worst = 0.0
    for ws in (0.0, 0.1, 0.2):
        for wp in (0.5, 0.55, 0.6):
            for n in (1, 2, 3):
                model = GhzModel.constant(ws, wp, n)
                worst = max(worst, _rel(qfi_brute_force(model).value, qfi_exact(model).value))
                worst = max(worst, abs(parity_brute_force(model).mean - parity_expectation_exact(model)))
    return worst, 1e-6


def _involution():
    worst = 0.0
    for ws in np.linspace(0, 1, 11):
        for wp in (0.3, 0.5, 0.6, 0.9):
            for n in (1, 2, 5, 20):
                m = parity_moments_exact(GhzModel.constant(ws, wp, n))
                worst = max(worst, abs(m.second_moment - 1.0), abs(m.variance - (1.0 - m.mean**2)))
    return worst, 0.0


def _coherent_overlap(n_max=60):
    rng = np.random.default_rng(20240)
    worst = 0.0
    for _ in range(20):
        b1, b2 = rng.normal(size=2) + 1j * rng.normal(size=2)
        numeric = np.vdot(coherent_amplitudes(b1, n_max), coherent_amplitudes(b2, n_max))
        worst = max(worst, abs(numeric - coherent_overlap(b1, b2)))
    return worst, 1e-10


def _determinism(workers):
    spec = SweepSpec("qfi-scaling", axes=(Axis("N", 2, 16, 4, True),), omega_p=(0.5, 0.55, 0.6))
    one = run(spec).body()
    many = run(replace(spec, workers=workers)).body()
    return float(one != many), 0.0


def run_selftest(n_max: int = 40, dt: float = None, workers: int = 2) -> list:
    """Run every check; never raises for a failed check, only reports it."""
    checks = [
        ("heisenberg QFI 4pi^2 N^2 (N=1..20)", _heisenberg_qfi),
        ("coherent-spin QFI 4pi^2 N", _coherent_spin_qfi),
        ("parity fringe identity, wp=0.5", _parity_fringe),
        ("precision 1/(2 pi N) = QCRB", _heisenberg_precision),
        ("ground fidelity vs scipy quad", _phase_diagram_spots),
        ("Fock integrator vs closed form", lambda: _fock_oracle(n_max, dt)),
        ("brute-force QFI and parity, N<=3", _brute_force),
        ("exact <P^2> = 1", _involution),
        ("coherent overlap identity", _coherent_overlap),
        ("table body independent of workers", lambda: _determinism(workers)),
    ]
    results = []
    for name, fn in checks:
        t0 = time.perf_counter()
        try:
            worst, tol = fn()
            passed = worst <= tol
        except Exception as exc:  # a crash is a failed check, reported not raised
            worst, tol, passed = float("nan"), float("nan"), False
            name = f"{name} ({type(exc).__name__}: {exc})"
        results.append(CheckResult(name, passed, worst, tol, time.perf_counter() - t0))
    return results


def print_report(results: list, stream=None):
    out = stream or sys.stdout
    width = max(len(r.name) for r in results)
    print(f"{'check':<{width}}  result  {'worst':>10}  {'tol':>8}  {'time':>6}", file=out)
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"{r.name:<{width}}  {status:<6}  {r.worst:10.3g}  {r.tolerance:8.1g}  {r.seconds:5.2f}s", file=out)
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed}/{len(results)} checks passed", file=out)
