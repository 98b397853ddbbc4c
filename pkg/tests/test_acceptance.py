"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -s -v`` to see the summary lines.
"""

from __future__ import annotations

import math
import time
from dataclasses import replace

import numpy as np
import pytest
from scipy.integrate import quad

from ghz_sagnac.core import DriveProfile, PhysicalParams, SpinBranch
from ghz_sagnac.errors import InsensitiveOperatingPointError
from ghz_sagnac.evolution import branch_state, coherent_amplitudes, coherent_overlap
from ghz_sagnac.fock_oracle import FockVector, IntegratorConfig, integrate, overlap
from ghz_sagnac.metrology import GhzModel, qcrb, qfi_brute_force, qfi_exact, qfi_truncated_analytic, scaling_exponent
from ghz_sagnac.parity import parity_brute_force, parity_expectation_exact, parity_moments_exact, rotation_precision
from ghz_sagnac.sweep import Axis, SweepSpec, precision_scaling, run

UNIT = PhysicalParams()
FOUR_PI2 = 4 * math.pi**2


def report(k: int, passed: bool, detail: str):
    print(f"\n{'PASS' if passed else 'FAIL'} criterion {k}: {detail}")
    assert passed, detail


def test_criterion_1_heisenberg_qfi():
    t0 = time.perf_counter()
    worst = 0.0
    for n in range(1, 21):
        model = GhzModel.constant(0.1, 0.5, n)
        target = FOUR_PI2 * n * n
        for res in (qfi_exact(model), qfi_truncated_analytic(model)):
            worst = max(worst, abs(res.value - target) / target)
    elapsed = time.perf_counter() - t0
    report(1, worst <= 1e-6 and elapsed < 1.0,
           f"F_Q = 4pi^2 N^2 for N=1..20, both engines, worst rel {worst:.2e}, {elapsed:.2f}s")


def test_criterion_2_quadratic_scaling():
    t0 = time.perf_counter()
    slopes = {}
    for wp in (0.5, 0.55, 0.6):
        pts = [(n, qfi_exact(GhzModel.constant(0.1, wp, n)).value) for n in (2, 4, 8, 16)]
        slopes[wp] = scaling_exponent(pts)
    elapsed = time.perf_counter() - t0
    ok = all(1.98 <= s <= 2.02 for s in slopes.values()) and elapsed < 5.0
    text = ", ".join(f"wp={wp}: {s:.4f}" for wp, s in slopes.items())
    report(2, ok, f"exact-engine log-log slopes {text}, {elapsed:.2f}s")


def test_criterion_3_fringe_identity():
    n = 5
    worst = max(
        abs(parity_expectation_exact(GhzModel.constant(ws, 0.5, n)) - (-1) ** n * math.cos(2 * n * math.pi * ws))
        for ws in np.linspace(0.0, 1.0, 201)
    )
    report(3, worst <= 1e-12, f"<P> = (-1)^N cos(2 N pi ws) on 201 points, worst {worst:.2e}")


def test_criterion_4_precision_saturates_bound():
    worst_h, worst_q, used = 0.0, 0.0, 0
    for n in range(1, 11):
        for ws in (0.03, 0.07, 0.13, 0.21):
            model = GhzModel.constant(ws, 0.5, n)
            try:
                d = rotation_precision(model)
            except InsensitiveOperatingPointError:
                continue
            used += 1
            worst_h = max(worst_h, abs(d - 1 / (2 * math.pi * n)) * 2 * math.pi * n)
            bound = qcrb(qfi_exact(model))
            worst_q = max(worst_q, abs(d - bound) / bound)
    ok = worst_h <= 1e-9 and worst_q <= 1e-9 and used >= 30
    report(4, ok, f"delta = 1/(2 pi N) rel {worst_h:.2e}, = QCRB rel {worst_q:.2e} over {used} points")


def test_criterion_5_precision_slopes():
    spec = SweepSpec("precision-scaling", axes=(Axis("N", 1, 64, 7, True),), omega_s=(), omega_p=(0.5,))
    meta = precision_scaling(spec).metadata
    ghz = float(meta["slope.delta_omega_ghz"])
    css = float(meta["slope.delta_omega_csstate"])
    ok = abs(ghz + 1) <= 1e-2 and abs(css + 0.5) <= 1e-2
    report(5, ok, f"precision slopes GHZ {ghz:.4f}, coherent spin {css:.4f}")


def _f0_by_quad(ws, wp, eta):
    amp = math.sqrt(0.5) * (ws + eta * wp)
    T = math.pi / wp
    re = quad(lambda t: amp * math.cos(t), 0, T, epsabs=1e-13, epsrel=1e-13)[0]
    im = quad(lambda t: amp * math.sin(t), 0, T, epsabs=1e-13, epsrel=1e-13)[0]
    return math.exp(-(re * re + im * im))


def test_criterion_6_phase_diagram():
    spec = SweepSpec("phase-diagram", axes=(Axis("omega_s", 0, 1, 101), Axis("omega_p", 0, 1, 101)), workers=4)
    t0 = time.perf_counter()
    table = run(spec)
    elapsed = time.perf_counter() - t0
    cols = table.columns
    lookup = {(round(r[0], 6), round(r[1], 6)): r for r in table.rows}
    worst = 0.0
    for ws, wp in ((0.1, 0.5), (0.1, 0.6), (0.1, 0.55), (0.37, 0.83), (0.0, 0.2), (0.9, 1.0), (0.5, 0.31)):
        row = lookup[(ws, wp)]
        for col, eta in (("F0_up", 1), ("F0_down", -1)):
            worst = max(worst, abs(row[cols.index(col)] - _f0_by_quad(ws, wp, eta)))
    up = cols.index("F0_up")
    bright = lookup[(0.1, 0.5)][up]
    off = abs(lookup[(0.1, 0.6)][up] - math.exp(-0.245))
    ok = bright == 1.0 and off <= 1e-9 and worst <= 1e-9 and elapsed < 10.0 and len(table.rows) == 101 * 101
    report(6, ok, f"F0(0.1,0.5) = {bright!r}, |F0(0.1,0.6) - e^-0.245| {off:.1e}, quad spot checks {worst:.2e}; "
                  f"101x101 grid, 4 workers, {elapsed:.2f}s")


def test_criterion_7_oracle_battery():
    # (a) Fock-basis integrator against the closed-form branch state
    worst_a = 0.0
    for ws in np.linspace(0.0, 0.2, 5):
        for wp in np.linspace(0.3, 0.7, 5):
            profile = DriveProfile(float(ws), float(wp))
            for branch in SpinBranch:
                s = branch_state(UNIT, profile, branch)
                vec = integrate(UNIT, profile, branch, IntegratorConfig(n_max=40))
                ref = FockVector(np.exp(1j * s.phase) * coherent_amplitudes(s.amplitude, 40))
                worst_a = max(worst_a, 1 - abs(overlap(ref, vec)) ** 2)
    # (b) tensor-product brute force against the exact engine
    worst_qfi, worst_par = 0.0, 0.0
    for ws in (0.0, 0.1, 0.2):
        for wp in (0.5, 0.55, 0.6):
            for n in (1, 2, 3):
                model = GhzModel.constant(ws, wp, n)
                exact = qfi_exact(model).value
                worst_qfi = max(worst_qfi, abs(qfi_brute_force(model, n_max=6).value - exact) / exact)
                worst_par = max(worst_par, abs(parity_brute_force(model, n_max=6).mean - parity_expectation_exact(model)))
    # (c) parity is an involution on the exact engine
    worst_c = max(
        abs(parity_moments_exact(GhzModel.constant(ws, wp, n)).second_moment - 1.0)
        for ws in np.linspace(0, 1, 11) for wp in (0.3, 0.5, 0.6, 0.9) for n in (1, 2, 5, 20)
    )
    # (d) coherent-state overlap identity against explicit Fock vectors
    rng = np.random.default_rng(11)
    worst_d = 0.0
    for _ in range(20):
        b1, b2 = rng.uniform(0, 1.5, 2) * np.exp(2j * math.pi * rng.uniform(size=2))
        numeric = np.vdot(coherent_amplitudes(b1, 60), coherent_amplitudes(b2, 60))
        worst_d = max(worst_d, abs(numeric - coherent_overlap(b1, b2)))
    ok = worst_a <= 1e-7 and worst_qfi <= 1e-6 and worst_par <= 1e-6 and worst_c == 0.0 and worst_d <= 1e-10
    report(7, ok, f"(a) 1-fidelity {worst_a:.1e} (b) QFI rel {worst_qfi:.1e}, parity {worst_par:.1e} "
                  f"(c) |<P^2>-1| {worst_c:.1e} (d) overlap {worst_d:.1e}")


def test_criterion_8_worker_determinism():
    spec = SweepSpec("qfi-scaling", axes=(Axis("N", 2, 16, 4, True),), omega_p=(0.5, 0.55, 0.6))
    one = run(spec).body()
    eight = run(replace(spec, workers=8)).body()
    report(8, one == eight, f"qfi-scaling body identical for workers=1 and workers=8 ({len(one)} chars)")
