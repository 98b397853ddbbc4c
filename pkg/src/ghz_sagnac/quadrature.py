"""Adaptive composite Gauss-Legendre quadrature with interval bisection."""

from __future__ import annotations

import numpy as np

from .errors import QuadratureError

_ORDER = 20
_NODES, _WEIGHTS = np.polynomial.legendre.leggauss(_ORDER)


def _panel(f, a, b):
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    return half * np.dot(_WEIGHTS, f(mid + half * _NODES))


def gauss_legendre(f, a: float, b: float, tol: float = 1e-12, max_depth: int = 30):
    """Integrate a vectorised ``f`` over ``[a, b]`` to absolute tolerance ``tol``.

    A panel is accepted when its 20-point estimate agrees with the sum over its
    two halves; the tolerance is shared between panels in proportion to width.
    Real and complex integrands are both supported.

    Raises
    ------
    QuadratureError
        If some panel is still unresolved after ``max_depth`` bisections.
        ``achieved`` holds the summed error estimate.
    """
    if b == a:
        return 0.0 * _panel(f, a, a + 1.0)
    width = b - a
    total = 0.0
    err_total = 0.0
    failed = False
    stack = [(a, b, _panel(f, a, b), 0)]
    while stack:
        lo, hi, whole, depth = stack.pop()
        mid = 0.5 * (lo + hi)
        left = _panel(f, lo, mid)
        right = _panel(f, mid, hi)
        err = abs(left + right - whole)
        if err <= tol * (hi - lo) / width or err <= 1e-15 * abs(left + right):
            total += left + right
            err_total += err
        elif depth >= max_depth:
            total += left + right
            err_total += err
            failed = True
        else:
            stack.append((mid, hi, right, depth + 1))
            stack.append((lo, mid, left, depth + 1))
    if failed:
        raise QuadratureError(
            f"quadrature did not reach tolerance {tol:g} on [{a:g}, {b:g}]", achieved=err_total
        )
    return total


def integrate_piecewise(f, breakpoints, tol: float = 1e-12):
    """Sum :func:`gauss_legendre` over consecutive ``breakpoints`` (kinks of ``f``)."""
    span = breakpoints[-1] - breakpoints[0]
    if span <= 0:
        return 0.0
    total = 0.0
    for lo, hi in zip(breakpoints, breakpoints[1:]):
        total = total + gauss_legendre(f, lo, hi, tol * (hi - lo) / span)
    return total
