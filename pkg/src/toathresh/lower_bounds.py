"""Approximate lower bounds on the delay MSE from binary detection.

Both bounds integrate ``xi * P_e(xi)`` over ``[0, eps_i]``, where
``P_e(xi) = Q(sqrt(rho (1 - R(xi)) / 2))`` is the error probability of
deciding between two delays ``xi`` apart. ``b_i`` valley-fills ``P_e``
first, which only matters when ``R`` oscillates.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.integrate import quad, trapezoid

from .pulse_model import AcrModel, EstimationSetup
from .special_math import DomainError, q_function, valley_fill

__all__ = ["bound_span", "alb_z", "alb_b"]


def bound_span(setup: EstimationSetup, variant: int) -> float:
    """Upper integration limit ``eps_i`` of bound variant 1 or 2."""
    left = setup.Theta - setup.Theta1
    right = setup.Theta2 - setup.Theta
    if variant == 1:
        eps = min(left, 2.0 * right)
    elif variant == 2:
        eps = min(right, 2.0 * left)
    else:
        raise ValueError("variant must be 1 or 2")
    if eps <= 0.0:
        raise DomainError("true delay sits on the domain edge; bound span is empty")
    return eps


def _pe(a: AcrModel, rho: float, xi):
    one_minus = np.clip(1.0 - np.asarray(a.R(xi), dtype=float), 0.0, None)
    return q_function(np.sqrt(0.5 * rho * one_minus))


def _breakpoints(a: AcrModel, rho: float, eps: float) -> np.ndarray:
    # split where the integrand changes character: the main-lobe decay scale
    # and, for oscillating ACRs, every half carrier period
    pts = [0.0, eps]
    core = 1.0 / math.sqrt(rho * a.beta_s_sq)
    for k in (1.0, 4.0, 16.0):
        if k * core < eps:
            pts.append(k * core)
    if a.f_c > 0:
        half = 0.5 / a.f_c
        pts.extend(np.arange(half, eps, half))
    return np.unique(np.asarray(pts))


def alb_z(a: AcrModel, setup: EstimationSetup, rho: float, variant: int = 1,
          *, rtol: float = 1e-8) -> float:
    """Binary-detection bound ``z_i = int_0^eps xi P_e(xi) dxi`` (s^2)."""
    if not rho > 0:
        raise DomainError("SNR must be positive")
    eps = bound_span(setup, variant)
    edges = _breakpoints(a, rho, eps)
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        val, _ = quad(lambda x: x * float(_pe(a, rho, x)), lo, hi,
                      epsabs=0.0, epsrel=rtol, limit=200)
        total += val
    return total


def _filled_integral(a: AcrModel, rho: float, eps: float, n: int) -> float:
    core = min(eps, 16.0 / math.sqrt(rho * a.beta_s_sq))
    xi = np.union1d(np.linspace(0.0, eps, n), np.linspace(0.0, core, n))
    filled = valley_fill(_pe(a, rho, xi), xi).value
    return float(trapezoid(xi * filled, xi))


def alb_b(a: AcrModel, setup: EstimationSetup, rho: float, variant: int = 1,
          *, n_start: int = 4096, rtol: float = 1e-3, n_max: int = 2 ** 20) -> float:
    """Valley-filled bound ``b_i = int_0^eps xi V{P_e}(xi) dxi`` (s^2).

    Trapezoid rule on a uniform grid (plus a dense sub-grid over the main
    lobe), doubled until successive values agree to ``rtol``.
    """
    if not rho > 0:
        raise DomainError("SNR must be positive")
    eps = bound_span(setup, variant)
    n = n_start
    prev = _filled_integral(a, rho, eps, n)
    while n < n_max:
        n *= 2
        cur = _filled_integral(a, rho, eps, n)
        if abs(cur - prev) <= rtol * abs(cur):
            return cur
        prev = cur
    return prev
